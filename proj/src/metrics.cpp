#include "nlz/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

#include "nlz/error.hpp"

namespace nlz {

std::string Psnr::to_string() const {
    if (infinite) return "inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", db);
    return buf;
}

namespace {

void require_same(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.empty()) throw Error(ErrorKind::ShapeMismatch, "arrays must be non-empty and equal in size");
}

} // namespace

double mse(std::span<const double> x, std::span<const double> y) {
    require_same(x, y);
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - y[i]) * (x[i] - y[i]);
    return s / static_cast<double>(x.size());
}

double value_range(std::span<const double> x) {
    if (x.empty()) return 0.0;
    auto [lo, hi] = std::minmax_element(x.begin(), x.end());
    return *hi - *lo;
}

double max_abs_error(std::span<const double> x, std::span<const double> y) {
    require_same(x, y);
    double m = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) m = std::max(m, std::fabs(x[i] - y[i]));
    return m;
}

Psnr psnr(std::span<const double> original, std::span<const double> reconstructed) {
    require_same(original, reconstructed);
    const double err = mse(original, reconstructed);
    if (err == 0.0) return Psnr::inf();
    const double vr = value_range(original);
    if (vr == 0.0) throw Error(ErrorKind::DegenerateRange, "original has zero value range");
    return {20.0 * std::log10(vr) - 10.0 * std::log10(err), false};
}

double compression_ratio(double original_bits, double container_bits) {
    if (!(container_bits > 0.0)) throw Error(ErrorKind::ConfigError, "container size must be > 0");
    return original_bits / container_bits;
}

double bit_rate(double payload_bits, double overhead_bits, std::size_t num_points) {
    if (num_points == 0) throw Error(ErrorKind::ConfigError, "number of points must be > 0");
    return (payload_bits + overhead_bits) / static_cast<double>(num_points);
}

double first_order_entropy(std::span<const std::uint64_t> counts) {
    double total = 0.0;
    for (auto c : counts) total += static_cast<double>(c);
    if (total <= 0.0) throw Error(ErrorKind::ConfigError, "entropy needs at least one positive count");
    double h = 0.0;
    for (auto c : counts) {
        if (c == 0) continue;
        const double p = static_cast<double>(c) / total;
        h -= p * std::log2(p);
    }
    return h;
}

double symbol_entropy(std::span<const std::uint32_t> symbols) {
    std::map<std::uint32_t, std::uint64_t> freq;
    for (auto s : symbols) ++freq[s];
    std::vector<std::uint64_t> counts;
    counts.reserve(freq.size());
    for (auto& [s, c] : freq) counts.push_back(c);
    return first_order_entropy(counts);
}

std::uint64_t ErrorHistogram::total() const {
    std::uint64_t t = underflow + overflow;
    for (auto c : counts) t += c;
    return t;
}

std::size_t ErrorHistogram::bin_of(double e) const {
    const double width = (hi - lo) / static_cast<double>(counts.size());
    auto b = static_cast<std::size_t>((e - lo) / width);
    return std::min(b, counts.size() - 1);
}

ErrorHistogram error_histogram(std::span<const double> original, std::span<const double> reconstructed,
                               std::size_t bins, double lo, double hi) {
    require_same(original, reconstructed);
    if (bins < 1) throw Error(ErrorKind::ConfigError, "histogram needs at least one bin");
    if (!(hi > lo)) throw Error(ErrorKind::ConfigError, "histogram range must satisfy hi > lo");
    ErrorHistogram h;
    h.lo = lo;
    h.hi = hi;
    h.counts.assign(bins, 0);
    for (std::size_t i = 0; i < original.size(); ++i) {
        const double e = reconstructed[i] - original[i];
        if (e < lo) ++h.underflow;
        else if (e >= hi) ++h.overflow;
        else ++h.counts[h.bin_of(e)];
    }
    return h;
}

void write_rd_csv(std::ostream& os, std::span<const RDPoint> points) {
    os << kRdCsvHeader << '\n';
    char buf[256];
    for (const auto& p : points) {
        std::snprintf(buf, sizeof buf, "%s,%.6g,%.6f,%s,%.6f,%llu,%llu,%llu\n", p.label.c_str(), p.rel_bound, p.bit_rate,
                      p.psnr.to_string().c_str(), p.olr_percent, static_cast<unsigned long long>(p.model_bits),
                      static_cast<unsigned long long>(p.coords_bits), static_cast<unsigned long long>(p.payload_bits));
        os << buf;
    }
}

double relative_reduction_at_equal_psnr(std::span<const RDPoint> baseline, const RDPoint& enhanced) {
    if (baseline.size() < 2) throw Error(ErrorKind::Extrapolation, "baseline curve needs at least two points");
    if (enhanced.psnr.infinite) throw Error(ErrorKind::Extrapolation, "enhanced PSNR is infinite");
    std::vector<RDPoint> pts;
    for (const auto& p : baseline)
        if (!p.psnr.infinite) pts.push_back(p);
    std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a.psnr.db < b.psnr.db; });
    const double target = enhanced.psnr.db;
    if (pts.size() < 2 || target < pts.front().psnr.db || target > pts.back().psnr.db)
        throw Error(ErrorKind::Extrapolation, "enhanced PSNR lies outside the baseline curve");
    for (std::size_t i = 1; i < pts.size(); ++i) {
        const auto& a = pts[i - 1];
        const auto& b = pts[i];
        if (target > b.psnr.db) continue;
        const double span = b.psnr.db - a.psnr.db;
        const double t = span > 0.0 ? (target - a.psnr.db) / span : 0.0;
        const double base_rate = a.bit_rate + t * (b.bit_rate - a.bit_rate);
        return 100.0 * (1.0 - enhanced.bit_rate / base_rate);
    }
    throw Error(ErrorKind::Extrapolation, "enhanced PSNR lies outside the baseline curve");
}

} // namespace nlz
