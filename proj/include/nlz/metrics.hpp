#pragma once

#include <cstdint>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace nlz {

// PSNR in dB; a zero-MSE comparison yields the `infinite` sentinel rather
// than a floating-point infinity.
struct Psnr {
    double db = 0.0;
    bool infinite = false;

    static Psnr inf() { return {0.0, true}; }
    double value() const { return infinite ? std::numeric_limits<double>::infinity() : db; }
    std::string to_string() const;
};

double mse(std::span<const double> x, std::span<const double> y);
double value_range(std::span<const double> x);
double max_abs_error(std::span<const double> x, std::span<const double> y);

// 20 log10(vrange(X)) - 10 log10(mse(X, X')), with vrange taken on the original.
// Throws DegenerateRange on a constant original, ShapeMismatch on size mismatch.
Psnr psnr(std::span<const double> original, std::span<const double> reconstructed);

double compression_ratio(double original_bits, double container_bits);
double bit_rate(double payload_bits, double overhead_bits, std::size_t num_points);

// -sum p log2 p over the non-zero counts.
double first_order_entropy(std::span<const std::uint64_t> counts);
// Entropy of a symbol stream (e.g. quantization codes).
double symbol_entropy(std::span<const std::uint32_t> symbols);

// Histogram of (reconstructed - original) over [lo, hi) in `bins` equal bins,
// plus an underflow and an overflow bin.
struct ErrorHistogram {
    double lo = 0.0;
    double hi = 0.0;
    std::vector<std::uint64_t> counts;
    std::uint64_t underflow = 0;
    std::uint64_t overflow = 0;

    std::uint64_t total() const;
    std::size_t bin_of(double error) const;  // only for in-range errors
};

ErrorHistogram error_histogram(std::span<const double> original, std::span<const double> reconstructed,
                               std::size_t bins, double lo, double hi);

struct RDPoint {
    std::string label;  // baseline | sflz | neurlz
    double rel_bound = 0.0;
    double bit_rate = 0.0;
    Psnr psnr;
    double olr_percent = 0.0;
    std::uint64_t model_bits = 0;
    std::uint64_t coords_bits = 0;
    std::uint64_t payload_bits = 0;
};

inline constexpr const char* kRdCsvHeader = "label,rel_bound,bit_rate,psnr,olr_percent,model_bits,coords_bits,payload_bits";
void write_rd_csv(std::ostream& os, std::span<const RDPoint> points);

// Bit-rate reduction (%) of `enhanced` relative to the baseline curve at the
// same PSNR, interpolating bit rate linearly in PSNR between the bracketing
// baseline points. Throws Extrapolation when the PSNR is outside the curve.
double relative_reduction_at_equal_psnr(std::span<const RDPoint> baseline, const RDPoint& enhanced);

} // namespace nlz
