#include "nlz/error_control.hpp"

#include <bit>
#include <cmath>

#include "nlz/error.hpp"

namespace nlz {

const char* to_string(BoundMode mode) { return mode == BoundMode::Strict1x ? "strict" : "regulated"; }

BoundMode parse_bound_mode(const std::string& s) {
    if (s == "strict") return BoundMode::Strict1x;
    if (s == "regulated") return BoundMode::Regulated2x;
    throw Error(ErrorKind::ConfigError, "bound mode must be 'strict' or 'regulated', got '" + s + "'");
}

void OutlierSet::validate() const {
    const std::uint64_t n = num_points(dims);
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] >= n) throw Error(ErrorKind::IndexOutOfRange, "outlier index beyond field size");
        if (i > 0 && indices[i] <= indices[i - 1])
            throw Error(ErrorKind::IndexOutOfRange, "outlier indices must be strictly increasing");
    }
}

OutlierSet find_outliers(std::span<const double> original, std::span<const double> enhanced, const Dims& dims,
                         double threshold) {
    if (original.size() != enhanced.size() || original.size() != num_points(dims))
        throw Error(ErrorKind::ShapeMismatch, "original and enhanced fields differ in shape");
    OutlierSet out;
    out.dims = dims;
    for (std::size_t i = 0; i < original.size(); ++i)
        if (std::fabs(original[i] - enhanced[i]) > threshold) out.indices.push_back(i);
    return out;
}

std::vector<double> apply_replacement(std::span<const double> enhanced, std::span<const double> decompressed,
                                      const OutlierSet& outliers) {
    if (enhanced.size() != decompressed.size())
        throw Error(ErrorKind::ShapeMismatch, "enhanced and decompressed fields differ in shape");
    std::vector<double> out(enhanced.begin(), enhanced.end());
    for (auto idx : outliers.indices) {
        if (idx >= out.size()) throw Error(ErrorKind::IndexOutOfRange, "outlier index " + std::to_string(idx));
        out[idx] = decompressed[idx];
    }
    return out;
}

double avg_bit(const Dims& dims) {
    double s = 0.0;
    for (auto d : dims) {
        if (d == 0) throw Error(ErrorKind::ConfigError, "dims must be positive");
        s += std::log2(static_cast<double>(d));
    }
    return s;
}

unsigned index_bit_width(const Dims& dims) {
    const std::uint64_t n = num_points(dims);
    if (n <= 2) return 1;
    return static_cast<unsigned>(std::bit_width(n - 1));
}

CoordsOverhead coords_overhead_bits(std::size_t n_outliers, const Dims& dims) {
    CoordsOverhead o;
    o.theoretical_bits = static_cast<double>(n_outliers) * avg_bit(dims);
    o.packed_bits = static_cast<std::uint64_t>(n_outliers) * index_bit_width(dims) + kCoordBlobHeaderBytes * 8;
    return o;
}

Bytes pack_coords(const OutlierSet& outliers) {
    outliers.validate();
    const unsigned width = index_bit_width(outliers.dims);
    ByteWriter w;
    w.put<std::uint32_t>(static_cast<std::uint32_t>(outliers.size()));
    w.put<std::uint8_t>(static_cast<std::uint8_t>(width));
    BitWriter bw;
    for (auto idx : outliers.indices) bw.put(idx, width);
    w.put_bytes(bw.take());
    return w.take();
}

OutlierSet unpack_coords(std::span<const std::uint8_t> bytes, const Dims& dims) {
    ByteReader r(bytes, ErrorKind::CorruptBlob);
    const auto count = r.get<std::uint32_t>();
    const auto width = r.get<std::uint8_t>();
    if (width != index_bit_width(dims)) throw Error(ErrorKind::CorruptBlob, "index width does not match dims");
    const std::uint64_t nbits = static_cast<std::uint64_t>(count) * width;
    if (r.remaining() != (nbits + 7) / 8) throw Error(ErrorKind::CorruptBlob, "coordinate payload length mismatch");
    BitReader br(r.get_bytes(r.remaining()), nbits, ErrorKind::CorruptBlob);
    OutlierSet out;
    out.dims = dims;
    out.indices.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) out.indices.push_back(br.get(width));
    try {
        out.validate();
    } catch (const Error& e) {
        throw Error(ErrorKind::CorruptBlob, e.what());
    }
    return out;
}

double olr_percent(std::size_t n_outliers, std::size_t total) {
    if (total == 0) throw Error(ErrorKind::ConfigError, "total point count must be > 0");
    return 100.0 * static_cast<double>(n_outliers) / static_cast<double>(total);
}

} // namespace nlz
