#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "nlz/bytes.hpp"
#include "nlz/field.hpp"
#include "nlz/huffman.hpp"

namespace nlz {

inline constexpr std::uint32_t kDefaultRadius = 1u << 15;

// Pointwise bound derived from a value-range-relative bound.
struct ErrorBound {
    double rel = 0.0;
    double abs = 0.0;
    double vrange = 0.0;
};

// abs = rel * vrange; a constant field (vrange 0) falls back to abs = rel.
ErrorBound abs_bound(double rel, std::span<const double> values);
inline ErrorBound abs_bound(double rel, const ScalarField& field) { return abs_bound(rel, field.values); }

// First-order 3D Lorenzo prediction from already-reconstructed neighbours;
// neighbours outside the domain contribute 0.
double lorenzo_predict(std::span<const double> recon, const Dims& dims, std::size_t i, std::size_t j,
                       std::size_t k);

struct Quantized {
    std::uint32_t code = 0;  // 0 marks an unpredictable point
    double recon = 0.0;
    bool predictable() const { return code != 0; }
};

// Linear quantization of the prediction error into bins of width 2*abs.
// Codes are offset by center = radius + 1, so valid codes lie in [1, 2*radius+1].
// The reconstruction is rounded to `precision` and re-checked against abs.
Quantized quantize(double pred, double actual, double abs, std::uint32_t radius,
                   Precision precision = Precision::F64);

inline std::uint32_t quant_center(std::uint32_t radius) { return radius + 1; }

struct QuantizedBlock {
    std::vector<std::uint32_t> codes;
    std::vector<double> unpredictables;
    std::uint32_t radius = kDefaultRadius;
};

struct CompressedPayload {
    Dims dims{0, 0, 0};
    Precision precision = Precision::F32;
    std::uint32_t radius = kDefaultRadius;
    double rel = 0.0;
    double abs = 0.0;
    HuffmanTable table;
    Bytes stream;
    std::uint64_t stream_bits = 0;
    std::vector<double> unpredictables;

    Bytes serialize() const;
    static CompressedPayload deserialize(std::span<const std::uint8_t> bytes);
};

struct CompressResult {
    CompressedPayload payload;
    ScalarField decompressed;
    QuantizedBlock quantized;
};

CompressResult compress_block(const ScalarField& field, const ErrorBound& bound,
                              std::uint32_t radius = kDefaultRadius);
ScalarField decompress_block(const CompressedPayload& payload, std::string name = {});
ScalarField decompress_block(std::span<const std::uint8_t> payload_bytes, std::string name = {});

} // namespace nlz
