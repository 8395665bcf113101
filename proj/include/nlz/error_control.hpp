#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "nlz/bytes.hpp"
#include "nlz/field.hpp"

namespace nlz {

enum class BoundMode : std::uint8_t {
    Strict1x = 0,     // outlier coordinates stored, final error <= abs
    Regulated2x = 1,  // no coordinates, final error <= 2 * abs
};

const char* to_string(BoundMode mode);
BoundMode parse_bound_mode(const std::string& s);

struct OutlierSet {
    std::vector<std::uint64_t> indices;  // strictly increasing linear indices
    Dims dims{0, 0, 0};

    std::size_t size() const { return indices.size(); }
    bool empty() const { return indices.empty(); }
    void validate() const;
};

// Points with |original - enhanced| > threshold (boundary equality is in bound).
OutlierSet find_outliers(std::span<const double> original, std::span<const double> enhanced, const Dims& dims,
                         double threshold);

// enhanced with every outlier replaced by its decompressed value.
std::vector<double> apply_replacement(std::span<const double> enhanced, std::span<const double> decompressed,
                                      const OutlierSet& outliers);

// Theoretical bits to address one point: sum of log2(dim_i).
double avg_bit(const Dims& dims);

// Width of one packed linear index: ceil(log2(total points)), at least 1.
unsigned index_bit_width(const Dims& dims);

inline constexpr std::size_t kCoordBlobHeaderBytes = 5;  // u32 count + u8 width

struct CoordsOverhead {
    double theoretical_bits = 0.0;  // n * avg_bit(dims)
    std::uint64_t packed_bits = 0;  // n * index width + blob header
};

CoordsOverhead coords_overhead_bits(std::size_t n_outliers, const Dims& dims);

// Coordinate blob: u32 count | u8 index width | MSB-first packed indices,
// zero-padded to a byte boundary.
Bytes pack_coords(const OutlierSet& outliers);
OutlierSet unpack_coords(std::span<const std::uint8_t> bytes, const Dims& dims);

double olr_percent(std::size_t n_outliers, std::size_t total);

} // namespace nlz
