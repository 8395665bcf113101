#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace nlz {

enum class Precision : std::uint8_t { F32 = 0, F64 = 1 };

inline std::size_t bytes_of(Precision p) { return p == Precision::F32 ? 4 : 8; }
inline const char* to_string(Precision p) { return p == Precision::F32 ? "f32" : "f64"; }
Precision parse_precision(const std::string& s);

// Round a working value to the storage precision.
inline double round_to(Precision p, double x) {
    return p == Precision::F32 ? static_cast<double>(static_cast<float>(x)) : x;
}

using Dims = std::array<std::size_t, 3>;

inline std::size_t num_points(const Dims& d) { return d[0] * d[1] * d[2]; }

// One named 3D field. Values are held as doubles in row-major order (last
// axis fastest); for f32 fields every value is exactly representable as float.
struct ScalarField {
    std::string name;
    Dims dims{0, 0, 0};
    Precision precision = Precision::F32;
    std::vector<double> values;

    ScalarField() = default;
    ScalarField(std::string name_, Dims dims_, Precision precision_, std::vector<double> values_);

    std::size_t size() const { return values.size(); }
    std::size_t index(std::size_t i, std::size_t j, std::size_t k) const {
        return (i * dims[1] + j) * dims[2] + k;
    }
    double at(std::size_t i, std::size_t j, std::size_t k) const { return values[index(i, j, k)]; }
};

// Fields sharing dims and precision, names unique.
class FieldSet {
public:
    FieldSet() = default;
    explicit FieldSet(std::vector<ScalarField> fields);

    void add(ScalarField field);
    const std::vector<ScalarField>& fields() const { return fields_; }
    const ScalarField& get(const std::string& name) const;
    bool contains(const std::string& name) const;
    std::size_t size() const { return fields_.size(); }
    bool empty() const { return fields_.empty(); }
    const Dims& dims() const;
    Precision precision() const;

private:
    std::vector<ScalarField> fields_;
};

enum class RawOrder { Row, Column };

ScalarField load_raw(const std::filesystem::path& path, const Dims& dims, Precision precision,
                     RawOrder order = RawOrder::Row, std::string name = {});
void store_raw(const std::filesystem::path& path, const ScalarField& field);

// Raw little-endian encoding of a value array at the given precision.
std::vector<std::uint8_t> encode_raw(std::span<const double> values, Precision precision);
std::vector<double> decode_raw(std::span<const std::uint8_t> bytes, Precision precision);

// Verifies every value is finite; throws NonFinite naming the first bad index.
void check_finite(std::span<const double> values);

struct Slice2D {
    std::size_t h = 0;
    std::size_t w = 0;
    std::vector<double> values;

    double& operator()(std::size_t r, std::size_t c) { return values[r * w + c]; }
    double operator()(std::size_t r, std::size_t c) const { return values[r * w + c]; }
};

// All 2D sections of a field perpendicular to `axis`, stored contiguously.
struct SliceStack {
    int axis = 0;
    std::size_t count = 0;
    std::size_t h = 0;
    std::size_t w = 0;
    std::vector<double> values;  // count * h * w

    Slice2D slice(std::size_t s) const;
    std::span<const double> slice_span(std::size_t s) const {
        return {values.data() + s * h * w, h * w};
    }
};

SliceStack slice_stack(const ScalarField& field, int axis);
std::vector<double> reassemble(const SliceStack& stack, const Dims& dims);

struct NormParams {
    double lo = 0.0;
    double hi = 1.0;

    static NormParams of(std::span<const double> values);
    double forward(double x) const { return hi > lo ? (x - lo) / (hi - lo) : 0.5; }
    double inverse(double y) const { return hi > lo ? lo + y * (hi - lo) : lo; }
    bool operator==(const NormParams&) const = default;
};

std::vector<double> minmax_normalize(std::span<const double> values, const NormParams& params);
std::vector<double> minmax_denormalize(std::span<const double> values, const NormParams& params);

struct CropBox {
    std::size_t h = 0;
    std::size_t w = 0;
};

struct PaddedSlice {
    Slice2D slice;
    CropBox crop;
    bool edge_replicated = false;  // reflection impossible on a size-1 axis
};

PaddedSlice pad_reflect(const Slice2D& slice, std::size_t multiple);
Slice2D crop(const Slice2D& padded, const CropBox& box);
std::size_t padded_extent(std::size_t n, std::size_t multiple);

struct SynthSpec {
    Dims dims{64, 64, 64};
    int num_aux = 2;
    double alpha = 1.0;
    double beta = 0.5;
    double gamma = 0.3;
    int smoothing_radius = 4;
    int smoothing_passes = 3;  // repeated box passes approach a Gaussian kernel
    Precision precision = Precision::F32;
};

// Aux fields are box-smoothed unit Gaussian noise (standardized); the target is
// alpha*S + beta*S^2 + gamma*N with S the standardized sum of the aux fields
// and N independently smoothed noise. Field names: aux0.., target.
FieldSet gen_synthetic(const SynthSpec& spec, std::uint64_t seed);

// 8-bit binary PGM of one slice, min-max scaled (optionally log scaled).
void write_pgm(const std::filesystem::path& path, const Slice2D& slice, bool log_scale = false);

double pearson_correlation(std::span<const double> a, std::span<const double> b);

} // namespace nlz
