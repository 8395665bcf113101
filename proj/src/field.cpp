#include "nlz/field.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "nlz/bytes.hpp"
#include "nlz/error.hpp"
#include "nlz/rng.hpp"

namespace nlz {

Precision parse_precision(const std::string& s) {
    if (s == "f32" || s == "float" || s == "float32") return Precision::F32;
    if (s == "f64" || s == "double" || s == "float64") return Precision::F64;
    throw Error(ErrorKind::ConfigError, "unknown precision '" + s + "'");
}

ScalarField::ScalarField(std::string name_, Dims dims_, Precision precision_, std::vector<double> values_)
    : name(std::move(name_)), dims(dims_), precision(precision_), values(std::move(values_)) {
    if (dims[0] == 0 || dims[1] == 0 || dims[2] == 0)
        throw Error(ErrorKind::ShapeMismatch, "field dims must be positive");
    if (values.size() != num_points(dims))
        throw Error(ErrorKind::SizeMismatch, "field '" + name + "' has " + std::to_string(values.size()) +
                                                 " values, dims imply " + std::to_string(num_points(dims)));
}

FieldSet::FieldSet(std::vector<ScalarField> fields) {
    for (auto& f : fields) add(std::move(f));
}

void FieldSet::add(ScalarField field) {
    if (!fields_.empty()) {
        if (field.dims != fields_.front().dims)
            throw Error(ErrorKind::ShapeMismatch, "field '" + field.name + "' dims differ from the set");
        if (field.precision != fields_.front().precision)
            throw Error(ErrorKind::ConfigError, "field '" + field.name + "' precision differs from the set");
    }
    if (contains(field.name)) throw Error(ErrorKind::ConfigError, "duplicate field name '" + field.name + "'");
    fields_.push_back(std::move(field));
}

const ScalarField& FieldSet::get(const std::string& name) const {
    for (const auto& f : fields_)
        if (f.name == name) return f;
    throw Error(ErrorKind::ConfigError, "no field named '" + name + "'");
}

bool FieldSet::contains(const std::string& name) const {
    return std::any_of(fields_.begin(), fields_.end(), [&](const auto& f) { return f.name == name; });
}

const Dims& FieldSet::dims() const {
    if (fields_.empty()) throw Error(ErrorKind::ConfigError, "empty field set");
    return fields_.front().dims;
}

Precision FieldSet::precision() const {
    if (fields_.empty()) throw Error(ErrorKind::ConfigError, "empty field set");
    return fields_.front().precision;
}

void check_finite(std::span<const double> values) {
    for (std::size_t i = 0; i < values.size(); ++i)
        if (!std::isfinite(values[i]))
            throw Error(ErrorKind::NonFinite, "non-finite value at index " + std::to_string(i));
}

std::vector<std::uint8_t> encode_raw(std::span<const double> values, Precision precision) {
    ByteWriter w;
    if (precision == Precision::F32) {
        for (double v : values) w.put<float>(static_cast<float>(v));
    } else {
        for (double v : values) w.put<double>(v);
    }
    return w.take();
}

std::vector<double> decode_raw(std::span<const std::uint8_t> bytes, Precision precision) {
    const std::size_t width = bytes_of(precision);
    if (bytes.size() % width != 0) throw Error(ErrorKind::SizeMismatch, "raw byte count not a multiple of value width");
    std::vector<double> out(bytes.size() / width);
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (precision == Precision::F32) {
            float f;
            std::memcpy(&f, bytes.data() + i * 4, 4);
            out[i] = f;
        } else {
            std::memcpy(&out[i], bytes.data() + i * 8, 8);
        }
    }
    return out;
}

ScalarField load_raw(const std::filesystem::path& path, const Dims& dims, Precision precision, RawOrder order,
                     std::string name) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const std::size_t expected = num_points(dims) * bytes_of(precision);
    if (bytes.size() != expected)
        throw Error(ErrorKind::SizeMismatch, path.string() + " has " + std::to_string(bytes.size()) +
                                                 " bytes, expected " + std::to_string(expected));
    auto raw = decode_raw(bytes, precision);
    check_finite(raw);

    std::vector<double> values;
    if (order == RawOrder::Row) {
        values = std::move(raw);
    } else {
        // Column order: the first axis varies fastest in the file.
        values.resize(raw.size());
        std::size_t n = 0;
        for (std::size_t k = 0; k < dims[2]; ++k)
            for (std::size_t j = 0; j < dims[1]; ++j)
                for (std::size_t i = 0; i < dims[0]; ++i) values[(i * dims[1] + j) * dims[2] + k] = raw[n++];
    }
    if (name.empty()) name = path.stem().string();
    return ScalarField(std::move(name), dims, precision, std::move(values));
}

void store_raw(const std::filesystem::path& path, const ScalarField& field) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
    auto bytes = encode_raw(field.values, field.precision);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorKind::IoError, "short write to " + path.string());
}

namespace {

std::array<std::size_t, 2> slice_shape(const Dims& d, int axis) {
    switch (axis) {
    case 0: return {d[1], d[2]};
    case 1: return {d[0], d[2]};
    case 2: return {d[0], d[1]};
    default: throw Error(ErrorKind::ConfigError, "slice axis must be 0, 1 or 2");
    }
}

// Linear index in the 3D field of pixel (r, c) of slice s.
std::size_t volume_index(const Dims& d, int axis, std::size_t s, std::size_t r, std::size_t c) {
    switch (axis) {
    case 0: return (s * d[1] + r) * d[2] + c;
    case 1: return (r * d[1] + s) * d[2] + c;
    default: return (r * d[1] + c) * d[2] + s;
    }
}

} // namespace

Slice2D SliceStack::slice(std::size_t s) const {
    auto span = slice_span(s);
    return Slice2D{h, w, std::vector<double>(span.begin(), span.end())};
}

SliceStack slice_stack(const ScalarField& field, int axis) {
    auto [h, w] = slice_shape(field.dims, axis);
    SliceStack st;
    st.axis = axis;
    st.count = field.dims[static_cast<std::size_t>(axis)];
    st.h = h;
    st.w = w;
    st.values.resize(field.size());
    std::size_t n = 0;
    for (std::size_t s = 0; s < st.count; ++s)
        for (std::size_t r = 0; r < h; ++r)
            for (std::size_t c = 0; c < w; ++c) st.values[n++] = field.values[volume_index(field.dims, axis, s, r, c)];
    return st;
}

std::vector<double> reassemble(const SliceStack& stack, const Dims& dims) {
    auto [h, w] = slice_shape(dims, stack.axis);
    if (h != stack.h || w != stack.w || stack.count != dims[static_cast<std::size_t>(stack.axis)] ||
        stack.values.size() != num_points(dims))
        throw Error(ErrorKind::ShapeMismatch, "slice stack does not match dims");
    std::vector<double> out(num_points(dims));
    std::size_t n = 0;
    for (std::size_t s = 0; s < stack.count; ++s)
        for (std::size_t r = 0; r < h; ++r)
            for (std::size_t c = 0; c < w; ++c) out[volume_index(dims, stack.axis, s, r, c)] = stack.values[n++];
    return out;
}

NormParams NormParams::of(std::span<const double> values) {
    if (values.empty()) return {0.0, 0.0};
    auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    return {*lo, *hi};
}

std::vector<double> minmax_normalize(std::span<const double> values, const NormParams& params) {
    std::vector<double> out(values.size());
    std::transform(values.begin(), values.end(), out.begin(), [&](double x) { return params.forward(x); });
    return out;
}

std::vector<double> minmax_denormalize(std::span<const double> values, const NormParams& params) {
    std::vector<double> out(values.size());
    std::transform(values.begin(), values.end(), out.begin(), [&](double y) { return params.inverse(y); });
    return out;
}

std::size_t padded_extent(std::size_t n, std::size_t multiple) {
    if (multiple == 0) throw Error(ErrorKind::ConfigError, "pad multiple must be >= 1");
    return (n + multiple - 1) / multiple * multiple;
}

namespace {

// Reflect index i into [0, n) without repeating the edge sample.
std::size_t reflect(std::ptrdiff_t i, std::size_t n) {
    if (n == 1) return 0;
    const auto period = static_cast<std::ptrdiff_t>(2 * (n - 1));
    i %= period;
    if (i < 0) i += period;
    if (i >= static_cast<std::ptrdiff_t>(n)) i = period - i;
    return static_cast<std::size_t>(i);
}

} // namespace

PaddedSlice pad_reflect(const Slice2D& slice, std::size_t multiple) {
    PaddedSlice out;
    out.crop = {slice.h, slice.w};
    const std::size_t ph = padded_extent(slice.h, multiple);
    const std::size_t pw = padded_extent(slice.w, multiple);
    out.edge_replicated = (slice.h == 1 && ph > 1) || (slice.w == 1 && pw > 1);
    out.slice.h = ph;
    out.slice.w = pw;
    out.slice.values.resize(ph * pw);
    for (std::size_t r = 0; r < ph; ++r) {
        std::size_t sr = reflect(static_cast<std::ptrdiff_t>(r), slice.h);
        for (std::size_t c = 0; c < pw; ++c) {
            std::size_t sc = reflect(static_cast<std::ptrdiff_t>(c), slice.w);
            out.slice(r, c) = slice(sr, sc);
        }
    }
    return out;
}

Slice2D crop(const Slice2D& padded, const CropBox& box) {
    if (box.h > padded.h || box.w > padded.w) throw Error(ErrorKind::ShapeMismatch, "crop box exceeds slice");
    Slice2D out{box.h, box.w, std::vector<double>(box.h * box.w)};
    for (std::size_t r = 0; r < box.h; ++r)
        for (std::size_t c = 0; c < box.w; ++c) out(r, c) = padded(r, c);
    return out;
}

namespace {

// Periodic moving average of width 2r+1 along one axis.
void box_filter_axis(std::vector<double>& v, const Dims& d, int axis, int radius) {
    const std::size_t n = d[static_cast<std::size_t>(axis)];
    const std::size_t stride = axis == 0 ? d[1] * d[2] : axis == 1 ? d[2] : 1;
    std::vector<double> line(n), acc(n);
    const double inv = 1.0 / (2 * radius + 1);
    for (std::size_t base = 0; base < v.size(); ++base) {
        // Visit each line once, via its first element.
        std::size_t coord = (base / stride) % n;
        if (coord != 0) continue;
        for (std::size_t t = 0; t < n; ++t) line[t] = v[base + t * stride];
        for (std::size_t t = 0; t < n; ++t) {
            double s = 0.0;
            for (int o = -radius; o <= radius; ++o) {
                auto idx = (static_cast<std::ptrdiff_t>(t) + o) % static_cast<std::ptrdiff_t>(n);
                if (idx < 0) idx += static_cast<std::ptrdiff_t>(n);
                s += line[static_cast<std::size_t>(idx)];
            }
            acc[t] = s * inv;
        }
        for (std::size_t t = 0; t < n; ++t) v[base + t * stride] = acc[t];
    }
}

void standardize(std::vector<double>& v) {
    const double n = static_cast<double>(v.size());
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    const double sd = std::sqrt(var / n);
    for (double& x : v) x = sd > 0 ? (x - mean) / sd : 0.0;
}

std::vector<double> smoothed_noise(Rng& rng, const Dims& d, int radius, int passes) {
    std::vector<double> v(num_points(d));
    for (double& x : v) x = rng.normal();
    if (radius > 0)
        for (int p = 0; p < passes; ++p)
            for (int axis = 0; axis < 3; ++axis) box_filter_axis(v, d, axis, radius);
    standardize(v);
    return v;
}

} // namespace

FieldSet gen_synthetic(const SynthSpec& spec, std::uint64_t seed) {
    if (spec.num_aux < 1) throw Error(ErrorKind::ConfigError, "synthetic set needs at least one aux field");
    if (spec.smoothing_radius < 0) throw Error(ErrorKind::ConfigError, "smoothing radius must be >= 0");
    if (spec.smoothing_passes < 1) throw Error(ErrorKind::ConfigError, "smoothing passes must be >= 1");
    Rng rng(seed);
    const std::size_t n = num_points(spec.dims);

    FieldSet set;
    std::vector<double> sum(n, 0.0);
    for (int a = 0; a < spec.num_aux; ++a) {
        auto v = smoothed_noise(rng, spec.dims, spec.smoothing_radius, spec.smoothing_passes);
        for (std::size_t i = 0; i < n; ++i) {
            v[i] = round_to(spec.precision, v[i]);
            sum[i] += v[i];
        }
        set.add(ScalarField("aux" + std::to_string(a), spec.dims, spec.precision, std::move(v)));
    }
    const double scale = 1.0 / std::sqrt(static_cast<double>(spec.num_aux));
    auto noise = smoothed_noise(rng, spec.dims, spec.smoothing_radius, spec.smoothing_passes);
    std::vector<double> target(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double s = sum[i] * scale;
        target[i] = round_to(spec.precision, spec.alpha * s + spec.beta * s * s + spec.gamma * noise[i]);
    }
    set.add(ScalarField("target", spec.dims, spec.precision, std::move(target)));
    return set;
}

void write_pgm(const std::filesystem::path& path, const Slice2D& slice, bool log_scale) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
    out << "P5\n" << slice.w << ' ' << slice.h << "\n255\n";
    auto np = NormParams::of(slice.values);
    std::vector<std::uint8_t> px(slice.values.size());
    for (std::size_t i = 0; i < px.size(); ++i) {
        double t = np.hi > np.lo ? (slice.values[i] - np.lo) / (np.hi - np.lo) : 0.0;
        if (log_scale) t = std::log1p(1000.0 * t) / std::log1p(1000.0);
        px[i] = static_cast<std::uint8_t>(std::lround(std::clamp(t, 0.0, 1.0) * 255.0));
    }
    out.write(reinterpret_cast<const char*>(px.data()), static_cast<std::streamsize>(px.size()));
}

double pearson_correlation(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size() || a.empty()) throw Error(ErrorKind::ShapeMismatch, "correlation needs equal-length inputs");
    const double n = static_cast<double>(a.size());
    const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
    const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    if (saa == 0 || sbb == 0) return 0.0;
    return sab / std::sqrt(saa * sbb);
}

} // namespace nlz
