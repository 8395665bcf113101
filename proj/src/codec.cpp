#include "nlz/codec.hpp"

#include <algorithm>
#include <cmath>

#include "nlz/error.hpp"

namespace nlz {

ErrorBound abs_bound(double rel, std::span<const double> values) {
    if (!(rel > 0.0)) throw Error(ErrorKind::ConfigError, "relative error bound must be > 0");
    if (values.empty()) throw Error(ErrorKind::ConfigError, "cannot derive a bound from an empty field");
    auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    ErrorBound b;
    b.rel = rel;
    b.vrange = *hi - *lo;
    b.abs = b.vrange > 0.0 ? rel * b.vrange : rel;
    return b;
}

double lorenzo_predict(std::span<const double> recon, const Dims& d, std::size_t i, std::size_t j, std::size_t k) {
    auto v = [&](std::size_t a, std::size_t b, std::size_t c, bool ok) {
        return ok ? recon[(a * d[1] + b) * d[2] + c] : 0.0;
    };
    const bool hi = i > 0, hj = j > 0, hk = k > 0;
    return v(i - 1, j, k, hi) + v(i, j - 1, k, hj) + v(i, j, k - 1, hk)
         - v(i - 1, j - 1, k, hi && hj) - v(i - 1, j, k - 1, hi && hk) - v(i, j - 1, k - 1, hj && hk)
         + v(i - 1, j - 1, k - 1, hi && hj && hk);
}

Quantized quantize(double pred, double actual, double abs, std::uint32_t radius, Precision precision) {
    const double scaled = (actual - pred) / (2.0 * abs);
    Quantized out;
    if (!(std::fabs(scaled) <= static_cast<double>(radius) + 0.5)) {
        out.recon = actual;
        return out;
    }
    const auto q = static_cast<std::int64_t>(std::llround(scaled));
    if (static_cast<std::uint64_t>(std::llabs(q)) > radius) {
        out.recon = actual;
        return out;
    }
    const double recon = round_to(precision, pred + static_cast<double>(q) * 2.0 * abs);
    if (!(std::fabs(recon - actual) <= abs)) {
        out.recon = actual;
        return out;
    }
    out.code = static_cast<std::uint32_t>(static_cast<std::int64_t>(quant_center(radius)) + q);
    out.recon = recon;
    return out;
}

namespace {

double dequantize(double pred, std::uint32_t code, double abs, std::uint32_t radius, Precision precision) {
    const auto q = static_cast<std::int64_t>(code) - static_cast<std::int64_t>(quant_center(radius));
    return round_to(precision, pred + static_cast<double>(q) * 2.0 * abs);
}

} // namespace

CompressResult compress_block(const ScalarField& field, const ErrorBound& bound, std::uint32_t radius) {
    if (!(bound.abs > 0.0)) throw Error(ErrorKind::ConfigError, "absolute error bound must be > 0");
    if (radius == 0 || radius > (1u << 30)) throw Error(ErrorKind::ConfigError, "quantization radius out of range");
    check_finite(field.values);

    const Dims& d = field.dims;
    std::vector<double> recon(field.size());
    QuantizedBlock qb;
    qb.radius = radius;
    qb.codes.resize(field.size());

    std::size_t idx = 0;
    for (std::size_t i = 0; i < d[0]; ++i)
        for (std::size_t j = 0; j < d[1]; ++j)
            for (std::size_t k = 0; k < d[2]; ++k, ++idx) {
                const double pred = lorenzo_predict(recon, d, i, j, k);
                auto q = quantize(pred, field.values[idx], bound.abs, radius, field.precision);
                qb.codes[idx] = q.code;
                recon[idx] = q.recon;
                if (!q.predictable()) qb.unpredictables.push_back(field.values[idx]);
            }

    CompressResult out;
    auto hs = huffman_encode(qb.codes);
    out.payload.dims = d;
    out.payload.precision = field.precision;
    out.payload.radius = radius;
    out.payload.rel = bound.rel;
    out.payload.abs = bound.abs;
    out.payload.table = std::move(hs.table);
    out.payload.stream = std::move(hs.bits);
    out.payload.stream_bits = hs.bit_count;
    out.payload.unpredictables = qb.unpredictables;
    out.decompressed = ScalarField(field.name, d, field.precision, std::move(recon));
    out.quantized = std::move(qb);
    return out;
}

ScalarField decompress_block(const CompressedPayload& p, std::string name) {
    const Dims& d = p.dims;
    const std::size_t n = num_points(d);
    auto codes = huffman_decode(p.stream, p.stream_bits, p.table, n);
    const auto zero_codes = static_cast<std::size_t>(std::count(codes.begin(), codes.end(), 0u));
    if (zero_codes != p.unpredictables.size())
        throw Error(ErrorKind::CorruptPayload, "unpredictable count does not match code stream");

    std::vector<double> recon(n);
    std::size_t idx = 0, u = 0;
    for (std::size_t i = 0; i < d[0]; ++i)
        for (std::size_t j = 0; j < d[1]; ++j)
            for (std::size_t k = 0; k < d[2]; ++k, ++idx) {
                if (codes[idx] == 0) {
                    recon[idx] = p.unpredictables[u++];
                } else {
                    if (codes[idx] > 2 * p.radius + 1) throw Error(ErrorKind::CorruptPayload, "code beyond radius");
                    recon[idx] = dequantize(lorenzo_predict(recon, d, i, j, k), codes[idx], p.abs, p.radius, p.precision);
                }
            }
    return ScalarField(std::move(name), d, p.precision, std::move(recon));
}

ScalarField decompress_block(std::span<const std::uint8_t> payload_bytes, std::string name) {
    return decompress_block(CompressedPayload::deserialize(payload_bytes), std::move(name));
}

// Layout: u64 d0,d1,d2 | u8 precision | u8[3] pad | u32 radius | f64 rel | f64 abs |
//         huffman table | u64 stream bits | stream bytes | u64 unpredictable count | raw values
Bytes CompressedPayload::serialize() const {
    ByteWriter w;
    for (auto x : dims) w.put<std::uint64_t>(x);
    w.put<std::uint8_t>(static_cast<std::uint8_t>(precision));
    for (int i = 0; i < 3; ++i) w.put<std::uint8_t>(0);
    w.put<std::uint32_t>(radius);
    w.put<double>(rel);
    w.put<double>(abs);
    table.serialize(w);
    w.put<std::uint64_t>(stream_bits);
    w.put_bytes(stream);
    w.put<std::uint64_t>(unpredictables.size());
    w.put_bytes(encode_raw(unpredictables, precision));
    return w.take();
}

CompressedPayload CompressedPayload::deserialize(std::span<const std::uint8_t> bytes) {
    ByteReader r(bytes, ErrorKind::CorruptPayload);
    CompressedPayload p;
    for (auto& x : p.dims) x = r.get<std::uint64_t>();
    if (p.dims[0] == 0 || p.dims[1] == 0 || p.dims[2] == 0) throw Error(ErrorKind::CorruptPayload, "zero dimension");
    auto prec = r.get<std::uint8_t>();
    if (prec > 1) throw Error(ErrorKind::CorruptPayload, "unknown precision tag");
    p.precision = static_cast<Precision>(prec);
    r.get_bytes(3);
    p.radius = r.get<std::uint32_t>();
    p.rel = r.get<double>();
    p.abs = r.get<double>();
    if (!(p.abs > 0.0) || p.radius == 0) throw Error(ErrorKind::CorruptPayload, "invalid codec header");
    p.table = HuffmanTable::deserialize(r);
    p.stream_bits = r.get<std::uint64_t>();
    const std::uint64_t stream_bytes = (p.stream_bits + 7) / 8;
    if (stream_bytes > r.remaining()) throw Error(ErrorKind::CorruptPayload, "code stream truncated");
    auto s = r.get_bytes(static_cast<std::size_t>(stream_bytes));
    p.stream.assign(s.begin(), s.end());
    const auto nu = r.get<std::uint64_t>();
    if (nu > num_points(p.dims) || nu * bytes_of(p.precision) > r.remaining())
        throw Error(ErrorKind::CorruptPayload, "unpredictable queue truncated");
    p.unpredictables = decode_raw(r.get_bytes(static_cast<std::size_t>(nu * bytes_of(p.precision))), p.precision);
    if (!r.at_end()) throw Error(ErrorKind::CorruptPayload, "trailing bytes after payload");
    return p;
}

} // namespace nlz
