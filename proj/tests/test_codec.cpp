#include <doctest.h>

#include <map>

#include "nlz/codec.hpp"
#include "nlz/error.hpp"
#include "nlz/external.hpp"
#include "nlz/huffman.hpp"
#include "nlz/metrics.hpp"
#include "support.hpp"

using namespace nlz;

namespace {

std::size_t length_of(const HuffmanTable& t, std::uint32_t sym) {
    for (const auto& e : t.entries)
        if (e.symbol == sym) return e.length;
    return 999;
}

// Straight transcription of the 7-term inclusion-exclusion sum.
double lorenzo_oracle(const std::vector<double>& v, const Dims& d, long i, long j, long k) {
    auto at = [&](long a, long b, long c) -> double {
        if (a < 0 || b < 0 || c < 0) return 0.0;
        return v[(static_cast<std::size_t>(a) * d[1] + static_cast<std::size_t>(b)) * d[2] + static_cast<std::size_t>(c)];
    };
    return at(i - 1, j, k) + at(i, j - 1, k) + at(i, j, k - 1) - at(i - 1, j - 1, k) - at(i - 1, j, k - 1) -
           at(i, j - 1, k - 1) + at(i - 1, j - 1, k - 1);
}

} // namespace

TEST_CASE("canonical Huffman lengths for a small alphabet") {
    std::vector<std::uint32_t> s{7, 7, 3, 9};
    auto t = build_huffman_table(s);
    CHECK(length_of(t, 7) == 1);
    CHECK(length_of(t, 3) == 2);
    CHECK(length_of(t, 9) == 2);
    CHECK(t.kraft_sum() == doctest::Approx(1.0));
    auto enc = huffman_encode(s);
    CHECK(enc.bit_count == 6);
    CHECK(huffman_decode(enc.bits, enc.bit_count, enc.table, s.size()) == s);
}

TEST_CASE("single-symbol alphabet costs no stream bits") {
    std::vector<std::uint32_t> s(1000, 42);
    auto enc = huffman_encode(s);
    CHECK(enc.bit_count == 0);
    CHECK(enc.table.entries.size() == 1);
    CHECK(huffman_decode(enc.bits, enc.bit_count, enc.table, s.size()) == s);
}

TEST_CASE("Huffman round trip, Kraft and size bound on random streams") {
    Rng rng(77);
    for (int t = 0; t < 20; ++t) {
        const std::size_t n = 1 + rng.below(5000);
        const std::uint32_t alphabet = 2 + static_cast<std::uint32_t>(rng.below(300));
        std::vector<std::uint32_t> s(n);
        for (auto& x : s) x = static_cast<std::uint32_t>(rng.below(alphabet)) * 3 + 1;
        auto enc = huffman_encode(s);
        CHECK(enc.table.kraft_sum() <= 1.0 + 1e-12);
        CHECK(huffman_decode(enc.bits, enc.bit_count, enc.table, n) == s);
        const std::size_t distinct = enc.table.entries.size();
        if (distinct > 1) {
            const double width = std::ceil(std::log2(static_cast<double>(distinct)));
            CHECK(static_cast<double>(enc.bit_count) <= static_cast<double>(n) * width);
        }
        ByteWriter w;
        enc.table.serialize(w);
        auto bytes = w.take();
        ByteReader r(bytes, ErrorKind::CorruptPayload);
        CHECK(HuffmanTable::deserialize(r) == enc.table);
    }
}

TEST_CASE("Huffman decode overrun raises CorruptPayload") {
    std::vector<std::uint32_t> s{1, 2, 3, 4, 1, 1, 2};
    auto enc = huffman_encode(s);
    try {
        huffman_decode(enc.bits, enc.bit_count - 1, enc.table, s.size());
        FAIL("no error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::CorruptPayload);
    }
}

TEST_CASE("abs_bound") {
    std::vector<double> v{0.0, 250.0, 1000.0};
    auto b = abs_bound(1e-3, v);
    CHECK(b.abs == doctest::Approx(1.0));
    CHECK(b.vrange == 1000.0);
    std::vector<double> c(10, 4.0);
    CHECK(abs_bound(1e-2, c).abs == 1e-2);
    std::vector<double> nyx{0.0, 4.78e6};
    CHECK(abs_bound(1e-2, nyx).abs == doctest::Approx(4.78e4));
}

TEST_CASE("Lorenzo predictor") {
    const Dims d{4, 5, 6};
    std::vector<double> affine(num_points(d));
    for (std::size_t i = 0; i < d[0]; ++i)
        for (std::size_t j = 0; j < d[1]; ++j)
            for (std::size_t k = 0; k < d[2]; ++k) affine[(i * d[1] + j) * d[2] + k] = i + 2.0 * j + 3.0 * k;
    for (std::size_t i = 1; i < d[0]; ++i)
        for (std::size_t j = 1; j < d[1]; ++j)
            for (std::size_t k = 1; k < d[2]; ++k)
                CHECK(lorenzo_predict(affine, d, i, j, k) == doctest::Approx(affine[(i * d[1] + j) * d[2] + k]));
    CHECK(lorenzo_predict(affine, d, 0, 0, 0) == 0.0);

    Rng rng(4);
    const Dims c{4, 4, 4};
    auto v = nlz::testing::random_values(rng, 64);
    for (long i = 0; i < 4; ++i)
        for (long j = 0; j < 4; ++j)
            for (long k = 0; k < 4; ++k)
                CHECK(lorenzo_predict(v, c, i, j, k) == lorenzo_oracle(v, c, i, j, k));
}

TEST_CASE("linear quantization") {
    const std::uint32_t radius = kDefaultRadius;
    auto q = quantize(10.0, 10.7, 0.5, radius);
    CHECK(q.code == quant_center(radius) + 1);
    CHECK(q.recon == 11.0);
    CHECK(std::fabs(q.recon - 10.7) <= 0.5);

    auto z = quantize(3.25, 3.25, 0.1, radius);
    CHECK(z.code == quant_center(radius));
    CHECK(z.recon == 3.25);

    CHECK_FALSE(quantize(0.0, 1e9, 1e-3, radius).predictable());
}

TEST_CASE("constant field compresses past 50x") {
    ScalarField f("c", {32, 32, 32}, Precision::F64, std::vector<double>(32 * 32 * 32, 3.5));
    auto r = compress_block(f, abs_bound(1e-2, f));
    const auto center = quant_center(kDefaultRadius);
    for (std::size_t i = 1; i < r.quantized.codes.size(); ++i) CHECK(r.quantized.codes[i] == center);
    const double ratio = 64.0 * f.size() / (8.0 * r.payload.serialize().size());
    CHECK(ratio > 50.0);
    for (double x : r.decompressed.values) CHECK(std::fabs(x - 3.5) <= 1e-2);
}

TEST_CASE("huge bound keeps every point in bound") {
    Rng rng(8);
    ScalarField f("u", {8, 8, 8}, Precision::F32, nlz::testing::random_values(rng, 512, 0.0, 1.0));
    for (auto& x : f.values) x = round_to(Precision::F32, x);
    ErrorBound b{1.0, value_range(f.values), value_range(f.values)};
    auto r = compress_block(f, b);
    for (std::size_t i = 0; i < f.size(); ++i) CHECK(std::fabs(f.values[i] - r.decompressed.values[i]) <= b.abs);
}

TEST_CASE("payload round trip and in-loop consistency") {
    SynthSpec spec;
    spec.dims = {32, 32, 32};
    auto fs = gen_synthetic(spec, 21);
    const auto& f = fs.get("target");
    auto b = abs_bound(1e-3, f);
    auto r = compress_block(f, b);
    auto bytes = r.payload.serialize();
    auto back = decompress_block(bytes);
    CHECK(back.values == r.decompressed.values);
    double worst = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) worst = std::max(worst, std::fabs(f.values[i] - back.values[i]));
    CHECK(worst <= b.abs);
    CHECK(compress_block(f, b).payload.serialize() == bytes);

    auto cut = bytes;
    cut.resize(cut.size() / 2);
    CHECK_THROWS_AS(decompress_block(cut), Error);
}

TEST_CASE("unpredictable queue matches code-0 count") {
    Rng rng(12);
    ScalarField f("r", {6, 6, 6}, Precision::F64, nlz::testing::random_values(rng, 216, -1e6, 1e6));
    ErrorBound b{1e-9, 2e-3, 2e6};
    auto r = compress_block(f, b, 4);
    std::size_t zeros = std::count(r.quantized.codes.begin(), r.quantized.codes.end(), 0u);
    CHECK(zeros == r.quantized.unpredictables.size());
    CHECK(zeros > 0);
    auto back = decompress_block(r.payload);
    for (std::size_t i = 0; i < f.size(); ++i) CHECK(std::fabs(f.values[i] - back.values[i]) <= b.abs);
}

TEST_CASE("external adapter") {
    ScalarField f("e", {4, 5, 6}, Precision::F32, std::vector<double>(120));
    for (std::size_t i = 0; i < f.size(); ++i) f.values[i] = static_cast<double>(static_cast<float>(i * 0.25));
    auto b = abs_bound(1e-3, f);

    auto ok = external_compress("cp {in} {out}", f, b);
    CHECK(ok.decompressed.values == f.values);

    auto kind = [&](const std::string& cmd) {
        try {
            external_compress(cmd, f, b);
        } catch (const Error& e) {
            return e.kind();
        }
        return ErrorKind::IoError;
    };
    CHECK(kind("definitely-not-a-real-tool-xyz {in} {out}") == ErrorKind::ToolMissing);
    CHECK(kind("false {in} {out}") == ErrorKind::ToolFailed);
    CHECK(kind("head -c 480 /dev/zero > {out}; true {in}") == ErrorKind::BoundViolated);
}

TEST_CASE("SZ3 through the adapter when installed") {
    if (std::system("command -v sz3 >/dev/null 2>&1") != 0) {
        MESSAGE("sz3 not on PATH; skipped");
        return;
    }
    SynthSpec spec;
    auto f = gen_synthetic(spec, 1).get("target");
    auto b = abs_bound(1e-3, f);
    auto r = external_compress("sz3 -f -i {in} -z {cmp} -o {out} -3 {d2} {d1} {d0} -M ABS {abs}", f, b);
    CHECK(max_abs_error(f.values, r.decompressed.values) <= b.abs);
}
