#include <doctest.h>

#include <cstring>
#include <fstream>

#include "nlz/error.hpp"
#include "nlz/field.hpp"
#include "support.hpp"

using namespace nlz;
using nlz::testing::TempDir;

namespace {

void write_bytes(const std::filesystem::path& p, const std::vector<std::uint8_t>& b) {
    std::ofstream out(p, std::ios::binary);
    out.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
}

template <typename T>
std::vector<std::uint8_t> as_bytes(const std::vector<T>& v) {
    std::vector<std::uint8_t> b(v.size() * sizeof(T));
    std::memcpy(b.data(), v.data(), b.size());
    return b;
}

ErrorKind kind_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("expected an nlz::Error");
    return ErrorKind::IoError;
}

} // namespace

TEST_CASE("load_raw reads little-endian values and checks the size") {
    TempDir tmp;
    std::vector<float> v{1, 2, 3, 4, 5, 6, 7, 8};
    write_bytes(tmp / "a.raw", as_bytes(v));
    auto f = load_raw(tmp / "a.raw", {2, 2, 2}, Precision::F32);
    CHECK(f.size() == 8);
    CHECK(f.at(1, 1, 1) == 8.0);
    CHECK(f.at(0, 1, 0) == 3.0);

    auto bytes = as_bytes(v);
    bytes.resize(36);
    write_bytes(tmp / "b.raw", bytes);
    CHECK(kind_of([&] { load_raw(tmp / "b.raw", {2, 2, 2}, Precision::F32); }) == ErrorKind::SizeMismatch);
}

TEST_CASE("load_raw rejects non-finite values and names the index") {
    TempDir tmp;
    std::vector<double> v{0, 1, 2, std::nan(""), 4, 5, 6, 7};
    write_bytes(tmp / "n.raw", as_bytes(v));
    try {
        load_raw(tmp / "n.raw", {2, 2, 2}, Precision::F64);
        FAIL("no error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::NonFinite);
        CHECK(std::string(e.what()).find('3') != std::string::npos);
    }
}

TEST_CASE("column-order file equals the row-order layout of the same function") {
    TempDir tmp;
    const Dims d{3, 4, 5};
    std::vector<float> row, col;
    for (std::size_t i = 0; i < d[0]; ++i)
        for (std::size_t j = 0; j < d[1]; ++j)
            for (std::size_t k = 0; k < d[2]; ++k) row.push_back(static_cast<float>(100 * i + 10 * j + k));
    for (std::size_t k = 0; k < d[2]; ++k)
        for (std::size_t j = 0; j < d[1]; ++j)
            for (std::size_t i = 0; i < d[0]; ++i) col.push_back(static_cast<float>(100 * i + 10 * j + k));
    write_bytes(tmp / "row.raw", as_bytes(row));
    write_bytes(tmp / "col.raw", as_bytes(col));
    auto a = load_raw(tmp / "row.raw", d, Precision::F32, RawOrder::Row);
    auto b = load_raw(tmp / "col.raw", d, Precision::F32, RawOrder::Column);
    CHECK(a.values == b.values);
}

TEST_CASE("store_raw and load_raw round trip bit-exactly") {
    TempDir tmp;
    Rng rng(3);
    for (auto p : {Precision::F32, Precision::F64}) {
        auto vals = nlz::testing::random_values(rng, 60, -1e6, 1e6);
        for (auto& x : vals) x = round_to(p, x);
        ScalarField f("x", {3, 4, 5}, p, vals);
        store_raw(tmp / "x.raw", f);
        auto g = load_raw(tmp / "x.raw", f.dims, p);
        CHECK(g.values == f.values);
    }
}

TEST_CASE("slice stacks have the documented shapes and reassemble exactly") {
    Rng rng(5);
    ScalarField f("f", {4, 8, 6}, Precision::F64, nlz::testing::random_values(rng, 4 * 8 * 6));
    auto s0 = slice_stack(f, 0);
    CHECK(s0.count == 4);
    CHECK((s0.h == 8 && s0.w == 6));
    auto s2 = slice_stack(f, 2);
    CHECK(s2.count == 6);
    CHECK((s2.h == 4 && s2.w == 8));
    auto s1 = slice_stack(f, 1);
    CHECK((s1.count == 8 && s1.h == 4 && s1.w == 6));
    CHECK(s0.slice(2)(3, 5) == f.at(2, 3, 5));
    CHECK(s1.slice(3)(2, 5) == f.at(2, 3, 5));
    CHECK(s2.slice(5)(2, 3) == f.at(2, 3, 5));
    for (int axis = 0; axis < 3; ++axis) CHECK(reassemble(slice_stack(f, axis), f.dims) == f.values);
}

TEST_CASE("min-max normalization") {
    NormParams p{0.0, 2.0};
    CHECK(p.forward(1.0) == 0.5);
    NormParams d{3.0, 3.0};
    CHECK(d.forward(-7.0) == 0.5);
    CHECK(d.inverse(0.2) == 3.0);

    Rng rng(9);
    auto v = nlz::testing::random_values(rng, 1000, -50.0, 80.0);
    for (auto& x : v) x = round_to(Precision::F32, x);
    auto np = NormParams::of(v);
    auto n = minmax_normalize(v, np);
    CHECK(*std::min_element(n.begin(), n.end()) == 0.0);
    CHECK(*std::max_element(n.begin(), n.end()) == 1.0);
    auto back = minmax_denormalize(n, np);
    double worst = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) worst = std::max(worst, std::fabs(back[i] - v[i]));
    CHECK(worst < 1e-6 * (np.hi - np.lo));
}

TEST_CASE("reflection padding") {
    CHECK(padded_extent(100, 16) == 112);
    CHECK(padded_extent(500, 16) == 512);
    Slice2D big{100, 500, std::vector<double>(100 * 500, 1.0)};
    auto pb = pad_reflect(big, 16);
    CHECK((pb.slice.h == 112 && pb.slice.w == 512));

    Slice2D sq{512, 512, std::vector<double>(512 * 512, 2.0)};
    auto ps = pad_reflect(sq, 16);
    CHECK((ps.slice.h == 512 && ps.slice.w == 512));
    CHECK(ps.slice.values == sq.values);

    // Edge not duplicated: [a b c] -> [a b c b]
    Slice2D row{1, 3, {1.0, 2.0, 3.0}};
    Slice2D col{3, 1, {1.0, 2.0, 3.0}};
    auto pr = pad_reflect(Slice2D{2, 3, {1, 2, 3, 4, 5, 6}}, 4);
    CHECK(pr.slice.w == 4);
    CHECK(pr.slice(0, 3) == 2.0);
    CHECK(pr.slice(2, 0) == 1.0);  // row 2 reflects to row 0
    CHECK(pr.slice(3, 3) == 5.0);
    CHECK_FALSE(pr.edge_replicated);

    auto p1 = pad_reflect(row, 4);
    CHECK(p1.edge_replicated);
    CHECK(p1.slice(3, 0) == 1.0);
    CHECK(pad_reflect(col, 4).edge_replicated);

    Rng rng(1);
    for (int t = 0; t < 20; ++t) {
        std::size_t h = 2 + rng.below(30), w = 2 + rng.below(30);
        Slice2D s{h, w, nlz::testing::random_values(rng, h * w)};
        auto p = pad_reflect(s, 16);
        CHECK(p.slice.h % 16 == 0);
        CHECK(p.slice.w % 16 == 0);
        CHECK(crop(p.slice, p.crop).values == s.values);
    }
}

TEST_CASE("synthetic generator") {
    SynthSpec spec;
    spec.dims = {32, 32, 32};
    auto a = gen_synthetic(spec, 11);
    auto b = gen_synthetic(spec, 11);
    REQUIRE(a.size() == 3);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a.fields()[i].values == b.fields()[i].values);
    for (const auto& f : a.fields())
        for (double v : f.values) CHECK(v == static_cast<double>(static_cast<float>(v)));

    SUBCASE("gamma 0 makes the target an exact function of the aux fields") {
        spec.gamma = 0.0;
        auto s = gen_synthetic(spec, 2);
        const auto& a0 = s.get("aux0").values;
        const auto& a1 = s.get("aux1").values;
        std::vector<double> model(a0.size());
        for (std::size_t i = 0; i < model.size(); ++i) {
            const double sv = (a0[i] + a1[i]) / std::sqrt(2.0);
            model[i] = spec.alpha * sv + spec.beta * sv * sv;
        }
        CHECK(std::fabs(pearson_correlation(model, s.get("target").values)) > 1.0 - 1e-6);
    }
}

TEST_CASE("default synthetic target correlates with each aux field") {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        auto s = gen_synthetic(SynthSpec{}, seed);
        CHECK(pearson_correlation(s.get("target").values, s.get("aux0").values) > 0.5);
        CHECK(pearson_correlation(s.get("target").values, s.get("aux1").values) > 0.5);
    }
}

TEST_CASE("field set invariants") {
    FieldSet s;
    s.add(ScalarField("a", {2, 2, 2}, Precision::F32, std::vector<double>(8, 0.0)));
    CHECK_THROWS_AS(s.add(ScalarField("a", {2, 2, 2}, Precision::F32, std::vector<double>(8, 0.0))), Error);
    CHECK_THROWS_AS(s.add(ScalarField("b", {2, 2, 1}, Precision::F32, std::vector<double>(4, 0.0))), Error);
    CHECK_THROWS_AS(s.add(ScalarField("c", {2, 2, 2}, Precision::F64, std::vector<double>(8, 0.0))), Error);
    CHECK_THROWS_AS(ScalarField("d", {2, 2, 2}, Precision::F32, std::vector<double>(7, 0.0)), Error);
}
