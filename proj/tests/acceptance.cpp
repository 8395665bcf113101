// Acceptance runner: one PASS/FAIL line per criterion.
//   nlz_acceptance --cli <path to nlz> [--only 1,2,...]

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nlz/analysis.hpp"
#include "nlz/codec.hpp"
#include "nlz/container.hpp"
#include "nlz/error.hpp"
#include "nlz/error_control.hpp"
#include "nlz/huffman.hpp"
#include "nlz/metrics.hpp"
#include "nlz/pipeline.hpp"
#include "support.hpp"

using namespace nlz;
using namespace nlz::testing;

namespace {

struct Verdict {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail += (detail.empty() ? "" : "; ") + std::string("FAILED ") + what;
        }
    }
    void note(const std::string& s) { detail += (detail.empty() ? "" : "; ") + s; }
};

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

// The shipped dataset: three coupled 64^3 f32 fields from the generator.
FieldSet dataset(std::uint64_t seed) { return gen_synthetic(SynthSpec{}, seed); }

std::uint64_t violations(const FieldSet& orig, const FieldSet& fin, const std::vector<FieldReport>& reports,
                         double factor, double* worst_ratio) {
    std::uint64_t bad = 0;
    for (const auto& r : reports) {
        const auto& a = orig.get(r.name).values;
        const auto& b = fin.get(r.name).values;
        for (std::size_t i = 0; i < a.size(); ++i) {
            const double e = std::fabs(a[i] - b[i]);
            *worst_ratio = std::max(*worst_ratio, e / r.abs);
            if (e > factor * r.abs) ++bad;
        }
    }
    return bad;
}

std::size_t total_points(const FieldSet& f) { return f.size() * num_points(f.dims()); }

Verdict c1_avgbit() {
    Verdict v;
    const double a = avg_bit({512, 512, 512}), b = avg_bit({256, 384, 384}), c = avg_bit({100, 500, 500});
    v.require(a == 27.0, "avgBit(512^3) == 27");
    v.require(std::fabs(b - 25.2) <= 0.05, "avgBit(256,384,384) ~ 25.2");
    v.require(std::fabs(c - 24.6) <= 0.05, "avgBit(100,500,500) ~ 24.6");
    v.note(fmt("%.4f", a) + " " + fmt("%.4f", b) + " " + fmt("%.4f", c));
    return v;
}

constexpr int kGuaranteeEpochs = 10;

Verdict bound_runs(BoundMode mode) {
    Verdict v;
    double worst = 0.0;
    std::uint64_t runs = 0;
    const double factor = mode == BoundMode::Strict1x ? 1.0 : 2.0;
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        auto fs = dataset(seed);
        for (double rel : {1e-2, 1e-3}) {
            std::vector<int> epoch_list{kGuaranteeEpochs};
            if (mode == BoundMode::Regulated2x) epoch_list.push_back(0);
            for (int epochs : epoch_list) {
                PipelineConfig cfg;
                cfg.rel = rel;
                cfg.mode = mode;
                cfg.train.epochs = epochs;
                cfg.seed = seed;
                auto out = neurlz_compress(fs, cfg);
                auto back = neurlz_reconstruct(read_container(write_container(out.container)));
                const auto pts = total_points(fs);
                v.require(pts == 786432, "786432 points per run");
                const auto bad = violations(fs, back.final_fields, out.reports, factor, &worst);
                v.require(bad == 0, "seed " + std::to_string(seed) + " rel " + fmt("%g", rel) + " epochs " +
                                        std::to_string(epochs) + ": " + std::to_string(bad) + " violations");
                if (mode == BoundMode::Regulated2x)
                    for (const auto& r : out.reports) v.require(r.coords_bits == 0, "no coordinates stored");
                for (const auto& r : out.reports) v.require(r.enhanced, r.name + " enhanced");
                ++runs;
            }
        }
    }
    v.note(std::to_string(runs) + " runs, max |err|/abs = " + fmt("%.6f", worst));
    return v;
}

Verdict c4_codec() {
    Verdict v;
    Rng rng(2024);
    std::size_t checked = 0;
    for (int t = 0; t < 200; ++t) {
        Dims d{1 + rng.below(16), 1 + rng.below(16), 1 + rng.below(16)};
        const auto prec = rng.below(2) ? Precision::F64 : Precision::F32;
        const double scale = std::pow(10.0, rng.uniform(-3, 6));
        std::vector<double> vals(num_points(d));
        // Mix of smooth and rough content.
        const double freq = rng.uniform(0.0, 2.0);
        for (std::size_t i = 0; i < d[0]; ++i)
            for (std::size_t j = 0; j < d[1]; ++j)
                for (std::size_t k = 0; k < d[2]; ++k)
                    vals[(i * d[1] + j) * d[2] + k] =
                        round_to(prec, scale * (std::sin(freq * (i + 0.7 * j + 0.3 * k)) + rng.uniform(-0.3, 0.3)));
        ScalarField f("r", d, prec, vals);
        const double rel = std::pow(10.0, rng.uniform(-6, -1));
        auto b = abs_bound(rel, f);
        auto r = compress_block(f, b);
        auto bytes = r.payload.serialize();
        auto back = decompress_block(bytes);
        bool ok = back.values == r.decompressed.values;
        for (std::size_t i = 0; i < f.size(); ++i) ok = ok && std::fabs(f.values[i] - back.values[i]) <= b.abs;
        ok = ok && compress_block(f, b).payload.serialize() == bytes;
        v.require(ok, "random field " + std::to_string(t));
        checked += f.size();
    }
    std::vector<std::uint32_t> syms(1000000);
    for (auto& s : syms) s = static_cast<std::uint32_t>(std::min<std::uint64_t>(rng.below(64) * rng.below(64), 5000));
    auto enc = huffman_encode(syms);
    v.require(huffman_decode(enc.bits, enc.bit_count, enc.table, syms.size()) == syms, "Huffman 1e6 round trip");
    v.note("200 fields / " + std::to_string(checked) + " points, Huffman " +
           fmt("%.3f", double(enc.bit_count) / syms.size()) + " bits/symbol");
    return v;
}

Verdict c5_gradients() {
    Verdict v;
    Rng rng(5);
    double worst = 0.0;
    auto track = [&](const GradCheck& g, const std::string& what) {
        worst = std::max(worst, g.max_rel());
        v.require(g.max_rel() < 1e-4, what + " " + fmt("%.2e", g.max_rel()));
    };
    for (auto g : {ConvGeom{2, 3, 3, 1, 1, 0}, ConvGeom{3, 4, 3, 2, 1, 0}, ConvGeom{8, 4, 1, 1, 0, 0}}) {
        auto x = random_tensor(rng, g.in_ch, 8, 8);
        const std::size_t o = (8 + 2 * g.pad - g.kernel) / g.stride + 1;
        track(check_gradients(conv_objective(g, random_tensor(rng, g.out_ch, o, o), false),
                              random_values(rng, g.param_count()), x),
              "conv");
    }
    {
        ConvGeom g{4, 4, 3, 2, 1, 1};
        auto x = random_tensor(rng, 4, 8, 8);
        track(check_gradients(conv_objective(g, random_tensor(rng, 4, 16, 16), true),
                              random_values(rng, g.param_count()), x),
              "transposed conv");
    }
    auto probe = random_tensor(rng, 3, 8, 8);
    Objective leaky{[&](const std::vector<double>&, const Tensor& x) { return dot(probe, leaky_relu_forward(x)); },
                    [&](const std::vector<double>&, const Tensor& x, std::vector<double>&) {
                        return leaky_relu_backward(x, probe);
                    }};
    track(check_gradients(leaky, {}, random_tensor(rng, 3, 8, 8)), "leaky relu");
    Objective sig{[&](const std::vector<double>&, const Tensor& x) { return dot(probe, sigmoid_forward(x)); },
                  [&](const std::vector<double>&, const Tensor& x, std::vector<double>&) {
                      return sigmoid_backward(sigmoid_forward(x), probe);
                  }};
    track(check_gradients(sig, {}, random_tensor(rng, 3, 8, 8, -3, 3)), "sigmoid");
    Objective cat{[&](const std::vector<double>&, const Tensor& x) {
                      Tensor a, b;
                      split_channels(x, 1, a, b);
                      return dot(probe, concat_channels(a, b));
                  },
                  [&](const std::vector<double>&, const Tensor&, std::vector<double>&) { return probe; }};
    track(check_gradients(cat, {}, random_tensor(rng, 3, 8, 8)), "concat");

    for (int channels : {1, 3})
        for (bool skip : {true, false}) {
            NetConfig cfg;
            cfg.in_channels = channels;
            cfg.skip_connections = skip;
            cfg.seed = 17;
            auto w = init_model(cfg);
            for (auto& p : w.params) p += rng.uniform(-0.1, 0.1);
            track(check_gradients(net_objective(cfg, random_tensor(rng, 1, 16, 16)), w.params,
                                  random_tensor(rng, channels, 16, 16, 0, 1)),
                  "full net C=" + std::to_string(channels) + (skip ? " skip" : " no-skip"));
        }
    v.note("max rel " + fmt("%.2e", worst));
    return v;
}

// The 100-epoch enhancement runs shared by criteria 6, 7, 8 and 10, trained
// on first use so a single criterion only pays for the variants it reads.
constexpr std::uint64_t kEnhanceSeed = 1;

const FieldSet& enhancement_data() {
    static const FieldSet data = dataset(kEnhanceSeed);
    return data;
}

enum class Variant { Full, Single, Direct, NoSkip };

const CompressOutcome& enhancement_run(Variant which) {
    static std::map<Variant, CompressOutcome> cache;
    if (auto it = cache.find(which); it != cache.end()) return it->second;
    PipelineConfig cfg;
    cfg.rel = 1e-2;
    cfg.seed = kEnhanceSeed;
    cfg.targets = {"target"};
    cfg.ablation.single_field = which == Variant::Single;
    cfg.ablation.direct_targets = which == Variant::Direct;
    cfg.ablation.no_skip = which == Variant::NoSkip;
    return cache.emplace(which, neurlz_compress(enhancement_data(), cfg)).first->second;
}

const FieldReport& target_report(const CompressOutcome& o) {
    for (const auto& r : o.reports)
        if (r.name == "target") return r;
    throw Error(ErrorKind::ConfigError, "no target report");
}

Verdict c6_efficacy() {
    Verdict v;
    const auto& r = target_report(enhancement_run(Variant::Full));
    const double gain = r.psnr_final.db - r.psnr_decompressed.db;
    const auto& epochs = r.logs.at(0).epochs;
    v.require(epochs.size() == 100, "100 epochs logged");
    const double olr1 = epochs.front().olr_percent, olr_last = epochs.back().olr_percent;
    v.require(gain >= 1.0, "PSNR gain >= 1.0 dB");
    v.require(olr_last < olr1, "final-epoch OLR < epoch-1 OLR");
    v.note("dec " + fmt("%.3f", r.psnr_decompressed.db) + " dB, final " + fmt("%.3f", r.psnr_final.db) + " dB (+" +
           fmt("%.3f", gain) + "), OLR epoch1 " + fmt("%.4f%%", olr1) + " -> epoch100 " + fmt("%.4f%%", olr_last));
    return v;
}

Verdict c7_cross_field() {
    Verdict v;
    const double cross = target_report(enhancement_run(Variant::Full)).psnr_final.db;
    const double single = target_report(enhancement_run(Variant::Single)).psnr_final.db;
    v.require(cross >= single + 0.5, "cross-field >= single-field + 0.5 dB");
    v.note("cross " + fmt("%.3f", cross) + " dB, single " + fmt("%.3f", single) + " dB (diff " +
           fmt("%+.3f", cross - single) + ")");
    return v;
}

Verdict c8_ablations() {
    Verdict v;
    const double res = target_report(enhancement_run(Variant::Full)).psnr_final.db;
    const double dir = target_report(enhancement_run(Variant::Direct)).psnr_final.db;
    const double noskip = target_report(enhancement_run(Variant::NoSkip)).psnr_final.db;
    v.require(res >= dir - 0.1, "residual >= direct - 0.1 dB");
    v.require(res >= noskip - 0.1, "skip-on >= skip-off - 0.1 dB");
    v.note("residual/skip " + fmt("%.3f", res) + ", direct " + fmt("%.3f", dir) + ", no-skip " + fmt("%.3f", noskip));
    return v;
}

Verdict c9_metrics() {
    Verdict v;
    std::vector<double> x{0, 2, 4}, y{1, 2, 4};
    const double p = psnr(x, y).db;
    v.require(std::fabs(p - 16.812) <= 1e-3, "PSNR hand case");
    std::vector<std::uint64_t> counts{2, 1, 1};
    v.require(first_order_entropy(counts) == 1.5, "entropy {2,1,1} == 1.5");
    auto pt = [](double br, double db) {
        RDPoint q;
        q.bit_rate = br;
        q.psnr = Psnr{db, false};
        return q;
    };
    std::vector<RDPoint> base{pt(2.0, 80.0), pt(4.0, 90.0)};
    const double red = relative_reduction_at_equal_psnr(base, pt(2.5, 85.0));
    v.require(std::fabs(red - 16.7) <= 0.1, "equal-PSNR reduction 16.7%");

    // Bit-rate accounting against the physical file.
    SynthSpec spec;
    spec.dims = {32, 32, 32};
    auto fs = gen_synthetic(spec, 4);
    PipelineConfig cfg;
    cfg.train.epochs = 3;
    auto out = neurlz_compress(fs, cfg);
    TempDir tmp;
    save_container(tmp / "m.nlz", out.container);
    const auto file_bits = std::filesystem::file_size(tmp / "m.nlz") * 8;
    auto sizes = container_sizes(out.container);
    v.require(sizes.total_bits == file_bits, "container bits == file size");
    std::uint64_t payload = 0, model = 0, coords = 0;
    for (const auto& r : out.reports) {
        payload += r.payload_bits;
        model += r.model_bits;
        coords += r.coords_bits;
    }
    v.require(payload == sizes.payload_bits && model == sizes.model_bits && coords == sizes.coords_bits,
              "report bits == container sections");
    v.require(payload + model + coords + sizes.framing_bits == file_bits, "sections + framing == file size");
    v.note("PSNR " + fmt("%.4f", p) + ", reduction " + fmt("%.3f%%", red) + ", file " + std::to_string(file_bits) +
           " bits");
    return v;
}

double oracle_cos(std::span<const double> a, std::span<const double> b) {
    long double ab = 0, aa = 0, bb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ab += static_cast<long double>(a[i]) * b[i];
        aa += static_cast<long double>(a[i]) * a[i];
        bb += static_cast<long double>(b[i]) * b[i];
    }
    if (aa == 0 || bb == 0) return 0.0;
    return static_cast<double>(ab / std::sqrt(aa * bb));
}

Verdict c10_analysis() {
    Verdict v;
    const auto& full = enhancement_run(Variant::Full);
    const auto& data = enhancement_data();
    const auto& container = full.container;
    const auto& block = container.field("target").blocks.at(0);
    auto weights = deserialize_weights(block.weights);

    // Network inputs for slice 32 exactly as reconstruction builds them.
    std::vector<const std::vector<double>*> channels{&full.decompressed.get("target").values};
    for (const auto& a : container.field("target").aux) channels.push_back(&full.decompressed.get(a).values);
    auto stack = detail::build_inputs(channels, data.dims(), 0, block.input_norms, 16);
    const auto& x = stack.inputs.at(32);
    Tensor base(x.c, x.h, x.w);
    auto f = output_at(weights, 20, 37);
    const double delta = f(x, nullptr) - f(base, nullptr);
    auto attr = integrated_gradients(weights, x, base, 20, 37, 256);
    const double gap = std::fabs(attr.total() - delta);
    v.require(gap < 1e-3 * std::fabs(delta) + 1e-8, "IG completeness < 0.1%");
    v.note("IG rel gap " + fmt("%.2e", gap / std::fabs(delta)));

    // Sample conflicts on 16 slices against a double-loop oracle.
    const std::size_t n = 16;
    std::vector<Slice2D> xs, ys;
    const auto dec = slice_stack(full.decompressed.get("target"), 0);
    const auto orig = slice_stack(data.get("target"), 0);
    for (std::size_t s = 0; s < n; ++s) {
        xs.push_back(dec.slice(s));
        auto r = orig.slice(s);
        const auto d = dec.slice(s);
        for (std::size_t i = 0; i < r.values.size(); ++i) r.values[i] -= d.values[i];
        ys.push_back(r);
    }
    auto sm = sample_conflict_matrix(xs, ys);
    bool same = true;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            same = same && sm.at(i, j) == (i != j && std::fabs(oracle_cos(xs[i].values, xs[j].values)) > 0.95 &&
                                                   std::fabs(oracle_cos(ys[i].values, ys[j].values)) < 0.05
                                               ? 1
                                               : 0);
    v.require(same, "sample conflicts == oracle");

    // Gradient conflicts of the trained net on the same 16 slices.
    auto targets = detail::build_targets(data.get("target").values, full.decompressed.get("target").values,
                                         data.dims(), 0, block.abs, TargetMode::Residual, block.target_norm, 16);
    std::vector<Tensor> in16(stack.inputs.begin(), stack.inputs.begin() + n), t16(targets.begin(), targets.begin() + n);
    auto grads = per_sample_gradients(weights, in16, t16);
    auto gm = gradient_conflict_matrix(grads);
    bool gsame = true;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            gsame = gsame && gm.at(i, j) == (i != j && oracle_cos(grads[i], grads[j]) < 0.0 ? 1 : 0);
    v.require(gsame, "gradient conflicts == oracle");
    v.note("sample conflicts " + fmt("%.2f%%", sm.proportion_unordered()) + ", gradient conflicts " +
           fmt("%.2f%%", gm.proportion_unordered()));
    return v;
}

Verdict c11_determinism(const std::string& cli) {
    Verdict v;
    if (cli.empty() || !std::filesystem::exists(cli)) {
        v.require(false, "CLI binary not found: '" + cli + "'");
        return v;
    }
    TempDir tmp;
    auto run = [&](const std::string& args) {
        const std::string cmd = "'" + cli + "' " + args + " >/dev/null 2>&1";
        return std::system(cmd.c_str()) == 0;
    };
    const auto dir = (tmp / "data").string();
    v.require(run("gen-synth --out '" + dir + "' --dims 32,32,32 --seed 7"), "gen-synth");
    std::string fields;
    for (const char* n : {"aux0", "aux1", "target"})
        fields += std::string(" --field ") + n + "='" + dir + "/" + n + ".f32'";
    const std::string common = "compress" + fields + " --dims 32,32,32 --precision f32 --rel-eb 1e-2 --deterministic --seed 7";
    v.require(run(common + " -o '" + (tmp / "a.nlz").string() + "'"), "first compress");
    v.require(run(common + " -o '" + (tmp / "b.nlz").string() + "'"), "second compress");
    auto slurp = [](const std::filesystem::path& p) {
        std::ifstream in(p, std::ios::binary);
        return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    };
    const auto a = slurp(tmp / "a.nlz"), b = slurp(tmp / "b.nlz");
    v.require(!a.empty() && a == b, ".nlz files byte-identical");
    v.require(slurp(tmp / "a.manifest.json") == slurp(tmp / "b.manifest.json"), "manifests identical");
    v.note(std::to_string(a.size()) + " bytes each");
    return v;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"acceptance criteria"};
    std::string cli;
    std::vector<int> only;
    app.add_option("--cli", cli, "path to the nlz command-line tool");
    app.add_option("--only", only, "criteria to run")->delimiter(',');
    CLI11_PARSE(app, argc, argv);

    const std::map<int, std::pair<std::string, std::function<Verdict()>>> criteria{
        {1, {"avgBit exactness", c1_avgbit}},
        {2, {"strict 1x guarantee", [] { return bound_runs(BoundMode::Strict1x); }}},
        {3, {"regulated 2x guarantee", [] { return bound_runs(BoundMode::Regulated2x); }}},
        {4, {"baseline codec properties", c4_codec}},
        {5, {"gradient correctness", c5_gradients}},
        {6, {"enhancement efficacy", c6_efficacy}},
        {7, {"cross-field beats single-field", c7_cross_field}},
        {8, {"ablation directionality", c8_ablations}},
        {9, {"metrics formulas and accounting", c9_metrics}},
        {10, {"analysis oracles", c10_analysis}},
        {11, {"deterministic compress", [&] { return c11_determinism(cli); }}},
    };
    const std::set<int> wanted(only.begin(), only.end());
    int failed = 0;
    for (const auto& [id, entry] : criteria) {
        if (!wanted.empty() && !wanted.count(id)) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = entry.second();
        } catch (const std::exception& e) {
            v.pass = false;
            v.detail = std::string("exception: ") + e.what();
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("criterion %2d %-34s %s  (%.1fs) %s\n", id, entry.first.c_str(), v.pass ? "PASS" : "FAIL", secs,
                    v.detail.c_str());
        std::fflush(stdout);
        if (!v.pass) ++failed;
    }
    return failed == 0 ? 0 : 1;
}
