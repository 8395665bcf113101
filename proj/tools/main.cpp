// nlz: command-line front end for the enhanced error-bounded compressor.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "common.hpp"
#include "nlz/analysis.hpp"
#include "nlz/codec.hpp"
#include "nlz/container.hpp"
#include "nlz/error.hpp"
#include "nlz/external.hpp"
#include "nlz/metrics.hpp"
#include "nlz/pipeline.hpp"

using namespace nlz;
using namespace nlz::cli;

namespace {

// Flags shared by every command that reads raw fields.
struct InputFlags {
    std::vector<std::string> fields;
    std::string dims;
    std::string precision = "f32";
    std::string order = "row";

    void attach(CLI::App* app, bool required = true) {
        auto* f = app->add_option("--field", fields, "input field as NAME=PATH (repeatable)");
        auto* d = app->add_option("--dims", dims, "field dimensions D0,D1,D2 (last axis fastest)");
        if (required) {
            f->required();
            d->required();
        }
        app->add_option("--precision", precision, "f32 or f64")->check(CLI::IsMember({"f32", "f64"}));
        app->add_option("--order", order, "raw layout: row (C) or column (Fortran)")
            ->check(CLI::IsMember({"row", "column"}));
    }

    InputSpec spec() const {
        InputSpec s;
        for (const auto& f : fields) s.fields.push_back(parse_field_arg(f));
        s.dims = parse_dims(dims);
        s.precision = parse_precision(precision);
        s.order = order == "column" ? RawOrder::Column : RawOrder::Row;
        return s;
    }
};

// Flags that map onto PipelineConfig.
struct PipelineFlags {
    double rel = 1e-2;
    std::string mode = "strict";
    std::vector<std::string> aux;
    std::vector<std::string> targets;
    bool single_field = false, no_skip = false, direct = false, no_enhance = false, fallback = false;
    int epochs = 100, batch = 10, axis = 0, jobs = 1;
    double lr = 1e-2, outlier_factor = 1.0;
    std::string optimizer = "adam";
    std::uint32_t radius = kDefaultRadius;
    std::size_t block = 0;
    std::uint64_t seed = 0;
    bool deterministic = false;

    void attach(CLI::App* app, bool with_rel = true) {
        if (with_rel) app->add_option("--rel-eb", rel, "relative error bound");
        app->add_option("--mode", mode, "strict (1x, outlier coordinates) or regulated (2x, no coordinates)")
            ->check(CLI::IsMember({"strict", "regulated"}));
        app->add_option("--aux", aux, "TARGET=A,B: aux fields for one target (repeatable)");
        app->add_option("--targets", targets, "fields to enhance (default: all)")->delimiter(',');
        app->add_flag("--single-field", single_field, "no aux channels");
        app->add_flag("--no-skip", no_skip, "disable skip connections");
        app->add_flag("--direct-targets", direct, "learn normalized values instead of residuals");
        app->add_flag("--no-enhance", no_enhance, "baseline codec only");
        app->add_flag("--fallback", fallback, "drop an enhancer that costs more bits than its PSNR gain");
        app->add_option("--epochs", epochs, "training epochs")->check(CLI::NonNegativeNumber);
        app->add_option("--batch", batch, "mini-batch size")->check(CLI::PositiveNumber);
        app->add_option("--lr", lr, "initial learning rate (cosine annealed)")->check(CLI::PositiveNumber);
        app->add_option("--optimizer", optimizer, "adam or sgd")->check(CLI::IsMember({"adam", "sgd"}));
        app->add_option("--radius", radius, "quantization radius")->check(CLI::PositiveNumber);
        app->add_option("--axis", axis, "slicing axis")->check(CLI::Range(0, 2));
        app->add_option("--block", block, "block extent along axis 0 (0 = whole field)");
        app->add_option("--outlier-factor", outlier_factor, "outlier threshold in multiples of the bound");
        app->add_option("--seed", seed, "base seed");
        app->add_option("--jobs", jobs, "parallel fields")->check(CLI::PositiveNumber);
        app->add_flag("--deterministic", deterministic, "single job, byte-reproducible output");
    }

    PipelineConfig config() const {
        PipelineConfig c;
        c.rel = rel;
        c.radius = radius;
        c.mode = parse_bound_mode(mode);
        c.slice_axis = axis;
        for (const auto& a : aux) {
            const auto eq = a.find('=');
            if (eq == std::string::npos || eq == 0) throw UsageError("malformed --aux '" + a + "', expected T=A,B");
            auto& list = c.aux_map[a.substr(0, eq)];
            std::stringstream ss(a.substr(eq + 1));
            std::string name;
            while (std::getline(ss, name, ','))
                if (!name.empty()) list.push_back(name);
        }
        c.targets = targets;
        c.ablation = {single_field, no_skip, direct};
        c.enhance = !no_enhance;
        c.fallback_if_no_gain = fallback;
        c.outlier_factor = outlier_factor;
        c.block_extent = block;
        c.train.epochs = epochs;
        c.train.batch = batch;
        c.train.lr0 = lr;
        c.train.optimizer = optimizer == "sgd" ? OptimizerKind::Sgd : OptimizerKind::Adam;
        c.seed = seed;
        c.jobs = deterministic ? 1 : jobs;
        return c;
    }
};

Bytes read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw Error(ErrorKind::IoError, "cannot open " + p.string());
    return Bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void print_summary(const std::vector<FieldReport>& reports, const ContainerSizes& sizes, std::size_t points,
                   Precision precision) {
    std::printf("%-12s %11s %10s %10s %7s %8s %9s %9s\n", "field", "abs", "PSNR dec", "PSNR fin", "gain", "OLR%",
                "base bpp", "bpp");
    for (const auto& r : reports) {
        const double gain = r.psnr_final.value() - r.psnr_decompressed.value();
        std::printf("%-12s %11.4e %10s %10s %7.3f %8.4f %9.4f %9.4f%s\n", r.name.c_str(), r.abs,
                    r.psnr_decompressed.to_string().c_str(), r.psnr_final.to_string().c_str(),
                    std::isfinite(gain) ? gain : 0.0, r.olr_percent, r.baseline_bit_rate, r.bit_rate,
                    r.diverged ? "  (diverged)" : r.fallback ? "  (fallback)" : "");
    }
    const double orig_bits = static_cast<double>(points) * 8.0 * static_cast<double>(bytes_of(precision));
    std::printf("container %llu bytes, CR %.3f, model %llu bits, coords %llu bits\n",
                static_cast<unsigned long long>(sizes.total_bits / 8), compression_ratio(orig_bits, sizes.total_bits),
                static_cast<unsigned long long>(sizes.model_bits), static_cast<unsigned long long>(sizes.coords_bits));
}

// Compress and write the container; returns the container bytes.
Bytes compress_to(const InputSpec& input, const PipelineConfig& cfg, const std::filesystem::path& out, bool quiet,
                  std::vector<FieldReport>* reports = nullptr) {
    auto fields = load_fields(input);
    auto outcome = neurlz_compress(fields, cfg);
    auto bytes = write_container(outcome.container);
    std::ofstream f(out, std::ios::binary);
    if (!f) throw Error(ErrorKind::IoError, "cannot write " + out.string());
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw Error(ErrorKind::IoError, "short write to " + out.string());
    if (!quiet)
        print_summary(outcome.reports, container_sizes(outcome.container), fields.size() * num_points(fields.dims()),
                      fields.precision());
    if (reports) *reports = outcome.reports;
    return bytes;
}

json manifest(const InputSpec& input, const PipelineConfig& cfg, bool deterministic, const Bytes& container) {
    json seeds = json::object();
    for (std::size_t i = 0; i < input.fields.size(); ++i)
        seeds[input.fields[i].name] = derive_field_seed(cfg.seed, i);
    return {{"tool", {{"version", version_string()}, {"compiler", __VERSION__}, {"container_version", kContainerVersion}}},
            {"command", "compress"},
            {"deterministic", deterministic},
            {"config", config_to_json(cfg)},
            {"seeds", {{"base", cfg.seed}, {"fields", seeds}}},
            {"input", input_to_json(input, true)},
            {"output", {{"sha256", sha256_hex(container)}, {"bytes", container.size()}}}};
}

void store_fieldset(const FieldSet& fs, const std::filesystem::path& dir, const std::string& suffix) {
    std::filesystem::create_directories(dir);
    for (const auto& f : fs.fields()) store_raw(dir / (f.name + suffix + "." + to_string(f.precision)), f);
}

std::ostream* open_out(const std::string& path, std::ofstream& file) {
    if (path.empty() || path == "-") return &std::cout;
    file.open(path, std::ios::binary);
    if (!file) throw Error(ErrorKind::IoError, "cannot write " + path);
    return &file;
}

// Decompressed data (from a container or a fresh baseline pass) for analysis.
FieldSet decompressed_for_analysis(const FieldSet& originals, const std::string& container, double rel,
                                   std::optional<Container>* loaded) {
    if (!container.empty()) {
        *loaded = load_container(container);
        return neurlz_reconstruct(**loaded).decompressed;
    }
    PipelineConfig cfg;
    cfg.rel = rel;
    cfg.enhance = false;
    return neurlz_compress(originals, cfg).decompressed;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Error-bounded lossy compression with a learned cross-field enhancer"};
    app.require_subcommand(1);
    app.set_version_flag("--version", version_string());

    // gen-synth
    auto* gen = app.add_subcommand("gen-synth", "write the coupled synthetic dataset as raw files");
    std::string gen_out, gen_dims = "64,64,64", gen_prec = "f32";
    std::uint64_t gen_seed = 1;
    SynthSpec synth;
    gen->add_option("--out", gen_out, "output directory")->required();
    gen->add_option("--dims", gen_dims, "dimensions D0,D1,D2");
    gen->add_option("--precision", gen_prec)->check(CLI::IsMember({"f32", "f64"}));
    gen->add_option("--seed", gen_seed);
    gen->add_option("--num-aux", synth.num_aux)->check(CLI::PositiveNumber);
    gen->add_option("--alpha", synth.alpha);
    gen->add_option("--beta", synth.beta);
    gen->add_option("--gamma", synth.gamma, "weight of the target-only noise");
    gen->add_option("--smoothing-radius", synth.smoothing_radius)->check(CLI::PositiveNumber);
    gen->add_option("--smoothing-passes", synth.smoothing_passes)->check(CLI::PositiveNumber);

    // compress
    auto* comp = app.add_subcommand("compress", "compress fields into a .nlz container");
    InputFlags comp_in;
    PipelineFlags comp_cfg;
    std::string comp_out;
    bool comp_quiet = false;
    comp_in.attach(comp);
    comp_cfg.attach(comp);
    comp->add_option("-o,--output", comp_out, "output .nlz path")->required();
    comp->add_flag("-q,--quiet", comp_quiet, "no summary table");

    // reconstruct
    auto* rec = app.add_subcommand("reconstruct", "decode a container into raw fields");
    std::string rec_in, rec_out;
    bool rec_dec = false;
    rec->add_option("container", rec_in)->required();
    rec->add_option("--out", rec_out, "output directory")->required();
    rec->add_flag("--decompressed", rec_dec, "also write the baseline decompressed fields (*.dec)");

    // eval
    auto* ev = app.add_subcommand("eval", "compare original and reconstructed fields (CSV)");
    InputFlags ev_orig;
    std::vector<std::string> ev_recon;
    std::string ev_container, ev_csv;
    ev_orig.attach(ev);
    ev->add_option("--reconstructed", ev_recon, "NAME=PATH of the reconstruction (repeatable)")->required();
    ev->add_option("--container", ev_container, "container, for bit rate and ratio");
    ev->add_option("--csv", ev_csv, "output file (default stdout)");

    // rdcurve
    auto* rd = app.add_subcommand("rdcurve", "rate-distortion sweep for one field (CSV)");
    InputFlags rd_in;
    PipelineFlags rd_cfg;
    std::string rd_target, rd_csv;
    std::vector<double> rd_bounds{1e-2, 1e-3};
    bool rd_sflz = false;
    rd_in.attach(rd);
    rd_cfg.attach(rd, false);
    rd->add_option("--target", rd_target, "field to sweep")->required();
    rd->add_option("--bounds", rd_bounds, "relative bounds, descending")->delimiter(',');
    rd->add_flag("--sflz", rd_sflz, "add single-field enhanced points");
    rd->add_option("--csv", rd_csv, "output file (default stdout)");

    // analyze
    auto* an = app.add_subcommand("analyze", "attribution and conflict diagnostics");
    an->require_subcommand(1);
    auto* an_ig = an->add_subcommand("ig", "integrated-gradients attribution of one predicted value");
    std::string ig_container, ig_target, ig_csv, ig_pgm;
    std::size_t ig_block = 0, ig_slice = 0, ig_row = 0, ig_col = 0;
    int ig_steps = 256;
    an_ig->add_option("--container", ig_container)->required();
    an_ig->add_option("--target", ig_target)->required();
    an_ig->add_option("--block", ig_block);
    an_ig->add_option("--slice", ig_slice, "slice index within the block");
    an_ig->add_option("--row", ig_row);
    an_ig->add_option("--col", ig_col);
    an_ig->add_option("--steps", ig_steps)->check(CLI::PositiveNumber);
    an_ig->add_option("--csv", ig_csv, "attribution CSV (default stdout)");
    an_ig->add_option("--pgm-prefix", ig_pgm, "write one PGM per input channel");

    auto* an_cf = an->add_subcommand("conflicts", "sample or gradient conflict matrix");
    InputFlags cf_in;
    std::string cf_target, cf_container, cf_kind = "sample", cf_csv, cf_pgm;
    std::size_t cf_count = 16;
    double cf_rel = 1e-2, cf_hi = 0.95, cf_lo = 0.05, cf_threshold = 0.0;
    cf_in.attach(an_cf);
    an_cf->add_option("--target", cf_target)->required();
    an_cf->add_option("--kind", cf_kind)->check(CLI::IsMember({"sample", "gradient"}));
    an_cf->add_option("--count", cf_count, "number of leading slices")->check(CLI::Range(2, 1 << 20));
    an_cf->add_option("--container", cf_container, "decompressed data and model source");
    an_cf->add_option("--rel-eb", cf_rel, "bound for a baseline pass when no container is given");
    an_cf->add_option("--hi", cf_hi, "input similarity threshold");
    an_cf->add_option("--lo", cf_lo, "target similarity threshold");
    an_cf->add_option("--threshold", cf_threshold, "gradient cosine threshold");
    an_cf->add_option("--csv", cf_csv, "matrix CSV (default stdout)");
    an_cf->add_option("--pgm", cf_pgm, "matrix image");

    // export-pgm
    auto* ex = app.add_subcommand("export-pgm", "write one slice of a raw field as PGM");
    std::string ex_input, ex_dims, ex_prec = "f32", ex_out;
    int ex_axis = 0;
    std::size_t ex_slice = 0;
    bool ex_log = false;
    ex->add_option("--input", ex_input)->required();
    ex->add_option("--dims", ex_dims)->required();
    ex->add_option("--precision", ex_prec)->check(CLI::IsMember({"f32", "f64"}));
    ex->add_option("--axis", ex_axis)->check(CLI::Range(0, 2));
    ex->add_option("--slice", ex_slice);
    ex->add_option("--out", ex_out)->required();
    ex->add_flag("--log", ex_log, "log-scale values before mapping to grey levels");

    // external
    auto* ext = app.add_subcommand("external", "run an external compressor through the bound-checking adapter");
    InputFlags ext_in;
    double ext_rel = 1e-2;
    std::string ext_cmd;
    ext_in.attach(ext);
    ext->add_option("--rel-eb", ext_rel);
    ext->add_option("--cmd", ext_cmd,
                    "template with {in} {out} {cmp} {d0} {d1} {d2} {abs}; default $NLZ_EXTERNAL_CMD");

    // replay
    auto* rp = app.add_subcommand("replay", "re-run a compression from its manifest");
    std::string rp_manifest, rp_out;
    bool rp_verify = false;
    rp->add_option("manifest", rp_manifest)->required();
    rp->add_option("-o,--output", rp_out)->required();
    rp->add_flag("--verify", rp_verify, "fail unless the output matches the recorded digest");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        // --help and --version are parse "errors" with code 0
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        if (*gen) {
            synth.dims = parse_dims(gen_dims);
            synth.precision = parse_precision(gen_prec);
            auto fs = gen_synthetic(synth, gen_seed);
            store_fieldset(fs, gen_out, "");
            json info{{"dims", synth.dims},
                      {"precision", gen_prec},
                      {"seed", gen_seed},
                      {"num_aux", synth.num_aux},
                      {"alpha", synth.alpha},
                      {"beta", synth.beta},
                      {"gamma", synth.gamma},
                      {"smoothing_radius", synth.smoothing_radius},
                      {"smoothing_passes", synth.smoothing_passes},
                      {"fields", json::array()}};
            for (const auto& f : fs.fields()) info["fields"].push_back(f.name + "." + gen_prec);
            write_text(std::filesystem::path(gen_out) / "synth.json", info.dump(2) + "\n");
            std::printf("wrote %zu fields to %s\n", fs.size(), gen_out.c_str());
        } else if (*comp) {
            const auto input = comp_in.spec();
            const auto cfg = comp_cfg.config();
            const auto bytes = compress_to(input, cfg, comp_out, comp_quiet);
            write_text(manifest_path_for(comp_out), manifest(input, cfg, comp_cfg.deterministic, bytes).dump(2) + "\n");
        } else if (*rec) {
            auto c = load_container(rec_in);
            auto out = neurlz_reconstruct(c);
            store_fieldset(out.final_fields, rec_out, "");
            if (rec_dec) store_fieldset(out.decompressed, rec_out, ".dec");
            write_text(std::filesystem::path(rec_out) / "report.json",
                       json::parse(reports_to_json(out.reports)).dump(2) + "\n");
            std::printf("reconstructed %zu fields into %s\n", out.final_fields.size(), rec_out.c_str());
        } else if (*ev) {
            const auto spec = ev_orig.spec();
            auto orig = load_fields(spec);
            InputSpec rspec = spec;
            rspec.fields.clear();
            for (const auto& r : ev_recon) rspec.fields.push_back(parse_field_arg(r));
            auto recon = load_fields(rspec);
            std::optional<ContainerSizes> sizes;
            if (!ev_container.empty()) sizes = container_sizes(load_container(ev_container));
            std::ofstream file;
            auto& os = *open_out(ev_csv, file);
            os << "field,psnr,mse,max_abs_error,value_range,bit_rate,compression_ratio\n";
            const std::size_t total = orig.size() * num_points(orig.dims());
            for (const auto& r : recon.fields()) {
                const auto& o = orig.get(r.name);
                char buf[512];
                std::string rate = ",";
                if (sizes) {
                    char rb[64];
                    std::snprintf(rb, sizeof rb, "%.6f,%.6f", double(sizes->total_bits) / double(total),
                                  compression_ratio(double(total) * 8.0 * double(bytes_of(o.precision)),
                                                    double(sizes->total_bits)));
                    rate = rb;
                }
                std::snprintf(buf, sizeof buf, "%s,%s,%.9g,%.9g,%.9g,%s\n", r.name.c_str(),
                              psnr(o.values, r.values).to_string().c_str(), mse(o.values, r.values),
                              max_abs_error(o.values, r.values), value_range(o.values), rate.c_str());
                os << buf;
            }
        } else if (*rd) {
            auto fields = load_fields(rd_in.spec());
            auto pts = rd_curve(fields, rd_target, rd_bounds, rd_cfg.config(), rd_sflz);
            std::ofstream file;
            write_rd_csv(*open_out(rd_csv, file), pts);
        } else if (*an_ig) {
            auto c = load_container(ig_container);
            auto rec_out = neurlz_reconstruct(c);
            const auto& frec = c.field(ig_target);
            if (ig_block >= frec.blocks.size()) throw UsageError("--block out of range");
            const auto& b = frec.blocks[ig_block];
            if (!b.has_enhancer()) throw UsageError("block has no enhancer to attribute");
            auto w = deserialize_weights(b.weights);
            const Dims full = c.header.dims;
            const Dims bd{b.extent, full[1], full[2]};
            const std::size_t plane = full[1] * full[2];
            std::vector<std::vector<double>> chans;
            chans.push_back({});
            const auto& tv = rec_out.decompressed.get(ig_target).values;
            chans[0].assign(tv.begin() + b.start * plane, tv.begin() + (b.start + b.extent) * plane);
            if (static_cast<std::size_t>(w.config.in_channels) > 1)
                for (const auto& a : frec.aux) {
                    const auto& av = rec_out.decompressed.get(a).values;
                    chans.emplace_back(av.begin() + b.start * plane, av.begin() + (b.start + b.extent) * plane);
                }
            std::vector<const std::vector<double>*> ptrs;
            for (const auto& ch : chans) ptrs.push_back(&ch);
            auto stack = detail::build_inputs(ptrs, bd, c.header.slice_axis, b.input_norms,
                                              std::size_t{1} << w.config.levels);
            if (ig_slice >= stack.inputs.size()) throw UsageError("--slice out of range");
            const auto& x = stack.inputs[ig_slice];
            if (ig_row >= stack.crop.h || ig_col >= stack.crop.w) throw UsageError("--row/--col outside the slice");
            Tensor base(x.c, x.h, x.w);
            auto attr = integrated_gradients(w, x, base, ig_row, ig_col, ig_steps);
            for (auto& ch : attr.channels) ch = crop(ch, stack.crop);
            std::ofstream file;
            write_attribution_csv(*open_out(ig_csv, file), attr);
            if (!ig_pgm.empty())
                for (std::size_t ci = 0; ci < attr.channels.size(); ++ci)
                    write_pgm(ig_pgm + "_c" + std::to_string(ci) + ".pgm", attr.channels[ci]);
            auto f = output_at(w, ig_row, ig_col);
            std::fprintf(stderr, "sum of attributions %.9g, f(x) - f(0) %.9g\n", attr.total(),
                         f(x, nullptr) - f(base, nullptr));
        } else if (*an_cf) {
            auto orig = load_fields(cf_in.spec());
            std::optional<Container> loaded;
            auto dec = decompressed_for_analysis(orig, cf_container, cf_rel, &loaded);
            ConflictMatrix m;
            if (cf_kind == "sample") {
                const auto ds = slice_stack(dec.get(cf_target), 0);
                const auto os = slice_stack(orig.get(cf_target), 0);
                if (cf_count > ds.count) throw UsageError("--count exceeds the number of slices");
                std::vector<Slice2D> xs, ys;
                for (std::size_t s = 0; s < cf_count; ++s) {
                    xs.push_back(ds.slice(s));
                    auto r = os.slice(s);
                    for (std::size_t i = 0; i < r.values.size(); ++i) r.values[i] -= xs.back().values[i];
                    ys.push_back(std::move(r));
                }
                m = sample_conflict_matrix(xs, ys, cf_hi, cf_lo);
            } else {
                if (!loaded) throw UsageError("gradient conflicts need --container with a trained model");
                const auto& frec = loaded->field(cf_target);
                const auto& b = frec.blocks.at(0);
                if (!b.has_enhancer()) throw UsageError("first block of the target has no enhancer");
                auto w = deserialize_weights(b.weights);
                const Dims full = loaded->header.dims;
                const Dims bd{b.extent, full[1], full[2]};
                const std::size_t plane = full[1] * full[2];
                auto block_of = [&](const std::vector<double>& v) {
                    return std::vector<double>(v.begin() + b.start * plane, v.begin() + (b.start + b.extent) * plane);
                };
                std::vector<std::vector<double>> chans{block_of(dec.get(cf_target).values)};
                if (w.config.in_channels > 1)
                    for (const auto& a : frec.aux) chans.push_back(block_of(dec.get(a).values));
                std::vector<const std::vector<double>*> ptrs;
                for (const auto& ch : chans) ptrs.push_back(&ch);
                const std::size_t mult = std::size_t{1} << w.config.levels;
                const int axis = loaded->header.slice_axis;
                auto stack = detail::build_inputs(ptrs, bd, axis, b.input_norms, mult);
                auto targets = detail::build_targets(block_of(orig.get(cf_target).values), chans[0], bd, axis, b.abs,
                                                     w.config.target_mode, b.target_norm, mult);
                if (cf_count > stack.inputs.size()) throw UsageError("--count exceeds the number of slices");
                std::vector<Tensor> xs(stack.inputs.begin(), stack.inputs.begin() + cf_count);
                std::vector<Tensor> ts(targets.begin(), targets.begin() + cf_count);
                m = gradient_conflict_matrix(per_sample_gradients(w, xs, ts), cf_threshold);
            }
            std::ofstream file;
            write_conflict_csv(*open_out(cf_csv, file), m);
            if (!cf_pgm.empty()) write_conflict_pgm(cf_pgm, m);
            std::fprintf(stderr, "%zu conflicting pairs of %zu; %.3f%% unordered, %.3f%% ordered\n",
                         m.conflict_pairs(), m.n * (m.n - 1) / 2, m.proportion_unordered(), m.proportion_ordered());
        } else if (*ex) {
            const auto d = parse_dims(ex_dims);
            auto f = load_raw(ex_input, d, parse_precision(ex_prec));
            auto st = slice_stack(f, ex_axis);
            if (ex_slice >= st.count) throw UsageError("--slice out of range");
            write_pgm(ex_out, st.slice(ex_slice), ex_log);
        } else if (*ext) {
            if (ext_cmd.empty())
                if (const char* env = std::getenv("NLZ_EXTERNAL_CMD")) ext_cmd = env;
            if (ext_cmd.empty()) throw UsageError("no --cmd given and NLZ_EXTERNAL_CMD is unset");
            auto fields = load_fields(ext_in.spec());
            std::printf("field,abs,max_abs_error,psnr,payload_bytes,compression_ratio\n");
            for (const auto& f : fields.fields()) {
                const auto b = abs_bound(ext_rel, f);
                auto r = external_compress(ext_cmd, f, b);
                const double orig_bits = double(f.size()) * 8.0 * double(bytes_of(f.precision));
                std::printf("%s,%.9g,%.9g,%s,%zu,%s\n", f.name.c_str(), b.abs,
                            max_abs_error(f.values, r.decompressed.values),
                            psnr(f.values, r.decompressed.values).to_string().c_str(), r.payload.size(),
                            r.payload.empty() ? "" : std::to_string(compression_ratio(orig_bits, 8.0 * r.payload.size())).c_str());
            }
        } else if (*rp) {
            auto m = json::parse(read_file(rp_manifest));
            const auto input = input_from_json(m.at("input"));
            for (const auto& f : m.at("input").at("fields")) {
                const auto have = sha256_hex(std::filesystem::path(f.at("path").get<std::string>()));
                if (have != f.at("sha256"))
                    throw Error(ErrorKind::IoError, "input '" + f.at("name").get<std::string>() +
                                                        "' differs from the recorded digest");
            }
            const auto cfg = config_from_json(m.at("config"));
            const auto bytes = compress_to(input, cfg, rp_out, true);
            const auto digest = sha256_hex(bytes);
            std::printf("%s  %s\n", digest.c_str(), rp_out.c_str());
            if (rp_verify && digest != m.at("output").at("sha256")) {
                std::fprintf(stderr, "replay output differs from the recorded container\n");
                return 1;
            }
        }
    } catch (const UsageError& e) {
        std::fprintf(stderr, "usage error: %s\n", e.what());
        return 2;
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
