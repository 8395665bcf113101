#include "nlz/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <set>

#include <json.hpp>

#include "nlz/error.hpp"

namespace nlz {

using json = nlohmann::json;

void PipelineConfig::validate(const FieldSet& fields) const {
    if (fields.empty()) throw Error(ErrorKind::ConfigError, "no input fields");
    if (!(rel > 0.0)) throw Error(ErrorKind::ConfigError, "relative error bound must be > 0");
    if (slice_axis < 0 || slice_axis > 2) throw Error(ErrorKind::ConfigError, "slice axis must be 0, 1 or 2");
    if (train.epochs < 0) throw Error(ErrorKind::ConfigError, "epochs must be >= 0");
    if (train.epochs > 0) train.validate();
    if (!(outlier_factor >= 1.0)) throw Error(ErrorKind::ConfigError, "outlier factor must be >= 1");
    if (jobs < 1) throw Error(ErrorKind::ConfigError, "jobs must be >= 1");
    for (const auto& [target, aux] : aux_map) {
        if (!fields.contains(target)) throw Error(ErrorKind::ConfigError, "aux map names unknown field '" + target + "'");
        for (const auto& a : aux) {
            if (!fields.contains(a)) throw Error(ErrorKind::ConfigError, "aux map names unknown field '" + a + "'");
            if (a == target) throw Error(ErrorKind::ConfigError, "field '" + a + "' cannot be its own aux");
        }
    }
    for (const auto& t : targets)
        if (!fields.contains(t)) throw Error(ErrorKind::ConfigError, "unknown target field '" + t + "'");
}

std::vector<std::string> resolve_aux(const FieldSet& fields, const std::string& target, const PipelineConfig& config) {
    if (config.ablation.single_field) return {};
    if (auto it = config.aux_map.find(target); it != config.aux_map.end()) return it->second;
    std::vector<std::string> aux;
    for (const auto& f : fields.fields())
        if (f.name != target) aux.push_back(f.name);
    return aux;
}

namespace detail {

InputStack build_inputs(const std::vector<const std::vector<double>*>& channels, const Dims& block_dims, int axis,
                        const std::vector<NormParams>& norms, std::size_t multiple) {
    if (channels.size() != norms.size() || channels.empty())
        throw Error(ErrorKind::ShapeMismatch, "one norm per input channel required");
    InputStack out;
    std::vector<SliceStack> stacks;
    for (const auto* ch : channels) {
        ScalarField tmp("", block_dims, Precision::F64, *ch);
        stacks.push_back(slice_stack(tmp, axis));
    }
    const auto& st0 = stacks.front();
    out.crop = {st0.h, st0.w};
    const std::size_t ph = padded_extent(st0.h, multiple), pw = padded_extent(st0.w, multiple);
    for (std::size_t s = 0; s < st0.count; ++s) {
        Tensor t(channels.size(), ph, pw);
        for (std::size_t c = 0; c < channels.size(); ++c) {
            Slice2D sl = stacks[c].slice(s);
            for (double& v : sl.values) v = norms[c].forward(v);
            auto padded = pad_reflect(sl, multiple);
            std::copy(padded.slice.values.begin(), padded.slice.values.end(),
                      t.data.begin() + static_cast<std::ptrdiff_t>(c * ph * pw));
        }
        out.inputs.push_back(std::move(t));
    }
    return out;
}

std::vector<Tensor> build_targets(const std::vector<double>& original, const std::vector<double>& decompressed,
                                  const Dims& block_dims, int axis, double abs, TargetMode target_mode,
                                  const NormParams& target_norm, std::size_t multiple) {
    std::vector<double> t(original.size());
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (target_mode == TargetMode::Residual)
            t[i] = std::clamp((original[i] - decompressed[i] + abs) / (2.0 * abs), 0.0, 1.0);
        else
            t[i] = std::clamp(target_norm.forward(original[i]), 0.0, 1.0);
    }
    auto stack = slice_stack(ScalarField("", block_dims, Precision::F64, std::move(t)), axis);
    std::vector<Tensor> out;
    for (std::size_t s = 0; s < stack.count; ++s) {
        auto padded = pad_reflect(stack.slice(s), multiple);
        Tensor tt(1, padded.slice.h, padded.slice.w);
        tt.data = std::move(padded.slice.values);
        out.push_back(std::move(tt));
    }
    return out;
}

namespace {

double step_toward(double x, double target, Precision p) {
    if (p == Precision::F32) return std::nextafter(static_cast<float>(x), static_cast<float>(target));
    return std::nextafter(x, target);
}

// Pull x into [center - abs, center + abs] as evaluated at storage precision.
double clamp_band(double x, double center, double abs, Precision p) {
    if (std::fabs(x - center) <= abs) return x;
    double t = round_to(p, x > center ? center + abs : center - abs);
    while (std::fabs(t - center) > abs) t = step_toward(t, center, p);
    return t;
}

} // namespace

std::vector<double> enhance_block(const std::vector<Tensor>& outputs, const CropBox& crop,
                                  const std::vector<double>& decompressed, const Dims& block_dims, int axis,
                                  double abs, TargetMode target_mode, const NormParams& target_norm,
                                  Precision precision, BoundMode mode) {
    SliceStack st;
    st.axis = axis;
    st.count = outputs.size();
    st.h = crop.h;
    st.w = crop.w;
    st.values.reserve(st.count * st.h * st.w);
    for (const auto& o : outputs) {
        if (o.c != 1 || o.h < crop.h || o.w < crop.w) throw Error(ErrorKind::ShapeMismatch, "network output shape");
        for (std::size_t r = 0; r < crop.h; ++r)
            for (std::size_t c = 0; c < crop.w; ++c) st.values.push_back(o(0, r, c));
    }
    auto s = reassemble(st, block_dims);
    std::vector<double> out(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double xp = decompressed[i];
        double x = target_mode == TargetMode::Residual ? round_to(precision, xp + denorm_residual(s[i], abs))
                                                       : round_to(precision, target_norm.inverse(s[i]));
        if (mode == BoundMode::Regulated2x) x = clamp_band(x, xp, abs, precision);
        out[i] = x;
    }
    return out;
}

} // namespace detail

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

struct BlockSpan {
    std::size_t start;
    std::size_t extent;
};

std::vector<BlockSpan> plan_blocks(const Dims& dims, std::size_t block_extent) {
    std::vector<BlockSpan> blocks;
    const std::size_t step = block_extent == 0 ? dims[0] : block_extent;
    for (std::size_t s = 0; s < dims[0]; s += step) blocks.push_back({s, std::min(step, dims[0] - s)});
    return blocks;
}

std::vector<double> slab(const std::vector<double>& values, const Dims& dims, const BlockSpan& b) {
    const std::size_t plane = dims[1] * dims[2];
    return {values.begin() + static_cast<std::ptrdiff_t>(b.start * plane),
            values.begin() + static_cast<std::ptrdiff_t>((b.start + b.extent) * plane)};
}

void put_slab(std::vector<double>& values, const Dims& dims, const BlockSpan& b, const std::vector<double>& part) {
    std::copy(part.begin(), part.end(), values.begin() + static_cast<std::ptrdiff_t>(b.start * dims[1] * dims[2]));
}

struct BaselineBlock {
    Bytes payload;
    std::vector<double> decompressed;
    ErrorBound bound;
    std::vector<std::uint32_t> codes;
};

struct EnhancedBlock {
    BlockRecord record;
    std::vector<double> initial;
    std::vector<double> final_values;
    std::uint64_t outliers = 0;
    bool fallback = false;
    TrainLog log;
};

double psnr_or_zero(std::span<const double> x, std::span<const double> y) {
    try {
        return psnr(x, y).value();
    } catch (const Error&) {
        return 0.0;
    }
}

EnhancedBlock enhance_one(const FieldSet& fields, const std::map<std::string, std::vector<BaselineBlock>>& baseline,
                          const std::string& target, const std::vector<std::string>& aux, std::size_t block_index,
                          const BlockSpan& span, const PipelineConfig& cfg, std::uint64_t field_seed) {
    const Dims& dims = fields.dims();
    const Dims bdims{span.extent, dims[1], dims[2]};
    const Precision prec = fields.precision();
    const auto& base = baseline.at(target)[block_index];
    const auto original = slab(fields.get(target).values, dims, span);
    const double abs = base.bound.abs;

    NetConfig net = cfg.net;
    net.in_channels = static_cast<int>(1 + aux.size());
    net.skip_connections = !cfg.ablation.no_skip;
    net.target_mode = cfg.ablation.direct_targets ? TargetMode::Direct : TargetMode::Residual;
    net.seed = splitmix64(field_seed ^ (2 * block_index));
    TrainConfig tc = cfg.train;
    tc.seed = splitmix64(field_seed ^ (2 * block_index + 1));

    std::vector<const std::vector<double>*> channels{&base.decompressed};
    for (const auto& a : aux) channels.push_back(&baseline.at(a)[block_index].decompressed);
    std::vector<NormParams> norms;
    for (const auto* ch : channels) norms.push_back(NormParams::of(*ch));
    const std::size_t multiple = std::size_t{1} << net.levels;
    const int axis = cfg.slice_axis;
    const NormParams target_norm =
        net.target_mode == TargetMode::Direct ? NormParams::of(original) : NormParams{0.0, 0.0};

    auto stack = detail::build_inputs(channels, bdims, axis, norms, multiple);
    const double threshold = cfg.outlier_factor * abs;

    auto finish = [&](const std::vector<Tensor>& outputs, std::vector<double>& initial, std::vector<double>& final_vals,
                      OutlierSet& outliers) {
        initial = detail::enhance_block(outputs, stack.crop, base.decompressed, bdims, axis, abs, net.target_mode,
                                        target_norm, prec, cfg.mode);
        if (cfg.mode == BoundMode::Strict1x) {
            outliers = find_outliers(original, initial, bdims, threshold);
            final_vals = apply_replacement(initial, base.decompressed, outliers);
        } else {
            outliers = OutlierSet{{}, bdims};
            final_vals = initial;
        }
    };

    EnhancedBlock eb;
    eb.record.start = span.start;
    eb.record.extent = span.extent;
    eb.record.abs = abs;
    eb.record.payload = base.payload;
    eb.record.weight_precision = prec;
    eb.record.input_norms = norms;
    eb.record.target_norm = target_norm;

    Weights weights;
    try {
        if (tc.epochs > 0) {
            TrainSet data;
            data.inputs = stack.inputs;
            data.targets = detail::build_targets(original, base.decompressed, bdims, axis, abs, net.target_mode,
                                                 target_norm, multiple);
            EpochMonitor monitor = [&](std::span<const Tensor> outputs) {
                std::vector<Tensor> outs(outputs.begin(), outputs.end());
                std::vector<double> initial, final_vals;
                OutlierSet o;
                finish(outs, initial, final_vals, o);
                const auto n_out = cfg.mode == BoundMode::Strict1x
                                       ? o.size()
                                       : find_outliers(original, final_vals, bdims, threshold).size();
                return std::make_pair(psnr_or_zero(original, final_vals), olr_percent(n_out, original.size()));
            };
            auto result = train(data, net, tc, monitor);
            weights = std::move(result.weights);
            eb.log = std::move(result.log);
        } else {
            weights = init_model(net);
        }
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::Diverged) throw;
        eb.record.diverged = true;
        eb.record.input_norms.clear();
        eb.initial = base.decompressed;
        eb.final_values = base.decompressed;
        return eb;
    }

    // Inference runs on the weights exactly as they will be read back.
    Weights stored = round_weights(weights, prec);
    auto outputs = predict_all(stored, stack.inputs);
    OutlierSet outliers;
    finish(outputs, eb.initial, eb.final_values, outliers);
    eb.outliers = outliers.size();
    eb.record.weights = serialize_weights(stored, prec);
    if (cfg.mode == BoundMode::Strict1x) {
        eb.record.coords_present = true;
        eb.record.outliers = pack_coords(outliers);
    }

    if (cfg.fallback_if_no_gain) {
        // About 6.02 dB of PSNR per bit per point for a uniform quantizer.
        const double gain_db = psnr_or_zero(original, eb.final_values) - psnr_or_zero(original, base.decompressed);
        const double overhead_rate = static_cast<double>((eb.record.weights.size() + eb.record.outliers.size()) * 8) /
                                     static_cast<double>(original.size());
        if (overhead_rate > gain_db / 6.02) {
            eb.fallback = true;
            eb.record.weights.clear();
            eb.record.outliers.clear();
            eb.record.coords_present = false;
            eb.record.input_norms.clear();
            eb.outliers = 0;
            eb.initial = base.decompressed;
            eb.final_values = base.decompressed;
        }
    }
    return eb;
}

json psnr_json(const Psnr& p) { return p.infinite ? json("inf") : json(p.db); }
Psnr psnr_from(const json& j) { return j.is_string() ? Psnr::inf() : Psnr{j.get<double>(), false}; }

// Per-block epoch traces as [[loss, psnr, olr], ...]; an exact fit logs "inf".
json logs_json(const std::vector<TrainLog>& logs) {
    json out = json::array();
    for (const auto& log : logs) {
        json rows = json::array();
        for (const auto& e : log.epochs)
            rows.push_back({e.loss, std::isinf(e.psnr) ? json("inf") : json(e.psnr), e.olr_percent});
        out.push_back(std::move(rows));
    }
    return out;
}

std::vector<TrainLog> logs_from(const json& j) {
    std::vector<TrainLog> out;
    for (const auto& rows : j) {
        TrainLog log;
        for (const auto& e : rows)
            log.epochs.push_back({e.at(0).get<double>(),
                                  e.at(1).is_string() ? std::numeric_limits<double>::infinity() : e.at(1).get<double>(),
                                  e.at(2).get<double>()});
        out.push_back(std::move(log));
    }
    return out;
}

} // namespace

std::string reports_to_json(const std::vector<FieldReport>& reports) {
    json arr = json::array();
    for (const auto& r : reports) {
        arr.push_back({{"name", r.name},
                       {"aux", r.aux},
                       {"abs", r.abs},
                       {"enhanced", r.enhanced},
                       {"diverged", r.diverged},
                       {"fallback", r.fallback},
                       {"psnr_decompressed", psnr_json(r.psnr_decompressed)},
                       {"psnr_initial", psnr_json(r.psnr_initial)},
                       {"psnr_final", psnr_json(r.psnr_final)},
                       {"max_error_decompressed", r.max_error_decompressed},
                       {"max_error_final", r.max_error_final},
                       {"outliers", r.outliers},
                       {"olr_percent", r.olr_percent},
                       {"payload_bits", r.payload_bits},
                       {"model_bits", r.model_bits},
                       {"coords_bits", r.coords_bits},
                       {"baseline_bit_rate", r.baseline_bit_rate},
                       {"bit_rate", r.bit_rate},
                       {"entropy", r.entropy},
                       {"logs", logs_json(r.logs)}});
    }
    return arr.dump();
}

std::vector<FieldReport> reports_from_json(const std::string& text) {
    std::vector<FieldReport> out;
    if (text.empty()) return out;
    for (const auto& j : json::parse(text)) {
        FieldReport r;
        r.name = j.at("name");
        r.aux = j.at("aux").get<std::vector<std::string>>();
        r.abs = j.at("abs");
        r.enhanced = j.at("enhanced");
        r.diverged = j.at("diverged");
        r.fallback = j.at("fallback");
        r.psnr_decompressed = psnr_from(j.at("psnr_decompressed"));
        r.psnr_initial = psnr_from(j.at("psnr_initial"));
        r.psnr_final = psnr_from(j.at("psnr_final"));
        r.max_error_decompressed = j.at("max_error_decompressed");
        r.max_error_final = j.at("max_error_final");
        r.outliers = j.at("outliers");
        r.olr_percent = j.at("olr_percent");
        r.payload_bits = j.at("payload_bits");
        r.model_bits = j.at("model_bits");
        r.coords_bits = j.at("coords_bits");
        r.baseline_bit_rate = j.at("baseline_bit_rate");
        r.bit_rate = j.at("bit_rate");
        r.entropy = j.at("entropy");
        if (j.contains("logs")) r.logs = logs_from(j.at("logs"));
        out.push_back(std::move(r));
    }
    return out;
}

namespace {

Psnr safe_psnr(std::span<const double> x, std::span<const double> y) {
    try {
        return psnr(x, y);
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::DegenerateRange) throw;
        return {0.0, false};
    }
}

} // namespace

std::uint64_t derive_field_seed(std::uint64_t seed, std::size_t field_index) {
    return splitmix64(seed + 0x100000001b3ull * (field_index + 1));
}

CompressOutcome neurlz_compress(const FieldSet& fields, const PipelineConfig& cfg) {
    cfg.validate(fields);
    const Dims& dims = fields.dims();
    const Precision prec = fields.precision();
    const auto blocks = plan_blocks(dims, cfg.block_extent);
    for (const auto& f : fields.fields()) check_finite(f.values);

    // Baseline compression of every block of every field; aux channels need
    // the decompressed data of all fields.
    std::map<std::string, std::vector<BaselineBlock>> baseline;
    for (const auto& f : fields.fields()) {
        auto& list = baseline[f.name];
        for (const auto& b : blocks) {
            ScalarField part(f.name, {b.extent, dims[1], dims[2]}, prec, slab(f.values, dims, b));
            auto bound = abs_bound(cfg.rel, part);
            auto cr = compress_block(part, bound, cfg.radius);
            list.push_back({cr.payload.serialize(), std::move(cr.decompressed.values), bound,
                            std::move(cr.quantized.codes)});
        }
    }

    std::set<std::string> targets(cfg.targets.begin(), cfg.targets.end());
    auto is_target = [&](const std::string& n) { return cfg.enhance && (targets.empty() || targets.count(n)); };

    struct FieldWork {
        std::vector<std::string> aux;
        std::vector<EnhancedBlock> blocks;
    };
    std::vector<FieldWork> work(fields.size());
    auto run_field = [&](std::size_t fi) {
        const auto& f = fields.fields()[fi];
        FieldWork w;
        if (!is_target(f.name)) return w;
        w.aux = resolve_aux(fields, f.name, cfg);
        const std::uint64_t field_seed = derive_field_seed(cfg.seed, fi);
        for (std::size_t bi = 0; bi < blocks.size(); ++bi)
            w.blocks.push_back(enhance_one(fields, baseline, f.name, w.aux, bi, blocks[bi], cfg, field_seed));
        return w;
    };
    if (cfg.jobs > 1 && fields.size() > 1) {
        // Fields are independent; results are stored by index so output order is fixed.
        std::vector<std::future<FieldWork>> futures;
        std::size_t next = 0;
        while (next < fields.size() || !futures.empty()) {
            while (next < fields.size() && futures.size() < static_cast<std::size_t>(cfg.jobs)) {
                futures.push_back(std::async(std::launch::async, run_field, next));
                ++next;
            }
            const std::size_t done = next - futures.size();
            work[done] = futures.front().get();
            futures.erase(futures.begin());
        }
    } else {
        for (std::size_t fi = 0; fi < fields.size(); ++fi) work[fi] = run_field(fi);
    }

    CompressOutcome out;
    auto& c = out.container;
    c.header.dims = dims;
    c.header.precision = prec;
    c.header.slice_axis = static_cast<std::uint8_t>(cfg.slice_axis);
    c.header.mode = cfg.mode;
    c.header.rel = cfg.rel;

    for (std::size_t fi = 0; fi < fields.size(); ++fi) {
        const auto& f = fields.fields()[fi];
        const auto& base = baseline.at(f.name);
        FieldRecord rec;
        rec.name = f.name;
        FieldReport rep;
        rep.name = f.name;
        rep.abs = base.front().bound.abs;

        std::vector<double> decomp(f.size()), initial(f.size()), final_vals(f.size());
        std::vector<std::uint32_t> codes;
        for (std::size_t bi = 0; bi < blocks.size(); ++bi) {
            put_slab(decomp, dims, blocks[bi], base[bi].decompressed);
            codes.insert(codes.end(), base[bi].codes.begin(), base[bi].codes.end());
        }

        if (work[fi].blocks.empty()) {
            for (std::size_t bi = 0; bi < blocks.size(); ++bi) {
                BlockRecord br;
                br.start = blocks[bi].start;
                br.extent = blocks[bi].extent;
                br.abs = base[bi].bound.abs;
                br.payload = base[bi].payload;
                br.weight_precision = prec;
                rec.blocks.push_back(std::move(br));
            }
            initial = decomp;
            final_vals = decomp;
        } else {
            rec.aux = work[fi].aux;
            rep.aux = work[fi].aux;
            for (std::size_t bi = 0; bi < blocks.size(); ++bi) {
                auto& eb = work[fi].blocks[bi];
                put_slab(initial, dims, blocks[bi], eb.initial);
                put_slab(final_vals, dims, blocks[bi], eb.final_values);
                rep.outliers += eb.outliers;
                rep.diverged |= eb.record.diverged;
                rep.fallback |= eb.fallback;
                rep.enhanced |= eb.record.has_enhancer();
                if (eb.record.diverged || eb.fallback) c.header.flags |= kFlagFallback;
                rep.logs.push_back(std::move(eb.log));
                rec.blocks.push_back(std::move(eb.record));
            }
            if (!rep.enhanced) rec.aux.clear();
        }

        for (const auto& b : rec.blocks) {
            rep.payload_bits += b.payload.size() * 8ull;
            rep.model_bits += b.weights.size() * 8ull;
            rep.coords_bits += b.outliers.size() * 8ull;
        }
        rep.psnr_decompressed = safe_psnr(f.values, decomp);
        rep.psnr_initial = safe_psnr(f.values, initial);
        rep.psnr_final = safe_psnr(f.values, final_vals);
        rep.max_error_decompressed = max_abs_error(f.values, decomp);
        rep.max_error_final = max_abs_error(f.values, final_vals);
        rep.olr_percent = olr_percent(rep.outliers, f.size());
        rep.baseline_bit_rate = bit_rate(static_cast<double>(rep.payload_bits), 0.0, f.size());
        rep.bit_rate = bit_rate(static_cast<double>(rep.payload_bits),
                                static_cast<double>(rep.model_bits + rep.coords_bits), f.size());
        rep.entropy = symbol_entropy(codes);

        c.fields.push_back(std::move(rec));
        out.reports.push_back(std::move(rep));
        out.decompressed.add(ScalarField(f.name, dims, prec, std::move(decomp)));
        out.final_fields.add(ScalarField(f.name, dims, prec, std::move(final_vals)));
    }
    c.report_json = reports_to_json(out.reports);
    return out;
}

ReconstructOutcome neurlz_reconstruct(const Container& c) {
    const Dims& dims = c.header.dims;
    const Precision prec = c.header.precision;
    const int axis = c.header.slice_axis;
    ReconstructOutcome out;

    std::map<std::string, std::vector<std::vector<double>>> decomp_blocks;
    for (const auto& f : c.fields) {
        std::vector<double> values(num_points(dims));
        auto& parts = decomp_blocks[f.name];
        for (const auto& b : f.blocks) {
            auto p = CompressedPayload::deserialize(b.payload);
            if (p.dims != Dims{b.extent, dims[1], dims[2]} || b.start + b.extent > dims[0])
                throw Error(ErrorKind::CorruptPayload, "block payload dims disagree with container header");
            auto part = decompress_block(p, f.name);
            put_slab(values, dims, {b.start, b.extent}, part.values);
            parts.push_back(std::move(part.values));
        }
        out.decompressed.add(ScalarField(f.name, dims, prec, std::move(values)));
    }

    for (const auto& f : c.fields) {
        std::vector<double> values = out.decompressed.get(f.name).values;
        for (std::size_t bi = 0; bi < f.blocks.size(); ++bi) {
            const auto& b = f.blocks[bi];
            if (!b.has_enhancer()) continue;
            Precision wp;
            Weights w = deserialize_weights(b.weights, &wp);
            const Dims bdims{b.extent, dims[1], dims[2]};
            std::vector<const std::vector<double>*> channels{&decomp_blocks.at(f.name)[bi]};
            for (const auto& a : f.aux) channels.push_back(&decomp_blocks.at(a)[bi]);
            if (static_cast<int>(channels.size()) != w.config.in_channels)
                throw Error(ErrorKind::CorruptWeights, "weight layout does not match the field's input channels");
            auto stack = detail::build_inputs(channels, bdims, axis, b.input_norms, std::size_t{1} << w.config.levels);
            auto outputs = predict_all(w, stack.inputs);
            auto enhanced = detail::enhance_block(outputs, stack.crop, *channels.front(), bdims, axis, b.abs,
                                                  w.config.target_mode, b.target_norm, prec, c.header.mode);
            if (b.coords_present) {
                auto outliers = unpack_coords(b.outliers, bdims);
                enhanced = apply_replacement(enhanced, *channels.front(), outliers);
            }
            put_slab(values, dims, {b.start, b.extent}, enhanced);
        }
        out.final_fields.add(ScalarField(f.name, dims, prec, std::move(values)));
    }
    out.reports = reports_from_json(c.report_json);
    return out;
}

std::vector<RDPoint> rd_curve(const FieldSet& fields, const std::string& target, const std::vector<double>& bounds,
                              const PipelineConfig& config, bool include_sflz) {
    if (bounds.empty()) throw Error(ErrorKind::ConfigError, "rd curve needs at least one bound");
    for (std::size_t i = 1; i < bounds.size(); ++i)
        if (!(bounds[i] < bounds[i - 1])) throw Error(ErrorKind::ConfigError, "bounds must be sorted descending");
    if (!fields.contains(target)) throw Error(ErrorKind::ConfigError, "unknown target field '" + target + "'");

    std::vector<RDPoint> base_pts, enh_pts, sf_pts;
    for (double rel : bounds) {
        PipelineConfig cfg = config;
        cfg.rel = rel;
        cfg.targets = {target};
        cfg.enhance = true;
        auto run = neurlz_compress(fields, cfg);
        const FieldReport* rep = nullptr;
        for (const auto& r : run.reports)
            if (r.name == target) rep = &r;

        RDPoint b;
        b.label = "baseline";
        b.rel_bound = rel;
        b.payload_bits = rep->payload_bits;
        b.bit_rate = rep->baseline_bit_rate;
        b.psnr = rep->psnr_decompressed;
        base_pts.push_back(b);

        auto make = [&](const FieldReport& r, const char* label) {
            RDPoint p;
            p.label = label;
            p.rel_bound = rel;
            p.payload_bits = r.payload_bits;
            p.model_bits = r.model_bits;
            p.coords_bits = r.coords_bits;
            p.bit_rate = r.bit_rate;
            p.psnr = r.psnr_final;
            p.olr_percent = r.olr_percent;
            return p;
        };
        enh_pts.push_back(make(*rep, "neurlz"));

        if (include_sflz) {
            cfg.ablation.single_field = true;
            auto sf = neurlz_compress(fields, cfg);
            for (const auto& r : sf.reports)
                if (r.name == target) sf_pts.push_back(make(r, "sflz"));
        }
    }
    std::vector<RDPoint> out = base_pts;
    out.insert(out.end(), sf_pts.begin(), sf_pts.end());
    out.insert(out.end(), enh_pts.begin(), enh_pts.end());
    return out;
}

} // namespace nlz
