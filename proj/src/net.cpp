#include "nlz/net.hpp"

#include <cmath>
#include <cstring>

#include "nlz/error.hpp"
#include "nlz/rng.hpp"

namespace nlz {

void NetConfig::validate() const {
    if (in_channels < 1) throw Error(ErrorKind::ConfigError, "in_channels must be >= 1");
    if (base_width < 1) throw Error(ErrorKind::ConfigError, "base_width must be >= 1");
    if (levels < 1) throw Error(ErrorKind::ConfigError, "levels must be >= 1");
    if (levels > 12) throw Error(ErrorKind::ConfigError, "levels must be <= 12");
    if (kernel != 3) throw Error(ErrorKind::ConfigError, "only 3x3 kernels are supported");
    if (in_channels > 0xffff || base_width > 0xffff) throw Error(ErrorKind::ConfigError, "channel count too large");
}

std::vector<LayerSpec> layer_plan(const NetConfig& cfg) {
    cfg.validate();
    const auto c = static_cast<std::size_t>(cfg.in_channels);
    const auto w = static_cast<std::size_t>(cfg.base_width);
    const auto k = static_cast<std::size_t>(cfg.kernel);
    std::vector<LayerSpec> plan;
    std::size_t offset = 0;
    auto push = [&](std::string name, LayerKind kind, ConvGeom g) {
        plan.push_back({std::move(name), kind, g, offset});
        offset += g.param_count();
    };
    for (int l = 1; l <= cfg.levels; ++l)
        push("enc" + std::to_string(l), LayerKind::Conv, {l == 1 ? c : w, w, k, 2, 1, 0});
    for (int l = cfg.levels; l >= 1; --l) {
        push("dec" + std::to_string(l), LayerKind::ConvTranspose, {w, w, k, 2, 1, 1});
        std::size_t skip = cfg.skip_connections ? (l == 1 ? c : w) : 0;
        push("fuse" + std::to_string(l), LayerKind::Conv, {w + skip, w, 1, 1, 0, 0});
    }
    push("out", LayerKind::Conv, {w, 1, 1, 1, 0, 0});
    return plan;
}

std::size_t param_count(const NetConfig& config) {
    auto plan = layer_plan(config);
    return plan.back().offset + plan.back().geom.param_count();
}

Weights init_model(const NetConfig& config) {
    Weights wt;
    wt.config = config;
    auto plan = layer_plan(config);
    wt.params.assign(param_count(config), 0.0);
    Rng rng(config.seed);
    for (const auto& layer : plan) {
        // fan_in counts the taps feeding one output sample.
        const std::size_t fan_in = layer.kind == LayerKind::Conv
                                       ? layer.geom.in_ch * layer.geom.kernel * layer.geom.kernel
                                       : layer.geom.in_ch * layer.geom.kernel * layer.geom.kernel /
                                             (layer.geom.stride * layer.geom.stride);
        const double bound = 1.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(fan_in, 1)));
        for (std::size_t i = 0; i < layer.geom.weight_count(); ++i)
            wt.params[layer.offset + i] = rng.uniform(-bound, bound);
    }
    return wt;
}

Enhancer::Enhancer(const NetConfig& config) : config_(config), plan_(layer_plan(config)) {
    count_ = plan_.back().offset + plan_.back().geom.param_count();
}

namespace {

std::span<const double> slice_params(std::span<const double> params, const LayerSpec& l) {
    return params.subspan(l.offset, l.geom.param_count());
}

std::span<double> slice_grad(std::span<double> grad, const LayerSpec& l) {
    return grad.subspan(l.offset, l.geom.param_count());
}

Tensor apply(const LayerSpec& l, std::span<const double> params, const Tensor& in) {
    return l.kind == LayerKind::Conv ? conv2d_forward(in, slice_params(params, l), l.geom)
                                     : conv_transpose2d_forward(in, slice_params(params, l), l.geom);
}

Tensor apply_backward(const LayerSpec& l, std::span<const double> params, std::span<double> grad, const Tensor& in,
                      const Tensor& grad_out) {
    return l.kind == LayerKind::Conv
               ? conv2d_backward(in, grad_out, slice_params(params, l), slice_grad(grad, l), l.geom)
               : conv_transpose2d_backward(in, grad_out, slice_params(params, l), slice_grad(grad, l), l.geom);
}

void add_into(Tensor& acc, const Tensor& g) {
    for (std::size_t i = 0; i < acc.size(); ++i) acc.data[i] += g.data[i];
}

} // namespace

Tensor Enhancer::forward(std::span<const double> params, const Tensor& input, ForwardCache* cache) const {
    if (params.size() != count_) throw Error(ErrorKind::ShapeMismatch, "parameter vector length mismatch");
    if (input.c != static_cast<std::size_t>(config_.in_channels))
        throw Error(ErrorKind::ShapeMismatch, "input has " + std::to_string(input.c) + " channels, model expects " +
                                                  std::to_string(config_.in_channels));
    const std::size_t unit = std::size_t{1} << config_.levels;
    if (input.h == 0 || input.w == 0 || input.h % unit != 0 || input.w % unit != 0)
        throw Error(ErrorKind::ShapeMismatch, "input spatial dims must be positive multiples of " + std::to_string(unit));

    const int L = config_.levels;
    ForwardCache local;
    ForwardCache& c = cache ? *cache : local;
    c = ForwardCache{};
    c.input = input;
    c.enc_pre.resize(L);
    c.enc_post.resize(L);
    c.dec_pre.resize(L);
    c.dec_post.resize(L);
    c.fuse_in.resize(L);
    c.fuse_pre.resize(L);
    c.fuse_post.resize(L);

    for (int l = 1; l <= L; ++l) {
        const Tensor& prev = l == 1 ? input : c.enc_post[l - 2];
        c.enc_pre[l - 1] = apply(plan_[enc(l)], params, prev);
        c.enc_post[l - 1] = leaky_relu_forward(c.enc_pre[l - 1]);
    }
    for (int l = L; l >= 1; --l) {
        const Tensor& h = l == L ? c.enc_post[L - 1] : c.fuse_post[l];
        c.dec_pre[l - 1] = apply(plan_[dec(l)], params, h);
        c.dec_post[l - 1] = leaky_relu_forward(c.dec_pre[l - 1]);
        if (config_.skip_connections) {
            const Tensor& skip = l == 1 ? input : c.enc_post[l - 2];
            c.fuse_in[l - 1] = concat_channels(c.dec_post[l - 1], skip);
        } else {
            c.fuse_in[l - 1] = c.dec_post[l - 1];
        }
        c.fuse_pre[l - 1] = apply(plan_[fuse(l)], params, c.fuse_in[l - 1]);
        c.fuse_post[l - 1] = leaky_relu_forward(c.fuse_pre[l - 1]);
    }
    c.out_pre = apply(plan_[out_layer()], params, c.fuse_post[0]);
    return config_.final_sigmoid ? sigmoid_forward(c.out_pre) : c.out_pre;
}

Tensor Enhancer::backward(std::span<const double> params, const ForwardCache& c, const Tensor& output,
                          const Tensor& grad_output, std::span<double> grad) const {
    if (grad.size() != count_) throw Error(ErrorKind::ShapeMismatch, "gradient vector length mismatch");
    if (!grad_output.same_shape(output)) throw Error(ErrorKind::ShapeMismatch, "output gradient shape mismatch");
    const int L = config_.levels;

    Tensor g = config_.final_sigmoid ? sigmoid_backward(output, grad_output) : grad_output;
    Tensor g_h = apply_backward(plan_[out_layer()], params, grad, c.fuse_post[0], g);

    Tensor g_input(c.input.c, c.input.h, c.input.w);
    std::vector<Tensor> g_enc(static_cast<std::size_t>(L));
    for (int l = 1; l <= L; ++l) {
        const auto& e = c.enc_post[l - 1];
        g_enc[l - 1] = Tensor(e.c, e.h, e.w);
    }

    for (int l = 1; l <= L; ++l) {
        Tensor g_fpre = leaky_relu_backward(c.fuse_pre[l - 1], g_h);
        Tensor g_fin = apply_backward(plan_[fuse(l)], params, grad, c.fuse_in[l - 1], g_fpre);
        Tensor g_dpost;
        if (config_.skip_connections) {
            Tensor g_skip;
            split_channels(g_fin, c.dec_post[l - 1].c, g_dpost, g_skip);
            add_into(l == 1 ? g_input : g_enc[l - 2], g_skip);
        } else {
            g_dpost = std::move(g_fin);
        }
        Tensor g_dpre = leaky_relu_backward(c.dec_pre[l - 1], g_dpost);
        const Tensor& dec_in = l == L ? c.enc_post[L - 1] : c.fuse_post[l];
        g_h = apply_backward(plan_[dec(l)], params, grad, dec_in, g_dpre);
    }
    add_into(g_enc[L - 1], g_h);

    for (int l = L; l >= 1; --l) {
        Tensor g_pre = leaky_relu_backward(c.enc_pre[l - 1], g_enc[l - 1]);
        const Tensor& in = l == 1 ? c.input : c.enc_post[l - 2];
        Tensor g_in = apply_backward(plan_[enc(l)], params, grad, in, g_pre);
        add_into(l == 1 ? g_input : g_enc[l - 2], g_in);
    }
    return g_input;
}

Tensor forward(const Weights& weights, const Tensor& input) {
    return Enhancer(weights.config).forward(weights.params, input);
}

LossGrad loss_and_grad(const Weights& weights, std::span<const Tensor> inputs, std::span<const Tensor> targets) {
    if (inputs.size() != targets.size() || inputs.empty())
        throw Error(ErrorKind::ShapeMismatch, "batch inputs and targets must be non-empty and equal in count");
    Enhancer net(weights.config);
    LossGrad out;
    out.grad.assign(net.param_count(), 0.0);
    std::size_t total = 0;
    for (const auto& t : targets) total += t.size();
    const double scale = 1.0 / static_cast<double>(total);

    ForwardCache cache;
    for (std::size_t b = 0; b < inputs.size(); ++b) {
        Tensor y = net.forward(weights.params, inputs[b], &cache);
        if (!y.same_shape(targets[b])) throw Error(ErrorKind::ShapeMismatch, "target shape does not match output");
        Tensor gy(y.c, y.h, y.w);
        for (std::size_t i = 0; i < y.size(); ++i) {
            const double d = y.data[i] - targets[b].data[i];
            out.loss += d * d * scale;
            gy.data[i] = 2.0 * d * scale;
        }
        net.backward(weights.params, cache, y, gy, out.grad);
    }
    return out;
}

Bytes serialize_weights(const Weights& weights, Precision precision) {
    const auto& cfg = weights.config;
    cfg.validate();
    if (weights.params.size() != param_count(cfg)) throw Error(ErrorKind::CorruptWeights, "parameter count mismatch");
    ByteWriter w;
    w.put_bytes(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>("NLZW"), 4));
    w.put<std::uint16_t>(1);
    w.put<std::uint8_t>(static_cast<std::uint8_t>(precision));
    std::uint8_t flags = (cfg.skip_connections ? 1 : 0) | (cfg.final_sigmoid ? 2 : 0) |
                         (cfg.target_mode == TargetMode::Direct ? 4 : 0);
    w.put<std::uint8_t>(flags);
    w.put<std::uint16_t>(static_cast<std::uint16_t>(cfg.in_channels));
    w.put<std::uint16_t>(static_cast<std::uint16_t>(cfg.base_width));
    w.put<std::uint8_t>(static_cast<std::uint8_t>(cfg.levels));
    w.put<std::uint8_t>(static_cast<std::uint8_t>(cfg.kernel));
    w.put<std::uint16_t>(0);
    w.put<std::uint64_t>(cfg.seed);
    w.put<std::uint64_t>(weights.params.size());
    w.put_bytes(encode_raw(weights.params, precision));
    return w.take();
}

Weights deserialize_weights(std::span<const std::uint8_t> bytes, Precision* precision) {
    ByteReader r(bytes, ErrorKind::CorruptWeights);
    auto magic = r.get_bytes(4);
    if (std::memcmp(magic.data(), "NLZW", 4) != 0) throw Error(ErrorKind::CorruptWeights, "bad weight blob magic");
    if (r.get<std::uint16_t>() != 1) throw Error(ErrorKind::CorruptWeights, "unsupported weight layout version");
    auto prec = r.get<std::uint8_t>();
    if (prec > 1) throw Error(ErrorKind::CorruptWeights, "unknown precision tag");
    auto flags = r.get<std::uint8_t>();
    Weights wt;
    auto& cfg = wt.config;
    cfg.skip_connections = flags & 1;
    cfg.final_sigmoid = flags & 2;
    cfg.target_mode = (flags & 4) ? TargetMode::Direct : TargetMode::Residual;
    cfg.in_channels = r.get<std::uint16_t>();
    cfg.base_width = r.get<std::uint16_t>();
    cfg.levels = r.get<std::uint8_t>();
    cfg.kernel = r.get<std::uint8_t>();
    r.get<std::uint16_t>();
    cfg.seed = r.get<std::uint64_t>();
    const auto count = r.get<std::uint64_t>();
    try {
        cfg.validate();
    } catch (const Error& e) {
        throw Error(ErrorKind::CorruptWeights, e.what());
    }
    if (count != param_count(cfg)) throw Error(ErrorKind::CorruptWeights, "parameter count does not match layout");
    const auto p = static_cast<Precision>(prec);
    if (r.remaining() != count * bytes_of(p)) throw Error(ErrorKind::CorruptWeights, "weight blob length mismatch");
    wt.params = decode_raw(r.get_bytes(r.remaining()), p);
    for (double v : wt.params)
        if (!std::isfinite(v)) throw Error(ErrorKind::CorruptWeights, "non-finite weight");
    if (precision) *precision = p;
    return wt;
}

Weights round_weights(const Weights& weights, Precision precision) {
    Weights out = weights;
    for (double& v : out.params) v = round_to(precision, v);
    return out;
}

} // namespace nlz
