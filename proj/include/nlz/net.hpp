#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "nlz/bytes.hpp"
#include "nlz/field.hpp"
#include "nlz/layers.hpp"

namespace nlz {

enum class TargetMode : std::uint8_t { Residual = 0, Direct = 1 };

struct NetConfig {
    int in_channels = 1;
    int base_width = 4;
    int levels = 4;
    int kernel = 3;
    bool skip_connections = true;
    bool final_sigmoid = true;
    TargetMode target_mode = TargetMode::Residual;
    std::uint64_t seed = 0;

    void validate() const;
    bool operator==(const NetConfig&) const = default;
};

enum class LayerKind : std::uint8_t { Conv, ConvTranspose };

struct LayerSpec {
    std::string name;
    LayerKind kind = LayerKind::Conv;
    ConvGeom geom;
    std::size_t offset = 0;  // into the flat parameter vector
};

// Layer plan of the skip-connection encoder/decoder:
//   enc1..encL   3x3 stride-2 convs (in -> w, then w -> w)
//   decL..dec1   3x3 stride-2 transposed convs (w -> w), exact doubling
//   fuseL..fuse1 1x1 convs over [decoder output | skip feature] -> w
//                (skip feature = enc(l-1) output, or the raw input at l = 1)
//   out          1x1 conv w -> 1, then sigmoid
std::vector<LayerSpec> layer_plan(const NetConfig& config);
std::size_t param_count(const NetConfig& config);

struct Weights {
    NetConfig config;
    std::vector<double> params;
};

// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases.
Weights init_model(const NetConfig& config);

// Intermediate activations kept for the backward pass.
struct ForwardCache {
    std::vector<Tensor> enc_pre, enc_post;   // per level
    std::vector<Tensor> dec_pre, dec_post;   // indexed by level-1
    std::vector<Tensor> fuse_in, fuse_pre, fuse_post;  // indexed by level-1
    Tensor out_pre;
    Tensor input;
};

// Network graph for one configuration; parameters are supplied per call so a
// single instance serves training (mutating params) and inference. Input is
// C x H x W with H, W multiples of 2^levels; output is 1 x H x W.
class Enhancer {
public:
    explicit Enhancer(const NetConfig& config);

    Tensor forward(std::span<const double> params, const Tensor& input, ForwardCache* cache = nullptr) const;

    // Accumulates d(loss)/d(params) for one sample given d(loss)/d(output).
    // Returns d(loss)/d(input).
    Tensor backward(std::span<const double> params, const ForwardCache& cache, const Tensor& output,
                    const Tensor& grad_output, std::span<double> grad) const;

    const NetConfig& config() const { return config_; }
    const std::vector<LayerSpec>& plan() const { return plan_; }
    std::size_t param_count() const { return count_; }

private:
    std::size_t enc(int level) const { return static_cast<std::size_t>(level - 1); }
    std::size_t dec(int level) const {
        return static_cast<std::size_t>(config_.levels + 2 * (config_.levels - level));
    }
    std::size_t fuse(int level) const { return dec(level) + 1; }
    std::size_t out_layer() const { return plan_.size() - 1; }

    NetConfig config_;
    std::vector<LayerSpec> plan_;
    std::size_t count_ = 0;
};

Tensor forward(const Weights& weights, const Tensor& input);

// Residual from a regulated output: r = (2s - 1) * abs, so |r| < abs when s in (0, 1).
inline double denorm_residual(double s, double abs) { return (2.0 * s - 1.0) * abs; }

struct LossGrad {
    double loss = 0.0;
    std::vector<double> grad;
};

// Mean squared error over every output element of the batch, with the exact
// gradient w.r.t. all parameters.
LossGrad loss_and_grad(const Weights& weights, std::span<const Tensor> inputs, std::span<const Tensor> targets);

// Weight blob: "NLZW" | u16 version | u8 precision | u8 flags | u16 in_channels |
// u16 base_width | u8 levels | u8 kernel | u16 reserved | u64 seed | u64 count | values
inline constexpr std::size_t kWeightHeaderBytes = 32;
Bytes serialize_weights(const Weights& weights, Precision precision);
Weights deserialize_weights(std::span<const std::uint8_t> bytes, Precision* precision = nullptr);

// Parameters as they will read back from storage at `precision`.
Weights round_weights(const Weights& weights, Precision precision);

} // namespace nlz
