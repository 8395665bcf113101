#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "nlz/codec.hpp"
#include "nlz/container.hpp"
#include "nlz/error_control.hpp"
#include "nlz/field.hpp"
#include "nlz/metrics.hpp"
#include "nlz/net.hpp"
#include "nlz/train.hpp"

namespace nlz {

struct AblationFlags {
    bool single_field = false;    // drop aux channels
    bool no_skip = false;         // no skip concatenations
    bool direct_targets = false;  // predict normalized originals instead of residuals
};

struct PipelineConfig {
    double rel = 1e-2;
    std::uint32_t radius = kDefaultRadius;
    NetConfig net;      // in_channels, skip and target mode are filled in per field
    TrainConfig train;  // epochs == 0 keeps the initial weights
    BoundMode mode = BoundMode::Strict1x;
    int slice_axis = 0;
    // target -> aux fields; a field absent from the map uses every other field.
    std::map<std::string, std::vector<std::string>> aux_map;
    AblationFlags ablation;
    // Fields that receive an enhancer; empty means all of them.
    std::vector<std::string> targets;
    bool enhance = true;  // false: baseline codec only
    // Outlier threshold in multiples of abs. 1 gives the strict guarantee;
    // 2 reproduces the "beyond 2x" outlier accounting.
    double outlier_factor = 1.0;
    // Drop a block's enhancer when its storage cost outweighs its PSNR gain.
    bool fallback_if_no_gain = false;
    // Block extent along axis 0 (0 = whole field in one block).
    std::size_t block_extent = 0;
    std::uint64_t seed = 0;
    int jobs = 1;

    void validate(const FieldSet& fields) const;
};

struct FieldReport {
    std::string name;
    std::vector<std::string> aux;
    double abs = 0.0;  // of the first block
    bool enhanced = false;
    bool diverged = false;
    bool fallback = false;
    Psnr psnr_decompressed;
    Psnr psnr_initial;  // enhanced, before outlier replacement
    Psnr psnr_final;
    double max_error_decompressed = 0.0;
    double max_error_final = 0.0;
    std::uint64_t outliers = 0;
    double olr_percent = 0.0;
    std::uint64_t payload_bits = 0;
    std::uint64_t model_bits = 0;
    std::uint64_t coords_bits = 0;
    double baseline_bit_rate = 0.0;
    double bit_rate = 0.0;
    double entropy = 0.0;  // first-order entropy of quantization codes
    std::vector<TrainLog> logs;  // one per enhanced block
};

struct CompressOutcome {
    Container container;
    std::vector<FieldReport> reports;
    FieldSet decompressed;
    FieldSet final_fields;
};

// Seed for the field at `field_index`; block seeds are derived from it.
std::uint64_t derive_field_seed(std::uint64_t seed, std::size_t field_index);

CompressOutcome neurlz_compress(const FieldSet& fields, const PipelineConfig& config);

struct ReconstructOutcome {
    FieldSet decompressed;
    FieldSet final_fields;
    std::vector<FieldReport> reports;  // compression-time reports embedded in the container
};

ReconstructOutcome neurlz_reconstruct(const Container& container);

// Aux list actually used for `target` under `config`.
std::vector<std::string> resolve_aux(const FieldSet& fields, const std::string& target, const PipelineConfig& config);

std::string reports_to_json(const std::vector<FieldReport>& reports);
std::vector<FieldReport> reports_from_json(const std::string& json);

// Rate-distortion sweep for one target field. Bounds must be sorted
// descending. Emits a baseline and an enhanced point per bound, plus a
// single-field point when `include_sflz`.
std::vector<RDPoint> rd_curve(const FieldSet& fields, const std::string& target, const std::vector<double>& bounds,
                              const PipelineConfig& config, bool include_sflz = false);

// Pipeline building blocks, exposed for analysis and tests.
namespace detail {

struct InputStack {
    std::vector<Tensor> inputs;  // one per slice, padded
    CropBox crop;
};

// Normalized, padded network inputs for one block: channel 0 is the target's
// decompressed values, followed by the aux channels.
InputStack build_inputs(const std::vector<const std::vector<double>*>& channels, const Dims& block_dims, int axis,
                        const std::vector<NormParams>& norms, std::size_t multiple);

// Enhanced block values (before outlier replacement) from network outputs.
std::vector<double> enhance_block(const std::vector<Tensor>& outputs, const CropBox& crop,
                                  const std::vector<double>& decompressed, const Dims& block_dims, int axis,
                                  double abs, TargetMode target_mode, const NormParams& target_norm,
                                  Precision precision, BoundMode mode);

// Residual (or direct) training targets for one block, padded like the inputs.
std::vector<Tensor> build_targets(const std::vector<double>& original, const std::vector<double>& decompressed,
                                  const Dims& block_dims, int axis, double abs, TargetMode target_mode,
                                  const NormParams& target_norm, std::size_t multiple);

} // namespace detail

} // namespace nlz
