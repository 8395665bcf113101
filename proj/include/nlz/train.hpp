#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "nlz/layers.hpp"
#include "nlz/net.hpp"

namespace nlz {

enum class OptimizerKind : std::uint8_t { Adam, Sgd };

struct TrainConfig {
    int epochs = 100;
    int batch = 10;
    double lr0 = 1e-2;
    OptimizerKind optimizer = OptimizerKind::Adam;
    std::uint64_t seed = 0;

    void validate() const;
};

struct EpochRecord {
    double loss = 0.0;
    double psnr = 0.0;         // of the enhanced block after this epoch
    double olr_percent = 0.0;  // outlier rate of the enhanced block after this epoch
};

struct TrainLog {
    std::vector<EpochRecord> epochs;
};

struct TrainSet {
    std::vector<Tensor> inputs;   // C x H x W, normalized
    std::vector<Tensor> targets;  // 1 x H x W, in [0, 1]
};

// Called after every epoch with the network output for every sample;
// returns (psnr, olr_percent) of the resulting enhanced block.
using EpochMonitor = std::function<std::pair<double, double>(std::span<const Tensor> outputs)>;

struct TrainResult {
    Weights weights;
    TrainLog log;
};

// lr(t) = lr0 * (1 + cos(pi * t / T)) / 2
double cosine_lr(double lr0, int epoch, int total_epochs);

// Mini-batch training with a seeded per-epoch shuffle. Deterministic for fixed
// seeds. Throws Diverged (naming the epoch) if the loss becomes non-finite.
TrainResult train(const TrainSet& data, const NetConfig& net_config, const TrainConfig& train_config,
                  const EpochMonitor& monitor = {});

// Network output for every sample of `inputs`.
std::vector<Tensor> predict_all(const Weights& weights, std::span<const Tensor> inputs);

} // namespace nlz
