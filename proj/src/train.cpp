#include "nlz/train.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "nlz/error.hpp"
#include "nlz/rng.hpp"

namespace nlz {

void TrainConfig::validate() const {
    if (epochs < 1) throw Error(ErrorKind::ConfigError, "epochs must be >= 1");
    if (batch < 1) throw Error(ErrorKind::ConfigError, "batch must be >= 1");
    if (!(lr0 > 0.0)) throw Error(ErrorKind::ConfigError, "lr0 must be > 0");
}

double cosine_lr(double lr0, int epoch, int total_epochs) {
    return lr0 * (1.0 + std::cos(std::numbers::pi * epoch / total_epochs)) / 2.0;
}

namespace {

class Optimizer {
public:
    Optimizer(OptimizerKind kind, std::size_t n) : kind_(kind), m_(n, 0.0), v_(n, 0.0) {}

    void step(std::vector<double>& params, const std::vector<double>& grad, double lr) {
        if (kind_ == OptimizerKind::Sgd) {
            for (std::size_t i = 0; i < params.size(); ++i) params[i] -= lr * grad[i];
            return;
        }
        constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
        ++t_;
        const double c1 = 1.0 - std::pow(b1, t_);
        const double c2 = 1.0 - std::pow(b2, t_);
        for (std::size_t i = 0; i < params.size(); ++i) {
            m_[i] = b1 * m_[i] + (1.0 - b1) * grad[i];
            v_[i] = b2 * v_[i] + (1.0 - b2) * grad[i] * grad[i];
            params[i] -= lr * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps);
        }
    }

private:
    OptimizerKind kind_;
    std::vector<double> m_, v_;
    long t_ = 0;
};

} // namespace

std::vector<Tensor> predict_all(const Weights& weights, std::span<const Tensor> inputs) {
    Enhancer net(weights.config);
    std::vector<Tensor> out;
    out.reserve(inputs.size());
    for (const auto& x : inputs) out.push_back(net.forward(weights.params, x));
    return out;
}

TrainResult train(const TrainSet& data, const NetConfig& net_config, const TrainConfig& tc,
                  const EpochMonitor& monitor) {
    tc.validate();
    if (data.inputs.empty() || data.inputs.size() != data.targets.size())
        throw Error(ErrorKind::ShapeMismatch, "training set needs equal, non-zero numbers of inputs and targets");

    TrainResult result;
    result.weights = init_model(net_config);
    auto& params = result.weights.params;
    Enhancer net(net_config);
    Optimizer opt(tc.optimizer, params.size());
    Rng rng(tc.seed);

    std::vector<std::size_t> order(data.inputs.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<double> grad(params.size());
    ForwardCache cache;

    for (int epoch = 0; epoch < tc.epochs; ++epoch) {
        rng.shuffle(order);
        const double lr = cosine_lr(tc.lr0, epoch, tc.epochs);
        double epoch_loss = 0.0;
        std::size_t epoch_elems = 0;

        for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(tc.batch)) {
            const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(tc.batch));
            std::size_t total = 0;
            for (std::size_t b = start; b < end; ++b) total += data.targets[order[b]].size();
            const double scale = 1.0 / static_cast<double>(total);

            std::fill(grad.begin(), grad.end(), 0.0);
            double batch_sq = 0.0;
            for (std::size_t b = start; b < end; ++b) {
                const Tensor& x = data.inputs[order[b]];
                const Tensor& t = data.targets[order[b]];
                Tensor y = net.forward(params, x, &cache);
                if (!y.same_shape(t)) throw Error(ErrorKind::ShapeMismatch, "target shape does not match output");
                Tensor gy(y.c, y.h, y.w);
                for (std::size_t i = 0; i < y.size(); ++i) {
                    const double d = y.data[i] - t.data[i];
                    batch_sq += d * d;
                    gy.data[i] = 2.0 * d * scale;
                }
                net.backward(params, cache, y, gy, grad);
            }
            if (!std::isfinite(batch_sq))
                throw Error(ErrorKind::Diverged, "loss became non-finite in epoch " + std::to_string(epoch));
            epoch_loss += batch_sq;
            epoch_elems += total;
            opt.step(params, grad, lr);
            for (double p : params)
                if (!std::isfinite(p))
                    throw Error(ErrorKind::Diverged, "parameters became non-finite in epoch " + std::to_string(epoch));
        }

        EpochRecord rec;
        rec.loss = epoch_loss / static_cast<double>(epoch_elems);
        if (monitor) {
            auto outputs = predict_all(result.weights, data.inputs);
            std::tie(rec.psnr, rec.olr_percent) = monitor(outputs);
        } else {
            rec.psnr = std::numeric_limits<double>::quiet_NaN();
            rec.olr_percent = std::numeric_limits<double>::quiet_NaN();
        }
        result.log.epochs.push_back(rec);
    }
    return result;
}

} // namespace nlz
