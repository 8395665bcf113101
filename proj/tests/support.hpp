#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "nlz/field.hpp"
#include "nlz/layers.hpp"
#include "nlz/net.hpp"
#include "nlz/rng.hpp"

namespace nlz::testing {

inline std::vector<double> random_values(Rng& rng, std::size_t n, double lo = -1.0, double hi = 1.0) {
    std::vector<double> v(n);
    for (auto& x : v) x = rng.uniform(lo, hi);
    return v;
}

inline Tensor random_tensor(Rng& rng, std::size_t c, std::size_t h, std::size_t w, double lo = -1.0, double hi = 1.0) {
    Tensor t(c, h, w);
    t.data = random_values(rng, t.size(), lo, hi);
    return t;
}

inline double rel_error(double a, double b) {
    const double scale = std::max({std::fabs(a), std::fabs(b), 1e-7});
    return std::fabs(a - b) / scale;
}

// Scalar objective with analytic gradients for parameters and input.
struct Objective {
    std::function<double(const std::vector<double>& params, const Tensor& input)> value;
    // Returns d/d(input); fills d/d(params).
    std::function<Tensor(const std::vector<double>& params, const Tensor& input, std::vector<double>& grad)> grad;
};

// Elementwise relative error between analytic and numeric gradients. Entries far
// below the gradient's own scale sit under finite-difference roundoff, so the
// denominator is floored at 1e-5 of the largest analytic component (or of
// `scale` when the caller knows a larger one).
inline double max_rel_error(const std::vector<double>& analytic, const std::vector<double>& numeric,
                            double scale = 0.0) {
    for (double a : analytic) scale = std::max(scale, std::fabs(a));
    const double floor = std::max(1e-5 * scale, 1e-12);
    double worst = 0.0;
    for (std::size_t i = 0; i < analytic.size(); ++i) {
        const double a = analytic[i], n = numeric[i];
        worst = std::max(worst, std::fabs(a - n) / std::max({std::fabs(a), std::fabs(n), floor}));
    }
    return worst;
}

struct GradCheck {
    double max_param_rel = 0.0;
    double max_input_rel = 0.0;
    double max_rel() const { return std::max(max_param_rel, max_input_rel); }
};

// Central finite differences with step eps against the analytic gradient.
inline GradCheck check_gradients(const Objective& f, std::vector<double> params, Tensor input, double eps = 1e-5) {
    GradCheck out;
    std::vector<double> g(params.size(), 0.0);
    Tensor gin = f.grad(params, input, g);
    auto numeric = [&](double& slot) {
        const double keep = slot;
        slot = keep + eps;
        const double up = f.value(params, input);
        slot = keep - eps;
        const double dn = f.value(params, input);
        slot = keep;
        return (up - dn) / (2 * eps);
    };
    std::vector<double> np(params.size()), ni(input.size());
    for (std::size_t i = 0; i < params.size(); ++i) np[i] = numeric(params[i]);
    for (std::size_t i = 0; i < input.size(); ++i) ni[i] = numeric(input.data[i]);
    // One scale for the joint (params, input) gradient.
    double scale = 0.0;
    for (double a : g) scale = std::max(scale, std::fabs(a));
    for (double a : gin.data) scale = std::max(scale, std::fabs(a));
    out.max_param_rel = max_rel_error(g, np, scale);
    out.max_input_rel = max_rel_error(gin.data, ni, scale);
    return out;
}

inline double dot(const Tensor& a, const Tensor& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a.data[i] * b.data[i];
    return s;
}

// Objectives of the form sum(weights_out * layer(input)).
inline Objective conv_objective(const ConvGeom& g, const Tensor& probe, bool transposed) {
    Objective f;
    f.value = [=](const std::vector<double>& p, const Tensor& x) {
        return dot(probe, transposed ? conv_transpose2d_forward(x, p, g) : conv2d_forward(x, p, g));
    };
    f.grad = [=](const std::vector<double>& p, const Tensor& x, std::vector<double>& grad) {
        return transposed ? conv_transpose2d_backward(x, probe, p, grad, g) : conv2d_backward(x, probe, p, grad, g);
    };
    return f;
}

inline Objective net_objective(const NetConfig& cfg, const Tensor& probe) {
    auto net = std::make_shared<Enhancer>(cfg);
    Objective f;
    f.value = [=](const std::vector<double>& p, const Tensor& x) { return dot(probe, net->forward(p, x)); };
    f.grad = [=](const std::vector<double>& p, const Tensor& x, std::vector<double>& grad) {
        ForwardCache cache;
        Tensor out = net->forward(p, x, &cache);
        return net->backward(p, cache, out, probe, grad);
    };
    return f;
}

// Scratch directory removed on scope exit.
class TempDir {
public:
    TempDir() {
        std::string tmpl = (std::filesystem::temp_directory_path() / "nlz-test-XXXXXX").string();
        if (!mkdtemp(tmpl.data())) throw std::runtime_error("mkdtemp failed");
        path_ = tmpl;
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

} // namespace nlz::testing
