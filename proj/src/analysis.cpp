#include "nlz/analysis.hpp"

#include <cmath>
#include <algorithm>
#include <cstdio>
#include <memory>
#include <fstream>

#include "nlz/error.hpp"

namespace nlz {

double AttributionMap::total() const {
    double s = 0.0;
    for (const auto& ch : channels)
        for (double v : ch.values) s += v;
    return s;
}

ScalarModel output_at(const Weights& weights, std::size_t row, std::size_t col) {
    auto net = std::make_shared<Enhancer>(weights.config);
    auto params = std::make_shared<std::vector<double>>(weights.params);
    return [net, params, row, col](const Tensor& x, Tensor* grad) {
        ForwardCache cache;
        Tensor out = net->forward(*params, x, grad ? &cache : nullptr);
        if (row >= out.h || col >= out.w) throw Error(ErrorKind::ShapeMismatch, "target coordinate outside output");
        if (grad) {
            Tensor g(1, out.h, out.w);
            g(0, row, col) = 1.0;
            std::vector<double> scratch(params->size());
            *grad = net->backward(*params, cache, out, g, scratch);
        }
        return out(0, row, col);
    };
}

AttributionMap integrated_gradients(const ScalarModel& f, const Tensor& input, const Tensor& baseline, int steps) {
    if (!input.same_shape(baseline)) throw Error(ErrorKind::ShapeMismatch, "input and baseline differ in shape");
    if (steps < 1) throw Error(ErrorKind::ConfigError, "steps must be >= 1");
    std::vector<double> sum(input.size(), 0.0);
    Tensor point(input.c, input.h, input.w), grad;
    for (int k = 0; k < steps; ++k) {
        const double a = static_cast<double>(k) / steps;
        for (std::size_t i = 0; i < input.size(); ++i)
            point.data[i] = baseline.data[i] + a * (input.data[i] - baseline.data[i]);
        f(point, &grad);
        if (!grad.same_shape(input)) throw Error(ErrorKind::ShapeMismatch, "model gradient shape");
        for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += grad.data[i];
    }
    AttributionMap m;
    m.steps = steps;
    const std::size_t plane = input.h * input.w;
    for (std::size_t c = 0; c < input.c; ++c) {
        Slice2D s{input.h, input.w, std::vector<double>(plane)};
        for (std::size_t p = 0; p < plane; ++p) {
            const std::size_t i = c * plane + p;
            s.values[p] = (input.data[i] - baseline.data[i]) * sum[i] / steps;
        }
        m.channels.push_back(std::move(s));
    }
    return m;
}

AttributionMap integrated_gradients(const Weights& weights, const Tensor& input, const Tensor& baseline,
                                    std::size_t row, std::size_t col, int steps) {
    if (row >= input.h || col >= input.w) throw Error(ErrorKind::ShapeMismatch, "target coordinate outside output");
    auto m = integrated_gradients(output_at(weights, row, col), input, baseline, steps);
    m.target_row = row;
    m.target_col = col;
    return m;
}

std::size_t ConflictMatrix::conflict_pairs() const {
    std::size_t c = 0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) c += at(i, j);
    return c;
}

double ConflictMatrix::proportion_unordered() const {
    if (n < 2) return 0.0;
    return 100.0 * static_cast<double>(conflict_pairs()) / (static_cast<double>(n) * (n - 1) / 2.0);
}

double ConflictMatrix::proportion_ordered() const {
    if (n == 0) return 0.0;
    return 100.0 * 2.0 * static_cast<double>(conflict_pairs()) / (static_cast<double>(n) * n);
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw Error(ErrorKind::ShapeMismatch, "vectors differ in length");
    double ab = 0.0, aa = 0.0, bb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ab += a[i] * b[i];
        aa += a[i] * a[i];
        bb += b[i] * b[i];
    }
    if (aa == 0.0 || bb == 0.0) return 0.0;
    return ab / (std::sqrt(aa) * std::sqrt(bb));
}

namespace {

ConflictMatrix empty_matrix(std::size_t n) {
    if (n < 2) throw Error(ErrorKind::ShapeMismatch, "conflict analysis needs at least two samples");
    ConflictMatrix m;
    m.n = n;
    m.adj.assign(n * n, 0);
    return m;
}

} // namespace

ConflictMatrix sample_conflict_matrix(std::span<const Slice2D> inputs, std::span<const Slice2D> targets, double hi,
                                      double lo) {
    if (inputs.size() != targets.size()) throw Error(ErrorKind::ShapeMismatch, "inputs and targets differ in count");
    auto m = empty_matrix(inputs.size());
    m.hi = hi;
    m.lo = lo;
    for (std::size_t i = 0; i < m.n; ++i) {
        if (inputs[i].values.size() != inputs[0].values.size() || targets[i].values.size() != targets[0].values.size())
            throw Error(ErrorKind::ShapeMismatch, "slices differ in shape");
    }
    for (std::size_t i = 0; i < m.n; ++i)
        for (std::size_t j = i + 1; j < m.n; ++j) {
            const double sx = std::fabs(cosine_similarity(inputs[i].values, inputs[j].values));
            const double sy = std::fabs(cosine_similarity(targets[i].values, targets[j].values));
            const std::uint8_t c = sx > hi && sy < lo;
            m.adj[i * m.n + j] = m.adj[j * m.n + i] = c;
        }
    return m;
}

ConflictMatrix gradient_conflict_matrix(std::span<const std::vector<double>> grads, double threshold) {
    auto m = empty_matrix(grads.size());
    m.threshold = threshold;
    std::vector<bool> zero(m.n);
    for (std::size_t i = 0; i < m.n; ++i) {
        if (grads[i].size() != grads[0].size()) throw Error(ErrorKind::ShapeMismatch, "gradients differ in length");
        zero[i] = std::all_of(grads[i].begin(), grads[i].end(), [](double v) { return v == 0.0; });
    }
    for (std::size_t i = 0; i < m.n; ++i)
        for (std::size_t j = i + 1; j < m.n; ++j) {
            if (zero[i] || zero[j]) continue;
            const std::uint8_t c = cosine_similarity(grads[i], grads[j]) < threshold;
            m.adj[i * m.n + j] = m.adj[j * m.n + i] = c;
        }
    return m;
}

std::vector<std::vector<double>> per_sample_gradients(const Weights& weights, std::span<const Tensor> inputs,
                                                      std::span<const Tensor> targets) {
    if (inputs.size() != targets.size()) throw Error(ErrorKind::ShapeMismatch, "inputs and targets differ in count");
    std::vector<std::vector<double>> out;
    out.reserve(inputs.size());
    for (std::size_t i = 0; i < inputs.size(); ++i)
        out.push_back(loss_and_grad(weights, inputs.subspan(i, 1), targets.subspan(i, 1)).grad);
    return out;
}

void write_conflict_csv(std::ostream& os, const ConflictMatrix& m) {
    for (std::size_t i = 0; i < m.n; ++i) {
        for (std::size_t j = 0; j < m.n; ++j) {
            if (j) os << ',';
            os << static_cast<int>(m.at(i, j));
        }
        os << '\n';
    }
}

void write_conflict_pgm(const std::filesystem::path& path, const ConflictMatrix& m) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
    out << "P5\n" << m.n << ' ' << m.n << "\n255\n";
    for (auto v : m.adj) out.put(static_cast<char>(v ? 0 : 255));
    if (!out) throw Error(ErrorKind::IoError, "short write to " + path.string());
}

void write_attribution_csv(std::ostream& os, const AttributionMap& a) {
    os << "channel,row,col,score\n";
    char buf[96];
    for (std::size_t c = 0; c < a.channels.size(); ++c) {
        const auto& s = a.channels[c];
        for (std::size_t r = 0; r < s.h; ++r)
            for (std::size_t k = 0; k < s.w; ++k) {
                std::snprintf(buf, sizeof buf, "%zu,%zu,%zu,%.17g\n", c, r, k, s(r, k));
                os << buf;
            }
    }
}

} // namespace nlz
