#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <ostream>
#include <span>
#include <vector>

#include "nlz/field.hpp"
#include "nlz/layers.hpp"
#include "nlz/net.hpp"

namespace nlz {

struct AttributionMap {
    std::vector<Slice2D> channels;  // one map per input channel, input shape
    std::size_t target_row = 0;
    std::size_t target_col = 0;
    int steps = 0;

    double total() const;
};

// Scalar model with gradient: returns f(x) and, when `grad` is non-null,
// writes df/dx into it (same shape as x).
using ScalarModel = std::function<double(const Tensor& x, Tensor* grad)>;

// Network output at (row, col) of the single output channel.
ScalarModel output_at(const Weights& weights, std::size_t row, std::size_t col);

// Left Riemann sum along the straight path from baseline to input.
AttributionMap integrated_gradients(const ScalarModel& f, const Tensor& input, const Tensor& baseline, int steps);
AttributionMap integrated_gradients(const Weights& weights, const Tensor& input, const Tensor& baseline,
                                    std::size_t row, std::size_t col, int steps);

struct ConflictMatrix {
    std::size_t n = 0;
    std::vector<std::uint8_t> adj;  // n*n, row-major, symmetric, zero diagonal
    double hi = 0.0;                // sample conflicts: input similarity threshold
    double lo = 0.0;                // sample conflicts: target similarity threshold
    double threshold = 0.0;         // gradient conflicts: cosine threshold

    std::uint8_t at(std::size_t i, std::size_t j) const { return adj[i * n + j]; }
    std::size_t conflict_pairs() const;  // unordered off-diagonal pairs
    // 100 * pairs / (n(n-1)/2): unordered pairs, diagonal excluded.
    double proportion_unordered() const;
    // 100 * (2 * pairs) / n^2: ordered pairs, diagonal included in the denominator.
    double proportion_ordered() const;
};

double cosine_similarity(std::span<const double> a, std::span<const double> b);

ConflictMatrix sample_conflict_matrix(std::span<const Slice2D> inputs, std::span<const Slice2D> targets,
                                      double hi = 0.95, double lo = 0.05);
ConflictMatrix gradient_conflict_matrix(std::span<const std::vector<double>> grads, double threshold = 0.0);

// Gradient of the batch-of-one MSE loss for each (input, target) sample.
std::vector<std::vector<double>> per_sample_gradients(const Weights& weights, std::span<const Tensor> inputs,
                                                      std::span<const Tensor> targets);

void write_conflict_csv(std::ostream& os, const ConflictMatrix& m);
// White for 0, black for 1.
void write_conflict_pgm(const std::filesystem::path& path, const ConflictMatrix& m);
// Columns: channel,row,col,score
void write_attribution_csv(std::ostream& os, const AttributionMap& a);

} // namespace nlz
