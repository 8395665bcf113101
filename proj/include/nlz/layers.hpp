#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace nlz {

// Dense CHW tensor of doubles.
struct Tensor {
    std::size_t c = 0;
    std::size_t h = 0;
    std::size_t w = 0;
    std::vector<double> data;

    Tensor() = default;
    Tensor(std::size_t c_, std::size_t h_, std::size_t w_, double fill = 0.0)
        : c(c_), h(h_), w(w_), data(c_ * h_ * w_, fill) {}

    std::size_t size() const { return data.size(); }
    double& operator()(std::size_t ch, std::size_t y, std::size_t x) { return data[(ch * h + y) * w + x]; }
    const double& operator()(std::size_t ch, std::size_t y, std::size_t x) const { return data[(ch * h + y) * w + x]; }
    bool same_shape(const Tensor& o) const { return c == o.c && h == o.h && w == o.w; }
};

// Geometry of a square-kernel convolution.
struct ConvGeom {
    std::size_t in_ch = 1;
    std::size_t out_ch = 1;
    std::size_t kernel = 3;
    std::size_t stride = 1;
    std::size_t pad = 0;
    std::size_t output_pad = 0;  // transposed conv only

    // Conv weights are [out][in][k][k]; transposed-conv weights are [in][out][k][k].
    std::size_t weight_count() const { return in_ch * out_ch * kernel * kernel; }
    std::size_t param_count() const { return weight_count() + out_ch; }
};

// Parameters of one layer: weights followed by biases.
using ParamView = std::span<const double>;
using GradView = std::span<double>;

Tensor conv2d_forward(const Tensor& in, ParamView params, const ConvGeom& g);
// Accumulates into grad_params; returns d(loss)/d(in).
Tensor conv2d_backward(const Tensor& in, const Tensor& grad_out, ParamView params, GradView grad_params,
                       const ConvGeom& g);

Tensor conv_transpose2d_forward(const Tensor& in, ParamView params, const ConvGeom& g);
Tensor conv_transpose2d_backward(const Tensor& in, const Tensor& grad_out, ParamView params, GradView grad_params,
                                 const ConvGeom& g);

inline constexpr double kLeakySlope = 0.01;

Tensor leaky_relu_forward(const Tensor& in);
Tensor leaky_relu_backward(const Tensor& in, const Tensor& grad_out);

// Logistic output clamped into the open interval (0, 1).
Tensor sigmoid_forward(const Tensor& in);
Tensor sigmoid_backward(const Tensor& out, const Tensor& grad_out);

Tensor concat_channels(const Tensor& a, const Tensor& b);
// Split a gradient of concat(a, b) back into the two parts.
void split_channels(const Tensor& grad, std::size_t a_channels, Tensor& grad_a, Tensor& grad_b);

} // namespace nlz
