#include "nlz/layers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "nlz/error.hpp"

namespace nlz {

namespace {

void check_params(ParamView params, const ConvGeom& g, std::size_t in_ch) {
    if (params.size() != g.param_count()) throw Error(ErrorKind::ShapeMismatch, "layer parameter count mismatch");
    if (in_ch != g.in_ch) throw Error(ErrorKind::ShapeMismatch, "layer input channel mismatch");
}

// Output index range [lo, hi) for which o*stride + off lands inside [0, n).
std::pair<std::ptrdiff_t, std::ptrdiff_t> valid_range(std::ptrdiff_t off, std::size_t stride, std::size_t n,
                                                      std::size_t out_n) {
    const auto s = static_cast<std::ptrdiff_t>(stride);
    std::ptrdiff_t lo = off >= 0 ? 0 : (-off + s - 1) / s;
    std::ptrdiff_t hi = (static_cast<std::ptrdiff_t>(n) - 1 - off) / s + 1;
    if (static_cast<std::ptrdiff_t>(n) - 1 - off < 0) hi = 0;
    hi = std::min(hi, static_cast<std::ptrdiff_t>(out_n));
    return {lo, std::max(lo, hi)};
}

} // namespace

Tensor conv2d_forward(const Tensor& in, ParamView params, const ConvGeom& g) {
    check_params(params, g, in.c);
    if (in.h + 2 * g.pad < g.kernel || in.w + 2 * g.pad < g.kernel)
        throw Error(ErrorKind::ShapeMismatch, "input smaller than kernel");
    const std::size_t oh = (in.h + 2 * g.pad - g.kernel) / g.stride + 1;
    const std::size_t ow = (in.w + 2 * g.pad - g.kernel) / g.stride + 1;
    Tensor out(g.out_ch, oh, ow);
    const double* bias = params.data() + g.weight_count();
    const auto k = g.kernel;
    const auto s = g.stride;
    for (std::size_t o = 0; o < g.out_ch; ++o) {
        std::fill_n(&out(o, 0, 0), oh * ow, bias[o]);
        for (std::size_t i = 0; i < g.in_ch; ++i)
            for (std::size_t ky = 0; ky < k; ++ky) {
                const auto offy = static_cast<std::ptrdiff_t>(ky) - static_cast<std::ptrdiff_t>(g.pad);
                auto [y0, y1] = valid_range(offy, s, in.h, oh);
                for (std::size_t kx = 0; kx < k; ++kx) {
                    const double wv = params[((o * g.in_ch + i) * k + ky) * k + kx];
                    const auto offx = static_cast<std::ptrdiff_t>(kx) - static_cast<std::ptrdiff_t>(g.pad);
                    auto [x0, x1] = valid_range(offx, s, in.w, ow);
                    for (auto y = y0; y < y1; ++y) {
                        const double* src = &in(i, static_cast<std::size_t>(y * static_cast<std::ptrdiff_t>(s) + offy), 0);
                        double* dst = &out(o, static_cast<std::size_t>(y), 0);
                        for (auto x = x0; x < x1; ++x) dst[x] += wv * src[x * static_cast<std::ptrdiff_t>(s) + offx];
                    }
                }
            }
    }
    return out;
}

Tensor conv2d_backward(const Tensor& in, const Tensor& grad_out, ParamView params, GradView grad_params,
                       const ConvGeom& g) {
    check_params(params, g, in.c);
    Tensor grad_in(in.c, in.h, in.w);
    const std::size_t oh = grad_out.h, ow = grad_out.w;
    double* gbias = grad_params.data() + g.weight_count();
    const auto k = g.kernel;
    const auto s = g.stride;
    for (std::size_t o = 0; o < g.out_ch; ++o) {
        const double* go = &grad_out(o, 0, 0);
        double sum = 0.0;
        for (std::size_t t = 0; t < oh * ow; ++t) sum += go[t];
        gbias[o] += sum;
        for (std::size_t i = 0; i < g.in_ch; ++i)
            for (std::size_t ky = 0; ky < k; ++ky) {
                const auto offy = static_cast<std::ptrdiff_t>(ky) - static_cast<std::ptrdiff_t>(g.pad);
                auto [y0, y1] = valid_range(offy, s, in.h, oh);
                for (std::size_t kx = 0; kx < k; ++kx) {
                    const std::size_t widx = ((o * g.in_ch + i) * k + ky) * k + kx;
                    const double wv = params[widx];
                    const auto offx = static_cast<std::ptrdiff_t>(kx) - static_cast<std::ptrdiff_t>(g.pad);
                    auto [x0, x1] = valid_range(offx, s, in.w, ow);
                    double gw = 0.0;
                    for (auto y = y0; y < y1; ++y) {
                        const auto iy = static_cast<std::size_t>(y * static_cast<std::ptrdiff_t>(s) + offy);
                        const double* src = &in(i, iy, 0);
                        double* gsrc = &grad_in(i, iy, 0);
                        const double* gdst = &grad_out(o, static_cast<std::size_t>(y), 0);
                        for (auto x = x0; x < x1; ++x) {
                            const auto ix = x * static_cast<std::ptrdiff_t>(s) + offx;
                            gw += gdst[x] * src[ix];
                            gsrc[ix] += wv * gdst[x];
                        }
                    }
                    grad_params[widx] += gw;
                }
            }
    }
    return grad_in;
}

Tensor conv_transpose2d_forward(const Tensor& in, ParamView params, const ConvGeom& g) {
    check_params(params, g, in.c);
    const std::size_t oh = (in.h - 1) * g.stride + g.kernel + g.output_pad - 2 * g.pad;
    const std::size_t ow = (in.w - 1) * g.stride + g.kernel + g.output_pad - 2 * g.pad;
    Tensor out(g.out_ch, oh, ow);
    const double* bias = params.data() + g.weight_count();
    const auto k = g.kernel;
    const auto s = static_cast<std::ptrdiff_t>(g.stride);
    for (std::size_t o = 0; o < g.out_ch; ++o) std::fill_n(&out(o, 0, 0), oh * ow, bias[o]);
    for (std::size_t i = 0; i < g.in_ch; ++i)
        for (std::size_t o = 0; o < g.out_ch; ++o)
            for (std::size_t ky = 0; ky < k; ++ky)
                for (std::size_t kx = 0; kx < k; ++kx) {
                    const double wv = params[((i * g.out_ch + o) * k + ky) * k + kx];
                    const auto offy = static_cast<std::ptrdiff_t>(ky) - static_cast<std::ptrdiff_t>(g.pad);
                    const auto offx = static_cast<std::ptrdiff_t>(kx) - static_cast<std::ptrdiff_t>(g.pad);
                    for (std::size_t iy = 0; iy < in.h; ++iy) {
                        const auto y = static_cast<std::ptrdiff_t>(iy) * s + offy;
                        if (y < 0 || y >= static_cast<std::ptrdiff_t>(oh)) continue;
                        const double* src = &in(i, iy, 0);
                        double* dst = &out(o, static_cast<std::size_t>(y), 0);
                        for (std::size_t ix = 0; ix < in.w; ++ix) {
                            const auto x = static_cast<std::ptrdiff_t>(ix) * s + offx;
                            if (x < 0 || x >= static_cast<std::ptrdiff_t>(ow)) continue;
                            dst[x] += wv * src[ix];
                        }
                    }
                }
    return out;
}

Tensor conv_transpose2d_backward(const Tensor& in, const Tensor& grad_out, ParamView params, GradView grad_params,
                                 const ConvGeom& g) {
    check_params(params, g, in.c);
    Tensor grad_in(in.c, in.h, in.w);
    const std::size_t oh = grad_out.h, ow = grad_out.w;
    double* gbias = grad_params.data() + g.weight_count();
    for (std::size_t o = 0; o < g.out_ch; ++o) {
        const double* go = &grad_out(o, 0, 0);
        double sum = 0.0;
        for (std::size_t t = 0; t < oh * ow; ++t) sum += go[t];
        gbias[o] += sum;
    }
    const auto k = g.kernel;
    const auto s = static_cast<std::ptrdiff_t>(g.stride);
    for (std::size_t i = 0; i < g.in_ch; ++i)
        for (std::size_t o = 0; o < g.out_ch; ++o)
            for (std::size_t ky = 0; ky < k; ++ky)
                for (std::size_t kx = 0; kx < k; ++kx) {
                    const std::size_t widx = ((i * g.out_ch + o) * k + ky) * k + kx;
                    const double wv = params[widx];
                    const auto offy = static_cast<std::ptrdiff_t>(ky) - static_cast<std::ptrdiff_t>(g.pad);
                    const auto offx = static_cast<std::ptrdiff_t>(kx) - static_cast<std::ptrdiff_t>(g.pad);
                    double gw = 0.0;
                    for (std::size_t iy = 0; iy < in.h; ++iy) {
                        const auto y = static_cast<std::ptrdiff_t>(iy) * s + offy;
                        if (y < 0 || y >= static_cast<std::ptrdiff_t>(oh)) continue;
                        const double* src = &in(i, iy, 0);
                        double* gsrc = &grad_in(i, iy, 0);
                        const double* gdst = &grad_out(o, static_cast<std::size_t>(y), 0);
                        for (std::size_t ix = 0; ix < in.w; ++ix) {
                            const auto x = static_cast<std::ptrdiff_t>(ix) * s + offx;
                            if (x < 0 || x >= static_cast<std::ptrdiff_t>(ow)) continue;
                            gw += gdst[x] * src[ix];
                            gsrc[ix] += wv * gdst[x];
                        }
                    }
                    grad_params[widx] += gw;
                }
    return grad_in;
}

Tensor leaky_relu_forward(const Tensor& in) {
    Tensor out = in;
    for (double& v : out.data) v = v > 0.0 ? v : kLeakySlope * v;
    return out;
}

Tensor leaky_relu_backward(const Tensor& in, const Tensor& grad_out) {
    Tensor g = grad_out;
    for (std::size_t i = 0; i < g.size(); ++i) g.data[i] *= in.data[i] > 0.0 ? 1.0 : kLeakySlope;
    return g;
}

Tensor sigmoid_forward(const Tensor& in) {
    constexpr double lo = std::numeric_limits<double>::min();
    constexpr double hi = 1.0 - 0x1.0p-53;
    Tensor out = in;
    for (double& v : out.data) v = std::clamp(1.0 / (1.0 + std::exp(-v)), lo, hi);
    return out;
}

Tensor sigmoid_backward(const Tensor& out, const Tensor& grad_out) {
    Tensor g = grad_out;
    for (std::size_t i = 0; i < g.size(); ++i) g.data[i] *= out.data[i] * (1.0 - out.data[i]);
    return g;
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
    if (a.h != b.h || a.w != b.w) throw Error(ErrorKind::ShapeMismatch, "concat spatial mismatch");
    Tensor out(a.c + b.c, a.h, a.w);
    std::copy(a.data.begin(), a.data.end(), out.data.begin());
    std::copy(b.data.begin(), b.data.end(), out.data.begin() + static_cast<std::ptrdiff_t>(a.size()));
    return out;
}

void split_channels(const Tensor& grad, std::size_t a_channels, Tensor& grad_a, Tensor& grad_b) {
    const std::size_t plane = grad.h * grad.w;
    grad_a = Tensor(a_channels, grad.h, grad.w);
    grad_b = Tensor(grad.c - a_channels, grad.h, grad.w);
    std::copy_n(grad.data.begin(), a_channels * plane, grad_a.data.begin());
    std::copy(grad.data.begin() + static_cast<std::ptrdiff_t>(a_channels * plane), grad.data.end(),
              grad_b.data.begin());
}

} // namespace nlz
