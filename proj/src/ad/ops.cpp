#include "latnet/ad/ops.hpp"

#include "latnet/ad/conv_kernels.hpp"
#include "latnet/error.hpp"

#include <cmath>

namespace latnet::ad {
namespace {

template <typename T>
void require_same_shape(const char* op, Var<T> a, Var<T> b) {
    if (a.shape() != b.shape()) {
        throw ShapeError(std::string(op) + ": shapes " + shape_string(a.shape()) + " and " +
                         shape_string(b.shape()) + " differ");
    }
}

template <typename T>
void require_rank(const char* op, Var<T> a, std::size_t rank) {
    if (a.shape().size() != rank) {
        throw ShapeError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got shape " +
                         shape_string(a.shape()));
    }
}

template <typename T>
Graph<T>& graph_of(const char* op, std::initializer_list<Var<T>> vars) {
    Graph<T>* g = vars.begin()->graph();
    for (const Var<T>& v : vars) {
        if (v.graph() == nullptr || v.graph() != g) throw ContractError(std::string(op) + ": inputs from different graphs");
    }
    return *g;
}

template <typename T>
T sign(T v) {
    return v > T(0) ? T(1) : (v < T(0) ? T(-1) : T(0));
}

template <typename T>
ConvShape conv_shape_for(const char* op, const Shape& xs, const Shape& ks, int stride) {
    if (xs.size() != 4 || ks.size() != 4) {
        throw ShapeError(std::string(op) + ": expected rank-4 input and kernel, got " + shape_string(xs) + " and " +
                         shape_string(ks));
    }
    if (ks[2] != xs[3]) {
        throw ShapeError(std::string(op) + ": kernel " + shape_string(ks) + " expects " + std::to_string(ks[2]) +
                         " input channels but input " + shape_string(xs) + " has " + std::to_string(xs[3]));
    }
    return same_conv_shape(static_cast<int>(xs[0]), static_cast<int>(xs[1]), static_cast<int>(xs[2]),
                           static_cast<int>(xs[3]), static_cast<int>(ks[0]), static_cast<int>(ks[1]),
                           static_cast<int>(ks[3]), stride);
}

}  // namespace

template <typename T>
Var<T> conv2d(Var<T> x, Var<T> kernel, int stride) {
    Graph<T>& g = graph_of("conv2d", {x, kernel});
    const ConvShape s = conv_shape_for<T>("conv2d", x.shape(), kernel.shape(), stride);
    Tensor<T> y({static_cast<std::size_t>(s.n), static_cast<std::size_t>(s.out_h), static_cast<std::size_t>(s.out_w),
                 static_cast<std::size_t>(s.cout)});
    conv_forward_rect(s, x.value().data.data(), full_rect(s.in_h, s.in_w), kernel.value().data.data(), y.data.data(),
                      full_rect(s.out_h, s.out_w));
    const std::size_t xi = x.id(), ki = kernel.id();
    return g.record("conv2d", std::move(y), {x, kernel}, [s, xi, ki](Graph<T>& gr, std::size_t self) {
        const T* dy = gr.grad(self).data.data();
        if (gr.requires_grad(xi)) {
            conv_backward_data_rect(s, dy, full_rect(s.out_h, s.out_w), gr.value(ki).data.data(),
                                    gr.grad(xi).data.data(), full_rect(s.in_h, s.in_w));
        }
        if (gr.requires_grad(ki)) {
            conv_backward_kernel(s, gr.value(xi).data.data(), dy, gr.grad(ki).data.data());
        }
    });
}

template <typename T>
Var<T> transpose_conv2d(Var<T> x, Var<T> kernel, int stride) {
    Graph<T>& g = graph_of("transpose_conv2d", {x, kernel});
    const Shape& xs = x.shape();
    const Shape& ks = kernel.shape();
    if (xs.size() != 4 || ks.size() != 4) throw ShapeError("transpose_conv2d: expected rank-4 input and kernel");
    if (ks[3] != xs[3]) {
        throw ShapeError("transpose_conv2d: kernel " + shape_string(ks) + " expects " + std::to_string(ks[3]) +
                         " input channels but input " + shape_string(xs) + " has " + std::to_string(xs[3]));
    }
    // The matching forward conv maps (n, s*h, s*w, c_out) -> (n, h, w, c_in).
    const ConvShape s = same_conv_shape(static_cast<int>(xs[0]), stride * static_cast<int>(xs[1]),
                                        stride * static_cast<int>(xs[2]), static_cast<int>(ks[2]),
                                        static_cast<int>(ks[0]), static_cast<int>(ks[1]), static_cast<int>(ks[3]),
                                        stride);
    Tensor<T> y({xs[0], static_cast<std::size_t>(s.in_h), static_cast<std::size_t>(s.in_w), ks[2]});
    conv_backward_data_rect(s, x.value().data.data(), full_rect(s.out_h, s.out_w), kernel.value().data.data(),
                            y.data.data(), full_rect(s.in_h, s.in_w));
    const std::size_t xi = x.id(), ki = kernel.id();
    return g.record("transpose_conv2d", std::move(y), {x, kernel}, [s, xi, ki](Graph<T>& gr, std::size_t self) {
        const T* dy = gr.grad(self).data.data();
        if (gr.requires_grad(xi)) {
            Tensor<T> tmp(gr.value(xi).shape);
            conv_forward_rect(s, dy, full_rect(s.in_h, s.in_w), gr.value(ki).data.data(), tmp.data.data(),
                              full_rect(s.out_h, s.out_w));
            T* gx = gr.grad(xi).data.data();
            for (std::size_t i = 0; i < tmp.size(); ++i) gx[i] += tmp.data[i];
        }
        if (gr.requires_grad(ki)) {
            conv_backward_kernel(s, dy, gr.value(xi).data.data(), gr.grad(ki).data.data());
        }
    });
}

template <typename T>
Var<T> add_bias(Var<T> x, Var<T> bias) {
    Graph<T>& g = graph_of("add_bias", {x, bias});
    const Shape& xs = x.shape();
    if (xs.empty() || bias.shape().size() != 1 || bias.shape()[0] != xs.back()) {
        throw ShapeError("add_bias: bias " + shape_string(bias.shape()) + " does not match channels of " +
                         shape_string(xs));
    }
    const std::size_t c = xs.back();
    Tensor<T> y = x.value();
    const T* b = bias.value().data.data();
    for (std::size_t i = 0; i < y.size(); ++i) y.data[i] += b[i % c];
    const std::size_t xi = x.id(), bi = bias.id();
    return g.record("add_bias", std::move(y), {x, bias}, [xi, bi, c](Graph<T>& gr, std::size_t self) {
        const Tensor<T>& dy = gr.grad(self);
        if (gr.requires_grad(xi)) {
            T* gx = gr.grad(xi).data.data();
            for (std::size_t i = 0; i < dy.size(); ++i) gx[i] += dy.data[i];
        }
        if (gr.requires_grad(bi)) {
            T* gb = gr.grad(bi).data.data();
            for (std::size_t i = 0; i < dy.size(); ++i) gb[i % c] += dy.data[i];
        }
    });
}

template <typename T>
Var<T> add(Var<T> a, Var<T> b) {
    Graph<T>& g = graph_of("add", {a, b});
    require_same_shape("add", a, b);
    Tensor<T> y = a.value();
    for (std::size_t i = 0; i < y.size(); ++i) y.data[i] += b.value().data[i];
    const std::size_t ai = a.id(), bi = b.id();
    return g.record("add", std::move(y), {a, b}, [ai, bi](Graph<T>& gr, std::size_t self) {
        const Tensor<T>& dy = gr.grad(self);
        for (std::size_t id : {ai, bi}) {
            if (!gr.requires_grad(id)) continue;
            T* gx = gr.grad(id).data.data();
            for (std::size_t i = 0; i < dy.size(); ++i) gx[i] += dy.data[i];
        }
    });
}

template <typename T>
Var<T> sub(Var<T> a, Var<T> b) {
    Graph<T>& g = graph_of("sub", {a, b});
    require_same_shape("sub", a, b);
    Tensor<T> y = a.value();
    for (std::size_t i = 0; i < y.size(); ++i) y.data[i] -= b.value().data[i];
    const std::size_t ai = a.id(), bi = b.id();
    return g.record("sub", std::move(y), {a, b}, [ai, bi](Graph<T>& gr, std::size_t self) {
        const Tensor<T>& dy = gr.grad(self);
        if (gr.requires_grad(ai)) {
            T* ga = gr.grad(ai).data.data();
            for (std::size_t i = 0; i < dy.size(); ++i) ga[i] += dy.data[i];
        }
        if (gr.requires_grad(bi)) {
            T* gb = gr.grad(bi).data.data();
            for (std::size_t i = 0; i < dy.size(); ++i) gb[i] -= dy.data[i];
        }
    });
}

template <typename T>
Var<T> mul(Var<T> a, Var<T> b) {
    Graph<T>& g = graph_of("mul", {a, b});
    require_same_shape("mul", a, b);
    Tensor<T> y = a.value();
    for (std::size_t i = 0; i < y.size(); ++i) y.data[i] *= b.value().data[i];
    const std::size_t ai = a.id(), bi = b.id();
    return g.record("mul", std::move(y), {a, b}, [ai, bi](Graph<T>& gr, std::size_t self) {
        const Tensor<T>& dy = gr.grad(self);
        if (gr.requires_grad(ai)) {
            const T* bv = gr.value(bi).data.data();
            T* ga = gr.grad(ai).data.data();
            for (std::size_t i = 0; i < dy.size(); ++i) ga[i] += dy.data[i] * bv[i];
        }
        if (gr.requires_grad(bi)) {
            const T* av = gr.value(ai).data.data();
            T* gb = gr.grad(bi).data.data();
            for (std::size_t i = 0; i < dy.size(); ++i) gb[i] += dy.data[i] * av[i];
        }
    });
}

template <typename T>
Var<T> scale(Var<T> a, T factor) {
    Graph<T>& g = graph_of("scale", {a});
    Tensor<T> y = a.value();
    for (T& v : y.data) v *= factor;
    const std::size_t ai = a.id();
    return g.record("scale", std::move(y), {a}, [ai, factor](Graph<T>& gr, std::size_t self) {
        const Tensor<T>& dy = gr.grad(self);
        T* ga = gr.grad(ai).data.data();
        for (std::size_t i = 0; i < dy.size(); ++i) ga[i] += factor * dy.data[i];
    });
}

template <typename T>
Var<T> leaky_relu(Var<T> x, T slope) {
    Graph<T>& g = graph_of("leaky_relu", {x});
    Tensor<T> y = x.value();
    for (T& v : y.data) v = v > T(0) ? v : slope * v;
    const std::size_t xi = x.id();
    return g.record("leaky_relu", std::move(y), {x}, [xi, slope](Graph<T>& gr, std::size_t self) {
        const Tensor<T>& dy = gr.grad(self);
        const T* xv = gr.value(xi).data.data();
        T* gx = gr.grad(xi).data.data();
        for (std::size_t i = 0; i < dy.size(); ++i) gx[i] += xv[i] > T(0) ? dy.data[i] : slope * dy.data[i];
    });
}

template <typename T>
Var<T> slice_channels(Var<T> x, std::size_t begin, std::size_t end) {
    Graph<T>& g = graph_of("slice_channels", {x});
    require_rank("slice_channels", x, 4);
    const Shape& xs = x.shape();
    const std::size_t c = xs[3];
    if (begin >= end || end > c) throw ShapeError("slice_channels: bad channel range");
    const std::size_t w = end - begin;
    const std::size_t pixels = xs[0] * xs[1] * xs[2];
    Tensor<T> y({xs[0], xs[1], xs[2], w});
    const T* src = x.value().data.data();
    for (std::size_t p = 0; p < pixels; ++p) {
        for (std::size_t k = 0; k < w; ++k) y.data[p * w + k] = src[p * c + begin + k];
    }
    const std::size_t xi = x.id();
    return g.record("slice_channels", std::move(y), {x}, [xi, begin, w, c, pixels](Graph<T>& gr, std::size_t self) {
        const Tensor<T>& dy = gr.grad(self);
        T* gx = gr.grad(xi).data.data();
        for (std::size_t p = 0; p < pixels; ++p) {
            for (std::size_t k = 0; k < w; ++k) gx[p * c + begin + k] += dy.data[p * w + k];
        }
    });
}

template <typename T>
Var<T> sum(Var<T> x) {
    Graph<T>& g = graph_of("sum", {x});
    T total = T(0);
    for (T v : x.value().data) total += v;
    const std::size_t xi = x.id();
    return g.record("sum", Tensor<T>(Shape{}, std::vector<T>{total}), {x}, [xi](Graph<T>& gr, std::size_t self) {
        const T d = gr.grad(self).data[0];
        for (T& v : gr.grad(xi).data) v += d;
    });
}

template <typename T>
Var<T> mse(Var<T> a, Var<T> b) {
    Graph<T>& g = graph_of("mse", {a, b});
    require_same_shape("mse", a, b);
    const std::size_t n = a.value().size();
    if (n == 0) throw ShapeError("mse of empty tensors");
    T acc = T(0);
    for (std::size_t i = 0; i < n; ++i) {
        const T d = a.value().data[i] - b.value().data[i];
        acc += d * d;
    }
    const T value = acc / static_cast<T>(n);
    const std::size_t ai = a.id(), bi = b.id();
    return g.record("mse", Tensor<T>(Shape{}, std::vector<T>{value}), {a, b},
                    [ai, bi, n](Graph<T>& gr, std::size_t self) {
                        const T coef = T(2) * gr.grad(self).data[0] / static_cast<T>(n);
                        const T* av = gr.value(ai).data.data();
                        const T* bv = gr.value(bi).data.data();
                        if (gr.requires_grad(ai)) {
                            T* ga = gr.grad(ai).data.data();
                            for (std::size_t i = 0; i < n; ++i) ga[i] += coef * (av[i] - bv[i]);
                        }
                        if (gr.requires_grad(bi)) {
                            T* gb = gr.grad(bi).data.data();
                            for (std::size_t i = 0; i < n; ++i) gb[i] -= coef * (av[i] - bv[i]);
                        }
                    });
}

namespace {

// Visits every finite-difference pair (lo, hi) along one spatial axis.
template <typename F>
void for_each_pair(const Shape& s, int axis, F&& fn) {
    const std::size_t nb = s[0], h = s[1], w = s[2], c = s[3];
    const std::size_t step = axis == 1 ? w * c : c;
    const std::size_t hx = axis == 1 ? h - 1 : h;
    const std::size_t wy = axis == 2 ? w - 1 : w;
    for (std::size_t b = 0; b < nb; ++b) {
        for (std::size_t x = 0; x < hx; ++x) {
            for (std::size_t y = 0; y < wy; ++y) {
                const std::size_t base = ((b * h + x) * w + y) * c;
                for (std::size_t k = 0; k < c; ++k) fn(base + k, base + k + step);
            }
        }
    }
}

std::size_t pair_count(const Shape& s, int axis) {
    return s[0] * (axis == 1 ? s[1] - 1 : s[1]) * (axis == 2 ? s[2] - 1 : s[2]) * s[3];
}

}  // namespace

template <typename T>
Var<T> gdl(Var<T> a, Var<T> b) {
    Graph<T>& g = graph_of("gdl", {a, b});
    require_same_shape("gdl", a, b);
    require_rank("gdl", a, 4);
    const Shape s = a.shape();
    const T* av = a.value().data.data();
    const T* bv = b.value().data.data();
    T value = T(0);
    for (int axis : {1, 2}) {
        const std::size_t count = pair_count(s, axis);
        if (count == 0) continue;
        T acc = T(0);
        for_each_pair(s, axis, [&](std::size_t lo, std::size_t hi) {
            const T e = std::abs(av[hi] - av[lo]) - std::abs(bv[hi] - bv[lo]);
            acc += e * e;
        });
        value += acc / static_cast<T>(count);
    }
    const std::size_t ai = a.id(), bi = b.id();
    return g.record("gdl", Tensor<T>(Shape{}, std::vector<T>{value}), {a, b},
                    [ai, bi, s](Graph<T>& gr, std::size_t self) {
                        const T d = gr.grad(self).data[0];
                        const T* av2 = gr.value(ai).data.data();
                        const T* bv2 = gr.value(bi).data.data();
                        T* ga = gr.requires_grad(ai) ? gr.grad(ai).data.data() : nullptr;
                        T* gb = gr.requires_grad(bi) ? gr.grad(bi).data.data() : nullptr;
                        for (int axis : {1, 2}) {
                            const std::size_t count = pair_count(s, axis);
                            if (count == 0) continue;
                            const T coef = T(2) * d / static_cast<T>(count);
                            for_each_pair(s, axis, [&](std::size_t lo, std::size_t hi) {
                                const T da = av2[hi] - av2[lo];
                                const T db = bv2[hi] - bv2[lo];
                                const T e = coef * (std::abs(da) - std::abs(db));
                                if (ga) {
                                    const T t = e * sign(da);
                                    ga[hi] += t;
                                    ga[lo] -= t;
                                }
                                if (gb) {
                                    const T t = e * sign(db);
                                    gb[hi] -= t;
                                    gb[lo] += t;
                                }
                            });
                        }
                    });
}

#define LATNET_INSTANTIATE_OPS(T)                                       \
    template Var<T> conv2d(Var<T>, Var<T>, int);                        \
    template Var<T> transpose_conv2d(Var<T>, Var<T>, int);              \
    template Var<T> add_bias(Var<T>, Var<T>);                           \
    template Var<T> add(Var<T>, Var<T>);                                \
    template Var<T> sub(Var<T>, Var<T>);                                \
    template Var<T> mul(Var<T>, Var<T>);                                \
    template Var<T> scale(Var<T>, T);                                   \
    template Var<T> leaky_relu(Var<T>, T);                              \
    template Var<T> slice_channels(Var<T>, std::size_t, std::size_t);   \
    template Var<T> sum(Var<T>);                                        \
    template Var<T> mse(Var<T>, Var<T>);                                \
    template Var<T> gdl(Var<T>, Var<T>);

LATNET_INSTANTIATE_OPS(float)
LATNET_INSTANTIATE_OPS(double)

}  // namespace latnet::ad
