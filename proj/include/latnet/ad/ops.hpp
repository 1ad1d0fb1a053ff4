#pragma once

#include "latnet/ad/graph.hpp"

namespace latnet::ad {

/// Zero-padded "same" cross-correlation of x (n, h, w, cin) with a
/// (kh, kw, cin, cout) kernel; output (n, ceil(h/stride), ceil(w/stride), cout).
template <typename T>
Var<T> conv2d(Var<T> x, Var<T> kernel, int stride);

/// Adjoint of conv2d(., kernel, stride) mapping (n, s*h, s*w, c_out) to
/// (n, h, w, c_in). Input (n, h, w, c_in), kernel (kh, kw, c_out, c_in),
/// output (n, s*h, s*w, c_out).
template <typename T>
Var<T> transpose_conv2d(Var<T> x, Var<T> kernel, int stride = 2);

/// x + bias broadcast over the trailing channel axis.
template <typename T>
Var<T> add_bias(Var<T> x, Var<T> bias);

template <typename T>
Var<T> add(Var<T> a, Var<T> b);
template <typename T>
Var<T> sub(Var<T> a, Var<T> b);
/// Hadamard product.
template <typename T>
Var<T> mul(Var<T> a, Var<T> b);
template <typename T>
Var<T> scale(Var<T> a, T factor);

/// max(x, 0) + slope * min(x, 0); derivative taken as `slope` at 0.
template <typename T>
Var<T> leaky_relu(Var<T> x, T slope);

/// Channels [begin, end) of a rank-4 tensor.
template <typename T>
Var<T> slice_channels(Var<T> x, std::size_t begin, std::size_t end);

/// Sum of all elements as a scalar.
template <typename T>
Var<T> sum(Var<T> x);

/// mean((a - b)^2).
template <typename T>
Var<T> mse(Var<T> a, Var<T> b);

/// Gradient difference loss with exponent 2 on rank-4 (n, h, w, c) tensors:
///   mean_x (|a[x+1,y] - a[x,y]| - |b[x+1,y] - b[x,y]|)^2
/// + mean_y (|a[x,y+1] - a[x,y]| - |b[x,y+1] - b[x,y]|)^2
/// where each mean runs over its valid positions, batch entries and channels.
template <typename T>
Var<T> gdl(Var<T> a, Var<T> b);

}  // namespace latnet::ad
