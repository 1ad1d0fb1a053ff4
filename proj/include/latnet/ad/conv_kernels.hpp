#pragma once

#include <cstddef>

namespace latnet::ad {

/// Geometry of a zero-padded 2D cross-correlation over (n, h, w, c) data with
/// a (kh, kw, cin, cout) kernel. Output position o reads inputs
/// o * stride - pad + k for k in [0, kernel).
struct ConvShape {
    int n = 1;
    int in_h = 0, in_w = 0, cin = 0;
    int kh = 0, kw = 0, cout = 0;
    int stride = 1;
    int pad_h = 0, pad_w = 0;
    int out_h = 0, out_w = 0;

    std::size_t kernel_rows() const { return static_cast<std::size_t>(kh) * kw * cin; }
};

/// "Same" padding: out = ceil(in / stride), total padding
/// max((out - 1) * stride + k - in, 0) with the smaller half in front.
ConvShape same_conv_shape(int n, int in_h, int in_w, int cin, int kh, int kw, int cout, int stride);

/// Half-open spatial rectangle [x0, x1) x [y0, y1); x runs along h, y along w.
struct Rect {
    int x0 = 0, x1 = 0, y0 = 0, y1 = 0;

    int height() const { return x1 - x0; }
    int width() const { return y1 - y0; }
    std::size_t area() const { return static_cast<std::size_t>(height()) * static_cast<std::size_t>(width()); }
    bool empty() const { return x1 <= x0 || y1 <= y0; }
    bool contains(const Rect& o) const { return o.x0 >= x0 && o.x1 <= x1 && o.y0 >= y0 && o.y1 <= y1; }
    bool operator==(const Rect&) const = default;
};

inline Rect full_rect(int h, int w) { return Rect{0, h, 0, w}; }

/// Conv-input rectangle read when producing the conv-output rectangle `out`,
/// clipped to the input extent.
Rect conv_input_rect(const ConvShape& s, const Rect& out);
/// Conv-output positions whose receptive field touches the conv-input
/// rectangle `in` (i.e. the sources a transposed conv scatters from).
Rect conv_output_sources(const ConvShape& s, const Rect& in);

/// y[out] = conv(x, k) for the output rectangle `out`. `x` holds the input
/// values of rectangle `in` (n x in.h x in.w x cin); every non-padding input
/// the outputs read must lie inside `in`. Writes n x out.h x out.w x cout.
template <typename T>
void conv_forward_rect(const ConvShape& s, const T* x, const Rect& in, const T* k, T* y, const Rect& out);

/// Adjoint of conv_forward with respect to x: scatters dy (conv-output
/// rectangle `dy_rect`) through the kernel and accumulates into dx
/// (conv-input rectangle `dx_rect`). Contributions landing outside
/// `dx_rect` are dropped. This is also the forward pass of a transposed conv.
template <typename T>
void conv_backward_data_rect(const ConvShape& s, const T* dy, const Rect& dy_rect, const T* k, T* dx,
                             const Rect& dx_rect);

/// dk += d(conv)/dk contracted with dy over the full extent.
template <typename T>
void conv_backward_kernel(const ConvShape& s, const T* x, const T* dy, T* dk);

}  // namespace latnet::ad
