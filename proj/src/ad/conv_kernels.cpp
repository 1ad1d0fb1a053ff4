#include "latnet/ad/conv_kernels.hpp"

#include "latnet/error.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cstring>
#include <vector>

namespace latnet::ad {
namespace {

// Output pixels per im2col chunk; keeps the column buffer cache-sized.
constexpr std::size_t kChunkRows = 1024;

template <typename T>
using MatR = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

int floor_div(int a, int b) { return a >= 0 ? a / b : -((-a + b - 1) / b); }
int ceil_div(int a, int b) { return -floor_div(-a, b); }

// Column-buffer row for output pixel (b, ox, oy): kh*kw*cin entries ordered
// (ky, kx, ci), zero where the tap falls into padding.
template <typename T>
void gather_row(const ConvShape& s, const T* x, const Rect& in, int b, int ox, int oy, T* row) {
    const std::size_t in_h = static_cast<std::size_t>(in.height());
    const std::size_t in_w = static_cast<std::size_t>(in.width());
    const std::size_t cin = static_cast<std::size_t>(s.cin);
    for (int ky = 0; ky < s.kh; ++ky) {
        const int ix = ox * s.stride - s.pad_h + ky;
        for (int kx = 0; kx < s.kw; ++kx) {
            const int iy = oy * s.stride - s.pad_w + kx;
            T* dst = row + (static_cast<std::size_t>(ky) * s.kw + kx) * cin;
            if (ix < 0 || ix >= s.in_h || iy < 0 || iy >= s.in_w) {
                std::fill(dst, dst + cin, T(0));
                continue;
            }
            const std::size_t lx = static_cast<std::size_t>(ix - in.x0);
            const std::size_t ly = static_cast<std::size_t>(iy - in.y0);
            const T* src = x + ((static_cast<std::size_t>(b) * in_h + lx) * in_w + ly) * cin;
            std::memcpy(dst, src, cin * sizeof(T));
        }
    }
}

template <typename T>
void scatter_row(const ConvShape& s, const T* row, int b, int ox, int oy, T* dx, const Rect& dx_rect) {
    const std::size_t h = static_cast<std::size_t>(dx_rect.height());
    const std::size_t w = static_cast<std::size_t>(dx_rect.width());
    const std::size_t cin = static_cast<std::size_t>(s.cin);
    for (int ky = 0; ky < s.kh; ++ky) {
        const int ix = ox * s.stride - s.pad_h + ky;
        if (ix < dx_rect.x0 || ix >= dx_rect.x1) continue;
        for (int kx = 0; kx < s.kw; ++kx) {
            const int iy = oy * s.stride - s.pad_w + kx;
            if (iy < dx_rect.y0 || iy >= dx_rect.y1) continue;
            const T* src = row + (static_cast<std::size_t>(ky) * s.kw + kx) * cin;
            T* dst = dx + ((static_cast<std::size_t>(b) * h + static_cast<std::size_t>(ix - dx_rect.x0)) * w +
                           static_cast<std::size_t>(iy - dx_rect.y0)) *
                              cin;
            for (std::size_t c = 0; c < cin; ++c) dst[c] += src[c];
        }
    }
}

struct PixelIndex {
    int b, ox, oy;
};

inline PixelIndex pixel(const Rect& r, std::size_t row) {
    const std::size_t w = static_cast<std::size_t>(r.width());
    const std::size_t hw = static_cast<std::size_t>(r.height()) * w;
    const std::size_t b = row / hw;
    const std::size_t rem = row % hw;
    return {static_cast<int>(b), r.x0 + static_cast<int>(rem / w), r.y0 + static_cast<int>(rem % w)};
}

}  // namespace

ConvShape same_conv_shape(int n, int in_h, int in_w, int cin, int kh, int kw, int cout, int stride) {
    if (n <= 0 || in_h <= 0 || in_w <= 0 || cin <= 0 || kh <= 0 || kw <= 0 || cout <= 0 || stride <= 0) {
        throw ShapeError("conv dims must be positive");
    }
    ConvShape s;
    s.n = n;
    s.in_h = in_h;
    s.in_w = in_w;
    s.cin = cin;
    s.kh = kh;
    s.kw = kw;
    s.cout = cout;
    s.stride = stride;
    s.out_h = ceil_div(in_h, stride);
    s.out_w = ceil_div(in_w, stride);
    s.pad_h = std::max((s.out_h - 1) * stride + kh - in_h, 0) / 2;
    s.pad_w = std::max((s.out_w - 1) * stride + kw - in_w, 0) / 2;
    return s;
}

Rect conv_input_rect(const ConvShape& s, const Rect& out) {
    Rect r;
    r.x0 = std::max(0, out.x0 * s.stride - s.pad_h);
    r.x1 = std::min(s.in_h, (out.x1 - 1) * s.stride - s.pad_h + s.kh);
    r.y0 = std::max(0, out.y0 * s.stride - s.pad_w);
    r.y1 = std::min(s.in_w, (out.y1 - 1) * s.stride - s.pad_w + s.kw);
    return r;
}

Rect conv_output_sources(const ConvShape& s, const Rect& in) {
    Rect r;
    r.x0 = std::max(0, ceil_div(in.x0 - s.kh + 1 + s.pad_h, s.stride));
    r.x1 = std::min(s.out_h, floor_div(in.x1 - 1 + s.pad_h, s.stride) + 1);
    r.y0 = std::max(0, ceil_div(in.y0 - s.kw + 1 + s.pad_w, s.stride));
    r.y1 = std::min(s.out_w, floor_div(in.y1 - 1 + s.pad_w, s.stride) + 1);
    return r;
}

template <typename T>
void conv_forward_rect(const ConvShape& s, const T* x, const Rect& in, const T* k, T* y, const Rect& out) {
    if (!in.contains(conv_input_rect(s, out))) throw ShapeError("conv_forward_rect: input rectangle too small");
    const std::size_t kdim = s.kernel_rows();
    const std::size_t rows = static_cast<std::size_t>(s.n) * out.area();
    Eigen::Map<const MatR<T>> kmat(k, static_cast<Eigen::Index>(kdim), s.cout);
    MatR<T> col(static_cast<Eigen::Index>(std::min(rows, kChunkRows)), static_cast<Eigen::Index>(kdim));
    for (std::size_t r0 = 0; r0 < rows; r0 += kChunkRows) {
        const std::size_t r1 = std::min(rows, r0 + kChunkRows);
        for (std::size_t r = r0; r < r1; ++r) {
            const PixelIndex p = pixel(out, r);
            gather_row(s, x, in, p.b, p.ox, p.oy, col.data() + (r - r0) * kdim);
        }
        const auto n = static_cast<Eigen::Index>(r1 - r0);
        Eigen::Map<MatR<T>> ymat(y + r0 * static_cast<std::size_t>(s.cout), n, s.cout);
        ymat.noalias() = col.topRows(n) * kmat;
    }
}

template <typename T>
void conv_backward_data_rect(const ConvShape& s, const T* dy, const Rect& dy_rect, const T* k, T* dx,
                             const Rect& dx_rect) {
    const std::size_t kdim = s.kernel_rows();
    const std::size_t rows = static_cast<std::size_t>(s.n) * dy_rect.area();
    Eigen::Map<const MatR<T>> kmat(k, static_cast<Eigen::Index>(kdim), s.cout);
    MatR<T> col(static_cast<Eigen::Index>(std::min(rows, kChunkRows)), static_cast<Eigen::Index>(kdim));
    for (std::size_t r0 = 0; r0 < rows; r0 += kChunkRows) {
        const std::size_t r1 = std::min(rows, r0 + kChunkRows);
        const auto n = static_cast<Eigen::Index>(r1 - r0);
        Eigen::Map<const MatR<T>> dymat(dy + r0 * static_cast<std::size_t>(s.cout), n, s.cout);
        col.topRows(n).noalias() = dymat * kmat.transpose();
        for (std::size_t r = r0; r < r1; ++r) {
            const PixelIndex p = pixel(dy_rect, r);
            scatter_row(s, col.data() + (r - r0) * kdim, p.b, p.ox, p.oy, dx, dx_rect);
        }
    }
}

template <typename T>
void conv_backward_kernel(const ConvShape& s, const T* x, const T* dy, T* dk) {
    const Rect in = full_rect(s.in_h, s.in_w);
    const Rect out = full_rect(s.out_h, s.out_w);
    const std::size_t kdim = s.kernel_rows();
    const std::size_t rows = static_cast<std::size_t>(s.n) * out.area();
    Eigen::Map<MatR<T>> dkmat(dk, static_cast<Eigen::Index>(kdim), s.cout);
    MatR<T> col(static_cast<Eigen::Index>(std::min(rows, kChunkRows)), static_cast<Eigen::Index>(kdim));
    for (std::size_t r0 = 0; r0 < rows; r0 += kChunkRows) {
        const std::size_t r1 = std::min(rows, r0 + kChunkRows);
        for (std::size_t r = r0; r < r1; ++r) {
            const PixelIndex p = pixel(out, r);
            gather_row(s, x, in, p.b, p.ox, p.oy, col.data() + (r - r0) * kdim);
        }
        const auto n = static_cast<Eigen::Index>(r1 - r0);
        Eigen::Map<const MatR<T>> dymat(dy + r0 * static_cast<std::size_t>(s.cout), n, s.cout);
        dkmat.noalias() += col.topRows(n).transpose() * dymat;
    }
}

template void conv_forward_rect<float>(const ConvShape&, const float*, const Rect&, const float*, float*,
                                       const Rect&);
template void conv_forward_rect<double>(const ConvShape&, const double*, const Rect&, const double*, double*,
                                        const Rect&);
template void conv_backward_data_rect<float>(const ConvShape&, const float*, const Rect&, const float*, float*,
                                             const Rect&);
template void conv_backward_data_rect<double>(const ConvShape&, const double*, const Rect&, const double*, double*,
                                              const Rect&);
template void conv_backward_kernel<float>(const ConvShape&, const float*, const float*, float*);
template void conv_backward_kernel<double>(const ConvShape&, const double*, const double*, double*);

}  // namespace latnet::ad
