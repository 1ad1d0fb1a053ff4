#include "latnet/model/latnet.hpp"

#include "latnet/error.hpp"

#include <utility>

namespace latnet::model {

namespace {

ad::ConvShape layer_shape(int n, int grid_h, int grid_w, int cin, int k, int cout, int stride, bool transpose) {
    // A transpose conv is the adjoint of the conv mapping its output grid back
    // to its input grid.
    if (transpose) return ad::same_conv_shape(n, grid_h * stride, grid_w * stride, cout, k, k, cin, stride);
    return ad::same_conv_shape(n, grid_h, grid_w, cin, k, k, cout, stride);
}

template <typename T>
void leaky_in_place(Tensor<T>& t, T slope) {
    for (T& v : t.data) v = v > T(0) ? v : slope * v;
}

/// Copies `inner` out of a window tensor that covers `outer`.
template <typename T>
Tensor<T> crop(const Tensor<T>& x, const ad::Rect& outer, const ad::Rect& inner) {
    const std::size_t n = x.shape[0], c = x.shape[3];
    Tensor<T> out(ad::Shape{n, static_cast<std::size_t>(inner.height()), static_cast<std::size_t>(inner.width()), c});
    for (std::size_t b = 0; b < n; ++b)
        for (int i = inner.x0; i < inner.x1; ++i)
            for (int j = inner.y0; j < inner.y1; ++j)
                for (std::size_t ch = 0; ch < c; ++ch)
                    out.at(b, static_cast<std::size_t>(i - inner.x0), static_cast<std::size_t>(j - inner.y0), ch) =
                        x.at(b, static_cast<std::size_t>(i - outer.x0), static_cast<std::size_t>(j - outer.y0), ch);
    return out;
}

}  // namespace

template <typename T>
Tensor<T> LatNet<T>::patch_conv(const ConvLayer& layer, const Tensor<T>& x, const ad::Rect& in, const ad::Rect& out,
                                int grid_h, int grid_w, std::size_t& counter) const {
    const Tensor<T>& w = params_[layer.weight].value;
    const Tensor<T>& bias = params_[layer.bias].value;
    const int k = static_cast<int>(w.shape[0]);
    const int n = static_cast<int>(x.shape[0]);
    const int cin = static_cast<int>(x.shape[3]);
    const int cout = static_cast<int>(layer.transpose ? w.shape[2] : w.shape[3]);
    const ad::ConvShape s = layer_shape(n, grid_h, grid_w, cin, k, cout, layer.stride, layer.transpose);
    Tensor<T> y(ad::Shape{static_cast<std::size_t>(n), static_cast<std::size_t>(out.height()),
                          static_cast<std::size_t>(out.width()), static_cast<std::size_t>(cout)});
    if (layer.transpose) {
        ad::conv_backward_data_rect(s, x.data.data(), in, w.data.data(), y.data.data(), out);
    } else {
        ad::conv_forward_rect(s, x.data.data(), in, w.data.data(), y.data.data(), out);
    }
    const auto c = static_cast<std::size_t>(cout);
    for (std::size_t i = 0; i < y.size(); ++i) y.data[i] += bias.data[i % c];
    counter += y.size();
    return y;
}

template <typename T>
Tensor<T> LatNet<T>::patch_res(const ResBlock& block, const Tensor<T>& x, const ad::Rect& in, const ad::Rect& out,
                               int grid_h, int grid_w, std::size_t& counter) const {
    const T slope = static_cast<T>(cfg_.leaky_slope);
    const int c = static_cast<int>(x.shape[3]);
    const ad::ConvShape s = layer_shape(static_cast<int>(x.shape[0]), grid_h, grid_w, c, 3, c, 1, false);
    const ad::Rect mid = ad::conv_input_rect(s, out);
    Tensor<T> a = x;
    leaky_in_place(a, slope);
    counter += a.size();
    Tensor<T> h = patch_conv(block.c1, a, in, mid, grid_h, grid_w, counter);
    leaky_in_place(h, slope);
    counter += h.size();
    Tensor<T> y = patch_conv(block.c2, h, mid, out, grid_h, grid_w, counter);
    Tensor<T> skip = crop(x, in, out);
    for (std::size_t i = 0; i < y.size(); ++i) y.data[i] = skip.data[i] + y.data[i];
    counter += skip.size() + y.size();
    return y;
}

template <typename T>
PatchResult<T> LatNet<T>::decode_patch(const Tensor<T>& latent, const ad::Rect& region) {
    const ad::Shape& ls = latent.shape;
    if (ls.size() != 4 || ls[3] != static_cast<std::size_t>(cfg_.latent_channels())) {
        throw ShapeError("decode_patch: expected latent with " + std::to_string(cfg_.latent_channels()) +
                         " channels, got " + ad::shape_string(ls));
    }
    const int lh = static_cast<int>(ls[1]), lw = static_cast<int>(ls[2]);
    const int oh = lh * cfg_.spatial_factor(), ow = lw * cfg_.spatial_factor();
    if (region.empty() || region.x0 < 0 || region.y0 < 0 || region.x1 > oh || region.y1 > ow) {
        throw InvalidInputError("decode_patch: region [" + std::to_string(region.x0) + "," + std::to_string(region.x1) +
                                ") x [" + std::to_string(region.y0) + "," + std::to_string(region.y1) +
                                ") outside output grid " + std::to_string(oh) + " x " + std::to_string(ow));
    }
    if (region == ad::full_rect(oh, ow)) {
        PatchResult<T> full;
        full.values = decode(latent);
        full.materialized_elements = decode_materialized_elements(latent);
        return full;
    }

    // Flatten the decoder into layers with their input grid sizes.
    struct Layer {
        const ConvLayer* conv = nullptr;
        const ResBlock* res = nullptr;
        int grid_h = 0, grid_w = 0;  ///< input grid
    };
    std::vector<Layer> layers;
    int gh = lh, gw = lw;
    for (const DecoderStage& stage : decoder_) {
        layers.push_back(Layer{&stage.up, nullptr, gh, gw});
        gh *= stage.up.stride;
        gw *= stage.up.stride;
        for (const ResBlock& b : stage.blocks) layers.push_back(Layer{nullptr, &b, gh, gw});
    }

    // Back-compute each layer's input rectangle from the requested output.
    const int n = static_cast<int>(ls[0]);
    std::vector<ad::Rect> rects(layers.size() + 1);
    rects.back() = region;
    for (std::size_t i = layers.size(); i-- > 0;) {
        const Layer& L = layers[i];
        if (L.conv) {
            const auto& w = params_[L.conv->weight].value;
            const ad::ConvShape s = layer_shape(n, L.grid_h, L.grid_w, static_cast<int>(w.shape[3]),
                                                static_cast<int>(w.shape[0]), static_cast<int>(w.shape[2]),
                                                L.conv->stride, true);
            rects[i] = ad::conv_output_sources(s, rects[i + 1]);
        } else {
            const int c = static_cast<int>(params_[L.res->c1.weight].value.shape[2]);
            const ad::ConvShape s = layer_shape(n, L.grid_h, L.grid_w, c, 3, c, 1, false);
            rects[i] = ad::conv_input_rect(s, ad::conv_input_rect(s, rects[i + 1]));
        }
    }

    PatchResult<T> result;
    Tensor<T> h = crop(latent, ad::full_rect(lh, lw), rects[0]);
    result.materialized_elements += h.size();
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const Layer& L = layers[i];
        h = L.conv ? patch_conv(*L.conv, h, rects[i], rects[i + 1], L.grid_h, L.grid_w, result.materialized_elements)
                   : patch_res(*L.res, h, rects[i], rects[i + 1], L.grid_h, L.grid_w, result.materialized_elements);
    }
    const T scale = static_cast<T>(cfg_.population_scale);
    const auto c = static_cast<std::size_t>(cfg_.input_channels);
    for (T& v : h.data) v = v * scale;
    for (std::size_t i = 0; i < h.size(); ++i) h.data[i] += population_offset<T>(i % c, cfg_.input_channels);
    result.materialized_elements += 2 * h.size();
    result.values = std::move(h);
    return result;
}

#define LATNET_INSTANTIATE_PATCH(T)                                                                             \
    template PatchResult<T> LatNet<T>::decode_patch(const Tensor<T>&, const ad::Rect&);                         \
    template Tensor<T> LatNet<T>::patch_conv(const ConvLayer&, const Tensor<T>&, const ad::Rect&,               \
                                             const ad::Rect&, int, int, std::size_t&) const;                    \
    template Tensor<T> LatNet<T>::patch_res(const ResBlock&, const Tensor<T>&, const ad::Rect&, const ad::Rect&, \
                                            int, int, std::size_t&) const;

LATNET_INSTANTIATE_PATCH(float)
LATNET_INSTANTIATE_PATCH(double)

}  // namespace latnet::model
