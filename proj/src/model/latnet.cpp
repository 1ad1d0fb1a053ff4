#include "latnet/model/latnet.hpp"

#include "latnet/ad/ops.hpp"
#include "latnet/datagen/rng.hpp"
#include "latnet/error.hpp"

#include <cmath>
#include <utility>

namespace latnet::model {

namespace {

constexpr int kTransposeKernel = 4;
constexpr int kDownKernel = 4;

}  // namespace

template <typename T>
LatNet<T>::LatNet(ModelConfig cfg, std::uint64_t seed) : cfg_(cfg), init_state_(seed) {
    cfg_.validate();
    flow_encoder_ = make_trunk("flow", cfg_.input_channels);
    boundary_encoder_ = make_trunk("boundary", 1);
    const int latent = cfg_.latent_channels();
    gate_head_ = make_conv("boundary.head", 3, latent, 2 * latent, 1, false, false);
    for (T& v : params_[gate_head_.weight].value.data) v *= static_cast<T>(cfg_.gate_init_scale);
    // Gates start near neutral: b_mul bias 1, b_add bias 0.
    Tensor<T>& hb = params_[gate_head_.bias].value;
    for (int c = 0; c < latent; ++c) hb.data[static_cast<std::size_t>(c)] = T(1);
    for (int i = 0; i < cfg_.comp_blocks; ++i) compression_.push_back(make_res("comp." + std::to_string(i), latent));
    int c = latent;
    for (int i = 0; i + 1 < cfg_.down_blocks; ++i) {
        const std::string name = "dec." + std::to_string(i);
        DecoderStage stage;
        stage.up = make_conv(name + ".up", kTransposeKernel, c, c / 2, 2, true, false);
        c /= 2;
        stage.blocks.push_back(make_res(name + ".res0", c));
        stage.blocks.push_back(make_res(name + ".res1", c));
        decoder_.push_back(std::move(stage));
    }
    DecoderStage last;
    last.up = make_conv("dec.out", kTransposeKernel, c, cfg_.input_channels, 2, true, false);
    decoder_.push_back(std::move(last));
}

template <typename T>
typename LatNet<T>::ConvLayer LatNet<T>::make_conv(const std::string& name, int k, int cin, int cout, int stride,
                                                   bool transpose, bool zero_weights) {
    const auto uk = static_cast<std::size_t>(k);
    const auto ui = static_cast<std::size_t>(cin);
    const auto uo = static_cast<std::size_t>(cout);
    Tensor<T> w(transpose ? ad::Shape{uk, uk, uo, ui} : ad::Shape{uk, uk, ui, uo});
    if (!zero_weights) {
        // Each input pixel of a stride-s transpose conv reaches k*k/s^2 taps per output.
        double fan_in = static_cast<double>(k * k * cin);
        if (transpose) fan_in /= static_cast<double>(stride * stride);
        const double bound = std::sqrt(3.0 / fan_in);
        datagen::Rng rng(datagen::mix_seed(init_state_, params_.size()));
        for (T& v : w.data) v = static_cast<T>(rng.uniform(-bound, bound));
    }
    ConvLayer layer;
    layer.stride = stride;
    layer.transpose = transpose;
    layer.weight = params_.size();
    params_.emplace_back(name + ".w", std::move(w));
    layer.bias = params_.size();
    params_.emplace_back(name + ".b", Tensor<T>(ad::Shape{uo}));
    return layer;
}

template <typename T>
typename LatNet<T>::ResBlock LatNet<T>::make_res(const std::string& name, int channels) {
    ResBlock b;
    b.c1 = make_conv(name + ".c1", 3, channels, channels, 1, false, false);
    b.c2 = make_conv(name + ".c2", 3, channels, channels, 1, false, true);
    return b;
}

template <typename T>
typename LatNet<T>::ResBlock LatNet<T>::make_down(const std::string& name, int cin) {
    ResBlock b;
    b.c1 = make_conv(name + ".c1", kDownKernel, cin, 2 * cin, 2, false, false);
    b.c2 = make_conv(name + ".c2", 3, 2 * cin, 2 * cin, 1, false, true);
    b.proj = make_conv(name + ".proj", 1, cin, 2 * cin, 2, false, false);
    return b;
}

template <typename T>
typename LatNet<T>::Trunk LatNet<T>::make_trunk(const std::string& name, int in_channels) {
    Trunk t;
    int c = cfg_.base_filters;
    t.stem = make_conv(name + ".stem", 3, in_channels, c, 1, false, false);
    for (int i = 0; i < cfg_.down_blocks; ++i) {
        t.blocks.push_back(make_down(name + ".down" + std::to_string(i), c));
        c *= 2;
        t.blocks.push_back(make_res(name + ".res" + std::to_string(i), c));
    }
    t.blocks.push_back(make_res(name + ".res" + std::to_string(cfg_.down_blocks), c));
    return t;
}

template <typename T>
std::vector<Parameter<T>*> LatNet<T>::parameters() {
    std::vector<Parameter<T>*> out;
    for (auto& p : params_) out.push_back(&p);
    return out;
}

template <typename T>
std::vector<const Parameter<T>*> LatNet<T>::parameters() const {
    std::vector<const Parameter<T>*> out;
    for (const auto& p : params_) out.push_back(&p);
    return out;
}

template <typename T>
Parameter<T>* LatNet<T>::find(const std::string& name) {
    for (auto& p : params_)
        if (p.name == name) return &p;
    return nullptr;
}

template <typename T>
std::size_t LatNet<T>::scalar_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.value.size();
    return n;
}

template <typename T>
void LatNet<T>::zero_grad() {
    for (auto& p : params_) p.zero_grad();
}

template <typename T>
void LatNet<T>::check_input(const ad::Shape& s, std::size_t channels, const char* what) const {
    if (s.size() != 4 || s[3] != channels) {
        throw ShapeError(std::string(what) + ": expected (n, nx, ny, " + std::to_string(channels) + ") input, got " +
                         ad::shape_string(s));
    }
    cfg_.check_grid(static_cast<int>(s[1]), static_cast<int>(s[2]));
}

template <typename T>
Var<T> LatNet<T>::conv(Graph<T>& g, const ConvLayer& layer, Var<T> x) {
    Var<T> w = g.parameter(params_[layer.weight]);
    Var<T> b = g.parameter(params_[layer.bias]);
    Var<T> y = layer.transpose ? ad::transpose_conv2d(x, w, layer.stride) : ad::conv2d(x, w, layer.stride);
    return ad::add_bias(y, b);
}

template <typename T>
Var<T> LatNet<T>::res(Graph<T>& g, const ResBlock& block, Var<T> x) {
    const T slope = static_cast<T>(cfg_.leaky_slope);
    Var<T> h = conv(g, block.c1, ad::leaky_relu(x, slope));
    h = conv(g, block.c2, ad::leaky_relu(h, slope));
    Var<T> skip = block.proj ? conv(g, *block.proj, x) : x;
    return ad::add(skip, h);
}

template <typename T>
Var<T> LatNet<T>::trunk(Graph<T>& g, const Trunk& t, Var<T> x) {
    Var<T> h = conv(g, t.stem, x);
    for (const ResBlock& b : t.blocks) h = res(g, b, h);
    return h;
}

template <typename T>
Var<T> LatNet<T>::encode_flow(Graph<T>& g, Var<T> f) {
    check_input(f.shape(), static_cast<std::size_t>(cfg_.input_channels), "encode_flow");
    Tensor<T> neg(ad::Shape{static_cast<std::size_t>(cfg_.input_channels)});
    for (std::size_t i = 0; i < neg.size(); ++i) neg.data[i] = -population_offset<T>(i, cfg_.input_channels);
    Var<T> x = ad::scale(ad::add_bias(f, g.constant(std::move(neg))), static_cast<T>(1.0 / cfg_.population_scale));
    return trunk(g, flow_encoder_, x);
}

template <typename T>
Gates<T> LatNet<T>::encode_boundary(Graph<T>& g, Var<T> mask) {
    check_input(mask.shape(), 1, "encode_boundary");
    Var<T> h = conv(g, gate_head_, trunk(g, boundary_encoder_, mask));
    const auto latent = static_cast<std::size_t>(cfg_.latent_channels());
    return Gates<T>{ad::slice_channels(h, 0, latent), ad::slice_channels(h, latent, 2 * latent)};
}

template <typename T>
Var<T> apply_boundary(Var<T> g, const Gates<T>& gates) {
    if (g.shape() != gates.mul.shape() || g.shape() != gates.add.shape()) {
        throw ShapeError("apply_boundary: state " + ad::shape_string(g.shape()) + " vs gates " +
                         ad::shape_string(gates.mul.shape()) + ", " + ad::shape_string(gates.add.shape()));
    }
    return ad::add(ad::mul(g, gates.mul), gates.add);
}

template <typename T>
Tensor<T> apply_boundary(const Tensor<T>& g, const GateTensors<T>& gates) {
    if (g.shape != gates.mul.shape || g.shape != gates.add.shape) {
        throw ShapeError("apply_boundary: state " + ad::shape_string(g.shape) + " vs gates " +
                         ad::shape_string(gates.mul.shape) + ", " + ad::shape_string(gates.add.shape));
    }
    Tensor<T> out(g.shape);
    for (std::size_t i = 0; i < g.size(); ++i) out.data[i] = g.data[i] * gates.mul.data[i] + gates.add.data[i];
    return out;
}

template <typename T>
Var<T> LatNet<T>::compress_step(Graph<T>& g, Var<T> latent, const Gates<T>& gates) {
    Var<T> h = apply_boundary(latent, gates);
    for (const ResBlock& b : compression_) h = res(g, b, h);
    return h;
}

template <typename T>
Var<T> LatNet<T>::decode(Graph<T>& g, Var<T> latent) {
    const ad::Shape& s = latent.shape();
    if (s.size() != 4 || s[3] != static_cast<std::size_t>(cfg_.latent_channels())) {
        throw ShapeError("decode: expected latent with " + std::to_string(cfg_.latent_channels()) +
                         " channels, got " + ad::shape_string(s));
    }
    Var<T> h = latent;
    for (const DecoderStage& stage : decoder_) {
        h = conv(g, stage.up, h);
        for (const ResBlock& b : stage.blocks) h = res(g, b, h);
    }
    Tensor<T> offset(ad::Shape{static_cast<std::size_t>(cfg_.input_channels)});
    for (std::size_t i = 0; i < offset.size(); ++i) offset.data[i] = population_offset<T>(i, cfg_.input_channels);
    return ad::add_bias(ad::scale(h, static_cast<T>(cfg_.population_scale)), g.constant(std::move(offset)));
}

template <typename T>
Tensor<T> LatNet<T>::encode_flow(const Tensor<T>& f) {
    Graph<T> g(false);
    return encode_flow(g, g.constant(f)).value();
}

template <typename T>
GateTensors<T> LatNet<T>::encode_boundary(const Tensor<T>& mask) {
    Graph<T> g(false);
    Gates<T> gates = encode_boundary(g, g.constant(mask));
    return GateTensors<T>{gates.mul.value(), gates.add.value()};
}

template <typename T>
Tensor<T> LatNet<T>::compress_step(const Tensor<T>& latent, const GateTensors<T>& gates) {
    Graph<T> g(false);
    Gates<T> gv{g.constant(gates.mul), g.constant(gates.add)};
    return compress_step(g, g.constant(latent), gv).value();
}

template <typename T>
Tensor<T> LatNet<T>::decode(const Tensor<T>& latent) {
    Graph<T> g(false);
    return decode(g, g.constant(latent)).value();
}

template <typename T>
std::size_t LatNet<T>::decode_materialized_elements(const Tensor<T>& latent) {
    Graph<T> g(false);
    decode(g, g.constant(latent));
    // Parameter leaves hold copies of the weights; only activations count.
    std::size_t weights = 0;
    for (const DecoderStage& stage : decoder_) {
        auto add_layer = [&](const ConvLayer& l) {
            weights += params_[l.weight].value.size() + params_[l.bias].value.size();
        };
        add_layer(stage.up);
        for (const ResBlock& b : stage.blocks) {
            add_layer(b.c1);
            add_layer(b.c2);
        }
    }
    return g.materialized_elements() - weights;
}

template <typename T>
RolloutResult<T> LatNet<T>::rollout(const Tensor<T>& f0, const Tensor<T>& mask, int steps, bool decode_frames) {
    if (steps < 0) throw InvalidInputError("rollout: steps must be >= 0");
    if (mask.shape.size() != 4 || f0.shape.size() != 4 || mask.shape[1] != f0.shape[1] ||
        mask.shape[2] != f0.shape[2] || mask.shape[0] != f0.shape[0]) {
        throw ShapeError("rollout: mask " + ad::shape_string(mask.shape) + " does not match state " +
                         ad::shape_string(f0.shape));
    }
    RolloutResult<T> out;
    try {
        out.latents.push_back(encode_flow(f0));
        out.gates = encode_boundary(mask);
        if (decode_frames) out.frames.push_back(decode(out.latents.back()));
    } catch (const NumericError& e) {
        throw NumericError(std::string("rollout: ") + e.what(), 0);
    }
    for (int t = 1; t <= steps; ++t) {
        try {
            out.latents.push_back(compress_step(out.latents.back(), out.gates));
            if (decode_frames) out.frames.push_back(decode(out.latents.back()));
        } catch (const NumericError& e) {
            throw NumericError(std::string("rollout: ") + e.what(), t);
        }
    }
    return out;
}

template <typename T>
util::KeyValue LatNet<T>::header() const {
    util::KeyValue kv;
    cfg_.write(kv);
    return kv;
}

template <typename T>
void LatNet<T>::save(const std::string& path, const util::KeyValue& extra) const {
    util::KeyValue kv = extra;
    cfg_.write(kv);
    ad::save_checkpoint<T>(path, kv, parameters());
}

template <typename T>
void LatNet<T>::load_parameters(const ad::Checkpoint& ck) {
    for (auto& p : params_) {
        const Parameter<float>* src = ck.find(p.name);
        if (!src) throw FormatError("checkpoint lacks parameter '" + p.name + "'", 0);
        if (src->value.shape != p.value.shape) {
            throw ShapeError("checkpoint parameter '" + p.name + "' has shape " + ad::shape_string(src->value.shape) +
                             ", model expects " + ad::shape_string(p.value.shape));
        }
        p.value = src->value.template cast<T>();
        p.m = src->m.template cast<T>();
        p.v = src->v.template cast<T>();
        p.step = src->step;
        p.zero_grad();
    }
}

template <typename T>
LatNet<T> LatNet<T>::from_checkpoint(const ad::Checkpoint& ck) {
    LatNet<T> net(ModelConfig::read(ck.header), 0);
    net.load_parameters(ck);
    return net;
}

template <typename T>
Tensor<T> lattice_tensor(const lbm::LatticeState& state) {
    Tensor<T> t(ad::Shape{1, static_cast<std::size_t>(state.nx), static_cast<std::size_t>(state.ny), 9});
    for (std::size_t i = 0; i < state.f.size(); ++i) t.data[i] = static_cast<T>(state.f[i]);
    return t;
}

template <typename T>
Tensor<T> mask_tensor(const lbm::BoundaryMask& mask) {
    Tensor<T> t(ad::Shape{1, static_cast<std::size_t>(mask.nx), static_cast<std::size_t>(mask.ny), 1});
    for (std::size_t i = 0; i < mask.solid.size(); ++i) t.data[i] = mask.solid[i] ? T(1) : T(0);
    return t;
}

template <typename T>
lbm::LatticeState tensor_lattice(const Tensor<T>& t, std::size_t b) {
    if (t.shape.size() != 4 || t.shape[3] != 9 || b >= t.shape[0]) {
        throw ShapeError("tensor_lattice: expected (n, nx, ny, 9), got " + ad::shape_string(t.shape));
    }
    lbm::LatticeState s(static_cast<int>(t.shape[1]), static_cast<int>(t.shape[2]));
    const std::size_t per = s.f.size();
    for (std::size_t i = 0; i < per; ++i) s.f[i] = static_cast<double>(t.data[b * per + i]);
    return s;
}

#define LATNET_INSTANTIATE_MODEL(T)                                                         \
    template class LatNet<T>;                                                               \
    template Var<T> apply_boundary(Var<T>, const Gates<T>&);                                \
    template Tensor<T> apply_boundary(const Tensor<T>&, const GateTensors<T>&);             \
    template Tensor<T> lattice_tensor<T>(const lbm::LatticeState&);                         \
    template Tensor<T> mask_tensor<T>(const lbm::BoundaryMask&);                            \
    template lbm::LatticeState tensor_lattice(const Tensor<T>&, std::size_t);

LATNET_INSTANTIATE_MODEL(float)
LATNET_INSTANTIATE_MODEL(double)

}  // namespace latnet::model
