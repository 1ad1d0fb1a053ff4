#pragma once

#include "latnet/ad/checkpoint.hpp"
#include "latnet/ad/conv_kernels.hpp"
#include "latnet/ad/graph.hpp"
#include "latnet/lbm/lattice.hpp"
#include "latnet/model/config.hpp"

#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <vector>

namespace latnet::model {

using ad::Graph;
using ad::Parameter;
using ad::Tensor;
using ad::Var;

/// Multiplicative and additive latent gates produced by the boundary encoder.
template <typename T>
struct Gates {
    Var<T> mul;
    Var<T> add;
};

template <typename T>
struct GateTensors {
    Tensor<T> mul;
    Tensor<T> add;
};

template <typename T>
struct RolloutResult {
    GateTensors<T> gates;
    std::vector<Tensor<T>> latents;  ///< g_0 .. g_steps
    std::vector<Tensor<T>> frames;   ///< decode(g_t), empty when not requested
};

template <typename T>
struct PatchResult {
    Tensor<T> values;  ///< (n, region.height, region.width, 9)
    std::size_t materialized_elements = 0;
};

/// Rest-state weight of population channel i when the model works on the 9
/// lattice populations, 0 otherwise.
template <typename T>
T population_offset(std::size_t channel, int channels) {
    return channels == lbm::D2Q9::Q ? static_cast<T>(lbm::D2Q9::w[channel]) : T(0);
}

/// g * b_mul + b_add, elementwise.
template <typename T>
Var<T> apply_boundary(Var<T> g, const Gates<T>& gates);
template <typename T>
Tensor<T> apply_boundary(const Tensor<T>& g, const GateTensors<T>& gates);

/// The compressed surrogate. Every stage is fully convolutional, so one
/// parameter set serves any grid whose dims are multiples of 2^down_blocks.
/// Graph-level methods append to a caller-owned graph (training); tensor-level
/// methods build a throwaway inference graph.
template <typename T>
class LatNet {
public:
    explicit LatNet(ModelConfig cfg, std::uint64_t seed = 0);

    const ModelConfig& config() const { return cfg_; }

    std::vector<Parameter<T>*> parameters();
    std::vector<const Parameter<T>*> parameters() const;
    Parameter<T>* find(const std::string& name);
    std::size_t scalar_count() const;
    void zero_grad();

    Var<T> encode_flow(Graph<T>& g, Var<T> f);
    Gates<T> encode_boundary(Graph<T>& g, Var<T> mask);
    Var<T> compress_step(Graph<T>& g, Var<T> latent, const Gates<T>& gates);
    Var<T> decode(Graph<T>& g, Var<T> latent);

    Tensor<T> encode_flow(const Tensor<T>& f);
    GateTensors<T> encode_boundary(const Tensor<T>& mask);
    Tensor<T> compress_step(const Tensor<T>& latent, const GateTensors<T>& gates);
    Tensor<T> decode(const Tensor<T>& latent);
    /// Values a full decode produces, as counted by the inference graph.
    std::size_t decode_materialized_elements(const Tensor<T>& latent);

    /// decode(latent) restricted to `region` (output coordinates, half-open),
    /// evaluated only on each layer's receptive field of the region.
    PatchResult<T> decode_patch(const Tensor<T>& latent, const ad::Rect& region);

    /// g_0 = encode_flow(f0); gates = encode_boundary(mask);
    /// g_{t+1} = compress_step(g_t, gates). Frames are decode(g_t) for
    /// t = 0..steps when `decode_frames` is set. Throws NumericError carrying
    /// the step index if a state goes non-finite.
    RolloutResult<T> rollout(const Tensor<T>& f0, const Tensor<T>& mask, int steps, bool decode_frames = true);

    /// Header block with the model configuration for checkpoints.
    util::KeyValue header() const;
    void save(const std::string& path, const util::KeyValue& extra = {}) const;
    /// Copies values and Adam state from a checkpoint by parameter name.
    void load_parameters(const ad::Checkpoint& ck);
    static LatNet from_checkpoint(const ad::Checkpoint& ck);

    template <typename U>
    LatNet<U> cast() const {
        LatNet<U> out(cfg_, 0);
        auto dst = out.parameters();
        auto src = parameters();
        for (std::size_t i = 0; i < src.size(); ++i) {
            dst[i]->value = src[i]->value.template cast<U>();
            dst[i]->m = src[i]->m.template cast<U>();
            dst[i]->v = src[i]->v.template cast<U>();
            dst[i]->step = src[i]->step;
        }
        return out;
    }

    struct ConvLayer {
        std::size_t weight = 0;
        std::size_t bias = 0;
        int stride = 1;
        bool transpose = false;
    };
    struct ResBlock {
        ConvLayer c1, c2;
        std::optional<ConvLayer> proj;  ///< present on downsampling blocks
    };
    struct Trunk {
        ConvLayer stem;
        std::vector<ResBlock> blocks;
    };
    struct DecoderStage {
        ConvLayer up;
        std::vector<ResBlock> blocks;
    };

private:
    ConvLayer make_conv(const std::string& name, int k, int cin, int cout, int stride, bool transpose,
                        bool zero_weights);
    ResBlock make_res(const std::string& name, int channels);
    ResBlock make_down(const std::string& name, int cin);
    Trunk make_trunk(const std::string& name, int in_channels);

    Var<T> conv(Graph<T>& g, const ConvLayer& layer, Var<T> x);
    Var<T> res(Graph<T>& g, const ResBlock& block, Var<T> x);
    Var<T> trunk(Graph<T>& g, const Trunk& t, Var<T> x);
    void check_input(const ad::Shape& s, std::size_t channels, const char* what) const;

    Tensor<T> patch_conv(const ConvLayer& layer, const Tensor<T>& x, const ad::Rect& in, const ad::Rect& out,
                         int grid_h, int grid_w, std::size_t& counter) const;
    Tensor<T> patch_res(const ResBlock& block, const Tensor<T>& x, const ad::Rect& in, const ad::Rect& out,
                        int grid_h, int grid_w, std::size_t& counter) const;

    ModelConfig cfg_;
    std::deque<Parameter<T>> params_;
    std::uint64_t init_state_;

    Trunk flow_encoder_;
    Trunk boundary_encoder_;
    ConvLayer gate_head_;
    std::vector<ResBlock> compression_;
    std::vector<DecoderStage> decoder_;
};

/// (1, nx, ny, 9) tensor of the populations.
template <typename T>
Tensor<T> lattice_tensor(const lbm::LatticeState& state);
/// (1, nx, ny, 1) tensor with 1 on solid cells.
template <typename T>
Tensor<T> mask_tensor(const lbm::BoundaryMask& mask);
/// Batch entry `b` of an (n, nx, ny, 9) tensor as a lattice state.
template <typename T>
lbm::LatticeState tensor_lattice(const Tensor<T>& t, std::size_t b = 0);

}  // namespace latnet::model
