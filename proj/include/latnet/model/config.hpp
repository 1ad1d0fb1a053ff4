#pragma once

#include "latnet/util/keyvalue.hpp"

namespace latnet::model {

/// Architecture of the compressed surrogate.
///
/// Flow encoder:      stem 3x3 conv (input -> base_filters), then
///                    down_blocks x (down residual, residual), then residual.
/// Boundary encoder:  same trunk on the 1-channel mask, then a 3x3 head
///                    producing 2 * latent_channels split into (b_mul, b_add).
/// Compression step:  g = g * b_mul + b_add, then comp_blocks residual blocks.
/// Decoder:           (down_blocks - 1) x (transpose conv halving channels,
///                    residual, residual), then a transpose conv to 9 channels.
///
/// Populations enter the encoder as (f - w) / population_scale, with w the
/// rest-state lattice weights, and the decoder output is mapped back with
/// w + population_scale * out.
struct ModelConfig {
    int down_blocks = 2;
    int base_filters = 16;
    int comp_blocks = 3;
    int input_channels = 9;
    double leaky_slope = 0.1;
    double population_scale = 0.05;
    /// Multiplier on the initial weight range of the boundary gate head, so
    /// gates start close to (b_mul, b_add) = (1, 0).
    double gate_init_scale = 0.01;
    /// Solver steps represented by one compression step (metadata only).
    int steps_per_compress = 120;

    int latent_channels() const { return base_filters << down_blocks; }
    int spatial_factor() const { return 1 << down_blocks; }

    /// Throws InvalidInputError on non-positive sizes.
    void validate() const;
    /// Throws ShapeError naming the required multiple if nx or ny is not
    /// divisible by 2^down_blocks.
    void check_grid(int nx, int ny) const;

    void write(util::KeyValue& kv) const;
    static ModelConfig read(const util::KeyValue& kv);

    bool operator==(const ModelConfig&) const = default;
};

}  // namespace latnet::model
