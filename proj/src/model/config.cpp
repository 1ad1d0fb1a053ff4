#include "latnet/model/config.hpp"

#include "latnet/error.hpp"

namespace latnet::model {

void ModelConfig::validate() const {
    if (down_blocks < 1 || down_blocks > 8) throw InvalidInputError("down_blocks must be in [1, 8]");
    if (base_filters < 1) throw InvalidInputError("base_filters must be positive");
    if (comp_blocks < 0) throw InvalidInputError("comp_blocks must be non-negative");
    if (input_channels < 1) throw InvalidInputError("input_channels must be positive");
    if (!(population_scale > 0.0)) throw InvalidInputError("population_scale must be positive");
    if (!(gate_init_scale >= 0.0)) throw InvalidInputError("gate_init_scale must be non-negative");
    if (!(leaky_slope >= 0.0 && leaky_slope < 1.0)) throw InvalidInputError("leaky_slope must lie in [0, 1)");
    if (steps_per_compress < 1) throw InvalidInputError("steps_per_compress must be positive");
}

void ModelConfig::check_grid(int nx, int ny) const {
    const int m = spatial_factor();
    if (nx <= 0 || ny <= 0 || nx % m != 0 || ny % m != 0) {
        throw ShapeError("grid " + std::to_string(nx) + "x" + std::to_string(ny) + " is not admissible: both dims " +
                         "must be positive multiples of " + std::to_string(m) + " (2^down_blocks)");
    }
}

void ModelConfig::write(util::KeyValue& kv) const {
    kv.set("model.down_blocks", down_blocks);
    kv.set("model.base_filters", base_filters);
    kv.set("model.comp_blocks", comp_blocks);
    kv.set("model.input_channels", input_channels);
    kv.set("model.leaky_slope", leaky_slope);
    kv.set("model.steps_per_compress", steps_per_compress);
    kv.set("model.population_scale", population_scale);
    kv.set("model.gate_init_scale", gate_init_scale);
    kv.set("model.latent_channels", latent_channels());
}

ModelConfig ModelConfig::read(const util::KeyValue& kv) {
    ModelConfig c;
    c.down_blocks = static_cast<int>(kv.get_int("model.down_blocks"));
    c.base_filters = static_cast<int>(kv.get_int("model.base_filters"));
    c.comp_blocks = static_cast<int>(kv.get_int("model.comp_blocks"));
    c.input_channels = static_cast<int>(kv.get_int("model.input_channels"));
    c.leaky_slope = kv.get_double("model.leaky_slope");
    c.steps_per_compress = static_cast<int>(kv.get_int("model.steps_per_compress"));
    c.population_scale = kv.get_double("model.population_scale");
    c.gate_init_scale = kv.get_double("model.gate_init_scale");
    c.validate();
    return c;
}

}  // namespace latnet::model
