#include "latnet/lbm/lattice.hpp"

#include "latnet/error.hpp"

#include <algorithm>
#include <cmath>

namespace latnet::lbm {

LatticeState::LatticeState(int nx_, int ny_) : nx(nx_), ny(ny_) {
    if (nx_ <= 0 || ny_ <= 0) throw ShapeError("lattice dims must be positive");
    f.assign(cells() * D2Q9::Q, 0.0);
}

BoundaryMask::BoundaryMask(int nx_, int ny_) : nx(nx_), ny(ny_) {
    if (nx_ <= 0 || ny_ <= 0) throw ShapeError("mask dims must be positive");
    solid.assign(static_cast<std::size_t>(nx_) * static_cast<std::size_t>(ny_), 0);
}

std::size_t BoundaryMask::solid_count() const {
    return static_cast<std::size_t>(std::count_if(solid.begin(), solid.end(), [](std::uint8_t s) { return s != 0; }));
}

bool BoundaryMask::inlet_outlet_clear() const {
    for (int y = 0; y < ny; ++y) {
        if (is_solid(0, y) || is_solid(nx - 1, y)) return false;
    }
    return true;
}

void SolverConfig::validate() const {
    if (!(tau > 0.5) || !std::isfinite(tau)) {
        throw InvalidInputError("tau must be > 0.5 (got " + std::to_string(tau) + ")");
    }
    if (!std::isfinite(inlet_velocity)) throw InvalidInputError("inlet velocity must be finite");
}

const char* to_string(BoundaryMode mode) {
    switch (mode) {
        case BoundaryMode::periodic_y_inlet_outlet_x: return "periodic_y_inlet_outlet_x";
        case BoundaryMode::fully_periodic: return "fully_periodic";
    }
    return "unknown";
}

BoundaryMode boundary_mode_from_string(const std::string& name) {
    if (name == "periodic_y_inlet_outlet_x" || name == "channel") return BoundaryMode::periodic_y_inlet_outlet_x;
    if (name == "fully_periodic" || name == "periodic") return BoundaryMode::fully_periodic;
    throw InvalidInputError("unknown boundary mode '" + name + "'");
}

}  // namespace latnet::lbm
