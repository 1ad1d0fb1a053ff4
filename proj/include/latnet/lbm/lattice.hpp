#pragma once

#include "latnet/lbm/velocity_set.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace latnet::lbm {

/// Per-cell D2Q9 populations on an nx x ny grid, stored (x, y, i) with x
/// outermost and the direction innermost.
struct LatticeState {
    int nx = 0;
    int ny = 0;
    std::vector<double> f;

    LatticeState() = default;
    LatticeState(int nx_, int ny_);

    std::size_t cells() const { return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny); }
    std::size_t index(int x, int y, int i = 0) const {
        return (static_cast<std::size_t>(x) * static_cast<std::size_t>(ny) + static_cast<std::size_t>(y)) * D2Q9::Q +
               static_cast<std::size_t>(i);
    }
    double& at(int x, int y, int i) { return f[index(x, y, i)]; }
    double at(int x, int y, int i) const { return f[index(x, y, i)]; }

    bool operator==(const LatticeState&) const = default;
};

/// Binary solid/fluid map, 1 = solid.
struct BoundaryMask {
    int nx = 0;
    int ny = 0;
    std::vector<std::uint8_t> solid;

    BoundaryMask() = default;
    BoundaryMask(int nx_, int ny_);

    std::size_t index(int x, int y) const {
        return static_cast<std::size_t>(x) * static_cast<std::size_t>(ny) + static_cast<std::size_t>(y);
    }
    bool is_solid(int x, int y) const { return solid[index(x, y)] != 0; }
    void set_solid(int x, int y, bool s = true) { solid[index(x, y)] = s ? 1 : 0; }

    std::size_t solid_count() const;
    std::size_t fluid_count() const { return solid.size() - solid_count(); }
    /// True when columns x = 0 and x = nx - 1 hold no solid cells.
    bool inlet_outlet_clear() const;

    bool operator==(const BoundaryMask&) const = default;
};

struct MacroFields {
    int nx = 0;
    int ny = 0;
    std::vector<double> rho;  ///< (x, y)
    std::vector<double> u;    ///< (x, y, 2)

    double ux(int x, int y) const { return u[2 * (static_cast<std::size_t>(x) * ny + y)]; }
    double uy(int x, int y) const { return u[2 * (static_cast<std::size_t>(x) * ny + y) + 1]; }
};

enum class BoundaryMode {
    periodic_y_inlet_outlet_x,
    fully_periodic,
};

struct SolverConfig {
    double tau = 0.7;
    double inlet_velocity = 0.04;
    BoundaryMode boundary_mode = BoundaryMode::periodic_y_inlet_outlet_x;

    /// Kinematic viscosity cs2 * (tau - 1/2).
    double viscosity() const { return D2Q9::cs2 * (tau - 0.5); }
    /// Throws InvalidInputError unless tau > 0.5 and inlet velocity is finite.
    void validate() const;
};

const char* to_string(BoundaryMode mode);
BoundaryMode boundary_mode_from_string(const std::string& name);

using Populations = std::array<double, D2Q9::Q>;

}  // namespace latnet::lbm
