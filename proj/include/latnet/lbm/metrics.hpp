#pragma once

#include "latnet/lbm/lattice.hpp"

#include <cstdint>
#include <vector>

namespace latnet::lbm {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
    bool operator==(const Vec2&) const = default;
};

/// Momentum-exchange force on the solid cells. Each fluid->solid link (x, i)
/// contributes c_i (f[x,i] + f_bounced[x,opp(i)]); with half-way bounce-back
/// the bounced population equals f[x,i], so a link adds 2 c_i f[x,i].
/// Evaluate on the post-collision, pre-stream state. Links are visited in
/// (x, y, i) order so the sum is reproducible.
/// Links wrap in y always and in x only in fully periodic mode, matching stream().
/// Throws EmptyBoundaryError when the mask has no solid cell.
Vec2 drag(const LatticeState& state, const BoundaryMask& mask,
          BoundaryMode mode = BoundaryMode::periodic_y_inlet_outlet_x);

/// Mean momentum density rho*u over fluid cells.
/// Throws EmptyDomainError when every cell is solid.
Vec2 flux_average(const LatticeState& state, const BoundaryMask& mask);

/// Central-difference du_x/dx + du_y/dy at fluid cells whose four in-domain
/// neighbours are fluid; 0 everywhere else. `u` is (x, y, 2).
std::vector<double> divergence_field(const std::vector<double>& u, const BoundaryMask& mask);

/// Mean |div u| over the cells where divergence_field evaluates a stencil.
double mean_abs_divergence(const std::vector<double>& u, const BoundaryMask& mask);

/// Million lattice updates per second:
///   cells * steps_equivalent * 1e-6 / wall_seconds.
/// Throws InvalidInputError for non-positive time.
double mlups(std::uint64_t cells, std::uint64_t lbm_steps_equivalent, double wall_seconds);

}  // namespace latnet::lbm
