#pragma once

#include "latnet/lbm/lattice.hpp"

namespace latnet::lbm {

/// Any |f| above this after collision is reported as an instability.
inline constexpr double kInstabilityThreshold = 10.0;

/// Second-order LBGK equilibrium
///   f_eq_i = w_i rho (1 + (c_i.u)/cs2 + (c_i.u)^2/(2 cs2^2) - |u|^2/(2 cs2)).
/// Throws InvalidInputError for non-finite input or rho <= 0.
Populations equilibrium(double rho, double ux, double uy);

/// Density and velocity per cell; cells with zero density get u = 0.
MacroFields macroscopics(const LatticeState& state);

/// LBGK relaxation f += (f_eq - f) / tau on every cell.
/// Throws InstabilityError if any post-collision |f| exceeds the threshold.
LatticeState collide(const LatticeState& state, double tau);

/// Propagation with half-way bounce-back off solid cells. Solid cells end up
/// holding zeros. In inlet/outlet mode populations leaving through x = 0 or
/// x = nx - 1 are dropped, and populations that would enter from outside keep
/// the boundary cell's current value (they are overwritten by
/// apply_inlet_outlet right after).
LatticeState stream(const LatticeState& state, const BoundaryMask& mask,
                    BoundaryMode mode = BoundaryMode::fully_periodic);

/// Equilibrium-replacement inlet/outlet: fluid cells of column 0 get
/// equilibrium(1, (u_in, 0)); fluid cells of column nx-1 get
/// equilibrium(rho_local, (u_in, 0)). No-op in fully periodic mode.
LatticeState apply_inlet_outlet(const LatticeState& state, const BoundaryMask& mask, const SolverConfig& cfg);

/// collide -> stream -> apply_inlet_outlet.
LatticeState step(const LatticeState& state, const BoundaryMask& mask, const SolverConfig& cfg);

/// Uniform equilibrium(rho, u) on fluid cells, zeros on solid cells.
LatticeState uniform_state(const BoundaryMask& mask, double rho, double ux, double uy);

/// In-place stepping with double buffering. step() reads one buffer and
/// writes the other; the grid may be partitioned across util::thread_count()
/// workers without changing results.
class Solver {
public:
    Solver(LatticeState initial, BoundaryMask mask, SolverConfig cfg);

    void step();
    void run(long steps);

    /// Only the collision half of a step; leaves the state pre-stream.
    void collide_in_place();
    /// Stream + boundary half of a step.
    void stream_and_bound();

    const LatticeState& state() const { return state_; }
    LatticeState& mutable_state() { return state_; }
    const BoundaryMask& mask() const { return mask_; }
    const SolverConfig& config() const { return cfg_; }
    long steps_taken() const { return steps_; }

private:
    LatticeState state_;
    LatticeState scratch_;
    BoundaryMask mask_;
    SolverConfig cfg_;
    long steps_ = 0;
};

}  // namespace latnet::lbm
