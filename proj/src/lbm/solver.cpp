#include "latnet/lbm/solver.hpp"

#include "latnet/error.hpp"
#include "latnet/util/parallel.hpp"

#include <atomic>
#include <cmath>
#include <string>

namespace latnet::lbm {
namespace {

using V = D2Q9;

inline void equilibrium_unchecked(double rho, double ux, double uy, double* out) {
    const double usq = 1.5 * (ux * ux + uy * uy);
    for (int i = 0; i < V::Q; ++i) {
        const double cu = 3.0 * (V::cx[i] * ux + V::cy[i] * uy);
        out[i] = V::w[i] * rho * (1.0 + cu + 0.5 * cu * cu - usq);
    }
}

inline void moments(const double* f, double& rho, double& ux, double& uy) {
    rho = 0.0;
    double jx = 0.0, jy = 0.0;
    for (int i = 0; i < V::Q; ++i) {
        rho += f[i];
        jx += V::cx[i] * f[i];
        jy += V::cy[i] * f[i];
    }
    if (rho != 0.0) {
        ux = jx / rho;
        uy = jy / rho;
    } else {
        ux = 0.0;
        uy = 0.0;
    }
}

// Returns false if any post-collision value is unstable.
bool collide_cells(double* f, std::size_t begin, std::size_t end, double omega) {
    bool ok = true;
    double feq[V::Q];
    for (std::size_t c = begin; c < end; ++c) {
        double* fc = f + c * V::Q;
        double rho, ux, uy;
        moments(fc, rho, ux, uy);
        equilibrium_unchecked(rho, ux, uy, feq);
        for (int i = 0; i < V::Q; ++i) {
            const double v = fc[i] + omega * (feq[i] - fc[i]);
            fc[i] = v;
            if (!(std::abs(v) <= kInstabilityThreshold)) ok = false;
        }
    }
    return ok;
}

void collide_in_place(LatticeState& s, double tau, long step_index) {
    if (!(tau > 0.5)) throw InvalidInputError("tau must be > 0.5");
    const double omega = 1.0 / tau;
    std::atomic<bool> ok{true};
    util::parallel_for(0, static_cast<std::size_t>(s.nx), [&](std::size_t x0, std::size_t x1) {
        const std::size_t per_col = static_cast<std::size_t>(s.ny);
        if (!collide_cells(s.f.data(), x0 * per_col, x1 * per_col, omega)) ok = false;
    });
    if (!ok) {
        throw InstabilityError("lattice became unstable: |f| exceeded " +
                                   std::to_string(kInstabilityThreshold) + " or went non-finite",
                               step_index);
    }
}

inline int wrap(int v, int n) {
    v %= n;
    return v < 0 ? v + n : v;
}

void stream_into(const LatticeState& in, LatticeState& out, const BoundaryMask& mask, BoundaryMode mode) {
    const int nx = in.nx, ny = in.ny;
    const bool open_x = mode == BoundaryMode::periodic_y_inlet_outlet_x;
    std::fill(out.f.begin(), out.f.end(), 0.0);
    if (open_x) {
        for (int x : {0, nx - 1}) {
            for (int y = 0; y < ny; ++y) {
                if (mask.is_solid(x, y)) continue;
                for (int i = 0; i < V::Q; ++i) out.at(x, y, i) = in.at(x, y, i);
            }
        }
    }
    util::parallel_for(0, static_cast<std::size_t>(nx), [&](std::size_t x0, std::size_t x1) {
        for (int x = static_cast<int>(x0); x < static_cast<int>(x1); ++x) {
            for (int y = 0; y < ny; ++y) {
                if (mask.is_solid(x, y)) continue;
                const double* src = &in.f[in.index(x, y)];
                for (int i = 0; i < V::Q; ++i) {
                    int tx = x + V::cx[i];
                    const int ty = wrap(y + V::cy[i], ny);
                    if (open_x) {
                        if (tx < 0 || tx >= nx) continue;
                    } else {
                        tx = wrap(tx, nx);
                    }
                    if (mask.is_solid(tx, ty)) {
                        out.f[out.index(x, y, V::opposite[i])] = src[i];
                    } else {
                        out.f[out.index(tx, ty, i)] = src[i];
                    }
                }
            }
        }
    });
}

void inlet_outlet_in_place(LatticeState& s, const BoundaryMask& mask, const SolverConfig& cfg) {
    if (cfg.boundary_mode != BoundaryMode::periodic_y_inlet_outlet_x) return;
    double feq[V::Q];
    equilibrium_unchecked(1.0, cfg.inlet_velocity, 0.0, feq);
    for (int y = 0; y < s.ny; ++y) {
        if (mask.is_solid(0, y)) continue;
        for (int i = 0; i < V::Q; ++i) s.at(0, y, i) = feq[i];
    }
    const int xo = s.nx - 1;
    for (int y = 0; y < s.ny; ++y) {
        if (mask.is_solid(xo, y)) continue;
        double rho = 0.0;
        for (int i = 0; i < V::Q; ++i) rho += s.at(xo, y, i);
        equilibrium_unchecked(rho, cfg.inlet_velocity, 0.0, feq);
        for (int i = 0; i < V::Q; ++i) s.at(xo, y, i) = feq[i];
    }
}

void check_shapes(const LatticeState& s, const BoundaryMask& m) {
    if (s.nx != m.nx || s.ny != m.ny) {
        throw ShapeError("state is " + std::to_string(s.nx) + "x" + std::to_string(s.ny) + " but mask is " +
                         std::to_string(m.nx) + "x" + std::to_string(m.ny));
    }
}

}  // namespace

Populations equilibrium(double rho, double ux, double uy) {
    if (!std::isfinite(rho) || !std::isfinite(ux) || !std::isfinite(uy)) {
        throw InvalidInputError("equilibrium: non-finite input");
    }
    if (!(rho > 0.0)) throw InvalidInputError("equilibrium: density must be positive");
    Populations out{};
    equilibrium_unchecked(rho, ux, uy, out.data());
    return out;
}

MacroFields macroscopics(const LatticeState& state) {
    MacroFields m;
    m.nx = state.nx;
    m.ny = state.ny;
    m.rho.resize(state.cells());
    m.u.resize(2 * state.cells());
    for (std::size_t c = 0; c < state.cells(); ++c) {
        double rho, ux, uy;
        moments(&state.f[c * V::Q], rho, ux, uy);
        m.rho[c] = rho;
        m.u[2 * c] = ux;
        m.u[2 * c + 1] = uy;
    }
    return m;
}

LatticeState collide(const LatticeState& state, double tau) {
    LatticeState out = state;
    collide_in_place(out, tau, -1);
    return out;
}

LatticeState stream(const LatticeState& state, const BoundaryMask& mask, BoundaryMode mode) {
    check_shapes(state, mask);
    LatticeState out(state.nx, state.ny);
    stream_into(state, out, mask, mode);
    return out;
}

LatticeState apply_inlet_outlet(const LatticeState& state, const BoundaryMask& mask, const SolverConfig& cfg) {
    check_shapes(state, mask);
    LatticeState out = state;
    inlet_outlet_in_place(out, mask, cfg);
    return out;
}

LatticeState step(const LatticeState& state, const BoundaryMask& mask, const SolverConfig& cfg) {
    Solver solver(state, mask, cfg);
    solver.step();
    return solver.state();
}

LatticeState uniform_state(const BoundaryMask& mask, double rho, double ux, double uy) {
    const Populations feq = equilibrium(rho, ux, uy);
    LatticeState s(mask.nx, mask.ny);
    for (int x = 0; x < mask.nx; ++x) {
        for (int y = 0; y < mask.ny; ++y) {
            if (mask.is_solid(x, y)) continue;
            for (int i = 0; i < V::Q; ++i) s.at(x, y, i) = feq[i];
        }
    }
    return s;
}

Solver::Solver(LatticeState initial, BoundaryMask mask, SolverConfig cfg)
    : state_(std::move(initial)), scratch_(state_.nx, state_.ny), mask_(std::move(mask)), cfg_(cfg) {
    cfg_.validate();
    check_shapes(state_, mask_);
}

void Solver::collide_in_place() { lbm::collide_in_place(state_, cfg_.tau, steps_); }

void Solver::stream_and_bound() {
    stream_into(state_, scratch_, mask_, cfg_.boundary_mode);
    std::swap(state_, scratch_);
    inlet_outlet_in_place(state_, mask_, cfg_);
    ++steps_;
}

void Solver::step() {
    collide_in_place();
    stream_and_bound();
}

void Solver::run(long steps) {
    for (long s = 0; s < steps; ++s) step();
}

}  // namespace latnet::lbm
