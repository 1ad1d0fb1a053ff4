#include "latnet/lbm/metrics.hpp"

#include "latnet/error.hpp"

#include <cmath>

namespace latnet::lbm {
namespace {

using V = D2Q9;

void check_shapes(int nx, int ny, const BoundaryMask& m) {
    if (nx != m.nx || ny != m.ny) throw ShapeError("field and mask dims differ");
}

bool interior_stencil(const BoundaryMask& mask, int x, int y) {
    if (x <= 0 || y <= 0 || x >= mask.nx - 1 || y >= mask.ny - 1) return false;
    return !mask.is_solid(x, y) && !mask.is_solid(x - 1, y) && !mask.is_solid(x + 1, y) &&
           !mask.is_solid(x, y - 1) && !mask.is_solid(x, y + 1);
}

}  // namespace

Vec2 drag(const LatticeState& state, const BoundaryMask& mask, BoundaryMode mode) {
    check_shapes(state.nx, state.ny, mask);
    if (mask.solid_count() == 0) throw EmptyBoundaryError("drag needs at least one solid cell");
    Vec2 force;
    for (int x = 0; x < state.nx; ++x) {
        for (int y = 0; y < state.ny; ++y) {
            if (mask.is_solid(x, y)) continue;
            for (int i = 1; i < V::Q; ++i) {
                int tx = x + V::cx[i];
                if (mode == BoundaryMode::fully_periodic) {
                    tx = (tx + state.nx) % state.nx;
                } else if (tx < 0 || tx >= state.nx) {
                    continue;
                }
                int ty = (y + V::cy[i]) % state.ny;
                if (ty < 0) ty += state.ny;
                if (!mask.is_solid(tx, ty)) continue;
                const double incident = state.at(x, y, i);
                const double bounced = incident;
                force.x += V::cx[i] * (incident + bounced);
                force.y += V::cy[i] * (incident + bounced);
            }
        }
    }
    return force;
}

Vec2 flux_average(const LatticeState& state, const BoundaryMask& mask) {
    check_shapes(state.nx, state.ny, mask);
    const std::size_t fluid = mask.fluid_count();
    if (fluid == 0) throw EmptyDomainError("flux average needs at least one fluid cell");
    double jx = 0.0, jy = 0.0;
    for (int x = 0; x < state.nx; ++x) {
        for (int y = 0; y < state.ny; ++y) {
            if (mask.is_solid(x, y)) continue;
            for (int i = 0; i < V::Q; ++i) {
                jx += V::cx[i] * state.at(x, y, i);
                jy += V::cy[i] * state.at(x, y, i);
            }
        }
    }
    return {jx / static_cast<double>(fluid), jy / static_cast<double>(fluid)};
}

std::vector<double> divergence_field(const std::vector<double>& u, const BoundaryMask& mask) {
    const std::size_t cells = static_cast<std::size_t>(mask.nx) * static_cast<std::size_t>(mask.ny);
    if (u.size() != 2 * cells) throw ShapeError("velocity field does not match mask dims");
    std::vector<double> div(cells, 0.0);
    auto ux = [&](int x, int y) { return u[2 * mask.index(x, y)]; };
    auto uy = [&](int x, int y) { return u[2 * mask.index(x, y) + 1]; };
    for (int x = 0; x < mask.nx; ++x) {
        for (int y = 0; y < mask.ny; ++y) {
            if (!interior_stencil(mask, x, y)) continue;
            div[mask.index(x, y)] = 0.5 * (ux(x + 1, y) - ux(x - 1, y)) + 0.5 * (uy(x, y + 1) - uy(x, y - 1));
        }
    }
    return div;
}

double mean_abs_divergence(const std::vector<double>& u, const BoundaryMask& mask) {
    const std::vector<double> div = divergence_field(u, mask);
    double sum = 0.0;
    std::size_t count = 0;
    for (int x = 0; x < mask.nx; ++x) {
        for (int y = 0; y < mask.ny; ++y) {
            if (!interior_stencil(mask, x, y)) continue;
            sum += std::abs(div[mask.index(x, y)]);
            ++count;
        }
    }
    return count == 0 ? 0.0 : sum / static_cast<double>(count);
}

double mlups(std::uint64_t cells, std::uint64_t lbm_steps_equivalent, double wall_seconds) {
    if (!(wall_seconds > 0.0) || !std::isfinite(wall_seconds)) {
        throw InvalidInputError("mlups: wall time must be positive");
    }
    return static_cast<double>(cells) * static_cast<double>(lbm_steps_equivalent) * 1e-6 / wall_seconds;
}

}  // namespace latnet::lbm
