#include "reference_lbm.hpp"

#include "latnet/datagen/rng.hpp"
#include "latnet/error.hpp"
#include "latnet/lbm/metrics.hpp"
#include "latnet/lbm/solver.hpp"
#include "latnet/util/parallel.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

using namespace latnet;
using namespace latnet::lbm;

namespace {

double total_mass(const LatticeState& s) { return std::accumulate(s.f.begin(), s.f.end(), 0.0); }

LatticeState random_state(const BoundaryMask& mask, std::uint64_t seed, double hi = 0.2) {
    datagen::Rng rng(seed);
    LatticeState s(mask.nx, mask.ny);
    for (int x = 0; x < mask.nx; ++x)
        for (int y = 0; y < mask.ny; ++y)
            for (int i = 0; i < 9; ++i) s.at(x, y, i) = mask.is_solid(x, y) ? 0.0 : rng.uniform(0.0, hi);
    return s;
}

}  // namespace

TEST_CASE("velocity set satisfies its moment identities") {
    CHECK(velocity_set_is_consistent());
    double sw = 0, swx = 0, swy = 0, sxx = 0, sxy = 0, syy = 0;
    for (int i = 0; i < 9; ++i) {
        sw += D2Q9::w[i];
        swx += D2Q9::w[i] * D2Q9::cx[i];
        swy += D2Q9::w[i] * D2Q9::cy[i];
        sxx += D2Q9::w[i] * D2Q9::cx[i] * D2Q9::cx[i];
        sxy += D2Q9::w[i] * D2Q9::cx[i] * D2Q9::cy[i];
        syy += D2Q9::w[i] * D2Q9::cy[i] * D2Q9::cy[i];
        CHECK(D2Q9::opposite[D2Q9::opposite[i]] == i);
        CHECK(D2Q9::cx[D2Q9::opposite[i]] == -D2Q9::cx[i]);
    }
    CHECK(sw == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(std::abs(swx) < 1e-16);
    CHECK(std::abs(swy) < 1e-16);
    CHECK(sxx == doctest::Approx(1.0 / 3).epsilon(1e-15));
    CHECK(syy == doctest::Approx(1.0 / 3).epsilon(1e-15));
    CHECK(std::abs(sxy) < 1e-16);
    CHECK(D2Q9::cx[0] == 0);
    CHECK(D2Q9::cy[0] == 0);
}

TEST_CASE("equilibrium values and moments") {
    const Populations rest = equilibrium(1.0, 0.0, 0.0);
    for (int i = 0; i < 9; ++i) CHECK(rest[i] == doctest::Approx(D2Q9::w[i]).epsilon(1e-15));
    const Populations two = equilibrium(2.0, 0.0, 0.0);
    for (int i = 0; i < 9; ++i) CHECK(two[i] == doctest::Approx(2 * D2Q9::w[i]).epsilon(1e-15));

    const Populations f = equilibrium(1.0, 0.04, 0.0);
    double oracle[9];
    refsim::equilibrium(1.0, 0.04, 0.0, oracle);
    double rho = 0, jx = 0, jy = 0;
    for (int i = 0; i < 9; ++i) {
        CHECK(std::abs(f[i] - oracle[i]) < 1e-15);
        rho += f[i];
        jx += D2Q9::cx[i] * f[i];
        jy += D2Q9::cy[i] * f[i];
    }
    CHECK(std::abs(rho - 1.0) < 1e-12);
    CHECK(std::abs(jx - 0.04) < 1e-12);
    CHECK(std::abs(jy) < 1e-12);
    // Frozen values of the second-order polynomial at u = (0.04, 0).
    CHECK(f[0] == doctest::Approx(0.44337777777777776).epsilon(1e-13));
    CHECK(f[1] == doctest::Approx(0.1249777777777778).epsilon(1e-13));
    CHECK(f[3] == doctest::Approx(0.09831111111111111).epsilon(1e-13));
    CHECK(f[5] == doctest::Approx(0.03124444444444445).epsilon(1e-13));

    CHECK_THROWS_AS(equilibrium(std::nan(""), 0, 0), InvalidInputError);
    CHECK_THROWS_AS(equilibrium(1.0, INFINITY, 0), InvalidInputError);
    CHECK_THROWS_AS(equilibrium(0.0, 0, 0), InvalidInputError);
}

TEST_CASE("macroscopics") {
    LatticeState s(3, 2);
    for (int x = 0; x < 3; ++x)
        for (int y = 0; y < 2; ++y)
            for (int i = 0; i < 9; ++i) s.at(x, y, i) = D2Q9::w[i];
    MacroFields m = macroscopics(s);
    for (std::size_t c = 0; c < 6; ++c) {
        CHECK(m.rho[c] == doctest::Approx(1.0).epsilon(1e-15));
        CHECK(std::abs(m.u[2 * c]) < 1e-15);
    }
    const Populations e = equilibrium(1.0, 0.04, 0.0);
    for (int i = 0; i < 9; ++i) s.at(1, 1, i) = e[i];
    m = macroscopics(s);
    CHECK(std::abs(m.ux(1, 1) - 0.04) < 1e-12);
    CHECK(std::abs(m.uy(1, 1)) < 1e-12);

    LatticeState one(1, 1);
    one.at(0, 0, 1) = 1.0;
    m = macroscopics(one);
    CHECK(m.rho[0] == 1.0);
    CHECK(m.ux(0, 0) == 1.0);
    CHECK(m.uy(0, 0) == 0.0);

    LatticeState zero(1, 1);
    m = macroscopics(zero);
    CHECK(m.rho[0] == 0.0);
    CHECK(m.ux(0, 0) == 0.0);
}

TEST_CASE("collision") {
    LatticeState s(1, 1);
    const Populations e = equilibrium(1.1, 0.03, -0.02);
    for (int i = 0; i < 9; ++i) s.at(0, 0, i) = e[i];
    SUBCASE("equilibrium is a fixed point") {
        const LatticeState out = collide(s, 0.8);
        for (int i = 0; i < 9; ++i) CHECK(std::abs(out.at(0, 0, i) - s.at(0, 0, i)) < 1e-15);
    }
    SUBCASE("tau = 1 relaxes fully and tau = 0.6 matches the scalar formula") {
        LatticeState off(1, 1);
        datagen::Rng rng(3);
        for (int i = 0; i < 9; ++i) off.at(0, 0, i) = rng.uniform(0.01, 0.2);
        double rho = 0, jx = 0, jy = 0;
        for (int i = 0; i < 9; ++i) {
            rho += off.at(0, 0, i);
            jx += D2Q9::cx[i] * off.at(0, 0, i);
            jy += D2Q9::cy[i] * off.at(0, 0, i);
        }
        double feq[9];
        refsim::equilibrium(rho, jx / rho, jy / rho, feq);
        const LatticeState full = collide(off, 1.0);
        for (int i = 0; i < 9; ++i) CHECK(std::abs(full.at(0, 0, i) - feq[i]) < 1e-15);
        const LatticeState part = collide(off, 0.6);
        double rho2 = 0, jx2 = 0, jy2 = 0;
        for (int i = 0; i < 9; ++i) {
            const double expect = off.at(0, 0, i) + (feq[i] - off.at(0, 0, i)) / 0.6;
            CHECK(std::abs(part.at(0, 0, i) - expect) < 1e-14);
            rho2 += part.at(0, 0, i);
            jx2 += D2Q9::cx[i] * part.at(0, 0, i);
            jy2 += D2Q9::cy[i] * part.at(0, 0, i);
        }
        CHECK(std::abs(rho2 - rho) < 1e-14);
        CHECK(std::abs(jx2 - jx) < 1e-14);
        CHECK(std::abs(jy2 - jy) < 1e-14);
    }
    SUBCASE("moments invariant per cell on a random grid") {
        BoundaryMask mask(6, 5);
        const LatticeState r = random_state(mask, 17);
        const LatticeState c = collide(r, 0.7);
        const MacroFields a = macroscopics(r), b = macroscopics(c);
        for (std::size_t k = 0; k < a.rho.size(); ++k) {
            CHECK(std::abs(a.rho[k] - b.rho[k]) < 1e-12);
            CHECK(std::abs(a.rho[k] * a.u[2 * k] - b.rho[k] * b.u[2 * k]) < 1e-12);
            CHECK(std::abs(a.rho[k] * a.u[2 * k + 1] - b.rho[k] * b.u[2 * k + 1]) < 1e-12);
        }
    }
    SUBCASE("invalid tau and blow-up") {
        CHECK_THROWS_AS(collide(s, 0.5), InvalidInputError);
        LatticeState big(1, 1);
        big.at(0, 0, 1) = 50.0;
        CHECK_THROWS_AS(collide(big, 0.7), InstabilityError);
        LatticeState nan(1, 1);
        nan.at(0, 0, 2) = std::nan("");
        CHECK_THROWS_AS(collide(nan, 0.7), InstabilityError);
    }
}

TEST_CASE("streaming single-particle traces") {
    BoundaryMask mask(3, 3);
    LatticeState s(3, 3);
    s.at(1, 1, 1) = 1.0;
    const LatticeState moved = stream(s, mask, BoundaryMode::fully_periodic);
    for (std::size_t k = 0; k < moved.f.size(); ++k) CHECK(moved.f[k] == (k == moved.index(2, 1, 1) ? 1.0 : 0.0));

    mask.set_solid(2, 1);
    const LatticeState bounced = stream(s, mask, BoundaryMode::fully_periodic);
    for (std::size_t k = 0; k < bounced.f.size(); ++k)
        CHECK(bounced.f[k] == (k == bounced.index(1, 1, 3) ? 1.0 : 0.0));
}

TEST_CASE("streaming is a permutation and periodic in each axis") {
    BoundaryMask mask(7, 5);
    const LatticeState s0 = random_state(mask, 5);
    LatticeState s = s0;
    for (int k = 0; k < 35; ++k) s = stream(s, mask, BoundaryMode::fully_periodic);
    // After lcm(7, 5) steps every population is back home.
    CHECK(s == s0);
    const LatticeState one = stream(s0, mask, BoundaryMode::fully_periodic);
    std::vector<double> a = s0.f, b = one.f;
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    CHECK(a == b);
    LatticeState xs = s0;
    for (int k = 0; k < 7; ++k) xs = stream(xs, mask, BoundaryMode::fully_periodic);
    for (int x = 0; x < 7; ++x)
        for (int y = 0; y < 5; ++y) {
            CHECK(xs.at(x, y, 1) == s0.at(x, y, 1));
            CHECK(xs.at(x, y, 3) == s0.at(x, y, 3));
        }
}

TEST_CASE("pure streaming conserves mass for 1000 steps") {
    BoundaryMask mask(16, 12);
    LatticeState s = random_state(mask, 9);
    const double m0 = total_mass(s);
    for (int k = 0; k < 1000; ++k) s = stream(s, mask, BoundaryMode::fully_periodic);
    CHECK(std::abs(total_mass(s) - m0) / m0 < 1e-13);
}

TEST_CASE("inlet and outlet replacement") {
    BoundaryMask mask(6, 4);
    SolverConfig cfg;
    const LatticeState u = uniform_state(mask, 1.0, 0.04, 0.0);
    const LatticeState same = apply_inlet_outlet(u, mask, cfg);
    for (std::size_t k = 0; k < u.f.size(); ++k) CHECK(std::abs(same.f[k] - u.f[k]) < 1e-12);

    LatticeState z = u;
    for (int y = 0; y < 4; ++y)
        for (int i = 0; i < 9; ++i) z.at(0, y, i) = 0.0;
    const LatticeState fixed = apply_inlet_outlet(z, mask, cfg);
    const Populations in = equilibrium(1.0, 0.04, 0.0);
    for (int y = 0; y < 4; ++y)
        for (int i = 0; i < 9; ++i) CHECK(fixed.at(0, y, i) == in[i]);

    LatticeState d = u;
    const Populations dense = equilibrium(1.01, 0.0, 0.0);
    for (int y = 0; y < 4; ++y)
        for (int i = 0; i < 9; ++i) d.at(5, y, i) = dense[i];
    const LatticeState out = apply_inlet_outlet(d, mask, cfg);
    double oracle[9];
    refsim::equilibrium(1.01, 0.04, 0.0, oracle);
    for (int y = 0; y < 4; ++y)
        for (int i = 0; i < 9; ++i) CHECK(std::abs(out.at(5, y, i) - oracle[i]) < 1e-15);

    SolverConfig periodic = cfg;
    periodic.boundary_mode = BoundaryMode::fully_periodic;
    CHECK(apply_inlet_outlet(z, mask, periodic) == z);
}

TEST_CASE("step conserves mass in periodic domains with and without solids") {
    SolverConfig cfg;
    cfg.boundary_mode = BoundaryMode::fully_periodic;
    BoundaryMask mask(20, 16);
    LatticeState s = random_state(mask, 21);
    const double m0 = total_mass(s);
    Solver solver(s, mask, cfg);
    solver.run(300);
    CHECK(std::abs(total_mass(solver.state()) - m0) / m0 < 1e-12);

    for (int x = 8; x < 12; ++x)
        for (int y = 6; y < 10; ++y) mask.set_solid(x, y);
    LatticeState s2 = random_state(mask, 22);
    const double m1 = total_mass(s2);
    Solver solid(s2, mask, cfg);
    solid.run(300);
    CHECK(std::abs(total_mass(solid.state()) - m1) / m1 < 1e-12);
    for (int x = 8; x < 12; ++x)
        for (int y = 6; y < 10; ++y)
            for (int i = 0; i < 9; ++i) CHECK(solid.state().at(x, y, i) == 0.0);
}

TEST_CASE("step matches the naive reference on random masks") {
    datagen::Rng rng(99);
    for (int trial = 0; trial < 10; ++trial) {
        const bool open = trial % 2 == 0;
        BoundaryMask mask(8, 8);
        for (int x = open ? 1 : 0; x < (open ? 7 : 8); ++x)
            for (int y = 0; y < 8; ++y) mask.set_solid(x, y, rng.uniform01() < 0.2);
        LatticeState s = random_state(mask, 1000 + trial);
        SolverConfig cfg;
        cfg.tau = 0.55 + 0.5 * rng.uniform01();
        cfg.boundary_mode = open ? BoundaryMode::periodic_y_inlet_outlet_x : BoundaryMode::fully_periodic;
        refsim::Grid g{8, 8, s.f, std::vector<int>(mask.solid.begin(), mask.solid.end())};
        Solver solver(s, mask, cfg);
        for (int k = 0; k < 5; ++k) {
            solver.step();
            refsim::step(g, cfg.tau, open, cfg.inlet_velocity);
        }
        double diff = 0;
        for (std::size_t k = 0; k < g.f.size(); ++k) diff = std::max(diff, std::abs(g.f[k] - solver.state().f[k]));
        CHECK(diff < 1e-13);
    }
}

TEST_CASE("results do not depend on the worker count") {
    BoundaryMask mask(24, 20);
    for (int x = 9; x < 13; ++x)
        for (int y = 7; y < 12; ++y) mask.set_solid(x, y);
    const LatticeState s = uniform_state(mask, 1.0, 0.04, 0.0);
    SolverConfig cfg;
    util::set_thread_count(1);
    Solver a(s, mask, cfg);
    a.run(50);
    util::set_thread_count(3);
    Solver b(s, mask, cfg);
    b.run(50);
    util::set_thread_count(1);
    CHECK(a.state() == b.state());
}

TEST_CASE("solver rejects bad configuration and mismatched shapes") {
    BoundaryMask mask(4, 4);
    SolverConfig cfg;
    cfg.tau = 0.5;
    CHECK_THROWS_AS(Solver(uniform_state(mask, 1, 0, 0), mask, cfg), InvalidInputError);
    cfg.tau = 0.7;
    CHECK_THROWS_AS(Solver(LatticeState(3, 4), mask, cfg), ShapeError);
    CHECK(cfg.viscosity() == doctest::Approx(0.2 / 3));
    CHECK(boundary_mode_from_string(to_string(BoundaryMode::fully_periodic)) == BoundaryMode::fully_periodic);
    CHECK(boundary_mode_from_string("channel") == BoundaryMode::periodic_y_inlet_outlet_x);
    CHECK_THROWS_AS(boundary_mode_from_string("sideways"), InvalidInputError);
}

TEST_CASE("instability is reported with the step index") {
    BoundaryMask mask(8, 8);
    LatticeState s = uniform_state(mask, 1.0, 0.0, 0.0);
    SolverConfig cfg;
    cfg.boundary_mode = BoundaryMode::fully_periodic;
    Solver solver(s, mask, cfg);
    solver.run(3);
    solver.mutable_state().at(4, 4, 0) = 1e3;
    try {
        solver.step();
        FAIL("expected an instability error");
    } catch (const InstabilityError& e) {
        CHECK(e.step() == 3);
    }
}
