#include "gradcheck.hpp"
#include "op_cases.hpp"

#include "latnet/ad/conv_kernels.hpp"
#include "latnet/ad/ops.hpp"
#include "latnet/ad/optim.hpp"
#include "latnet/error.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace latnet;
using namespace latnet::ad;

namespace {

using opcases::off_zero_tensor;
using opcases::project;
using opcases::random_tensor;

double dot(const Tensor<double>& a, const Tensor<double>& b) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a.data[i] * b.data[i];
    return s;
}

}  // namespace

TEST_CASE("conv of ones with a ones kernel counts in-bounds taps") {
    Graph<double> g(false);
    Var<double> x = g.constant(Tensor<double>({1, 4, 5, 1}, 1.0));
    Var<double> k = g.constant(Tensor<double>({3, 3, 1, 1}, 1.0));
    const Tensor<double>& y = conv2d(x, k, 1).value();
    REQUIRE(y.shape == Shape{1, 4, 5, 1});
    CHECK(y.at(0, 0, 0, 0) == 4.0);
    CHECK(y.at(0, 3, 4, 0) == 4.0);
    CHECK(y.at(0, 0, 2, 0) == 6.0);
    CHECK(y.at(0, 2, 0, 0) == 6.0);
    CHECK(y.at(0, 1, 1, 0) == 9.0);
    CHECK(y.at(0, 2, 3, 0) == 9.0);
}

TEST_CASE("same padding geometry") {
    const ConvShape s = same_conv_shape(1, 8, 7, 2, 4, 4, 3, 2);
    CHECK(s.out_h == 4);
    CHECK(s.out_w == 4);
    CHECK(s.pad_h == 1);  // total 2
    CHECK(s.pad_w == 1);  // total 3, smaller half in front
    const ConvShape t = same_conv_shape(1, 5, 5, 1, 3, 3, 1, 1);
    CHECK(t.out_h == 5);
    CHECK(t.pad_h == 1);
}

TEST_CASE("conv and transpose conv values against a direct loop") {
    std::mt19937_64 rng(3);
    const Tensor<double> x = random_tensor({2, 6, 5, 3}, rng);
    const Tensor<double> k = random_tensor({4, 4, 3, 2}, rng);
    Graph<double> g(false);
    const Tensor<double> y = conv2d(g.constant(x), g.constant(k), 2).value();
    REQUIRE(y.shape == Shape{2, 3, 3, 2});
    const ConvShape s = same_conv_shape(2, 6, 5, 3, 4, 4, 2, 2);
    double worst = 0;
    for (int b = 0; b < 2; ++b)
        for (int ox = 0; ox < 3; ++ox)
            for (int oy = 0; oy < 3; ++oy)
                for (int co = 0; co < 2; ++co) {
                    double acc = 0;
                    for (int i = 0; i < 4; ++i)
                        for (int j = 0; j < 4; ++j) {
                            const int ix = ox * 2 - s.pad_h + i;
                            const int iy = oy * 2 - s.pad_w + j;
                            if (ix < 0 || ix >= 6 || iy < 0 || iy >= 5) continue;
                            for (int ci = 0; ci < 3; ++ci) acc += x.at(b, ix, iy, ci) * k.data[((i * 4 + j) * 3 + ci) * 2 + co];
                        }
                    worst = std::max(worst, std::abs(acc - y.at(b, ox, oy, co)));
                }
    CHECK(worst < 1e-13);
}

TEST_CASE("transpose conv is the adjoint of conv") {
    std::mt19937_64 rng(11);
    for (int stride : {1, 2}) {
        const Tensor<double> k = random_tensor({4, 4, 3, 5}, rng);
        const Tensor<double> x = random_tensor({2, 8, 6, 3}, rng);
        const Tensor<double> y = random_tensor({2, std::size_t(8 / stride), std::size_t(6 / stride), 5}, rng);
        Graph<double> g(false);
        const Tensor<double> cx = conv2d(g.constant(x), g.constant(k), stride).value();
        const Tensor<double> ty = transpose_conv2d(g.constant(y), g.constant(k), stride).value();
        REQUIRE(ty.shape == x.shape);
        const double lhs = dot(cx, y);
        const double rhs = dot(x, ty);
        CHECK(std::abs(lhs - rhs) <= 1e-12 * std::max(1.0, std::abs(lhs)));
    }
}

TEST_CASE("gradient checks of every differentiable op") {
    for (const opcases::Case& c : opcases::all_ops(5)) {
        CAPTURE(c.name);
        const gradcheck::Result r = gradcheck::check_inputs(c.fn, c.inputs);
        CHECK(r.checked > 0);
        CHECK(r.rel_error < 1e-5);
    }
}

TEST_CASE("5x5 conv gradient is tight") {
    std::mt19937_64 rng(21);
    const gradcheck::Result r = gradcheck::check_inputs(
        [](Graph<double>& g, std::vector<Var<double>>& v) { return project(g, conv2d(v[0], v[1], 1), 12); },
        {random_tensor({1, 7, 6, 2}, rng), random_tensor({5, 5, 2, 3}, rng)});
    CHECK(r.rel_error < 1e-6);
}

TEST_CASE("mse and gdl values") {
    Graph<double> g(false);
    // a: x-differences 1, y-differences 2; b constant.
    Tensor<double> a({1, 2, 2, 1}, std::vector<double>{0.0, 2.0, 1.0, 3.0});
    Tensor<double> b({1, 2, 2, 1}, 5.0);
    CHECK(gdl(g.constant(a), g.constant(b)).value().data[0] == doctest::Approx(1.0 + 4.0).epsilon(1e-15));
    CHECK(mse(g.constant(a), g.constant(b)).value().data[0] == doctest::Approx((25 + 9 + 16 + 4) / 4.0));
    CHECK(gdl(g.constant(a), g.constant(a)).value().data[0] == 0.0);
    // Sign flips leave gradient magnitudes unchanged.
    Tensor<double> neg = a;
    for (double& v : neg.data) v = -v;
    CHECK(gdl(g.constant(a), g.constant(neg)).value().data[0] == 0.0);
}

TEST_CASE("shape mismatches are rejected") {
    Graph<double> g;
    Var<double> a = g.input(Tensor<double>({1, 2, 2, 3}));
    Var<double> b = g.input(Tensor<double>({1, 2, 2, 2}));
    CHECK_THROWS_AS(add(a, b), ShapeError);
    CHECK_THROWS_AS(conv2d(a, g.constant(Tensor<double>({3, 3, 2, 1})), 1), ShapeError);
    CHECK_THROWS_AS(add_bias(a, g.constant(Tensor<double>({2}))), ShapeError);
    CHECK_THROWS_AS(slice_channels(a, 2, 5), ShapeError);
}

TEST_CASE("graph backward contract") {
    Graph<double> g;
    Var<double> x = g.input(Tensor<double>({2}, 1.0));
    CHECK_THROWS_AS(g.backward(x), ContractError);
    Graph<double> other;
    Var<double> y = other.input(Tensor<double>({2}, 1.0));
    CHECK_THROWS_AS(add(x, y), ContractError);
    Graph<double> inference(false);
    Var<double> z = sum(inference.input(Tensor<double>({2}, 1.0)));
    CHECK_THROWS_AS(inference.backward(z), ContractError);
}

TEST_CASE("non-finite values raise numeric errors") {
    Graph<double> g;
    Var<double> x = g.input(Tensor<double>({1}, 1e200));
    CHECK_THROWS_AS(mul(x, x), NumericError);
}

TEST_CASE("parameters accumulate gradients and unused ones stay zero") {
    Parameter<double> used("used", Tensor<double>({3}, std::vector<double>{1, 2, 3}));
    Parameter<double> unused("unused", Tensor<double>({2}, 1.0));
    Graph<double> g;
    Var<double> p = g.parameter(used);
    CHECK(g.parameter(used).id() == p.id());
    Var<double> loss = add(sum(mul(p, p)), sum(p));
    g.backward(loss);
    CHECK(used.grad.data == std::vector<double>{3, 5, 7});
    CHECK(unused.grad.data == std::vector<double>{0, 0});
    used.zero_grad();
    CHECK(used.grad.data == std::vector<double>{0, 0, 0});
}

TEST_CASE("adam matches a hand-computed update") {
    Parameter<double> p("p", Tensor<double>({2}, std::vector<double>{1.0, -2.0}));
    p.grad.data = {0.5, -4.0};
    AdamConfig cfg;
    cfg.lr = 0.01;
    adam_step(p, cfg);
    // After one step m_hat = g and v_hat = g^2, so the update is lr * g / (|g| + eps).
    CHECK(p.value.data[0] == doctest::Approx(1.0 - 0.01 * 0.5 / (0.5 + 1e-8)).epsilon(1e-14));
    CHECK(p.value.data[1] == doctest::Approx(-2.0 + 0.01 * 4.0 / (4.0 + 1e-8)).epsilon(1e-14));
    CHECK(p.m.data[0] == doctest::Approx(0.05));
    CHECK(p.v.data[1] == doctest::Approx(0.001 * 16.0));
    CHECK(p.step == 1);

    // Second step with a fresh gradient, computed independently.
    p.grad.data = {1.0, 1.0};
    adam_step(p, cfg);
    const double m = 0.9 * 0.05 + 0.1 * 1.0;
    const double v = 0.999 * 0.001 * 0.25 + 0.001 * 1.0;
    const double expect = (1.0 - 0.01 * 0.5 / (0.5 + 1e-8)) - 0.01 * (m / (1 - 0.81)) / (std::sqrt(v / (1 - 0.998001)) + 1e-8);
    CHECK(p.value.data[0] == doctest::Approx(expect).epsilon(1e-14));
}

TEST_CASE("adam minimizes a quadratic bowl") {
    Parameter<double> p("p", Tensor<double>({3}, std::vector<double>{4.0, -3.0, 0.5}));
    const std::vector<double> centre{1.0, 2.0, -1.0};
    AdamConfig cfg;
    cfg.lr = 0.1;
    for (int it = 0; it < 2000; ++it) {
        for (std::size_t i = 0; i < 3; ++i) p.grad.data[i] = 2.0 * (p.value.data[i] - centre[i]);
        adam_step(p, cfg);
    }
    for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(p.value.data[i] - centre[i]) < 1e-3);
}

TEST_CASE("adam descends |w|^2 until momentum first carries w past the minimum") {
    Parameter<double> p("w", Tensor<double>({2}, std::vector<double>{1.0, 1.0}));
    AdamConfig cfg;
    cfg.lr = 0.1;
    auto loss = [&] { return p.value.data[0] * p.value.data[0] + p.value.data[1] * p.value.data[1]; };
    const double initial = loss();
    double prev = initial;
    bool crossed = false;
    int monotone_steps = 0;
    for (int it = 0; it < 100; ++it) {
        for (std::size_t i = 0; i < 2; ++i) p.grad.data[i] = 2.0 * p.value.data[i];
        adam_step(p, cfg);
        crossed = crossed || p.value.data[0] <= 0.0;
        const double now = loss();
        if (!crossed) {
            CHECK(now < prev);
            ++monotone_steps;
        }
        prev = now;
    }
    CHECK(monotone_steps >= 8);
    CHECK(loss() < 0.05 * initial);
}
