#pragma once

#include "gradcheck.hpp"

#include "latnet/ad/ops.hpp"

#include <functional>
#include <random>
#include <string>
#include <vector>

namespace opcases {

using latnet::ad::Graph;
using latnet::ad::Shape;
using latnet::ad::Tensor;
using latnet::ad::Var;

inline Tensor<double> random_tensor(Shape shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> d(lo, hi);
    Tensor<double> t(std::move(shape));
    for (double& v : t.data) v = d(rng);
    return t;
}

// Magnitudes in [0.05, 1] with random sign, so the kinks of |.| and leaky_relu
// are never straddled by a finite-difference stencil.
inline Tensor<double> off_zero_tensor(Shape shape, std::mt19937_64& rng) {
    Tensor<double> t = random_tensor(std::move(shape), rng, 0.05, 1.0);
    std::bernoulli_distribution sign(0.5);
    for (double& v : t.data)
        if (sign(rng)) v = -v;
    return t;
}

// Scalar probe of a tensor-valued op through a fixed random projection.
inline Var<double> project(Graph<double>& g, Var<double> y, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return latnet::ad::sum(latnet::ad::mul(y, g.constant(random_tensor(y.shape(), rng))));
}

struct Case {
    std::string name;
    std::function<Var<double>(Graph<double>&, std::vector<Var<double>>&)> fn;
    std::vector<Tensor<double>> inputs;
};

/// One case per differentiable op of the tensor engine.
inline std::vector<Case> all_ops(std::uint64_t seed) {
    using namespace latnet::ad;
    std::mt19937_64 rng(seed);
    using Vars = std::vector<Var<double>>;
    std::vector<Case> c;
    c.push_back({"conv2d stride 1", [](Graph<double>& g, Vars& v) { return project(g, conv2d(v[0], v[1], 1), 1); },
                 {random_tensor({2, 5, 4, 3}, rng), random_tensor({3, 3, 3, 2}, rng)}});
    c.push_back({"conv2d stride 2", [](Graph<double>& g, Vars& v) { return project(g, conv2d(v[0], v[1], 2), 2); },
                 {random_tensor({1, 6, 7, 2}, rng), random_tensor({4, 4, 2, 3}, rng)}});
    c.push_back({"conv2d 1x1 stride 2",
                 [](Graph<double>& g, Vars& v) { return project(g, conv2d(v[0], v[1], 2), 13); },
                 {random_tensor({1, 4, 6, 2}, rng), random_tensor({1, 1, 2, 4}, rng)}});
    c.push_back({"transpose_conv2d",
                 [](Graph<double>& g, Vars& v) { return project(g, transpose_conv2d(v[0], v[1], 2), 3); },
                 {random_tensor({2, 3, 4, 3}, rng), random_tensor({4, 4, 2, 3}, rng)}});
    c.push_back({"add_bias", [](Graph<double>& g, Vars& v) { return project(g, add_bias(v[0], v[1]), 4); },
                 {random_tensor({2, 3, 3, 4}, rng), random_tensor({4}, rng)}});
    c.push_back({"add", [](Graph<double>& g, Vars& v) { return project(g, add(v[0], v[1]), 5); },
                 {random_tensor({1, 3, 2, 2}, rng), random_tensor({1, 3, 2, 2}, rng)}});
    c.push_back({"sub", [](Graph<double>& g, Vars& v) { return project(g, sub(v[0], v[1]), 6); },
                 {random_tensor({1, 3, 2, 2}, rng), random_tensor({1, 3, 2, 2}, rng)}});
    c.push_back({"mul", [](Graph<double>& g, Vars& v) { return project(g, mul(v[0], v[1]), 7); },
                 {random_tensor({1, 3, 2, 2}, rng), random_tensor({1, 3, 2, 2}, rng)}});
    c.push_back({"scale", [](Graph<double>& g, Vars& v) { return project(g, scale(v[0], -2.5), 8); },
                 {random_tensor({1, 2, 2, 3}, rng)}});
    c.push_back({"leaky_relu", [](Graph<double>& g, Vars& v) { return project(g, leaky_relu(v[0], 0.1), 9); },
                 {off_zero_tensor({1, 4, 4, 2}, rng)}});
    c.push_back({"slice_channels",
                 [](Graph<double>& g, Vars& v) { return project(g, slice_channels(v[0], 1, 3), 10); },
                 {random_tensor({2, 2, 3, 4}, rng)}});
    c.push_back({"sum", [](Graph<double>&, Vars& v) { return sum(v[0]); }, {random_tensor({1, 2, 3, 2}, rng)}});
    c.push_back({"mse", [](Graph<double>&, Vars& v) { return mse(v[0], v[1]); },
                 {random_tensor({2, 3, 3, 2}, rng), random_tensor({2, 3, 3, 2}, rng)}});
    c.push_back({"gdl", [](Graph<double>&, Vars& v) { return gdl(v[0], v[1]); },
                 {off_zero_tensor({2, 4, 5, 2}, rng), off_zero_tensor({2, 4, 5, 2}, rng)}});
    return c;
}

}  // namespace opcases
