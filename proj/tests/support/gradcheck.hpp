#pragma once

#include "latnet/ad/graph.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

namespace gradcheck {

using latnet::ad::Graph;
using latnet::ad::Tensor;
using latnet::ad::Var;

/// Relative error ||a - n|| / max(||a||, ||n||, tiny) between analytic and
/// central-difference gradients over every perturbed scalar.
struct Result {
    double rel_error = 0;
    double max_abs_diff = 0;
    std::size_t checked = 0;
};

inline Result compare(const std::vector<double>& analytic, const std::vector<double>& numeric) {
    Result r;
    double diff2 = 0, a2 = 0, n2 = 0;
    for (std::size_t i = 0; i < analytic.size(); ++i) {
        const double d = analytic[i] - numeric[i];
        diff2 += d * d;
        a2 += analytic[i] * analytic[i];
        n2 += numeric[i] * numeric[i];
        r.max_abs_diff = std::max(r.max_abs_diff, std::abs(d));
    }
    r.rel_error = std::sqrt(diff2) / std::max({std::sqrt(a2), std::sqrt(n2), 1e-30});
    r.checked = analytic.size();
    return r;
}

/// Perturbs every scalar pointed to by `slots` by +-h and differentiates
/// `loss` numerically.
inline std::vector<double> numeric_gradient(const std::function<double()>& loss, const std::vector<double*>& slots,
                                            double h = 1e-5) {
    std::vector<double> out;
    for (double* s : slots) {
        const double keep = *s;
        *s = keep + h;
        const double up = loss();
        *s = keep - h;
        const double down = loss();
        *s = keep;
        out.push_back((up - down) / (2 * h));
    }
    return out;
}

/// Builds `fn` on input leaves, backpropagates the scalar it returns, and
/// compares each input's gradient with central differences.
inline Result check_inputs(const std::function<Var<double>(Graph<double>&, std::vector<Var<double>>&)>& fn,
                           std::vector<Tensor<double>> inputs, double h = 1e-5) {
    std::vector<double> analytic;
    {
        Graph<double> g;
        std::vector<Var<double>> vars;
        for (auto& t : inputs) vars.push_back(g.input(t));
        Var<double> loss = fn(g, vars);
        g.backward(loss);
        for (auto& v : vars) {
            const Tensor<double>& gr = g.grad(v.id());
            analytic.insert(analytic.end(), gr.data.begin(), gr.data.end());
        }
    }
    auto eval = [&] {
        Graph<double> g(false);
        std::vector<Var<double>> vars;
        for (auto& t : inputs) vars.push_back(g.constant(t));
        return fn(g, vars).value().data[0];
    };
    std::vector<double*> slots;
    for (auto& t : inputs)
        for (double& v : t.data) slots.push_back(&v);
    return compare(analytic, numeric_gradient(eval, slots, h));
}

}  // namespace gradcheck
