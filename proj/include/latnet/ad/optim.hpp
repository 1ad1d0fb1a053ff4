#pragma once

#include "latnet/ad/graph.hpp"

#include <vector>

namespace latnet::ad {

struct AdamConfig {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// One Adam update from p.grad with bias correction:
///   m = b1 m + (1 - b1) g;  v = b2 v + (1 - b2) g^2;  t += 1
///   p -= lr * (m / (1 - b1^t)) / (sqrt(v / (1 - b2^t)) + eps)
/// The moment arithmetic runs in double and is rounded to T once per element.
template <typename T>
void adam_step(Parameter<T>& p, const AdamConfig& cfg);

template <typename T>
void adam_step(const std::vector<Parameter<T>*>& params, const AdamConfig& cfg) {
    for (Parameter<T>* p : params) adam_step(*p, cfg);
}

}  // namespace latnet::ad
