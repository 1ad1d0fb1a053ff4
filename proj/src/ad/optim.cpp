#include "latnet/ad/optim.hpp"

#include "latnet/error.hpp"

#include <cmath>

namespace latnet::ad {

template <typename T>
void adam_step(Parameter<T>& p, const AdamConfig& cfg) {
    if (p.grad.shape != p.value.shape) throw ShapeError("adam_step: gradient shape differs from parameter " + p.name);
    if (p.m.shape != p.value.shape) p.m = Tensor<T>(p.value.shape);
    if (p.v.shape != p.value.shape) p.v = Tensor<T>(p.value.shape);
    ++p.step;
    const double t = static_cast<double>(p.step);
    const double c1 = 1.0 - std::pow(cfg.beta1, t);
    const double c2 = 1.0 - std::pow(cfg.beta2, t);
    for (std::size_t i = 0; i < p.value.size(); ++i) {
        const double g = p.grad.data[i];
        const double m = cfg.beta1 * static_cast<double>(p.m.data[i]) + (1.0 - cfg.beta1) * g;
        const double v = cfg.beta2 * static_cast<double>(p.v.data[i]) + (1.0 - cfg.beta2) * g * g;
        p.m.data[i] = static_cast<T>(m);
        p.v.data[i] = static_cast<T>(v);
        const double update = cfg.lr * (m / c1) / (std::sqrt(v / c2) + cfg.eps);
        p.value.data[i] = static_cast<T>(static_cast<double>(p.value.data[i]) - update);
    }
}

template void adam_step<float>(Parameter<float>&, const AdamConfig&);
template void adam_step<double>(Parameter<double>&, const AdamConfig&);

}  // namespace latnet::ad
