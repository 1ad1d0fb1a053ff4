#include "latnet/ad/tensor.hpp"

#include "latnet/error.hpp"

#include <cmath>

namespace latnet::ad {

std::size_t numel(const Shape& shape) {
    std::size_t n = 1;
    for (auto d : shape) n *= d;
    return n;
}

std::string shape_string(const Shape& shape) {
    std::string s = "(";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) s += ", ";
        s += std::to_string(shape[i]);
    }
    return s + ")";
}

template <typename T>
Tensor<T>::Tensor(Shape s, T fill) : shape(std::move(s)), data(numel(shape), fill) {}

template <typename T>
Tensor<T>::Tensor(Shape s, std::vector<T> values) : shape(std::move(s)), data(std::move(values)) {
    if (data.size() != numel(shape)) {
        throw ShapeError("tensor of shape " + shape_string(shape) + " needs " + std::to_string(numel(shape)) +
                         " values, got " + std::to_string(data.size()));
    }
}

template <typename T>
bool Tensor<T>::all_finite() const {
    for (const T& v : data) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

template <typename T>
Tensor<T> stack_batch(const std::vector<const Tensor<T>*>& items) {
    if (items.empty()) throw ShapeError("stack_batch needs at least one tensor");
    const Shape& first = items.front()->shape;
    if (first.empty() || first[0] != 1) throw ShapeError("stack_batch expects tensors with a leading axis of 1");
    Shape shape = first;
    shape[0] = items.size();
    Tensor<T> out;
    out.shape = shape;
    out.data.reserve(numel(shape));
    for (const Tensor<T>* t : items) {
        if (t->shape != first) {
            throw ShapeError("stack_batch: shape " + shape_string(t->shape) + " differs from " + shape_string(first));
        }
        out.data.insert(out.data.end(), t->data.begin(), t->data.end());
    }
    return out;
}

template <typename T>
Tensor<T> batch_item(const Tensor<T>& t, std::size_t b) {
    if (t.rank() == 0 || b >= t.shape[0]) throw ShapeError("batch index out of range");
    Shape shape = t.shape;
    shape[0] = 1;
    const std::size_t per = numel(shape);
    Tensor<T> out;
    out.shape = shape;
    out.data.assign(t.data.begin() + static_cast<std::ptrdiff_t>(b * per),
                    t.data.begin() + static_cast<std::ptrdiff_t>((b + 1) * per));
    return out;
}

template struct Tensor<float>;
template struct Tensor<double>;
template Tensor<float> stack_batch(const std::vector<const Tensor<float>*>&);
template Tensor<double> stack_batch(const std::vector<const Tensor<double>*>&);
template Tensor<float> batch_item(const Tensor<float>&, std::size_t);
template Tensor<double> batch_item(const Tensor<double>&, std::size_t);

}  // namespace latnet::ad
