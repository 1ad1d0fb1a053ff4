#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace latnet::ad {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string shape_string(const Shape& shape);

/// Dense row-major array. Image tensors are (n, h, w, c) with c innermost;
/// for lattice data h is the x axis and w the y axis.
template <typename T>
struct Tensor {
    Shape shape;
    std::vector<T> data;

    Tensor() = default;
    explicit Tensor(Shape s, T fill = T(0));
    Tensor(Shape s, std::vector<T> values);

    std::size_t size() const { return data.size(); }
    std::size_t rank() const { return shape.size(); }
    std::size_t dim(std::size_t i) const { return shape.at(i); }

    T& operator[](std::size_t i) { return data[i]; }
    const T& operator[](std::size_t i) const { return data[i]; }

    /// Element (b, x, y, c) of a rank-4 tensor.
    T& at(std::size_t b, std::size_t x, std::size_t y, std::size_t c) {
        return data[((b * shape[1] + x) * shape[2] + y) * shape[3] + c];
    }
    const T& at(std::size_t b, std::size_t x, std::size_t y, std::size_t c) const {
        return data[((b * shape[1] + x) * shape[2] + y) * shape[3] + c];
    }

    bool all_finite() const;

    template <typename U>
    Tensor<U> cast() const {
        Tensor<U> out;
        out.shape = shape;
        out.data.assign(data.begin(), data.end());
        return out;
    }

    bool operator==(const Tensor&) const = default;
};

/// Concatenates equally shaped (1, ...) tensors along the leading batch axis.
template <typename T>
Tensor<T> stack_batch(const std::vector<const Tensor<T>*>& items);

/// Batch entry b of a rank-4 tensor as a (1, h, w, c) tensor.
template <typename T>
Tensor<T> batch_item(const Tensor<T>& t, std::size_t b);

}  // namespace latnet::ad
