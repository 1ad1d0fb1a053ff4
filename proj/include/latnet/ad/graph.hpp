#pragma once

#include "latnet/ad/tensor.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

namespace latnet::ad {

/// Trainable tensor with its gradient accumulator and Adam state.
template <typename T>
struct Parameter {
    std::string name;
    Tensor<T> value;
    Tensor<T> grad;
    Tensor<T> m;  ///< Adam first moment
    Tensor<T> v;  ///< Adam second moment
    std::uint64_t step = 0;

    Parameter() = default;
    Parameter(std::string n, Tensor<T> initial);

    void zero_grad();
};

template <typename T>
class Graph;

/// Handle to a node of a Graph. Cheap to copy; valid while the graph lives.
template <typename T>
class Var {
public:
    Var() = default;
    Var(Graph<T>* g, std::size_t id) : graph_(g), id_(id) {}

    Graph<T>* graph() const { return graph_; }
    std::size_t id() const { return id_; }
    const Tensor<T>& value() const;
    const Shape& shape() const { return value().shape; }
    bool requires_grad() const;

private:
    Graph<T>* graph_ = nullptr;
    std::size_t id_ = 0;
};

/// Reverse-mode tape. Nodes are appended in evaluation order, which is a
/// topological order, and backward() walks them in exact reverse. A graph is
/// built and differentiated by one thread.
template <typename T>
class Graph {
public:
    using BackwardFn = std::function<void(Graph&, std::size_t self)>;

    /// With `track_gradients` false no backward closures are kept and
    /// parameters enter as constants (inference mode).
    explicit Graph(bool track_gradients = true) : tracking_(track_gradients) {}
    Graph(const Graph&) = delete;
    Graph& operator=(const Graph&) = delete;

    Var<T> constant(Tensor<T> value);
    /// Leaf that receives a gradient (used for input sensitivities).
    Var<T> input(Tensor<T> value);
    /// Leaf bound to a parameter; backward() adds its gradient to p.grad.
    /// Repeated calls with the same parameter return the same node.
    Var<T> parameter(Parameter<T>& p);

    /// Appends an op result. The node requires a gradient if any input does.
    /// Throws NumericError if `value` holds NaN/Inf.
    Var<T> record(const char* op, Tensor<T> value, std::initializer_list<Var<T>> inputs, BackwardFn backward);

    const Tensor<T>& value(std::size_t id) const { return nodes_[id].value; }
    bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
    /// Gradient buffer of a node, allocated as zeros on first use.
    Tensor<T>& grad(std::size_t id);

    /// Seeds d(loss)/d(loss) = 1 and propagates to every node. Throws
    /// ContractError if `loss` is not a single element.
    void backward(Var<T> loss);
    void zero_grad();

    bool tracking() const { return tracking_; }
    std::size_t node_count() const { return nodes_.size(); }
    /// Total number of values held by all nodes (working-set accounting).
    std::size_t materialized_elements() const;

private:
    struct Node {
        Tensor<T> value;
        Tensor<T> grad;
        bool requires_grad = false;
        BackwardFn backward;
    };
    std::vector<Node> nodes_;
    std::unordered_map<const Parameter<T>*, std::size_t> param_nodes_;
    bool tracking_;
};

template <typename T>
const Tensor<T>& Var<T>::value() const {
    return graph_->value(id_);
}

template <typename T>
bool Var<T>::requires_grad() const {
    return graph_->requires_grad(id_);
}

}  // namespace latnet::ad
