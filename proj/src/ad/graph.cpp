#include "latnet/ad/graph.hpp"

#include "latnet/error.hpp"

#include <algorithm>

namespace latnet::ad {

template <typename T>
Parameter<T>::Parameter(std::string n, Tensor<T> initial)
    : name(std::move(n)),
      value(std::move(initial)),
      grad(value.shape),
      m(value.shape),
      v(value.shape) {}

template <typename T>
void Parameter<T>::zero_grad() {
    std::fill(grad.data.begin(), grad.data.end(), T(0));
}

template <typename T>
Var<T> Graph<T>::constant(Tensor<T> value) {
    nodes_.push_back(Node{std::move(value), {}, false, {}});
    return Var<T>(this, nodes_.size() - 1);
}

template <typename T>
Var<T> Graph<T>::input(Tensor<T> value) {
    nodes_.push_back(Node{std::move(value), {}, tracking_, {}});
    return Var<T>(this, nodes_.size() - 1);
}

template <typename T>
Var<T> Graph<T>::parameter(Parameter<T>& p) {
    if (auto it = param_nodes_.find(&p); it != param_nodes_.end()) return Var<T>(this, it->second);
    Node node{p.value, {}, tracking_, {}};
    if (tracking_) {
        Parameter<T>* target = &p;
        node.backward = [target](Graph& g, std::size_t self) {
            const Tensor<T>& gr = g.grad(self);
            if (target->grad.shape != gr.shape) target->grad = Tensor<T>(gr.shape);
            for (std::size_t i = 0; i < gr.size(); ++i) target->grad.data[i] += gr.data[i];
        };
    }
    nodes_.push_back(std::move(node));
    param_nodes_.emplace(&p, nodes_.size() - 1);
    return Var<T>(this, nodes_.size() - 1);
}

template <typename T>
Var<T> Graph<T>::record(const char* op, Tensor<T> value, std::initializer_list<Var<T>> inputs, BackwardFn backward) {
    if (!value.all_finite()) throw NumericError(std::string("non-finite value produced by ") + op);
    bool needs = false;
    if (tracking_) {
        for (const Var<T>& in : inputs) {
            if (in.graph() != this) throw ContractError(std::string(op) + ": input belongs to another graph");
            needs = needs || nodes_[in.id()].requires_grad;
        }
    }
    nodes_.push_back(Node{std::move(value), {}, needs, needs ? std::move(backward) : BackwardFn{}});
    return Var<T>(this, nodes_.size() - 1);
}

template <typename T>
Tensor<T>& Graph<T>::grad(std::size_t id) {
    Node& n = nodes_[id];
    if (n.grad.data.size() != n.value.data.size() || n.grad.shape != n.value.shape) {
        n.grad = Tensor<T>(n.value.shape);
    }
    return n.grad;
}

template <typename T>
void Graph<T>::backward(Var<T> loss) {
    if (loss.graph() != this) throw ContractError("backward: loss belongs to another graph");
    if (nodes_[loss.id()].value.size() != 1) {
        throw ContractError("backward needs a scalar loss, got shape " + shape_string(nodes_[loss.id()].value.shape));
    }
    if (!tracking_) throw ContractError("backward on a graph built without gradient tracking");
    grad(loss.id()).data[0] += T(1);
    for (std::size_t id = loss.id() + 1; id-- > 0;) {
        Node& n = nodes_[id];
        if (!n.requires_grad || !n.backward) continue;
        if (n.grad.data.empty() && !n.value.data.empty()) continue;  // no gradient reached this node
        n.backward(*this, id);
    }
}

template <typename T>
void Graph<T>::zero_grad() {
    for (Node& n : nodes_) n.grad = Tensor<T>();
}

template <typename T>
std::size_t Graph<T>::materialized_elements() const {
    std::size_t total = 0;
    for (const Node& n : nodes_) total += n.value.size();
    return total;
}

template struct Parameter<float>;
template struct Parameter<double>;
template class Graph<float>;
template class Graph<double>;

}  // namespace latnet::ad
