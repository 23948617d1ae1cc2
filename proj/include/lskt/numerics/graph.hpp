#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "lskt/numerics/parameter_store.hpp"
#include "lskt/numerics/tensor.hpp"

namespace lskt {

class Graph;

// Handle to a node of a Graph. Cheap to copy; valid while the graph lives.
class Var {
public:
    Var() = default;

    const Tensor& value() const;
    const Shape& shape() const { return value().shape(); }
    bool requires_grad() const;
    bool valid() const noexcept { return graph_ != nullptr; }
    Graph& graph() const { return *graph_; }
    std::size_t id() const noexcept { return id_; }

private:
    friend class Graph;
    Var(Graph* graph, std::size_t id) : graph_(graph), id_(id) {}

    Graph* graph_ = nullptr;
    std::size_t id_ = 0;
};

// Reverse-mode tape. Nodes are appended in execution order, so every node's
// inputs precede it and one reverse sweep visits each node once.
class Graph {
public:
    // Receives the gradient of the node's output; pushes into inputs via
    // Graph::grad_slot.
    using BackwardFn = std::function<void(Graph&, const Tensor& out_grad)>;

    explicit Graph(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}
    Graph(const Graph&) = delete;
    Graph& operator=(const Graph&) = delete;

    Var constant(Tensor value);
    // Leaf that receives a gradient (when gradients are enabled).
    Var variable(Tensor value);
    // Binds a store entry as a leaf. Repeated binds of one name return the
    // same node. backward() adds the leaf gradient into the store.
    Var param(ParameterStore& store, const std::string& name);

    // Appends an operation node. The backward rule is kept only if some input
    // requires a gradient.
    Var record(Tensor value, std::vector<Var> inputs, BackwardFn backward);

    // loss must hold exactly one element.
    void backward(const Var& loss);

    const Tensor& value(const Var& v) const { return nodes_.at(v.id()).value; }
    bool requires_grad(const Var& v) const { return nodes_.at(v.id()).requires_grad; }
    // Gradient of a node after backward(); zeros if it received none.
    Tensor grad(const Var& v) const;

    // Accumulation target for an input's gradient, allocated on first use.
    // nullptr when the input does not require a gradient.
    Tensor* grad_slot(const Var& v);

    bool grad_enabled() const noexcept { return grad_enabled_; }
    std::size_t size() const noexcept { return nodes_.size(); }

    // When set, relu() appends one byte per element (input > 0). Finite
    // difference checks compare these patterns to spot stencils that
    // straddle a kink.
    void set_activation_trace(std::vector<std::uint8_t>* trace) noexcept { activation_trace_ = trace; }
    std::vector<std::uint8_t>* activation_trace() const noexcept { return activation_trace_; }

private:
    struct Node {
        Tensor value;
        Tensor grad;
        std::vector<std::size_t> inputs;
        BackwardFn backward;
        bool requires_grad = false;
        Parameter* param = nullptr;
    };

    Var push(Node node);

    std::vector<Node> nodes_;
    std::unordered_map<const Parameter*, std::size_t> bound_;
    bool grad_enabled_;
    std::vector<std::uint8_t>* activation_trace_ = nullptr;
};

} // namespace lskt
