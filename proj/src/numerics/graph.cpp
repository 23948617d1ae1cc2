#include "lskt/numerics/graph.hpp"

#include "lskt/numerics/errors.hpp"

namespace lskt {

const Tensor& Var::value() const { return graph_->value(*this); }

bool Var::requires_grad() const { return graph_->requires_grad(*this); }

Var Graph::push(Node node) {
    nodes_.push_back(std::move(node));
    return Var(this, nodes_.size() - 1);
}

Var Graph::constant(Tensor value) {
    Node n;
    n.value = std::move(value);
    return push(std::move(n));
}

Var Graph::variable(Tensor value) {
    Node n;
    n.value = std::move(value);
    n.requires_grad = grad_enabled_;
    return push(std::move(n));
}

Var Graph::param(ParameterStore& store, const std::string& name) {
    Parameter& p = store.at(name);
    if (auto it = bound_.find(&p); it != bound_.end()) return Var(this, it->second);
    Node n;
    n.value = p.value;
    n.requires_grad = grad_enabled_ && p.trainable;
    n.param = &p;
    Var v = push(std::move(n));
    bound_.emplace(&p, v.id());
    return v;
}

Var Graph::record(Tensor value, std::vector<Var> inputs, BackwardFn backward) {
    Node n;
    n.value = std::move(value);
    n.inputs.reserve(inputs.size());
    for (const Var& in : inputs) {
        if (&in.graph() != this) throw ContractError("operation mixes nodes of different graphs");
        n.inputs.push_back(in.id());
        n.requires_grad = n.requires_grad || nodes_[in.id()].requires_grad;
    }
    if (n.requires_grad) n.backward = std::move(backward);
    return push(std::move(n));
}

Tensor* Graph::grad_slot(const Var& v) {
    Node& n = nodes_.at(v.id());
    if (!n.requires_grad) return nullptr;
    if (n.grad.size() != n.value.size() || n.grad.shape() != n.value.shape()) {
        n.grad = Tensor(n.value.shape(), 0.0);
    }
    return &n.grad;
}

Tensor Graph::grad(const Var& v) const {
    const Node& n = nodes_.at(v.id());
    if (n.grad.shape() == n.value.shape() && n.grad.size() == n.value.size()) return n.grad;
    return Tensor(n.value.shape(), 0.0);
}

void Graph::backward(const Var& loss) {
    if (&loss.graph() != this) throw ContractError("loss belongs to a different graph");
    Node& root = nodes_.at(loss.id());
    if (root.value.size() != 1) {
        throw ContractError("backward() needs a scalar loss, got shape " +
                            shape_to_string(root.value.shape()));
    }
    for (Node& n : nodes_) n.grad = Tensor();
    if (!root.requires_grad) return;
    root.grad = Tensor(root.value.shape(), 1.0);

    for (std::size_t i = loss.id() + 1; i-- > 0;) {
        Node& n = nodes_[i];
        if (n.grad.empty() && n.value.size() != 0) continue;
        // Callbacks only touch gradients of earlier nodes; nodes_ does not
        // grow during the sweep, so the reference stays valid.
        if (n.backward) n.backward(*this, n.grad);
        if (n.param != nullptr && !n.grad.empty()) {
            auto dst = n.param->grad.data();
            auto src = n.grad.data();
            for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
        }
    }
}

} // namespace lskt
