// Copyright 2026 The momrecon Authors
// SPDX-License-Identifier: Apache-2.0

#include "mom/autograd.hpp"

#include <unordered_set>

MOM_NS_BEGIN

namespace {
thread_local bool t_grad_enabled = true;
}

Tensor& Node::grad_buffer() {
  if (grad.shape() != value.shape() || grad.numel() != value.numel()) grad = Tensor(value.shape());
  return grad;
}

void Node::accumulate_grad(const Tensor& g) {
  Tensor& buf = grad_buffer();
  if (g.numel() != buf.numel()) {
    fail(ErrorKind::Dimension, "gradient shape " + shape_str(g.shape()) + " does not match value " +
                                   shape_str(value.shape()));
  }
  for (std::size_t i = 0; i < buf.numel(); ++i) buf[i] += g[i];
}

Var::Var(Tensor value, bool requires_grad) : node_(std::make_shared<Node>()) {
  node_->value = std::move(value);
  node_->requires_grad = requires_grad;
}

Tensor Var::grad() const {
  if (node_->grad.numel() == node_->value.numel() && !node_->grad.empty()) return node_->grad;
  return Tensor(node_->value.shape());
}

double Var::item() const {
  if (numel() != 1) fail(ErrorKind::Dimension, "item() on tensor of shape " + shape_str(shape()));
  return static_cast<double>(value()[0]);
}

bool grad_enabled() { return t_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(t_grad_enabled) { t_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { t_grad_enabled = previous_; }

Var make_op(Tensor value, std::vector<Var> inputs, std::function<void(Node&)> fn) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  if (t_grad_enabled) {
    bool any = false;
    for (const auto& in : inputs) any = any || in.requires_grad();
    if (any) {
      node->requires_grad = true;
      node->parents.reserve(inputs.size());
      for (auto& in : inputs) node->parents.push_back(in.node());
      node->backward = std::move(fn);
    }
  }
  return Var(std::move(node));
}

void backward(const Var& root) {
  if (!root.defined() || root.numel() != 1) {
    fail(ErrorKind::Dimension, "backward() needs a one-element root");
  }
  if (!root.requires_grad()) return;

  // Iterative post-order DFS gives a topological order.
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(root.node().get(), 0);
  seen.insert(root.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* p = node->parents[next++].get();
      if (p->requires_grad && seen.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  root.node()->grad_buffer()[0] += real(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward && !n->grad.empty()) n->backward(*n);
  }
}

Parameter::Parameter(std::string name, Tensor init)
    : name_(std::move(name)), var_(std::move(init), true) {}

const Tensor& Parameter::grad() const { return var_.node()->grad_buffer(); }

void Parameter::zero_grad() { var_.node()->grad_buffer().fill(real(0)); }

Parameter ParamSet::add(std::string name, Tensor init) {
  if (find(name)) fail(ErrorKind::Config, "duplicate parameter name '" + name + "'");
  params_.emplace_back(std::move(name), std::move(init));
  return params_.back();
}

void ParamSet::append(const ParamSet& other) {
  for (const auto& p : other.params_) {
    if (find(p.name())) fail(ErrorKind::Config, "duplicate parameter name '" + p.name() + "'");
    params_.push_back(p);
  }
}

const Parameter* ParamSet::find(const std::string& name) const {
  for (const auto& p : params_)
    if (p.name() == name) return &p;
  return nullptr;
}

Parameter* ParamSet::find(const std::string& name) {
  for (auto& p : params_)
    if (p.name() == name) return &p;
  return nullptr;
}

void ParamSet::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

std::size_t ParamSet::total_numel() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value().numel();
  return n;
}

MOM_NS_END
