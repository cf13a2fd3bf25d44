// Copyright 2026 The momrecon Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "mom/tensor.hpp"

MOM_NS_BEGIN

// Reverse-mode differentiation over a dynamically built DAG. Each op creates
// a Node holding its forward value, its parents and a closure that pushes the
// node's gradient into the parents. `backward(root)` visits nodes in reverse
// topological order. The graph lives as long as some Var references it.

struct Node {
  Tensor value;
  Tensor grad;  // empty until the first accumulation
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;
  bool requires_grad = false;

  /// Gradient buffer, zero-initialized on first use.
  Tensor& grad_buffer();
  void accumulate_grad(const Tensor& g);
};

class Var {
 public:
  Var() = default;
  explicit Var(Tensor value, bool requires_grad = false);
  explicit Var(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  bool defined() const { return static_cast<bool>(node_); }
  const Tensor& value() const { return node_->value; }
  const Shape& shape() const { return node_->value.shape(); }
  std::size_t dim(std::size_t axis) const { return node_->value.dim(axis); }
  std::size_t rank() const { return node_->value.rank(); }
  std::size_t numel() const { return node_->value.numel(); }
  bool requires_grad() const { return node_ && node_->requires_grad; }
  /// Accumulated gradient; zeros of the value's shape if none was received.
  Tensor grad() const;
  /// Value of a one-element tensor.
  double item() const;

  const std::shared_ptr<Node>& node() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

inline Var constant(Tensor t) { return Var(std::move(t), false); }

/// Seeds d(root)/d(root) = 1 and propagates. `root` must have one element.
void backward(const Var& root);

/// Whether ops record the graph on this thread.
bool grad_enabled();

class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

/// Builds an op result. When recording is on and some input requires a
/// gradient, the node keeps `inputs` as parents and `fn` as its backward.
Var make_op(Tensor value, std::vector<Var> inputs, std::function<void(Node&)> fn);

/// A named trainable tensor. Copies share the same underlying node.
class Parameter {
 public:
  Parameter() = default;
  Parameter(std::string name, Tensor init);

  const std::string& name() const { return name_; }
  const Var& var() const { return var_; }
  operator const Var&() const { return var_; }

  const Tensor& value() const { return var_.value(); }
  Tensor& mutable_value() { return var_.node()->value; }
  const Tensor& grad() const;
  Tensor& mutable_grad() { return var_.node()->grad_buffer(); }
  void zero_grad();
  const Shape& shape() const { return var_.shape(); }

 private:
  std::string name_;
  Var var_;
};

/// Ordered collection of parameters with name-based lookup.
class ParamSet {
 public:
  /// Returns a handle sharing the stored parameter's node.
  Parameter add(std::string name, Tensor init);
  void append(const ParamSet& other);

  std::vector<Parameter>& items() { return params_; }
  const std::vector<Parameter>& items() const { return params_; }
  std::size_t size() const { return params_.size(); }
  const Parameter* find(const std::string& name) const;
  Parameter* find(const std::string& name);

  void zero_grad();
  std::size_t total_numel() const;

 private:
  std::vector<Parameter> params_;
};

MOM_NS_END
