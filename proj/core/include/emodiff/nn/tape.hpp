// Copyright 2026 The EmoDiff Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <deque>
#include <functional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "emodiff/nn/params.hpp"

namespace emodiff::nn {

template <typename T>
class Tape;

// Handle to a node on a Tape. Cheap to copy; only valid while the tape lives.
template <typename T>
class Var {
 public:
  Var() = default;
  Var(Tape<T>* tape, int id) : tape_(tape), id_(id) {}

  const Matrix<T>& value() const { return tape_->value(id_); }
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  int id() const { return id_; }
  Tape<T>* tape() const { return tape_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  Tape<T>* tape_ = nullptr;
  int id_ = -1;
};

// Reverse-mode automatic differentiation over dense row-major matrices.
// Nodes are appended in evaluation order, so backward() walks them in
// reverse. A node only records a backward closure when at least one of its
// inputs needs a gradient; inference graphs therefore carry no closures.
template <typename T>
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, const Matrix<T>& grad_out)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var<T> constant(Matrix<T> value);
  // Leaf whose gradient is kept; used for inputs under test.
  Var<T> variable(Matrix<T> value);
  // Binds params[name] once per tape. Trainable bindings receive gradients
  // that collect_grads() hands back; frozen ones still pass gradients on to
  // whatever depends on them but accumulate nothing themselves.
  Var<T> parameter(const ParamSet<T>& params, const std::string& name, bool trainable);

  Var<T> record(Matrix<T> value, std::initializer_list<Var<T>> inputs, BackwardFn fn);
  Var<T> record(Matrix<T> value, const std::vector<Var<T>>& inputs, BackwardFn fn);

  // Seeds d(root)/d(root) = 1; root must be 1x1.
  void backward(Var<T> root);

  const Matrix<T>& value(int id) const {
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    return n.external ? *n.external : n.value;
  }
  bool requires_grad(int id) const { return nodes_[static_cast<std::size_t>(id)].requires_grad; }
  // Zero-sized until something flows into the node.
  const Matrix<T>& grad(int id) const { return nodes_[static_cast<std::size_t>(id)].grad; }
  // Lazily zero-initialised gradient buffer.
  Matrix<T>& grad_buffer(int id);

  // Adds the gradients of every trainable binding into `grads`.
  void collect_grads(ParamSet<T>& grads) const;

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix<T> value;
    const Matrix<T>* external = nullptr;
    Matrix<T> grad;
    bool requires_grad = false;
    BackwardFn backward;
  };

  Var<T> push(Node node);

  std::deque<Node> nodes_;
  std::unordered_map<std::string, std::pair<const ParamSet<T>*, int>> bound_;
  std::vector<std::pair<std::string, int>> trainable_;
};

}  // namespace emodiff::nn
