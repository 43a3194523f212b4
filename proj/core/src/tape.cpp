// Copyright 2026 The EmoDiff Authors
// SPDX-License-Identifier: Apache-2.0

#include "emodiff/nn/tape.hpp"

namespace emodiff::nn {

template <typename T>
Var<T> Tape<T>::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var<T>(this, static_cast<int>(nodes_.size()) - 1);
}

template <typename T>
Var<T> Tape<T>::constant(Matrix<T> value) {
  Node n;
  n.value = std::move(value);
  return push(std::move(n));
}

template <typename T>
Var<T> Tape<T>::variable(Matrix<T> value) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = true;
  return push(std::move(n));
}

template <typename T>
Var<T> Tape<T>::parameter(const ParamSet<T>& params, const std::string& name, bool trainable) {
  auto it = bound_.find(name);
  if (it != bound_.end()) {
    if (it->second.first != &params) {
      throw ConfigError("parameter name bound from two different sets: " + name);
    }
    return Var<T>(this, it->second.second);
  }
  Node n;
  n.external = &params.at(name);
  n.requires_grad = trainable;
  Var<T> v = push(std::move(n));
  bound_.emplace(name, std::make_pair(&params, v.id()));
  if (trainable) trainable_.emplace_back(name, v.id());
  return v;
}

template <typename T>
Var<T> Tape<T>::record(Matrix<T> value, std::initializer_list<Var<T>> inputs, BackwardFn fn) {
  Node n;
  n.value = std::move(value);
  for (const auto& in : inputs) n.requires_grad = n.requires_grad || requires_grad(in.id());
  if (n.requires_grad) n.backward = std::move(fn);
  return push(std::move(n));
}

template <typename T>
Var<T> Tape<T>::record(Matrix<T> value, const std::vector<Var<T>>& inputs, BackwardFn fn) {
  Node n;
  n.value = std::move(value);
  for (const auto& in : inputs) n.requires_grad = n.requires_grad || requires_grad(in.id());
  if (n.requires_grad) n.backward = std::move(fn);
  return push(std::move(n));
}

template <typename T>
Matrix<T>& Tape<T>::grad_buffer(int id) {
  Node& n = nodes_[static_cast<std::size_t>(id)];
  if (n.grad.size() == 0) {
    const auto& v = value(id);
    n.grad = Matrix<T>::Zero(v.rows(), v.cols());
  }
  return n.grad;
}

template <typename T>
void Tape<T>::backward(Var<T> root) {
  if (root.rows() != 1 || root.cols() != 1) {
    throw ShapeError("backward() needs a scalar root");
  }
  grad_buffer(root.id())(0, 0) += T(1);
  for (int id = root.id(); id >= 0; --id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (!n.backward || n.grad.size() == 0) continue;
    n.backward(*this, n.grad);
  }
}

template <typename T>
void Tape<T>::collect_grads(ParamSet<T>& grads) const {
  for (const auto& [name, id] : trainable_) {
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    if (!grads.contains(name)) {
      const auto& v = value(id);
      grads.add(name, Matrix<T>::Zero(v.rows(), v.cols()));
    }
    if (n.grad.size() != 0) grads.at(name) += n.grad;
  }
}

template class Tape<float>;
template class Tape<double>;

}  // namespace emodiff::nn
