// Copyright 2026 The EmoDiff Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <map>
#include <string>
#include <string_view>

#include "emodiff/error.hpp"

namespace emodiff::nn {

template <typename T>
using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Named parameter tensors, iterated in name order so that initialisation,
// checkpoints and optimizer updates are deterministic.
template <typename T>
class ParamSet {
 public:
  using Storage = std::map<std::string, Matrix<T>, std::less<>>;

  void add(const std::string& name, Matrix<T> value) {
    if (!tensors_.emplace(name, std::move(value)).second) {
      throw ConfigError("duplicate parameter: " + name);
    }
  }

  bool contains(std::string_view name) const { return tensors_.find(name) != tensors_.end(); }

  const Matrix<T>& at(std::string_view name) const {
    auto it = tensors_.find(name);
    if (it == tensors_.end()) throw ConfigError("missing parameter: " + std::string(name));
    return it->second;
  }

  Matrix<T>& at(std::string_view name) {
    auto it = tensors_.find(name);
    if (it == tensors_.end()) throw ConfigError("missing parameter: " + std::string(name));
    return it->second;
  }

  std::size_t size() const { return tensors_.size(); }
  bool empty() const { return tensors_.empty(); }

  Eigen::Index element_count() const {
    Eigen::Index n = 0;
    for (const auto& [_, m] : tensors_) n += m.size();
    return n;
  }

  auto begin() const { return tensors_.begin(); }
  auto end() const { return tensors_.end(); }
  auto begin() { return tensors_.begin(); }
  auto end() { return tensors_.end(); }

  ParamSet zeros_like() const {
    ParamSet out;
    for (const auto& [name, m] : tensors_) out.add(name, Matrix<T>::Zero(m.rows(), m.cols()));
    return out;
  }

  // this[name] += other[name] for every tensor of `other`; missing entries
  // are created.
  void accumulate(const ParamSet& other) {
    for (const auto& [name, m] : other.tensors_) {
      auto it = tensors_.find(name);
      if (it == tensors_.end()) {
        tensors_.emplace(name, m);
      } else {
        it->second += m;
      }
    }
  }

  void scale(T factor) {
    for (auto& [_, m] : tensors_) m *= factor;
  }

  bool all_finite() const {
    for (const auto& [_, m] : tensors_) {
      if (!m.allFinite()) return false;
    }
    return true;
  }

  // Tensors whose name starts with `prefix`.
  ParamSet subset(std::string_view prefix) const {
    ParamSet out;
    for (const auto& [name, m] : tensors_) {
      if (std::string_view(name).substr(0, prefix.size()) == prefix) out.add(name, m);
    }
    return out;
  }

  void merge(const ParamSet& other) {
    for (const auto& [name, m] : other.tensors_) add(name, m);
  }

  template <typename U>
  ParamSet<U> cast() const {
    ParamSet<U> out;
    for (const auto& [name, m] : tensors_) out.add(name, m.template cast<U>());
    return out;
  }

  // FNV-1a over names, shapes and raw bytes; used to check freeze contracts.
  std::uint64_t fingerprint() const {
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&h](const void* data, std::size_t n) {
      const auto* p = static_cast<const unsigned char*>(data);
      for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 1099511628211ULL;
      }
    };
    for (const auto& [name, m] : tensors_) {
      mix(name.data(), name.size());
      const std::int64_t shape[2] = {m.rows(), m.cols()};
      mix(shape, sizeof(shape));
      mix(m.data(), static_cast<std::size_t>(m.size()) * sizeof(T));
    }
    return h;
  }

 private:
  Storage tensors_;
};

}  // namespace emodiff::nn
