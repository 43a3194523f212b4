// Copyright 2026 The EmoDiff Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "emodiff/nn/tape.hpp"

namespace emodiff::nn {

template <typename T> Var<T> matmul(Var<T> a, Var<T> b);
// a * b^T
template <typename T> Var<T> matmul_nt(Var<T> a, Var<T> b);
template <typename T> Var<T> add(Var<T> a, Var<T> b);
template <typename T> Var<T> sub(Var<T> a, Var<T> b);
template <typename T> Var<T> mul(Var<T> a, Var<T> b);
template <typename T> Var<T> scale(Var<T> a, T factor);
// Adds a 1 x C row to every row of a.
template <typename T> Var<T> add_row(Var<T> a, Var<T> row);

template <typename T> Var<T> concat_rows(const std::vector<Var<T>>& parts);
template <typename T> Var<T> concat_cols(const std::vector<Var<T>>& parts);
template <typename T> Var<T> slice_rows(Var<T> a, Eigen::Index start, Eigen::Index count);
template <typename T> Var<T> slice_cols(Var<T> a, Eigen::Index start, Eigen::Index count);

// Per-row normalisation with learned 1 x C gain and bias.
template <typename T> Var<T> layer_norm(Var<T> x, Var<T> gain, Var<T> bias, T eps = T(1e-5));
template <typename T> Var<T> softmax_rows(Var<T> a);
// tanh approximation of GELU; smooth everywhere, which keeps finite
// difference checks meaningful.
template <typename T> Var<T> gelu(Var<T> a);
template <typename T> Var<T> tanh(Var<T> a);
template <typename T> Var<T> exp(Var<T> a);

template <typename T> Var<T> sum(Var<T> a);
template <typename T> Var<T> mean(Var<T> a);
template <typename T> Var<T> sum_squares(Var<T> a);
// -log softmax(logits)[target] for a 1 x K row.
template <typename T> Var<T> cross_entropy(Var<T> logits, int target);

}  // namespace emodiff::nn
