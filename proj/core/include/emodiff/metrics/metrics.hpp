// Copyright 2026 The EmoDiff Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>

#include "emodiff/seq/blendshape.hpp"

namespace emodiff::metrics {

using Table = Eigen::MatrixXd;  // L x 51, evaluated in double

// Mean over frames of the per-frame L2 error over all 51 coefficients.
double fbe(const Table& pred, const Table& gt);
// Max over frames of the L2 error over the brow coefficients.
double ebe(const Table& pred, const Table& gt,
           const seq::FacePartition& part = seq::FacePartition::standard());
// Mean over upper-face coefficients of |std(pred) - std(gt)|, population std
// over frames. Needs L >= 2.
double fdd(const Table& pred, const Table& gt,
           const seq::FacePartition& part = seq::FacePartition::standard());
// fbe restricted to the mouth coefficients.
double fbe_mouth(const Table& pred, const Table& gt,
                 const seq::FacePartition& part = seq::FacePartition::standard());

struct SequenceMetrics {
  std::string id;
  double fbe = 0;
  double ebe = 0;
  double fdd = 0;
  double fbe_mouth = 0;
};

// All four metrics for one pair. Throws ShapeError when L or C differ.
SequenceMetrics evaluate_pair(const seq::BlendshapeSequence& pred, const seq::BlendshapeSequence& gt,
                              const seq::FacePartition& part = seq::FacePartition::standard());

}  // namespace emodiff::metrics
