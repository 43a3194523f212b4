// Copyright 2026 The EmoDiff Authors
// SPDX-License-Identifier: Apache-2.0

#include "emodiff/metrics/metrics.hpp"

#include <cmath>

#include "emodiff/error.hpp"

namespace emodiff::metrics {

namespace {

void check_pair(const Table& pred, const Table& gt) {
  if (pred.rows() != gt.rows() || pred.cols() != gt.cols()) {
    throw_shape("metric inputs", gt.rows(), gt.cols(), pred.rows(), pred.cols());
  }
  if (gt.rows() < 1) throw ShapeError("metrics need at least one frame");
}

void check_columns(const Table& t, const std::vector<int>& cols) {
  for (int c : cols) {
    if (c < 0 || c >= t.cols()) throw ShapeError("partition index outside the sequence");
  }
}

double frame_error(const Table& pred, const Table& gt, Eigen::Index l, const std::vector<int>& cols) {
  double s = 0;
  for (int c : cols) {
    const double e = pred(l, c) - gt(l, c);
    s += e * e;
  }
  return std::sqrt(s);
}

double population_std(const Table& t, int c) {
  const double mean = t.col(c).mean();
  return std::sqrt((t.col(c).array() - mean).square().mean());
}

}  // namespace

double fbe(const Table& pred, const Table& gt) {
  check_pair(pred, gt);
  return (pred - gt).rowwise().norm().mean();
}

double ebe(const Table& pred, const Table& gt, const seq::FacePartition& part) {
  check_pair(pred, gt);
  check_columns(gt, part.brow());
  double worst = 0;
  for (Eigen::Index l = 0; l < gt.rows(); ++l) worst = std::max(worst, frame_error(pred, gt, l, part.brow()));
  return worst;
}

double fdd(const Table& pred, const Table& gt, const seq::FacePartition& part) {
  check_pair(pred, gt);
  if (gt.rows() < 2) throw ShapeError("fdd needs at least two frames");
  check_columns(gt, part.upper());
  double s = 0;
  for (int c : part.upper()) s += std::abs(population_std(pred, c) - population_std(gt, c));
  return s / static_cast<double>(part.upper().size());
}

double fbe_mouth(const Table& pred, const Table& gt, const seq::FacePartition& part) {
  check_pair(pred, gt);
  check_columns(gt, part.mouth());
  double s = 0;
  for (Eigen::Index l = 0; l < gt.rows(); ++l) s += frame_error(pred, gt, l, part.mouth());
  return s / static_cast<double>(gt.rows());
}

SequenceMetrics evaluate_pair(const seq::BlendshapeSequence& pred, const seq::BlendshapeSequence& gt,
                              const seq::FacePartition& part) {
  const Table p = pred.frames.cast<double>();
  const Table g = gt.frames.cast<double>();
  SequenceMetrics m;
  m.id = gt.id;
  m.fbe = fbe(p, g);
  m.ebe = ebe(p, g, part);
  m.fdd = fdd(p, g, part);
  m.fbe_mouth = fbe_mouth(p, g, part);
  return m;
}

}  // namespace emodiff::metrics
