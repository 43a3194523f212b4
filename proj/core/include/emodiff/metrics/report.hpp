// Copyright 2026 The EmoDiff Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "emodiff/metrics/metrics.hpp"

namespace emodiff::metrics {

// Raw values; the conventional presentation scales are applied by headline().
struct EvalReport {
  std::vector<SequenceMetrics> rows;  // sorted by id
  double fbe = 0;
  double ebe = 0;
  double fdd = 0;
  double fbe_mouth = 0;

  std::size_t count() const { return rows.size(); }
};

inline constexpr double kFbeScale = 1e2;
inline constexpr double kEbeScale = 1e2;
inline constexpr double kFddScale = 1e4;

// Sorts rows by id and fills the means.
EvalReport aggregate(std::vector<SequenceMetrics> rows);

// Pairs *.edbs files by stem. Throws ValidationError listing every
// unpaired id.
EvalReport evaluate_dataset(const std::filesystem::path& pred_dir, const std::filesystem::path& gt_dir,
                            const seq::FacePartition& part = seq::FacePartition::standard());

// Header line, one tab-separated row per sequence, footer means.
std::string format_report(const EvalReport& report);
void write_report(const EvalReport& report, const std::filesystem::path& path);
// "FBE 2.81e-2 ..." style summary in the usual scaled units.
std::string headline(const EvalReport& report);
// Per-sequence line plot of the three metrics, each normalised to its max.
std::string render_svg(const EvalReport& report);

}  // namespace emodiff::metrics
