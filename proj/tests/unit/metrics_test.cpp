// Copyright 2026 The EmoDiff Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "emodiff/error.hpp"
#include "emodiff/metrics/metrics.hpp"
#include "emodiff/metrics/report.hpp"
#include "emodiff/seq/sequence_io.hpp"
#include "test_util.hpp"

namespace emodiff::metrics {
namespace {

namespace fs = std::filesystem;
using emodiff::testing::scratch_dir;

const seq::FacePartition& part() { return seq::FacePartition::standard(); }

Table random_table(long L, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Table t(L, 51);
  for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = u(rng);
  return t;
}

// Plain-loop versions of the three definitions.
double brute_fbe(const Table& p, const Table& g, const std::vector<int>& cols) {
  double total = 0;
  for (long l = 0; l < g.rows(); ++l) {
    double sq = 0;
    for (int c : cols) sq += (p(l, c) - g(l, c)) * (p(l, c) - g(l, c));
    total += std::sqrt(sq);
  }
  return total / static_cast<double>(g.rows());
}

double brute_ebe(const Table& p, const Table& g) {
  double worst = 0;
  for (long l = 0; l < g.rows(); ++l) {
    double sq = 0;
    for (int c : part().brow()) sq += (p(l, c) - g(l, c)) * (p(l, c) - g(l, c));
    worst = std::max(worst, std::sqrt(sq));
  }
  return worst;
}

double population_std(const Table& t, int c) {
  double mean = 0;
  for (long l = 0; l < t.rows(); ++l) mean += t(l, c);
  mean /= static_cast<double>(t.rows());
  double var = 0;
  for (long l = 0; l < t.rows(); ++l) var += (t(l, c) - mean) * (t(l, c) - mean);
  return std::sqrt(var / static_cast<double>(t.rows()));
}

double brute_fdd(const Table& p, const Table& g) {
  double total = 0;
  for (int c : part().upper()) total += std::abs(population_std(p, c) - population_std(g, c));
  return total / static_cast<double>(part().upper().size());
}

std::vector<int> all_columns() {
  std::vector<int> c(51);
  for (int i = 0; i < 51; ++i) c[static_cast<size_t>(i)] = i;
  return c;
}

seq::BlendshapeSequence sequence(const std::string& id, const Table& t) {
  seq::BlendshapeSequence s;
  s.id = id;
  s.frames = t.cast<float>();
  return s;
}

TEST(Fbe, Examples) {
  std::mt19937_64 rng(1);
  const Table g = random_table(30, rng);
  EXPECT_EQ(fbe(g, g), 0.0);
  EXPECT_NEAR(fbe((g.array() + 0.01).matrix(), g), 0.01 * std::sqrt(51.0), 1e-15);
  EXPECT_NEAR(0.01 * std::sqrt(51.0), 0.0714143, 5e-8);
  const Table z = Table::Zero(100, 51);
  Table p = z;
  p(37, 12) = 0.5;
  EXPECT_DOUBLE_EQ(fbe(p, z), 0.005);
}

TEST(Ebe, Examples) {
  const Table z = Table::Zero(10, 51);
  EXPECT_EQ(ebe(z, z), 0.0);
  const int brow = part().brow().front();
  Table p = z;
  p(4, brow) = 0.1;
  EXPECT_DOUBLE_EQ(ebe(p, z), 0.1);
  p = z;
  p(2, part().brow()[0]) = 0.3;
  p(7, part().brow()[1]) = 0.4;
  EXPECT_DOUBLE_EQ(ebe(p, z), 0.4);
  // Non-brow errors do not count.
  p = z;
  p(3, part().mouth().front()) = 0.9;
  EXPECT_EQ(ebe(p, z), 0.0);
}

TEST(Fdd, Examples) {
  const long L = 20;
  Table g = Table::Constant(L, 51, 0.3);
  const int c = part().upper()[4];
  for (long l = 0; l < L; ++l) g(l, c) = static_cast<double>(l % 2);
  Table p = g;
  p.col(c).setConstant(0.5);
  EXPECT_DOUBLE_EQ(fdd(g, g), 0.0);
  EXPECT_DOUBLE_EQ(fdd(p, g), 0.5 / 19);
  EXPECT_NEAR(0.5 / 19, 0.026316, 5e-7);
  std::mt19937_64 rng(2);
  const Table r = random_table(L, rng);
  EXPECT_NEAR(fdd((r.array() + 0.37).matrix(), r), 0.0, 1e-15);
}

TEST(Metrics, ShapeErrors) {
  const Table a = Table::Zero(10, 51);
  EXPECT_THROW(fbe(a, Table::Zero(11, 51)), ShapeError);
  EXPECT_THROW(ebe(a, Table::Zero(10, 50)), ShapeError);
  EXPECT_THROW(fdd(a, Table::Zero(9, 51)), ShapeError);
  EXPECT_THROW(fdd(Table::Zero(1, 51), Table::Zero(1, 51)), ShapeError);
  EXPECT_THROW(fbe(Table::Zero(0, 51), Table::Zero(0, 51)), ShapeError);
}

TEST(MetricsProperty, BruteForceOracleAndSymmetry) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<long> len(2, 80);
  std::vector<int> mouth = part().mouth();
  for (int trial = 0; trial < 200; ++trial) {
    const long L = len(rng);
    const Table p = random_table(L, rng);
    const Table g = random_table(L, rng);
    EXPECT_NEAR(fbe(p, g), brute_fbe(p, g, all_columns()), 1e-12);
    EXPECT_NEAR(fbe_mouth(p, g), brute_fbe(p, g, mouth), 1e-12);
    EXPECT_NEAR(ebe(p, g), brute_ebe(p, g), 1e-12);
    EXPECT_NEAR(fdd(p, g), brute_fdd(p, g), 1e-12);
    EXPECT_EQ(fbe(p, g), fbe(g, p));
    EXPECT_EQ(ebe(p, g), ebe(g, p));
    EXPECT_EQ(fdd(p, g), fdd(g, p));
    EXPECT_GE(fbe(p, g), 0.0);
    EXPECT_GE(ebe(p, g), 0.0);
    EXPECT_GE(fdd(p, g), 0.0);
  }
}

// A change confined to the mouth leaves EBE and FDD at zero but not FBE.
TEST(MetricsProperty, ZeroExactlyOnTheirOwnCoordinates) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const Table g = random_table(12, rng);
    Table p = g;
    p(trial % 12, part().mouth()[static_cast<size_t>(trial) % part().mouth().size()]) += 0.25;
    EXPECT_GT(fbe(p, g), 0.0);
    EXPECT_EQ(ebe(p, g), 0.0);
    EXPECT_EQ(fdd(p, g), 0.0);
    Table q = g;
    q(trial % 12, part().brow()[static_cast<size_t>(trial) % part().brow().size()]) -= 0.25;
    EXPECT_GT(ebe(q, g), 0.0);
  }
}

TEST(Report, AggregateMeansAndPermutationInvariance) {
  std::mt19937_64 rng(5);
  std::vector<SequenceMetrics> rows;
  for (int i = 0; i < 12; ++i) {
    const Table p = random_table(10, rng), g = random_table(10, rng);
    rows.push_back(SequenceMetrics{"s" + std::to_string(i), fbe(p, g), ebe(p, g), fdd(p, g), fbe_mouth(p, g)});
  }
  const auto base = aggregate(rows);
  double sum = 0;
  for (const auto& r : base.rows) sum += r.fbe;
  EXPECT_NEAR(base.fbe, sum / 12, 1e-15);
  for (size_t i = 1; i < base.rows.size(); ++i) EXPECT_LT(base.rows[i - 1].id, base.rows[i].id);
  for (int k = 0; k < 20; ++k) {
    std::shuffle(rows.begin(), rows.end(), rng);
    const auto r = aggregate(rows);
    EXPECT_EQ(r.fbe, base.fbe);
    EXPECT_EQ(r.ebe, base.ebe);
    EXPECT_EQ(r.fdd, base.fdd);
    EXPECT_EQ(format_report(r), format_report(base));
  }
}

TEST(Report, FormatLayout) {
  const auto r = aggregate({SequenceMetrics{"b", 0.5, 0.25, 0.125, 1.0}, SequenceMetrics{"a", 1.5, 0.75, 0.375, 2.0}});
  EXPECT_EQ(format_report(r),
            "id\tfbe\tebe\tfdd\tfbe_mouth\n"
            "a\t1.5\t0.75\t0.375\t2\n"
            "b\t0.5\t0.25\t0.125\t1\n"
            "#mean\t1\t0.5\t0.25\t1.5\n"
            "#count\t2\n");
  EXPECT_EQ(headline(r), "FBE 100.0000 x1e-2  EBE 50.0000 x1e-2  FDD 2500.0000 x1e-4  (n=2)");
  const auto svg = render_svg(r);
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
}

class DatasetEval : public ::testing::Test {
 protected:
  void SetUp() override {
    root = scratch_dir();
    fs::create_directories(root / "gt");
    fs::create_directories(root / "pred");
  }
  void put(const std::string& dir, const std::string& id, const Table& t) {
    seq::save_sequence(sequence(id, t), root / dir / (id + ".edbs"));
  }
  fs::path root;
};

TEST_F(DatasetEval, SameDirectoryIsZero) {
  std::mt19937_64 rng(6);
  for (int i = 0; i < 3; ++i) put("gt", "seq" + std::to_string(i), random_table(8, rng));
  const auto r = evaluate_dataset(root / "gt", root / "gt");
  EXPECT_EQ(r.count(), 3u);
  EXPECT_EQ(r.fbe, 0.0);
  EXPECT_EQ(r.ebe, 0.0);
  EXPECT_EQ(r.fdd, 0.0);
}

// Offsets of 0.25 and 0.5 are exact in float storage.
TEST_F(DatasetEval, TwoSequenceHandAverage) {
  const Table z = Table::Zero(4, 51);
  put("gt", "a", z);
  put("gt", "b", z);
  put("pred", "a", Table::Constant(4, 51, 0.25));
  Table pb = z;
  pb(1, part().brow()[0]) = 0.5;
  pb(3, part().brow()[0]) = 0.5;
  put("pred", "b", pb);
  const auto r = evaluate_dataset(root / "pred", root / "gt");
  ASSERT_EQ(r.count(), 2u);
  EXPECT_EQ(r.rows[0].id, "a");
  const double fbe_a = 0.25 * std::sqrt(51.0), fbe_b = 0.5 * 2 / 4;
  EXPECT_DOUBLE_EQ(r.fbe, (fbe_a + fbe_b) / 2);
  const double ebe_a = 0.25 * std::sqrt(static_cast<double>(part().brow().size()));
  EXPECT_DOUBLE_EQ(r.ebe, (ebe_a + 0.5) / 2);
  // b's brow column alternates 0, 0.5: population std 0.25 over 19 upper coefficients.
  EXPECT_DOUBLE_EQ(r.fdd, (0.0 + 0.25 / 19) / 2);

  const fs::path out = root / "report.tsv";
  write_report(r, out);
  std::ifstream f(out);
  std::stringstream ss;
  ss << f.rdbuf();
  EXPECT_EQ(ss.str(), format_report(r));
}

TEST_F(DatasetEval, UnpairedIdsAreListed) {
  const Table z = Table::Zero(4, 51);
  put("gt", "a", z);
  put("gt", "only_gt", z);
  put("pred", "a", z);
  put("pred", "only_pred", z);
  try {
    evaluate_dataset(root / "pred", root / "gt");
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("only_gt"), std::string::npos) << msg;
    EXPECT_NE(msg.find("only_pred"), std::string::npos) << msg;
  }
  EXPECT_THROW(evaluate_dataset(root / "pred", root / "missing"), ValidationError);
}

}  // namespace
}  // namespace emodiff::metrics
