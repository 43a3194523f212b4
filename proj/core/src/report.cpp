// Copyright 2026 The EmoDiff Authors
// SPDX-License-Identifier: Apache-2.0

#include "emodiff/metrics/report.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>

#include "emodiff/error.hpp"
#include "emodiff/parallel.hpp"
#include "emodiff/seq/sequence_io.hpp"

namespace emodiff::metrics {

namespace {

namespace fs = std::filesystem;

std::map<std::string, fs::path> list_sequences(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw ValidationError("not a directory: " + dir.string());
  std::map<std::string, fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".edbs") out[e.path().stem().string()] = e.path();
  }
  return out;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

EvalReport aggregate(std::vector<SequenceMetrics> rows) {
  std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  EvalReport r;
  r.rows = std::move(rows);
  if (r.rows.empty()) return r;
  for (const auto& m : r.rows) {
    r.fbe += m.fbe;
    r.ebe += m.ebe;
    r.fdd += m.fdd;
    r.fbe_mouth += m.fbe_mouth;
  }
  const double n = static_cast<double>(r.rows.size());
  r.fbe /= n;
  r.ebe /= n;
  r.fdd /= n;
  r.fbe_mouth /= n;
  return r;
}

EvalReport evaluate_dataset(const fs::path& pred_dir, const fs::path& gt_dir, const seq::FacePartition& part) {
  const auto pred = list_sequences(pred_dir);
  const auto gt = list_sequences(gt_dir);
  std::string no_pred, no_gt;
  for (const auto& [id, _] : gt) {
    if (!pred.count(id)) no_pred += " " + id;
  }
  for (const auto& [id, _] : pred) {
    if (!gt.count(id)) no_gt += " " + id;
  }
  if (!no_pred.empty() || !no_gt.empty()) {
    std::string msg = "unpaired sequence ids;";
    if (!no_pred.empty()) msg += " missing prediction:" + no_pred + ";";
    if (!no_gt.empty()) msg += " missing ground truth:" + no_gt + ";";
    msg.pop_back();
    throw ValidationError(msg);
  }
  if (gt.empty()) throw ValidationError("no .edbs sequences in " + gt_dir.string());

  std::vector<std::pair<fs::path, fs::path>> pairs;
  for (const auto& [id, path] : gt) pairs.emplace_back(pred.at(id), path);
  std::vector<SequenceMetrics> rows(pairs.size());
  parallel_for(pairs.size(), [&](std::size_t i) {
    rows[i] = evaluate_pair(seq::load_sequence(pairs[i].first), seq::load_sequence(pairs[i].second), part);
  });
  return aggregate(std::move(rows));
}

std::string format_report(const EvalReport& r) {
  std::string out = "id\tfbe\tebe\tfdd\tfbe_mouth\n";
  for (const auto& m : r.rows) {
    out += m.id + "\t" + num(m.fbe) + "\t" + num(m.ebe) + "\t" + num(m.fdd) + "\t" + num(m.fbe_mouth) + "\n";
  }
  out += "#mean\t" + num(r.fbe) + "\t" + num(r.ebe) + "\t" + num(r.fdd) + "\t" + num(r.fbe_mouth) + "\n";
  out += "#count\t" + std::to_string(r.count()) + "\n";
  return out;
}

void write_report(const EvalReport& report, const fs::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write report: " + path.string());
  f << format_report(report);
}

std::string headline(const EvalReport& r) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "FBE %.4f x1e-2  EBE %.4f x1e-2  FDD %.4f x1e-4  (n=%zu)",
                r.fbe * kFbeScale, r.ebe * kEbeScale, r.fdd * kFddScale, r.count());
  return buf;
}

std::string render_svg(const EvalReport& r) {
  constexpr double kW = 640, kH = 240, kPad = 30;
  std::string out = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"240\">\n";
  out += "<rect width=\"640\" height=\"240\" fill=\"white\"/>\n";
  const struct {
    const char* name;
    const char* colour;
    double SequenceMetrics::*field;
  } series[] = {{"fbe", "#1f77b4", &SequenceMetrics::fbe},
                {"ebe", "#d62728", &SequenceMetrics::ebe},
                {"fdd", "#2ca02c", &SequenceMetrics::fdd}};
  const std::size_t n = r.rows.size();
  int legend = 0;
  for (const auto& s : series) {
    double top = 0;
    for (const auto& m : r.rows) top = std::max(top, m.*s.field);
    std::string pts;
    for (std::size_t i = 0; i < n; ++i) {
      const double x = kPad + (n > 1 ? (kW - 2 * kPad) * static_cast<double>(i) / static_cast<double>(n - 1) : 0);
      const double y = kH - kPad - (top > 0 ? (kH - 2 * kPad) * (r.rows[i].*s.field) / top : 0);
      char buf[48];
      std::snprintf(buf, sizeof buf, "%.2f,%.2f ", x, y);
      pts += buf;
    }
    out += "<polyline fill=\"none\" stroke=\"" + std::string(s.colour) + "\" points=\"" + pts + "\"/>\n";
    out += "<text x=\"" + std::to_string(static_cast<int>(kPad) + 60 * legend++) + "\" y=\"18\" fill=\"" +
           s.colour + "\" font-size=\"12\">" + s.name + "</text>\n";
  }
  out += "</svg>\n";
  return out;
}

}  // namespace emodiff::metrics
