// src/align.cpp

// Copyright 2026  The pocr Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "pocr/align.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace pocr {

namespace {

// DP over (i, j) = prefix lengths of source/target. Backtrace preference
// among equal-cost moves: diagonal, then deletion, then insertion.
std::vector<uint32_t> cost_table(const std::vector<std::string>& src,
                                 const std::vector<std::string>& tgt) {
  const size_t n = src.size(), m = tgt.size();
  std::vector<uint32_t> d((n + 1) * (m + 1));
  auto at = [&](size_t i, size_t j) -> uint32_t& { return d[i * (m + 1) + j]; };
  for (size_t i = 0; i <= n; ++i) at(i, 0) = static_cast<uint32_t>(i);
  for (size_t j = 0; j <= m; ++j) at(0, j) = static_cast<uint32_t>(j);
  for (size_t i = 1; i <= n; ++i) {
    for (size_t j = 1; j <= m; ++j) {
      const uint32_t diag = at(i - 1, j - 1) + (src[i - 1] == tgt[j - 1] ? 0 : 1);
      const uint32_t del = at(i - 1, j) + 1;
      const uint32_t ins = at(i, j - 1) + 1;
      at(i, j) = std::min(diag, std::min(del, ins));
    }
  }
  return d;
}

}  // namespace

uint32_t edit_distance(const std::vector<std::string>& source,
                       const std::vector<std::string>& target) {
  const auto d = cost_table(source, target);
  return d[source.size() * (target.size() + 1) + target.size()];
}

AlignmentTrace align_symbols(const std::vector<std::string>& source,
                             const std::vector<std::string>& target) {
  const size_t n = source.size(), m = target.size();
  const auto d = cost_table(source, target);
  auto at = [&](size_t i, size_t j) { return d[i * (m + 1) + j]; };

  AlignmentTrace trace;
  trace.cost = at(n, m);
  size_t i = n, j = m;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0) {
      const bool eq = source[i - 1] == target[j - 1];
      if (at(i, j) == at(i - 1, j - 1) + (eq ? 0u : 1u)) {
        trace.ops.push_back({eq ? EditOp::kMatch : EditOp::kSub,
                             source[i - 1], target[j - 1]});
        --i;
        --j;
        continue;
      }
    }
    if (i > 0 && at(i, j) == at(i - 1, j) + 1) {
      trace.ops.push_back({EditOp::kDel, source[i - 1], ""});
      --i;
      continue;
    }
    trace.ops.push_back({EditOp::kIns, "", target[j - 1]});
    --j;
  }
  std::reverse(trace.ops.begin(), trace.ops.end());
  return trace;
}

AlignmentTrace align(const GraphemeString& source,
                     const GraphemeString& target) {
  return align_symbols(source.surfaces(), target.surfaces());
}

ErrorCounts classify_errors(const AlignmentTrace& trace) {
  ErrorCounts counts;
  for (const AlignedPair& p : trace.ops) {
    switch (p.op) {
      case EditOp::kIns: ++counts.ins; break;
      case EditOp::kDel: ++counts.del; break;
      case EditOp::kSub: ++counts.sub; break;
      case EditOp::kMatch: break;
    }
  }
  return counts;
}

int ConfusionMatrix::intern(const std::string& label) {
  for (size_t k = 0; k < labels_.size(); ++k)
    if (labels_[k] == label) return static_cast<int>(k);
  labels_.push_back(label);
  for (auto& row : counts_) row.push_back(0);
  counts_.emplace_back(labels_.size(), 0.0);
  return static_cast<int>(labels_.size()) - 1;
}

int ConfusionMatrix::label_index(const std::string& label) const {
  for (size_t k = 0; k < labels_.size(); ++k)
    if (labels_[k] == label) return static_cast<int>(k);
  return -1;
}

void ConfusionMatrix::add(const std::string& src, const std::string& tgt,
                          double amount) {
  const int r = intern(src);
  const int c = intern(tgt);
  counts_[r][c] += amount;
}

void ConfusionMatrix::add_trace(const AlignmentTrace& trace) {
  for (const AlignedPair& p : trace.ops) {
    switch (p.op) {
      case EditOp::kMatch:
      case EditOp::kSub:
        add(p.src, p.tgt);
        break;
      case EditOp::kIns:
        add(kEps, p.tgt);
        break;
      case EditOp::kDel:
        add(p.src, kEps);
        break;
    }
  }
}

double ConfusionMatrix::at(const std::string& src,
                           const std::string& tgt) const {
  const int r = label_index(src);
  const int c = label_index(tgt);
  if (r < 0 || c < 0) return 0;
  return counts_[r][c];
}

double ConfusionMatrix::total() const {
  double t = 0;
  for (const auto& row : counts_)
    for (double v : row) t += v;
  return t;
}

ConfusionMatrix ConfusionMatrix::normalized() const {
  ConfusionMatrix out = *this;
  for (auto& row : out.counts_) {
    double s = 0;
    for (double v : row) s += v;
    if (s > 0)
      for (double& v : row) v /= s;
  }
  return out;
}

std::string ConfusionMatrix::to_csv() const {
  std::ostringstream out;
  out.precision(12);
  for (const std::string& l : labels_) out << ',' << l;
  out << '\n';
  for (size_t r = 0; r < labels_.size(); ++r) {
    out << labels_[r];
    for (double v : counts_[r]) out << ',' << v;
    out << '\n';
  }
  return out.str();
}

void ConfusionMatrix::save_csv(const std::filesystem::path& file) const {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw DataError("cannot write confusion CSV: " + file.string());
  out << to_csv();
}

ConfusionMatrix ConfusionMatrix::from_csv(const std::string& text) {
  ConfusionMatrix m;
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line))
    throw DataError("confusion CSV: missing header row");
  if (!line.empty() && line.back() == '\r') line.pop_back();

  std::vector<std::string> cols;
  {
    std::istringstream ls(line);
    std::string cell;
    bool first = true;
    while (std::getline(ls, cell, ',')) {
      if (first) {
        first = false;  // corner cell, ignored
        continue;
      }
      cols.push_back(cell);
    }
  }
  for (const std::string& c : cols) m.intern(c);

  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string cell;
    if (!std::getline(ls, cell, ',')) continue;
    const int r = m.intern(cell);
    size_t c = 0;
    while (std::getline(ls, cell, ',')) {
      if (c >= cols.size())
        throw DataError("confusion CSV: row wider than header");
      const int ci = m.label_index(cols[c]);
      m.counts_[r][ci] += std::stod(cell);
      ++c;
    }
  }
  return m;
}

ConfusionMatrix ConfusionMatrix::load_csv(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw DataError("cannot open confusion CSV: " + file.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_csv(buf.str());
}

ConfusionMatrix confusion_matrix(
    const std::vector<std::pair<GraphemeString, GraphemeString>>& pairs,
    Normalization normalization) {
  ConfusionMatrix m;
  for (const auto& [src, tgt] : pairs) m.add_trace(align(src, tgt));
  return normalization == Normalization::kRow ? m.normalized() : m;
}

ErrorCounts system_induced_errors(const GraphemeString& ocr,
                                  const GraphemeString& prediction,
                                  const GraphemeString& gold) {
  const AlignmentTrace to_ocr = align(gold, ocr);
  const AlignmentTrace to_pred = align(gold, prediction);
  const size_t gold_len = gold.size();

  // Gold positions the OCR reproduced, and OCR insertions per gold gap
  // (gap g sits before gold position g; gap gold_len is the tail).
  std::vector<char> ocr_matched(gold_len, 0);
  std::vector<uint32_t> ocr_ins(gold_len + 1, 0);
  {
    size_t g = 0;
    for (const AlignedPair& p : to_ocr.ops) {
      switch (p.op) {
        case EditOp::kMatch: ocr_matched[g++] = 1; break;
        case EditOp::kSub:
        case EditOp::kDel: ++g; break;
        case EditOp::kIns: ++ocr_ins[g]; break;
      }
    }
  }

  ErrorCounts out;
  std::vector<uint32_t> pred_ins(gold_len + 1, 0);
  {
    size_t g = 0;
    for (const AlignedPair& p : to_pred.ops) {
      switch (p.op) {
        case EditOp::kMatch:
          ++g;
          break;
        case EditOp::kSub:
          if (ocr_matched[g]) ++out.sub;
          ++g;
          break;
        case EditOp::kDel:
          if (ocr_matched[g]) ++out.del;
          ++g;
          break;
        case EditOp::kIns:
          ++pred_ins[g];
          break;
      }
    }
  }
  for (size_t g = 0; g <= gold_len; ++g)
    if (pred_ins[g] > ocr_ins[g]) out.ins += pred_ins[g] - ocr_ins[g];
  return out;
}

}  // namespace pocr
