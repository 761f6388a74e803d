// include/pocr/align.hpp

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

#ifndef POCR_ALIGN_HPP_
#define POCR_ALIGN_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "pocr/grapheme.hpp"

namespace pocr {

enum class EditOp : uint8_t { kMatch, kSub, kIns, kDel };

struct AlignedPair {
  EditOp op;
  std::string src;  // empty for insertions
  std::string tgt;  // empty for deletions
};

// Minimal unit-cost edit script turning `source` into `target`.
struct AlignmentTrace {
  std::vector<AlignedPair> ops;
  uint32_t cost = 0;  // == Levenshtein distance
};

struct ErrorCounts {
  uint64_t ins = 0;
  uint64_t del = 0;
  uint64_t sub = 0;
  ErrorCounts& operator+=(const ErrorCounts& o) {
    ins += o.ins;
    del += o.del;
    sub += o.sub;
    return *this;
  }
};

// Alignment over symbol sequences (grapheme surfaces by default). Ties are
// broken match/sub first, then deletion, then insertion.
AlignmentTrace align_symbols(const std::vector<std::string>& source,
                             const std::vector<std::string>& target);
AlignmentTrace align(const GraphemeString& source,
                     const GraphemeString& target);

// Distance only (no trace); same costs as align.
uint32_t edit_distance(const std::vector<std::string>& source,
                       const std::vector<std::string>& target);

ErrorCounts classify_errors(const AlignmentTrace& trace);

enum class Normalization { kRaw, kRow };

class ConfusionMatrix {
 public:
  static constexpr const char* kEps = "EPS";

  void add(const std::string& src, const std::string& tgt, double amount = 1);
  void add_trace(const AlignmentTrace& trace);

  const std::vector<std::string>& labels() const { return labels_; }
  double at(const std::string& src, const std::string& tgt) const;
  double total() const;

  // Row-normalized copy: each nonzero row sums to 1.
  ConfusionMatrix normalized() const;

  // CSV with the first row/column holding labels; EPS marks ins/del mass.
  void save_csv(const std::filesystem::path& file) const;
  static ConfusionMatrix load_csv(const std::filesystem::path& file);
  std::string to_csv() const;
  static ConfusionMatrix from_csv(const std::string& text);

  const std::vector<std::vector<double>>& rows() const { return counts_; }
  int label_index(const std::string& label) const;

 private:
  int intern(const std::string& label);
  std::vector<std::string> labels_;
  std::vector<std::vector<double>> counts_;
};

// Aligns every (source, target) pair and aggregates: SUB increments
// (src, tgt), INS increments (EPS, tgt), DEL increments (src, EPS), MATCH
// increments the diagonal.
ConfusionMatrix confusion_matrix(
    const std::vector<std::pair<GraphemeString, GraphemeString>>& pairs,
    Normalization normalization = Normalization::kRaw);

// Errors added by a correction system on top of the OCR: gold positions the
// OCR got right but the prediction got wrong. Gold is the pivot; insertions
// are counted per inter-gold gap as the excess of prediction insertions over
// OCR insertions. This three-way procedure is a reconstruction.
ErrorCounts system_induced_errors(const GraphemeString& ocr,
                                  const GraphemeString& prediction,
                                  const GraphemeString& gold);

}  // namespace pocr

#endif  // POCR_ALIGN_HPP_
