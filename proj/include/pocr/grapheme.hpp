// include/pocr/grapheme.hpp

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

#ifndef POCR_GRAPHEME_HPP_
#define POCR_GRAPHEME_HPP_

#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "pocr/common.hpp"

namespace pocr {

// An ordered inventory of graphemes: writing-system units of one or two
// abstract characters (NFC codepoints), e.g. "a", "ṣ", "kh", "ai".
class Alphabet {
 public:
  Alphabet() = default;
  Alphabet(std::string name, std::vector<std::string> graphemes);

  // File format: UTF-8, one grapheme per line, '#' starts a comment.
  static Alphabet load(const std::filesystem::path& file);
  void save(const std::filesystem::path& file) const;

  const std::string& name() const { return name_; }
  const std::vector<std::string>& graphemes() const { return graphemes_; }
  size_t size() const { return graphemes_.size(); }
  const std::string& grapheme(int cls) const { return graphemes_.at(cls); }

  // Index of a grapheme by its case-folded surface; -1 if absent.
  int find(std::string_view surface) const;
  bool contains(std::string_view surface) const { return find(surface) >= 0; }
  size_t max_grapheme_codepoints() const { return max_codepoints_; }

 private:
  std::string name_;
  std::vector<std::string> graphemes_;
  std::unordered_map<std::string, int> index_;  // keyed by folded surface
  size_t max_codepoints_ = 0;
};

// The romanised Sanskrit inventory the toolkit ships: 50 graphemes of which
// 12 are two-character combinations (aspirates and the ai/au diphthongs).
// The exact membership is an editorial reconstruction from standard IAST
// usage; see data/alphabets/iast.alphabet for the same list as data.
const Alphabet& iast_alphabet();

constexpr int kOtherClass = -1;

struct Segment {
  uint32_t offset;  // byte offset into raw text
  uint32_t length;  // byte length
  int32_t cls;      // alphabet index, or kOtherClass
};

// Text plus its deterministic segmentation into alphabet graphemes.
// Concatenating the segment surfaces reproduces the raw text exactly.
class GraphemeString {
 public:
  GraphemeString() = default;

  // Greedy longest-match left to right; unmatched codepoints become
  // single-character OTHER segments. `text` must already be NFC.
  GraphemeString(std::string_view text, const Alphabet& alphabet);

  const std::string& str() const { return raw_; }
  size_t size() const { return segments_.size(); }
  bool empty() const { return segments_.empty(); }
  std::string_view surface(size_t i) const {
    const Segment& s = segments_[i];
    return std::string_view(raw_).substr(s.offset, s.length);
  }
  int32_t cls(size_t i) const { return segments_[i].cls; }
  const std::vector<Segment>& segments() const { return segments_; }

  std::vector<std::string> surfaces() const;

 private:
  std::string raw_;
  std::vector<Segment> segments_;
};

// NFC normalization with CR/LF handling; see unicode.hpp.
std::string normalize(std::string_view text);

inline GraphemeString segment(std::string_view nfc_text,
                              const Alphabet& alphabet) {
  return GraphemeString(nfc_text, alphabet);
}

struct CoverageReport {
  std::vector<std::string> missing;  // target graphemes absent from source
  size_t overlap = 0;                // |target ∩ source|
  size_t target_size = 0;
};

// Set difference target \ source over grapheme surfaces.
CoverageReport alphabet_coverage(const Alphabet& source,
                                 const Alphabet& target);

}  // namespace pocr

#endif  // POCR_GRAPHEME_HPP_
