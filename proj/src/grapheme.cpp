// src/grapheme.cpp

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

#include "pocr/grapheme.hpp"

#include <fstream>
#include <sstream>
#include <unordered_set>

#include "pocr/unicode.hpp"

namespace pocr {

Alphabet::Alphabet(std::string name, std::vector<std::string> graphemes)
    : name_(std::move(name)), graphemes_(std::move(graphemes)) {
  for (size_t i = 0; i < graphemes_.size(); ++i) {
    const std::string& g = graphemes_[i];
    if (g.empty())
      throw DataError("alphabet '" + name_ + "': empty grapheme at index " +
                      std::to_string(i));
    std::string key = fold_lower(nfc(g));
    auto [it, inserted] = index_.emplace(key, static_cast<int>(i));
    if (!inserted)
      throw DataError("alphabet '" + name_ + "': duplicate grapheme '" + g +
                      "'");
    max_codepoints_ = std::max(max_codepoints_, utf8_decode(g).size());
  }
}

Alphabet Alphabet::load(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw DataError("cannot open alphabet file: " + file.string());
  std::vector<std::string> graphemes;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    // Trim ASCII whitespace only; graphemes themselves are never blank.
    size_t b = line.find_first_not_of(" \t");
    if (b == std::string::npos) continue;
    size_t e = line.find_last_not_of(" \t");
    graphemes.push_back(nfc(line.substr(b, e - b + 1)));
  }
  return Alphabet(file.stem().string(), std::move(graphemes));
}

void Alphabet::save(const std::filesystem::path& file) const {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw DataError("cannot write alphabet file: " + file.string());
  for (const std::string& g : graphemes_) out << g << "\n";
}

int Alphabet::find(std::string_view surface) const {
  auto it = index_.find(fold_lower(surface));
  return it == index_.end() ? -1 : it->second;
}

const Alphabet& iast_alphabet() {
  static const Alphabet a("iast", {
      // vowels
      "a", "ā", "i", "ī", "u", "ū", "ṛ", "ṝ", "ḷ", "ḹ", "e", "ai", "o", "au",
      // anusvāra (both romanisations in circulation), visarga
      "ṃ", "ṁ", "ḥ",
      // velar, palatal, retroflex, dental, labial rows
      "k", "kh", "g", "gh", "ṅ",
      "c", "ch", "j", "jh", "ñ",
      "ṭ", "ṭh", "ḍ", "ḍh", "ṇ",
      "t", "th", "d", "dh", "n",
      "p", "ph", "b", "bh", "m",
      // semivowels, sibilants, aspirate
      "y", "r", "l", "v",
      "ś", "ṣ", "s", "h",
  });
  return a;
}

std::string normalize(std::string_view text) { return normalize_text(text); }

GraphemeString::GraphemeString(std::string_view text,
                               const Alphabet& alphabet) {
  raw_.assign(text);
  const std::u32string cps = utf8_decode(raw_);

  // Byte offset of every codepoint (plus the end sentinel).
  std::vector<uint32_t> offsets;
  offsets.reserve(cps.size() + 1);
  uint32_t off = 0;
  for (char32_t cp : cps) {
    offsets.push_back(off);
    off += static_cast<uint32_t>(utf8_encode(cp).size());
  }
  offsets.push_back(off);

  const size_t max_len = std::max<size_t>(alphabet.max_grapheme_codepoints(), 1);
  size_t i = 0;
  while (i < cps.size()) {
    size_t take = 1;
    int32_t cls = kOtherClass;
    const size_t limit = std::min(max_len, cps.size() - i);
    for (size_t len = limit; len >= 1; --len) {
      std::string candidate;
      for (size_t k = 0; k < len; ++k) candidate += utf8_encode(cps[i + k]);
      int found = alphabet.find(candidate);
      if (found >= 0) {
        take = len;
        cls = found;
        break;
      }
    }
    segments_.push_back(Segment{offsets[i],
                                offsets[i + take] - offsets[i], cls});
    i += take;
  }
}

std::vector<std::string> GraphemeString::surfaces() const {
  std::vector<std::string> out;
  out.reserve(segments_.size());
  for (size_t i = 0; i < segments_.size(); ++i)
    out.emplace_back(surface(i));
  return out;
}

CoverageReport alphabet_coverage(const Alphabet& source,
                                 const Alphabet& target) {
  CoverageReport report;
  report.target_size = target.size();
  for (const std::string& g : target.graphemes()) {
    if (source.contains(g))
      ++report.overlap;
    else
      report.missing.push_back(g);
  }
  return report;
}

}  // namespace pocr
