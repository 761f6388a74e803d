// src/bpe.cpp

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

#include "pocr/bpe.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "pocr/unicode.hpp"

namespace pocr {

namespace {

constexpr const char* kUnkSurface = "<unk>";
constexpr const char* kBosSurface = "<s>";
constexpr const char* kEosSurface = "</s>";
constexpr const char* kPadSurface = "<pad>";

// Working symbol table for learning and encoding. Symbols are interned
// grapheme surfaces or merge products; whitespace and out-of-alphabet
// characters act as merge boundaries.
struct SymbolTable {
  std::vector<std::string> surface;
  std::vector<uint32_t> glen;       // length in graphemes
  std::vector<uint8_t> mergeable;   // alphabet-derived symbols only
  std::vector<uint8_t> excluded;    // out-of-alphabet, never a token
  std::unordered_map<std::string, int> ids;

  int intern(const std::string& s, uint32_t len, bool merge_ok, bool excl) {
    auto it = ids.find(s);
    if (it != ids.end()) return it->second;
    const int id = static_cast<int>(surface.size());
    surface.push_back(s);
    glen.push_back(len);
    mergeable.push_back(merge_ok);
    excluded.push_back(excl);
    ids.emplace(s, id);
    return id;
  }

  std::vector<int> from_line(const GraphemeString& line) {
    std::vector<int> out;
    out.reserve(line.size());
    for (size_t i = 0; i < line.size(); ++i) {
      const std::string s(line.surface(i));
      if (line.cls(i) >= 0) {
        out.push_back(intern(s, 1, true, false));
      } else if (is_whitespace_surface(s)) {
        out.push_back(intern(s, 1, false, false));
      } else {
        out.push_back(intern(s, 1, false, true));
      }
    }
    return out;
  }
};

// Replaces non-overlapping (left, right) occurrences, left to right.
void apply_merge(std::vector<int>& line, int left, int right, int merged) {
  size_t w = 0;
  for (size_t r = 0; r < line.size();) {
    if (r + 1 < line.size() && line[r] == left && line[r + 1] == right) {
      line[w++] = merged;
      r += 2;
    } else {
      line[w++] = line[r++];
    }
  }
  line.resize(w);
}

}  // namespace

const BpeToken& BpeVocabulary::token(TokenId id) const {
  if (id < 0 || static_cast<size_t>(id) >= tokens_.size())
    throw DataError("token id out of range: " + std::to_string(id));
  return tokens_[id];
}

TokenId BpeVocabulary::find(const std::string& surface) const {
  auto it = index_.find(surface);
  return it == index_.end() ? -1 : it->second;
}

void BpeVocabulary::finalize() {
  auto add_special = [&](const char* s) {
    tokens_.push_back(BpeToken{s, 0, TokenKind::kSpecial});
    return static_cast<TokenId>(tokens_.size()) - 1;
  };
  unk_id_ = add_special(kUnkSurface);
  bos_id_ = add_special(kBosSurface);
  eos_id_ = add_special(kEosSurface);
  pad_id_ = add_special(kPadSurface);
  index_.clear();
  for (size_t i = 0; i < tokens_.size(); ++i)
    index_.emplace(tokens_[i].surface, static_cast<TokenId>(i));
}

BpeVocabulary learn_bpe(const std::vector<GraphemeString>& corpus,
                        uint32_t min_count, uint32_t max_token_len) {
  if (corpus.empty()) throw DataError("learn_bpe: empty corpus");
  if (min_count < 1) throw DataError("learn_bpe: min_count must be >= 1");
  if (max_token_len < 1)
    throw DataError("learn_bpe: max_token_len must be >= 1");

  SymbolTable syms;
  std::vector<std::vector<int>> lines;
  lines.reserve(corpus.size());
  for (const GraphemeString& g : corpus) lines.push_back(syms.from_line(g));

  std::vector<std::pair<std::string, std::string>> merges;
  std::vector<int> merge_outputs;

  for (;;) {
    // Non-overlapping adjacent pair counts, boundaries excluded.
    std::map<std::pair<int, int>, uint64_t> counts;
    for (const auto& line : lines) {
      for (size_t i = 0; i + 1 < line.size();) {
        const int a = line[i], b = line[i + 1];
        if (syms.mergeable[a] && syms.mergeable[b] &&
            syms.glen[a] + syms.glen[b] <= max_token_len) {
          ++counts[{a, b}];
          i += 2;
        } else {
          ++i;
        }
      }
    }

    uint64_t best_count = 0;
    std::pair<int, int> best{-1, -1};
    for (const auto& [pair, c] : counts) {
      if (c < min_count) continue;
      if (c > best_count) {
        best_count = c;
        best = pair;
      } else if (c == best_count && best.first >= 0) {
        const auto lhs = std::tie(syms.surface[pair.first],
                                  syms.surface[pair.second]);
        const auto rhs = std::tie(syms.surface[best.first],
                                  syms.surface[best.second]);
        if (lhs < rhs) best = pair;
      }
    }
    if (best.first < 0) break;

    const std::string merged_surface =
        syms.surface[best.first] + syms.surface[best.second];
    const int merged = syms.intern(
        merged_surface, syms.glen[best.first] + syms.glen[best.second], true,
        false);
    merges.emplace_back(syms.surface[best.first], syms.surface[best.second]);
    merge_outputs.push_back(merged);
    for (auto& line : lines) apply_merge(line, best.first, best.second, merged);
  }

  // Final occurrence counts over the merged corpus.
  std::vector<uint64_t> freq(syms.surface.size(), 0);
  for (const auto& line : lines)
    for (int s : line) ++freq[s];

  // Vocabulary order: seeds by first corpus appearance, then merge products
  // in merge order. Merge products always stay (encoding may emit any of
  // them); seeds stay as the base inventory.
  BpeVocabulary vocab;
  vocab.min_count_ = min_count;
  std::vector<char> emitted(syms.surface.size(), 0);
  auto emit = [&](int s) {
    if (emitted[s] || syms.excluded[s]) return;
    emitted[s] = 1;
    vocab.tokens_.push_back(
        BpeToken{syms.surface[s], freq[s], TokenKind::kLearned});
  };
  for (const GraphemeString& g : corpus) {
    for (size_t i = 0; i < g.size(); ++i) {
      const auto it = syms.ids.find(std::string(g.surface(i)));
      if (it != syms.ids.end()) emit(it->second);
    }
  }
  for (int s : merge_outputs) emit(s);

  vocab.merges_ = std::move(merges);
  vocab.finalize();
  return vocab;
}

BpeVocabulary augment_with_alphabet(const BpeVocabulary& vocab,
                                    const Alphabet& alphabet) {
  BpeVocabulary out;
  out.min_count_ = vocab.min_count_;
  out.merges_ = vocab.merges_;
  for (const BpeToken& t : vocab.tokens_)
    if (t.kind != TokenKind::kSpecial) out.tokens_.push_back(t);
  std::unordered_map<std::string, bool> have;
  for (const BpeToken& t : out.tokens_) have.emplace(t.surface, true);
  for (const std::string& g : alphabet.graphemes())
    if (!have.count(g))
      out.tokens_.push_back(BpeToken{g, 0, TokenKind::kAugmented});
  out.finalize();
  return out;
}

std::vector<TokenId> bpe_encode(const GraphemeString& text,
                                const BpeVocabulary& vocab) {
  SymbolTable syms;
  std::vector<int> line = syms.from_line(text);

  // Rank merge rules; apply the lowest-ranked applicable rule repeatedly.
  std::map<std::pair<int, int>, std::pair<size_t, int>> rules;
  for (size_t r = 0; r < vocab.merges_.size(); ++r) {
    const auto& [ls, rs] = vocab.merges_[r];
    auto li = syms.ids.find(ls);
    auto ri = syms.ids.find(rs);
    // Intern merge products so later rules can reference them.
    const int left = li != syms.ids.end()
                         ? li->second
                         : syms.intern(ls, 0, true, false);
    const int right = ri != syms.ids.end()
                          ? ri->second
                          : syms.intern(rs, 0, true, false);
    const int merged = syms.intern(vocab.merges_[r].first +
                                   vocab.merges_[r].second, 0, true, false);
    rules.emplace(std::make_pair(left, right), std::make_pair(r, merged));
  }

  for (;;) {
    size_t best_rank = SIZE_MAX;
    std::pair<int, int> best{-1, -1};
    int best_merged = -1;
    for (size_t i = 0; i + 1 < line.size(); ++i) {
      if (!syms.mergeable[line[i]] || !syms.mergeable[line[i + 1]]) continue;
      auto it = rules.find({line[i], line[i + 1]});
      if (it != rules.end() && it->second.first < best_rank) {
        best_rank = it->second.first;
        best = it->first;
        best_merged = it->second.second;
      }
    }
    if (best_merged < 0) break;
    apply_merge(line, best.first, best.second, best_merged);
  }

  std::vector<TokenId> out;
  out.reserve(line.size());
  for (int s : line) {
    if (syms.excluded[s]) {
      out.push_back(vocab.unk_id());
      continue;
    }
    const TokenId id = vocab.find(syms.surface[s]);
    out.push_back(id >= 0 ? id : vocab.unk_id());
  }
  return out;
}

std::string bpe_decode(const std::vector<TokenId>& ids,
                       const BpeVocabulary& vocab,
                       const std::string& unk_replacement) {
  std::string out;
  for (TokenId id : ids) {
    const BpeToken& t = vocab.token(id);
    if (id == vocab.unk_id()) {
      out += unk_replacement;
    } else if (t.kind != TokenKind::kSpecial) {
      out += t.surface;
    }
  }
  return out;
}

std::string BpeVocabulary::serialize() const {
  std::ostringstream out;
  out << "bpe-vocab v1 " << min_count_ << "\n";
  for (const BpeToken& t : tokens_) {
    const char* kind = t.kind == TokenKind::kLearned     ? "learned"
                       : t.kind == TokenKind::kAugmented ? "augmented"
                                                         : "special";
    out << t.surface << '\t' << t.freq << '\t' << kind << '\n';
  }
  out << "---\n";
  for (const auto& [l, r] : merges_) out << l << '\t' << r << '\n';
  return out.str();
}

void BpeVocabulary::save(const std::filesystem::path& file) const {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw DataError("cannot write vocabulary: " + file.string());
  out << serialize();
}

BpeVocabulary BpeVocabulary::deserialize(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.rfind("bpe-vocab v1 ", 0) != 0)
    throw DataError("vocabulary file: bad header");

  BpeVocabulary vocab;
  vocab.min_count_ = static_cast<uint32_t>(std::stoul(line.substr(13)));

  bool in_merges = false;
  while (std::getline(in, line)) {
    if (line == "---") {
      in_merges = true;
      continue;
    }
    if (line.empty()) continue;
    const size_t t1 = line.find('\t');
    if (t1 == std::string::npos)
      throw DataError("vocabulary file: malformed line: " + line);
    if (in_merges) {
      vocab.merges_.emplace_back(line.substr(0, t1), line.substr(t1 + 1));
      continue;
    }
    const size_t t2 = line.find('\t', t1 + 1);
    if (t2 == std::string::npos)
      throw DataError("vocabulary file: malformed token line: " + line);
    BpeToken tok;
    tok.surface = line.substr(0, t1);
    tok.freq = std::stoull(line.substr(t1 + 1, t2 - t1 - 1));
    const std::string kind = line.substr(t2 + 1);
    if (kind == "learned")
      tok.kind = TokenKind::kLearned;
    else if (kind == "augmented")
      tok.kind = TokenKind::kAugmented;
    else if (kind == "special")
      tok.kind = TokenKind::kSpecial;
    else
      throw DataError("vocabulary file: unknown token kind: " + kind);
    if (tok.kind != TokenKind::kSpecial) vocab.tokens_.push_back(tok);
  }
  vocab.finalize();
  return vocab;
}

BpeVocabulary BpeVocabulary::load(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw DataError("cannot open vocabulary: " + file.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return deserialize(buf.str());
}

}  // namespace pocr
