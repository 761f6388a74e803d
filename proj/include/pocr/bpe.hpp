// include/pocr/bpe.hpp

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

#ifndef POCR_BPE_HPP_
#define POCR_BPE_HPP_

#include <filesystem>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "pocr/grapheme.hpp"

namespace pocr {

using TokenId = int32_t;

enum class TokenKind : uint8_t { kLearned, kAugmented, kSpecial };

struct BpeToken {
  std::string surface;
  uint64_t freq = 0;
  TokenKind kind = TokenKind::kLearned;
};

// Subword vocabulary learned by byte-pair merges over graphemes. Token ids
// are dense: learned tokens first, then alphabet-augmented ones, then the
// four specials (UNK, BOS, EOS, PAD) at the end.
class BpeVocabulary {
 public:
  BpeVocabulary() = default;

  size_t size() const { return tokens_.size(); }
  const std::vector<BpeToken>& tokens() const { return tokens_; }
  const BpeToken& token(TokenId id) const;
  const std::vector<std::pair<std::string, std::string>>& merges() const {
    return merges_;
  }
  uint32_t min_count() const { return min_count_; }

  TokenId unk_id() const { return unk_id_; }
  TokenId bos_id() const { return bos_id_; }
  TokenId eos_id() const { return eos_id_; }
  TokenId pad_id() const { return pad_id_; }
  bool is_special(TokenId id) const {
    return id == unk_id_ || id == bos_id_ || id == eos_id_ || id == pad_id_;
  }

  TokenId find(const std::string& surface) const;  // -1 if absent

  // UTF-8 text file; round-trips byte-identically.
  void save(const std::filesystem::path& file) const;
  static BpeVocabulary load(const std::filesystem::path& file);
  std::string serialize() const;
  static BpeVocabulary deserialize(const std::string& text);

  friend BpeVocabulary learn_bpe(const std::vector<GraphemeString>&, uint32_t,
                                 uint32_t);
  friend BpeVocabulary augment_with_alphabet(const BpeVocabulary&,
                                             const Alphabet&);

 private:
  void finalize();  // appends specials, rebuilds the index

  std::vector<BpeToken> tokens_;
  std::vector<std::pair<std::string, std::string>> merges_;
  std::unordered_map<std::string, TokenId> index_;
  uint32_t min_count_ = 1;
  TokenId unk_id_ = -1, bos_id_ = -1, eos_id_ = -1, pad_id_ = -1;
};

// Standard BPE merge loop seeded with single graphemes. Whitespace is its
// own token class and never merges; characters outside the corpus alphabet
// act as merge boundaries and never become tokens. Merging stops when no
// candidate pair reaches `min_count` or every candidate would exceed
// `max_token_len` graphemes. Pair counts are of non-overlapping adjacent
// occurrences; ties break lexicographically by (left, right) surface.
BpeVocabulary learn_bpe(const std::vector<GraphemeString>& corpus,
                        uint32_t min_count, uint32_t max_token_len = 2);

// Appends every alphabet grapheme missing from the vocabulary (frequency 0,
// kind augmented), guaranteeing OOV-free encoding of alphabet-only text.
BpeVocabulary augment_with_alphabet(const BpeVocabulary& vocab,
                                    const Alphabet& alphabet);

// Applies merges in learned order; out-of-vocabulary symbols become UNK.
std::vector<TokenId> bpe_encode(const GraphemeString& text,
                                const BpeVocabulary& vocab);

// Concatenates token surfaces; specials render as empty, UNK renders as
// `unk_replacement` (U+FFFD by default).
std::string bpe_decode(const std::vector<TokenId>& ids,
                       const BpeVocabulary& vocab,
                       const std::string& unk_replacement = "\xEF\xBF\xBD");

}  // namespace pocr

#endif  // POCR_BPE_HPP_
