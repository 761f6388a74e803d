// include/pocr/copynet.hpp

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

#ifndef POCR_COPYNET_HPP_
#define POCR_COPYNET_HPP_

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "pocr/bpe.hpp"
#include "pocr/metrics.hpp"
#include "pocr/nnet.hpp"

namespace pocr {

// One entry of the mixed output distribution. `token` is a vocabulary id,
// or an extended id (>= vocab size) for a source-only identity; its
// probability is exactly gen_mass + copy_mass.
struct MixtureEntry {
  int64_t token;
  double prob;
  double gen_mass;
  double copy_mass;
};

struct OutputDistribution {
  std::vector<MixtureEntry> entries;
  double total_mass() const {
    double s = 0;
    for (const MixtureEntry& e : entries) s += e.prob;
    return s;
  }
  const MixtureEntry* find(int64_t token) const {
    for (const MixtureEntry& e : entries)
      if (e.token == token) return &e;
    return nullptr;
  }
};

// Shared-normalizer mixture of generate scores (one per vocabulary token)
// and copy scores (one per source position). Source tokens may carry
// extended ids; those receive zero generate mass. Tokens absent from both
// the vocabulary and the source are covered by the UNK generate entry.
OutputDistribution output_distribution(const Vector& gen_scores,
                                       const Vector& copy_scores,
                                       const std::vector<int64_t>& source_tokens,
                                       size_t vocab_size);

struct CopyNetConfig {
  int hidden = 128;
  int embed = 128;
  int layers = 3;
  bool residual = true;
  bool use_copy = true;  // false = generate-only encoder-decoder ablation
  int epochs = 30;
  int batch_size = 32;
  double learning_rate = 1e-3;
  double grad_clip = 5.0;
  uint64_t seed = 7;
  int max_len = 400;       // lines longer than this are skipped
  int beam_width = 1;
  int dev_eval_every = 1;  // 0 disables per-epoch dev decoding
  double init_range = 0.08;
};

struct EpochStats {
  int epoch = 0;
  double mean_token_nll = 0;
  std::optional<double> dev_crr;
};

struct TrainReport {
  std::vector<EpochStats> epochs;
  size_t pairs_used = 0;
  size_t pairs_skipped = 0;
};

struct DecodeStep {
  TokenId token;
  double prob;
  double gen_mass;
  double copy_mass;
};

struct DecodeResult {
  std::vector<TokenId> tokens;  // without EOS
  std::string text;
  std::vector<DecodeStep> steps;
};

// Per-grapheme mean copy/generate masses over (input grapheme -> predicted
// grapheme) events, gathered from greedy decodes.
struct CopyGenAnalysis {
  std::vector<std::string> labels;
  std::vector<std::vector<double>> mean_gen;
  std::vector<std::vector<double>> mean_copy;
  std::vector<std::vector<uint64_t>> counts;
  std::string to_csv(bool copy_mode) const;
};

// Subword encoder-decoder corrector with Luong attention and a copy/generate
// output mixture; source and target share one embedding table. With
// use_copy=false it degrades to the plain attention encoder-decoder.
class CopyNet {
 public:
  CopyNet() = default;

  // Fresh model with uniform(-init_range, init_range) parameters. The
  // alphabet drives segmentation at decode time and rides along in the
  // checkpoint.
  static CopyNet init(const BpeVocabulary& vocab, const Alphabet& alphabet,
                      const CopyNetConfig& config);

  const CopyNetConfig& config() const { return cfg_; }
  const BpeVocabulary& vocab() const { return vocab_; }
  const Alphabet& alphabet() const { return alphabet_; }
  uint64_t vocab_fingerprint() const { return vocab_fingerprint_; }

  // Shared table: source and target embeddings are the same storage.
  Tensor& source_embedding() { return E_; }
  Tensor& target_embedding() { return E_; }

  std::vector<Tensor*> parameters();

  // Raw generate scores over the whole vocabulary for a scoring state.
  Vector score_generate(const Vector& decoder_state) const;
  // Raw copy scores, one per encoder position.
  Vector score_copy(const Vector& decoder_state,
                    const std::vector<Vector>& encoder_states) const;

  // Teacher-forced mean per-token NLL of (source, target) token sequences;
  // when `accumulate_grads` is set the parameter gradients are accumulated
  // (scaled by `grad_scale`).
  double pair_loss(const std::vector<TokenId>& src,
                   const std::vector<TokenId>& tgt, bool accumulate_grads,
                   double grad_scale = 1.0);

  using CheckpointSink = std::function<void(int epoch, const CopyNet&)>;
  TrainReport train_loop(
      const std::vector<std::pair<std::string, std::string>>& pairs,
      const std::vector<std::pair<std::string, std::string>>& dev_pairs = {},
      const CheckpointSink& sink = nullptr,
      std::ostream* log = nullptr);

  DecodeResult decode(const std::string& line, int beam_width = 0) const;
  std::string correct(const std::string& line, int beam_width = 0) const {
    return decode(line, beam_width).text;
  }

  // Mean NLL per token of `text` given itself as source; lets the corrector
  // act as a LanguageModel-style scorer.
  double self_log_prob(const std::string& text) const;

  CopyGenAnalysis copy_generate_analysis(
      const std::vector<std::string>& inputs) const;

  // Versioned container: magic POCF, text hyperparameters, then named
  // 64-bit little-endian tensors with shape prefixes.
  void save(const std::filesystem::path& file) const;
  static CopyNet load(const std::filesystem::path& file,
                      const BpeVocabulary& vocab);

 private:
  struct StepScores;

  std::vector<Vector> embed(const std::vector<TokenId>& ids) const;
  void encoder_forward(const std::vector<TokenId>& src,
                       LstmStack::ForwardResult& enc) const;

  CopyNetConfig cfg_;
  BpeVocabulary vocab_;
  Alphabet alphabet_;
  uint64_t vocab_fingerprint_ = 0;
  Tensor E_;      // vocab x embed, shared source/target
  LstmStack enc_;
  LstmStack dec_;
  Tensor W_a_;    // hidden x hidden, attention
  Tensor W_cat_;  // hidden x 2*hidden, attentional combine
  Tensor W_o_;    // embed x hidden, generate projection
  Tensor W_c_;    // hidden x hidden, copy projection
};

// The CopyNet as an acceptability scorer (conditions the corrector on the
// scored sentence itself).
class CopyNetSelfScorer : public LanguageModel {
 public:
  explicit CopyNetSelfScorer(const CopyNet& model) : model_(model) {}
  double sentence_log_prob(const GraphemeString& sentence) const override {
    return model_.self_log_prob(sentence.str());
  }

 private:
  const CopyNet& model_;
};

}  // namespace pocr

#endif  // POCR_COPYNET_HPP_
