// include/pocr/metrics.hpp

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

#ifndef POCR_METRICS_HPP_
#define POCR_METRICS_HPP_

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "pocr/align.hpp"
#include "pocr/grapheme.hpp"

namespace pocr {

// Character recognition rate: max(0, (|gold| - lev(pred, gold)) / |gold|),
// lengths and edits in graphemes. Errors on empty gold.
double crr(const GraphemeString& prediction, const GraphemeString& gold);

// Word recognition rate: whitespace words aligned at word level; the score
// is the fraction of gold words matched exactly. Errors on wordless gold.
double wrr(const GraphemeString& prediction, const GraphemeString& gold);

// Anything that can assign a log-likelihood to a line of text.
class LanguageModel {
 public:
  virtual ~LanguageModel() = default;
  virtual double sentence_log_prob(const GraphemeString& sentence) const = 0;
};

// Additive-smoothed unigram model over grapheme surfaces with a closed
// vocabulary plus an UNK share.
class UnigramLm : public LanguageModel {
 public:
  static UnigramLm train(const std::vector<GraphemeString>& corpus,
                         double smoothing_alpha = 1.0);

  double log_prob(const std::string& surface) const;
  double sentence_log_prob(const GraphemeString& sentence) const override;

  // Includes the UNK entry under the empty-string key.
  const std::map<std::string, double>& log_probs() const { return logp_; }

 private:
  std::map<std::string, double> logp_;
  double unk_logp_ = 0;
};

// Additive-smoothed grapheme n-gram model; the bundled NormLP scorer.
class GraphemeNgramLm : public LanguageModel {
 public:
  static GraphemeNgramLm train(const std::vector<GraphemeString>& corpus,
                               int order = 5, double smoothing_alpha = 1.0);
  double sentence_log_prob(const GraphemeString& sentence) const override;

 private:
  int order_ = 5;
  double alpha_ = 1.0;
  size_t vocab_size_ = 0;
  std::map<std::vector<std::string>, uint64_t> context_counts_;
  std::map<std::vector<std::string>, uint64_t> ngram_counts_;
};

// Acceptability: -(log P_model / log P_unigram); closer to zero is better.
double norm_lp(const GraphemeString& sentence, const LanguageModel& scorer,
               const UnigramLm& unigram);

struct LineEval {
  double crr = 0;
  double wrr = 0;
  std::optional<double> norm_lp;
};

struct LengthBucket {
  size_t lo = 0;       // inclusive lower length edge, in graphemes
  size_t count = 0;
  double mean_crr = 0;
  double mean_wrr = 0;
};

struct EvalReport {
  std::vector<LineEval> per_line;
  double mean_crr = 0;
  double mean_wrr = 0;
  std::optional<double> mean_norm_lp;
  std::vector<LengthBucket> buckets;
};

// Corpus evaluation; buckets group lines by gold length (width
// `bucket_width`), and buckets with fewer than `min_bucket_count` lines are
// merged into the nearest smaller bucket.
EvalReport evaluate_corpus(
    const std::vector<std::pair<GraphemeString, GraphemeString>>& pred_gold,
    const LanguageModel* scorer = nullptr, const UnigramLm* unigram = nullptr,
    size_t bucket_width = 10, size_t min_bucket_count = 5);

}  // namespace pocr

#endif  // POCR_METRICS_HPP_
