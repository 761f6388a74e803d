// src/metrics.cpp

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

#include "pocr/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "pocr/unicode.hpp"

namespace pocr {

namespace {

std::vector<std::string> whitespace_words(const GraphemeString& s) {
  std::vector<std::string> words;
  std::string current;
  for (size_t i = 0; i < s.size(); ++i) {
    const std::string_view surf = s.surface(i);
    if (s.cls(i) == kOtherClass && is_whitespace_surface(surf)) {
      if (!current.empty()) {
        words.push_back(std::move(current));
        current.clear();
      }
    } else {
      current += surf;
    }
  }
  if (!current.empty()) words.push_back(std::move(current));
  return words;
}

}  // namespace

double crr(const GraphemeString& prediction, const GraphemeString& gold) {
  if (gold.empty()) throw DataError("crr: empty gold line");
  const double len = static_cast<double>(gold.size());
  const double dist = edit_distance(prediction.surfaces(), gold.surfaces());
  return std::max(0.0, (len - dist) / len);
}

double wrr(const GraphemeString& prediction, const GraphemeString& gold) {
  const std::vector<std::string> gold_words = whitespace_words(gold);
  if (gold_words.empty()) throw DataError("wrr: gold line has no words");
  const std::vector<std::string> pred_words = whitespace_words(prediction);
  const AlignmentTrace trace = align_symbols(pred_words, gold_words);
  uint64_t matched = 0;
  for (const AlignedPair& p : trace.ops)
    if (p.op == EditOp::kMatch) ++matched;
  return static_cast<double>(matched) / gold_words.size();
}

UnigramLm UnigramLm::train(const std::vector<GraphemeString>& corpus,
                           double smoothing_alpha) {
  if (corpus.empty()) throw DataError("UnigramLm: empty corpus");
  if (smoothing_alpha <= 0)
    throw DataError("UnigramLm: smoothing alpha must be positive");
  std::map<std::string, uint64_t> counts;
  uint64_t total = 0;
  for (const GraphemeString& line : corpus) {
    for (size_t i = 0; i < line.size(); ++i) {
      ++counts[std::string(line.surface(i))];
      ++total;
    }
  }
  UnigramLm lm;
  const double denom =
      total + smoothing_alpha * (static_cast<double>(counts.size()) + 1);
  for (const auto& [surface, c] : counts)
    lm.logp_[surface] = std::log((c + smoothing_alpha) / denom);
  lm.unk_logp_ = std::log(smoothing_alpha / denom);
  lm.logp_[""] = lm.unk_logp_;
  return lm;
}

double UnigramLm::log_prob(const std::string& surface) const {
  auto it = logp_.find(surface);
  return it == logp_.end() ? unk_logp_ : it->second;
}

double UnigramLm::sentence_log_prob(const GraphemeString& sentence) const {
  double lp = 0;
  for (size_t i = 0; i < sentence.size(); ++i)
    lp += log_prob(std::string(sentence.surface(i)));
  return lp;
}

GraphemeNgramLm GraphemeNgramLm::train(
    const std::vector<GraphemeString>& corpus, int order,
    double smoothing_alpha) {
  if (corpus.empty()) throw DataError("GraphemeNgramLm: empty corpus");
  if (order < 1) throw DataError("GraphemeNgramLm: order must be >= 1");
  GraphemeNgramLm lm;
  lm.order_ = order;
  lm.alpha_ = smoothing_alpha;

  std::map<std::string, bool> vocab;
  for (const GraphemeString& line : corpus) {
    std::vector<std::string> symbols(order - 1, "<s>");
    for (size_t i = 0; i < line.size(); ++i) {
      symbols.emplace_back(line.surface(i));
      vocab.emplace(std::string(line.surface(i)), true);
    }
    for (size_t i = order - 1; i < symbols.size(); ++i) {
      std::vector<std::string> ctx(symbols.begin() + (i - order + 1),
                                   symbols.begin() + i);
      ++lm.context_counts_[ctx];
      ctx.push_back(symbols[i]);
      ++lm.ngram_counts_[ctx];
    }
  }
  lm.vocab_size_ = vocab.size();
  return lm;
}

double GraphemeNgramLm::sentence_log_prob(
    const GraphemeString& sentence) const {
  std::vector<std::string> symbols(order_ - 1, "<s>");
  for (size_t i = 0; i < sentence.size(); ++i)
    symbols.emplace_back(sentence.surface(i));
  double lp = 0;
  const double v = static_cast<double>(vocab_size_) + 1;  // UNK share
  for (size_t i = order_ - 1; i < symbols.size(); ++i) {
    std::vector<std::string> ctx(symbols.begin() + (i - order_ + 1),
                                 symbols.begin() + i);
    auto cit = context_counts_.find(ctx);
    const double cden = cit == context_counts_.end() ? 0 : cit->second;
    ctx.push_back(symbols[i]);
    auto nit = ngram_counts_.find(ctx);
    const double cnum = nit == ngram_counts_.end() ? 0 : nit->second;
    lp += std::log((cnum + alpha_) / (cden + alpha_ * v));
  }
  return lp;
}

double norm_lp(const GraphemeString& sentence, const LanguageModel& scorer,
               const UnigramLm& unigram) {
  if (sentence.empty()) throw DataError("norm_lp: empty sentence");
  const double denom = unigram.sentence_log_prob(sentence);
  if (denom == 0)
    throw DataError("norm_lp: unigram log-probability is zero");
  const double numer = scorer.sentence_log_prob(sentence);
  return -(numer / denom);
}

EvalReport evaluate_corpus(
    const std::vector<std::pair<GraphemeString, GraphemeString>>& pred_gold,
    const LanguageModel* scorer, const UnigramLm* unigram, size_t bucket_width,
    size_t min_bucket_count) {
  EvalReport report;
  if (pred_gold.empty()) return report;
  const bool with_lp = scorer != nullptr && unigram != nullptr;

  std::map<size_t, LengthBucket> buckets;
  double lp_sum = 0;
  for (const auto& [pred, gold] : pred_gold) {
    LineEval e;
    e.crr = crr(pred, gold);
    e.wrr = wrr(pred, gold);
    if (with_lp && !pred.empty()) e.norm_lp = norm_lp(pred, *scorer, *unigram);
    report.mean_crr += e.crr;
    report.mean_wrr += e.wrr;
    if (e.norm_lp) lp_sum += *e.norm_lp;

    const size_t lo = bucket_width
                          ? (gold.size() / bucket_width) * bucket_width
                          : 0;
    LengthBucket& b = buckets[lo];
    b.lo = lo;
    b.count += 1;
    b.mean_crr += e.crr;
    b.mean_wrr += e.wrr;
    report.per_line.push_back(std::move(e));
  }
  report.mean_crr /= pred_gold.size();
  report.mean_wrr /= pred_gold.size();
  size_t lp_n = 0;
  for (const LineEval& e : report.per_line)
    if (e.norm_lp) ++lp_n;
  if (lp_n) report.mean_norm_lp = lp_sum / lp_n;

  // Deficient buckets merge downward into the nearest smaller one; a
  // deficient first bucket folds into its successor.
  std::vector<LengthBucket> ordered;
  for (auto& [lo, b] : buckets) ordered.push_back(b);
  std::vector<LengthBucket> merged;
  for (size_t i = 0; i < ordered.size(); ++i) {
    if (!merged.empty() && ordered[i].count < min_bucket_count) {
      LengthBucket& prev = merged.back();
      prev.count += ordered[i].count;
      prev.mean_crr += ordered[i].mean_crr;
      prev.mean_wrr += ordered[i].mean_wrr;
    } else if (merged.empty() && ordered[i].count < min_bucket_count &&
               i + 1 < ordered.size()) {
      ordered[i + 1].count += ordered[i].count;
      ordered[i + 1].mean_crr += ordered[i].mean_crr;
      ordered[i + 1].mean_wrr += ordered[i].mean_wrr;
      ordered[i + 1].lo = ordered[i].lo;
    } else {
      merged.push_back(ordered[i]);
    }
  }
  for (LengthBucket& b : merged) {
    if (b.count) {
      b.mean_crr /= b.count;
      b.mean_wrr /= b.count;
    }
  }
  report.buckets = std::move(merged);
  return report;
}

}  // namespace pocr
