// src/copynet.cpp

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

#include "pocr/copynet.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <ostream>
#include <sstream>

#include "pocr/unicode.hpp"

namespace pocr {

OutputDistribution output_distribution(
    const Vector& gen_scores, const Vector& copy_scores,
    const std::vector<int64_t>& source_tokens, size_t vocab_size) {
  if (static_cast<size_t>(gen_scores.size()) != vocab_size + 0)
    throw Error("output_distribution: generate scores must cover the vocab");
  if (static_cast<size_t>(copy_scores.size()) != source_tokens.size())
    throw Error("output_distribution: one copy score per source position");

  // Shared normalizer over both score families, stabilized by max shift.
  double m = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < gen_scores.size(); ++i)
    m = std::max(m, gen_scores[i]);
  for (Eigen::Index i = 0; i < copy_scores.size(); ++i)
    m = std::max(m, copy_scores[i]);
  if (!std::isfinite(m)) m = 0;

  double z = 0;
  for (Eigen::Index i = 0; i < gen_scores.size(); ++i)
    z += std::exp(gen_scores[i] - m);
  for (Eigen::Index i = 0; i < copy_scores.size(); ++i)
    z += std::exp(copy_scores[i] - m);

  OutputDistribution dist;
  dist.entries.reserve(vocab_size + source_tokens.size());
  for (size_t v = 0; v < vocab_size; ++v) {
    MixtureEntry e;
    e.token = static_cast<int64_t>(v);
    e.gen_mass = std::exp(gen_scores[static_cast<Eigen::Index>(v)] - m) / z;
    e.copy_mass = 0;
    dist.entries.push_back(e);
  }
  auto entry_for = [&](int64_t token) -> MixtureEntry& {
    if (token >= 0 && static_cast<size_t>(token) < vocab_size)
      return dist.entries[static_cast<size_t>(token)];
    for (MixtureEntry& e : dist.entries)
      if (e.token == token) return e;
    MixtureEntry fresh;
    fresh.token = token;
    fresh.gen_mass = 0;  // source-only identity: no generate mass
    fresh.copy_mass = 0;
    dist.entries.push_back(fresh);
    return dist.entries.back();
  };
  for (size_t j = 0; j < source_tokens.size(); ++j) {
    entry_for(source_tokens[j]).copy_mass +=
        std::exp(copy_scores[static_cast<Eigen::Index>(j)] - m) / z;
  }
  for (MixtureEntry& e : dist.entries) e.prob = e.gen_mass + e.copy_mass;
  return dist;
}

CopyNet CopyNet::init(const BpeVocabulary& vocab, const Alphabet& alphabet,
                      const CopyNetConfig& config) {
  CopyNet net;
  net.cfg_ = config;
  net.vocab_ = vocab;
  net.alphabet_ = alphabet;
  net.vocab_fingerprint_ = fnv1a64(vocab.serialize());
  const int V = static_cast<int>(vocab.size());
  const int H = config.hidden;
  const int D = config.embed;
  net.E_ = Tensor("embedding", V, D);
  net.enc_ = LstmStack("enc", D, H, config.layers, config.residual);
  net.dec_ = LstmStack("dec", D, H, config.layers, config.residual);
  net.W_a_ = Tensor("attn.Wa", H, H);
  net.W_cat_ = Tensor("attn.Wcat", H, 2 * H);
  net.W_o_ = Tensor("out.Wo", D, H);
  net.W_c_ = Tensor("copy.Wc", H, H);

  std::mt19937_64 rng(config.seed);
  for (Tensor* p : net.parameters()) p->init_uniform(rng, config.init_range);
  return net;
}

std::vector<Tensor*> CopyNet::parameters() {
  std::vector<Tensor*> out{&E_};
  for (Tensor* p : enc_.params()) out.push_back(p);
  for (Tensor* p : dec_.params()) out.push_back(p);
  out.push_back(&W_a_);
  out.push_back(&W_cat_);
  out.push_back(&W_o_);
  out.push_back(&W_c_);
  return out;
}

std::vector<Vector> CopyNet::embed(const std::vector<TokenId>& ids) const {
  std::vector<Vector> out;
  out.reserve(ids.size());
  for (TokenId id : ids) out.push_back(E_.v.row(id).transpose());
  return out;
}

Vector CopyNet::score_generate(const Vector& decoder_state) const {
  if (decoder_state.size() != W_o_.cols())
    throw Error("score_generate: state width " +
                std::to_string(decoder_state.size()) + " vs projection " +
                std::to_string(W_o_.cols()));
  return E_.v * (W_o_.v * decoder_state);
}

Vector CopyNet::score_copy(const Vector& decoder_state,
                           const std::vector<Vector>& encoder_states) const {
  if (encoder_states.empty()) throw Error("score_copy: empty encoder sequence");
  Vector out(encoder_states.size());
  for (size_t j = 0; j < encoder_states.size(); ++j) {
    const Vector a = W_c_.v.transpose() * encoder_states[j];
    out[static_cast<Eigen::Index>(j)] =
        a.array().tanh().matrix().dot(decoder_state);
  }
  return out;
}

void CopyNet::encoder_forward(const std::vector<TokenId>& src,
                              LstmStack::ForwardResult& enc) const {
  enc = enc_.forward(embed(src));
}

double CopyNet::pair_loss(const std::vector<TokenId>& src,
                          const std::vector<TokenId>& tgt,
                          bool accumulate_grads, double grad_scale) {
  if (src.empty() || tgt.empty())
    throw Error("pair_loss: empty token sequence");
  const int V = static_cast<int>(vocab_.size());
  const int H = cfg_.hidden;
  const size_t N = src.size();
  const size_t T = tgt.size();

  LstmStack::ForwardResult enc;
  encoder_forward(src, enc);
  const std::vector<Vector>& Hs = enc.top;

  // Copy keys depend only on encoder positions.
  std::vector<Vector> copy_keys(N);
  if (cfg_.use_copy)
    for (size_t j = 0; j < N; ++j)
      copy_keys[j] = (W_c_.v.transpose() * Hs[j]).array().tanh().matrix();

  struct StepCache {
    LstmStack::StepTrace trace;
    Vector s;        // decoder top output
    AttentionResult attn;
    Vector cat;      // [context; s]
    Vector stilde;   // tanh(W_cat * cat)
    Vector u;        // W_o * stilde
    Vector scores;   // [psi_g; psi_c]
  };
  std::vector<StepCache> steps(T);

  LstmStack::State state = enc.final_state;
  double loss = 0;
  for (size_t t = 0; t < T; ++t) {
    const TokenId prev = t == 0 ? vocab_.bos_id() : tgt[t - 1];
    StepCache& sc = steps[t];
    const Vector x = E_.v.row(prev).transpose();
    sc.s = dec_.step(state, x, &sc.trace);
    sc.attn = luong_attention(sc.s, Hs, W_a_.v);
    sc.cat.resize(2 * H);
    sc.cat << sc.attn.context, sc.s;
    sc.stilde = (W_cat_.v * sc.cat).array().tanh().matrix();
    sc.u = W_o_.v * sc.stilde;
    const Vector psi_g = E_.v * sc.u;
    if (cfg_.use_copy) {
      sc.scores.resize(V + static_cast<Eigen::Index>(N));
      sc.scores.head(V) = psi_g;
      for (size_t j = 0; j < N; ++j)
        sc.scores[V + static_cast<Eigen::Index>(j)] =
            copy_keys[j].dot(sc.stilde);
    } else {
      sc.scores = psi_g;
    }

    // Target support: the generate entry plus every matching source copy.
    const double lse_all = log_sum_exp(sc.scores);
    double m_s = sc.scores[tgt[t]];
    if (cfg_.use_copy)
      for (size_t j = 0; j < N; ++j)
        if (src[j] == tgt[t])
          m_s = std::max(m_s, sc.scores[V + static_cast<Eigen::Index>(j)]);
    double sum_s = std::exp(sc.scores[tgt[t]] - m_s);
    if (cfg_.use_copy)
      for (size_t j = 0; j < N; ++j)
        if (src[j] == tgt[t])
          sum_s += std::exp(sc.scores[V + static_cast<Eigen::Index>(j)] - m_s);
    const double lse_tgt = m_s + std::log(sum_s);
    loss += lse_all - lse_tgt;
  }
  loss /= static_cast<double>(T);
  if (!accumulate_grads) return loss;

  // Backward. Per-position gradients that must outlive the step loop.
  std::vector<Vector> dH(N, Vector::Zero(H));
  std::vector<Vector> d_copy_keys;
  if (cfg_.use_copy) d_copy_keys.assign(N, Vector::Zero(H));
  std::vector<Vector> d_tops(T);

  for (size_t t = 0; t < T; ++t) {
    StepCache& sc = steps[t];
    const double scale = grad_scale / static_cast<double>(T);

    Vector dpsi = softmax(sc.scores);
    // Subtract the target-restricted softmax over the support set.
    {
      double m_s = sc.scores[tgt[t]];
      if (cfg_.use_copy)
        for (size_t j = 0; j < N; ++j)
          if (src[j] == tgt[t])
            m_s = std::max(m_s, sc.scores[V + static_cast<Eigen::Index>(j)]);
      double sum_s = std::exp(sc.scores[tgt[t]] - m_s);
      if (cfg_.use_copy)
        for (size_t j = 0; j < N; ++j)
          if (src[j] == tgt[t])
            sum_s +=
                std::exp(sc.scores[V + static_cast<Eigen::Index>(j)] - m_s);
      dpsi[tgt[t]] -= std::exp(sc.scores[tgt[t]] - m_s) / sum_s;
      if (cfg_.use_copy)
        for (size_t j = 0; j < N; ++j)
          if (src[j] == tgt[t]) {
            const Eigen::Index k = V + static_cast<Eigen::Index>(j);
            dpsi[k] -= std::exp(sc.scores[k] - m_s) / sum_s;
          }
    }
    dpsi *= scale;

    // Generate path: psi_g = E (W_o stilde).
    const Vector dpsi_g = dpsi.head(V);
    E_.g.noalias() += dpsi_g * sc.u.transpose();
    const Vector du = E_.v.transpose() * dpsi_g;
    W_o_.g.noalias() += du * sc.stilde.transpose();
    Vector dstilde = W_o_.v.transpose() * du;

    // Copy path: psi_c_j = tanh(W_c^T H_j) . stilde.
    if (cfg_.use_copy) {
      for (size_t j = 0; j < N; ++j) {
        const double dpc = dpsi[V + static_cast<Eigen::Index>(j)];
        if (dpc == 0) continue;
        dstilde += dpc * copy_keys[j];
        d_copy_keys[j] += dpc * sc.stilde;
      }
    }

    // stilde = tanh(W_cat [ctx; s]).
    const Vector dr =
        dstilde.cwiseProduct((1.0 - sc.stilde.array().square()).matrix());
    W_cat_.g.noalias() += dr * sc.cat.transpose();
    const Vector dcat = W_cat_.v.transpose() * dr;
    const Vector dctx = dcat.head(H);
    Vector ds = dcat.tail(H);

    ds += luong_attention_backward(sc.s, Hs, W_a_.v, sc.attn, dctx, Vector(),
                                   W_a_.g, dH);
    d_tops[t] = ds;
  }

  if (cfg_.use_copy) {
    for (size_t j = 0; j < N; ++j) {
      const Vector da = d_copy_keys[j].cwiseProduct(
          (1.0 - copy_keys[j].array().square()).matrix());
      W_c_.g.noalias() += Hs[j] * da.transpose();
      dH[j] += W_c_.v * da;
    }
  }

  // Decoder backward through time; input embedding rows pick up gradients.
  LstmStack::State d_state = dec_.zero_state_grad();
  for (size_t t = T; t-- > 0;) {
    const Vector dx = dec_.step_backward(steps[t].trace, d_tops[t], d_state);
    const TokenId prev = t == 0 ? vocab_.bos_id() : tgt[t - 1];
    E_.g.row(prev) += dx.transpose();
  }

  // The decoder started from the encoder's final state.
  LstmStack::State d_enc_state = std::move(d_state);
  for (size_t t = N; t-- > 0;) {
    const Vector dx = enc_.step_backward(enc.traces[t], dH[t], d_enc_state);
    E_.g.row(src[t]) += dx.transpose();
  }
  return loss;
}

namespace {

struct EncodedPair {
  std::vector<TokenId> src, tgt;
};

}  // namespace

TrainReport CopyNet::train_loop(
    const std::vector<std::pair<std::string, std::string>>& pairs,
    const std::vector<std::pair<std::string, std::string>>& dev_pairs,
    const CheckpointSink& sink, std::ostream* log) {
  if (pairs.empty()) throw DataError("train: no training pairs");
  TrainReport report;

  std::vector<EncodedPair> data;
  data.reserve(pairs.size());
  for (const auto& [ocr, gold] : pairs) {
    EncodedPair ep;
    ep.src = bpe_encode(GraphemeString(normalize(ocr), alphabet_), vocab_);
    ep.tgt = bpe_encode(GraphemeString(normalize(gold), alphabet_), vocab_);
    ep.tgt.push_back(vocab_.eos_id());
    const bool too_long = ep.src.size() > static_cast<size_t>(cfg_.max_len) ||
                          ep.tgt.size() > static_cast<size_t>(cfg_.max_len);
    if (ep.src.empty() || too_long) {
      ++report.pairs_skipped;
      if (log)
        *log << "warning: skipping pair (" << (too_long ? "too long" : "empty")
             << "): " << ocr.substr(0, 32) << "\n";
      continue;
    }
    data.push_back(std::move(ep));
  }
  if (data.empty()) throw DataError("train: every pair was skipped");
  report.pairs_used = data.size();

  AdamOptimizer adam(cfg_.learning_rate);
  const std::vector<Tensor*> params = parameters();
  std::vector<size_t> order(data.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 0; epoch < cfg_.epochs; ++epoch) {
    std::mt19937_64 rng(derive_seed(cfg_.seed, static_cast<uint64_t>(epoch)));
    std::shuffle(order.begin(), order.end(), rng);

    double epoch_loss = 0;
    size_t done = 0;
    while (done < order.size()) {
      const size_t batch =
          std::min<size_t>(cfg_.batch_size, order.size() - done);
      for (Tensor* p : params) p->zero_grad();
      for (size_t k = 0; k < batch; ++k) {
        const EncodedPair& ep = data[order[done + k]];
        epoch_loss +=
            pair_loss(ep.src, ep.tgt, true, 1.0 / static_cast<double>(batch));
      }
      clip_gradients(params, cfg_.grad_clip);
      adam.step(params);
      done += batch;
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.mean_token_nll = epoch_loss / static_cast<double>(data.size());
    const bool last = epoch + 1 == cfg_.epochs;
    if (!dev_pairs.empty() && cfg_.dev_eval_every > 0 &&
        ((epoch + 1) % cfg_.dev_eval_every == 0 || last)) {
      double crr_sum = 0;
      for (const auto& [ocr, gold] : dev_pairs) {
        const std::string pred = correct(ocr);
        crr_sum += crr(GraphemeString(normalize(pred), alphabet_),
                       GraphemeString(normalize(gold), alphabet_));
      }
      stats.dev_crr = crr_sum / static_cast<double>(dev_pairs.size());
    }
    if (log) {
      *log << "epoch " << epoch << " nll " << stats.mean_token_nll;
      if (stats.dev_crr) *log << " dev_crr " << *stats.dev_crr;
      *log << "\n";
    }
    report.epochs.push_back(stats);
    if (sink) sink(epoch, *this);
  }
  return report;
}

DecodeResult CopyNet::decode(const std::string& line, int beam_width) const {
  DecodeResult result;
  const int beam = beam_width > 0 ? beam_width : std::max(1, cfg_.beam_width);
  const GraphemeString gs(normalize(line), alphabet_);
  const std::vector<TokenId> src = bpe_encode(gs, vocab_);
  if (src.empty()) return result;

  LstmStack::ForwardResult enc;
  encoder_forward(src, enc);
  const std::vector<Vector>& Hs = enc.top;
  const int V = static_cast<int>(vocab_.size());

  std::vector<Vector> copy_keys;
  if (cfg_.use_copy) {
    copy_keys.resize(src.size());
    for (size_t j = 0; j < src.size(); ++j)
      copy_keys[j] = (W_c_.v.transpose() * Hs[j]).array().tanh().matrix();
  }

  struct Hyp {
    LstmStack::State state;
    TokenId prev;
    double logp = 0;
    bool done = false;
    std::vector<TokenId> tokens;
    std::vector<DecodeStep> steps;
  };
  std::vector<Hyp> hyps(1);
  hyps[0].state = enc.final_state;
  hyps[0].prev = vocab_.bos_id();

  const size_t max_steps = 2 * src.size() + 10;
  for (size_t step = 0; step < max_steps; ++step) {
    bool all_done = true;
    std::vector<Hyp> next;
    for (Hyp& hyp : hyps) {
      if (hyp.done) {
        next.push_back(std::move(hyp));
        continue;
      }
      all_done = false;
      const Vector x = E_.v.row(hyp.prev).transpose();
      LstmStack::State state = hyp.state;
      const Vector s = dec_.step(state, x, nullptr);
      const AttentionResult attn = luong_attention(s, Hs, W_a_.v);
      Vector cat(2 * cfg_.hidden);
      cat << attn.context, s;
      const Vector stilde = (W_cat_.v * cat).array().tanh().matrix();
      const Vector psi_g = score_generate(stilde);
      Vector psi_c;
      std::vector<int64_t> src64(src.begin(), src.end());
      if (cfg_.use_copy) {
        psi_c.resize(src.size());
        for (size_t j = 0; j < src.size(); ++j)
          psi_c[static_cast<Eigen::Index>(j)] = copy_keys[j].dot(stilde);
      } else {
        src64.clear();
      }
      const OutputDistribution dist =
          output_distribution(psi_g, psi_c, src64, V);

      // Rank candidate tokens; BOS and PAD are never emitted.
      std::vector<const MixtureEntry*> ranked;
      for (const MixtureEntry& e : dist.entries) {
        if (e.token == vocab_.bos_id() || e.token == vocab_.pad_id()) continue;
        if (e.token >= V) continue;  // extended ids are not decodable
        ranked.push_back(&e);
      }
      std::partial_sort(ranked.begin(),
                        ranked.begin() + std::min<size_t>(beam, ranked.size()),
                        ranked.end(),
                        [](const MixtureEntry* a, const MixtureEntry* b) {
                          if (a->prob != b->prob) return a->prob > b->prob;
                          return a->token < b->token;
                        });
      for (size_t k = 0; k < std::min<size_t>(beam, ranked.size()); ++k) {
        const MixtureEntry& e = *ranked[k];
        Hyp out = hyp;
        out.state = state;
        out.logp += std::log(std::max(e.prob, 1e-300));
        if (e.token == vocab_.eos_id()) {
          out.done = true;
        } else {
          out.prev = static_cast<TokenId>(e.token);
          out.tokens.push_back(out.prev);
          out.steps.push_back(DecodeStep{out.prev, e.prob, e.gen_mass,
                                         e.copy_mass});
        }
        next.push_back(std::move(out));
      }
    }
    std::sort(next.begin(), next.end(), [](const Hyp& a, const Hyp& b) {
      if (a.logp != b.logp) return a.logp > b.logp;
      return a.tokens.size() < b.tokens.size();
    });
    if (next.size() > static_cast<size_t>(beam)) next.resize(beam);
    hyps = std::move(next);
    if (all_done) break;
  }

  const Hyp& best = hyps.front();
  result.tokens = best.tokens;
  result.steps = best.steps;
  result.text = bpe_decode(best.tokens, vocab_);
  return result;
}

double CopyNet::self_log_prob(const std::string& text) const {
  const GraphemeString gs(normalize(text), alphabet_);
  std::vector<TokenId> src = bpe_encode(gs, vocab_);
  if (src.empty()) return 0;
  std::vector<TokenId> tgt = src;
  tgt.push_back(vocab_.eos_id());
  // pair_loss is const in effect when gradients are off.
  const double mean_nll =
      const_cast<CopyNet*>(this)->pair_loss(src, tgt, false);
  return -mean_nll * static_cast<double>(tgt.size());
}

CopyGenAnalysis CopyNet::copy_generate_analysis(
    const std::vector<std::string>& inputs) const {
  CopyGenAnalysis a;
  auto index_of = [&](const std::string& label) {
    for (size_t i = 0; i < a.labels.size(); ++i)
      if (a.labels[i] == label) return i;
    a.labels.push_back(label);
    for (auto& row : a.mean_gen) row.push_back(0);
    for (auto& row : a.mean_copy) row.push_back(0);
    for (auto& row : a.counts) row.push_back(0);
    a.mean_gen.emplace_back(a.labels.size(), 0.0);
    a.mean_copy.emplace_back(a.labels.size(), 0.0);
    a.counts.emplace_back(a.labels.size(), 0);
    return a.labels.size() - 1;
  };

  for (const std::string& line : inputs) {
    const DecodeResult dec = decode(line, 1);
    if (dec.tokens.empty()) continue;

    // Byte span of each emitted token in the decoded text.
    std::vector<std::pair<size_t, size_t>> spans;
    size_t off = 0;
    for (size_t k = 0; k < dec.tokens.size(); ++k) {
      std::string piece;
      if (dec.tokens[k] == vocab_.unk_id())
        piece = "\xEF\xBF\xBD";
      else if (!vocab_.is_special(dec.tokens[k]))
        piece = vocab_.token(dec.tokens[k]).surface;
      spans.emplace_back(off, off + piece.size());
      off += piece.size();
    }

    const GraphemeString in_gs(normalize(line), alphabet_);
    const GraphemeString out_gs(dec.text, alphabet_);
    // Token owning each predicted grapheme (by first byte).
    std::vector<size_t> owner(out_gs.size(), 0);
    for (size_t gi = 0; gi < out_gs.size(); ++gi) {
      const size_t b = out_gs.segments()[gi].offset;
      for (size_t k = 0; k < spans.size(); ++k) {
        if (b >= spans[k].first && b < spans[k].second) {
          owner[gi] = k;
          break;
        }
      }
    }

    const AlignmentTrace trace = align(in_gs, out_gs);
    size_t oi = 0;
    for (const AlignedPair& p : trace.ops) {
      if (p.op == EditOp::kIns || p.op == EditOp::kDel) {
        if (p.op == EditOp::kIns) ++oi;
        continue;
      }
      const DecodeStep& st = dec.steps[owner[oi]];
      const size_t r = index_of(p.src);
      const size_t c = index_of(p.tgt);
      a.mean_gen[r][c] += st.gen_mass;
      a.mean_copy[r][c] += st.copy_mass;
      a.counts[r][c] += 1;
      ++oi;
    }
  }

  for (size_t r = 0; r < a.labels.size(); ++r) {
    for (size_t c = 0; c < a.labels.size(); ++c) {
      if (a.counts[r][c]) {
        a.mean_gen[r][c] /= a.counts[r][c];
        a.mean_copy[r][c] /= a.counts[r][c];
      }
    }
  }
  return a;
}

std::string CopyGenAnalysis::to_csv(bool copy_mode) const {
  std::ostringstream out;
  out.precision(8);
  for (const std::string& l : labels) out << ',' << l;
  out << '\n';
  const auto& m = copy_mode ? mean_copy : mean_gen;
  for (size_t r = 0; r < labels.size(); ++r) {
    out << labels[r];
    for (size_t c = 0; c < labels.size(); ++c) out << ',' << m[r][c];
    out << '\n';
  }
  return out.str();
}

namespace {

void write_u32(std::ostream& out, uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = (v >> (8 * i)) & 0xFF;
  out.write(reinterpret_cast<const char*>(b), 4);
}

void write_u64(std::ostream& out, uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = (v >> (8 * i)) & 0xFF;
  out.write(reinterpret_cast<const char*>(b), 8);
}

void write_f64(std::ostream& out, double d) {
  uint64_t v;
  std::memcpy(&v, &d, 8);
  write_u64(out, v);
}

void write_str(std::ostream& out, const std::string& s) {
  write_u32(out, static_cast<uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

uint32_t read_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw DataError("checkpoint: truncated");
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(b[i]) << (8 * i);
  return v;
}

uint64_t read_u64(std::istream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  if (!in) throw DataError("checkpoint: truncated");
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[i]) << (8 * i);
  return v;
}

double read_f64(std::istream& in) {
  const uint64_t v = read_u64(in);
  double d;
  std::memcpy(&d, &v, 8);
  return d;
}

std::string read_str(std::istream& in) {
  const uint32_t n = read_u32(in);
  std::string s(n, '\0');
  in.read(s.data(), n);
  if (!in) throw DataError("checkpoint: truncated string");
  return s;
}

void write_tensor(std::ostream& out, const Tensor& t) {
  write_str(out, t.name);
  write_u32(out, 2);
  write_u64(out, static_cast<uint64_t>(t.rows()));
  write_u64(out, static_cast<uint64_t>(t.cols()));
  for (Eigen::Index r = 0; r < t.rows(); ++r)
    for (Eigen::Index c = 0; c < t.cols(); ++c) write_f64(out, t.v(r, c));
}

}  // namespace

void CopyNet::save(const std::filesystem::path& file) const {
  for (const Tensor* p : const_cast<CopyNet*>(this)->parameters())
    p->check_finite("save");
  std::ofstream out(file, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint: " + file.string());
  out.write("POCF", 4);
  write_u32(out, 1);  // format version
  write_u64(out, vocab_fingerprint_);

  std::vector<std::pair<std::string, std::string>> kv;
  kv.emplace_back("hidden", std::to_string(cfg_.hidden));
  kv.emplace_back("embed", std::to_string(cfg_.embed));
  kv.emplace_back("layers", std::to_string(cfg_.layers));
  kv.emplace_back("residual", cfg_.residual ? "1" : "0");
  kv.emplace_back("use_copy", cfg_.use_copy ? "1" : "0");
  kv.emplace_back("max_len", std::to_string(cfg_.max_len));
  kv.emplace_back("beam_width", std::to_string(cfg_.beam_width));
  kv.emplace_back("alphabet_name", alphabet_.name());
  std::string letters;
  for (const std::string& g : alphabet_.graphemes()) {
    letters += g;
    letters += '\n';
  }
  kv.emplace_back("alphabet", letters);
  write_u32(out, static_cast<uint32_t>(kv.size()));
  for (const auto& [k, v] : kv) {
    write_str(out, k);
    write_str(out, v);
  }

  std::vector<const Tensor*> tensors;
  for (Tensor* p : const_cast<CopyNet*>(this)->parameters())
    tensors.push_back(p);
  write_u32(out, static_cast<uint32_t>(tensors.size()));
  for (const Tensor* t : tensors) write_tensor(out, *t);
}

CopyNet CopyNet::load(const std::filesystem::path& file,
                      const BpeVocabulary& vocab) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint: " + file.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "POCF", 4) != 0)
    throw DataError("checkpoint: bad magic (expected POCF)");
  const uint32_t version = read_u32(in);
  if (version != 1)
    throw DataError("checkpoint: unsupported version " +
                    std::to_string(version));
  const uint64_t fingerprint = read_u64(in);
  const uint64_t expect = fnv1a64(vocab.serialize());
  if (fingerprint != expect)
    throw DataError("checkpoint: vocabulary fingerprint mismatch");

  std::unordered_map<std::string, std::string> kv;
  const uint32_t nkv = read_u32(in);
  for (uint32_t i = 0; i < nkv; ++i) {
    std::string k = read_str(in);
    kv[k] = read_str(in);
  }
  CopyNetConfig cfg;
  cfg.hidden = std::stoi(kv.at("hidden"));
  cfg.embed = std::stoi(kv.at("embed"));
  cfg.layers = std::stoi(kv.at("layers"));
  cfg.residual = kv.at("residual") == "1";
  cfg.use_copy = kv.at("use_copy") == "1";
  cfg.max_len = std::stoi(kv.at("max_len"));
  cfg.beam_width = std::stoi(kv.at("beam_width"));

  std::vector<std::string> graphemes;
  {
    std::istringstream ls(kv.at("alphabet"));
    std::string g;
    while (std::getline(ls, g))
      if (!g.empty()) graphemes.push_back(g);
  }
  Alphabet alphabet(kv.count("alphabet_name") ? kv.at("alphabet_name")
                                              : "checkpoint",
                    std::move(graphemes));

  CopyNet net = CopyNet::init(vocab, alphabet, cfg);
  const uint32_t nt = read_u32(in);
  std::unordered_map<std::string, Tensor*> by_name;
  for (Tensor* p : net.parameters()) by_name[p->name] = p;
  if (nt != by_name.size())
    throw DataError("checkpoint: tensor count mismatch");
  for (uint32_t i = 0; i < nt; ++i) {
    const std::string name = read_str(in);
    auto it = by_name.find(name);
    if (it == by_name.end())
      throw DataError("checkpoint: unknown tensor '" + name + "'");
    Tensor& t = *it->second;
    const uint32_t ndim = read_u32(in);
    if (ndim != 2) throw DataError("checkpoint: expected rank-2 tensor");
    const uint64_t rows = read_u64(in);
    const uint64_t cols = read_u64(in);
    if (rows != static_cast<uint64_t>(t.rows()) ||
        cols != static_cast<uint64_t>(t.cols()))
      throw DataError("checkpoint: shape mismatch for '" + name + "': " +
                      std::to_string(rows) + "x" + std::to_string(cols) +
                      " vs " + std::to_string(t.rows()) + "x" +
                      std::to_string(t.cols()));
    for (uint64_t r = 0; r < rows; ++r)
      for (uint64_t c = 0; c < cols; ++c)
        t.v(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
            read_f64(in);
    t.check_finite("load");
  }
  return net;
}

}  // namespace pocr
