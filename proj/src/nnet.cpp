// src/nnet.cpp

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

#include "pocr/nnet.hpp"

#include <cmath>
#include <functional>

namespace pocr {

void AdamOptimizer::step(const std::vector<Tensor*>& params) {
  if (m_.empty()) {
    for (const Tensor* p : params) {
      m_.push_back(Matrix::Zero(p->rows(), p->cols()));
      v_.push_back(Matrix::Zero(p->rows(), p->cols()));
    }
  }
  if (m_.size() != params.size())
    throw Error("AdamOptimizer: parameter list changed between steps");
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (size_t i = 0; i < params.size(); ++i) {
    Tensor& p = *params[i];
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * p.g;
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * p.g.cwiseProduct(p.g);
    const Matrix mhat = m_[i] / bc1;
    const Matrix vhat = v_[i] / bc2;
    p.v.array() -= lr_ * mhat.array() / (vhat.array().sqrt() + eps_);
  }
}

double clip_gradients(const std::vector<Tensor*>& params, double max_norm) {
  double sq = 0;
  for (const Tensor* p : params) sq += p->g.squaredNorm();
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0) {
    const double scale = max_norm / norm;
    for (Tensor* p : params) p->g *= scale;
  }
  return norm;
}

GradCheckReport grad_check(const std::function<double()>& loss_fn,
                           const std::vector<Tensor*>& params, double epsilon,
                           double tolerance, size_t max_coords_per_tensor,
                           uint64_t seed, double floor) {
  GradCheckReport report;
  std::mt19937_64 rng(seed);
  {
    const double probe = loss_fn();
    if (!std::isfinite(probe)) throw Error("grad_check: non-finite loss");
  }
  for (Tensor* p : params) {
    std::vector<Eigen::Index> coords;
    if (max_coords_per_tensor == 0 ||
        static_cast<size_t>(p->size()) <= max_coords_per_tensor) {
      coords.resize(p->size());
      for (Eigen::Index i = 0; i < p->size(); ++i) coords[i] = i;
    } else {
      std::uniform_int_distribution<Eigen::Index> pick(0, p->size() - 1);
      for (size_t k = 0; k < max_coords_per_tensor; ++k)
        coords.push_back(pick(rng));
    }
    for (Eigen::Index idx : coords) {
      double& x = p->v.data()[idx];
      const double saved = x;
      x = saved + epsilon;
      const double up = loss_fn();
      x = saved - epsilon;
      const double down = loss_fn();
      x = saved;
      const double numeric = (up - down) / (2 * epsilon);
      const double analytic = p->g.data()[idx];
      const double denom =
          std::max({std::abs(analytic), std::abs(numeric), floor});
      const double rel = std::abs(analytic - numeric) / denom;
      ++report.coords_checked;
      if (rel > report.max_rel_error) {
        report.max_rel_error = rel;
        report.worst_tensor = p->name;
        report.worst_index = idx;
        report.worst_analytic = analytic;
        report.worst_numeric = numeric;
      }
    }
  }
  report.passed = report.max_rel_error < tolerance;
  return report;
}

LstmStack::LstmStack(const std::string& name, int input_dim, int hidden,
                     int layers, bool residual)
    : input_dim_(input_dim), hidden_(hidden), residual_(residual) {
  if (layers < 1) throw Error("LstmStack: needs at least one layer");
  for (int l = 0; l < layers; ++l) {
    const int in = l == 0 ? input_dim : hidden;
    const std::string p = name + ".l" + std::to_string(l);
    W_.emplace_back(p + ".W", 4 * hidden, in);
    U_.emplace_back(p + ".U", 4 * hidden, hidden);
    b_.emplace_back(p + ".b", 4 * hidden, 1);
  }
}

std::vector<Tensor*> LstmStack::params() {
  std::vector<Tensor*> out;
  for (size_t l = 0; l < W_.size(); ++l) {
    out.push_back(&W_[l]);
    out.push_back(&U_[l]);
    out.push_back(&b_[l]);
  }
  return out;
}

std::vector<const Tensor*> LstmStack::params() const {
  std::vector<const Tensor*> out;
  for (size_t l = 0; l < W_.size(); ++l) {
    out.push_back(&W_[l]);
    out.push_back(&U_[l]);
    out.push_back(&b_[l]);
  }
  return out;
}

LstmStack::State LstmStack::initial_state() const {
  State s;
  s.h.assign(layers(), Vector::Zero(hidden_));
  s.c.assign(layers(), Vector::Zero(hidden_));
  return s;
}

LstmStack::State LstmStack::zero_state_grad() const { return initial_state(); }

namespace {
inline Vector sigmoid(const Vector& x) {
  return 1.0 / (1.0 + (-x.array()).exp());
}
}  // namespace

Vector LstmStack::step(State& state, const Vector& input,
                       StepTrace* trace) const {
  if (input.size() != input_dim_)
    throw Error("LstmStack: input width " + std::to_string(input.size()) +
                " does not match layer-0 width " + std::to_string(input_dim_));
  const int L = layers();
  if (trace) {
    trace->in.resize(L);
    trace->h_prev.resize(L);
    trace->c_prev.resize(L);
    trace->gi.resize(L);
    trace->gf.resize(L);
    trace->gg.resize(L);
    trace->go.resize(L);
    trace->c.resize(L);
    trace->h.resize(L);
  }
  Vector x = input;
  for (int l = 0; l < L; ++l) {
    const Vector z = W_[l].v * x + U_[l].v * state.h[l] + b_[l].v;
    const int H = hidden_;
    const Vector gi = sigmoid(z.segment(0, H));
    const Vector gf = sigmoid(z.segment(H, H));
    const Vector gg = z.segment(2 * H, H).array().tanh();
    const Vector go = sigmoid(z.segment(3 * H, H));
    const Vector c = gf.cwiseProduct(state.c[l]) + gi.cwiseProduct(gg);
    const Vector h = go.cwiseProduct(c.array().tanh().matrix());
    if (trace) {
      trace->in[l] = x;
      trace->h_prev[l] = state.h[l];
      trace->c_prev[l] = state.c[l];
      trace->gi[l] = gi;
      trace->gf[l] = gf;
      trace->gg[l] = gg;
      trace->go[l] = go;
      trace->c[l] = c;
      trace->h[l] = h;
    }
    state.h[l] = h;
    state.c[l] = c;
    // Residual connection around every stacked layer above the first.
    x = (residual_ && l > 0) ? Vector(h + x) : h;
  }
  return x;
}

Vector LstmStack::step_backward(const StepTrace& trace, const Vector& d_top,
                                State& d_state) {
  const int L = layers();
  const int H = hidden_;
  Vector d_out = d_top;  // gradient on the post-residual output of layer l
  Vector d_in_below;     // gradient to pass to the layer below
  for (int l = L - 1; l >= 0; --l) {
    // d_out applies to h[l] (plus the residual passthrough to the input).
    Vector dh = d_out + d_state.h[l];
    Vector dc = d_state.c[l];

    const Vector tanh_c = trace.c[l].array().tanh();
    const Vector dgo = dh.cwiseProduct(tanh_c);
    dc += dh.cwiseProduct(trace.go[l])
              .cwiseProduct((1.0 - tanh_c.array().square()).matrix());

    const Vector dgf = dc.cwiseProduct(trace.c_prev[l]);
    const Vector dgi = dc.cwiseProduct(trace.gg[l]);
    const Vector dgg = dc.cwiseProduct(trace.gi[l]);
    const Vector dc_prev = dc.cwiseProduct(trace.gf[l]);

    Vector dz(4 * H);
    dz.segment(0, H) =
        dgi.cwiseProduct(trace.gi[l])
            .cwiseProduct((1.0 - trace.gi[l].array()).matrix());
    dz.segment(H, H) =
        dgf.cwiseProduct(trace.gf[l])
            .cwiseProduct((1.0 - trace.gf[l].array()).matrix());
    dz.segment(2 * H, H) =
        dgg.cwiseProduct((1.0 - trace.gg[l].array().square()).matrix());
    dz.segment(3 * H, H) =
        dgo.cwiseProduct(trace.go[l])
            .cwiseProduct((1.0 - trace.go[l].array()).matrix());

    W_[l].g.noalias() += dz * trace.in[l].transpose();
    U_[l].g.noalias() += dz * trace.h_prev[l].transpose();
    b_[l].g += dz;

    Vector dx = W_[l].v.transpose() * dz;
    if (residual_ && l > 0) dx += d_out;  // passthrough branch

    d_state.h[l] = U_[l].v.transpose() * dz;
    d_state.c[l] = dc_prev;

    d_out = dx;
  }
  d_in_below = d_out;
  return d_in_below;
}

LstmStack::ForwardResult LstmStack::forward(
    const std::vector<Vector>& inputs) const {
  ForwardResult out;
  out.layer_h.assign(layers(), {});
  out.final_state = initial_state();
  out.traces.resize(inputs.size());
  for (size_t t = 0; t < inputs.size(); ++t) {
    out.top.push_back(step(out.final_state, inputs[t], &out.traces[t]));
    for (int l = 0; l < layers(); ++l)
      out.layer_h[l].push_back(out.traces[t].h[l]);
  }
  return out;
}

Vector softmax(const Vector& scores) {
  const double m = scores.maxCoeff();
  Vector e = (scores.array() - m).exp();
  return e / e.sum();
}

double log_sum_exp(const Vector& scores) {
  const double m = scores.maxCoeff();
  return m + std::log((scores.array() - m).exp().sum());
}

AttentionResult luong_attention(const Vector& decoder_state,
                                const std::vector<Vector>& encoder_states,
                                const Matrix& W_a) {
  if (encoder_states.empty())
    throw Error("luong_attention: empty encoder sequence");
  if (W_a.cols() != encoder_states[0].size() ||
      W_a.rows() != decoder_state.size())
    throw Error("luong_attention: W_a shape mismatch");
  const Vector q = W_a.transpose() * decoder_state;
  Vector scores(encoder_states.size());
  for (size_t j = 0; j < encoder_states.size(); ++j)
    scores[j] = q.dot(encoder_states[j]);
  AttentionResult r;
  r.weights = softmax(scores);
  r.context = Vector::Zero(encoder_states[0].size());
  for (size_t j = 0; j < encoder_states.size(); ++j)
    r.context += r.weights[j] * encoder_states[j];
  return r;
}

Vector luong_attention_backward(const Vector& decoder_state,
                                const std::vector<Vector>& encoder_states,
                                const Matrix& W_a,
                                const AttentionResult& cached,
                                const Vector& d_context,
                                const Vector& d_weights, Matrix& dW_a,
                                std::vector<Vector>& d_encoder_states) {
  const size_t n = encoder_states.size();
  Vector d_alpha = d_weights.size() ? d_weights : Vector::Zero(n);
  for (size_t j = 0; j < n; ++j) {
    d_alpha[j] += d_context.dot(encoder_states[j]);
    d_encoder_states[j] += cached.weights[j] * d_context;
  }
  // Softmax backward.
  const double dot = cached.weights.dot(d_alpha);
  Vector d_scores(n);
  for (size_t j = 0; j < n; ++j)
    d_scores[j] = cached.weights[j] * (d_alpha[j] - dot);
  // scores_j = (W_a^T s) . h_j
  Vector d_q = Vector::Zero(W_a.cols());
  const Vector q = W_a.transpose() * decoder_state;
  for (size_t j = 0; j < n; ++j) {
    d_q += d_scores[j] * encoder_states[j];
    d_encoder_states[j] += d_scores[j] * q;
  }
  dW_a.noalias() += decoder_state * d_q.transpose();
  return W_a * d_q;
}

}  // namespace pocr
