// include/pocr/nnet.hpp

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

#ifndef POCR_NNET_HPP_
#define POCR_NNET_HPP_

#include <vector>

#include "pocr/tensor.hpp"

namespace pocr {

// Stacked unidirectional LSTM with residual connections between stacked
// layers (the first layer maps the input width up to the hidden width and
// carries no residual). Gate rows are ordered [input; forget; cell; output].
class LstmStack {
 public:
  LstmStack() = default;
  LstmStack(const std::string& name, int input_dim, int hidden, int layers,
            bool residual);

  int input_dim() const { return input_dim_; }
  int hidden() const { return hidden_; }
  int layers() const { return static_cast<int>(W_.size()); }
  bool residual() const { return residual_; }

  std::vector<Tensor*> params();
  std::vector<const Tensor*> params() const;
  Tensor& weight_input(int layer) { return W_[layer]; }
  Tensor& weight_recurrent(int layer) { return U_[layer]; }
  Tensor& bias(int layer) { return b_[layer]; }

  struct State {
    std::vector<Vector> h, c;  // one per layer
  };
  State initial_state() const;

  // Everything the backward pass needs for one step.
  struct StepTrace {
    std::vector<Vector> in;      // layer inputs (post-residual of the layer below)
    std::vector<Vector> h_prev, c_prev;
    std::vector<Vector> gi, gf, gg, go;  // activated gates
    std::vector<Vector> c, h;
  };

  // One time step; mutates `state`, returns the post-residual top output.
  Vector step(State& state, const Vector& input, StepTrace* trace) const;

  // Gradient of one step. `d_top` is the loss gradient on the step output;
  // `d_state` carries gradients on the post-step (h, c) and is rewritten in
  // place with gradients on the pre-step state. Returns d_input.
  // Parameter gradients accumulate into the stack tensors.
  Vector step_backward(const StepTrace& trace, const Vector& d_top,
                       State& d_state);

  State zero_state_grad() const;

  struct ForwardResult {
    std::vector<std::vector<Vector>> layer_h;  // [layer][t], pre-residual
    std::vector<Vector> top;                   // post-residual top outputs
    State final_state;
    std::vector<StepTrace> traces;
  };
  ForwardResult forward(const std::vector<Vector>& inputs) const;

 private:
  int input_dim_ = 0, hidden_ = 0;
  bool residual_ = true;
  std::vector<Tensor> W_, U_, b_;
};

struct AttentionResult {
  Vector context;
  Vector weights;  // softmax over encoder positions; sums to 1
};

// Luong general-form attention: score_j = s^T W_a h_j.
AttentionResult luong_attention(const Vector& decoder_state,
                                const std::vector<Vector>& encoder_states,
                                const Matrix& W_a);

// Backward for luong_attention. d_context is the incoming gradient;
// accumulates into dW_a and d_encoder_states, returns d_decoder_state.
Vector luong_attention_backward(const Vector& decoder_state,
                                const std::vector<Vector>& encoder_states,
                                const Matrix& W_a,
                                const AttentionResult& cached,
                                const Vector& d_context,
                                const Vector& d_weights, Matrix& dW_a,
                                std::vector<Vector>& d_encoder_states);

// Numerically stable softmax and log-sum-exp.
Vector softmax(const Vector& scores);
double log_sum_exp(const Vector& scores);

}  // namespace pocr

#endif  // POCR_NNET_HPP_
