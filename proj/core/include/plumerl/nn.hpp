#pragma once

#include "plumerl/tensor.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace plumerl {

class Rng;

enum class Activation : std::uint8_t { ReLU, Identity };

struct DenseLayer {
  Tensor2 w; // in×out
  Tensor2 b; // 1×out
  Activation act = Activation::Identity;

  int in_dim() const { return w.rows; }
  int out_dim() const { return w.cols; }
};

/// out = act(input·w + b); input is B×in.
Tensor2 dense_forward(const DenseLayer& layer, const Tensor2& input);

/// Single-layer LSTM parameters with fused gate blocks. Gate column order
/// is [input | forget | cell-candidate | output], each hidden wide.
struct LstmParams {
  Tensor2 w_x; // in×4H
  Tensor2 w_h; // H×4H
  Tensor2 b;   // 1×4H

  int input_dim() const { return w_x.rows; }
  int hidden_dim() const { return w_h.rows; }
};

struct LstmState {
  Tensor2 h; // B×H
  Tensor2 c; // B×H
};
LstmState lstm_zero_state(int batch, int hidden);

/// One gate evaluation: sigmoid input/forget/output gates, tanh candidate,
/// c' = f∘c + i∘g, h' = o∘tanh(c').
LstmState lstm_step(const LstmParams& params, const Tensor2& x, const LstmState& state);

/// Network topology: observation and previous-action embeddings feed a
/// concatenated LSTM whose hidden state drives the linear Q head.
struct NetworkConfig {
  int obs_dim = 8;     // 4N
  int act_dim = 6;     // one-hot previous action
  int obs_embed = 64;  // E_o
  int act_embed = 64;  // E_a
  int hidden = 64;     // LSTM width
  int outputs = 6;     // Q-values, one per action

  friend bool operator==(const NetworkConfig&, const NetworkConfig&) = default;
};

struct NetworkParams {
  NetworkConfig config;
  DenseLayer obs_embed; // ReLU
  DenseLayer act_embed; // ReLU
  LstmParams lstm;
  DenseLayer head; // identity; Q-values are unbounded

  /// Stable name/tensor pairs covering every parameter, in a fixed order.
  std::vector<std::pair<std::string, Tensor2*>> param_refs();
  std::vector<std::pair<std::string, const Tensor2*>> param_refs() const;
  std::size_t param_count() const;
};

/// Gradients share the parameter structure (and param_refs order).
using Gradients = NetworkParams;

/// Weights uniform in ±1/sqrt(fan_in), biases zero.
NetworkParams init_network(const NetworkConfig& config, Rng& rng);
NetworkParams zeros_like(const NetworkParams& net);

/// Everything the backward pass needs from one unrolled step.
struct StepCache {
  Tensor2 obs_in, act_in; // inputs
  Tensor2 eo, ea;         // post-ReLU embeddings
  Tensor2 x;              // concat [eo|ea]
  Tensor2 gi, gf, gg, go; // post-activation gates
  Tensor2 c, tanh_c, h;   // new cell/hidden
  Tensor2 q;              // head output
};

struct ForwardCache {
  LstmState s0;
  std::vector<StepCache> steps;
};

/// Unrolls the network over a sequence. obs_steps[t] is B×obs_dim and
/// act_steps[t] is B×act_dim (one-hot rows, or all-zero for "no previous
/// action"). Returns the per-step Q tensors; optionally exposes the final
/// LSTM state and the full activation cache.
std::vector<Tensor2> q_forward(const NetworkParams& net, std::span<const Tensor2> obs_steps,
                               std::span<const Tensor2> act_steps, const LstmState& s0,
                               LstmState* final_state = nullptr, ForwardCache* cache = nullptr);

/// Per-(sequence, step) supervision for the masked MSE loss.
struct TargetBatch {
  int batch = 0;
  int seq_len = 0;
  std::vector<std::int8_t> action; // taken action index, batch*seq_len
  std::vector<double> y;           // bootstrap targets
  std::vector<std::uint8_t> mask;  // 1 = step contributes to the loss

  std::size_t flat(int b, int t) const {
    return static_cast<std::size_t>(b) * seq_len + t;
  }
};

/// Exact reverse-mode gradients of the masked MSE over taken-action
/// Q-values, backpropagated through the full unroll. Returns the loss.
/// Masked steps contribute exactly zero. Throws when every step is masked.
double backward(const NetworkParams& net, const ForwardCache& cache, const TargetBatch& targets,
                Gradients& grads);

/// Mean squared error over mask-valid entries. Throws when all are masked.
double masked_mse(std::span<const double> q_taken, std::span<const double> y,
                  std::span<const std::uint8_t> mask);

struct AdamState {
  double alpha = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long step = 0;
  NetworkParams m;
  NetworkParams v;
};

AdamState make_adam(const NetworkParams& net, double alpha);
/// Bias-corrected Adam step, in place.
void adam_update(NetworkParams& params, const Gradients& grads, AdamState& state);

/// Scales gradients so their global L2 norm is at most max_norm (no-op when
/// max_norm <= 0). Returns the pre-clip norm.
double clip_gradients(Gradients& grads, double max_norm);

/// theta_target <- tau*theta_online + (1-tau)*theta_target, elementwise.
void soft_update(const NetworkParams& online, NetworkParams& target, double tau);

} // namespace plumerl
