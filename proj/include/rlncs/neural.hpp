#pragma once

#include "rlncs/core.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <concepts>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace rlncs {

struct DenseParams {
  Matrix weight;  // out x in
  Vector bias;    // out
};

/// Q-network: N -> h1 (relu) -> h2 (relu) -> 2, output q_max * sigmoid.
struct QNetParams {
  std::array<DenseParams, 3> layers;
  double q_max = 1.0;
};

/// One LSTM layer. Gate blocks are stacked in rows as [input, forget, output,
/// candidate], each `hidden` rows tall.
struct LstmLayerParams {
  Matrix w_in;   // 4H x in
  Matrix w_rec;  // 4H x H
  Vector bias;   // 4H
};

/// Stacked LSTM with a sigmoid read-out of the last hidden state of the top
/// layer, producing one probability per signal coefficient.
struct LstmParams {
  std::vector<LstmLayerParams> layers;
  DenseParams output;  // N x H

  Index hidden() const { return layers.empty() ? 0 : layers.front().w_rec.cols(); }
};

struct LstmCarry {
  std::vector<Vector> h;
  std::vector<Vector> c;
};

// Tensor visitation. f(name, tensor_of_first, tensor_of_rest...) is called for
// every parameter tensor, in a fixed order. Tensors are Matrix or Vector.
template <class F, class First, class... Rest>
  requires std::same_as<std::remove_const_t<First>, QNetParams>
void visit_tensors(F&& f, First& first, Rest&... rest) {
  for (std::size_t l = 0; l < first.layers.size(); ++l) {
    const std::string prefix = "qnet.l" + std::to_string(l);
    f(prefix + ".weight", first.layers[l].weight, rest.layers[l].weight...);
    f(prefix + ".bias", first.layers[l].bias, rest.layers[l].bias...);
  }
}

template <class F, class First, class... Rest>
  requires std::same_as<std::remove_const_t<First>, LstmParams>
void visit_tensors(F&& f, First& first, Rest&... rest) {
  for (std::size_t l = 0; l < first.layers.size(); ++l) {
    const std::string prefix = "lstm.layer" + std::to_string(l);
    f(prefix + ".w_in", first.layers[l].w_in, rest.layers[l].w_in...);
    f(prefix + ".w_rec", first.layers[l].w_rec, rest.layers[l].w_rec...);
    f(prefix + ".bias", first.layers[l].bias, rest.layers[l].bias...);
  }
  f(std::string("lstm.output.weight"), first.output.weight, rest.output.weight...);
  f(std::string("lstm.output.bias"), first.output.bias, rest.output.bias...);
}

/// Glorot-uniform weights, zero biases; `paper_init` switches to N(0, 0.1^2)
/// weights.
QNetParams make_qnet(Index n_in, Index hidden1, Index hidden2, double q_max, Rng& rng, bool paper_init = false);

/// Glorot-uniform weights, forget-gate bias +1, other biases 0; `paper_init`
/// switches to N(0, 0.1^2) weights.
LstmParams make_lstm(Index n_in, Index hidden, int layers, Rng& rng, bool paper_init = false);

template <class P>
P zeros_like(const P& params) {
  P out = params;
  visit_tensors([](const std::string&, auto& t) { t.setZero(); }, out);
  return out;
}

// ---- Q-network ---------------------------------------------------------

struct QTape {
  Matrix input;
  Matrix pre1, act1, pre2, act2;
  Matrix sig;  // sigmoid of the output logits
  Matrix q;    // 2 x B
};

Vector q_forward(const QNetParams& params, const Vector& state);
QTape q_forward_batch(const QNetParams& params, const Matrix& states);

/// Gradient of a loss with respect to the parameters given dloss/dq (2 x B).
QNetParams q_backward(const QNetParams& params, const QTape& tape, const Matrix& dq);

// ---- LSTM --------------------------------------------------------------

struct LstmStepCache {
  Matrix input;
  Matrix h_prev, c_prev;
  Matrix gate_i, gate_f, gate_o, gate_g;
  Matrix c, tanh_c, h;
};

struct LstmTape {
  std::vector<std::vector<LstmStepCache>> steps;  // [layer][time]
  Matrix logits;                                  // N x B
  Matrix output;                                  // sigmoid(logits)
};

/// Runs the recurrence over `inputs` (each N x B, oldest first) from `carry`
/// (zero state when empty).
LstmTape lstm_forward_batch(const LstmParams& params, const std::vector<Matrix>& inputs, const LstmCarry& carry = {});

/// Single-sequence forward. Returns the output probabilities after the last
/// window element and the carry to continue a stateful rollout.
std::pair<Vector, LstmCarry> lstm_forward(const LstmParams& params, const std::vector<Vector>& window,
                                          const LstmCarry& carry = {});

/// Back-propagation through time from dloss/dlogits of the read-out.
LstmParams lstm_backward(const LstmParams& params, const LstmTape& tape, const Matrix& dlogits);

// ---- losses ------------------------------------------------------------

/// (beta - q)^2
double dqn_loss(double q_pred, double beta);

/// Weighted cross-entropy summed over coordinates; the positive-class term is
/// scaled by omega. Probabilities are clamped to [1e-12, 1 - 1e-12].
double lstm_loss(const Vector& output, const Vector& target, double omega);

/// Batch version: mean over columns of the per-column loss.
double lstm_loss(const Matrix& output, const Matrix& target, double omega);

/// dloss/dlogits of the batch-mean weighted cross-entropy.
Matrix lstm_loss_grad_logits(const Matrix& output, const Matrix& target, double omega);

/// (1 - lambda) j_dqn + lambda j_ls; lambda must lie in [0, 1].
double joint_loss(double j_dqn, double j_ls, double lambda);

// ---- optimisation ------------------------------------------------------

struct LrSchedule {
  double base = 0.05;
  double factor = 0.75;
  int period = 5000;

  double at(long step) const;
};

template <class P>
double global_norm(const P& grads) {
  double sq = 0.0;
  visit_tensors([&](const std::string&, const auto& t) { sq += t.squaredNorm(); }, grads);
  return std::sqrt(sq);
}

template <class P>
void scale(P& grads, double factor) {
  visit_tensors([&](const std::string&, auto& t) { t *= factor; }, grads);
}

template <class P>
void add_into(P& acc, const P& other) {
  visit_tensors([](const std::string&, auto& a, const auto& b) { a += b; }, acc, other);
}

/// Rescales grads so their global norm is at most max_norm. Returns the norm
/// before clipping.
template <class P>
double clip_by_global_norm(P& grads, double max_norm) {
  const double norm = global_norm(grads);
  if (norm > max_norm) scale(grads, max_norm / norm);
  return norm;
}

/// Throws std::runtime_error naming the first tensor with a non-finite entry.
template <class P>
void require_finite(const P& tensors, std::string_view what) {
  visit_tensors(
      [&](const std::string& name, const auto& t) {
        if (!t.allFinite()) throw std::runtime_error(std::string(what) + ": non-finite values in " + name);
      },
      tensors);
}

/// params - lr * grads. Throws if any gradient is non-finite.
template <class P>
void sgd_step(P& params, const P& grads, double lr) {
  require_finite(grads, "sgd_step gradient");
  visit_tensors([&](const std::string&, auto& p, const auto& g) { p -= lr * g; }, params, grads);
}

/// Order-sensitive 64-bit digest of every parameter bit pattern.
template <class P>
std::uint64_t fingerprint(const P& params) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  visit_tensors(
      [&](const std::string&, const auto& t) {
        const auto* bytes = reinterpret_cast<const unsigned char*>(t.data());
        for (std::size_t i = 0; i < static_cast<std::size_t>(t.size()) * sizeof(double); ++i) {
          h ^= bytes[i];
          h *= 0x100000001b3ULL;
        }
      },
      params);
  return h;
}

// ---- checkpoints -------------------------------------------------------

struct Checkpoint {
  QNetParams online;
  QNetParams target;
  LstmParams lstm;
};

/// Text format: a "rlncs-checkpoint 1" line, then for each tensor a
/// "<name> <rows> <cols>" line followed by its values in column-major order,
/// printed with 17 significant digits so reading back is exact.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace rlncs
