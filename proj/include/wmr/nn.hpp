#pragma once

#include <string>
#include <vector>

#include "wmr/rng.hpp"
#include "wmr/tensor.hpp"

namespace wmr {

/// A named learnable tensor. `value` persists across tapes; `live` is the
/// tape-watched view installed by watch_params() for the current pass.
struct Param {
  std::string name;
  Tensor value;
  Tensor live;
};

/// Register params on a tape (or detach them all when tape == nullptr,
/// for inference passes). One code path for rollout and update keeps the
/// two numerically identical.
void watch_params(Tape* tape, std::vector<Param*> params);

struct LstmState {
  Tensor hidden;  // [B,H]
  Tensor cell;    // [B,H]

  static LstmState zeros(int batch, int hidden);
  /// Zero the rows of envs whose episode ended (reset on episode start).
  void reset_rows(const std::vector<uint8_t>& keep);
};

/// Single LSTM cell, gate order (input, forget, candidate, output), built
/// from tape primitives so its gradients follow from the op set.
struct LstmCell {
  int input_dim = 0;
  int hidden_dim = 0;
  Param wx;  // [I, 4H]
  Param wh;  // [H, 4H]
  Param b;   // [4H]

  void init(const std::string& name, int in_dim, int hid, Pcg32& rng);
  std::vector<Param*> params();

  /// Returns (output [B,H], new state); the old state is left unmodified.
  std::pair<Tensor, LstmState> forward(const Tensor& x, const LstmState& s) const;

  /// mask_rows wrapper for in-graph episode-boundary resets during replay.
  static LstmState masked(const LstmState& s, const std::vector<uint8_t>& keep);
};

struct Linear {
  Param w;  // [I, O]
  Param b;  // [O]

  void init(const std::string& name, int in_dim, int out_dim, Pcg32& rng);
  std::vector<Param*> params();
  Tensor forward(const Tensor& x) const;
};

/// Adam with bias correction over a fixed, ordered parameter list.
/// Gradients must be finite; a NaN/Inf gradient aborts the update loudly.
class Adam {
 public:
  float lr = 2.5e-5f;
  float beta1 = 0.9f;
  float beta2 = 0.999f;
  float eps = 1e-8f;

  void init(const std::vector<Param*>& params);
  /// grads[i] must match params[i] element count.
  void step(const std::vector<Param*>& params,
            const std::vector<const std::vector<float>*>& grads);
  int64_t step_count() const { return step_count_; }

  // checkpoint access
  std::vector<std::vector<float>>& moments1() { return m_; }
  std::vector<std::vector<float>>& moments2() { return v_; }
  void set_step_count(int64_t c) { step_count_ = c; }

 private:
  int64_t step_count_ = 0;
  std::vector<std::vector<float>> m_, v_;
};

/// Global gradient norm (64-bit accumulation); scale_grads applies an
/// in-place uniform factor when the norm exceeds the clip threshold.
double global_grad_norm(const std::vector<const std::vector<float>*>& grads);
void scale_grads(std::vector<std::vector<float>>& grads, float factor);

/// Diagonal-Gaussian log density, summed over action dims: [B,1].
/// log_std_row is a broadcast [B,n] view of the (clamped) log-std vector.
Tensor gaussian_log_prob(const Tensor& mean, const Tensor& log_std_row,
                         const Tensor& actions);

}  // namespace wmr
