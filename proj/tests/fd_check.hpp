#pragma once

// Test-only central-difference gradient oracle. Independent of the tape's
// backward pass: it only re-evaluates the forward closure at perturbed
// parameter values.

#include <cmath>
#include <functional>
#include <vector>

#include "wmr/nn.hpp"
#include "wmr/tensor.hpp"

namespace wmr::test {

// Builds the scalar loss; tape == nullptr means plain inference.
using LossBuilder = std::function<Tensor(Tape*)>;

inline double eval_loss(const LossBuilder& build) {
  Tensor loss = build(nullptr);
  return static_cast<double>(loss.item());
}

/// Central difference d(loss)/d(param[i]) with the actually-applied float32
/// perturbation measured in double to cancel quantization of h.
inline double fd_grad(const LossBuilder& build, Param& p, int64_t i, double h = 1e-3) {
  const float saved = p.value.at(i);
  const double step = h * std::max(1.0, std::fabs(static_cast<double>(saved)));
  p.value.at(i) = static_cast<float>(saved + step);
  const double xp = static_cast<double>(p.value.at(i));
  const double lp = eval_loss(build);
  p.value.at(i) = static_cast<float>(saved - step);
  const double xm = static_cast<double>(p.value.at(i));
  const double lm = eval_loss(build);
  p.value.at(i) = saved;
  return (lp - lm) / (xp - xm);
}

/// Reverse-mode gradients for every parameter, in parameter order.
inline std::vector<std::vector<float>> ad_grads(const LossBuilder& build,
                                                const std::vector<Param*>& params) {
  Tape tape;
  Tensor loss = build(&tape);
  tape.backward(loss);
  std::vector<std::vector<float>> out;
  for (Param* p : params) out.push_back(tape.grad(p->live.node));
  return out;
}

/// Max relative error between backward() and central differences over all
/// parameter entries. Central differences of a float32 forward carry
/// ~1e-6 absolute noise at h=1e-3, so the comparison is the usual
/// rtol/atol form rewritten as a single relative error with a denominator
/// floor: floor = atol / rtol (atol = 1e-5 throughout). A graph checked at
/// rtol 1e-4 therefore passes floor 0.1; rtol 1e-3 passes floor 1e-2.
inline double max_rel_error(const LossBuilder& build, const std::vector<Param*>& params,
                            double h = 1e-3, double floor = 1e-2) {
  auto ad = ad_grads(build, params);
  double worst = 0.0;
  for (size_t k = 0; k < params.size(); ++k) {
    for (int64_t i = 0; i < params[k]->value.numel(); ++i) {
      const double g_ad = ad[k][static_cast<size_t>(i)];
      const double g_fd = fd_grad(build, *params[k], i, h);
      const double rel = std::fabs(g_ad - g_fd) /
                         std::max({std::fabs(g_ad), std::fabs(g_fd), floor});
      worst = std::max(worst, rel);
    }
  }
  return worst;
}

}  // namespace wmr::test
