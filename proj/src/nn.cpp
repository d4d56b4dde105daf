#include "wmr/nn.hpp"

#include <cmath>

namespace wmr {

void watch_params(Tape* tape, std::vector<Param*> params) {
  for (Param* p : params) {
    if (tape) {
      p->live = tape->watch(p->value);
    } else {
      p->live = p->value;
      p->live.tape = nullptr;
      p->live.node = -1;
    }
  }
}

LstmState LstmState::zeros(int batch, int hidden) {
  return {Tensor::zeros({batch, hidden}), Tensor::zeros({batch, hidden})};
}

void LstmState::reset_rows(const std::vector<uint8_t>& keep) {
  const int n = hidden.cols();
  for (int i = 0; i < hidden.rows(); ++i) {
    if (keep[static_cast<size_t>(i)]) continue;
    for (int j = 0; j < n; ++j) {
      hidden.at(static_cast<int64_t>(i) * n + j) = 0.0f;
      cell.at(static_cast<int64_t>(i) * n + j) = 0.0f;
    }
  }
}

namespace {

// uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)), the usual recurrent-net default
Tensor uniform_init(const Shape& s, int fan_in, Pcg32& rng) {
  Tensor t = Tensor::zeros(s);
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (int64_t i = 0; i < t.numel(); ++i)
    t.at(i) = static_cast<float>(rng.uniform(-bound, bound));
  return t;
}

}  // namespace

void LstmCell::init(const std::string& name, int in_dim, int hid, Pcg32& rng) {
  input_dim = in_dim;
  hidden_dim = hid;
  wx = {name + ".wx", uniform_init({in_dim, 4 * hid}, hid, rng), {}};
  wh = {name + ".wh", uniform_init({hid, 4 * hid}, hid, rng), {}};
  b = {name + ".b", Tensor::zeros({4 * hid}), {}};
  // forget-gate bias starts at 1 so memory survives early training
  for (int j = hid; j < 2 * hid; ++j) b.value.at(j) = 1.0f;
}

std::vector<Param*> LstmCell::params() { return {&wx, &wh, &b}; }

std::pair<Tensor, LstmState> LstmCell::forward(const Tensor& x, const LstmState& s) const {
  const int h = hidden_dim;
  Tensor gates = add_bias(add(matmul(x, wx.live), matmul(s.hidden, wh.live)), b.live);
  Tensor gi = sigmoid(slice_cols(gates, 0, h));
  Tensor gf = sigmoid(slice_cols(gates, h, 2 * h));
  Tensor gg = tanh(slice_cols(gates, 2 * h, 3 * h));
  Tensor go = sigmoid(slice_cols(gates, 3 * h, 4 * h));
  Tensor c_new = add(mul(gf, s.cell), mul(gi, gg));
  Tensor h_new = mul(go, tanh(c_new));
  return {h_new, {h_new, c_new}};
}

LstmState LstmCell::masked(const LstmState& s, const std::vector<uint8_t>& keep) {
  return {mask_rows(s.hidden, keep), mask_rows(s.cell, keep)};
}

void Linear::init(const std::string& name, int in_dim, int out_dim, Pcg32& rng) {
  w = {name + ".w", uniform_init({in_dim, out_dim}, in_dim, rng), {}};
  b = {name + ".b", Tensor::zeros({out_dim}), {}};
}

std::vector<Param*> Linear::params() { return {&w, &b}; }

Tensor Linear::forward(const Tensor& x) const { return add_bias(matmul(x, w.live), b.live); }

void Adam::init(const std::vector<Param*>& params) {
  step_count_ = 0;
  m_.clear();
  v_.clear();
  for (Param* p : params) {
    m_.emplace_back(static_cast<size_t>(p->value.numel()), 0.0f);
    v_.emplace_back(static_cast<size_t>(p->value.numel()), 0.0f);
  }
}

void Adam::step(const std::vector<Param*>& params,
                const std::vector<const std::vector<float>*>& grads) {
  if (params.size() != grads.size() || params.size() != m_.size())
    throw ShapeError("adam_step: parameter/gradient list mismatch");
  ++step_count_;
  const double bc1 = 1.0 - std::pow(static_cast<double>(beta1), static_cast<double>(step_count_));
  const double bc2 = 1.0 - std::pow(static_cast<double>(beta2), static_cast<double>(step_count_));
  for (size_t k = 0; k < params.size(); ++k) {
    Tensor& theta = params[k]->value;
    const std::vector<float>& g = *grads[k];
    if (static_cast<int64_t>(g.size()) != theta.numel())
      throw ShapeError("adam_step: gradient shape mismatch for " + params[k]->name);
    std::vector<float>& m = m_[k];
    std::vector<float>& v = v_[k];
    for (size_t i = 0; i < g.size(); ++i) {
      if (!std::isfinite(g[i]))
        throw NumericalError("adam_step: non-finite gradient in " + params[k]->name);
      m[i] = beta1 * m[i] + (1.0f - beta1) * g[i];
      v[i] = beta2 * v[i] + (1.0f - beta2) * g[i] * g[i];
      const double mh = m[i] / bc1;
      const double vh = v[i] / bc2;
      theta.at(static_cast<int64_t>(i)) -=
          static_cast<float>(lr * mh / (std::sqrt(vh) + eps));
    }
  }
}

double global_grad_norm(const std::vector<const std::vector<float>*>& grads) {
  double s = 0.0;
  for (const auto* g : grads)
    for (float x : *g) s += static_cast<double>(x) * static_cast<double>(x);
  return std::sqrt(s);
}

void scale_grads(std::vector<std::vector<float>>& grads, float factor) {
  for (auto& g : grads)
    for (float& x : g) x *= factor;
}

Tensor gaussian_log_prob(const Tensor& mean, const Tensor& log_std_row,
                         const Tensor& actions) {
  // -0.5 * sum_j ((a - mu)/sigma)^2 - sum_j log sigma - n/2 * log(2*pi)
  const int n = mean.cols();
  Tensor inv_sigma = exp(affine(log_std_row, -1.0f, 0.0f));
  Tensor z = mul(sub(actions, mean), inv_sigma);
  Tensor quad = affine(row_sum(square(z)), -0.5f, 0.0f);
  Tensor logdet = affine(row_sum(log_std_row), -1.0f,
                         -0.5f * static_cast<float>(n) * std::log(2.0f * static_cast<float>(M_PI)));
  return add(quad, logdet);
}

}  // namespace wmr
