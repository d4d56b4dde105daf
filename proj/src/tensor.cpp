#include "wmr/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace wmr {

namespace {

std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
  os << "]";
  return os.str();
}

void require(bool ok, const char* op, const Shape& a, const Shape& b) {
  if (!ok) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a) +
                     " vs " + shape_str(b));
  }
}

void check_finite(const char* op, const Tensor& t) {
  const float* p = t.ptr();
  const int64_t n = t.numel();
  for (int64_t i = 0; i < n; ++i) {
    if (!std::isfinite(p[i])) {
      throw NumericalError(std::string("non-finite output of op '") + op + "'");
    }
  }
}

Tape* result_tape(const Tensor& a) { return a.differentiable() ? a.tape : nullptr; }

Tape* result_tape(const Tensor& a, const Tensor& b) {
  Tape* t = a.differentiable() ? a.tape : (b.differentiable() ? b.tape : nullptr);
  if (a.differentiable() && b.differentiable() && a.tape != b.tape) {
    throw ShapeError("inputs recorded on different tapes");
  }
  return t;
}

int g_mm_threads = 1;

}  // namespace

void set_matmul_threads(int n) { g_mm_threads = n < 1 ? 1 : n; }
int matmul_threads() { return g_mm_threads; }

// ---- Tensor ----------------------------------------------------------------

Tensor Tensor::zeros(const Shape& s) {
  Tensor t;
  t.shape = s;
  t.data = std::make_shared<std::vector<float>>(static_cast<size_t>(t.numel()), 0.0f);
  return t;
}

Tensor Tensor::full(const Shape& s, float v) {
  Tensor t = zeros(s);
  std::fill(t.data->begin(), t.data->end(), v);
  return t;
}

Tensor Tensor::from(const Shape& s, std::vector<float> vals) {
  Tensor t;
  t.shape = s;
  if (static_cast<int64_t>(vals.size()) != t.numel()) {
    throw ShapeError("Tensor::from: value count does not match shape " + shape_str(s));
  }
  t.data = std::make_shared<std::vector<float>>(std::move(vals));
  return t;
}

float Tensor::item() const {
  if (numel() != 1) throw ShapeError("item(): tensor is not scalar, shape " + shape_str(shape));
  return (*data)[0];
}

// ---- Tape ------------------------------------------------------------------

Tensor Tape::watch(const Tensor& v) {
  Tensor out = v;
  out.tape = this;
  out.node = record("param", {}, v.numel(), nullptr);
  return out;
}

int Tape::record(const char* op, std::vector<int> inputs, int64_t numel,
                 std::function<void(Tape&)> backward) {
  TapeNode n;
  n.op = op;
  n.numel = numel;
  n.inputs = std::move(inputs);
  n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

std::vector<float>& Tape::grad(int id) {
  TapeNode& n = nodes_[static_cast<size_t>(id)];
  if (n.grad.empty()) n.grad.assign(static_cast<size_t>(n.numel), 0.0f);
  return n.grad;
}

void Tape::accumulate(int id, const float* g, int64_t n) {
  std::vector<float>& dst = grad(id);
  for (int64_t i = 0; i < n; ++i) dst[static_cast<size_t>(i)] += g[i];
  nodes_[static_cast<size_t>(id)].touched = true;
}

void Tape::set_backward(int id, std::function<void(Tape&)> fn) {
  nodes_[static_cast<size_t>(id)].backward = std::move(fn);
}

void Tape::mark_touched(int id) { nodes_[static_cast<size_t>(id)].touched = true; }

void Tape::backward(const Tensor& loss) {
  if (loss.numel() != 1) throw ShapeError("backward: loss must be scalar");
  if (!loss.differentiable() || loss.tape != this) {
    throw ShapeError("backward: loss is not recorded on this tape");
  }
  grad(loss.node)[0] = 1.0f;
  nodes_[static_cast<size_t>(loss.node)].touched = true;
  for (int i = static_cast<int>(nodes_.size()) - 1; i >= 0; --i) {
    TapeNode& n = nodes_[static_cast<size_t>(i)];
    if (n.touched && n.backward) n.backward(*this);
  }
}

// ---- matmul kernels --------------------------------------------------------
// C[i,:] accumulates A[i,k]*B[k,:] with k strictly ascending, so each output
// row depends only on its own input row; results are identical no matter how
// rows are batched or how many threads run.

namespace {

void mm_accumulate(const float* a, const float* b, float* c, int m, int k, int n) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(g_mm_threads) \
    if (g_mm_threads > 1 && static_cast<int64_t>(m) * k * n > 262144)
#endif
  for (int i = 0; i < m; ++i) {
    const float* arow = a + static_cast<int64_t>(i) * k;
    float* crow = c + static_cast<int64_t>(i) * n;
    for (int kk = 0; kk < k; ++kk) {
      const float s = arow[kk];
      if (s == 0.0f) continue;
      const float* brow = b + static_cast<int64_t>(kk) * n;
      for (int j = 0; j < n; ++j) crow[j] += s * brow[j];
    }
  }
}

std::vector<float> transposed(const float* a, int m, int n) {
  std::vector<float> t(static_cast<size_t>(m) * n);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) t[static_cast<size_t>(j) * m + i] = a[static_cast<size_t>(i) * n + j];
  return t;
}

// Builds the result tensor for an elementwise-style op and records it.
template <typename Back>
Tensor make_result(const char* op, const Shape& shape, std::vector<float> vals,
                   Tape* tape, std::vector<int> inputs, Back make_backward) {
  Tensor out = Tensor::from(shape, std::move(vals));
  check_finite(op, out);
  if (tape) {
    out.tape = tape;
    const int id = tape->record(op, std::move(inputs), out.numel(), nullptr);
    out.node = id;
    tape->set_backward(id, make_backward(id));
  }
  return out;
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  require(a.shape.size() == 2 && b.shape.size() == 2 && a.shape[1] == b.shape[0],
          "matmul", a.shape, b.shape);
  const int m = a.shape[0], k = a.shape[1], n = b.shape[1];
  std::vector<float> vals(static_cast<size_t>(m) * n, 0.0f);
  mm_accumulate(a.ptr(), b.ptr(), vals.data(), m, k, n);

  Tape* tape = result_tape(a, b);
  auto adata = a.data;
  auto bdata = b.data;
  const int anode = a.node, bnode = b.node;
  std::vector<int> ins;
  if (anode >= 0) ins.push_back(anode);
  if (bnode >= 0) ins.push_back(bnode);
  return make_result("matmul", {m, n}, std::move(vals), tape, ins, [=](int self) {
    return [=](Tape& t) {
      const std::vector<float>& go = t.grad(self);
      if (anode >= 0) {
        // dA = dC * B^T, materialize B^T once for contiguous row traversal
        std::vector<float> bt = transposed(bdata->data(), k, n);
        mm_accumulate(go.data(), bt.data(), t.grad(anode).data(), m, n, k);
        t.mark_touched(anode);  // mark touched (buffer written in place)
      }
      if (bnode >= 0) {
        std::vector<float> at = transposed(adata->data(), m, k);
        mm_accumulate(at.data(), go.data(), t.grad(bnode).data(), k, m, n);
        t.mark_touched(bnode);
      }
    };
  });
}

namespace {

using Unary = float (*)(float);

template <typename Fwd, typename Back>
Tensor unary_op(const char* op, const Tensor& a, Fwd f, Back df) {
  const int64_t n = a.numel();
  std::vector<float> vals(static_cast<size_t>(n));
  const float* p = a.ptr();
  for (int64_t i = 0; i < n; ++i) vals[static_cast<size_t>(i)] = f(p[i]);
  Tape* tape = result_tape(a);
  auto adata = a.data;
  const int anode = a.node;
  std::vector<int> ins;
  if (anode >= 0) ins.push_back(anode);
  return make_result(op, a.shape, std::move(vals), tape, ins, [=](int self) {
    return [=](Tape& t) {
      if (anode < 0) return;
      const std::vector<float>& go = t.grad(self);
      std::vector<float>& ga = t.grad(anode);
      const float* x = adata->data();
      for (int64_t i = 0; i < n; ++i)
        ga[static_cast<size_t>(i)] += go[static_cast<size_t>(i)] * df(x[i]);
      t.mark_touched(anode);
    };
  });
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  require(a.shape == b.shape, "add", a.shape, b.shape);
  const int64_t n = a.numel();
  std::vector<float> vals(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i) vals[static_cast<size_t>(i)] = a.at(i) + b.at(i);
  Tape* tape = result_tape(a, b);
  const int anode = a.node, bnode = b.node;
  std::vector<int> ins;
  if (anode >= 0) ins.push_back(anode);
  if (bnode >= 0) ins.push_back(bnode);
  return make_result("add", a.shape, std::move(vals), tape, ins, [=](int self) {
    return [=](Tape& t) {
      const std::vector<float>& go = t.grad(self);
      if (anode >= 0) t.accumulate(anode, go.data(), n);
      if (bnode >= 0) t.accumulate(bnode, go.data(), n);
    };
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require(a.shape == b.shape, "sub", a.shape, b.shape);
  const int64_t n = a.numel();
  std::vector<float> vals(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i) vals[static_cast<size_t>(i)] = a.at(i) - b.at(i);
  Tape* tape = result_tape(a, b);
  const int anode = a.node, bnode = b.node;
  std::vector<int> ins;
  if (anode >= 0) ins.push_back(anode);
  if (bnode >= 0) ins.push_back(bnode);
  return make_result("sub", a.shape, std::move(vals), tape, ins, [=](int self) {
    return [=](Tape& t) {
      const std::vector<float>& go = t.grad(self);
      if (anode >= 0) t.accumulate(anode, go.data(), n);
      if (bnode >= 0) {
        std::vector<float>& gb = t.grad(bnode);
        for (int64_t i = 0; i < n; ++i) gb[static_cast<size_t>(i)] -= go[static_cast<size_t>(i)];
        t.mark_touched(bnode);
      }
    };
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require(a.shape == b.shape, "mul", a.shape, b.shape);
  const int64_t n = a.numel();
  std::vector<float> vals(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i) vals[static_cast<size_t>(i)] = a.at(i) * b.at(i);
  Tape* tape = result_tape(a, b);
  auto adata = a.data;
  auto bdata = b.data;
  const int anode = a.node, bnode = b.node;
  std::vector<int> ins;
  if (anode >= 0) ins.push_back(anode);
  if (bnode >= 0) ins.push_back(bnode);
  return make_result("mul", a.shape, std::move(vals), tape, ins, [=](int self) {
    return [=](Tape& t) {
      const std::vector<float>& go = t.grad(self);
      if (anode >= 0) {
        std::vector<float>& ga = t.grad(anode);
        const float* y = bdata->data();
        for (int64_t i = 0; i < n; ++i) ga[static_cast<size_t>(i)] += go[static_cast<size_t>(i)] * y[i];
        t.mark_touched(anode);
      }
      if (bnode >= 0) {
        std::vector<float>& gb = t.grad(bnode);
        const float* x = adata->data();
        for (int64_t i = 0; i < n; ++i) gb[static_cast<size_t>(i)] += go[static_cast<size_t>(i)] * x[i];
        t.mark_touched(bnode);
      }
    };
  });
}

Tensor add_bias(const Tensor& a, const Tensor& b) {
  require(a.shape.size() == 2 && b.shape.size() == 1 && a.shape[1] == b.shape[0],
          "add_bias", a.shape, b.shape);
  const int m = a.shape[0], n = a.shape[1];
  std::vector<float> vals(static_cast<size_t>(m) * n);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j)
      vals[static_cast<size_t>(i) * n + j] = a.at(static_cast<int64_t>(i) * n + j) + b.at(j);
  Tape* tape = result_tape(a, b);
  const int anode = a.node, bnode = b.node;
  std::vector<int> ins;
  if (anode >= 0) ins.push_back(anode);
  if (bnode >= 0) ins.push_back(bnode);
  return make_result("add_bias", a.shape, std::move(vals), tape, ins, [=](int self) {
    return [=](Tape& t) {
      const std::vector<float>& go = t.grad(self);
      if (anode >= 0) t.accumulate(anode, go.data(), static_cast<int64_t>(m) * n);
      if (bnode >= 0) {
        std::vector<float>& gb = t.grad(bnode);
        for (int j = 0; j < n; ++j) {
          double s = 0.0;  // column reduction in 64-bit
          for (int i = 0; i < m; ++i) s += go[static_cast<size_t>(i) * n + j];
          gb[static_cast<size_t>(j)] += static_cast<float>(s);
        }
        t.mark_touched(bnode);
      }
    };
  });
}

Tensor broadcast_row(const Tensor& v, int m) {
  require(v.shape.size() == 1, "broadcast_row", v.shape, {m});
  const int n = v.shape[0];
  std::vector<float> vals(static_cast<size_t>(m) * n);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) vals[static_cast<size_t>(i) * n + j] = v.at(j);
  Tape* tape = result_tape(v);
  const int vnode = v.node;
  std::vector<int> ins;
  if (vnode >= 0) ins.push_back(vnode);
  return make_result("broadcast_row", {m, n}, std::move(vals), tape, ins, [=](int self) {
    return [=](Tape& t) {
      if (vnode < 0) return;
      const std::vector<float>& go = t.grad(self);
      std::vector<float>& gv = t.grad(vnode);
      for (int j = 0; j < n; ++j) {
        double s = 0.0;
        for (int i = 0; i < m; ++i) s += go[static_cast<size_t>(i) * n + j];
        gv[static_cast<size_t>(j)] += static_cast<float>(s);
      }
      t.mark_touched(vnode);
    };
  });
}

Tensor affine(const Tensor& a, float s, float o) {
  const int64_t n = a.numel();
  std::vector<float> vals(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i) vals[static_cast<size_t>(i)] = s * a.at(i) + o;
  Tape* tape = result_tape(a);
  const int anode = a.node;
  std::vector<int> ins;
  if (anode >= 0) ins.push_back(anode);
  return make_result("affine", a.shape, std::move(vals), tape, ins, [=](int self) {
    return [=](Tape& t) {
      if (anode < 0) return;
      const std::vector<float>& go = t.grad(self);
      std::vector<float>& ga = t.grad(anode);
      for (int64_t i = 0; i < n; ++i) ga[static_cast<size_t>(i)] += s * go[static_cast<size_t>(i)];
      t.mark_touched(anode);
    };
  });
}

Tensor elu(const Tensor& a) {
  return unary_op(
      "elu", a, +[](float x) { return x > 0.0f ? x : std::expm1(x); },
      +[](float x) { return x > 0.0f ? 1.0f : std::exp(x); });
}

Tensor sigmoid(const Tensor& a) {
  return unary_op(
      "sigmoid", a, +[](float x) { return 1.0f / (1.0f + std::exp(-x)); },
      +[](float x) {
        const float s = 1.0f / (1.0f + std::exp(-x));
        return s * (1.0f - s);
      });
}

Tensor tanh(const Tensor& a) {
  return unary_op(
      "tanh", a, +[](float x) { return std::tanh(x); },
      +[](float x) {
        const float th = std::tanh(x);
        return 1.0f - th * th;
      });
}

Tensor exp(const Tensor& a) {
  return unary_op(
      "exp", a, +[](float x) { return std::exp(x); },
      +[](float x) { return std::exp(x); });
}

Tensor log(const Tensor& a) {
  return unary_op(
      "log", a, +[](float x) { return std::log(x); },
      +[](float x) { return 1.0f / x; });
}

Tensor square(const Tensor& a) {
  return unary_op(
      "square", a, +[](float x) { return x * x; },
      +[](float x) { return 2.0f * x; });
}

Tensor abs(const Tensor& a) {
  return unary_op(
      "abs", a, +[](float x) { return std::fabs(x); },
      +[](float x) { return x > 0.0f ? 1.0f : (x < 0.0f ? -1.0f : 0.0f); });
}

Tensor clamp(const Tensor& a, float lo, float hi) {
  const int64_t n = a.numel();
  std::vector<float> vals(static_cast<size_t>(n));
  const float* p = a.ptr();
  for (int64_t i = 0; i < n; ++i) vals[static_cast<size_t>(i)] = std::min(hi, std::max(lo, p[i]));
  Tape* tape = result_tape(a);
  auto adata = a.data;
  const int anode = a.node;
  std::vector<int> ins;
  if (anode >= 0) ins.push_back(anode);
  return make_result("clamp", a.shape, std::move(vals), tape, ins, [=](int self) {
    return [=](Tape& t) {
      if (anode < 0) return;
      const std::vector<float>& go = t.grad(self);
      std::vector<float>& ga = t.grad(anode);
      const float* x = adata->data();
      for (int64_t i = 0; i < n; ++i) {
        if (x[i] >= lo && x[i] <= hi) ga[static_cast<size_t>(i)] += go[static_cast<size_t>(i)];
      }
      t.mark_touched(anode);
    };
  });
}

Tensor minimum(const Tensor& a, const Tensor& b) {
  require(a.shape == b.shape, "minimum", a.shape, b.shape);
  const int64_t n = a.numel();
  std::vector<float> vals(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i) vals[static_cast<size_t>(i)] = std::min(a.at(i), b.at(i));
  Tape* tape = result_tape(a, b);
  auto adata = a.data;
  auto bdata = b.data;
  const int anode = a.node, bnode = b.node;
  std::vector<int> ins;
  if (anode >= 0) ins.push_back(anode);
  if (bnode >= 0) ins.push_back(bnode);
  // ties route to the first argument
  return make_result("minimum", a.shape, std::move(vals), tape, ins, [=](int self) {
    return [=](Tape& t) {
      const std::vector<float>& go = t.grad(self);
      const float* x = adata->data();
      const float* y = bdata->data();
      if (anode >= 0) {
        std::vector<float>& ga = t.grad(anode);
        for (int64_t i = 0; i < n; ++i)
          if (x[i] <= y[i]) ga[static_cast<size_t>(i)] += go[static_cast<size_t>(i)];
        t.mark_touched(anode);
      }
      if (bnode >= 0) {
        std::vector<float>& gb = t.grad(bnode);
        for (int64_t i = 0; i < n; ++i)
          if (x[i] > y[i]) gb[static_cast<size_t>(i)] += go[static_cast<size_t>(i)];
        t.mark_touched(bnode);
      }
    };
  });
}

Tensor concat_cols(const std::vector<Tensor>& xs) {
  if (xs.empty()) throw ShapeError("concat_cols: no inputs");
  const int m = xs[0].shape[0];
  int total = 0;
  Tape* tape = nullptr;
  for (const Tensor& x : xs) {
    require(x.shape.size() == 2 && x.shape[0] == m, "concat_cols", xs[0].shape, x.shape);
    total += x.shape[1];
    if (x.differentiable()) {
      if (tape && tape != x.tape) throw ShapeError("concat_cols: inputs on different tapes");
      tape = x.tape;
    }
  }
  std::vector<float> vals(static_cast<size_t>(m) * total);
  int off = 0;
  for (const Tensor& x : xs) {
    const int w = x.shape[1];
    for (int i = 0; i < m; ++i)
      std::memcpy(vals.data() + static_cast<size_t>(i) * total + off,
                  x.ptr() + static_cast<size_t>(i) * w, sizeof(float) * static_cast<size_t>(w));
    off += w;
  }
  struct Piece {
    int node, off, w;
  };
  std::vector<Piece> pieces;
  std::vector<int> ins;
  off = 0;
  for (const Tensor& x : xs) {
    if (x.node >= 0) {
      pieces.push_back({x.node, off, x.shape[1]});
      ins.push_back(x.node);
    }
    off += x.shape[1];
  }
  return make_result("concat", {m, total}, std::move(vals), tape, ins, [=](int self) {
    return [=](Tape& t) {
      const std::vector<float>& go = t.grad(self);
      for (const Piece& p : pieces) {
        std::vector<float>& g = t.grad(p.node);
        for (int i = 0; i < m; ++i)
          for (int j = 0; j < p.w; ++j)
            g[static_cast<size_t>(i) * p.w + j] +=
                go[static_cast<size_t>(i) * total + p.off + j];
        t.mark_touched(p.node);
      }
    };
  });
}

Tensor slice_cols(const Tensor& a, int lo, int hi) {
  require(a.shape.size() == 2 && lo >= 0 && hi <= a.shape[1] && lo < hi,
          "slice_cols", a.shape, {lo, hi});
  const int m = a.shape[0], n = a.shape[1], w = hi - lo;
  std::vector<float> vals(static_cast<size_t>(m) * w);
  for (int i = 0; i < m; ++i)
    std::memcpy(vals.data() + static_cast<size_t>(i) * w,
                a.ptr() + static_cast<size_t>(i) * n + lo, sizeof(float) * static_cast<size_t>(w));
  Tape* tape = result_tape(a);
  const int anode = a.node;
  std::vector<int> ins;
  if (anode >= 0) ins.push_back(anode);
  return make_result("slice", {m, w}, std::move(vals), tape, ins, [=](int self) {
    return [=](Tape& t) {
      if (anode < 0) return;
      const std::vector<float>& go = t.grad(self);
      std::vector<float>& ga = t.grad(anode);
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < w; ++j)
          ga[static_cast<size_t>(i) * n + lo + j] += go[static_cast<size_t>(i) * w + j];
      t.mark_touched(anode);
    };
  });
}

Tensor row_sum(const Tensor& a) {
  require(a.shape.size() == 2, "row_sum", a.shape, {});
  const int m = a.shape[0], n = a.shape[1];
  std::vector<float> vals(static_cast<size_t>(m));
  for (int i = 0; i < m; ++i) {
    double s = 0.0;
    for (int j = 0; j < n; ++j) s += a.at(static_cast<int64_t>(i) * n + j);
    vals[static_cast<size_t>(i)] = static_cast<float>(s);
  }
  Tape* tape = result_tape(a);
  const int anode = a.node;
  std::vector<int> ins;
  if (anode >= 0) ins.push_back(anode);
  return make_result("row_sum", {m, 1}, std::move(vals), tape, ins, [=](int self) {
    return [=](Tape& t) {
      if (anode < 0) return;
      const std::vector<float>& go = t.grad(self);
      std::vector<float>& ga = t.grad(anode);
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) ga[static_cast<size_t>(i) * n + j] += go[static_cast<size_t>(i)];
      t.mark_touched(anode);
    };
  });
}

namespace {

Tensor reduce_all(const char* op, const Tensor& a, bool take_mean) {
  const int64_t n = a.numel();
  double s = 0.0;
  for (int64_t i = 0; i < n; ++i) s += a.at(i);
  if (take_mean) s /= static_cast<double>(n);
  const float scale = take_mean ? 1.0f / static_cast<float>(n) : 1.0f;
  Tape* tape = result_tape(a);
  const int anode = a.node;
  std::vector<int> ins;
  if (anode >= 0) ins.push_back(anode);
  return make_result(op, {1}, {static_cast<float>(s)}, tape, ins, [=](int self) {
    return [=](Tape& t) {
      if (anode < 0) return;
      const float g = t.grad(self)[0] * scale;
      std::vector<float>& ga = t.grad(anode);
      for (int64_t i = 0; i < n; ++i) ga[static_cast<size_t>(i)] += g;
      t.mark_touched(anode);
    };
  });
}

}  // namespace

Tensor sum(const Tensor& a) { return reduce_all("sum", a, false); }
Tensor mean(const Tensor& a) { return reduce_all("mean", a, true); }

Tensor mask_rows(const Tensor& a, const std::vector<uint8_t>& keep) {
  require(a.shape.size() == 2 && static_cast<int>(keep.size()) == a.shape[0],
          "mask_rows", a.shape, {static_cast<int>(keep.size())});
  const int m = a.shape[0], n = a.shape[1];
  std::vector<float> vals(static_cast<size_t>(m) * n, 0.0f);
  for (int i = 0; i < m; ++i) {
    if (!keep[static_cast<size_t>(i)]) continue;
    std::memcpy(vals.data() + static_cast<size_t>(i) * n,
                a.ptr() + static_cast<size_t>(i) * n, sizeof(float) * static_cast<size_t>(n));
  }
  Tape* tape = result_tape(a);
  const int anode = a.node;
  std::vector<int> ins;
  if (anode >= 0) ins.push_back(anode);
  auto keep_copy = keep;
  return make_result("mask_rows", a.shape, std::move(vals), tape, ins, [=](int self) {
    return [=](Tape& t) {
      if (anode < 0) return;
      const std::vector<float>& go = t.grad(self);
      std::vector<float>& ga = t.grad(anode);
      for (int i = 0; i < m; ++i) {
        if (!keep_copy[static_cast<size_t>(i)]) continue;
        for (int j = 0; j < n; ++j)
          ga[static_cast<size_t>(i) * n + j] += go[static_cast<size_t>(i) * n + j];
      }
      t.mark_touched(anode);
    };
  });
}

Tensor stop_gradient(const Tensor& x) {
  if (!x.differentiable()) return x;
  Tensor out;
  out.shape = x.shape;
  out.data = x.data;  // forward is the identity, bit-for-bit
  out.tape = x.tape;
  // backward is a no-op: nothing is ever propagated to the input
  out.node = x.tape->record("stop_gradient", {x.node}, x.numel(), [](Tape&) {});
  return out;
}

}  // namespace wmr
