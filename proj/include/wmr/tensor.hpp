#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace wmr {

struct ShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using Shape = std::vector<int>;

class Tape;

/// Dense row-major float32 tensor. A tensor is differentiable when it is
/// tied to a tape node (node >= 0); plain value tensors have node == -1.
/// Data is shared, never aliased for writes once recorded on a tape.
struct Tensor {
  Shape shape;
  std::shared_ptr<std::vector<float>> data;
  Tape* tape = nullptr;
  int node = -1;

  Tensor() = default;

  static Tensor zeros(const Shape& s);
  static Tensor full(const Shape& s, float v);
  static Tensor from(const Shape& s, std::vector<float> vals);
  static Tensor scalar_of(float v) { return from({1}, {v}); }

  int64_t numel() const {
    int64_t n = 1;
    for (int d : shape) n *= d;
    return shape.empty() ? 0 : n;
  }
  int rows() const { return shape.empty() ? 0 : shape[0]; }
  int cols() const { return shape.size() < 2 ? 1 : shape[1]; }

  float* ptr() { return data->data(); }
  const float* ptr() const { return data->data(); }
  float& at(int64_t i) { return (*data)[i]; }
  float at(int64_t i) const { return (*data)[i]; }

  /// Value of a 1-element tensor.
  float item() const;

  bool differentiable() const { return node >= 0; }
};

/// One recorded primitive application. `backward` pulls the node's output
/// gradient from the tape and accumulates into its inputs' gradients.
struct TapeNode {
  const char* op;
  int64_t numel;
  std::vector<int> inputs;  // differentiable input node ids (audit & reachability)
  std::function<void(Tape&)> backward;  // empty for leaves
  std::vector<float> grad;  // lazily allocated, zero-initialized
  bool touched = false;     // received any upstream gradient
};

/// Reverse-mode tape. Nodes are recorded in topological (execution) order
/// and visited in exact reverse order on backward(). Gradients of nodes
/// that are not on a path to the loss stay exactly zero.
class Tape {
 public:
  /// Register a leaf (e.g. a parameter). Returned tensor shares data with v.
  Tensor watch(const Tensor& v);

  int record(const char* op, std::vector<int> inputs, int64_t numel,
             std::function<void(Tape&)> backward);

  /// Install the backward closure after the node id is known.
  void set_backward(int id, std::function<void(Tape&)> fn);

  /// Mark a node as having received gradient (when its buffer was written
  /// in place rather than through accumulate()).
  void mark_touched(int id);

  /// Propagate from a scalar loss. Throws ShapeError if loss is not scalar
  /// or not recorded on this tape.
  void backward(const Tensor& loss);

  /// Gradient buffer of a node; allocates zeros on first access.
  std::vector<float>& grad(int id);

  /// Accumulation helper: grad(id) += g (marks the node touched).
  void accumulate(int id, const float* g, int64_t n);

  size_t size() const { return nodes_.size(); }
  const TapeNode& node_at(int i) const { return nodes_[static_cast<size_t>(i)]; }

  void reset() { nodes_.clear(); }

 private:
  std::vector<TapeNode> nodes_;
};

// ---- primitive ops ---------------------------------------------------------
// Every op validates shapes (ShapeError carries both shapes) and checks the
// output for non-finite values (NumericalError names the op). If any input
// is differentiable the result is recorded on that input's tape.

Tensor matmul(const Tensor& a, const Tensor& b);          // [m,k]x[k,n]
Tensor add(const Tensor& a, const Tensor& b);             // same shape
Tensor sub(const Tensor& a, const Tensor& b);             // same shape
Tensor mul(const Tensor& a, const Tensor& b);             // elementwise
Tensor add_bias(const Tensor& a, const Tensor& b);        // [m,n] + [n]
Tensor broadcast_row(const Tensor& v, int m);             // [n] -> [m,n]
Tensor affine(const Tensor& a, float s, float o);         // s*a + o
Tensor elu(const Tensor& a);                              // alpha = 1
Tensor sigmoid(const Tensor& a);
Tensor tanh(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);
Tensor clamp(const Tensor& a, float lo, float hi);
Tensor square(const Tensor& a);
Tensor abs(const Tensor& a);
Tensor minimum(const Tensor& a, const Tensor& b);         // elementwise min
Tensor concat_cols(const std::vector<Tensor>& xs);        // along dim 1
Tensor slice_cols(const Tensor& a, int lo, int hi);       // [m, hi-lo)
Tensor row_sum(const Tensor& a);                          // [m,n] -> [m,1]
Tensor sum(const Tensor& a);                              // -> [1]
Tensor mean(const Tensor& a);                             // -> [1]

/// Zero rows of a [m,n] tensor where keep[i] == 0 (recurrent-state reset
/// inside a recorded sequence); gradient is masked the same way.
Tensor mask_rows(const Tensor& a, const std::vector<uint8_t>& keep);

/// Identity forward (bit-for-bit), propagates exactly nothing backward.
/// Recorded as a real tape node so graph audits can see the cutoff.
Tensor stop_gradient(const Tensor& x);

/// Thread count used by the matmul kernels (1 = serial). Results are
/// bitwise-independent of this setting.
void set_matmul_threads(int n);
int matmul_threads();

}  // namespace wmr
