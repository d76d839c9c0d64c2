#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "scalenet/dense.hpp"
#include "scalenet/random.hpp"
#include "scalenet/sparse.hpp"

namespace scalenet {

// A trainable tensor that outlives any single tape. Gradients from each
// backward pass accumulate into `grad` until zero_grad().
struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;

  Parameter() = default;
  Parameter(std::string name_, Matrix value_)
      : name(std::move(name_)), value(std::move(value_)), grad(value.rows(), value.cols()) {}

  void zero_grad() { grad.fill(0.0); }
};

class Tape;

// Handle to a node on a tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;

  const Matrix& value() const;
  // Gradient after Tape::backward, nullptr if the node received none.
  const Matrix* grad() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  bool requires_grad() const;
  bool valid() const noexcept { return tape_ != nullptr; }
  Tape* tape() const noexcept { return tape_; }
  std::size_t id() const noexcept { return id_; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

// Receives the output gradient and one slot per parent; a slot is nullptr
// when that parent does not need a gradient. Implementations accumulate (+=).
using BackwardFn = std::function<void(const Matrix& out_grad, std::span<Matrix*> parent_grads)>;

// Records a forward computation over dense matrices and replays it in reverse.
// Nodes are appended in evaluation order, so reverse insertion order is a
// valid topological order for backpropagation.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  Var leaf(Matrix value);  // requires grad, not tied to a Parameter
  Var parameter(Parameter& p);
  // Generic op node. Throws std::domain_error if `value` holds NaN or Inf.
  Var record(Matrix value, std::vector<Var> parents, BackwardFn backward);

  // Backpropagates from a 1x1 `loss`, then adds parameter-leaf gradients into
  // their Parameter::grad. A tape can be consumed once.
  void backward(Var loss);

  bool consumed() const noexcept { return consumed_; }
  std::size_t size() const noexcept { return nodes_.size(); }

 private:
  friend class Var;
  struct Node {
    Matrix value;
    Matrix grad;
    bool has_grad = false;
    bool requires_grad = false;
    std::vector<std::size_t> parents;
    BackwardFn backward;
    Parameter* param = nullptr;
  };
  const Node& node(Var v) const;
  // deque: Var::value() references stay valid while nodes are appended.
  std::deque<Node> nodes_;
  bool consumed_ = false;
};

namespace ops {

Var matmul(Var a, Var b);
// s * x for a constant sparse s. `s` must outlive the tape.
Var spmm(const SparseMatrix& s, Var x);
Var add(Var a, Var b);
Var add_n(std::span<const Var> terms);
Var scale(Var x, double c);
// x + 1 * bias^T, bias is 1 x cols.
Var add_row_bias(Var x, Var bias);
Var relu(Var x);
// Inverted dropout: kept entries are scaled by 1 / (1 - p).
Var dropout(Var x, double p, Rng& rng, bool training);
Var concat_cols(std::span<const Var> parts);
Var elementwise_max(std::span<const Var> parts);
Var sum_squares(Var x);
// Mean cross-entropy of softmax(logits) over the rows in `subset`.
Var softmax_cross_entropy(Var logits, std::span<const int> labels,
                          std::span<const std::size_t> subset);

struct BatchNormState {
  Matrix running_mean;  // 1 x cols
  Matrix running_var;   // 1 x cols
  double momentum = 0.1;
  double eps = 1e-5;

  explicit BatchNormState(std::size_t cols = 0)
      : running_mean(1, cols, 0.0), running_var(1, cols, 1.0) {}
};

// Column-wise batch normalization over all rows. Training mode normalizes by
// the batch statistics and updates the running ones; eval mode uses the
// running statistics.
Var batch_norm(Var x, Var gamma, Var beta, BatchNormState& state, bool training);

}  // namespace ops

// Row-wise argmax of `logits`.
std::vector<int> argmax_rows(const Matrix& logits);
double accuracy(const Matrix& logits, std::span<const int> labels,
                std::span<const std::size_t> subset);

}  // namespace scalenet
