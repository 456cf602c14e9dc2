#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "qoe/matrix.hpp"
#include "qoe/rng.hpp"

// Minimal tape-free reverse-mode differentiation over row-major matrices.
// Each op allocates a node holding its value and a closure that pushes the
// upstream gradient into its inputs; backward() walks the graph in reverse
// topological order.
namespace qoe::ad {

struct Node {
  Matrix value;
  Matrix grad;  // empty until a gradient arrives
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void(Node&)> backward;

  Matrix& grad_buffer();
};

class Tensor {
 public:
  Tensor() = default;

  static Tensor constant(Matrix value);
  static Tensor parameter(Matrix value);

  bool valid() const noexcept { return node_ != nullptr; }
  const Matrix& value() const { return node_->value; }
  Matrix& mutable_value() { return node_->value; }
  // Accumulated gradient; a zero matrix of the value's shape if none arrived.
  const Matrix& grad() const;
  void zero_grad();
  bool requires_grad() const { return node_->requires_grad; }
  std::size_t rows() const { return node_->value.rows(); }
  std::size_t cols() const { return node_->value.cols(); }

  const std::shared_ptr<Node>& node() const { return node_; }
  explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}

 private:
  std::shared_ptr<Node> node_;
};

std::string shape_string(const Matrix& m);

// (n x k) * (k x m)
Tensor matmul(const Tensor& a, const Tensor& b);
// x (n x c) + bias (1 x c) broadcast over rows
Tensor add_bias(const Tensor& x, const Tensor& bias);
Tensor add(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
// scale * a + shift, elementwise
Tensor affine(const Tensor& a, double scale, double shift);
Tensor relu(const Tensor& a);
Tensor sigmoid(const Tensor& a);
// Inverted dropout; returns `a` itself when not training or rate == 0.
Tensor dropout(const Tensor& a, double rate, Rng& rng, bool training);
// Row-wise Euclidean projection onto the probability simplex.
Tensor sparsemax(const Tensor& a);
// mean((pred - target)^2) over all elements; target receives no gradient.
Tensor mse_loss(const Tensor& pred, const Matrix& target);
// mean over rows of -sum_j p log(p + eps)
Tensor mean_row_entropy(const Tensor& p, double eps = 1e-15);

struct BatchNormState {
  Matrix running_mean;  // 1 x c
  Matrix running_var;   // 1 x c

  explicit BatchNormState(std::size_t c = 0)
      : running_mean(1, c, 0.0), running_var(1, c, 1.0) {}
};

enum class NormMode {
  batch_stats,   // normalize with per-virtual-batch statistics, update running stats
  running_stats  // frozen: normalize with the running statistics
};

struct BatchNormOptions {
  NormMode mode = NormMode::batch_stats;
  std::size_t virtual_batch = 0;  // 0: whole batch
  double momentum = 0.02;
  double eps = 1e-5;
};

// Ghost batch normalization. In batch_stats mode rows are cut into
// contiguous chunks of virtual_batch rows, each normalized with its own mean
// and (biased) variance; if the last chunk would hold fewer than two rows the
// whole batch is normalized as one chunk. `state` is updated once per chunk.
Tensor batch_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, BatchNormState& state,
                  const BatchNormOptions& options);

// Backpropagates from a 1x1 tensor.
void backward(const Tensor& loss);

// Plain matrix kernels shared with inference code.
void gemm_acc(const Matrix& a, const Matrix& b, Matrix& c);     // c += a b
void gemm_acc_bt(const Matrix& a, const Matrix& b, Matrix& c);  // c += a b^T
void gemm_acc_at(const Matrix& a, const Matrix& b, Matrix& c);  // c += a^T b

// Sparsemax of one row, sort-based threshold.
void sparsemax_row(std::span<const double> z, std::span<double> out);

}  // namespace qoe::ad
