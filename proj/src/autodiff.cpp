#include "qoe/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include "qoe/error.hpp"

namespace qoe::ad {

Matrix& Node::grad_buffer() {
  if (grad.empty() && !value.empty()) grad = Matrix(value.rows(), value.cols(), 0.0);
  return grad;
}

Tensor Tensor::constant(Matrix value) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  return Tensor(std::move(n));
}

Tensor Tensor::parameter(Matrix value) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->requires_grad = true;
  return Tensor(std::move(n));
}

const Matrix& Tensor::grad() const { return node_->grad_buffer(); }

void Tensor::zero_grad() {
  if (!node_->grad.empty()) std::fill(node_->grad.data().begin(), node_->grad.data().end(), 0.0);
}

std::string shape_string(const Matrix& m) {
  return "(" + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) + ")";
}

namespace {

Tensor make(Matrix value, std::vector<std::shared_ptr<Node>> inputs,
            std::function<void(Node&)> backward_fn) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->requires_grad = std::any_of(inputs.begin(), inputs.end(),
                                 [](const auto& in) { return in->requires_grad; });
  if (n->requires_grad) {
    n->inputs = std::move(inputs);
    n->backward = std::move(backward_fn);
  }
  return Tensor(std::move(n));
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    fail(ErrorKind::shape, std::string(op) + ": shape mismatch " + shape_string(a.value()) +
                               " vs " + shape_string(b.value()));
}

}  // namespace

void gemm_acc(const Matrix& a, const Matrix& b, Matrix& c) {
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  for (std::size_t i = 0; i < n; ++i) {
    double* ci = c.data().data() + i * m;
    const double* ai = a.data().data() + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = ai[p];
      if (av == 0.0) continue;
      const double* bp = b.data().data() + p * m;
      for (std::size_t j = 0; j < m; ++j) ci[j] += av * bp[j];
    }
  }
}

void gemm_acc_bt(const Matrix& a, const Matrix& b, Matrix& c) {
  const std::size_t n = a.rows(), k = a.cols(), m = b.rows();
  for (std::size_t i = 0; i < n; ++i) {
    const double* ai = a.data().data() + i * k;
    double* ci = c.data().data() + i * m;
    for (std::size_t j = 0; j < m; ++j) {
      const double* bj = b.data().data() + j * k;
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += ai[p] * bj[p];
      ci[j] += s;
    }
  }
}

void gemm_acc_at(const Matrix& a, const Matrix& b, Matrix& c) {
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  for (std::size_t i = 0; i < n; ++i) {
    const double* ai = a.data().data() + i * k;
    const double* bi = b.data().data() + i * m;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = ai[p];
      if (av == 0.0) continue;
      double* cp = c.data().data() + p * m;
      for (std::size_t j = 0; j < m; ++j) cp[j] += av * bi[j];
    }
  }
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows())
    fail(ErrorKind::shape, "matmul: shape mismatch " + shape_string(a.value()) + " vs " +
                               shape_string(b.value()));
  Matrix out(a.rows(), b.cols(), 0.0);
  gemm_acc(a.value(), b.value(), out);
  auto an = a.node(), bn = b.node();
  return make(std::move(out), {an, bn}, [an, bn](Node& self) {
    if (an->requires_grad) gemm_acc_bt(self.grad, bn->value, an->grad_buffer());
    if (bn->requires_grad) gemm_acc_at(an->value, self.grad, bn->grad_buffer());
  });
}

Tensor add_bias(const Tensor& x, const Tensor& bias) {
  if (bias.rows() != 1 || bias.cols() != x.cols())
    fail(ErrorKind::shape, "add_bias: shape mismatch " + shape_string(x.value()) + " vs " +
                               shape_string(bias.value()));
  Matrix out = x.value();
  for (std::size_t i = 0; i < out.rows(); ++i)
    for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) += bias.value()(0, j);
  auto xn = x.node(), bn = bias.node();
  return make(std::move(out), {xn, bn}, [xn, bn](Node& self) {
    if (xn->requires_grad) {
      auto& g = xn->grad_buffer().data();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad.data()[i];
    }
    if (bn->requires_grad) {
      auto& g = bn->grad_buffer();
      for (std::size_t i = 0; i < self.grad.rows(); ++i)
        for (std::size_t j = 0; j < self.grad.cols(); ++j) g(0, j) += self.grad(i, j);
    }
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  Matrix out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] += b.value().data()[i];
  auto an = a.node(), bn = b.node();
  return make(std::move(out), {an, bn}, [an, bn](Node& self) {
    for (auto* in : {an.get(), bn.get()}) {
      if (!in->requires_grad) continue;
      auto& g = in->grad_buffer().data();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad.data()[i];
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  Matrix out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] *= b.value().data()[i];
  auto an = a.node(), bn = b.node();
  return make(std::move(out), {an, bn}, [an, bn](Node& self) {
    const auto& g = self.grad.data();
    if (an->requires_grad) {
      auto& ga = an->grad_buffer().data();
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bn->value.data()[i];
    }
    if (bn->requires_grad) {
      auto& gb = bn->grad_buffer().data();
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * an->value.data()[i];
    }
  });
}

Tensor affine(const Tensor& a, double scale, double shift) {
  Matrix out = a.value();
  for (auto& v : out.data()) v = scale * v + shift;
  auto an = a.node();
  return make(std::move(out), {an}, [an, scale](Node& self) {
    auto& g = an->grad_buffer().data();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += scale * self.grad.data()[i];
  });
}

Tensor relu(const Tensor& a) {
  Matrix out = a.value();
  for (auto& v : out.data()) v = v > 0.0 ? v : 0.0;
  auto an = a.node();
  return make(std::move(out), {an}, [an](Node& self) {
    auto& g = an->grad_buffer().data();
    for (std::size_t i = 0; i < g.size(); ++i)
      if (an->value.data()[i] > 0.0) g[i] += self.grad.data()[i];
  });
}

Tensor sigmoid(const Tensor& a) {
  Matrix out = a.value();
  for (auto& v : out.data()) v = 1.0 / (1.0 + std::exp(-v));
  auto an = a.node();
  return make(std::move(out), {an}, [an](Node& self) {
    auto& g = an->grad_buffer().data();
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double s = self.value.data()[i];
      g[i] += self.grad.data()[i] * s * (1.0 - s);
    }
  });
}

Tensor dropout(const Tensor& a, double rate, Rng& rng, bool training) {
  if (!training || rate <= 0.0) return a;
  if (rate >= 1.0) fail(ErrorKind::invalid_argument, "dropout rate must be < 1");
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Matrix mask(a.rows(), a.cols());
  const double keep = 1.0 / (1.0 - rate);
  for (auto& m : mask.data()) m = unit(rng) >= rate ? keep : 0.0;
  Matrix out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] *= mask.data()[i];
  auto an = a.node();
  return make(std::move(out), {an}, [an, mask = std::move(mask)](Node& self) {
    auto& g = an->grad_buffer().data();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad.data()[i] * mask.data()[i];
  });
}

void sparsemax_row(std::span<const double> z, std::span<double> out) {
  // Work relative to the max (sparsemax is shift invariant): tied rows then
  // come out as exactly 1/k instead of picking up cancellation error.
  const double top = *std::max_element(z.begin(), z.end());
  std::vector<double> sorted(z.size());
  for (std::size_t j = 0; j < z.size(); ++j) sorted[j] = z[j] - top;
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double cumsum = 0.0, tau_sum = 0.0;
  std::size_t support = 0;
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    cumsum += sorted[k];
    if (1.0 + static_cast<double>(k + 1) * sorted[k] > cumsum) {
      support = k + 1;
      tau_sum = cumsum;
    }
  }
  const double tau = (tau_sum - 1.0) / static_cast<double>(support);
  for (std::size_t j = 0; j < z.size(); ++j) out[j] = std::max((z[j] - top) - tau, 0.0);
}

Tensor sparsemax(const Tensor& a) {
  Matrix out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) sparsemax_row(a.value().row(i), out.row(i));
  auto an = a.node();
  return make(std::move(out), {an}, [an](Node& self) {
    auto& g = an->grad_buffer();
    for (std::size_t i = 0; i < self.value.rows(); ++i) {
      const auto p = self.value.row(i);
      const auto up = self.grad.row(i);
      double s = 0.0;
      std::size_t k = 0;
      for (std::size_t j = 0; j < p.size(); ++j)
        if (p[j] > 0.0) {
          s += up[j];
          ++k;
        }
      const double v = s / static_cast<double>(k);
      for (std::size_t j = 0; j < p.size(); ++j)
        if (p[j] > 0.0) g(i, j) += up[j] - v;
    }
  });
}

Tensor mse_loss(const Tensor& pred, const Matrix& target) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols())
    fail(ErrorKind::shape, "mse_loss: shape mismatch " + shape_string(pred.value()) + " vs " +
                               shape_string(target));
  const double n = static_cast<double>(target.size());
  double s = 0.0;
  for (std::size_t i = 0; i < target.size(); ++i) {
    const double d = pred.value().data()[i] - target.data()[i];
    s += d * d;
  }
  auto pn = pred.node();
  return make(Matrix(1, 1, s / n), {pn}, [pn, target, n](Node& self) {
    const double up = self.grad(0, 0);
    auto& g = pn->grad_buffer().data();
    for (std::size_t i = 0; i < g.size(); ++i)
      g[i] += up * 2.0 * (pn->value.data()[i] - target.data()[i]) / n;
  });
}

Tensor mean_row_entropy(const Tensor& p, double eps) {
  const double rows = static_cast<double>(p.rows());
  double s = 0.0;
  for (double v : p.value().data()) s -= v * std::log(v + eps);
  auto pn = p.node();
  return make(Matrix(1, 1, s / rows), {pn}, [pn, eps, rows](Node& self) {
    const double up = self.grad(0, 0);
    auto& g = pn->grad_buffer().data();
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double v = pn->value.data()[i];
      g[i] -= up * (std::log(v + eps) + v / (v + eps)) / rows;
    }
  });
}

Tensor batch_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, BatchNormState& state,
                  const BatchNormOptions& options) {
  const std::size_t n = x.rows(), c = x.cols();
  if (gamma.rows() != 1 || gamma.cols() != c || beta.rows() != 1 || beta.cols() != c)
    fail(ErrorKind::shape, "batch_norm: shape mismatch " + shape_string(x.value()) + " vs " +
                               shape_string(gamma.value()));
  if (state.running_mean.cols() != c)
    fail(ErrorKind::shape, "batch_norm: running statistics have " +
                               std::to_string(state.running_mean.cols()) + " columns, input " +
                               shape_string(x.value()));
  auto xn = x.node(), gn = gamma.node(), bn = beta.node();
  const Matrix& xv = x.value();

  if (options.mode == NormMode::running_stats) {
    Matrix inv_std(1, c), xhat(n, c), out(n, c);
    for (std::size_t j = 0; j < c; ++j)
      inv_std(0, j) = 1.0 / std::sqrt(state.running_var(0, j) + options.eps);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < c; ++j) {
        xhat(i, j) = (xv(i, j) - state.running_mean(0, j)) * inv_std(0, j);
        out(i, j) = gamma.value()(0, j) * xhat(i, j) + beta.value()(0, j);
      }
    return make(std::move(out), {xn, gn, bn},
                [xn, gn, bn, inv_std, xhat = std::move(xhat)](Node& self) {
                  const Matrix& g = self.grad;
                  for (std::size_t i = 0; i < g.rows(); ++i)
                    for (std::size_t j = 0; j < g.cols(); ++j) {
                      if (xn->requires_grad)
                        xn->grad_buffer()(i, j) += g(i, j) * gn->value(0, j) * inv_std(0, j);
                      if (gn->requires_grad) gn->grad_buffer()(0, j) += g(i, j) * xhat(i, j);
                      if (bn->requires_grad) bn->grad_buffer()(0, j) += g(i, j);
                    }
                });
  }

  // Chunk boundaries for ghost batches.
  std::vector<std::size_t> bounds{0};
  const std::size_t vb = options.virtual_batch == 0 ? n : options.virtual_batch;
  for (std::size_t start = vb; start < n; start += vb) bounds.push_back(start);
  bounds.push_back(n);
  if (bounds.size() > 2 && bounds[bounds.size() - 1] - bounds[bounds.size() - 2] < 2)
    bounds = {0, n};

  const std::size_t chunks = bounds.size() - 1;
  Matrix xhat(n, c), out(n, c), inv_std(chunks, c);
  for (std::size_t k = 0; k < chunks; ++k) {
    const std::size_t lo = bounds[k], hi = bounds[k + 1];
    const double m = static_cast<double>(hi - lo);
    for (std::size_t j = 0; j < c; ++j) {
      double mean = 0.0;
      for (std::size_t i = lo; i < hi; ++i) mean += xv(i, j);
      mean /= m;
      double var = 0.0;
      for (std::size_t i = lo; i < hi; ++i) var += (xv(i, j) - mean) * (xv(i, j) - mean);
      var /= m;
      const double is = 1.0 / std::sqrt(var + options.eps);
      inv_std(k, j) = is;
      for (std::size_t i = lo; i < hi; ++i) {
        xhat(i, j) = (xv(i, j) - mean) * is;
        out(i, j) = gamma.value()(0, j) * xhat(i, j) + beta.value()(0, j);
      }
      const double unbiased = m > 1 ? var * m / (m - 1.0) : var;
      state.running_mean(0, j) =
          (1.0 - options.momentum) * state.running_mean(0, j) + options.momentum * mean;
      state.running_var(0, j) =
          (1.0 - options.momentum) * state.running_var(0, j) + options.momentum * unbiased;
    }
  }
  return make(std::move(out), {xn, gn, bn},
              [xn, gn, bn, bounds, inv_std = std::move(inv_std),
               xhat = std::move(xhat)](Node& self) {
                const Matrix& g = self.grad;
                const std::size_t cols = g.cols();
                for (std::size_t k = 0; k + 1 < bounds.size(); ++k) {
                  const std::size_t lo = bounds[k], hi = bounds[k + 1];
                  const double m = static_cast<double>(hi - lo);
                  for (std::size_t j = 0; j < cols; ++j) {
                    double sum_g = 0.0, sum_gx = 0.0;
                    for (std::size_t i = lo; i < hi; ++i) {
                      sum_g += g(i, j);
                      sum_gx += g(i, j) * xhat(i, j);
                    }
                    if (gn->requires_grad) gn->grad_buffer()(0, j) += sum_gx;
                    if (bn->requires_grad) bn->grad_buffer()(0, j) += sum_g;
                    if (xn->requires_grad) {
                      const double scale = gn->value(0, j) * inv_std(k, j) / m;
                      auto& gx = xn->grad_buffer();
                      for (std::size_t i = lo; i < hi; ++i)
                        gx(i, j) += scale * (m * g(i, j) - sum_g - xhat(i, j) * sum_gx);
                    }
                  }
                }
              });
}

void backward(const Tensor& loss) {
  if (loss.rows() != 1 || loss.cols() != 1)
    fail(ErrorKind::shape, "backward: loss must be 1x1, got " + shape_string(loss.value()));
  if (!loss.requires_grad()) return;

  // Iterative post-order DFS gives a topological order.
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, std::size_t>> stack{{loss.node().get(), 0}};
  seen.insert(loss.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      Node* child = node->inputs[next++].get();
      if (child->requires_grad && seen.insert(child).second) stack.emplace_back(child, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  loss.node()->grad_buffer()(0, 0) += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* node = *it;
    if (node->backward && !node->grad.empty()) node->backward(*node);
  }
}

}  // namespace qoe::ad
