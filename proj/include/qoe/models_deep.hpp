#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "qoe/autodiff.hpp"
#include "qoe/matrix.hpp"

namespace qoe {

struct MlpConfig {
  std::vector<std::size_t> hidden{256, 128, 64};
  std::size_t attention_hidden = 128;  // AttentionMLP only
  double dropout = 0.2;
  double learning_rate = 1e-3;
  std::size_t batch_size = 256;
  std::size_t epochs = 40;
};

void validate(const MlpConfig& cfg);

// Plain MLP or AttentionMLP. The network is trained on a standardized target;
// predictions are mapped back with target_mean / target_scale.
struct MlpModel {
  MlpConfig config;
  bool attention = false;
  std::size_t n_features = 0;
  double target_mean = 0.0;
  double target_scale = 1.0;
  // Gate (W1 d×h, b1, W2 h×d, b2) when attention, then (W, b) per hidden
  // layer, then the 1-unit head.
  std::vector<Matrix> params;
  std::vector<double> loss_history;  // mean training loss per epoch

  std::vector<double> predict(const Matrix& x) const;
  // Attention gate alpha for each row (n × d). Attention models only.
  Matrix gate(const Matrix& x) const;
  // Column means of gate(x).
  std::vector<double> mean_gate(const Matrix& x) const;
};

// Glorot-uniform weights, zero biases.
MlpModel init_mlp(std::size_t n_features, const MlpConfig& cfg, bool attention, std::uint64_t seed);

MlpModel train_mlp(const Matrix& x, std::span<const double> y, const MlpConfig& cfg,
                   std::uint64_t seed);
MlpModel train_attention_mlp(const Matrix& x, std::span<const double> y, const MlpConfig& cfg,
                             std::uint64_t seed);

// MSE (on the standardized target) with dropout disabled; fills `grads`
// (same order/shape as model.params) when non-null.
double mlp_loss_and_grads(const MlpModel& model, const Matrix& x, std::span<const double> y,
                          std::vector<Matrix>* grads);

struct TabNetConfig {
  std::size_t n_steps = 3;
  double gamma = 1.3;
  double sparsity = 1e-3;
  std::size_t step_width = 32;
  std::size_t batch_size = 256;
  std::size_t virtual_batch = 128;
  std::size_t max_epochs = 120;
  std::size_t patience = 30;
  double learning_rate = 0.02;
  double momentum = 0.02;
  double validation_fraction = 0.15;
};

void validate(const TabNetConfig& cfg);

// TabNet-lite: per decision step an attentive transformer (linear d→d,
// ghost BN, prior scaling, sparsemax) picks a mask M, a two-block feature
// transformer processes x ⊙ M, the non-negative step outputs are summed and a
// linear head produces the prediction.
struct TabNetModel {
  TabNetConfig config;
  std::size_t n_features = 0;
  double target_mean = 0.0;
  double target_scale = 1.0;
  // Per step: att_W, att_gamma, att_beta, ft1_W, ft1_gamma, ft1_beta, ft2_W,
  // ft2_gamma, ft2_beta. Then head_W, head_b.
  std::vector<Matrix> params;
  // Three norms per step: attentive, ft1, ft2.
  std::vector<ad::BatchNormState> norms;
  std::vector<double> loss_history;
  std::vector<double> validation_history;
  std::size_t best_epoch = 0;  // 1-based epoch whose parameters were kept

  std::vector<double> predict(const Matrix& x) const;
  // Masks M(t) for each step, evaluated with frozen norm statistics.
  std::vector<Matrix> masks(const Matrix& x) const;
  // Sum over rows and steps of M(t) weighted by the step's output magnitude,
  // normalized to sum to 1.
  std::vector<double> feature_importance(const Matrix& x) const;
};

TabNetModel init_tabnet(std::size_t n_features, const TabNetConfig& cfg, std::uint64_t seed);

TabNetModel train_tabnet_lite(const Matrix& x, std::span<const double> y, const TabNetConfig& cfg,
                              std::uint64_t seed);

// MSE + sparsity * mean mask entropy on the standardized target. Norm
// statistics are read from (and in batch_stats mode updated in) a copy of
// the model's norms.
double tabnet_loss_and_grads(const TabNetModel& model, const Matrix& x, std::span<const double> y,
                             ad::NormMode mode, std::vector<Matrix>* grads);

// Prior after one step: prior ⊙ (gamma − mask).
Matrix update_prior(const Matrix& prior, const Matrix& mask, double gamma);

}  // namespace qoe
