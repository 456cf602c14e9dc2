#include "qoe/models_deep.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "qoe/error.hpp"

namespace qoe {

using ad::Tensor;

namespace {

Matrix glorot(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> u(-limit, limit);
  Matrix w(fan_in, fan_out);
  for (auto& v : w.data()) v = u(rng);
  return w;
}

class Adam {
 public:
  Adam(std::vector<Tensor>& params, double lr) : params_(params), lr_(lr) {
    for (const auto& p : params_) {
      m_.emplace_back(p.rows(), p.cols(), 0.0);
      v_.emplace_back(p.rows(), p.cols(), 0.0);
    }
  }

  void zero_grad() {
    for (auto& p : params_) p.zero_grad();
  }

  void step() {
    ++t_;
    const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
    for (std::size_t k = 0; k < params_.size(); ++k) {
      auto& w = params_[k].mutable_value().data();
      const auto& g = params_[k].grad().data();
      auto& m = m_[k].data();
      auto& v = v_[k].data();
      for (std::size_t i = 0; i < w.size(); ++i) {
        m[i] = kBeta1 * m[i] + (1.0 - kBeta1) * g[i];
        v[i] = kBeta2 * v[i] + (1.0 - kBeta2) * g[i] * g[i];
        w[i] -= lr_ * (m[i] / c1) / (std::sqrt(v[i] / c2) + kEps);
      }
    }
  }

 private:
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;
  std::vector<Tensor>& params_;
  double lr_;
  std::vector<Matrix> m_, v_;
  std::uint64_t t_ = 0;
};

std::vector<Tensor> as_parameters(const std::vector<Matrix>& values) {
  std::vector<Tensor> out;
  for (const auto& v : values) out.push_back(Tensor::parameter(v));
  return out;
}

std::vector<Tensor> as_constants(const std::vector<Matrix>& values) {
  std::vector<Tensor> out;
  for (const auto& v : values) out.push_back(Tensor::constant(v));
  return out;
}

void check_training_input(const Matrix& x, std::span<const double> y, const char* who) {
  if (x.rows() != y.size())
    fail(ErrorKind::shape, std::string(who) + ": X has " + std::to_string(x.rows()) +
                               " rows but y has " + std::to_string(y.size()));
  if (x.rows() == 0 || x.cols() == 0)
    fail(ErrorKind::invalid_argument, std::string(who) + ": empty training data");
}

std::pair<double, double> target_scaling(std::span<const double> y) {
  const double n = static_cast<double>(y.size());
  const double mean = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : y) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / n);
  return {mean, sd > 0.0 ? sd : 1.0};
}

Matrix standardized_column(std::span<const double> y, std::span<const std::size_t> rows,
                           double mean, double scale) {
  Matrix out(rows.size(), 1);
  for (std::size_t i = 0; i < rows.size(); ++i) out(i, 0) = (y[rows[i]] - mean) / scale;
  return out;
}

std::vector<std::size_t> iota_n(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), std::size_t{0});
  return v;
}

// ---- MLP ------------------------------------------------------------------

struct MlpPass {
  Tensor out;
  Tensor gate;
};

MlpPass mlp_forward(const std::vector<Tensor>& p, const MlpModel& shape, const Tensor& x,
                    Rng* rng, bool training) {
  std::size_t k = 0;
  MlpPass pass;
  Tensor h = x;
  if (shape.attention) {
    const Tensor a = ad::relu(ad::add_bias(ad::matmul(x, p[0]), p[1]));
    pass.gate = ad::sigmoid(ad::add_bias(ad::matmul(a, p[2]), p[3]));
    h = ad::mul(x, pass.gate);
    k = 4;
  }
  for (std::size_t l = 0; l < shape.config.hidden.size(); ++l, k += 2) {
    h = ad::relu(ad::add_bias(ad::matmul(h, p[k]), p[k + 1]));
    if (training) h = ad::dropout(h, shape.config.dropout, *rng, true);
  }
  pass.out = ad::add_bias(ad::matmul(h, p[k]), p[k + 1]);
  return pass;
}

MlpModel train_mlp_impl(const Matrix& x, std::span<const double> y, const MlpConfig& cfg,
                        bool attention, std::uint64_t seed) {
  validate(cfg);
  check_training_input(x, y, attention ? "train_attention_mlp" : "train_mlp");
  MlpModel model = init_mlp(x.cols(), cfg, attention, derive_seed(seed, tag_of("init")));
  std::tie(model.target_mean, model.target_scale) = target_scaling(y);

  Rng rng(derive_seed(seed, tag_of("train")));
  std::vector<Tensor> params = as_parameters(model.params);
  Adam adam(params, cfg.learning_rate);
  const std::size_t n = x.rows();
  std::vector<std::size_t> order = iota_n(n);

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    for (std::size_t start = 0; start < n; start += cfg.batch_size) {
      const std::size_t end = std::min(n, start + cfg.batch_size);
      const std::span<const std::size_t> rows(order.data() + start, end - start);
      const Tensor xb = Tensor::constant(x.select_rows(rows));
      const Matrix yb = standardized_column(y, rows, model.target_mean, model.target_scale);
      adam.zero_grad();
      const Tensor loss = ad::mse_loss(mlp_forward(params, model, xb, &rng, true).out, yb);
      const double lv = loss.value()(0, 0);
      if (!std::isfinite(lv))
        fail(ErrorKind::divergence, "training loss became non-finite in epoch " +
                                        std::to_string(epoch));
      ad::backward(loss);
      adam.step();
      total += lv * static_cast<double>(rows.size());
    }
    model.loss_history.push_back(total / static_cast<double>(n));
  }
  for (std::size_t k = 0; k < params.size(); ++k) model.params[k] = params[k].value();
  return model;
}

// ---- TabNet ---------------------------------------------------------------

constexpr std::size_t kParamsPerStep = 9;

struct TabNetPass {
  Tensor out;
  Tensor sparsity;  // mean mask entropy over steps
  std::vector<Tensor> masks;
  std::vector<Tensor> step_outputs;
};

TabNetPass tabnet_forward(const std::vector<Tensor>& p, std::vector<ad::BatchNormState>& norms,
                          const TabNetConfig& cfg, const Tensor& x, ad::NormMode mode) {
  ad::BatchNormOptions opts;
  opts.mode = mode;
  opts.virtual_batch = cfg.virtual_batch;
  opts.momentum = cfg.momentum;

  TabNetPass pass;
  Tensor prior = Tensor::constant(Matrix(x.rows(), x.cols(), 1.0));
  Tensor aggregate, entropy;
  for (std::size_t t = 0; t < cfg.n_steps; ++t) {
    const std::size_t b = t * kParamsPerStep;
    Tensor a = ad::batch_norm(ad::matmul(x, p[b]), p[b + 1], p[b + 2], norms[3 * t], opts);
    const Tensor mask = ad::sparsemax(ad::mul(a, prior));
    prior = ad::mul(prior, ad::affine(mask, -1.0, cfg.gamma));

    Tensor h = ad::mul(x, mask);
    h = ad::relu(ad::batch_norm(ad::matmul(h, p[b + 3]), p[b + 4], p[b + 5], norms[3 * t + 1], opts));
    h = ad::relu(ad::batch_norm(ad::matmul(h, p[b + 6]), p[b + 7], p[b + 8], norms[3 * t + 2], opts));

    aggregate = aggregate.valid() ? ad::add(aggregate, h) : h;
    const Tensor ent = ad::mean_row_entropy(mask);
    entropy = entropy.valid() ? ad::add(entropy, ent) : ent;
    pass.masks.push_back(mask);
    pass.step_outputs.push_back(h);
  }
  const std::size_t head = cfg.n_steps * kParamsPerStep;
  pass.out = ad::add_bias(ad::matmul(aggregate, p[head]), p[head + 1]);
  pass.sparsity = ad::affine(entropy, 1.0 / static_cast<double>(cfg.n_steps), 0.0);
  return pass;
}

Tensor tabnet_objective(const TabNetPass& pass, const Matrix& target, double sparsity) {
  return ad::add(ad::mse_loss(pass.out, target), ad::affine(pass.sparsity, sparsity, 0.0));
}

double eval_mse(const std::vector<Tensor>& p, std::vector<ad::BatchNormState> norms,
                const TabNetConfig& cfg, const Matrix& x, const Matrix& target) {
  const TabNetPass pass =
      tabnet_forward(p, norms, cfg, Tensor::constant(x), ad::NormMode::running_stats);
  return ad::mse_loss(pass.out, target).value()(0, 0);
}

}  // namespace

void validate(const MlpConfig& cfg) {
  if (cfg.hidden.empty() ||
      std::any_of(cfg.hidden.begin(), cfg.hidden.end(), [](std::size_t h) { return h == 0; }))
    fail(ErrorKind::invalid_argument, "mlp: hidden sizes must be positive");
  if (cfg.attention_hidden == 0) fail(ErrorKind::invalid_argument, "mlp: attention_hidden must be > 0");
  if (!(cfg.dropout >= 0.0 && cfg.dropout < 1.0))
    fail(ErrorKind::invalid_argument, "mlp: dropout must lie in [0,1)");
  if (!(cfg.learning_rate > 0.0)) fail(ErrorKind::invalid_argument, "mlp: learning_rate must be > 0");
  if (cfg.batch_size == 0 || cfg.epochs == 0)
    fail(ErrorKind::invalid_argument, "mlp: batch_size and epochs must be > 0");
}

void validate(const TabNetConfig& cfg) {
  if (cfg.n_steps == 0) fail(ErrorKind::invalid_argument, "tabnet: n_steps must be >= 1");
  if (!(cfg.gamma >= 1.0)) fail(ErrorKind::invalid_argument, "tabnet: gamma must be >= 1");
  if (!(cfg.sparsity >= 0.0)) fail(ErrorKind::invalid_argument, "tabnet: sparsity must be >= 0");
  if (cfg.step_width == 0 || cfg.batch_size == 0 || cfg.virtual_batch == 0 || cfg.max_epochs == 0)
    fail(ErrorKind::invalid_argument, "tabnet: sizes must be positive");
  if (cfg.virtual_batch > cfg.batch_size)
    fail(ErrorKind::invalid_argument, "tabnet: virtual_batch must not exceed batch_size");
  if (!(cfg.learning_rate > 0.0)) fail(ErrorKind::invalid_argument, "tabnet: learning_rate must be > 0");
  if (!(cfg.momentum > 0.0 && cfg.momentum <= 1.0))
    fail(ErrorKind::invalid_argument, "tabnet: momentum must lie in (0,1]");
  if (!(cfg.validation_fraction > 0.0 && cfg.validation_fraction < 1.0))
    fail(ErrorKind::invalid_argument, "tabnet: validation_fraction must lie in (0,1)");
}

MlpModel init_mlp(std::size_t n_features, const MlpConfig& cfg, bool attention, std::uint64_t seed) {
  validate(cfg);
  MlpModel model;
  model.config = cfg;
  model.attention = attention;
  model.n_features = n_features;
  Rng rng(seed);
  if (attention) {
    model.params.push_back(glorot(n_features, cfg.attention_hidden, rng));
    model.params.emplace_back(1, cfg.attention_hidden, 0.0);
    model.params.push_back(glorot(cfg.attention_hidden, n_features, rng));
    model.params.emplace_back(1, n_features, 0.0);
  }
  std::size_t fan_in = n_features;
  for (std::size_t h : cfg.hidden) {
    model.params.push_back(glorot(fan_in, h, rng));
    model.params.emplace_back(1, h, 0.0);
    fan_in = h;
  }
  model.params.push_back(glorot(fan_in, 1, rng));
  model.params.emplace_back(1, 1, 0.0);
  return model;
}

MlpModel train_mlp(const Matrix& x, std::span<const double> y, const MlpConfig& cfg,
                   std::uint64_t seed) {
  return train_mlp_impl(x, y, cfg, false, seed);
}

MlpModel train_attention_mlp(const Matrix& x, std::span<const double> y, const MlpConfig& cfg,
                             std::uint64_t seed) {
  return train_mlp_impl(x, y, cfg, true, seed);
}

std::vector<double> MlpModel::predict(const Matrix& x) const {
  if (x.cols() != n_features)
    fail(ErrorKind::shape, "mlp expects " + std::to_string(n_features) + " features, got " +
                               std::to_string(x.cols()));
  const auto pass = mlp_forward(as_constants(params), *this, Tensor::constant(x), nullptr, false);
  std::vector<double> out(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i)
    out[i] = pass.out.value()(i, 0) * target_scale + target_mean;
  return out;
}

Matrix MlpModel::gate(const Matrix& x) const {
  if (!attention) fail(ErrorKind::invalid_argument, "gate: model has no attention block");
  if (x.cols() != n_features)
    fail(ErrorKind::shape, "gate expects " + std::to_string(n_features) + " features");
  return mlp_forward(as_constants(params), *this, Tensor::constant(x), nullptr, false)
      .gate.value();
}

std::vector<double> MlpModel::mean_gate(const Matrix& x) const {
  const Matrix g = gate(x);
  std::vector<double> out(g.cols(), 0.0);
  for (std::size_t i = 0; i < g.rows(); ++i)
    for (std::size_t j = 0; j < g.cols(); ++j) out[j] += g(i, j);
  for (auto& v : out) v /= static_cast<double>(g.rows());
  return out;
}

double mlp_loss_and_grads(const MlpModel& model, const Matrix& x, std::span<const double> y,
                          std::vector<Matrix>* grads) {
  check_training_input(x, y, "mlp_loss_and_grads");
  std::vector<Tensor> params = as_parameters(model.params);
  const auto rows = iota_n(x.rows());
  const Matrix target = standardized_column(y, rows, model.target_mean, model.target_scale);
  const Tensor loss =
      ad::mse_loss(mlp_forward(params, model, Tensor::constant(x), nullptr, false).out, target);
  if (grads) {
    ad::backward(loss);
    grads->clear();
    for (const auto& p : params) grads->push_back(p.grad());
  }
  return loss.value()(0, 0);
}

Matrix update_prior(const Matrix& prior, const Matrix& mask, double gamma) {
  if (prior.rows() != mask.rows() || prior.cols() != mask.cols())
    fail(ErrorKind::shape, "update_prior: shape mismatch " + ad::shape_string(prior) + " vs " +
                               ad::shape_string(mask));
  Matrix out = prior;
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] *= gamma - mask.data()[i];
  return out;
}

TabNetModel init_tabnet(std::size_t n_features, const TabNetConfig& cfg, std::uint64_t seed) {
  validate(cfg);
  TabNetModel model;
  model.config = cfg;
  model.n_features = n_features;
  Rng rng(seed);
  const std::size_t d = n_features, w = cfg.step_width;
  auto norm_params = [&](std::size_t c) {
    model.params.emplace_back(1, c, 1.0);
    model.params.emplace_back(1, c, 0.0);
    model.norms.emplace_back(c);
  };
  for (std::size_t t = 0; t < cfg.n_steps; ++t) {
    model.params.push_back(glorot(d, d, rng));
    norm_params(d);
    model.params.push_back(glorot(d, w, rng));
    norm_params(w);
    model.params.push_back(glorot(w, w, rng));
    norm_params(w);
  }
  model.params.push_back(glorot(w, 1, rng));
  model.params.emplace_back(1, 1, 0.0);
  return model;
}

TabNetModel train_tabnet_lite(const Matrix& x, std::span<const double> y, const TabNetConfig& cfg,
                              std::uint64_t seed) {
  validate(cfg);
  check_training_input(x, y, "train_tabnet_lite");
  const std::size_t n = x.rows();
  if (n < 2) fail(ErrorKind::invalid_argument, "train_tabnet_lite: need at least 2 rows");

  TabNetModel model = init_tabnet(x.cols(), cfg, derive_seed(seed, tag_of("init")));
  Rng rng(derive_seed(seed, tag_of("train")));

  std::vector<std::size_t> perm = iota_n(n);
  std::shuffle(perm.begin(), perm.end(), rng);
  const std::size_t n_val = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::llround(cfg.validation_fraction * static_cast<double>(n))), 1,
      n - 1);
  std::vector<std::size_t> val_rows(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_val));
  std::vector<std::size_t> train_rows(perm.begin() + static_cast<std::ptrdiff_t>(n_val), perm.end());
  std::sort(val_rows.begin(), val_rows.end());
  std::sort(train_rows.begin(), train_rows.end());

  std::vector<double> y_train;
  for (auto r : train_rows) y_train.push_back(y[r]);
  std::tie(model.target_mean, model.target_scale) = target_scaling(y_train);
  const Matrix x_val = x.select_rows(val_rows);
  const Matrix y_val = standardized_column(y, val_rows, model.target_mean, model.target_scale);

  std::vector<Tensor> params = as_parameters(model.params);
  Adam adam(params, cfg.learning_rate);
  std::vector<Matrix> best_params = model.params;
  std::vector<ad::BatchNormState> best_norms = model.norms;
  double best_val = std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    std::shuffle(train_rows.begin(), train_rows.end(), rng);
    double total = 0.0;
    for (std::size_t start = 0; start < train_rows.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(train_rows.size(), start + cfg.batch_size);
      const std::span<const std::size_t> rows(train_rows.data() + start, end - start);
      const Tensor xb = Tensor::constant(x.select_rows(rows));
      const Matrix yb = standardized_column(y, rows, model.target_mean, model.target_scale);
      adam.zero_grad();
      const TabNetPass pass =
          tabnet_forward(params, model.norms, cfg, xb, ad::NormMode::batch_stats);
      const Tensor loss = tabnet_objective(pass, yb, cfg.sparsity);
      const double lv = loss.value()(0, 0);
      if (!std::isfinite(lv))
        fail(ErrorKind::divergence, "training loss became non-finite in epoch " +
                                        std::to_string(epoch));
      ad::backward(loss);
      adam.step();
      total += lv * static_cast<double>(rows.size());
    }
    model.loss_history.push_back(total / static_cast<double>(train_rows.size()));

    const double val = eval_mse(params, model.norms, cfg, x_val, y_val);
    if (!std::isfinite(val))
      fail(ErrorKind::divergence, "validation loss became non-finite in epoch " +
                                      std::to_string(epoch));
    model.validation_history.push_back(val);
    if (val < best_val) {
      best_val = val;
      model.best_epoch = epoch;
      for (std::size_t k = 0; k < params.size(); ++k) best_params[k] = params[k].value();
      best_norms = model.norms;
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      break;
    }
  }
  model.params = std::move(best_params);
  model.norms = std::move(best_norms);
  return model;
}

std::vector<double> TabNetModel::predict(const Matrix& x) const {
  if (x.cols() != n_features)
    fail(ErrorKind::shape, "tabnet expects " + std::to_string(n_features) + " features, got " +
                               std::to_string(x.cols()));
  auto norms_copy = norms;
  const auto pass = tabnet_forward(as_constants(params), norms_copy, config, Tensor::constant(x),
                                   ad::NormMode::running_stats);
  std::vector<double> out(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i)
    out[i] = pass.out.value()(i, 0) * target_scale + target_mean;
  return out;
}

std::vector<Matrix> TabNetModel::masks(const Matrix& x) const {
  if (x.cols() != n_features) fail(ErrorKind::shape, "tabnet: feature count mismatch");
  auto norms_copy = norms;
  const auto pass = tabnet_forward(as_constants(params), norms_copy, config, Tensor::constant(x),
                                   ad::NormMode::running_stats);
  std::vector<Matrix> out;
  for (const auto& m : pass.masks) out.push_back(m.value());
  return out;
}

std::vector<double> TabNetModel::feature_importance(const Matrix& x) const {
  if (x.cols() != n_features) fail(ErrorKind::shape, "tabnet: feature count mismatch");
  auto norms_copy = norms;
  const auto pass = tabnet_forward(as_constants(params), norms_copy, config, Tensor::constant(x),
                                   ad::NormMode::running_stats);
  std::vector<double> imp(n_features, 0.0);
  for (std::size_t t = 0; t < pass.masks.size(); ++t) {
    const Matrix& m = pass.masks[t].value();
    const Matrix& h = pass.step_outputs[t].value();
    for (std::size_t i = 0; i < m.rows(); ++i) {
      double eta = 0.0;
      for (std::size_t c = 0; c < h.cols(); ++c) eta += h(i, c);
      for (std::size_t j = 0; j < n_features; ++j) imp[j] += eta * m(i, j);
    }
  }
  const double total = std::accumulate(imp.begin(), imp.end(), 0.0);
  for (auto& v : imp) v = total > 0.0 ? v / total : 1.0 / static_cast<double>(n_features);
  return imp;
}

double tabnet_loss_and_grads(const TabNetModel& model, const Matrix& x, std::span<const double> y,
                             ad::NormMode mode, std::vector<Matrix>* grads) {
  check_training_input(x, y, "tabnet_loss_and_grads");
  std::vector<Tensor> params = as_parameters(model.params);
  auto norms = model.norms;
  const Matrix target = standardized_column(y, iota_n(x.rows()), model.target_mean, model.target_scale);
  const TabNetPass pass = tabnet_forward(params, norms, model.config, Tensor::constant(x), mode);
  const Tensor loss = tabnet_objective(pass, target, model.config.sparsity);
  if (grads) {
    ad::backward(loss);
    grads->clear();
    for (const auto& p : params) grads->push_back(p.grad());
  }
  return loss.value()(0, 0);
}

}  // namespace qoe
