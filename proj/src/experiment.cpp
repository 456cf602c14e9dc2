#include "qoe/experiment.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "qoe/error.hpp"
#include "qoe/rng.hpp"

namespace qoe {

namespace {

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string num(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

struct Prepared {
  Dataset base;
  Dataset augmented;
  Split base_split;
  Split augmented_split;
};

Prepared prepare(const ExperimentConfig& cfg) {
  Dataset base = load_base_dataset(cfg);
  Dataset augmented = augment_dataset(base, cfg.augmentation);
  Split base_split = split(base, cfg.split);
  Split aug_split = cfg.split.mode == SplitMode::grouped_by_session
                        ? split_by_groups(augmented, base_split.test_groups)
                        : split(augmented, cfg.split);
  return {std::move(base), std::move(augmented), std::move(base_split), std::move(aug_split)};
}

RunOutcome run_one(const Split& s, ModelKind kind, const ExperimentConfig& cfg, std::uint64_t seed,
                   bool include_demographic) {
  RunOutcome out;
  const auto start = std::chrono::steady_clock::now();
  try {
    const auto pipeline = train_pipeline(s.train, kind, cfg.params, seed, {include_demographic});
    out.metrics = evaluate_pipeline(pipeline, s.test);
  } catch (const Error& e) {
    out.error = ModelError{std::string(to_string(e.kind())), e.what()};
  } catch (const std::exception& e) {
    out.error = ModelError{"internal", e.what()};
  }
  if (cfg.record_timing)
    out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

Json outcome_json(const RunOutcome& o) {
  Json j = Json::object();
  if (o.metrics)
    j["metrics"] = to_json(*o.metrics);
  else if (o.error)
    j["error"] = {{"kind", o.error->kind}, {"message", o.error->message}};
  if (o.seconds) j["seconds"] = *o.seconds;
  return j;
}

Json opt_json(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

Json summary_json(const DatasetSummary& s) {
  return {{"source", s.source},
          {"rows", s.rows},
          {"hash", hex64(s.hash)},
          {"train_rows", s.train_rows},
          {"test_rows", s.test_rows}};
}

DatasetSummary summarize(const Dataset& d, const Split& s) {
  return {std::string(to_string(d.provenance().source)), d.size(), d.content_hash(), s.train.size(),
          s.test.size()};
}

}  // namespace

std::vector<double> TrainedPipeline::predict(const Dataset& data) const {
  return model.predict(transform(data, preprocessor).x);
}

Json to_json(const TrainedPipeline& pipeline) {
  return {{"schema_version", kModelSchemaVersion},
          {"preprocessor", to_json(pipeline.preprocessor)},
          {"model", to_json(pipeline.model)}};
}

TrainedPipeline pipeline_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("preprocessor") || !j.contains("model"))
    fail(ErrorKind::parse, "pipeline: expected 'preprocessor' and 'model' entries");
  if (!j.contains("schema_version") || j.at("schema_version") != kModelSchemaVersion)
    fail(ErrorKind::parse, "pipeline: unsupported schema_version");
  return {preprocessor_from_json(j.at("preprocessor")), regressor_from_json(j.at("model"))};
}

TrainedPipeline train_pipeline(const Dataset& train, ModelKind kind, const ModelParams& params,
                               std::uint64_t seed, const PreprocessOptions& options) {
  auto [design, pre] = fit_transform(train, options);
  Regressor model = train_regressor(kind, params, design.x, design.y, seed);
  return {std::move(pre), std::move(model)};
}

MetricBlock evaluate_pipeline(const TrainedPipeline& pipeline, const Dataset& test) {
  const auto design = transform(test, pipeline.preprocessor);
  const auto pred = pipeline.model.predict(design.x);
  return evaluate_predictions(design.y, pred);
}

std::uint64_t model_seed(std::uint64_t global_seed, ModelKind kind) {
  return derive_seed(global_seed, tag_of(to_string(kind)));
}

Dataset load_base_dataset(const ExperimentConfig& cfg) {
  if (!cfg.data.path) return generate_base_dataset(cfg.data.n, cfg.data.seed);
  Dataset d = read_csv(*cfg.data.path);
  if (d.has_demographic())
    fail(ErrorKind::validation,
         "'" + cfg.data.path->string() + "' is already augmented; a base dataset is required");
  if (d.empty()) fail(ErrorKind::validation, "'" + cfg.data.path->string() + "' has no rows");
  return d;
}

std::optional<double> percent_change(double base, double augmented) {
  if (!std::isfinite(base) || !std::isfinite(augmented) || base == 0.0) return std::nullopt;
  return 100.0 * (augmented - base) / std::abs(base);
}

ComparisonReport run_compare(const ExperimentConfig& cfg) {
  if (cfg.roster.empty()) fail(ErrorKind::validation, "roster must not be empty");
  const Prepared p = prepare(cfg);

  ComparisonReport report;
  report.config = config_echo(cfg);
  report.base = summarize(p.base, p.base_split);
  report.augmented = summarize(p.augmented, p.augmented_split);
  report.test_sessions = p.base_split.test_groups;

  for (ModelKind kind : cfg.roster) {
    ComparisonEntry e;
    e.model = kind;
    e.seed = model_seed(cfg.seed, kind);
    e.base = run_one(p.base_split, kind, cfg, e.seed, false);
    e.augmented = run_one(p.augmented_split, kind, cfg, e.seed, cfg.include_demographic);
    if (e.base.metrics && e.augmented.metrics) {
      e.change.rmse = percent_change(e.base.metrics->rmse, e.augmented.metrics->rmse);
      e.change.mae = percent_change(e.base.metrics->mae, e.augmented.metrics->mae);
      e.change.r2 = percent_change(e.base.metrics->r2, e.augmented.metrics->r2);
    }
    report.entries.push_back(std::move(e));
  }
  return report;
}

Json to_json(const ComparisonReport& report) {
  Json config = Json::object();
  for (const auto& [k, v] : report.config) config[k] = v;
  Json models = Json::array();
  for (const auto& e : report.entries) {
    models.push_back({{"model", std::string(to_string(e.model))},
                      {"seed", e.seed},
                      {"base", outcome_json(e.base)},
                      {"augmented", outcome_json(e.augmented)},
                      {"change_pct",
                       {{"rmse", opt_json(e.change.rmse)},
                        {"mae", opt_json(e.change.mae)},
                        {"r2", opt_json(e.change.r2)}}}});
  }
  return {{"schema_version", kReportSchemaVersion},
          {"config", std::move(config)},
          {"datasets", {{"base", summary_json(report.base)}, {"augmented", summary_json(report.augmented)}}},
          {"test_base_session_ids", report.test_sessions},
          {"models", std::move(models)}};
}

std::string comparison_csv(const ComparisonReport& report) {
  std::ostringstream os;
  os << "model";
  for (const char* side : {"base", "aug"})
    for (const char* m : {"rmse", "mae", "r2", "plcc", "srcc"}) os << ',' << side << '_' << m;
  os << ",rmse_change_pct,mae_change_pct,r2_change_pct\n";
  auto block = [&](const RunOutcome& o) {
    if (o.metrics)
      os << ',' << num(o.metrics->rmse) << ',' << num(o.metrics->mae) << ',' << num(o.metrics->r2) << ','
         << num(o.metrics->plcc) << ',' << num(o.metrics->srcc);
    else
      os << ",,,,,";
  };
  auto opt = [&](const std::optional<double>& v) {
    os << ',';
    if (v) os << num(*v);
  };
  for (const auto& e : report.entries) {
    os << to_string(e.model);
    block(e.base);
    block(e.augmented);
    opt(e.change.rmse);
    opt(e.change.mae);
    opt(e.change.r2);
    os << '\n';
  }
  return os.str();
}

std::string ScatterExport::to_csv() const {
  std::ostringstream os;
  os << "mos_true,mos_pred\n";
  for (std::size_t i = 0; i < truth.size(); ++i) os << num(truth[i]) << ',' << num(predicted[i]) << '\n';
  return os.str();
}

ScatterExport run_scatter_export(const ExperimentConfig& cfg, const ScatterOptions& options) {
  if (std::find(cfg.roster.begin(), cfg.roster.end(), options.model) == cfg.roster.end())
    fail(ErrorKind::invalid_argument,
         "model '" + std::string(to_string(options.model)) + "' is not in the roster");
  const Prepared p = prepare(cfg);
  const Split& s = options.augmented ? p.augmented_split : p.base_split;
  const auto pipeline = train_pipeline(s.train, options.model, cfg.params, model_seed(cfg.seed, options.model),
                                       {options.augmented && cfg.include_demographic});
  const Dataset& target = options.on_training_split ? s.train : s.test;
  const auto design = transform(target, pipeline.preprocessor);
  return {design.y, pipeline.model.predict(design.x)};
}

}  // namespace qoe
