#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qoe/config.hpp"
#include "qoe/metrics.hpp"
#include "qoe/preprocessing.hpp"
#include "qoe/regressor.hpp"
#include "qoe/serialization.hpp"

namespace qoe {

inline constexpr int kReportSchemaVersion = 1;

// Preprocessor fitted on the training split plus the model trained on its
// output; applies to raw datasets with the same schema.
struct TrainedPipeline {
  Preprocessor preprocessor;
  Regressor model;

  std::vector<double> predict(const Dataset& data) const;
};

Json to_json(const TrainedPipeline& pipeline);
TrainedPipeline pipeline_from_json(const Json& j);

TrainedPipeline train_pipeline(const Dataset& train, ModelKind kind, const ModelParams& params,
                               std::uint64_t seed, const PreprocessOptions& options = {});
MetricBlock evaluate_pipeline(const TrainedPipeline& pipeline, const Dataset& test);

// Seed handed to one roster model; independent of roster order.
std::uint64_t model_seed(std::uint64_t global_seed, ModelKind kind);

// Base sessions from data.path, or the generator when no path is set.
Dataset load_base_dataset(const ExperimentConfig& cfg);

struct ModelError {
  std::string kind;
  std::string message;
};

struct RunOutcome {
  std::optional<MetricBlock> metrics;
  std::optional<ModelError> error;
  std::optional<double> seconds;  // only with record_timing
};

struct ChangePct {
  std::optional<double> rmse;
  std::optional<double> mae;
  std::optional<double> r2;
};

struct ComparisonEntry {
  ModelKind model = ModelKind::linear_regression;
  std::uint64_t seed = 0;
  RunOutcome base;
  RunOutcome augmented;
  ChangePct change;
};

struct DatasetSummary {
  std::string source;
  std::size_t rows = 0;
  std::uint64_t hash = 0;
  std::size_t train_rows = 0;
  std::size_t test_rows = 0;
};

struct ComparisonReport {
  std::vector<std::pair<std::string, std::string>> config;
  DatasetSummary base;
  DatasetSummary augmented;
  std::vector<std::int64_t> test_sessions;  // base session ids held out
  std::vector<ComparisonEntry> entries;
};

// 100 * (augmented - base) / |base|; empty when either side failed or base is 0.
std::optional<double> percent_change(double base, double augmented);

// Trains every roster model on the base and on the augmented data. Both runs
// hold out the same base sessions (grouped mode). A failing model is
// recorded with its error and the run continues.
ComparisonReport run_compare(const ExperimentConfig& cfg);

Json to_json(const ComparisonReport& report);
// One row per model: raw metrics of both runs and the percentage changes.
std::string comparison_csv(const ComparisonReport& report);

struct ScatterOptions {
  ModelKind model = ModelKind::tabnet;
  bool augmented = true;
  bool on_training_split = false;
};

struct ScatterExport {
  std::vector<double> truth;
  std::vector<double> predicted;

  std::string to_csv() const;  // header mos_true,mos_pred
};

// (true, predicted) MOS on the test split (or the training split) of the
// same pipeline run_compare uses. The model must be in the roster.
ScatterExport run_scatter_export(const ExperimentConfig& cfg, const ScatterOptions& options);

}  // namespace qoe
