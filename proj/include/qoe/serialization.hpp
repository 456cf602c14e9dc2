#pragma once

#include <json.hpp>

#include "qoe/metrics.hpp"
#include "qoe/preprocessing.hpp"
#include "qoe/regressor.hpp"

// Versioned JSON documents for trained models, fitted preprocessors and
// metric blocks.
namespace qoe {

using Json = nlohmann::ordered_json;

inline constexpr int kModelSchemaVersion = 1;

Json to_json(const Matrix& m);
Matrix matrix_from_json(const Json& j);

// {"schema_version", "kind", "params", "state"}
Json to_json(const Regressor& model);
Regressor regressor_from_json(const Json& j);

// Hyperparameters relevant to one model kind.
Json params_to_json(ModelKind kind, const ModelParams& params);

Json to_json(const Preprocessor& pre);
Preprocessor preprocessor_from_json(const Json& j);

Json to_json(const MetricBlock& m);

}  // namespace qoe
