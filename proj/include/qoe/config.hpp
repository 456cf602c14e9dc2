#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qoe/demographics.hpp"
#include "qoe/preprocessing.hpp"
#include "qoe/regressor.hpp"

namespace qoe {

// Flat `key = value` text. `[section]` lines prefix the keys that follow
// with "section."; `#` and `;` start comments.
class KeyValueConfig {
 public:
  static KeyValueConfig parse(std::string_view text, std::string_view origin = "<config>");
  static KeyValueConfig load(const std::filesystem::path& path);

  void set(std::string key, std::string value) { entries_[std::move(key)] = std::move(value); }
  std::optional<std::string> get(const std::string& key) const;
  const std::map<std::string, std::string>& entries() const noexcept { return entries_; }

 private:
  std::map<std::string, std::string> entries_;
};

struct DataSourceConfig {
  std::optional<std::filesystem::path> path;  // generator is used when absent
  std::size_t n = 450;
  std::uint64_t seed = 42;
};

struct ExperimentConfig {
  std::uint64_t seed = 42;
  DataSourceConfig data;
  AugmentationConfig augmentation{2.0, 12.0, 42, builtin_profiles()};
  SplitSpec split{0.2, SplitMode::grouped_by_session, 42};
  std::vector<ModelKind> roster{kAllModelKinds.begin(), kAllModelKinds.end()};
  ModelParams params;
  bool include_demographic = true;
  bool record_timing = false;
};

// Builds a config from key/value entries. `experiment.seed` (or
// `seed_override`, which wins) is the default for data/augment/split seeds
// that are not set explicitly. Unknown keys and bad values are validation
// errors.
ExperimentConfig experiment_from_config(const KeyValueConfig& kv,
                                        std::optional<std::uint64_t> seed_override = std::nullopt);

struct ConfigKeyDoc {
  std::string key;
  std::string default_value;
  std::string description;
};

// Every accepted key with its default, in documentation order. Profile keys
// are listed per profile.
std::vector<ConfigKeyDoc> config_reference();

// Current value of every documented key, for report echo.
std::vector<std::pair<std::string, std::string>> config_echo(const ExperimentConfig& cfg);

// Reads QOE_FORGE_SEED when set and numeric.
std::optional<std::uint64_t> seed_from_environment();

}  // namespace qoe
