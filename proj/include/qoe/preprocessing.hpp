#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qoe/data_model.hpp"
#include "qoe/matrix.hpp"

namespace qoe {

// Dense label -> code map; codes follow first appearance in the fitting rows.
struct ColumnEncoder {
  std::string column;
  std::vector<std::string> labels;

  std::optional<std::size_t> code(const std::string& label) const;
  // Code handed to labels never seen while fitting.
  std::size_t reserved_code() const noexcept { return labels.size(); }
};

struct FeatureScaling {
  std::string column;
  bool categorical = false;
  ColumnEncoder encoder;  // only meaningful when categorical
  double mean = 0.0;
  double stddev = 1.0;    // population standard deviation, always > 0
};

// Everything learned from the training split.
struct Preprocessor {
  std::vector<ColumnSpec> schema;
  std::vector<FeatureScaling> features;
  std::vector<std::string> dropped_constant;
  bool include_demographic = true;

  std::vector<std::string> feature_names() const;
};

struct DesignMatrix {
  Matrix x;
  std::vector<double> y;
  std::vector<std::string> warnings;
};

struct PreprocessOptions {
  bool include_demographic = true;
};

// Label-encodes categoricals (demographic included unless disabled), drops
// meta/group columns, drops constant columns, standardizes the rest.
std::pair<DesignMatrix, Preprocessor> fit_transform(const Dataset& train,
                                                    const PreprocessOptions& options = {});
DesignMatrix transform(const Dataset& data, const Preprocessor& fitted);

enum class SplitMode { grouped_by_session, iid };

std::string_view to_string(SplitMode mode);
std::optional<SplitMode> parse_split_mode(std::string_view name);

struct SplitSpec {
  double test_fraction = 0.2;
  SplitMode mode = SplitMode::grouped_by_session;
  std::uint64_t seed = 0;
};

struct Split {
  Dataset train;
  Dataset test;
  // Sorted group ids (base_session_id, or session_id for plain data) of the
  // test side.
  std::vector<std::int64_t> test_groups;
};

// Grouped mode keeps every row of a group on one side and puts
// round(test_fraction * groups) groups in the test set; iid mode puts
// round(test_fraction * rows) rows there. Rows keep their input order.
Split split(const Dataset& dataset, const SplitSpec& spec);

// Partition by an explicit set of test groups.
Split split_by_groups(const Dataset& dataset, const std::vector<std::int64_t>& test_groups);

}  // namespace qoe
