#include "qoe/preprocessing.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "qoe/error.hpp"
#include "qoe/rng.hpp"

namespace qoe {

std::optional<std::size_t> ColumnEncoder::code(const std::string& label) const {
  auto it = std::find(labels.begin(), labels.end(), label);
  if (it == labels.end()) return std::nullopt;
  return static_cast<std::size_t>(it - labels.begin());
}

std::vector<std::string> Preprocessor::feature_names() const {
  std::vector<std::string> names;
  for (const auto& f : features) names.push_back(f.column);
  return names;
}

namespace {

bool is_feature(const ColumnSpec& c, bool include_demographic) {
  if (c.name == kDemographicColumn) return include_demographic;
  return c.kind == ColumnKind::numeric || c.kind == ColumnKind::categorical;
}

void check_schema(const Dataset& data, const Preprocessor& fitted) {
  if (data.schema() == fitted.schema) return;
  // Meta columns may differ; every fitted feature column must be present with
  // the same kind.
  for (const auto& f : fitted.features) {
    const ColumnSpec* c = data.find_column(f.column);
    if (c == nullptr)
      fail(ErrorKind::schema_mismatch, "transform: missing feature column '" + f.column + "'");
    if ((c->kind == ColumnKind::categorical) != f.categorical)
      fail(ErrorKind::schema_mismatch, "transform: column '" + f.column + "' changed kind");
  }
}

}  // namespace

std::pair<DesignMatrix, Preprocessor> fit_transform(const Dataset& train,
                                                    const PreprocessOptions& options) {
  if (train.empty()) fail(ErrorKind::invalid_argument, "fit_transform: training set is empty");
  Preprocessor pre;
  pre.schema = train.schema();
  pre.include_demographic = options.include_demographic;
  const double n = static_cast<double>(train.size());
  std::vector<std::string> warnings;

  for (const auto& col : train.schema()) {
    if (!is_feature(col, options.include_demographic)) continue;
    FeatureScaling f;
    f.column = col.name;
    f.categorical = col.kind == ColumnKind::categorical;
    f.encoder.column = col.name;
    std::vector<double> values;
    values.reserve(train.size());
    for (const auto& r : train.rows()) {
      if (f.categorical) {
        const std::string& label = categorical_field(r, col.name);
        auto code = f.encoder.code(label);
        if (!code) {
          code = f.encoder.labels.size();
          f.encoder.labels.push_back(label);
        }
        values.push_back(static_cast<double>(*code));
      } else {
        values.push_back(numeric_field(r, col.name));
      }
    }
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / n);
    if (!(sd > 0.0)) {
      pre.dropped_constant.push_back(col.name);
      warnings.push_back("column '" + col.name + "' is constant on the training split; dropped");
      continue;
    }
    f.mean = mean;
    f.stddev = sd;
    pre.features.push_back(std::move(f));
  }
  if (pre.features.empty())
    fail(ErrorKind::invalid_argument, "fit_transform: no non-constant feature columns");

  DesignMatrix dm = transform(train, pre);
  dm.warnings.insert(dm.warnings.begin(), warnings.begin(), warnings.end());
  return {std::move(dm), std::move(pre)};
}

DesignMatrix transform(const Dataset& data, const Preprocessor& fitted) {
  check_schema(data, fitted);
  DesignMatrix dm;
  dm.x = Matrix(data.size(), fitted.features.size());
  dm.y.reserve(data.size());
  std::vector<std::set<std::string>> unseen(fitted.features.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const Record& r = data.rows()[i];
    for (std::size_t j = 0; j < fitted.features.size(); ++j) {
      const FeatureScaling& f = fitted.features[j];
      double raw;
      if (f.categorical) {
        const std::string& label = categorical_field(r, f.column);
        auto code = f.encoder.code(label);
        if (!code) {
          unseen[j].insert(label);
          code = f.encoder.reserved_code();
        }
        raw = static_cast<double>(*code);
      } else {
        raw = numeric_field(r, f.column);
      }
      dm.x(i, j) = (raw - f.mean) / f.stddev;
    }
    dm.y.push_back(r.session.mos);
  }
  for (std::size_t j = 0; j < unseen.size(); ++j)
    for (const auto& label : unseen[j])
      dm.warnings.push_back("column '" + fitted.features[j].column + "': unseen label '" + label +
                            "' mapped to reserved code " +
                            std::to_string(fitted.features[j].encoder.reserved_code()));
  return dm;
}

std::string_view to_string(SplitMode mode) {
  return mode == SplitMode::iid ? "iid" : "grouped_by_session";
}

std::optional<SplitMode> parse_split_mode(std::string_view name) {
  if (name == "iid") return SplitMode::iid;
  if (name == "grouped_by_session" || name == "grouped") return SplitMode::grouped_by_session;
  return std::nullopt;
}

Split split_by_groups(const Dataset& dataset, const std::vector<std::int64_t>& test_groups) {
  const std::set<std::int64_t> test(test_groups.begin(), test_groups.end());
  std::vector<Record> train_rows, test_rows;
  for (const auto& r : dataset.rows())
    (test.count(dataset.group_of(r)) ? test_rows : train_rows).push_back(r);
  if (train_rows.empty() || test_rows.empty())
    fail(ErrorKind::invalid_argument, "split leaves one side empty");
  return Split{dataset.with_rows(std::move(train_rows)), dataset.with_rows(std::move(test_rows)),
               std::vector<std::int64_t>(test.begin(), test.end())};
}

Split split(const Dataset& dataset, const SplitSpec& spec) {
  if (!(spec.test_fraction > 0.0 && spec.test_fraction < 1.0))
    fail(ErrorKind::invalid_argument, "split: test_fraction must lie in (0,1)");
  if (dataset.size() < 5)
    fail(ErrorKind::invalid_argument, "split: need at least 5 rows, got " +
                                          std::to_string(dataset.size()));
  Rng rng(derive_seed(spec.seed, tag_of("split")));

  if (spec.mode == SplitMode::grouped_by_session) {
    std::set<std::int64_t> distinct;
    for (const auto& r : dataset.rows()) distinct.insert(dataset.group_of(r));
    std::vector<std::int64_t> groups(distinct.begin(), distinct.end());
    const auto n_test = static_cast<std::size_t>(
        std::llround(spec.test_fraction * static_cast<double>(groups.size())));
    if (groups.size() < 2 || n_test == 0 || n_test >= groups.size())
      fail(ErrorKind::invalid_argument, "split: too few groups (" + std::to_string(groups.size()) +
                                            ") for test_fraction");
    std::shuffle(groups.begin(), groups.end(), rng);
    groups.resize(n_test);
    std::sort(groups.begin(), groups.end());
    return split_by_groups(dataset, groups);
  }

  const std::size_t n = dataset.size();
  const auto n_test =
      static_cast<std::size_t>(std::llround(spec.test_fraction * static_cast<double>(n)));
  if (n_test == 0 || n_test >= n)
    fail(ErrorKind::invalid_argument, "split: too few rows for test_fraction");
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::shuffle(idx.begin(), idx.end(), rng);
  std::vector<char> in_test(n, 0);
  for (std::size_t i = 0; i < n_test; ++i) in_test[idx[i]] = 1;
  std::vector<Record> train_rows, test_rows;
  std::set<std::int64_t> test_groups;
  for (std::size_t i = 0; i < n; ++i) {
    const Record& r = dataset.rows()[i];
    if (in_test[i]) {
      test_rows.push_back(r);
      test_groups.insert(dataset.group_of(r));
    } else {
      train_rows.push_back(r);
    }
  }
  return Split{dataset.with_rows(std::move(train_rows)), dataset.with_rows(std::move(test_rows)),
               std::vector<std::int64_t>(test_groups.begin(), test_groups.end())};
}

}  // namespace qoe
