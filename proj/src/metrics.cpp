#include "qoe/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "qoe/demographics.hpp"
#include "qoe/error.hpp"

namespace qoe {

namespace {

void check_pair(std::span<const double> a, std::span<const double> b, std::size_t min_n,
                std::string_view what) {
  if (a.size() != b.size())
    fail(ErrorKind::invalid_argument, std::string(what) + ": length mismatch (" +
                                          std::to_string(a.size()) + " vs " +
                                          std::to_string(b.size()) + ")");
  if (a.size() < min_n)
    fail(ErrorKind::invalid_argument,
         std::string(what) + ": needs at least " + std::to_string(min_n) + " values");
}

double mean_of(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

bool has_ties(std::span<const double> v) {
  std::vector<double> s(v.begin(), v.end());
  std::sort(s.begin(), s.end());
  return std::adjacent_find(s.begin(), s.end()) != s.end();
}

}  // namespace

double rmse(std::span<const double> y, std::span<const double> y_hat) {
  check_pair(y, y_hat, 1, "rmse");
  double sse = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) sse += (y[i] - y_hat[i]) * (y[i] - y_hat[i]);
  return std::sqrt(sse / static_cast<double>(y.size()));
}

double mae(std::span<const double> y, std::span<const double> y_hat) {
  check_pair(y, y_hat, 1, "mae");
  double sae = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) sae += std::abs(y[i] - y_hat[i]);
  return sae / static_cast<double>(y.size());
}

double r2(std::span<const double> y, std::span<const double> y_hat) {
  check_pair(y, y_hat, 1, "r2");
  const double y_bar = mean_of(y);
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    ss_res += (y[i] - y_hat[i]) * (y[i] - y_hat[i]);
    ss_tot += (y[i] - y_bar) * (y[i] - y_bar);
  }
  if (ss_tot == 0.0) fail(ErrorKind::undefined_metric, "r2: target is constant");
  return 1.0 - ss_res / ss_tot;
}

double plcc(std::span<const double> a, std::span<const double> b) {
  check_pair(a, b, 2, "plcc");
  const double a_bar = mean_of(a), b_bar = mean_of(b);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - a_bar, db = b[i] - b_bar;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa == 0.0 || sbb == 0.0) fail(ErrorKind::undefined_metric, "plcc: constant input");
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

std::vector<double> average_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return values[i] < values[j]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

double srcc(std::span<const double> a, std::span<const double> b) {
  check_pair(a, b, 2, "srcc");
  const auto ra = average_ranks(a);
  const auto rb = average_ranks(b);
  if (has_ties(a) || has_ties(b)) {
    // Throws undefined-metric when a vector is all-tied.
    return plcc(ra, rb);
  }
  const double n = static_cast<double>(a.size());
  double d2 = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d2 += (ra[i] - rb[i]) * (ra[i] - rb[i]);
  return 1.0 - 6.0 * d2 / (n * (n * n - 1.0));
}

MetricBlock evaluate_predictions(std::span<const double> y, std::span<const double> y_hat) {
  MetricBlock m;
  m.rmse = rmse(y, y_hat);
  m.mae = mae(y, y_hat);
  m.r2 = r2(y, y_hat);
  m.plcc = plcc(y, y_hat);
  m.srcc = srcc(y, y_hat);
  m.n = y.size();
  return m;
}

std::vector<GroupCorrelation> correlation_by_demographic(const Dataset& dataset,
                                                         std::string_view feature) {
  if (!dataset.has_demographic())
    fail(ErrorKind::schema_mismatch, "correlation_by_demographic: dataset has no demographic column");
  const ColumnSpec* col = dataset.find_column(feature);
  if (col == nullptr || (col->kind != ColumnKind::numeric && col->kind != ColumnKind::target))
    fail(ErrorKind::schema_mismatch, "'" + std::string(feature) + "' is not a numeric column");

  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> groups;
  for (const auto& r : dataset.rows()) {
    auto& [x, y] = groups[*r.demographic];
    x.push_back(numeric_field(r, feature));
    y.push_back(r.session.mos);
  }

  std::vector<std::string> order;
  for (auto id : kAllDemographics)
    if (groups.count(std::string(to_string(id)))) order.emplace_back(to_string(id));
  for (const auto& [label, _] : groups)
    if (!parse_demographic(label)) order.push_back(label);

  std::vector<GroupCorrelation> out;
  for (const auto& label : order) {
    const auto& [x, y] = groups.at(label);
    out.push_back({label, x.size(), plcc(x, y)});
  }
  return out;
}

}  // namespace qoe
