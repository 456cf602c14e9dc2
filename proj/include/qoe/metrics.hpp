#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qoe/data_model.hpp"

namespace qoe {

struct MetricBlock {
  double rmse = 0.0;
  double mae = 0.0;
  double r2 = 0.0;
  double plcc = 0.0;
  double srcc = 0.0;
  std::size_t n = 0;
};

double rmse(std::span<const double> y, std::span<const double> y_hat);
double mae(std::span<const double> y, std::span<const double> y_hat);
// Throws undefined-metric when y is constant.
double r2(std::span<const double> y, std::span<const double> y_hat);
// Throws undefined-metric when either input is constant.
double plcc(std::span<const double> a, std::span<const double> b);
// Rank correlation. Without ties uses 1 - 6*sum(d^2)/(N(N^2-1)); with ties,
// Pearson correlation of average ranks. Throws when either input is all-tied.
double srcc(std::span<const double> a, std::span<const double> b);

// 1-based ranks, tied values share the mean of their positions.
std::vector<double> average_ranks(std::span<const double> values);

MetricBlock evaluate_predictions(std::span<const double> y, std::span<const double> y_hat);

struct GroupCorrelation {
  std::string demographic;
  std::size_t n = 0;
  double plcc = 0.0;
};

// PLCC(feature, mos) for each demographic label, built-in profiles first in
// enum order, then any other labels sorted.
std::vector<GroupCorrelation> correlation_by_demographic(const Dataset& dataset,
                                                         std::string_view feature);

}  // namespace qoe
