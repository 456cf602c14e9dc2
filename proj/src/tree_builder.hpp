#pragma once

#include <span>
#include <vector>

#include "qoe/models_classical.hpp"
#include "qoe/rng.hpp"

namespace qoe::detail {

// Grows a tree over `rows` (indices into x, repeats allowed). When
// max_features < x.cols() a fresh random subset of that size is drawn from
// `rng` at every node.
TreeModel grow_tree(const Matrix& x, std::span<const double> y, std::vector<std::size_t> rows,
                    const TreeParams& params, std::size_t max_features, Rng* rng);

}  // namespace qoe::detail
