#pragma once

#include <cstddef>
#include <vector>

namespace qrect {

struct GaussRule {
  std::vector<double> nodes;    // on [-1, 1], ascending
  std::vector<double> weights;  // sum to 2
};

/// Golub-Welsch Gauss-Legendre rule with n nodes.
GaussRule gauss_legendre(std::size_t n);

}  // namespace qrect
