#pragma once

#include <span>
#include <vector>

namespace hamscat {

/// Gauss-Legendre rule on [-1, 1].
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Nodes and weights of the `count`-point Gauss-Legendre rule (Newton on P_count).
const GaussRule& gauss_legendre(int count);

/// Gauss-Legendre rule mapped to [a, b].
GaussRule gauss_legendre(int count, double a, double b);

/// Pairwise (tree) summation; the tree shape depends only on values.size().
double pairwise_sum(std::span<const double> values);

}  // namespace hamscat
