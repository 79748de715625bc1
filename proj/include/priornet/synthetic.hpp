#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "priornet/expression.hpp"

namespace priornet {

// Ground-truth model for benchmarking: overlapping clusters, a pair of
// positive-definite concentration matrices with shared support and
// condition-specific magnitudes of a common sign.
struct GroundTruthModel {
  int p = 0;
  int Q = 0;
  Eigen::MatrixXi Z_true;                        // p x Q, 1-2 memberships per gene
  std::array<Eigen::MatrixXd, 2> K_true;         // symmetric, smallest eigenvalue >= 0.1
  std::array<Eigen::MatrixXi, 2> edge_support;   // 0/1, exactly the nonzero off-diagonal pattern
  std::vector<std::string> gene_ids;

  bool has_edge(int c, int i, int j) const { return edge_support[c - 1](i, j) != 0; }
};

GroundTruthModel synth_network(int p, int Q, double within_density, double between_density,
                               uint64_t seed);

// Multivariate normal samples per condition with covariance inv(K_true).
ExpressionMatrix sample_expression(const GroundTruthModel& model, int n1, int n2, uint64_t seed);

}  // namespace priornet
