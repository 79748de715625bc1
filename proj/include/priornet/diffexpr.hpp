#pragma once

#include <Eigen/Dense>
#include <string>
#include <utility>
#include <vector>

#include "priornet/expression.hpp"
#include "priornet/signature.hpp"

namespace priornet {

// Per-gene two-sample test of equal means with variance moderation across
// the gene ensemble.
struct GeneTestResult {
  std::string gene_id;
  double mean1 = 0.0;
  double mean2 = 0.0;
  double s2_pooled = 0.0;     // pooled sample variance, d_g = n1 + n2 - 2
  double s2_posterior = 0.0;  // (d0*s0^2 + d_g*s2)/(d0 + d_g)
  double t_mod = 0.0;
  double df_total = 0.0;      // d0 + d_g (may be infinite)
  double p_value = 1.0;       // two-sided
};

// Scaled inverse chi-square prior on gene variances; d0 may be +infinity
// (all genes share the variance s0_sq) or 0 (no moderation, ordinary t).
struct VariancePrior {
  double d0 = 0.0;
  double s0_sq = 0.0;

  bool infinite() const { return std::isinf(d0); }
};

std::pair<double, int> pooled_variance(const ExpressionMatrix& x, Eigen::Index gene);

// Moment-matching of log-variances against the scaled-F sampling model.
// Fewer than 10 positive variances fall back to d0 = 0; all-zero input is
// an error (DegenerateVariances).
VariancePrior fit_variance_prior(const std::vector<double>& s2_list, int d_g);

std::vector<GeneTestResult> moderated_t(const ExpressionMatrix& x);
std::vector<GeneTestResult> moderated_t(const ExpressionMatrix& x, const VariancePrior& prior);

enum class Adjust { None, BenjaminiHochberg };

std::vector<double> benjamini_hochberg(const std::vector<double>& p_values);

Signature select_signature(const std::vector<GeneTestResult>& results, double alpha = 1e-3,
                           Adjust adjust = Adjust::None);

// Sample projection onto the top principal axes of the signature-restricted,
// gene-centered matrix. Component signs are fixed by making each axis's
// largest-magnitude loading positive.
struct PcaProjection {
  Eigen::MatrixXd coordinates;  // N x dims
  Eigen::VectorXd explained;    // variance fraction per component
  Eigen::MatrixXd loadings;     // |signature| x dims
};

PcaProjection pca_projection(const ExpressionMatrix& x, const Signature& genes, int dims = 2);

}  // namespace priornet
