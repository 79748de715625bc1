#pragma once

#include <Eigen/Dense>
#include <array>
#include <string>
#include <vector>

#include "priornet/errors.hpp"

namespace priornet {

// p genes x N samples of log-expression under a two-condition design.
// Immutable after construction; operations return new matrices.
struct ExpressionMatrix {
  std::vector<std::string> gene_ids;      // length p, unique
  std::vector<std::string> sample_names;  // length N, unique
  Eigen::MatrixXd values;                 // p x N, all finite
  std::vector<int> condition;             // per sample, 1 or 2

  Eigen::Index p() const { return values.rows(); }
  Eigen::Index n_samples() const { return values.cols(); }
  int n(int c) const;
  std::vector<Eigen::Index> samples_of(int c) const;
  Eigen::Index gene_index(const std::string& id) const;  // -1 if absent

  void validate() const;
};

// Per-condition empirical covariance matrices (MLE divisor n_c).
struct CovariancePair {
  std::array<Eigen::MatrixXd, 2> S;
  std::array<int, 2> n;
};

// Expression TSV: header row `gene<TAB>sample1<TAB>...`, one row per gene.
// Labels TSV: `sample<TAB>condition` with condition in {1,2}; a literal
// header line is skipped if present.
ExpressionMatrix load_expression(const std::string& path, const std::string& labels_path);
void save_expression(const ExpressionMatrix& x, const std::string& path,
                     const std::string& labels_path);

ExpressionMatrix center_by_condition(const ExpressionMatrix& x);

// Optional per-gene unit-variance scaling (pooled variance); zero-variance
// genes are left untouched. Off by default in the pipeline.
ExpressionMatrix scale_to_unit_variance(const ExpressionMatrix& x);

Eigen::MatrixXd empirical_covariance(const ExpressionMatrix& x, int c);
CovariancePair covariance_pair(const ExpressionMatrix& x);

// Row subset in the order given; unknown ids are an error.
ExpressionMatrix restrict_to_genes(const ExpressionMatrix& x,
                                   const std::vector<std::string>& genes);

}  // namespace priornet
