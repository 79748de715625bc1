#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "priornet/expression.hpp"
#include "priornet/signature.hpp"

namespace priornet {

struct ForestConfig {
  int n_trees = 500;
  int mtry = 0;  // 0 -> ceil(sqrt(#signature genes))
  int min_leaf = 1;
  uint64_t seed = 0;
};

// Binary CART grown on a stratified bootstrap; Gini splits over a random
// feature subset per node. Ties between equal-impurity splits go to the
// lowest gene index, then the lowest threshold.
struct Tree {
  struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    int prediction = 0;  // condition label at leaves
  };
  std::vector<Node> nodes;
  std::vector<int> bootstrap_count;  // per training sample
  std::vector<int> oob;              // ascending sample indices, complement of the support
};

struct Forest {
  std::vector<Tree> trees;
  std::vector<std::string> genes;  // row order of the training matrix
  int n_samples = 0;
  ForestConfig cfg;
};

Forest grow_forest(const ExpressionMatrix& x, const Signature& sig, ForestConfig cfg);

int predict_tree(const Tree& tree, const Eigen::VectorXd& sample);
int predict(const Forest& forest, const Eigen::VectorXd& sample);  // majority vote, ties -> 1

// Mean decrease in out-of-bag accuracy under per-tree permutation of each
// gene, plus the forest OOB error from per-sample majority votes.
struct ImportanceReport {
  std::vector<std::string> genes;
  std::vector<double> importance;
  std::vector<int> oob_count;  // trees contributing to each gene's mean
  double oob_error = 0.0;
  int never_oob_samples = 0;   // excluded from oob_error
  int zero_oob_genes = 0;      // genes with no contributing tree
};

ImportanceReport importance(const Forest& forest, const ExpressionMatrix& x);

enum class FilterRule { Positive, TopFraction };

struct FilterOutcome {
  Signature signature;  // retained genes, provenance "forest-retained"
  bool empty_after_filter = false;
};

FilterOutcome filter_by_importance(const ImportanceReport& report, const Signature& sig,
                                   FilterRule rule, double top_fraction = 0.5);

}  // namespace priornet
