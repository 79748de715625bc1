#include <cmath>

#include "doctest.h"
#include "priornet/diffexpr.hpp"
#include "priornet/forest.hpp"
#include "priornet/rng.hpp"
#include "test_util.hpp"

using namespace priornet;

namespace {

// Gene 0 separates the conditions exactly (0 vs 10); the rest is noise.
ExpressionMatrix separable_matrix(int p, int per_class, uint64_t seed, double signal_noise = 0.0) {
  Rng rng(seed);
  ExpressionMatrix x;
  const int n = 2 * per_class;
  x.values.resize(p, n);
  for (int i = 0; i < p; ++i) x.gene_ids.push_back("g" + std::to_string(i + 1));
  for (int j = 0; j < n; ++j) {
    x.sample_names.push_back("s" + std::to_string(j + 1));
    x.condition.push_back(j < per_class ? 1 : 2);
  }
  for (int j = 0; j < n; ++j) {
    x.values(0, j) = (j < per_class ? 0.0 : 10.0) + signal_noise * rng.normal();
    for (int i = 1; i < p; ++i) x.values(i, j) = rng.normal();
  }
  x.validate();
  return x;
}

Signature full_signature(const ExpressionMatrix& x) {
  Signature s;
  for (const auto& g : x.gene_ids) s.push(g, Provenance::Differential);
  return s;
}

// Between-centroid distance over mean within-condition spread on the first
// principal component.
double separation_ratio(const ExpressionMatrix& x, const Signature& sig) {
  const auto proj = pca_projection(x, sig, 1);
  double c1 = 0, c2 = 0;
  int n1 = 0, n2 = 0;
  for (Eigen::Index j = 0; j < proj.coordinates.rows(); ++j) {
    if (x.condition[static_cast<size_t>(j)] == 1) {
      c1 += proj.coordinates(j, 0);
      ++n1;
    } else {
      c2 += proj.coordinates(j, 0);
      ++n2;
    }
  }
  c1 /= n1;
  c2 /= n2;
  double spread = 0;
  for (Eigen::Index j = 0; j < proj.coordinates.rows(); ++j) {
    const double c = x.condition[static_cast<size_t>(j)] == 1 ? c1 : c2;
    spread += std::abs(proj.coordinates(j, 0) - c);
  }
  spread /= static_cast<double>(proj.coordinates.rows());
  if (spread == 0.0) return 1e18;
  return std::abs(c1 - c2) / spread;
}

}  // namespace

TEST_SUITE("forest") {

TEST_CASE("separable fixture: zero OOB error and top importance, 10/10 seeds") {
  for (uint64_t seed = 0; seed < 10; ++seed) {
    const auto x = separable_matrix(10, 10, 100 + seed);
    ForestConfig cfg;
    cfg.n_trees = 200;
    cfg.seed = seed;
    const auto forest = grow_forest(x, full_signature(x), cfg);
    const auto report = importance(forest, x);
    CHECK(report.oob_error == 0.0);
    for (size_t g = 1; g < report.genes.size(); ++g)
      CHECK(report.importance[0] > report.importance[g]);
  }
}

TEST_CASE("pure noise: OOB error near one half") {
  std::vector<double> errors;
  for (uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(500 + seed);
    ExpressionMatrix x;
    const int p = 10, n = 40;
    x.values.resize(p, n);
    for (int i = 0; i < p; ++i) x.gene_ids.push_back("g" + std::to_string(i + 1));
    for (int j = 0; j < n; ++j) {
      x.sample_names.push_back("s" + std::to_string(j + 1));
      x.condition.push_back(j % 2 == 0 ? 1 : 2);
      for (int i = 0; i < p; ++i) x.values(i, j) = rng.normal();
    }
    x.validate();
    ForestConfig cfg;
    cfg.n_trees = 100;
    cfg.seed = seed;
    const auto report = importance(grow_forest(x, full_signature(x), cfg), x);
    errors.push_back(report.oob_error);
  }
  CHECK(std::abs(testutil::mean(errors) - 0.5) < 0.1);
}

TEST_CASE("noise gene importance is near zero") {
  std::vector<double> noise_importance;
  for (uint64_t seed = 0; seed < 10; ++seed) {
    const auto x = separable_matrix(10, 20, 300 + seed);
    ForestConfig cfg;
    cfg.n_trees = 500;
    cfg.seed = seed;
    const auto report = importance(grow_forest(x, full_signature(x), cfg), x);
    for (size_t g = 1; g < report.genes.size(); ++g)
      noise_importance.push_back(report.importance[g]);
  }
  for (double v : noise_importance) CHECK(std::abs(v) <= 0.05);
}

TEST_CASE("single-tree forest predicts with that tree's vote") {
  const auto x = separable_matrix(4, 5, 77);
  ForestConfig cfg;
  cfg.n_trees = 1;
  cfg.seed = 9;
  const auto forest = grow_forest(x, full_signature(x), cfg);
  REQUIRE(forest.trees.size() == 1);
  for (Eigen::Index j = 0; j < x.n_samples(); ++j) {
    const Eigen::VectorXd col = x.values.col(j);
    CHECK(predict(forest, col) == predict_tree(forest.trees[0], col));
  }
}

TEST_CASE("forests are deterministic given (data, cfg, seed)") {
  const auto x = separable_matrix(8, 8, 42, 0.5);
  ForestConfig cfg;
  cfg.n_trees = 50;
  cfg.seed = 3;
  const auto f1 = grow_forest(x, full_signature(x), cfg);
  const auto f2 = grow_forest(x, full_signature(x), cfg);
  REQUIRE(f1.trees.size() == f2.trees.size());
  for (size_t t = 0; t < f1.trees.size(); ++t) {
    CHECK(f1.trees[t].bootstrap_count == f2.trees[t].bootstrap_count);
    CHECK(f1.trees[t].oob == f2.trees[t].oob);
    REQUIRE(f1.trees[t].nodes.size() == f2.trees[t].nodes.size());
    for (size_t k = 0; k < f1.trees[t].nodes.size(); ++k) {
      CHECK(f1.trees[t].nodes[k].feature == f2.trees[t].nodes[k].feature);
      CHECK(f1.trees[t].nodes[k].threshold == f2.trees[t].nodes[k].threshold);
    }
  }
  const auto r1 = importance(f1, x);
  const auto r2 = importance(f2, x);
  CHECK(r1.importance == r2.importance);
  CHECK(r1.oob_error == r2.oob_error);
}

TEST_CASE("bootstrap is a size-N multiset and OOB is its complement") {
  const auto x = separable_matrix(6, 7, 11, 0.3);
  ForestConfig cfg;
  cfg.n_trees = 25;
  cfg.seed = 5;
  const auto forest = grow_forest(x, full_signature(x), cfg);
  for (const auto& tree : forest.trees) {
    int total = 0;
    for (size_t s = 0; s < tree.bootstrap_count.size(); ++s) {
      total += tree.bootstrap_count[s];
      const bool in_oob =
          std::find(tree.oob.begin(), tree.oob.end(), static_cast<int>(s)) != tree.oob.end();
      CHECK(in_oob == (tree.bootstrap_count[s] == 0));
    }
    CHECK(total == static_cast<int>(x.n_samples()));
  }
}

TEST_CASE("importance depends only on values, not gene ids") {
  const auto x = separable_matrix(6, 8, 13, 0.2);
  auto renamed = x;
  for (size_t i = 0; i < renamed.gene_ids.size(); ++i)
    renamed.gene_ids[i] = "other" + std::to_string(i);
  ForestConfig cfg;
  cfg.n_trees = 40;
  cfg.seed = 21;
  const auto r1 = importance(grow_forest(x, full_signature(x), cfg), x);
  const auto r2 = importance(grow_forest(renamed, full_signature(renamed), cfg), renamed);
  CHECK(r1.importance == r2.importance);
}

TEST_CASE("a forest with no OOB samples reports zero importances with a warning") {
  const auto x = separable_matrix(3, 3, 1);
  Forest forest;
  forest.genes = x.gene_ids;
  forest.n_samples = static_cast<int>(x.n_samples());
  forest.cfg.seed = 0;
  Tree tree;
  tree.bootstrap_count.assign(static_cast<size_t>(x.n_samples()), 1);  // no OOB
  tree.nodes.push_back({});
  forest.trees.push_back(tree);
  const auto report = importance(forest, x);
  CHECK(report.zero_oob_genes == 3);
  CHECK(report.never_oob_samples == static_cast<int>(x.n_samples()));
  for (double v : report.importance) CHECK(v == 0.0);
}

TEST_CASE("filter_by_importance rules") {
  ImportanceReport report;
  report.genes = {"a", "b", "c"};
  report.importance = {0.2, 0.0, -0.01};
  Signature sig;
  for (const auto& g : report.genes) sig.push(g, Provenance::Differential);

  const auto pos = filter_by_importance(report, sig, FilterRule::Positive);
  CHECK(pos.signature.genes == std::vector<std::string>{"a"});
  CHECK(pos.signature.provenance[0] == Provenance::ForestRetained);
  CHECK_FALSE(pos.empty_after_filter);

  ImportanceReport four;
  four.genes = {"a", "b", "c", "d"};
  four.importance = {0.1, 0.4, 0.2, 0.05};
  Signature sig4;
  for (const auto& g : four.genes) sig4.push(g, Provenance::Differential);
  const auto top = filter_by_importance(four, sig4, FilterRule::TopFraction, 0.5);
  CHECK(top.signature.genes == std::vector<std::string>{"b", "c"});

  ImportanceReport none;
  none.genes = {"a", "b"};
  none.importance = {0.0, -0.3};
  Signature sig2;
  sig2.push("a", Provenance::Differential);
  sig2.push("b", Provenance::Differential);
  const auto empty = filter_by_importance(none, sig2, FilterRule::Positive);
  CHECK(empty.empty_after_filter);
  CHECK(empty.signature.empty());

  CHECK_THROWS_AS(filter_by_importance(four, sig4, FilterRule::TopFraction, 1.5), Error);
}

TEST_CASE("filtering improves the PCA separation ratio on average") {
  double filtered_sum = 0.0, unfiltered_sum = 0.0;
  for (uint64_t seed = 0; seed < 20; ++seed) {
    // Informative signature plus 5 appended noise genes.
    const auto x = separable_matrix(10, 10, 700 + seed, 0.8);
    const auto unfiltered = full_signature(x);
    ForestConfig cfg;
    cfg.n_trees = 150;
    cfg.seed = seed;
    const auto report = importance(grow_forest(x, unfiltered, cfg), x);
    const auto filtered = filter_by_importance(report, unfiltered, FilterRule::Positive);
    if (filtered.signature.empty()) continue;
    filtered_sum += separation_ratio(x, filtered.signature);
    unfiltered_sum += separation_ratio(x, unfiltered);
  }
  CHECK(filtered_sum >= unfiltered_sum);
}

}  // TEST_SUITE
