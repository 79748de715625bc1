#include "priornet/forest.hpp"

#include <algorithm>
#include <cmath>

#include "priornet/rng.hpp"

namespace priornet {

namespace {

struct SplitCandidate {
  int feature = -1;
  double threshold = 0.0;
  double score = 0.0;  // weighted Gini impurity of the children
};

double gini_of(int c1, int c2) {
  const double n = c1 + c2;
  if (n == 0) return 0.0;
  const double p1 = c1 / n;
  const double p2 = c2 / n;
  return 1.0 - p1 * p1 - p2 * p2;
}

int majority_label(int c1, int c2) { return c2 > c1 ? 2 : 1; }

struct TreeBuilder {
  const Eigen::MatrixXd& values;  // genes x samples
  const std::vector<int>& labels;
  int mtry;
  int min_leaf;
  Rng& rng;
  Tree& tree;

  int build(std::vector<int>& samples) {
    int c1 = 0, c2 = 0;
    for (int s : samples) (labels[static_cast<size_t>(s)] == 1 ? c1 : c2) += 1;

    Tree::Node node;
    node.prediction = majority_label(c1, c2);
    const int node_index = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back(node);

    if (c1 == 0 || c2 == 0 || static_cast<int>(samples.size()) < 2 * min_leaf)
      return node_index;

    const auto split = best_split(samples, c1, c2);
    if (split.feature < 0) return node_index;

    std::vector<int> left, right;
    for (int s : samples)
      (values(split.feature, s) <= split.threshold ? left : right).push_back(s);
    samples.clear();
    samples.shrink_to_fit();

    const int l = build(left);
    const int r = build(right);
    tree.nodes[static_cast<size_t>(node_index)].feature = split.feature;
    tree.nodes[static_cast<size_t>(node_index)].threshold = split.threshold;
    tree.nodes[static_cast<size_t>(node_index)].left = l;
    tree.nodes[static_cast<size_t>(node_index)].right = r;
    return node_index;
  }

  SplitCandidate best_split(const std::vector<int>& samples, int c1, int c2) {
    const int p = static_cast<int>(values.rows());
    // mtry distinct features, then scanned in ascending index order so that
    // equal-score ties resolve to the lowest gene.
    std::vector<int> pool(static_cast<size_t>(p));
    for (int i = 0; i < p; ++i) pool[static_cast<size_t>(i)] = i;
    for (int k = 0; k < mtry; ++k) {
      const int j = static_cast<int>(rng.uniform_int(k, p - 1));
      std::swap(pool[static_cast<size_t>(k)], pool[static_cast<size_t>(j)]);
    }
    std::vector<int> features(pool.begin(), pool.begin() + mtry);
    std::sort(features.begin(), features.end());

    SplitCandidate best;
    std::vector<std::pair<double, int>> ordered;  // (value, label)
    for (int f : features) {
      ordered.clear();
      for (int s : samples)
        ordered.emplace_back(values(f, s), labels[static_cast<size_t>(s)]);
      std::sort(ordered.begin(), ordered.end(),
                [](const auto& a, const auto& b) { return a.first < b.first; });

      int left1 = 0, left2 = 0;
      const double total = static_cast<double>(ordered.size());
      for (size_t k = 0; k + 1 < ordered.size(); ++k) {
        (ordered[k].second == 1 ? left1 : left2) += 1;
        if (ordered[k].first == ordered[k + 1].first) continue;
        const int n_left = left1 + left2;
        const int n_right = static_cast<int>(ordered.size()) - n_left;
        if (n_left < min_leaf || n_right < min_leaf) continue;
        const double score = (n_left * gini_of(left1, left2) +
                              n_right * gini_of(c1 - left1, c2 - left2)) /
                             total;
        if (best.feature < 0 || score < best.score) {
          best.feature = f;
          best.threshold = 0.5 * (ordered[k].first + ordered[k + 1].first);
          best.score = score;
        }
      }
    }
    return best;
  }
};

}  // namespace

Forest grow_forest(const ExpressionMatrix& x, const Signature& sig, ForestConfig cfg) {
  if (sig.empty()) fail(Errc::EmptySignature, "grow_forest: signature is empty");
  if (cfg.n_trees < 1) fail(Errc::BadArgument, "grow_forest: n_trees must be >= 1");
  if (cfg.min_leaf < 1) fail(Errc::BadArgument, "grow_forest: min_leaf must be >= 1");
  const ExpressionMatrix sub = restrict_to_genes(x, sig.genes);
  const int p = static_cast<int>(sub.p());
  if (cfg.mtry == 0) cfg.mtry = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(p))));
  if (cfg.mtry < 1 || cfg.mtry > p)
    fail(Errc::BadArgument, "grow_forest: mtry must lie in [1, signature size]");

  const int n = static_cast<int>(sub.n_samples());
  std::vector<std::vector<int>> by_condition = {{}, {}};
  for (int j = 0; j < n; ++j)
    by_condition[static_cast<size_t>(sub.condition[static_cast<size_t>(j)] - 1)].push_back(j);

  Forest forest;
  forest.genes = sub.gene_ids;
  forest.n_samples = n;
  forest.cfg = cfg;
  forest.trees.resize(static_cast<size_t>(cfg.n_trees));

  for (int t = 0; t < cfg.n_trees; ++t) {
    Rng rng = Rng::derive(cfg.seed, static_cast<uint64_t>(t));
    Tree& tree = forest.trees[static_cast<size_t>(t)];
    tree.bootstrap_count.assign(static_cast<size_t>(n), 0);

    // Stratified bootstrap: n_c draws with replacement within each condition.
    std::vector<int> training;
    for (const auto& members : by_condition) {
      const int m = static_cast<int>(members.size());
      for (int k = 0; k < m; ++k) {
        const int s = members[static_cast<size_t>(rng.uniform_int(0, m - 1))];
        tree.bootstrap_count[static_cast<size_t>(s)] += 1;
        training.push_back(s);
      }
    }
    std::sort(training.begin(), training.end());
    for (int j = 0; j < n; ++j)
      if (tree.bootstrap_count[static_cast<size_t>(j)] == 0) tree.oob.push_back(j);

    TreeBuilder builder{sub.values, sub.condition, cfg.mtry, cfg.min_leaf, rng, tree};
    builder.build(training);
  }
  return forest;
}

int predict_tree(const Tree& tree, const Eigen::VectorXd& sample) {
  int at = 0;
  while (tree.nodes[static_cast<size_t>(at)].feature >= 0) {
    const auto& node = tree.nodes[static_cast<size_t>(at)];
    at = sample(node.feature) <= node.threshold ? node.left : node.right;
  }
  return tree.nodes[static_cast<size_t>(at)].prediction;
}

int predict(const Forest& forest, const Eigen::VectorXd& sample) {
  int votes1 = 0, votes2 = 0;
  for (const auto& tree : forest.trees)
    (predict_tree(tree, sample) == 1 ? votes1 : votes2) += 1;
  return majority_label(votes1, votes2);
}

namespace {

int predict_tree_permuted(const Tree& tree, const Eigen::MatrixXd& values, int col, int gene,
                          double substituted) {
  int at = 0;
  while (tree.nodes[static_cast<size_t>(at)].feature >= 0) {
    const auto& node = tree.nodes[static_cast<size_t>(at)];
    const double v = node.feature == gene ? substituted : values(node.feature, col);
    at = v <= node.threshold ? node.left : node.right;
  }
  return tree.nodes[static_cast<size_t>(at)].prediction;
}

}  // namespace

ImportanceReport importance(const Forest& forest, const ExpressionMatrix& x) {
  Signature as_sig;
  for (const auto& g : forest.genes) as_sig.push(g, Provenance::Differential);
  const ExpressionMatrix sub = restrict_to_genes(x, as_sig.genes);
  if (static_cast<int>(sub.n_samples()) != forest.n_samples)
    fail(Errc::BadArgument, "importance: sample count differs from the training data");
  const int p = static_cast<int>(sub.p());
  const int n = forest.n_samples;

  ImportanceReport report;
  report.genes = forest.genes;
  report.importance.assign(static_cast<size_t>(p), 0.0);
  report.oob_count.assign(static_cast<size_t>(p), 0);

  std::vector<std::array<int, 2>> votes(static_cast<size_t>(n), {0, 0});

  for (size_t t = 0; t < forest.trees.size(); ++t) {
    const Tree& tree = forest.trees[t];
    if (tree.oob.empty()) continue;
    const double n_oob = static_cast<double>(tree.oob.size());

    int correct = 0;
    for (int s : tree.oob) {
      const int label = predict_tree_permuted(tree, sub.values, s, -1, 0.0);
      votes[static_cast<size_t>(s)][static_cast<size_t>(label - 1)] += 1;
      if (label == sub.condition[static_cast<size_t>(s)]) ++correct;
    }
    const double acc = correct / n_oob;

    for (int g = 0; g < p; ++g) {
      // Fresh permutation of this gene's OOB values, seeded per (tree, gene).
      Rng perm_rng = Rng::derive(forest.cfg.seed,
                                 (1ULL << 40) + t * static_cast<uint64_t>(p) + static_cast<uint64_t>(g));
      std::vector<double> shuffled;
      shuffled.reserve(tree.oob.size());
      for (int s : tree.oob) shuffled.push_back(sub.values(g, s));
      perm_rng.shuffle(shuffled);

      int correct_perm = 0;
      for (size_t k = 0; k < tree.oob.size(); ++k) {
        const int s = tree.oob[k];
        const int label = predict_tree_permuted(tree, sub.values, s, g, shuffled[k]);
        if (label == sub.condition[static_cast<size_t>(s)]) ++correct_perm;
      }
      report.importance[static_cast<size_t>(g)] += acc - correct_perm / n_oob;
      report.oob_count[static_cast<size_t>(g)] += 1;
    }
  }

  for (int g = 0; g < p; ++g) {
    if (report.oob_count[static_cast<size_t>(g)] > 0) {
      report.importance[static_cast<size_t>(g)] /= report.oob_count[static_cast<size_t>(g)];
    } else {
      ++report.zero_oob_genes;
    }
  }

  int voted = 0, wrong = 0;
  for (int s = 0; s < n; ++s) {
    const auto& v = votes[static_cast<size_t>(s)];
    if (v[0] + v[1] == 0) {
      ++report.never_oob_samples;
      continue;
    }
    ++voted;
    if (majority_label(v[0], v[1]) != sub.condition[static_cast<size_t>(s)]) ++wrong;
  }
  report.oob_error = voted > 0 ? static_cast<double>(wrong) / voted : 0.0;
  return report;
}

FilterOutcome filter_by_importance(const ImportanceReport& report, const Signature& sig,
                                   FilterRule rule, double top_fraction) {
  std::vector<size_t> in_report;
  for (const auto& g : sig.genes) {
    const auto it = std::find(report.genes.begin(), report.genes.end(), g);
    if (it == report.genes.end())
      fail(Errc::BadArgument, "filter_by_importance: report does not cover gene " + g);
    in_report.push_back(static_cast<size_t>(it - report.genes.begin()));
  }

  FilterOutcome out;
  if (rule == FilterRule::Positive) {
    for (size_t k = 0; k < sig.genes.size(); ++k)
      if (report.importance[in_report[k]] > 0.0)
        out.signature.push(sig.genes[k], Provenance::ForestRetained);
  } else {
    if (!(top_fraction > 0.0 && top_fraction <= 1.0))
      fail(Errc::BadArgument, "filter_by_importance: top_fraction must lie in (0,1]");
    const size_t keep =
        static_cast<size_t>(std::ceil(top_fraction * static_cast<double>(sig.genes.size())));
    std::vector<size_t> order(sig.genes.size());
    for (size_t k = 0; k < order.size(); ++k) order[k] = k;
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
      const double ia = report.importance[in_report[a]];
      const double ib = report.importance[in_report[b]];
      if (ia != ib) return ia > ib;
      return a < b;  // stable on ties: signature order
    });
    order.resize(std::min(keep, order.size()));
    std::sort(order.begin(), order.end());  // preserve signature order in the result
    for (size_t k : order) out.signature.push(sig.genes[k], Provenance::ForestRetained);
  }
  out.empty_after_filter = out.signature.empty();
  return out;
}

}  // namespace priornet
