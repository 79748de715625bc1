#include "priornet/enrich.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <unordered_set>

#include "priornet/tsv.hpp"

namespace priornet {

int PathwayCatalog::find(const std::string& name) const {
  for (int i = 0; i < size(); ++i)
    if (names[i] == name) return i;
  return -1;
}

void PathwayCatalog::validate() const {
  if (names.size() != gene_sets.size()) fail(Errc::BadArgument, "catalog field sizes disagree");
  std::unordered_set<std::string> uni(universe.begin(), universe.end());
  std::unordered_set<std::string> seen;
  for (size_t k = 0; k < names.size(); ++k) {
    if (!seen.insert(names[k]).second)
      fail(Errc::BadArgument, "duplicate pathway name " + names[k]);
    if (gene_sets[k].empty()) fail(Errc::BadArgument, "pathway " + names[k] + " is empty");
    for (const auto& g : gene_sets[k])
      if (uni.count(g) == 0)
        fail(Errc::BadArgument, "pathway " + names[k] + " gene " + g + " not in universe");
  }
}

PathwayCatalog load_catalog(const std::string& gmt_path, const std::string& universe_path) {
  PathwayCatalog cat;
  std::set<std::string> universe;
  for (const auto& line : tsv::read_lines(universe_path)) {
    if (!line.empty()) universe.insert(line);
  }
  cat.universe.assign(universe.begin(), universe.end());

  for (const auto& line : tsv::read_lines(gmt_path)) {
    if (line.empty()) continue;
    const auto fields = tsv::split(line);
    if (fields.size() < 3)
      fail(Errc::ParseError, gmt_path + ": GMT rows need name, description and >= 1 gene");
    std::set<std::string> genes(fields.begin() + 2, fields.end());
    genes.erase("");
    cat.names.push_back(fields[0]);
    cat.gene_sets.emplace_back(genes.begin(), genes.end());
  }
  cat.validate();
  return cat;
}

static double log_factorial(int v) {
  static const std::vector<double> table = [] {
    std::vector<double> t(4096);
    for (size_t i = 0; i < t.size(); ++i) t[i] = std::lgamma(static_cast<double>(i) + 1.0);
    return t;
  }();
  if (v < static_cast<int>(table.size())) return table[static_cast<size_t>(v)];
  return std::lgamma(static_cast<double>(v) + 1.0);
}

static double log_choose(int n, int k) {
  return log_factorial(n) - log_factorial(k) - log_factorial(n - k);
}

double hypergeom_pmf(int y, int M, int K, int n) {
  if (M < 0 || K < 0 || n < 0 || y < 0) fail(Errc::BadArgument, "hypergeom_pmf: negative argument");
  if (K > M || n > M) fail(Errc::BadArgument, "hypergeom_pmf: need K <= M and n <= M");
  // The pmf is symmetric in (K, n); canonicalizing makes that exact.
  if (K > n) std::swap(K, n);
  if (y > K || y < n + K - M) return 0.0;
  return std::exp(log_choose(n, y) + log_choose(M - n, K - y) - log_choose(M, K));
}

double hypergeom_upper_tail(int y, int M, int K, int n) {
  if (M < 0 || K < 0 || n < 0 || y < 0)
    fail(Errc::BadArgument, "hypergeom_upper_tail: negative argument");
  if (K > M || n > M) fail(Errc::BadArgument, "hypergeom_upper_tail: need K <= M and n <= M");
  const int hi = std::min(K, n);
  double p = 0.0;
  for (int j = std::max(y, std::max(0, n + K - M)); j <= hi; ++j) p += hypergeom_pmf(j, M, K, n);
  return std::min(p, 1.0);
}

EnrichmentResult enrichment_pvalue(int pathway_index, const Signature& sig,
                                   const PathwayCatalog& catalog) {
  if (pathway_index < 0 || pathway_index >= catalog.size())
    fail(Errc::BadArgument, "pathway index out of range");
  std::unordered_set<std::string> uni(catalog.universe.begin(), catalog.universe.end());
  std::unordered_set<std::string> restricted;
  for (const auto& g : sig.genes)
    if (uni.count(g)) restricted.insert(g);
  if (restricted.empty())
    fail(Errc::EmptySignature, "signature has no genes in the catalog universe");

  EnrichmentResult r;
  r.pathway = catalog.names[static_cast<size_t>(pathway_index)];
  r.M = catalog.M();
  r.n = static_cast<int>(restricted.size());
  const auto& set = catalog.gene_sets[static_cast<size_t>(pathway_index)];
  r.K = static_cast<int>(set.size());
  for (const auto& g : set)
    if (restricted.count(g)) ++r.y;
  r.p_value = hypergeom_upper_tail(r.y, r.M, r.K, r.n);
  return r;
}

std::vector<EnrichmentResult> enrich_all(const PathwayCatalog& catalog, const Signature& sig,
                                         int* dropped_from_universe) {
  std::unordered_set<std::string> uni(catalog.universe.begin(), catalog.universe.end());
  int dropped = 0;
  for (const auto& g : sig.genes)
    if (uni.count(g) == 0) ++dropped;
  if (dropped_from_universe) *dropped_from_universe = dropped;

  std::vector<EnrichmentResult> out;
  out.reserve(static_cast<size_t>(catalog.size()));
  for (int k = 0; k < catalog.size(); ++k) out.push_back(enrichment_pvalue(k, sig, catalog));
  return out;
}

std::vector<EnrichmentResult> significant_pathways(const std::vector<EnrichmentResult>& results,
                                                   double level) {
  if (!(level > 0.0 && level < 1.0)) fail(Errc::BadArgument, "enrichment level must lie in (0,1)");
  std::vector<EnrichmentResult> out;
  for (const auto& r : results)
    if (r.p_value < level) out.push_back(r);
  std::sort(out.begin(), out.end(), [](const EnrichmentResult& a, const EnrichmentResult& b) {
    if (a.p_value != b.p_value) return a.p_value < b.p_value;
    return a.pathway < b.pathway;
  });
  return out;
}

MembershipMatrix membership_matrix(const std::vector<EnrichmentResult>& significant,
                                   const PathwayCatalog& catalog) {
  if (significant.empty()) fail(Errc::BadArgument, "membership_matrix: no significant pathways");
  std::set<std::string> rows;
  for (const auto& r : significant) {
    const int k = catalog.find(r.pathway);
    if (k < 0) fail(Errc::BadArgument, "pathway " + r.pathway + " not in catalog");
    const auto& set = catalog.gene_sets[static_cast<size_t>(k)];
    rows.insert(set.begin(), set.end());
  }

  MembershipMatrix mm;
  mm.row_genes.assign(rows.begin(), rows.end());
  std::map<std::string, int> row_of;
  for (size_t i = 0; i < mm.row_genes.size(); ++i) row_of[mm.row_genes[i]] = static_cast<int>(i);

  mm.m = Eigen::MatrixXi::Zero(static_cast<Eigen::Index>(mm.row_genes.size()),
                               static_cast<Eigen::Index>(significant.size()));
  for (size_t j = 0; j < significant.size(); ++j) {
    mm.pathways.push_back(significant[j].pathway);
    const int k = catalog.find(significant[j].pathway);
    for (const auto& g : catalog.gene_sets[static_cast<size_t>(k)])
      mm.m(row_of[g], static_cast<Eigen::Index>(j)) = 1;
  }
  return mm;
}

double jaccard_distance(const Eigen::VectorXi& a, const Eigen::VectorXi& b) {
  if (a.size() != b.size()) fail(Errc::BadArgument, "jaccard_distance: unequal lengths");
  int both = 0, any = 0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const bool ai = a(i) != 0, bi = b(i) != 0;
    both += ai && bi;
    any += ai || bi;
  }
  if (any == 0) fail(Errc::BadArgument, "jaccard_distance: both columns empty");
  return 1.0 - static_cast<double>(both) / static_cast<double>(any);
}

Eigen::MatrixXd jaccard_matrix(const MembershipMatrix& mm) {
  const Eigen::Index q = mm.m.cols();
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(q, q);
  for (Eigen::Index i = 0; i < q; ++i)
    for (Eigen::Index j = i + 1; j < q; ++j) {
      const double v = jaccard_distance(mm.m.col(i), mm.m.col(j));
      d(i, j) = v;
      d(j, i) = v;
    }
  return d;
}

Dendrogram ward_cluster(const Eigen::MatrixXd& D) {
  const int n = static_cast<int>(D.rows());
  if (n < 2 || D.cols() != n) fail(Errc::BadArgument, "ward_cluster: need a square matrix, size >= 2");
  for (int i = 0; i < n; ++i) {
    if (D(i, i) != 0.0) fail(Errc::BadArgument, "ward_cluster: diagonal must be zero");
    for (int j = 0; j < n; ++j)
      if (D(i, j) != D(j, i)) fail(Errc::BadArgument, "ward_cluster: matrix not symmetric");
  }

  // Lance-Williams Ward update on squared dissimilarities; W is indexed by
  // cluster id (leaves 0..n-1, merge k creates id n+k).
  const int total = 2 * n - 1;
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(total, total);
  w.topLeftCorner(n, n) = D.cwiseProduct(D);
  std::vector<int> sizes(static_cast<size_t>(total), 1);
  std::vector<int> active;
  for (int i = 0; i < n; ++i) active.push_back(i);

  Dendrogram dend;
  dend.n_leaves = n;
  for (int step = 0; step < n - 1; ++step) {
    int best_a = -1, best_b = -1;
    double best_w = 0.0;
    for (size_t s = 0; s < active.size(); ++s) {
      for (size_t t = s + 1; t < active.size(); ++t) {
        const double v = w(active[s], active[t]);
        if (best_a < 0 || v < best_w) {  // ties keep the smallest id pair
          best_w = v;
          best_a = active[s];
          best_b = active[t];
        }
      }
    }
    const int merged = n + step;
    const double ni = sizes[static_cast<size_t>(best_a)];
    const double nj = sizes[static_cast<size_t>(best_b)];
    sizes[static_cast<size_t>(merged)] = static_cast<int>(ni + nj);
    for (int k : active) {
      if (k == best_a || k == best_b) continue;
      const double nk = sizes[static_cast<size_t>(k)];
      const double v = ((ni + nk) * w(best_a, k) + (nj + nk) * w(best_b, k) - nk * best_w) /
                       (ni + nj + nk);
      w(merged, k) = v;
      w(k, merged) = v;
    }
    active.erase(std::remove_if(active.begin(), active.end(),
                                [&](int id) { return id == best_a || id == best_b; }),
                 active.end());
    active.push_back(merged);
    dend.merges.push_back({best_a, best_b, std::sqrt(std::max(best_w, 0.0))});
  }
  return dend;
}

std::vector<int> cut_tree(const Dendrogram& dend, int Q) {
  const int n = dend.n_leaves;
  if (Q < 1 || Q > n) fail(Errc::BadArgument, "cut_tree: need 1 <= Q <= n_leaves");

  std::vector<int> parent(static_cast<size_t>(2 * n - 1));
  for (size_t i = 0; i < parent.size(); ++i) parent[i] = static_cast<int>(i);
  const auto root = [&](int v) {
    while (parent[static_cast<size_t>(v)] != v) v = parent[static_cast<size_t>(v)];
    return v;
  };
  for (int k = 0; k < n - Q; ++k) {
    const auto& m = dend.merges[static_cast<size_t>(k)];
    parent[static_cast<size_t>(root(m.a))] = n + k;
    parent[static_cast<size_t>(root(m.b))] = n + k;
  }

  // Group labels ordered by each group's smallest leaf.
  std::map<int, int> label;
  std::vector<int> out(static_cast<size_t>(n));
  for (int leaf = 0; leaf < n; ++leaf) {
    const int r = root(leaf);
    auto it = label.find(r);
    if (it == label.end()) it = label.emplace(r, static_cast<int>(label.size())).first;
    out[static_cast<size_t>(leaf)] = it->second;
  }
  return out;
}

int suggest_q(const Dendrogram& dend) {
  const int m = static_cast<int>(dend.merges.size());
  if (m <= 1) return 1;
  int best_k = -1;
  double best_gap = -1.0;
  for (int k = 0; k + 1 < m; ++k) {
    const double lo = dend.merges[static_cast<size_t>(k)].height;
    const double hi = dend.merges[static_cast<size_t>(k + 1)].height;
    const double rel = hi > 0.0 ? (hi - lo) / hi : 0.0;
    if (rel > best_gap) {
      best_gap = rel;
      best_k = k + 1;
    }
  }
  return dend.n_leaves - best_k;
}

ClusterAssignment cut_core_pathways(const Dendrogram& dend, int Q,
                                    const std::vector<EnrichmentResult>& significant,
                                    const PathwayCatalog& catalog, const Signature& sig) {
  if (static_cast<int>(significant.size()) != dend.n_leaves)
    fail(Errc::BadArgument, "cut_core_pathways: dendrogram and pathway list disagree");
  if (Q < 1 || Q > dend.n_leaves) fail(Errc::BadArgument, "cut_core_pathways: Q out of range");

  std::vector<int> group;
  if (dend.n_leaves == 1) {
    group = {0};
  } else {
    group = cut_tree(dend, Q);
  }

  ClusterAssignment ca;
  ca.Q = Q;
  ca.genes = sig.genes;
  ca.Z = Eigen::MatrixXi::Zero(static_cast<Eigen::Index>(sig.genes.size()), Q);
  ca.member_pathways.resize(static_cast<size_t>(Q));
  ca.cluster_genes.resize(static_cast<size_t>(Q));

  std::unordered_set<std::string> in_sig(sig.genes.begin(), sig.genes.end());
  std::vector<std::set<std::string>> genes_of(static_cast<size_t>(Q));
  for (size_t j = 0; j < significant.size(); ++j) {
    const int q = group[j];
    ca.member_pathways[static_cast<size_t>(q)].push_back(significant[j].pathway);
    const int k = catalog.find(significant[j].pathway);
    if (k < 0) fail(Errc::BadArgument, "pathway " + significant[j].pathway + " not in catalog");
    for (const auto& g : catalog.gene_sets[static_cast<size_t>(k)])
      if (in_sig.count(g)) genes_of[static_cast<size_t>(q)].insert(g);
  }
  for (int q = 0; q < Q; ++q)
    ca.cluster_genes[static_cast<size_t>(q)].assign(genes_of[static_cast<size_t>(q)].begin(),
                                                    genes_of[static_cast<size_t>(q)].end());
  for (size_t i = 0; i < sig.genes.size(); ++i)
    for (int q = 0; q < Q; ++q)
      if (genes_of[static_cast<size_t>(q)].count(sig.genes[i]))
        ca.Z(static_cast<Eigen::Index>(i), q) = 1;
  return ca;
}

}  // namespace priornet
