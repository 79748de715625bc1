#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "priornet/signature.hpp"

namespace priornet {

// Named gene sets over a universe of M measurable genes.
struct PathwayCatalog {
  std::vector<std::string> names;
  std::vector<std::vector<std::string>> gene_sets;  // each sorted, unique, subset of universe
  std::vector<std::string> universe;                // sorted, unique

  int M() const { return static_cast<int>(universe.size()); }
  int size() const { return static_cast<int>(names.size()); }
  int find(const std::string& name) const;  // -1 if absent
  void validate() const;
};

// GMT: `name<TAB>description<TAB>gene1<TAB>gene2...`; universe file: one
// gene id per line.
PathwayCatalog load_catalog(const std::string& gmt_path, const std::string& universe_path);

// P(Y = y) for the overlap of a size-n draw with a size-K set in a universe
// of M genes. Log-space evaluation; zero outside the support.
double hypergeom_pmf(int y, int M, int K, int n);

// Upper tail P(Y >= y), including the observed count.
double hypergeom_upper_tail(int y, int M, int K, int n);

struct EnrichmentResult {
  std::string pathway;
  int K = 0;  // pathway size
  int y = 0;  // overlap with the signature
  int n = 0;  // signature size restricted to the universe
  int M = 0;
  double p_value = 1.0;
};

EnrichmentResult enrichment_pvalue(int pathway_index, const Signature& sig,
                                   const PathwayCatalog& catalog);

// All pathways at once; genes of the signature absent from the universe are
// dropped (count reported through dropped_from_universe).
std::vector<EnrichmentResult> enrich_all(const PathwayCatalog& catalog, const Signature& sig,
                                         int* dropped_from_universe = nullptr);

// Pathways with p < level, ascending by p-value, ties by name.
std::vector<EnrichmentResult> significant_pathways(const std::vector<EnrichmentResult>& results,
                                                   double level = 0.05);

// Binary genes-by-pathways matrix over the genes of the significant pathways
// (rows sorted lexicographically, columns in `significant` order).
struct MembershipMatrix {
  std::vector<std::string> row_genes;
  std::vector<std::string> pathways;
  Eigen::MatrixXi m;
};

MembershipMatrix membership_matrix(const std::vector<EnrichmentResult>& significant,
                                   const PathwayCatalog& catalog);

double jaccard_distance(const Eigen::VectorXi& a, const Eigen::VectorXi& b);
Eigen::MatrixXd jaccard_matrix(const MembershipMatrix& mm);

// Agglomerative clustering, Ward criterion (Lance-Williams recurrence on
// squared dissimilarities, heights on the input scale). Cluster ids follow
// the scipy convention: leaves 0..n-1, merge k creates id n+k.
struct Dendrogram {
  struct Merge {
    int a = 0, b = 0;
    double height = 0.0;
  };
  int n_leaves = 0;
  std::vector<Merge> merges;
};

Dendrogram ward_cluster(const Eigen::MatrixXd& D);

// Leaf -> group id in 0..Q-1; groups ordered by their smallest leaf index.
std::vector<int> cut_tree(const Dendrogram& dend, int Q);

// Suggested cluster count: cut at the largest relative gap between
// consecutive merge heights.
int suggest_q(const Dendrogram& dend);

// Overlapping gene clusters defined by the core pathways.
struct ClusterAssignment {
  int Q = 0;
  std::vector<std::string> genes;  // signature genes, in signature order
  Eigen::MatrixXi Z;               // genes x Q indicators
  std::vector<std::vector<std::string>> member_pathways;  // per core pathway
  std::vector<std::vector<std::string>> cluster_genes;    // per core pathway, sorted
};

ClusterAssignment cut_core_pathways(const Dendrogram& dend, int Q,
                                    const std::vector<EnrichmentResult>& significant,
                                    const PathwayCatalog& catalog, const Signature& sig);

}  // namespace priornet
