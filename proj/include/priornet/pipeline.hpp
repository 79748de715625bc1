#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "priornet/diffexpr.hpp"
#include "priornet/enrich.hpp"
#include "priornet/forest.hpp"
#include "priornet/ggm.hpp"

namespace priornet {

// Flat key=value configuration for the 3-step pipeline; command-line flags
// override file values.
struct PipelineConfig {
  std::string expression, labels, ppi, gmt, universe;

  double alpha = 1e-3;
  Adjust adjust = Adjust::None;
  double enrich_level = 0.05;
  double ppi_threshold = 0.9;
  int min_links = 1;
  int max_added = -1;

  int n_trees = 500;
  int mtry = 0;
  int min_leaf = 1;
  FilterRule forest_rule = FilterRule::Positive;
  double top_fraction = 0.5;

  int q = 0;  // 0 = auto (largest relative height gap)

  double lambda = 0.2;
  std::vector<double> lambda_grid;  // nonempty -> BIC selection
  double lambda_in = 2.0;
  double lambda_out = 0.5;
  double tol = 0.0;

  uint64_t seed = 0;
  bool seed_explicit = false;  // seed named in the config file or on the command line
  bool scale = false;
  bool qc = false;
  std::string out = "priornet_out";
  std::string cond1_label = "condition1";
  std::string cond2_label = "condition2";

  static PipelineConfig from_file(const std::string& path);
  void set(const std::string& key, const std::string& value);
  std::string canonical_text() const;
  void validate_inputs() const;  // all referenced files must exist
};

// Stage runners; each reads the previous stage's artifacts from cfg.out and
// returns the row count of the artifact it wrote. run_pipeline chains them
// and writes manifest.json.
int stage_diffexpr(const PipelineConfig& cfg);
int stage_forest(const PipelineConfig& cfg);
int stage_expand(const PipelineConfig& cfg);
int stage_enrich(const PipelineConfig& cfg);
int stage_cluster(const PipelineConfig& cfg);
int stage_infer(const PipelineConfig& cfg);
int stage_export(const PipelineConfig& cfg);
void run_pipeline(const PipelineConfig& cfg);

// Artifact parsers (stage inputs round-trip through these).
std::vector<GeneTestResult> load_diffexpr_table(const std::string& path);
ImportanceReport load_importance_table(const std::string& path);
std::vector<EnrichmentResult> load_enrichment_table(const std::string& path);
ClusterAssignment load_clusters_table(const std::string& path, const Signature& sig);

// DOT with the differential coloring: both conditions black dashed,
// condition-1-only green, condition-2-only red.
void export_dot(const InferredNetwork& net, const std::string& path,
                const std::string& cond1_label, const std::string& cond2_label);

// Self-contained synthetic dataset (expression, labels, PPI, GMT, universe
// and a ready config) for demos and end-to-end tests.
void make_demo_dataset(int p, int q, int n1, int n2, uint64_t seed, const std::string& dir);

}  // namespace priornet
