#include "priornet/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <json.hpp>
#include <set>
#include <sstream>
#include <unordered_set>

#include "priornet/ppi.hpp"
#include "priornet/rng.hpp"
#include "priornet/synthetic.hpp"
#include "priornet/tsv.hpp"

namespace priornet {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------- config --

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  size_t b = s.find_last_not_of(" \t\r");
  return a == std::string::npos ? "" : s.substr(a, b - a + 1);
}

double to_double(const std::string& v, const std::string& key) {
  return tsv::parse_double(v, "config key " + key);
}

long to_long(const std::string& v, const std::string& key) {
  return tsv::parse_long(v, "config key " + key);
}

bool to_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  fail(Errc::ParseError, "config key " + key + ": expected a boolean, got '" + v + "'");
}

uint64_t fnv1a(const std::string& s) {
  uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string iso_utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

PipelineConfig PipelineConfig::from_file(const std::string& path) {
  PipelineConfig cfg;
  for (const auto& raw : tsv::read_lines(path)) {
    const std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      fail(Errc::ParseError, path + ": expected key=value, got '" + line + "'");
    cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return cfg;
}

void PipelineConfig::set(const std::string& key, const std::string& value) {
  if (key == "expression") expression = value;
  else if (key == "labels") labels = value;
  else if (key == "ppi") ppi = value;
  else if (key == "gmt") gmt = value;
  else if (key == "universe") universe = value;
  else if (key == "alpha") alpha = to_double(value, key);
  else if (key == "adjust") {
    if (value == "none") adjust = Adjust::None;
    else if (value == "benjamini_hochberg" || value == "bh") adjust = Adjust::BenjaminiHochberg;
    else fail(Errc::ParseError, "config key adjust: expected none or benjamini_hochberg");
  } else if (key == "enrich_level") enrich_level = to_double(value, key);
  else if (key == "ppi_threshold") ppi_threshold = to_double(value, key);
  else if (key == "min_links") min_links = static_cast<int>(to_long(value, key));
  else if (key == "max_added") max_added = static_cast<int>(to_long(value, key));
  else if (key == "n_trees") n_trees = static_cast<int>(to_long(value, key));
  else if (key == "mtry") mtry = static_cast<int>(to_long(value, key));
  else if (key == "min_leaf") min_leaf = static_cast<int>(to_long(value, key));
  else if (key == "forest_rule") {
    if (value == "positive") forest_rule = FilterRule::Positive;
    else if (value == "top_fraction") forest_rule = FilterRule::TopFraction;
    else fail(Errc::ParseError, "config key forest_rule: expected positive or top_fraction");
  } else if (key == "top_fraction") top_fraction = to_double(value, key);
  else if (key == "q") {
    if (value == "auto") q = 0;
    else q = static_cast<int>(to_long(value, key));
  } else if (key == "lambda") lambda = to_double(value, key);
  else if (key == "lambda_grid") {
    lambda_grid.clear();
    if (!value.empty())
      for (const auto& item : tsv::split(value, ','))
        lambda_grid.push_back(to_double(trim(item), key));
  } else if (key == "lambda_in") lambda_in = to_double(value, key);
  else if (key == "lambda_out") lambda_out = to_double(value, key);
  else if (key == "tol") tol = to_double(value, key);
  else if (key == "seed") {
    seed = static_cast<uint64_t>(to_long(value, key));
    seed_explicit = true;
  }
  else if (key == "scale") scale = to_bool(value, key);
  else if (key == "qc") qc = to_bool(value, key);
  else if (key == "out") out = value;
  else if (key == "cond1_label") cond1_label = value;
  else if (key == "cond2_label") cond2_label = value;
  else fail(Errc::ParseError, "unknown config key '" + key + "'");
}

std::string PipelineConfig::canonical_text() const {
  std::ostringstream s;
  s << "alpha=" << tsv::fmt_g10(alpha) << '\n'
    << "adjust=" << (adjust == Adjust::None ? "none" : "benjamini_hochberg") << '\n'
    << "cond1_label=" << cond1_label << '\n'
    << "cond2_label=" << cond2_label << '\n'
    << "enrich_level=" << tsv::fmt_g10(enrich_level) << '\n'
    << "expression=" << expression << '\n'
    << "forest_rule=" << (forest_rule == FilterRule::Positive ? "positive" : "top_fraction")
    << '\n'
    << "gmt=" << gmt << '\n'
    << "labels=" << labels << '\n'
    << "lambda=" << tsv::fmt_g10(lambda) << '\n';
  s << "lambda_grid=";
  for (size_t i = 0; i < lambda_grid.size(); ++i)
    s << (i ? "," : "") << tsv::fmt_g10(lambda_grid[i]);
  s << '\n'
    << "lambda_in=" << tsv::fmt_g10(lambda_in) << '\n'
    << "lambda_out=" << tsv::fmt_g10(lambda_out) << '\n'
    << "max_added=" << max_added << '\n'
    << "min_leaf=" << min_leaf << '\n'
    << "min_links=" << min_links << '\n'
    << "mtry=" << mtry << '\n'
    << "n_trees=" << n_trees << '\n'
    << "ppi=" << ppi << '\n'
    << "ppi_threshold=" << tsv::fmt_g10(ppi_threshold) << '\n'
    << "q=" << q << '\n'
    << "qc=" << (qc ? "true" : "false") << '\n'
    << "scale=" << (scale ? "true" : "false") << '\n'
    << "seed=" << seed << '\n'
    << "tol=" << tsv::fmt_g10(tol) << '\n'
    << "top_fraction=" << tsv::fmt_g10(top_fraction) << '\n'
    << "universe=" << universe << '\n';
  return s.str();
}

void PipelineConfig::validate_inputs() const {
  for (const auto& [name, path] : std::vector<std::pair<std::string, std::string>>{
           {"expression", expression},
           {"labels", labels},
           {"ppi", ppi},
           {"gmt", gmt},
           {"universe", universe}}) {
    if (path.empty()) fail(Errc::BadArgument, "config is missing the " + name + " path");
    if (!fs::exists(path)) fail(Errc::BadArgument, name + " file does not exist: " + path);
  }
}

// ------------------------------------------------------------- artifacts --

namespace {

std::string artifact(const PipelineConfig& cfg, const char* name) {
  return (fs::path(cfg.out) / name).string();
}

void require_columns(const std::vector<std::string>& header,
                     const std::vector<std::string>& expected, const std::string& path) {
  if (header != expected) {
    std::string want;
    for (const auto& c : expected) want += (want.empty() ? "" : ", ") + c;
    std::string got;
    for (const auto& c : header) got += (got.empty() ? "" : ", ") + c;
    fail(Errc::SchemaMismatch, path + ": expected columns [" + want + "], found [" + got + "]");
  }
}

void write_pca_qc(const ExpressionMatrix& x, const Signature& sig, const std::string& path) {
  int dims = static_cast<int>(std::min<Eigen::Index>(
      2, std::min(static_cast<Eigen::Index>(sig.size()), x.n_samples())));
  PcaProjection proj;
  while (true) {
    try {
      proj = pca_projection(x, sig, dims);
      break;
    } catch (const Error& e) {
      if (e.code() == Errc::RankDeficient && dims > 1) {
        --dims;
        continue;
      }
      throw;
    }
  }
  std::ostringstream out;
  out << "sample\tcondition";
  for (int d = 0; d < dims; ++d) out << "\tpc" << (d + 1);
  out << '\n';
  for (Eigen::Index j = 0; j < x.n_samples(); ++j) {
    out << x.sample_names[static_cast<size_t>(j)] << '\t' << x.condition[static_cast<size_t>(j)];
    for (int d = 0; d < dims; ++d) out << '\t' << tsv::fmt_g10(proj.coordinates(j, d));
    out << '\n';
  }
  tsv::write_file(path, out.str());
}

Signature differential_signature(const PipelineConfig& cfg) {
  const auto results = load_diffexpr_table(artifact(cfg, "diffexpr.tsv"));
  return select_signature(results, cfg.alpha, cfg.adjust);
}

Signature filtered_signature(const PipelineConfig& cfg) {
  const Signature sig = differential_signature(cfg);
  const ImportanceReport report = load_importance_table(artifact(cfg, "importance.tsv"));
  const FilterOutcome outcome =
      filter_by_importance(report, sig, cfg.forest_rule, cfg.top_fraction);
  if (outcome.empty_after_filter)
    fail(Errc::EmptySignature, "EmptyAfterFilter: no gene survives the importance filter");
  return outcome.signature;
}

}  // namespace

std::vector<GeneTestResult> load_diffexpr_table(const std::string& path) {
  const auto lines = tsv::read_lines(path);
  if (lines.empty()) fail(Errc::SchemaMismatch, path + ": empty file");
  require_columns(tsv::split(lines[0]),
                  {"gene", "mean1", "mean2", "s2_pooled", "s2_posterior", "t_mod", "df",
                   "p_value"},
                  path);
  std::vector<GeneTestResult> out;
  for (size_t r = 1; r < lines.size(); ++r) {
    const auto f = tsv::split(lines[r]);
    if (f.size() != 8) fail(Errc::SchemaMismatch, path + ": row " + std::to_string(r + 1));
    const std::string where = path + " row " + std::to_string(r + 1);
    GeneTestResult g;
    g.gene_id = f[0];
    g.mean1 = tsv::parse_double(f[1], where);
    g.mean2 = tsv::parse_double(f[2], where);
    g.s2_pooled = tsv::parse_double(f[3], where);
    g.s2_posterior = tsv::parse_double(f[4], where);
    g.t_mod = f[5] == "inf" || f[5] == "-inf"
                  ? std::copysign(std::numeric_limits<double>::infinity(), f[5][0] == '-' ? -1 : 1)
                  : tsv::parse_double(f[5], where);
    g.df_total = f[6] == "inf" ? std::numeric_limits<double>::infinity()
                               : tsv::parse_double(f[6], where);
    g.p_value = tsv::parse_double(f[7], where);
    out.push_back(std::move(g));
  }
  return out;
}

ImportanceReport load_importance_table(const std::string& path) {
  const auto lines = tsv::read_lines(path);
  if (lines.empty()) fail(Errc::SchemaMismatch, path + ": empty file");
  require_columns(tsv::split(lines[0]), {"gene", "importance", "rank"}, path);
  ImportanceReport report;
  for (size_t r = 1; r < lines.size(); ++r) {
    const auto f = tsv::split(lines[r]);
    if (f.size() != 3) fail(Errc::SchemaMismatch, path + ": row " + std::to_string(r + 1));
    report.genes.push_back(f[0]);
    report.importance.push_back(tsv::parse_double(f[1], path + " row " + std::to_string(r + 1)));
    report.oob_count.push_back(0);
  }
  return report;
}

std::vector<EnrichmentResult> load_enrichment_table(const std::string& path) {
  const auto lines = tsv::read_lines(path);
  if (lines.empty()) fail(Errc::SchemaMismatch, path + ": empty file");
  require_columns(tsv::split(lines[0]), {"pathway", "K", "y", "n", "M", "p_value"}, path);
  std::vector<EnrichmentResult> out;
  for (size_t r = 1; r < lines.size(); ++r) {
    const auto f = tsv::split(lines[r]);
    if (f.size() != 6) fail(Errc::SchemaMismatch, path + ": row " + std::to_string(r + 1));
    const std::string where = path + " row " + std::to_string(r + 1);
    EnrichmentResult e;
    e.pathway = f[0];
    e.K = static_cast<int>(tsv::parse_long(f[1], where));
    e.y = static_cast<int>(tsv::parse_long(f[2], where));
    e.n = static_cast<int>(tsv::parse_long(f[3], where));
    e.M = static_cast<int>(tsv::parse_long(f[4], where));
    e.p_value = tsv::parse_double(f[5], where);
    out.push_back(std::move(e));
  }
  return out;
}

ClusterAssignment load_clusters_table(const std::string& path, const Signature& sig) {
  const auto lines = tsv::read_lines(path);
  if (lines.empty()) fail(Errc::SchemaMismatch, path + ": empty file");
  require_columns(tsv::split(lines[0]), {"core_pathway", "member_pathways", "genes"}, path);
  ClusterAssignment ca;
  ca.genes = sig.genes;
  ca.Q = static_cast<int>(lines.size()) - 1;
  ca.Z = Eigen::MatrixXi::Zero(static_cast<Eigen::Index>(sig.genes.size()), ca.Q);
  for (size_t r = 1; r < lines.size(); ++r) {
    const auto f = tsv::split(lines[r]);
    if (f.size() != 3) fail(Errc::SchemaMismatch, path + ": row " + std::to_string(r + 1));
    ca.member_pathways.push_back(tsv::split(f[1], ','));
    std::vector<std::string> genes = f[2].empty() ? std::vector<std::string>{} : tsv::split(f[2], ',');
    ca.cluster_genes.push_back(genes);
    const std::unordered_set<std::string> members(genes.begin(), genes.end());
    for (size_t i = 0; i < sig.genes.size(); ++i)
      if (members.count(sig.genes[i]))
        ca.Z(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(r - 1)) = 1;
  }
  return ca;
}

// ---------------------------------------------------------------- stages --

int stage_diffexpr(const PipelineConfig& cfg) {
  fs::create_directories(cfg.out);
  const auto x = load_expression(cfg.expression, cfg.labels);
  const auto results = moderated_t(x);
  std::ostringstream out;
  out << "gene\tmean1\tmean2\ts2_pooled\ts2_posterior\tt_mod\tdf\tp_value\n";
  for (const auto& r : results) {
    out << r.gene_id << '\t' << tsv::fmt_g10(r.mean1) << '\t' << tsv::fmt_g10(r.mean2) << '\t'
        << tsv::fmt_g10(r.s2_pooled) << '\t' << tsv::fmt_g10(r.s2_posterior) << '\t'
        << tsv::fmt_g10(r.t_mod) << '\t' << tsv::fmt_g10(r.df_total) << '\t'
        << tsv::fmt_g10(r.p_value) << '\n';
  }
  tsv::write_file(artifact(cfg, "diffexpr.tsv"), out.str());
  return static_cast<int>(results.size());
}

int stage_forest(const PipelineConfig& cfg) {
  const auto x = load_expression(cfg.expression, cfg.labels);
  const Signature sig = differential_signature(cfg);
  if (sig.empty())
    fail(Errc::EmptySignature, "no differentially expressed genes at alpha = " +
                                   tsv::fmt_g10(cfg.alpha));
  ForestConfig fc;
  fc.n_trees = cfg.n_trees;
  fc.mtry = cfg.mtry;
  fc.min_leaf = cfg.min_leaf;
  fc.seed = cfg.seed;
  const Forest forest = grow_forest(x, sig, fc);
  const ImportanceReport report = importance(forest, x);
  if (report.never_oob_samples > 0)
    std::cerr << "warning: " << report.never_oob_samples
              << " samples were never out-of-bag and are excluded from the OOB error\n";

  std::vector<size_t> order(report.genes.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::vector<size_t> rank_of(order.size());
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    if (report.importance[a] != report.importance[b])
      return report.importance[a] > report.importance[b];
    return a < b;
  });
  for (size_t r = 0; r < order.size(); ++r) rank_of[order[r]] = r + 1;

  std::ostringstream out;
  out << "gene\timportance\trank\n";
  for (size_t i = 0; i < report.genes.size(); ++i)
    out << report.genes[i] << '\t' << tsv::fmt_g10(report.importance[i]) << '\t' << rank_of[i]
        << '\n';
  tsv::write_file(artifact(cfg, "importance.tsv"), out.str());

  if (cfg.qc) write_pca_qc(x, sig, artifact(cfg, "pca_before.tsv"));
  return static_cast<int>(report.genes.size());
}

int stage_expand(const PipelineConfig& cfg) {
  const auto x = load_expression(cfg.expression, cfg.labels);
  const Signature retained = filtered_signature(cfg);
  const PpiNetwork net = load_ppi(cfg.ppi);
  if (net.self_loops_skipped > 0)
    std::cerr << "warning: skipped " << net.self_loops_skipped << " PPI self-loops\n";
  if (net.duplicates_collapsed > 0)
    std::cerr << "warning: collapsed " << net.duplicates_collapsed << " duplicate PPI edges\n";
  Signature expanded =
      expand_signature(retained, net, cfg.ppi_threshold, cfg.min_links, cfg.max_added);

  // Partners without expression rows cannot enter the network model.
  Signature measured;
  int dropped = 0;
  for (size_t i = 0; i < expanded.genes.size(); ++i) {
    if (x.gene_index(expanded.genes[i]) >= 0)
      measured.push(expanded.genes[i], expanded.provenance[i]);
    else
      ++dropped;
  }
  if (dropped > 0)
    std::cerr << "warning: dropped " << dropped << " PPI partners absent from the expression matrix\n";

  save_signature(measured, artifact(cfg, "signature.tsv"));
  if (cfg.qc) write_pca_qc(x, retained, artifact(cfg, "pca_after.tsv"));
  return static_cast<int>(measured.size());
}

int stage_enrich(const PipelineConfig& cfg) {
  const Signature sig = load_signature(artifact(cfg, "signature.tsv"));
  const PathwayCatalog catalog = load_catalog(cfg.gmt, cfg.universe);
  int dropped = 0;
  auto results = enrich_all(catalog, sig, &dropped);
  if (dropped > 0)
    std::cerr << "warning: " << dropped << " signature genes are outside the catalog universe\n";
  std::sort(results.begin(), results.end(), [](const EnrichmentResult& a, const EnrichmentResult& b) {
    if (a.p_value != b.p_value) return a.p_value < b.p_value;
    return a.pathway < b.pathway;
  });
  std::ostringstream out;
  out << "pathway\tK\ty\tn\tM\tp_value\n";
  for (const auto& r : results)
    out << r.pathway << '\t' << r.K << '\t' << r.y << '\t' << r.n << '\t' << r.M << '\t'
        << tsv::fmt_g10(r.p_value) << '\n';
  tsv::write_file(artifact(cfg, "enrichment.tsv"), out.str());
  return static_cast<int>(results.size());
}

int stage_cluster(const PipelineConfig& cfg) {
  const Signature sig = load_signature(artifact(cfg, "signature.tsv"));
  const PathwayCatalog catalog = load_catalog(cfg.gmt, cfg.universe);
  const auto all = load_enrichment_table(artifact(cfg, "enrichment.tsv"));
  const auto significant = significant_pathways(all, cfg.enrich_level);

  ClusterAssignment ca;
  if (significant.empty()) {
    std::cerr << "warning: no significant pathways at level " << tsv::fmt_g10(cfg.enrich_level)
              << "; the network prior is uniform\n";
    ca.Q = 0;
    ca.genes = sig.genes;
    ca.Z = Eigen::MatrixXi::Zero(static_cast<Eigen::Index>(sig.genes.size()), 0);
  } else if (significant.size() == 1) {
    Dendrogram single;
    single.n_leaves = 1;
    ca = cut_core_pathways(single, 1, significant, catalog, sig);
  } else {
    const MembershipMatrix mm = membership_matrix(significant, catalog);
    const Dendrogram dend = ward_cluster(jaccard_matrix(mm));
    int q = cfg.q;
    if (q == 0) q = suggest_q(dend);
    q = std::max(1, std::min(q, dend.n_leaves));
    ca = cut_core_pathways(dend, q, significant, catalog, sig);
  }

  std::ostringstream out;
  out << "core_pathway\tmember_pathways\tgenes\n";
  for (int k = 0; k < ca.Q; ++k) {
    out << "core_" << (k + 1) << '\t';
    const auto& members = ca.member_pathways[static_cast<size_t>(k)];
    for (size_t i = 0; i < members.size(); ++i) out << (i ? "," : "") << members[i];
    out << '\t';
    const auto& genes = ca.cluster_genes[static_cast<size_t>(k)];
    for (size_t i = 0; i < genes.size(); ++i) out << (i ? "," : "") << genes[i];
    out << '\n';
  }
  tsv::write_file(artifact(cfg, "clusters.tsv"), out.str());
  return ca.Q;
}

int stage_infer(const PipelineConfig& cfg) {
  const Signature sig = load_signature(artifact(cfg, "signature.tsv"));
  if (sig.empty()) fail(Errc::EmptySignature, "signature artifact is empty");
  const auto x_full = load_expression(cfg.expression, cfg.labels);
  ExpressionMatrix x = restrict_to_genes(x_full, sig.genes);
  if (cfg.scale) x = scale_to_unit_variance(x);

  for (Eigen::Index i = 0; i < x.p(); ++i) {
    const auto [s2, dg] = pooled_variance(x, i);
    if (s2 <= 0.0)
      fail(Errc::ZeroDiagonal, "gene " + x.gene_ids[static_cast<size_t>(i)] +
                                   " has zero variance; the network model cannot include it");
  }

  const CovariancePair s = covariance_pair(x);
  const ClusterAssignment ca = load_clusters_table(artifact(cfg, "clusters.tsv"), sig);
  PenaltyWeights weights = ca.Q > 0
                               ? penalty_weights(ca.Z, cfg.lambda_in, cfg.lambda_out)
                               : PenaltyWeights{Eigen::MatrixXd::Ones(x.p(), x.p()), 1.0,
                                                cfg.lambda_in, cfg.lambda_out};

  json diag;
  if (!cfg.lambda_grid.empty()) {
    const LambdaSelection sel = select_lambda(s, weights, cfg.lambda_grid);
    weights.lambda = sel.best;
    json table = json::array();
    for (const auto& row : sel.table)
      table.push_back({{"lambda", row.lambda},
                       {"bic", row.bic},
                       {"loglik", row.loglik},
                       {"nonzero", row.nonzero},
                       {"converged", row.converged}});
    diag["lambda_table"] = table;
  } else {
    weights.lambda = cfg.lambda;
  }

  const ConcentrationPair fit = solve_multitask(s, weights);
  if (!fit.converged)
    std::cerr << "warning: solver stopped at the iteration cap without meeting tolerances\n";
  const InferredNetwork net = extract_network(fit, sig.genes, cfg.tol);
  save_network(net, artifact(cfg, "network.tsv"));

  diag["lambda"] = weights.lambda;
  diag["iterations"] = fit.iterations;
  diag["final_objective"] = fit.objective_trace.back();
  diag["kkt_residual"] = fit.kkt_residual;
  diag["converged"] = fit.converged;
  tsv::write_file(artifact(cfg, "solver.json"), diag.dump(2) + "\n");
  return static_cast<int>(net.edges.size());
}

int stage_export(const PipelineConfig& cfg) {
  const InferredNetwork net = load_network(artifact(cfg, "network.tsv"));
  export_dot(net, artifact(cfg, "network.dot"), cfg.cond1_label, cfg.cond2_label);
  return static_cast<int>(net.edges.size());
}

void export_dot(const InferredNetwork& net, const std::string& path,
                const std::string& cond1_label, const std::string& cond2_label) {
  std::vector<std::string> nodes = net.genes;
  std::sort(nodes.begin(), nodes.end());

  struct Line {
    std::string a, b, attrs;
  };
  std::vector<Line> lines;
  for (const auto& e : net.edges) {
    std::string a = net.genes[static_cast<size_t>(e.i)];
    std::string b = net.genes[static_cast<size_t>(e.j)];
    if (b < a) std::swap(a, b);
    std::string attrs;
    if (e.present[0] && e.present[1]) attrs = "color=black, style=dashed";
    else if (e.present[0]) attrs = "color=green, style=solid";
    else attrs = "color=red, style=solid";
    lines.push_back({a, b, attrs});
  }
  std::sort(lines.begin(), lines.end(), [](const Line& x, const Line& y) {
    return std::tie(x.a, x.b) < std::tie(y.a, y.b);
  });

  std::ostringstream out;
  out << "graph differential_network {\n";
  out << "  // black dashed: both conditions; green: " << cond1_label
      << " only; red: " << cond2_label << " only\n";
  out << "  node [shape=ellipse];\n";
  for (const auto& n : nodes) out << "  \"" << n << "\";\n";
  for (const auto& l : lines)
    out << "  \"" << l.a << "\" -- \"" << l.b << "\" [" << l.attrs << "];\n";
  out << "}\n";
  tsv::write_file(path, out.str());
}

void run_pipeline(const PipelineConfig& cfg) {
  cfg.validate_inputs();
  fs::create_directories(cfg.out);

  json stage_rows;
  const std::vector<std::pair<std::string, int (*)(const PipelineConfig&)>> stages = {
      {"diffexpr", &stage_diffexpr}, {"forest", &stage_forest}, {"expand", &stage_expand},
      {"enrich", &stage_enrich},     {"cluster", &stage_cluster}, {"infer", &stage_infer},
      {"export", &stage_export}};
  for (const auto& [name, fn] : stages) {
    try {
      stage_rows[name] = fn(cfg);
    } catch (const Error& e) {
      fail(e.code(), "stage " + name + ": " + e.what());
    }
  }

  json manifest;
  manifest["artifacts"] = {"diffexpr.tsv", "importance.tsv", "signature.tsv", "enrichment.tsv",
                           "clusters.tsv", "network.tsv",    "network.dot"};
  if (cfg.qc) {
    manifest["artifacts"].push_back("pca_before.tsv");
    manifest["artifacts"].push_back("pca_after.tsv");
  }
  manifest["condition_labels"] = {{"1", cfg.cond1_label}, {"2", cfg.cond2_label}};
  manifest["config_hash"] = "fnv1a-" + [&] {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a(cfg.canonical_text())));
    return std::string(buf);
  }();
  manifest["diagnostics"] = "solver.json";
  manifest["generated_at"] = iso_utc_now();
  manifest["inputs"] = {{"expression", cfg.expression},
                        {"labels", cfg.labels},
                        {"ppi", cfg.ppi},
                        {"gmt", cfg.gmt},
                        {"universe", cfg.universe}};
  manifest["seed"] = cfg.seed;
  manifest["stage_rows"] = stage_rows;
  tsv::write_file(artifact(cfg, "manifest.json"), manifest.dump(2) + "\n");
}

// ------------------------------------------------------------------ demo --

void make_demo_dataset(int p, int q, int n1, int n2, uint64_t seed, const std::string& dir) {
  fs::create_directories(dir);
  const GroundTruthModel model = synth_network(p, q, 0.3, 0.02, seed);
  ExpressionMatrix x = sample_expression(model, n1, n2, Rng::mix(seed, 1));

  // Mean shifts in condition 2 for 70% of the genes: the differential signal.
  Rng shift_rng = Rng::derive(seed, 2);
  std::vector<bool> shifted(static_cast<size_t>(p), false);
  const int n_shifted = (7 * p + 9) / 10;
  for (int i = 0; i < n_shifted; ++i) {
    shifted[static_cast<size_t>(i)] = true;
    const double delta =
        (shift_rng.uniform() < 0.5 ? 1.0 : -1.0) * (1.2 + 0.8 * shift_rng.uniform());
    for (Eigen::Index j = 0; j < x.n_samples(); ++j)
      if (x.condition[static_cast<size_t>(j)] == 2) x.values(i, j) += delta;
  }
  save_expression(x, (fs::path(dir) / "expression.tsv").string(),
                  (fs::path(dir) / "labels.tsv").string());

  // Pathways: two overlapping thirds of each cluster's shifted genes, plus
  // two decoy sets drawn from the unshifted genes.
  std::ostringstream gmt;
  for (int c = 0; c < q; ++c) {
    std::vector<std::string> members;
    for (int i = 0; i < p; ++i)
      if (shifted[static_cast<size_t>(i)] && model.Z_true(i, c) == 1)
        members.push_back(model.gene_ids[static_cast<size_t>(i)]);
    if (members.size() < 3) continue;
    const size_t cut = (2 * members.size()) / 3;
    gmt << "PW_" << (c + 1) << "a\tcluster " << (c + 1) << " front\t";
    for (size_t i = 0; i < cut; ++i) gmt << (i ? "\t" : "") << members[i];
    gmt << '\n';
    gmt << "PW_" << (c + 1) << "b\tcluster " << (c + 1) << " back\t";
    for (size_t i = members.size() - cut; i < members.size(); ++i)
      gmt << (i > members.size() - cut ? "\t" : "") << members[i];
    gmt << '\n';
  }
  Rng decoy_rng = Rng::derive(seed, 3);
  for (int d = 0; d < 2; ++d) {
    std::vector<std::string> members;
    for (int i = 0; i < p; ++i)
      if (!shifted[static_cast<size_t>(i)] && decoy_rng.uniform() < 0.7)
        members.push_back(model.gene_ids[static_cast<size_t>(i)]);
    if (members.size() < 2) members.push_back(model.gene_ids[static_cast<size_t>(p - 1 - d)]);
    gmt << "DECOY_" << (d + 1) << "\tunshifted decoy\t";
    for (size_t i = 0; i < members.size(); ++i) gmt << (i ? "\t" : "") << members[i];
    gmt << '\n';
  }
  tsv::write_file((fs::path(dir) / "pathways.gmt").string(), gmt.str());

  // The universe mimics a full array: every measured gene plus filler ids,
  // so the signature is a minority of it (otherwise nothing can be enriched).
  std::ostringstream uni;
  for (const auto& g : model.gene_ids) uni << g << '\n';
  const int filler = std::max(100, 3 * p);
  for (int i = 0; i < filler; ++i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "U%04d", i + 1);
    uni << buf << '\n';
  }
  tsv::write_file((fs::path(dir) / "universe.txt").string(), uni.str());

  // PPI: high-confidence edges along the true network among shifted genes,
  // two unshifted hubs that qualify for expansion, and low-score noise.
  std::ostringstream ppi;
  Rng ppi_rng = Rng::derive(seed, 4);
  for (int i = 0; i < p; ++i)
    for (int j = i + 1; j < p; ++j)
      if (model.has_edge(1, i, j) && shifted[static_cast<size_t>(i)] &&
          shifted[static_cast<size_t>(j)])
        ppi << model.gene_ids[static_cast<size_t>(i)] << '\t'
            << model.gene_ids[static_cast<size_t>(j)] << '\t'
            << tsv::fmt_g10(0.9 + 0.09 * ppi_rng.uniform()) << '\n';
  int hubs = 0;
  for (int i = p - 1; i >= 0 && hubs < 2; --i) {
    if (shifted[static_cast<size_t>(i)]) continue;
    int links = 0;
    for (int j = 0; j < p && links < 2; ++j) {
      if (!shifted[static_cast<size_t>(j)]) continue;
      ppi << model.gene_ids[static_cast<size_t>(i)] << '\t'
          << model.gene_ids[static_cast<size_t>(j)] << "\t0.95\n";
      ++links;
    }
    ++hubs;
  }
  for (int k = 0; k < p; ++k) {
    const int i = static_cast<int>(ppi_rng.uniform_int(0, p - 1));
    const int j = static_cast<int>(ppi_rng.uniform_int(0, p - 1));
    if (i == j) continue;
    ppi << model.gene_ids[static_cast<size_t>(i)] << '\t' << model.gene_ids[static_cast<size_t>(j)]
        << '\t' << tsv::fmt_g10(0.2 + 0.4 * ppi_rng.uniform()) << '\n';
  }
  tsv::write_file((fs::path(dir) / "ppi.tsv").string(), ppi.str());

  std::ostringstream cfg;
  cfg << "expression = " << (fs::path(dir) / "expression.tsv").string() << '\n'
      << "labels = " << (fs::path(dir) / "labels.tsv").string() << '\n'
      << "ppi = " << (fs::path(dir) / "ppi.tsv").string() << '\n'
      << "gmt = " << (fs::path(dir) / "pathways.gmt").string() << '\n'
      << "universe = " << (fs::path(dir) / "universe.txt").string() << '\n'
      << "alpha = 1e-3\n"
      << "enrich_level = 0.05\n"
      << "ppi_threshold = 0.9\n"
      << "q = " << q << '\n'
      << "lambda = 5\n"
      << "lambda_in = 2\n"
      << "lambda_out = 0.5\n"
      << "n_trees = 300\n"
      << "seed = " << seed << '\n'
      << "out = " << (fs::path(dir) / "out").string() << '\n';
  tsv::write_file((fs::path(dir) / "config.txt").string(), cfg.str());
}

}  // namespace priornet
