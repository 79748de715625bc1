// Command-line driver for the two-condition network inference pipeline.

#include <CLI11.hpp>
#include <cstdlib>
#include <iostream>
#include <map>
#include <string>

#include "priornet/pipeline.hpp"

namespace {

using priornet::PipelineConfig;

struct CommonOpts {
  std::string config, out, expression, labels, ppi, gmt, universe;
  std::string q = "auto", adjust = "none", forest_rule = "positive", lambda_grid;
  double alpha = 1e-3, enrich_level = 0.05, ppi_threshold = 0.9;
  double lambda = 0.2, lambda_in = 2.0, lambda_out = 0.5, top_fraction = 0.5, tol = 0.0;
  long min_links = 1, max_added = -1, n_trees = 500, mtry = 0, min_leaf = 1;
  long long seed = 0;
  bool scale = false, qc = false;
  std::map<std::string, CLI::Option*> set;

  void attach(CLI::App* cmd) {
    set["config"] = cmd->add_option("-c,--config", config, "config file with key=value lines");
    set["out"] = cmd->add_option("-o,--out", out, "artifact directory");
    set["expression"] = cmd->add_option("--expression", expression, "expression TSV");
    set["labels"] = cmd->add_option("--labels", labels, "sample condition labels TSV");
    set["ppi"] = cmd->add_option("--ppi", ppi, "protein interaction TSV");
    set["gmt"] = cmd->add_option("--gmt", gmt, "pathway catalog in GMT format");
    set["universe"] = cmd->add_option("--universe", universe, "universe gene list");
    set["alpha"] = cmd->add_option("--alpha", alpha, "significance level for gene selection")
                       ->capture_default_str();
    set["adjust"] = cmd->add_option("--adjust", adjust,
                                    "p-value adjustment: none|benjamini_hochberg")
                        ->capture_default_str();
    set["enrich-level"] = cmd->add_option("--enrich-level", enrich_level,
                                          "pathway enrichment significance level")
                              ->capture_default_str();
    set["ppi-threshold"] = cmd->add_option("--ppi-threshold", ppi_threshold,
                                           "minimum interaction score for expansion")
                               ->capture_default_str();
    set["min-links"] = cmd->add_option("--min-links", min_links,
                                       "qualifying links required to add a partner")
                           ->capture_default_str();
    set["max-added"] = cmd->add_option("--max-added", max_added,
                                       "cap on added partners (-1 = unlimited)")
                           ->capture_default_str();
    set["n-trees"] =
        cmd->add_option("--n-trees", n_trees, "trees in the forest")->capture_default_str();
    set["mtry"] = cmd->add_option("--mtry", mtry, "genes tried per split (0 = ceil(sqrt(p)))")
                      ->capture_default_str();
    set["min-leaf"] =
        cmd->add_option("--min-leaf", min_leaf, "minimum leaf size")->capture_default_str();
    set["forest-rule"] = cmd->add_option("--forest-rule", forest_rule,
                                         "importance filter: positive|top_fraction")
                             ->capture_default_str();
    set["top-fraction"] = cmd->add_option("--top-fraction", top_fraction,
                                          "fraction kept by the top_fraction rule")
                              ->capture_default_str();
    set["q"] = cmd->add_option("--q", q, "core pathway count, or auto")->capture_default_str();
    set["lambda"] =
        cmd->add_option("--lambda", lambda, "global penalty level")->capture_default_str();
    set["lambda-grid"] = cmd->add_option("--lambda-grid", lambda_grid,
                                         "comma-separated grid for BIC selection");
    set["lambda-in"] = cmd->add_option("--lambda-in", lambda_in, "within-cluster penalty scale")
                           ->capture_default_str();
    set["lambda-out"] = cmd->add_option("--lambda-out", lambda_out,
                                        "between-cluster penalty scale")
                            ->capture_default_str();
    set["tol"] = cmd->add_option("--tol", tol, "edge extraction threshold")->capture_default_str();
    set["seed"] = cmd->add_option("--seed", seed, "random seed (PRIORNET_SEED as fallback)")
                      ->capture_default_str();
    set["scale"] = cmd->add_flag("--scale", scale, "scale genes to unit pooled variance");
    set["qc"] = cmd->add_flag("--qc", qc, "write PCA QC projections");
  }

  PipelineConfig build() const {
    PipelineConfig cfg;
    if (set.at("config")->count()) cfg = PipelineConfig::from_file(config);
    if (set.at("out")->count()) cfg.out = out;
    if (set.at("expression")->count()) cfg.expression = expression;
    if (set.at("labels")->count()) cfg.labels = labels;
    if (set.at("ppi")->count()) cfg.ppi = ppi;
    if (set.at("gmt")->count()) cfg.gmt = gmt;
    if (set.at("universe")->count()) cfg.universe = universe;
    if (set.at("alpha")->count()) cfg.alpha = alpha;
    if (set.at("adjust")->count()) cfg.set("adjust", adjust);
    if (set.at("enrich-level")->count()) cfg.enrich_level = enrich_level;
    if (set.at("ppi-threshold")->count()) cfg.ppi_threshold = ppi_threshold;
    if (set.at("min-links")->count()) cfg.min_links = static_cast<int>(min_links);
    if (set.at("max-added")->count()) cfg.max_added = static_cast<int>(max_added);
    if (set.at("n-trees")->count()) cfg.n_trees = static_cast<int>(n_trees);
    if (set.at("mtry")->count()) cfg.mtry = static_cast<int>(mtry);
    if (set.at("min-leaf")->count()) cfg.min_leaf = static_cast<int>(min_leaf);
    if (set.at("forest-rule")->count()) cfg.set("forest_rule", forest_rule);
    if (set.at("top-fraction")->count()) cfg.top_fraction = top_fraction;
    if (set.at("q")->count()) cfg.set("q", q);
    if (set.at("lambda")->count()) cfg.lambda = lambda;
    if (set.at("lambda-grid")->count()) cfg.set("lambda_grid", lambda_grid);
    if (set.at("lambda-in")->count()) cfg.lambda_in = lambda_in;
    if (set.at("lambda-out")->count()) cfg.lambda_out = lambda_out;
    if (set.at("tol")->count()) cfg.tol = tol;
    if (set.at("scale")->count()) cfg.scale = scale;
    if (set.at("qc")->count()) cfg.qc = qc;

    if (set.at("seed")->count()) {
      cfg.seed = static_cast<uint64_t>(seed);
      cfg.seed_explicit = true;
    } else if (!cfg.seed_explicit) {
      if (const char* env = std::getenv("PRIORNET_SEED"))
        cfg.seed = static_cast<uint64_t>(std::strtoull(env, nullptr, 10));
    }
    return cfg;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"priornet: differential gene-regulation network inference"};
  app.require_subcommand(1);

  std::map<std::string, CommonOpts> opts;
  const std::vector<std::pair<std::string, std::string>> stage_cmds = {
      {"run", "run the full 3-step pipeline"},
      {"diffexpr", "per-gene moderated t tests"},
      {"forest", "random-forest importance of the selected genes"},
      {"expand", "importance filter plus PPI partner expansion"},
      {"enrich", "pathway enrichment of the signature"},
      {"cluster", "core pathways from Jaccard/Ward clustering"},
      {"infer", "joint network estimation"},
      {"export", "DOT export of the differential network"}};
  for (const auto& [name, desc] : stage_cmds) opts[name].attach(app.add_subcommand(name, desc));

  auto* synth = app.add_subcommand("synth", "generate a synthetic demo dataset");
  int synth_p = 40, synth_q = 3, synth_n1 = 30, synth_n2 = 30;
  long long synth_seed = 42;
  std::string synth_dir = "demo_data";
  synth->add_option("--p", synth_p, "gene count")->capture_default_str();
  synth->add_option("--clusters", synth_q, "ground-truth cluster count")->capture_default_str();
  synth->add_option("--n1", synth_n1, "condition 1 replicates")->capture_default_str();
  synth->add_option("--n2", synth_n2, "condition 2 replicates")->capture_default_str();
  synth->add_option("--seed", synth_seed, "random seed")->capture_default_str();
  synth->add_option("--dir", synth_dir, "output directory")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (synth->parsed()) {
      priornet::make_demo_dataset(synth_p, synth_q, synth_n1, synth_n2,
                                  static_cast<uint64_t>(synth_seed), synth_dir);
      std::cout << "demo dataset written to " << synth_dir << "\n";
      return 0;
    }
    for (const auto& [name, desc] : stage_cmds) {
      (void)desc;
      if (!app.get_subcommand(name)->parsed()) continue;
      const PipelineConfig cfg = opts[name].build();
      if (name == "run") {
        priornet::run_pipeline(cfg);
        std::cout << "pipeline artifacts written to " << cfg.out << "\n";
      } else if (name == "diffexpr") {
        priornet::stage_diffexpr(cfg);
      } else if (name == "forest") {
        priornet::stage_forest(cfg);
      } else if (name == "expand") {
        priornet::stage_expand(cfg);
      } else if (name == "enrich") {
        priornet::stage_enrich(cfg);
      } else if (name == "cluster") {
        priornet::stage_cluster(cfg);
      } else if (name == "infer") {
        priornet::stage_infer(cfg);
      } else if (name == "export") {
        priornet::stage_export(cfg);
      }
      return 0;
    }
  } catch (const priornet::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    switch (e.code()) {
      case priornet::Errc::BadArgument:
      case priornet::Errc::ParseError:
      case priornet::Errc::SchemaMismatch:
        return 2;
      default:
        return 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
