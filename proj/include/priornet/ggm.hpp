#pragma once

#include <Eigen/Dense>
#include <array>
#include <span>
#include <string>
#include <vector>

#include "priornet/enrich.hpp"
#include "priornet/expression.hpp"

namespace priornet {

// Pairwise penalty coefficients from the overlapping cluster structure:
// shared clusters contribute 1/lambda_in, distinct-cluster pairs contribute
// 1/lambda_out, and pairs touching an unclustered gene get weight 1.
struct PenaltyWeights {
  Eigen::MatrixXd rho;      // symmetric, nonnegative; diagonal unused
  double lambda = 1.0;      // global penalty level
  double lambda_in = 1.0;
  double lambda_out = 1.0;
};

// Z is genes x Q with 0/1 entries; all-zero rows mark unclustered genes.
PenaltyWeights penalty_weights(const Eigen::MatrixXi& Z, double lambda_in, double lambda_out);

// ||u_+||_2 + ||u_-||_2 over the per-condition vector u.
double coop_penalty(std::span<const double> u);

// argmin_v 0.5*||v - u||^2 + t * coop_penalty(v), solved exactly by sign-
// orthant case analysis; produces exact zeros.
void prox_coop(std::span<const double> u, double t, std::span<double> out);

struct SolverConfig {
  int max_iter = 5000;
  double rel_obj_tol = 1e-8;
  double kkt_tol = 1e-6;
  double init_eps = 1e-4;  // K0 = diag(1/(S_ii + init_eps))
  int max_backtrack = 60;
};

struct ConcentrationPair {
  std::array<Eigen::MatrixXd, 2> K;
  std::vector<double> objective_trace;
  double kkt_residual = 0.0;
  bool converged = false;
  int iterations = 0;
};

// Penalized log-likelihood of the pair (Eq. objective of the joint model):
// sum_c (n_c/2)(log det K_c - tr(S_c K_c)) minus the weighted cooperative
// penalty over ordered pairs i != j.
double objective(const std::array<Eigen::MatrixXd, 2>& K, const CovariancePair& S,
                 const PenaltyWeights& weights);

// Proximal gradient ascent with positive-definiteness-preserving
// backtracking; off-diagonals are updated jointly across conditions through
// prox_coop, the diagonal is unpenalized.
ConcentrationPair solve_multitask(const CovariancePair& S, const PenaltyWeights& weights,
                                  SolverConfig cfg = {});

// Single-condition fit with the same machinery (the cooperative penalty of a
// 1-vector is the lasso); baseline for joint-versus-independent comparisons.
struct SingleFit {
  Eigen::MatrixXd K;
  std::vector<double> objective_trace;
  double kkt_residual = 0.0;
  bool converged = false;
  int iterations = 0;
};

SingleFit solve_single(const Eigen::MatrixXd& S, int n, const Eigen::MatrixXd& rho, double lambda,
                       SolverConfig cfg = {});

struct NetworkEdge {
  int i = 0, j = 0;                       // i < j
  std::array<bool, 2> present = {false, false};
  std::array<double, 2> pcor = {0.0, 0.0};  // -K_ij / sqrt(K_ii K_jj)
  std::array<int, 2> sign = {0, 0};
};

struct InferredNetwork {
  std::vector<std::string> genes;
  std::vector<NetworkEdge> edges;
};

// The prox produces exact zeros, so tol defaults to 0; it is kept for
// solutions produced by other solvers.
InferredNetwork extract_network(const ConcentrationPair& pair,
                                const std::vector<std::string>& gene_ids, double tol = 0.0);

// Network TSV: `gene_i gene_j in_cond1 in_cond2 pcor1 pcor2` (tab-separated).
void save_network(const InferredNetwork& net, const std::string& path);
InferredNetwork load_network(const std::string& path);

struct LambdaScore {
  double lambda = 0.0;
  double bic = 0.0;
  double loglik = 0.0;
  int nonzero = 0;  // upper-triangle nonzeros across both conditions
  bool converged = false;
};

struct LambdaSelection {
  double best = 0.0;
  std::vector<LambdaScore> table;
};

// BIC over a lambda grid: -2*loglik + log(n1+n2)*(nonzero + 2p).
LambdaSelection select_lambda(const CovariancePair& S, PenaltyWeights weights,
                              const std::vector<double>& grid, SolverConfig cfg = {});

}  // namespace priornet
