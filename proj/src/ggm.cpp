#include "priornet/ggm.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "priornet/tsv.hpp"

namespace priornet {

PenaltyWeights penalty_weights(const Eigen::MatrixXi& Z, double lambda_in, double lambda_out) {
  if (lambda_in <= 0.0 || lambda_out <= 0.0)
    fail(Errc::BadArgument, "penalty_weights: lambda_in and lambda_out must be positive");
  const Eigen::Index p = Z.rows();
  const Eigen::Index q = Z.cols();

  PenaltyWeights w;
  w.lambda_in = lambda_in;
  w.lambda_out = lambda_out;
  w.rho = Eigen::MatrixXd::Zero(p, p);
  for (Eigen::Index i = 0; i < p; ++i) {
    const bool i_clustered = Z.row(i).sum() > 0;
    for (Eigen::Index j = i + 1; j < p; ++j) {
      const bool j_clustered = Z.row(j).sum() > 0;
      double rho;
      if (!i_clustered || !j_clustered) {
        rho = 1.0;  // "otherwise" branch
      } else {
        // Literal sum over membership pairs (q, l).
        rho = 0.0;
        for (Eigen::Index a = 0; a < q; ++a) {
          if (Z(i, a) == 0) continue;
          for (Eigen::Index b = 0; b < q; ++b) {
            if (Z(j, b) == 0) continue;
            rho += a == b ? 1.0 / lambda_in : 1.0 / lambda_out;
          }
        }
      }
      w.rho(i, j) = rho;
      w.rho(j, i) = rho;
    }
  }
  return w;
}

double coop_penalty(std::span<const double> u) {
  double pos = 0.0, neg = 0.0;
  for (double v : u) {
    if (v > 0.0) pos += v * v;
    if (v < 0.0) neg += v * v;
  }
  return std::sqrt(pos) + std::sqrt(neg);
}

void prox_coop(std::span<const double> u, double t, std::span<double> out) {
  if (t < 0.0) fail(Errc::BadArgument, "prox_coop: threshold must be nonnegative");
  const size_t m = u.size();
  if (out.size() != m) fail(Errc::BadArgument, "prox_coop: output size mismatch");
  if (t == 0.0) {
    std::copy(u.begin(), u.end(), out.begin());
    return;
  }
  if (m > 16) fail(Errc::BadArgument, "prox_coop: too many conditions");

  // One candidate per sign orthant: within an orthant the positive and
  // negative blocks decouple into group soft-thresholds.
  double best_obj = 0.0;
  bool have_best = false;
  std::vector<double> cand(m), best(m);
  for (uint32_t pattern = 0; pattern < (1u << m); ++pattern) {
    double pos_norm2 = 0.0, neg_norm2 = 0.0;
    for (size_t c = 0; c < m; ++c) {
      const bool positive = (pattern >> c) & 1u;
      const double part = positive ? std::max(u[c], 0.0) : std::min(u[c], 0.0);
      cand[c] = part;
      (positive ? pos_norm2 : neg_norm2) += part * part;
    }
    const double pos_norm = std::sqrt(pos_norm2);
    const double neg_norm = std::sqrt(neg_norm2);
    const double pos_scale = pos_norm > t ? 1.0 - t / pos_norm : 0.0;
    const double neg_scale = neg_norm > t ? 1.0 - t / neg_norm : 0.0;
    for (size_t c = 0; c < m; ++c) cand[c] *= ((pattern >> c) & 1u) ? pos_scale : neg_scale;

    double obj = t * coop_penalty(cand);
    for (size_t c = 0; c < m; ++c) obj += 0.5 * (cand[c] - u[c]) * (cand[c] - u[c]);
    if (!have_best || obj < best_obj) {
      best_obj = obj;
      best = cand;
      have_best = true;
    }
  }
  std::copy(best.begin(), best.end(), out.begin());
}

namespace {

struct SmoothEval {
  double value = 0.0;
  std::vector<Eigen::MatrixXd> inverse;
  bool pd = false;
};

// sum_c (n_c/2)(log det K_c - tr(S_c K_c)); inverses kept for the gradient.
SmoothEval smooth_part(const std::vector<Eigen::MatrixXd>& K,
                       const std::vector<Eigen::MatrixXd>& S, const std::vector<double>& n,
                       bool want_inverse) {
  SmoothEval ev;
  const Eigen::Index p = S[0].rows();
  for (size_t c = 0; c < K.size(); ++c) {
    Eigen::LLT<Eigen::MatrixXd> llt(K[c]);
    if (llt.info() != Eigen::Success) return ev;
    double logdet = 0.0;
    const auto& L = llt.matrixLLT();
    for (Eigen::Index i = 0; i < p; ++i) logdet += 2.0 * std::log(L(i, i));
    const double tr = (S[c].array() * K[c].array()).sum();
    ev.value += 0.5 * n[c] * (logdet - tr);
    if (want_inverse) {
      Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(p, p));
      inv = 0.5 * (inv + inv.transpose().eval());
      ev.inverse.push_back(std::move(inv));
    }
  }
  ev.pd = true;
  return ev;
}

double penalty_part(const std::vector<Eigen::MatrixXd>& K, const Eigen::MatrixXd& rho,
                    double lambda) {
  const Eigen::Index p = K[0].rows();
  const size_t m = K.size();
  std::vector<double> u(m);
  double sum = 0.0;
  for (Eigen::Index i = 0; i < p; ++i) {
    for (Eigen::Index j = i + 1; j < p; ++j) {
      for (size_t c = 0; c < m; ++c) u[c] = K[c](i, j);
      sum += 2.0 * rho(i, j) * coop_penalty(u);  // ordered pairs count both (i,j) and (j,i)
    }
  }
  return lambda * sum;
}

struct JointResult {
  std::vector<Eigen::MatrixXd> K;
  std::vector<double> trace;
  double kkt = 0.0;
  bool converged = false;
  int iterations = 0;
};

JointResult solve_joint(const std::vector<Eigen::MatrixXd>& S, const std::vector<double>& n,
                        const Eigen::MatrixXd& rho, double lambda, const SolverConfig& cfg) {
  const size_t m = S.size();
  const Eigen::Index p = S[0].rows();
  for (size_t c = 0; c < m; ++c) {
    if (S[c].rows() != p || S[c].cols() != p) fail(Errc::BadArgument, "solver: S sizes disagree");
    if ((S[c] - S[c].transpose()).cwiseAbs().maxCoeff() > 1e-12)
      fail(Errc::BadArgument, "solver: S must be symmetric");
    for (Eigen::Index i = 0; i < p; ++i)
      if (!(S[c](i, i) > 0.0))
        fail(Errc::ZeroDiagonal, "solver: zero variance on the diagonal at gene index " +
                                     std::to_string(i) + " (condition " + std::to_string(c + 1) +
                                     ")");
  }
  if (rho.rows() != p || rho.cols() != p) fail(Errc::BadArgument, "solver: rho size mismatch");
  if (lambda < 0.0) fail(Errc::BadArgument, "solver: lambda must be nonnegative");

  JointResult res;
  res.K.resize(m);
  for (size_t c = 0; c < m; ++c) {
    res.K[c] = Eigen::MatrixXd::Zero(p, p);
    for (Eigen::Index i = 0; i < p; ++i) res.K[c](i, i) = 1.0 / (S[c](i, i) + cfg.init_eps);
  }

  SmoothEval cur = smooth_part(res.K, S, n, true);
  double obj = cur.value - penalty_part(res.K, rho, lambda);
  res.trace.push_back(obj);

  double step = 1.0;
  std::vector<Eigen::MatrixXd> next(m, Eigen::MatrixXd(p, p));
  std::vector<double> u(m), v(m);

  for (int iter = 0; iter < cfg.max_iter; ++iter) {
    res.iterations = iter + 1;
    step = std::min(step * 2.0, 1e6);

    SmoothEval cand;
    bool accepted = false;
    for (int bt = 0; bt < cfg.max_backtrack; ++bt) {
      for (size_t c = 0; c < m; ++c) {
        const Eigen::MatrixXd grad = 0.5 * n[c] * (cur.inverse[c] - S[c]);
        next[c] = res.K[c] + step * grad;
      }
      for (Eigen::Index i = 0; i < p; ++i) {
        for (Eigen::Index j = i + 1; j < p; ++j) {
          for (size_t c = 0; c < m; ++c) u[c] = next[c](i, j);
          prox_coop(u, step * lambda * rho(i, j), v);
          for (size_t c = 0; c < m; ++c) {
            next[c](i, j) = v[c];
            next[c](j, i) = v[c];
          }
        }
      }

      cand = smooth_part(next, S, n, true);
      if (cand.pd) {
        double linear = 0.0, dist2 = 0.0;
        for (size_t c = 0; c < m; ++c) {
          const Eigen::MatrixXd grad = 0.5 * n[c] * (cur.inverse[c] - S[c]);
          const Eigen::MatrixXd diff = next[c] - res.K[c];
          linear += (grad.array() * diff.array()).sum();
          dist2 += diff.squaredNorm();
        }
        const double bound = cur.value + linear - dist2 / (2.0 * step);
        if (cand.value >= bound - 1e-12 * (1.0 + std::abs(cur.value))) {
          res.kkt = std::sqrt(dist2) / step;
          accepted = true;
          break;
        }
      }
      step *= 0.5;
    }
    if (!accepted) break;  // step collapsed: no further ascent representable

    for (size_t c = 0; c < m; ++c) res.K[c] = next[c];
    cur = std::move(cand);
    const double new_obj = cur.value - penalty_part(res.K, rho, lambda);
    res.trace.push_back(new_obj);
    const bool small_change = std::abs(new_obj - obj) <= cfg.rel_obj_tol * (1.0 + std::abs(new_obj));
    obj = new_obj;
    if (small_change || res.kkt <= cfg.kkt_tol) {
      res.converged = true;
      break;
    }
  }
  return res;
}

}  // namespace

double objective(const std::array<Eigen::MatrixXd, 2>& K, const CovariancePair& S,
                 const PenaltyWeights& weights) {
  const std::vector<Eigen::MatrixXd> k = {K[0], K[1]};
  const std::vector<Eigen::MatrixXd> s = {S.S[0], S.S[1]};
  const std::vector<double> n = {static_cast<double>(S.n[0]), static_cast<double>(S.n[1])};
  const SmoothEval ev = smooth_part(k, s, n, false);
  if (!ev.pd) fail(Errc::NotPositiveDefinite, "objective: K is not positive definite");
  return ev.value - penalty_part(k, weights.rho, weights.lambda);
}

ConcentrationPair solve_multitask(const CovariancePair& S, const PenaltyWeights& weights,
                                  SolverConfig cfg) {
  const std::vector<Eigen::MatrixXd> s = {S.S[0], S.S[1]};
  const std::vector<double> n = {static_cast<double>(S.n[0]), static_cast<double>(S.n[1])};
  JointResult jr = solve_joint(s, n, weights.rho, weights.lambda, cfg);
  ConcentrationPair out;
  out.K[0] = std::move(jr.K[0]);
  out.K[1] = std::move(jr.K[1]);
  out.objective_trace = std::move(jr.trace);
  out.kkt_residual = jr.kkt;
  out.converged = jr.converged;
  out.iterations = jr.iterations;
  return out;
}

SingleFit solve_single(const Eigen::MatrixXd& S, int n, const Eigen::MatrixXd& rho, double lambda,
                       SolverConfig cfg) {
  const std::vector<Eigen::MatrixXd> s = {S};
  const std::vector<double> ns = {static_cast<double>(n)};
  JointResult jr = solve_joint(s, ns, rho, lambda, cfg);
  SingleFit out;
  out.K = std::move(jr.K[0]);
  out.objective_trace = std::move(jr.trace);
  out.kkt_residual = jr.kkt;
  out.converged = jr.converged;
  out.iterations = jr.iterations;
  return out;
}

InferredNetwork extract_network(const ConcentrationPair& pair,
                                const std::vector<std::string>& gene_ids, double tol) {
  const Eigen::Index p = pair.K[0].rows();
  if (static_cast<Eigen::Index>(gene_ids.size()) != p)
    fail(Errc::BadArgument, "extract_network: gene id count mismatch");

  InferredNetwork net;
  net.genes = gene_ids;
  for (Eigen::Index i = 0; i < p; ++i) {
    for (Eigen::Index j = i + 1; j < p; ++j) {
      NetworkEdge e;
      e.i = static_cast<int>(i);
      e.j = static_cast<int>(j);
      bool any = false;
      for (int c = 0; c < 2; ++c) {
        const double k = pair.K[c](i, j);
        e.pcor[static_cast<size_t>(c)] = -k / std::sqrt(pair.K[c](i, i) * pair.K[c](j, j));
        if (std::abs(k) > tol) {
          e.present[static_cast<size_t>(c)] = true;
          e.sign[static_cast<size_t>(c)] = e.pcor[static_cast<size_t>(c)] > 0.0 ? 1 : -1;
          any = true;
        } else {
          e.pcor[static_cast<size_t>(c)] = 0.0;
        }
      }
      if (any) net.edges.push_back(e);
    }
  }
  return net;
}

void save_network(const InferredNetwork& net, const std::string& path) {
  std::ostringstream out;
  out << "gene_i\tgene_j\tin_cond1\tin_cond2\tpcor1\tpcor2\n";
  for (const auto& e : net.edges) {
    out << net.genes[static_cast<size_t>(e.i)] << '\t' << net.genes[static_cast<size_t>(e.j)]
        << '\t' << (e.present[0] ? 1 : 0) << '\t' << (e.present[1] ? 1 : 0) << '\t'
        << tsv::fmt_g10(e.pcor[0]) << '\t' << tsv::fmt_g10(e.pcor[1]) << '\n';
  }
  tsv::write_file(path, out.str());
}

InferredNetwork load_network(const std::string& path) {
  const auto lines = tsv::read_lines(path);
  const std::vector<std::string> expected = {"gene_i", "gene_j", "in_cond1",
                                             "in_cond2", "pcor1", "pcor2"};
  if (lines.empty() || tsv::split(lines[0]) != expected)
    fail(Errc::SchemaMismatch, path + ": expected network columns " +
                                   "gene_i, gene_j, in_cond1, in_cond2, pcor1, pcor2");
  InferredNetwork net;
  std::vector<std::pair<std::string, std::string>> pairs;
  for (size_t r = 1; r < lines.size(); ++r) {
    const auto fields = tsv::split(lines[r]);
    if (fields.size() != 6) fail(Errc::SchemaMismatch, path + ": row " + std::to_string(r + 1));
    NetworkEdge e;
    for (int c = 0; c < 2; ++c) {
      const long flag = tsv::parse_long(fields[static_cast<size_t>(2 + c)],
                                        path + " row " + std::to_string(r + 1));
      e.present[static_cast<size_t>(c)] = flag != 0;
      e.pcor[static_cast<size_t>(c)] = tsv::parse_double(fields[static_cast<size_t>(4 + c)],
                                                         path + " row " + std::to_string(r + 1));
      e.sign[static_cast<size_t>(c)] =
          e.present[static_cast<size_t>(c)] ? (e.pcor[static_cast<size_t>(c)] > 0.0 ? 1 : -1) : 0;
    }
    pairs.emplace_back(fields[0], fields[1]);
    net.edges.push_back(e);
  }
  // Rebuild the gene list in first-appearance order.
  for (size_t k = 0; k < pairs.size(); ++k) {
    for (const auto& g : {pairs[k].first, pairs[k].second}) {
      if (std::find(net.genes.begin(), net.genes.end(), g) == net.genes.end())
        net.genes.push_back(g);
    }
    net.edges[k].i = static_cast<int>(
        std::find(net.genes.begin(), net.genes.end(), pairs[k].first) - net.genes.begin());
    net.edges[k].j = static_cast<int>(
        std::find(net.genes.begin(), net.genes.end(), pairs[k].second) - net.genes.begin());
  }
  return net;
}

LambdaSelection select_lambda(const CovariancePair& S, PenaltyWeights weights,
                              const std::vector<double>& grid, SolverConfig cfg) {
  if (grid.empty()) fail(Errc::BadArgument, "select_lambda: empty grid");
  const double log_n = std::log(static_cast<double>(S.n[0] + S.n[1]));
  const Eigen::Index p = S.S[0].rows();

  LambdaSelection sel;
  for (double lambda : grid) {
    weights.lambda = lambda;
    const ConcentrationPair fit = solve_multitask(S, weights, cfg);
    LambdaScore score;
    score.lambda = lambda;
    score.converged = fit.converged;
    const std::vector<Eigen::MatrixXd> k = {fit.K[0], fit.K[1]};
    const std::vector<Eigen::MatrixXd> s = {S.S[0], S.S[1]};
    const std::vector<double> n = {static_cast<double>(S.n[0]), static_cast<double>(S.n[1])};
    score.loglik = smooth_part(k, s, n, false).value;
    for (int c = 0; c < 2; ++c)
      for (Eigen::Index i = 0; i < p; ++i)
        for (Eigen::Index j = i + 1; j < p; ++j)
          if (fit.K[static_cast<size_t>(c)](i, j) != 0.0) ++score.nonzero;
    score.bic = -2.0 * score.loglik + log_n * (score.nonzero + 2.0 * static_cast<double>(p));
    sel.table.push_back(score);
  }
  size_t best = 0;
  for (size_t k = 1; k < sel.table.size(); ++k)
    if (sel.table[k].bic < sel.table[best].bic) best = k;
  sel.best = sel.table[best].lambda;
  return sel;
}

}  // namespace priornet
