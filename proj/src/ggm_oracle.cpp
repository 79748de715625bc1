#include "priornet/ggm_oracle.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <functional>
#include <set>

#include "priornet/rng.hpp"

namespace priornet {

namespace {

constexpr double kNegInf = -1e100;

// Objective evaluation on an eigenvalue route, deliberately separate from the
// solver's Cholesky-based path.
struct OracleProblem {
  std::array<Eigen::MatrixXd, 2> S;
  std::array<double, 2> n;
  Eigen::MatrixXd rho;
  double lambda = 0.0;
  int p = 0;

  double value(const std::array<Eigen::MatrixXd, 2>& K) const {
    double total = 0.0;
    for (int c = 0; c < 2; ++c) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig;
      eig.compute(K[static_cast<size_t>(c)], Eigen::EigenvaluesOnly);
      const auto& ev = eig.eigenvalues();
      if (ev.minCoeff() <= 0.0) return kNegInf;
      double logdet = 0.0;
      for (Eigen::Index i = 0; i < ev.size(); ++i) logdet += std::log(ev(i));
      const double tr =
          (S[static_cast<size_t>(c)].array() * K[static_cast<size_t>(c)].array()).sum();
      total += 0.5 * n[static_cast<size_t>(c)] * (logdet - tr);
    }
    for (int i = 0; i < p; ++i) {
      for (int j = 0; j < p; ++j) {
        if (i == j) continue;
        const double a = K[0](i, j);
        const double b = K[1](i, j);
        const double pos = std::sqrt(std::max(a, 0.0) * std::max(a, 0.0) +
                                     std::max(b, 0.0) * std::max(b, 0.0));
        const double neg = std::sqrt(std::min(a, 0.0) * std::min(a, 0.0) +
                                     std::min(b, 0.0) * std::min(b, 0.0));
        total -= lambda * rho(i, j) * (pos + neg);
      }
    }
    return total;
  }
};

// --- Cholesky parameterization for the Nelder-Mead phase ------------------

int tri_size(int p) { return p * (p + 1) / 2; }

std::array<Eigen::MatrixXd, 2> factors_to_matrices(const Eigen::VectorXd& x, int p) {
  std::array<Eigen::MatrixXd, 2> K;
  int at = 0;
  for (int c = 0; c < 2; ++c) {
    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(p, p);
    for (int i = 0; i < p; ++i)
      for (int j = 0; j <= i; ++j) L(i, j) = x(at++);
    K[static_cast<size_t>(c)] = L * L.transpose();
  }
  return K;
}

Eigen::VectorXd matrices_to_factors(const std::array<Eigen::MatrixXd, 2>& K, int p) {
  Eigen::VectorXd x(2 * tri_size(p));
  int at = 0;
  for (int c = 0; c < 2; ++c) {
    Eigen::LDLT<Eigen::MatrixXd> ldlt(K[static_cast<size_t>(c)]);
    Eigen::MatrixXd L = Eigen::MatrixXd::Identity(p, p);
    if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
      Eigen::MatrixXd lower = ldlt.matrixL();
      Eigen::VectorXd d = ldlt.vectorD().cwiseMax(1e-12).cwiseSqrt();
      L = ldlt.transpositionsP().transpose() * (lower * d.asDiagonal());
    }
    for (int i = 0; i < p; ++i)
      for (int j = 0; j <= i; ++j) x(at++) = L(i, j);
  }
  return x;
}

// Compact Nelder-Mead, maximizing f.
Eigen::VectorXd nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                            const Eigen::VectorXd& x0, double scale, int max_iter) {
  const int d = static_cast<int>(x0.size());
  std::vector<Eigen::VectorXd> pts(static_cast<size_t>(d + 1), x0);
  std::vector<double> vals(static_cast<size_t>(d + 1));
  for (int k = 1; k <= d; ++k) pts[static_cast<size_t>(k)](k - 1) += scale;
  for (int k = 0; k <= d; ++k) vals[static_cast<size_t>(k)] = f(pts[static_cast<size_t>(k)]);

  const auto order = [&] {
    std::vector<int> idx(static_cast<size_t>(d + 1));
    for (int k = 0; k <= d; ++k) idx[static_cast<size_t>(k)] = k;
    std::sort(idx.begin(), idx.end(),
              [&](int a, int b) { return vals[static_cast<size_t>(a)] > vals[static_cast<size_t>(b)]; });
    std::vector<Eigen::VectorXd> np(static_cast<size_t>(d + 1));
    std::vector<double> nv(static_cast<size_t>(d + 1));
    for (int k = 0; k <= d; ++k) {
      np[static_cast<size_t>(k)] = pts[static_cast<size_t>(idx[static_cast<size_t>(k)])];
      nv[static_cast<size_t>(k)] = vals[static_cast<size_t>(idx[static_cast<size_t>(k)])];
    }
    pts = std::move(np);
    vals = std::move(nv);
  };

  for (int iter = 0; iter < max_iter; ++iter) {
    order();
    if (std::abs(vals[0] - vals[static_cast<size_t>(d)]) <= 1e-13 * (1.0 + std::abs(vals[0])))
      break;
    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(d);
    for (int k = 0; k < d; ++k) centroid += pts[static_cast<size_t>(k)];
    centroid /= static_cast<double>(d);

    const Eigen::VectorXd worst = pts[static_cast<size_t>(d)];
    const Eigen::VectorXd refl = centroid + (centroid - worst);
    const double f_refl = f(refl);
    if (f_refl > vals[0]) {
      const Eigen::VectorXd expa = centroid + 2.0 * (centroid - worst);
      const double f_expa = f(expa);
      if (f_expa > f_refl) {
        pts[static_cast<size_t>(d)] = expa;
        vals[static_cast<size_t>(d)] = f_expa;
      } else {
        pts[static_cast<size_t>(d)] = refl;
        vals[static_cast<size_t>(d)] = f_refl;
      }
      continue;
    }
    if (f_refl > vals[static_cast<size_t>(d - 1)]) {
      pts[static_cast<size_t>(d)] = refl;
      vals[static_cast<size_t>(d)] = f_refl;
      continue;
    }
    const Eigen::VectorXd contr = centroid + 0.5 * (worst - centroid);
    const double f_contr = f(contr);
    if (f_contr > vals[static_cast<size_t>(d)]) {
      pts[static_cast<size_t>(d)] = contr;
      vals[static_cast<size_t>(d)] = f_contr;
      continue;
    }
    for (int k = 1; k <= d; ++k) {
      pts[static_cast<size_t>(k)] = pts[0] + 0.5 * (pts[static_cast<size_t>(k)] - pts[0]);
      vals[static_cast<size_t>(k)] = f(pts[static_cast<size_t>(k)]);
    }
  }
  order();
  return pts[0];
}

// --- Sign-pattern refinement ----------------------------------------------

// Slot layout: for each unordered pair (i<j) and condition c, one entry of
// the pattern in {-1, 0, +1}.
struct Pattern {
  std::vector<int> sign;  // size = 2 * #pairs
  bool operator<(const Pattern& o) const { return sign < o.sign; }
};

struct Refiner {
  const OracleProblem& prob;
  std::vector<std::pair<int, int>> pairs;

  explicit Refiner(const OracleProblem& problem) : prob(problem) {
    for (int i = 0; i < prob.p; ++i)
      for (int j = i + 1; j < prob.p; ++j) pairs.emplace_back(i, j);
  }

  Pattern snap(const std::array<Eigen::MatrixXd, 2>& K, double tau) const {
    Pattern pat;
    for (const auto& [i, j] : pairs) {
      for (int c = 0; c < 2; ++c) {
        const double v = K[static_cast<size_t>(c)](i, j);
        pat.sign.push_back(std::abs(v) > tau ? (v > 0 ? 1 : -1) : 0);
      }
    }
    return pat;
  }

  std::array<Eigen::MatrixXd, 2> apply(const std::array<Eigen::MatrixXd, 2>& K,
                                       const Pattern& pat) const {
    auto out = K;
    for (size_t k = 0; k < pairs.size(); ++k) {
      const auto& [i, j] = pairs[k];
      for (int c = 0; c < 2; ++c) {
        double v = out[static_cast<size_t>(c)](i, j);
        const int s = pat.sign[2 * k + static_cast<size_t>(c)];
        if (s == 0 || v * s < 0.0) v = 0.0;
        out[static_cast<size_t>(c)](i, j) = v;
        out[static_cast<size_t>(c)](j, i) = v;
      }
    }
    // Restore positive definiteness if the snap broke it.
    for (int c = 0; c < 2; ++c) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig;
      eig.compute(out[static_cast<size_t>(c)], Eigen::EigenvaluesOnly);
      const double lmin = eig.eigenvalues().minCoeff();
      if (lmin < 1e-6)
        out[static_cast<size_t>(c)].diagonal().array() += 1e-6 - lmin;
    }
    return out;
  }

  // Cyclic exact line searches over the free coordinates of the pattern.
  double ascend(std::array<Eigen::MatrixXd, 2>& K, const Pattern& pat) const {
    struct Coord {
      int c, i, j;     // j == i for diagonal entries
      double lo, hi;   // sign box
    };
    std::vector<Coord> coords;
    for (int c = 0; c < 2; ++c)
      for (int i = 0; i < prob.p; ++i)
        coords.push_back({c, i, i, 1e-10, std::numeric_limits<double>::infinity()});
    for (size_t k = 0; k < pairs.size(); ++k) {
      const auto& [i, j] = pairs[k];
      for (int c = 0; c < 2; ++c) {
        const int s = pat.sign[2 * k + static_cast<size_t>(c)];
        if (s == 0) continue;
        coords.push_back({c, i, j, s > 0 ? 0.0 : -std::numeric_limits<double>::infinity(),
                          s > 0 ? std::numeric_limits<double>::infinity() : 0.0});
      }
    }

    double cur = prob.value(K);
    for (int cycle = 0; cycle < 300; ++cycle) {
      const double before = cur;
      for (const auto& coord : coords) {
        cur = line_max(K, coord.c, coord.i, coord.j, coord.lo, coord.hi, cur);
      }
      if (cur - before <= 1e-13 * (1.0 + std::abs(cur))) break;
    }
    return cur;
  }

  double line_max(std::array<Eigen::MatrixXd, 2>& K, int c, int i, int j, double lo, double hi,
                  double f0) const {
    auto& M = K[static_cast<size_t>(c)];
    const auto eval = [&](double v) {
      M(i, j) = v;
      M(j, i) = v;
      return prob.value(K);
    };
    const double x0 = M(i, j);

    // Bracket the concave maximum starting from x0.
    double a = x0, b = x0;
    double fa = f0, fb = f0;
    double h = 0.5 * (1.0 + std::abs(x0));
    double best_x = x0, best_f = f0;
    for (int k = 0; k < 60; ++k) {  // expand right
      const double x = std::min(x0 + h, hi);
      const double fx = eval(x);
      if (fx > best_f) {
        best_f = fx;
        best_x = x;
      }
      b = x;
      fb = fx;
      if (x >= hi || fx < best_f) break;
      h *= 2.0;
    }
    h = 0.5 * (1.0 + std::abs(x0));
    for (int k = 0; k < 60; ++k) {  // expand left
      const double x = std::max(x0 - h, lo);
      const double fx = eval(x);
      if (fx > best_f) {
        best_f = fx;
        best_x = x;
      }
      a = x;
      fa = fx;
      if (x <= lo || fx < best_f) break;
      h *= 2.0;
    }
    (void)fa;
    (void)fb;

    // Golden section on [a, b] around the incumbent.
    const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = b - phi * (b - a);
    double x2 = a + phi * (b - a);
    double f1 = eval(x1);
    double f2 = eval(x2);
    for (int k = 0; k < 200 && (b - a) > 1e-12 * (1.0 + std::abs(a) + std::abs(b)); ++k) {
      if (f1 < f2) {
        a = x1;
        x1 = x2;
        f1 = f2;
        x2 = a + phi * (b - a);
        f2 = eval(x2);
      } else {
        b = x2;
        x2 = x1;
        f2 = f1;
        x1 = b - phi * (b - a);
        f1 = eval(x1);
      }
    }
    const double xm = f1 > f2 ? x1 : x2;
    const double fm = std::max(f1, f2);
    if (fm > best_f) {
      best_f = fm;
      best_x = xm;
    }
    M(i, j) = best_x;
    M(j, i) = best_x;
    return best_f;
  }
};

}  // namespace

ConcentrationPair oracle_solve_small(const CovariancePair& S, const PenaltyWeights& weights) {
  const int p = static_cast<int>(S.S[0].rows());
  if (p > 4) fail(Errc::BadArgument, "oracle_solve_small: p must be <= 4");
  for (int c = 0; c < 2; ++c)
    for (int i = 0; i < p; ++i)
      if (!(S.S[static_cast<size_t>(c)](i, i) > 0.0))
        fail(Errc::ZeroDiagonal, "oracle_solve_small: zero variance at gene index " +
                                     std::to_string(i));

  OracleProblem prob;
  prob.S = {S.S[0], S.S[1]};
  prob.n = {static_cast<double>(S.n[0]), static_cast<double>(S.n[1])};
  prob.rho = weights.rho;
  prob.lambda = weights.lambda;
  prob.p = p;

  ConcentrationPair out;
  if (p == 1) {
    for (int c = 0; c < 2; ++c)
      out.K[static_cast<size_t>(c)] =
          Eigen::MatrixXd::Constant(1, 1, 1.0 / S.S[static_cast<size_t>(c)](0, 0));
    out.converged = true;
    out.objective_trace = {prob.value(out.K)};
    out.kkt_residual = 0.0;
    return out;
  }

  const auto objective_of = [&](const Eigen::VectorXd& x) {
    return prob.value(factors_to_matrices(x, p));
  };

  // Phase 1: multi-start Nelder-Mead on Cholesky factors.
  std::vector<Eigen::VectorXd> starts;
  {
    std::array<Eigen::MatrixXd, 2> diag_init;
    for (int c = 0; c < 2; ++c) {
      diag_init[static_cast<size_t>(c)] = Eigen::MatrixXd::Zero(p, p);
      for (int i = 0; i < p; ++i)
        diag_init[static_cast<size_t>(c)](i, i) = 1.0 / (S.S[static_cast<size_t>(c)](i, i) + 1e-4);
    }
    starts.push_back(matrices_to_factors(diag_init, p));

    for (double ridge : {1e-3, 0.5}) {
      std::array<Eigen::MatrixXd, 2> shr;
      for (int c = 0; c < 2; ++c) {
        const Eigen::MatrixXd reg =
            S.S[static_cast<size_t>(c)] + ridge * Eigen::MatrixXd::Identity(p, p);
        shr[static_cast<size_t>(c)] = reg.inverse();
        shr[static_cast<size_t>(c)] =
            0.5 * (shr[static_cast<size_t>(c)] + shr[static_cast<size_t>(c)].transpose().eval());
      }
      starts.push_back(matrices_to_factors(shr, p));
    }

    Rng rng(0x5eed);
    for (int k = 0; k < 3; ++k) {
      Eigen::VectorXd jitter = starts[0];
      for (Eigen::Index t = 0; t < jitter.size(); ++t) jitter(t) += 0.2 * rng.normal();
      starts.push_back(jitter);
    }
  }

  Eigen::VectorXd best_x;
  double best_val = kNegInf;
  for (const auto& start : starts) {
    Eigen::VectorXd x = start;
    for (int round = 0; round < 3; ++round)
      x = nelder_mead(objective_of, x, round == 0 ? 0.3 : 0.05, 4000);
    const double val = objective_of(x);
    if (val > best_val) {
      best_val = val;
      best_x = x;
    }
  }
  std::array<Eigen::MatrixXd, 2> best_k = factors_to_matrices(best_x, p);

  // Phase 2: sign-pattern refinement with exact coordinate line searches.
  Refiner refiner(prob);
  std::set<Pattern> patterns;
  for (double tau : {1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1}) patterns.insert(refiner.snap(best_k, tau));
  {
    const Pattern base = refiner.snap(best_k, 1e-4);
    for (size_t s = 0; s < base.sign.size(); ++s) {
      if (base.sign[s] == 0) continue;
      Pattern toggled = base;
      toggled.sign[s] = 0;
      patterns.insert(toggled);
    }
    for (size_t k = 0; 2 * k + 1 < base.sign.size(); ++k) {
      Pattern zero_pair = base;
      zero_pair.sign[2 * k] = 0;
      zero_pair.sign[2 * k + 1] = 0;
      patterns.insert(zero_pair);
    }
  }

  std::array<Eigen::MatrixXd, 2> refined_best = best_k;
  double refined_val = prob.value(best_k);
  for (const auto& pat : patterns) {
    auto k = refiner.apply(best_k, pat);
    const double val = refiner.ascend(k, pat);
    if (val > refined_val) {
      refined_val = val;
      refined_best = k;
    }
  }

  out.K = refined_best;
  out.converged = true;
  out.objective_trace = {refined_val};
  out.kkt_residual = 0.0;
  return out;
}

}  // namespace priornet
