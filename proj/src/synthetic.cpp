#include "priornet/synthetic.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <cstdio>

#include "priornet/rng.hpp"

namespace priornet {

static std::string synth_gene_id(int i, int p) {
  size_t width = std::to_string(p).size();
  std::string digits = std::to_string(i + 1);
  return "G" + std::string(width - digits.size(), '0') + digits;
}

GroundTruthModel synth_network(int p, int Q, double within_density, double between_density,
                               uint64_t seed) {
  if (p <= 0) fail(Errc::BadArgument, "synth_network: p must be positive");
  if (Q < 1 || Q > p) fail(Errc::BadArgument, "synth_network: need 1 <= Q <= p");
  if (within_density < 0 || within_density > 1 || between_density < 0 || between_density > 1)
    fail(Errc::BadArgument, "synth_network: densities must lie in [0,1]");

  Rng rng(seed);
  GroundTruthModel m;
  m.p = p;
  m.Q = Q;
  m.Z_true = Eigen::MatrixXi::Zero(p, Q);
  for (int i = 0; i < p; ++i) {
    m.Z_true(i, i % Q) = 1;  // balanced primary memberships
    if (Q >= 2 && rng.uniform() < 0.3) {
      int second = static_cast<int>(rng.uniform_int(0, Q - 2));
      if (second >= i % Q) ++second;
      m.Z_true(i, second) = 1;
    }
    m.gene_ids.push_back(synth_gene_id(i, p));
  }

  for (int c = 0; c < 2; ++c) {
    m.K_true[c] = Eigen::MatrixXd::Zero(p, p);
    m.K_true[c].diagonal().setOnes();
    m.edge_support[c] = Eigen::MatrixXi::Zero(p, p);
  }

  for (int i = 0; i < p; ++i) {
    for (int j = i + 1; j < p; ++j) {
      const bool share = (m.Z_true.row(i).array() * m.Z_true.row(j).array()).sum() > 0;
      const double density = share ? within_density : between_density;
      if (rng.uniform() >= density) continue;
      const double sign = rng.uniform() < 0.5 ? 1.0 : -1.0;
      const double base = 0.2 + 0.4 * rng.uniform();
      for (int c = 0; c < 2; ++c) {
        const double scale = 0.6 + 0.8 * rng.uniform();  // magnitudes differ, sign shared
        const double v = sign * base * scale;
        m.K_true[c](i, j) = v;
        m.K_true[c](j, i) = v;
        m.edge_support[c](i, j) = 1;
        m.edge_support[c](j, i) = 1;
      }
    }
  }

  // Shift the diagonal so the smallest eigenvalue reaches the 0.1 floor.
  for (int c = 0; c < 2; ++c) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m.K_true[c]);
    const double lmin = eig.eigenvalues().minCoeff();
    if (lmin < 0.1) {
      const double shift = 0.1 - lmin + 1e-12;
      m.K_true[c].diagonal().array() += shift;
    }
  }
  return m;
}

ExpressionMatrix sample_expression(const GroundTruthModel& model, int n1, int n2, uint64_t seed) {
  if (n1 < 2 || n2 < 2) fail(Errc::TooFewReplicates, "sample_expression: need n1, n2 >= 2");
  const int p = model.p;

  std::array<Eigen::MatrixXd, 2> chol_sigma;
  for (int c = 0; c < 2; ++c) {
    Eigen::LLT<Eigen::MatrixXd> lltK(model.K_true[c]);
    if (lltK.info() != Eigen::Success)
      fail(Errc::NotPositiveDefinite, "sample_expression: K_true not positive definite");
    Eigen::MatrixXd sigma = lltK.solve(Eigen::MatrixXd::Identity(p, p));
    sigma = 0.5 * (sigma + sigma.transpose().eval());
    Eigen::LLT<Eigen::MatrixXd> lltS(sigma);
    if (lltS.info() != Eigen::Success)
      fail(Errc::NotPositiveDefinite, "sample_expression: implied covariance not positive definite");
    chol_sigma[c] = lltS.matrixL();
  }

  Rng rng(seed);
  ExpressionMatrix x;
  x.gene_ids = model.gene_ids;
  x.values.resize(p, n1 + n2);
  const std::array<int, 2> counts = {n1, n2};
  int col = 0;
  for (int c = 0; c < 2; ++c) {
    for (int r = 0; r < counts[c]; ++r, ++col) {
      Eigen::VectorXd z(p);
      for (int i = 0; i < p; ++i) z(i) = rng.normal();
      x.values.col(col) = chol_sigma[c] * z;
      x.sample_names.push_back("s" + std::to_string(col + 1));
      x.condition.push_back(c + 1);
    }
  }
  x.validate();
  return x;
}

}  // namespace priornet
