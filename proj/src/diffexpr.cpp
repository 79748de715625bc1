#include "priornet/diffexpr.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/polygamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>
#include <cmath>
#include <numeric>

namespace priornet {

std::pair<double, int> pooled_variance(const ExpressionMatrix& x, Eigen::Index gene) {
  if (gene < 0 || gene >= x.p()) fail(Errc::BadArgument, "gene index out of range");
  double ss = 0.0;
  int d_g = -2;
  for (int c : {1, 2}) {
    const auto idx = x.samples_of(c);
    double mean = 0.0;
    for (Eigen::Index j : idx) mean += x.values(gene, j);
    mean /= static_cast<double>(idx.size());
    for (Eigen::Index j : idx) {
      const double d = x.values(gene, j) - mean;
      ss += d * d;
    }
    d_g += static_cast<int>(idx.size());
  }
  return {ss / static_cast<double>(d_g), d_g};
}

// Solves trigamma(x) = y for x > 0 by Newton iteration.
static double trigamma_inverse(double y) {
  double x = 0.5 + 1.0 / y;
  for (int iter = 0; iter < 100; ++iter) {
    const double f = boost::math::trigamma(x) - y;
    const double fprime = boost::math::polygamma(2, x);
    const double step = f / fprime;
    double next = x - step;
    if (next <= 0.0) next = x / 2.0;
    if (std::abs(next - x) < 1e-12 * (1.0 + std::abs(x))) return next;
    x = next;
  }
  return x;
}

VariancePrior fit_variance_prior(const std::vector<double>& s2_list, int d_g) {
  if (d_g < 1) fail(Errc::BadArgument, "fit_variance_prior: d_g must be >= 1");
  std::vector<double> logs2;
  for (double v : s2_list)
    if (v > 0.0) logs2.push_back(std::log(v));
  if (logs2.empty())
    fail(Errc::DegenerateVariances, "all pooled variances are zero");
  if (logs2.size() < 10) return VariancePrior{0.0, 0.0};  // ordinary t fallback

  const double n = static_cast<double>(logs2.size());
  const double mean_z = std::accumulate(logs2.begin(), logs2.end(), 0.0) / n;
  double var_z = 0.0;
  for (double z : logs2) var_z += (z - mean_z) * (z - mean_z);
  var_z /= (n - 1.0);

  const double half_dg = 0.5 * static_cast<double>(d_g);
  const double floor = boost::math::trigamma(half_dg);  // dispersion of log s^2 as d0 -> inf
  const double excess = var_z - floor;
  if (excess <= 0.0) {
    // Dispersion at or below the pure-sampling floor: no finite d0 fits; treat
    // the observed variances as exact and share their geometric mean.
    return VariancePrior{std::numeric_limits<double>::infinity(), std::exp(mean_z)};
  }
  const double d0 = 2.0 * trigamma_inverse(excess);
  const double log_s0 = mean_z - boost::math::digamma(half_dg) +
                        boost::math::digamma(0.5 * d0) + std::log(static_cast<double>(d_g) / d0);
  return VariancePrior{d0, std::exp(log_s0)};
}

static double two_sided_p(double t, double df) {
  if (std::isnan(t)) return 1.0;
  if (std::isinf(t)) return 0.0;
  if (std::isinf(df) || df > 1e12) {
    boost::math::normal_distribution<double> norm;
    return 2.0 * boost::math::cdf(boost::math::complement(norm, std::abs(t)));
  }
  boost::math::students_t_distribution<double> dist(df);
  return 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
}

std::vector<GeneTestResult> moderated_t(const ExpressionMatrix& x, const VariancePrior& prior) {
  const int n1 = x.n(1);
  const int n2 = x.n(2);
  const double se_scale = std::sqrt(1.0 / n1 + 1.0 / n2);
  const auto idx1 = x.samples_of(1);
  const auto idx2 = x.samples_of(2);

  std::vector<GeneTestResult> out;
  out.reserve(static_cast<size_t>(x.p()));
  for (Eigen::Index i = 0; i < x.p(); ++i) {
    GeneTestResult r;
    r.gene_id = x.gene_ids[i];
    for (Eigen::Index j : idx1) r.mean1 += x.values(i, j);
    r.mean1 /= static_cast<double>(n1);
    for (Eigen::Index j : idx2) r.mean2 += x.values(i, j);
    r.mean2 /= static_cast<double>(n2);

    const auto [s2, d_g] = pooled_variance(x, i);
    r.s2_pooled = s2;
    if (prior.d0 == 0.0) {
      r.s2_posterior = s2;
    } else if (prior.infinite()) {
      r.s2_posterior = prior.s0_sq;
    } else {
      r.s2_posterior = (prior.d0 * prior.s0_sq + d_g * s2) / (prior.d0 + d_g);
    }
    r.df_total = prior.d0 + static_cast<double>(d_g);

    const double diff = r.mean1 - r.mean2;
    if (r.s2_posterior > 0.0) {
      r.t_mod = diff / (std::sqrt(r.s2_posterior) * se_scale);
    } else {
      // Zero variance everywhere: take the limit of the ordinary t.
      r.t_mod = diff == 0.0 ? 0.0
                            : std::copysign(std::numeric_limits<double>::infinity(), diff);
    }
    r.p_value = two_sided_p(r.t_mod, r.df_total);
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<GeneTestResult> moderated_t(const ExpressionMatrix& x) {
  std::vector<double> s2_list;
  s2_list.reserve(static_cast<size_t>(x.p()));
  int d_g = 0;
  for (Eigen::Index i = 0; i < x.p(); ++i) {
    const auto [s2, d] = pooled_variance(x, i);
    s2_list.push_back(s2);
    d_g = d;
  }
  return moderated_t(x, fit_variance_prior(s2_list, d_g));
}

std::vector<double> benjamini_hochberg(const std::vector<double>& p_values) {
  const size_t m = p_values.size();
  std::vector<size_t> order(m);
  std::iota(order.begin(), order.end(), size_t{0});
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return p_values[a] < p_values[b]; });
  std::vector<double> adjusted(m, 0.0);
  double running = 1.0;
  for (size_t k = m; k-- > 0;) {
    const double scaled = p_values[order[k]] * static_cast<double>(m) / static_cast<double>(k + 1);
    running = std::min(running, scaled);
    adjusted[order[k]] = running;
  }
  return adjusted;
}

Signature select_signature(const std::vector<GeneTestResult>& results, double alpha,
                           Adjust adjust) {
  if (!(alpha > 0.0 && alpha <= 1.0)) fail(Errc::BadArgument, "alpha must lie in (0,1]");
  std::vector<double> p;
  p.reserve(results.size());
  for (const auto& r : results) p.push_back(r.p_value);
  if (adjust == Adjust::BenjaminiHochberg) p = benjamini_hochberg(p);

  Signature sig;
  for (size_t i = 0; i < results.size(); ++i)
    if (p[i] < alpha) sig.push(results[i].gene_id, Provenance::Differential);
  return sig;
}

PcaProjection pca_projection(const ExpressionMatrix& x, const Signature& genes, int dims) {
  if (genes.empty()) fail(Errc::EmptySignature, "pca_projection: signature is empty");
  if (dims < 1) fail(Errc::BadArgument, "pca_projection: dims must be >= 1");
  const ExpressionMatrix sub = restrict_to_genes(x, genes.genes);
  const Eigen::Index p = sub.p();
  const Eigen::Index n = sub.n_samples();
  if (dims > std::min(p, n)) fail(Errc::BadArgument, "pca_projection: dims exceeds min(p, N)");

  Eigen::MatrixXd centered = sub.values;
  const Eigen::VectorXd means = centered.rowwise().mean();
  centered.colwise() -= means;

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& sv = svd.singularValues();
  const double smax = sv.size() > 0 ? sv(0) : 0.0;
  Eigen::Index rank = 0;
  for (Eigen::Index k = 0; k < sv.size(); ++k)
    if (sv(k) > smax * 1e-10 && sv(k) > 0.0) ++rank;
  if (dims > rank) fail(Errc::RankDeficient, "pca_projection: dims exceeds data rank");

  PcaProjection proj;
  proj.coordinates.resize(n, dims);
  proj.loadings.resize(p, dims);
  proj.explained.resize(dims);
  const double total = sv.squaredNorm();
  for (int k = 0; k < dims; ++k) {
    Eigen::VectorXd u = svd.matrixU().col(k);
    Eigen::VectorXd v = svd.matrixV().col(k);
    // Deterministic orientation: largest-magnitude loading made positive.
    Eigen::Index imax = 0;
    for (Eigen::Index i = 1; i < p; ++i)
      if (std::abs(u(i)) > std::abs(u(imax))) imax = i;
    if (u(imax) < 0.0) {
      u = -u;
      v = -v;
    }
    proj.loadings.col(k) = u;
    proj.coordinates.col(k) = sv(k) * v;
    proj.explained(k) = total > 0.0 ? sv(k) * sv(k) / total : 0.0;
  }
  return proj;
}

}  // namespace priornet
