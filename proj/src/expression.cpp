#include "priornet/expression.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "priornet/tsv.hpp"

namespace priornet {

int ExpressionMatrix::n(int c) const {
  int count = 0;
  for (int label : condition)
    if (label == c) ++count;
  return count;
}

std::vector<Eigen::Index> ExpressionMatrix::samples_of(int c) const {
  std::vector<Eigen::Index> idx;
  for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(condition.size()); ++j)
    if (condition[j] == c) idx.push_back(j);
  return idx;
}

Eigen::Index ExpressionMatrix::gene_index(const std::string& id) const {
  for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(gene_ids.size()); ++i)
    if (gene_ids[i] == id) return i;
  return -1;
}

void ExpressionMatrix::validate() const {
  if (p() < 1) fail(Errc::BadArgument, "expression matrix needs at least one gene");
  if (static_cast<Eigen::Index>(gene_ids.size()) != p() ||
      static_cast<Eigen::Index>(sample_names.size()) != n_samples() ||
      static_cast<Eigen::Index>(condition.size()) != n_samples())
    fail(Errc::BadArgument, "expression matrix field sizes disagree");
  for (int label : condition)
    if (label != 1 && label != 2) fail(Errc::BadArgument, "condition labels must be 1 or 2");
  if (n(1) < 2 || n(2) < 2)
    fail(Errc::TooFewReplicates, "each condition needs at least 2 replicates");
  if (!values.allFinite()) fail(Errc::BadArgument, "expression values must be finite");
  std::unordered_set<std::string> seen;
  for (const auto& g : gene_ids)
    if (!seen.insert(g).second) fail(Errc::DuplicateGene, "duplicate gene id " + g);
}

ExpressionMatrix load_expression(const std::string& path, const std::string& labels_path) {
  const auto lines = tsv::read_lines(path);
  if (lines.size() < 2) fail(Errc::ParseError, path + ": need a header and at least one gene row");

  const auto header = tsv::split(lines[0]);
  if (header.size() < 2) fail(Errc::ParseError, path + ": header has no sample columns");
  const size_t n_cols = header.size() - 1;

  ExpressionMatrix x;
  x.sample_names.assign(header.begin() + 1, header.end());
  {
    std::unordered_set<std::string> seen;
    for (const auto& s : x.sample_names)
      if (!seen.insert(s).second) fail(Errc::DuplicateSample, "duplicate sample name " + s);
  }

  const size_t n_genes = lines.size() - 1;
  x.values.resize(static_cast<Eigen::Index>(n_genes), static_cast<Eigen::Index>(n_cols));
  std::unordered_set<std::string> gene_seen;
  for (size_t r = 1; r < lines.size(); ++r) {
    const auto fields = tsv::split(lines[r]);
    if (fields.size() != n_cols + 1)
      fail(Errc::ParseError, path + ": row " + std::to_string(r + 1) + " has " +
                                 std::to_string(fields.size()) + " fields, expected " +
                                 std::to_string(n_cols + 1));
    if (fields[0].empty()) fail(Errc::ParseError, path + ": empty gene id at row " + std::to_string(r + 1));
    if (!gene_seen.insert(fields[0]).second)
      fail(Errc::DuplicateGene, path + ": duplicate gene id " + fields[0]);
    x.gene_ids.push_back(fields[0]);
    for (size_t cidx = 0; cidx < n_cols; ++cidx) {
      x.values(static_cast<Eigen::Index>(r - 1), static_cast<Eigen::Index>(cidx)) =
          tsv::parse_double(fields[cidx + 1],
                            "row " + std::to_string(r + 1) + " column " + std::to_string(cidx + 2));
    }
  }

  // Labels: sample -> condition in {1,2}; an optional literal header is skipped.
  const auto label_lines = tsv::read_lines(labels_path);
  std::unordered_map<std::string, int> labels;
  for (size_t r = 0; r < label_lines.size(); ++r) {
    if (label_lines[r].empty()) continue;
    const auto fields = tsv::split(label_lines[r]);
    if (r == 0 && fields.size() == 2 && fields[0] == "sample" && fields[1] == "condition") continue;
    if (fields.size() != 2)
      fail(Errc::ParseError, labels_path + ": row " + std::to_string(r + 1) + " needs 2 fields");
    const long c = tsv::parse_long(fields[1], labels_path + " row " + std::to_string(r + 1));
    if (c != 1 && c != 2)
      fail(Errc::ParseError, labels_path + ": condition must be 1 or 2, got " + fields[1]);
    if (!labels.emplace(fields[0], static_cast<int>(c)).second)
      fail(Errc::DuplicateSample, labels_path + ": sample " + fields[0] + " labeled twice");
  }

  x.condition.resize(x.sample_names.size());
  for (size_t j = 0; j < x.sample_names.size(); ++j) {
    const auto it = labels.find(x.sample_names[j]);
    if (it == labels.end())
      fail(Errc::UnlabeledSample, "sample " + x.sample_names[j] + " has no condition label");
    x.condition[j] = it->second;
  }

  x.validate();
  return x;
}

void save_expression(const ExpressionMatrix& x, const std::string& path,
                     const std::string& labels_path) {
  std::ostringstream out;
  out << "gene";
  for (const auto& s : x.sample_names) out << '\t' << s;
  out << '\n';
  for (Eigen::Index i = 0; i < x.p(); ++i) {
    out << x.gene_ids[i];
    for (Eigen::Index j = 0; j < x.n_samples(); ++j) out << '\t' << tsv::fmt_exact(x.values(i, j));
    out << '\n';
  }
  tsv::write_file(path, out.str());

  std::ostringstream lab;
  lab << "sample\tcondition\n";
  for (size_t j = 0; j < x.sample_names.size(); ++j)
    lab << x.sample_names[j] << '\t' << x.condition[j] << '\n';
  tsv::write_file(labels_path, lab.str());
}

ExpressionMatrix center_by_condition(const ExpressionMatrix& x) {
  ExpressionMatrix out = x;
  for (int c : {1, 2}) {
    const auto idx = x.samples_of(c);
    for (Eigen::Index i = 0; i < x.p(); ++i) {
      double mean = 0.0;
      for (Eigen::Index j : idx) mean += x.values(i, j);
      mean /= static_cast<double>(idx.size());
      for (Eigen::Index j : idx) out.values(i, j) = x.values(i, j) - mean;
    }
  }
  return out;
}

ExpressionMatrix scale_to_unit_variance(const ExpressionMatrix& x) {
  ExpressionMatrix centered = center_by_condition(x);
  ExpressionMatrix out = x;
  const double dg = static_cast<double>(x.n(1) + x.n(2) - 2);
  for (Eigen::Index i = 0; i < x.p(); ++i) {
    const double ss = centered.values.row(i).squaredNorm();
    const double s2 = ss / dg;
    if (s2 > 0.0) out.values.row(i) = x.values.row(i) / std::sqrt(s2);
  }
  return out;
}

Eigen::MatrixXd empirical_covariance(const ExpressionMatrix& x, int c) {
  if (c != 1 && c != 2) fail(Errc::BadArgument, "condition must be 1 or 2");
  const auto idx = x.samples_of(c);
  if (idx.size() < 2) fail(Errc::TooFewReplicates, "empirical covariance needs n_c >= 2");
  const Eigen::Index p = x.p();
  const double n = static_cast<double>(idx.size());

  Eigen::MatrixXd centered(p, static_cast<Eigen::Index>(idx.size()));
  for (size_t k = 0; k < idx.size(); ++k) centered.col(static_cast<Eigen::Index>(k)) = x.values.col(idx[k]);
  const Eigen::VectorXd means = centered.rowwise().mean();
  centered.colwise() -= means;

  // Upper triangle from outer-product sums, mirrored: symmetric by construction.
  Eigen::MatrixXd S(p, p);
  for (Eigen::Index i = 0; i < p; ++i) {
    for (Eigen::Index j = i; j < p; ++j) {
      const double v = centered.row(i).dot(centered.row(j)) / n;
      S(i, j) = v;
      S(j, i) = v;
    }
  }
  return S;
}

CovariancePair covariance_pair(const ExpressionMatrix& x) {
  CovariancePair cp;
  cp.S[0] = empirical_covariance(x, 1);
  cp.S[1] = empirical_covariance(x, 2);
  cp.n = {x.n(1), x.n(2)};
  return cp;
}

ExpressionMatrix restrict_to_genes(const ExpressionMatrix& x,
                                   const std::vector<std::string>& genes) {
  std::unordered_map<std::string, Eigen::Index> pos;
  for (Eigen::Index i = 0; i < x.p(); ++i) pos.emplace(x.gene_ids[i], i);
  ExpressionMatrix out;
  out.sample_names = x.sample_names;
  out.condition = x.condition;
  out.values.resize(static_cast<Eigen::Index>(genes.size()), x.n_samples());
  for (size_t k = 0; k < genes.size(); ++k) {
    const auto it = pos.find(genes[k]);
    if (it == pos.end()) fail(Errc::BadArgument, "gene " + genes[k] + " not in expression matrix");
    out.gene_ids.push_back(genes[k]);
    out.values.row(static_cast<Eigen::Index>(k)) = x.values.row(it->second);
  }
  out.validate();
  return out;
}

}  // namespace priornet
