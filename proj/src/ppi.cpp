#include "priornet/ppi.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_set>

#include "priornet/tsv.hpp"

namespace priornet {

PpiNetwork load_ppi(const std::string& path) {
  const auto lines = tsv::read_lines(path);
  struct Row {
    std::string a, b;
    double score;
  };
  std::vector<Row> rows;
  PpiNetwork net;

  double max_score = 0.0;
  for (size_t r = 0; r < lines.size(); ++r) {
    if (lines[r].empty()) continue;
    const auto fields = tsv::split(lines[r]);
    if (r == 0 && fields.size() == 3 && fields[0] == "protein_a" && fields[1] == "protein_b" &&
        fields[2] == "score")
      continue;
    if (fields.size() != 3)
      fail(Errc::ParseError, path + ": row " + std::to_string(r + 1) + " needs 3 fields");
    const double raw = tsv::parse_double(fields[2], path + " row " + std::to_string(r + 1));
    if (raw < 0.0) fail(Errc::ParseError, path + ": negative score at row " + std::to_string(r + 1));
    if (fields[0] == fields[1]) {
      ++net.self_loops_skipped;
      continue;
    }
    rows.push_back({fields[0], fields[1], raw});
    max_score = std::max(max_score, raw);
  }

  const bool integer_convention = max_score > 1.0;
  if (integer_convention) {
    for (const auto& row : rows) {
      if (row.score > 999.0 || row.score != std::floor(row.score))
        fail(Errc::ParseError,
             path + ": score " + tsv::fmt_g10(row.score) + " outside both the [0,1] and 0-999 conventions");
    }
  }

  std::map<std::pair<std::string, std::string>, double> best;
  for (auto& row : rows) {
    const double score = integer_convention ? row.score / 1000.0 : row.score;
    auto key = row.a < row.b ? std::make_pair(row.a, row.b) : std::make_pair(row.b, row.a);
    const auto it = best.find(key);
    if (it == best.end()) {
      best.emplace(std::move(key), score);
    } else {
      it->second = std::max(it->second, score);
      ++net.duplicates_collapsed;
    }
  }
  for (const auto& [key, score] : best) net.edges.push_back({key.first, key.second, score});
  return net;
}

Signature expand_signature(const Signature& sig, const PpiNetwork& ppi, double threshold,
                           int min_links, int max_added) {
  if (!(threshold > 0.0 && threshold <= 1.0))
    fail(Errc::BadArgument, "expand_signature: threshold must lie in (0,1]");
  if (min_links < 1) fail(Errc::BadArgument, "expand_signature: min_links must be >= 1");

  std::unordered_set<std::string> members(sig.genes.begin(), sig.genes.end());
  struct Candidate {
    int links = 0;
    double score_sum = 0.0;
  };
  std::map<std::string, Candidate> candidates;  // ordered: deterministic iteration
  for (const auto& e : ppi.edges) {
    if (e.score < threshold) continue;
    const bool a_in = members.count(e.a) > 0;
    const bool b_in = members.count(e.b) > 0;
    if (a_in == b_in) continue;  // need exactly one endpoint inside
    const std::string& outside = a_in ? e.b : e.a;
    auto& c = candidates[outside];
    ++c.links;
    c.score_sum += e.score;
  }

  std::vector<std::pair<std::string, Candidate>> qualified;
  for (const auto& [gene, c] : candidates)
    if (c.links >= min_links) qualified.emplace_back(gene, c);

  std::sort(qualified.begin(), qualified.end(), [](const auto& x, const auto& y) {
    if (x.second.links != y.second.links) return x.second.links > y.second.links;
    if (x.second.score_sum != y.second.score_sum) return x.second.score_sum > y.second.score_sum;
    return x.first < y.first;
  });
  if (max_added >= 0 && qualified.size() > static_cast<size_t>(max_added))
    qualified.resize(static_cast<size_t>(max_added));

  Signature out = sig;
  for (const auto& [gene, c] : qualified) out.push(gene, Provenance::PpiAdded);
  return out;
}

}  // namespace priornet
