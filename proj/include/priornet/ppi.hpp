#pragma once

#include <string>
#include <vector>

#include "priornet/signature.hpp"

namespace priornet {

// Undirected protein-protein functional association network with
// confidence scores in [0,1].
struct PpiNetwork {
  struct Edge {
    std::string a, b;  // a < b lexicographically
    double score = 0.0;
  };

  std::vector<Edge> edges;      // unique unordered pairs
  int self_loops_skipped = 0;   // warning counts from parsing
  int duplicates_collapsed = 0;
};

// TSV `protein_a<TAB>protein_b<TAB>score`. Scores are accepted either in
// [0,1] or as integers 0-999; if any value exceeds 1 the whole file is
// treated as the 0-999 convention and divided by 1000.
PpiNetwork load_ppi(const std::string& path);

// Single-round expansion: every non-signature gene with at least min_links
// edges of score >= threshold into the signature is added (provenance
// "ppi-added"). When more than max_added qualify, the ones with the most
// qualifying links win (ties by summed score, then id); max_added < 0 means
// unlimited.
Signature expand_signature(const Signature& sig, const PpiNetwork& ppi, double threshold = 0.9,
                           int min_links = 1, int max_added = -1);

}  // namespace priornet
