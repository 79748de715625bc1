#pragma once

#include <string>
#include <vector>

#include "priornet/errors.hpp"

namespace priornet {

enum class Provenance { Differential, ForestRetained, PpiAdded };

const char* provenance_name(Provenance p);
Provenance provenance_from(const std::string& name);

// Ordered set of selected gene ids with selection provenance.
struct Signature {
  std::vector<std::string> genes;
  std::vector<Provenance> provenance;

  size_t size() const { return genes.size(); }
  bool empty() const { return genes.empty(); }
  bool contains(const std::string& g) const;
  void push(const std::string& g, Provenance p);
};

// Signature TSV: `gene<TAB>provenance` with a header line.
void save_signature(const Signature& sig, const std::string& path);
Signature load_signature(const std::string& path);

}  // namespace priornet
