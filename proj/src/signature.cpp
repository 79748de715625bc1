#include "priornet/signature.hpp"

#include <algorithm>
#include <sstream>

#include "priornet/tsv.hpp"

namespace priornet {

const char* provenance_name(Provenance p) {
  switch (p) {
    case Provenance::Differential: return "differential";
    case Provenance::ForestRetained: return "forest-retained";
    case Provenance::PpiAdded: return "ppi-added";
  }
  return "?";
}

Provenance provenance_from(const std::string& name) {
  if (name == "differential") return Provenance::Differential;
  if (name == "forest-retained") return Provenance::ForestRetained;
  if (name == "ppi-added") return Provenance::PpiAdded;
  fail(Errc::SchemaMismatch, "unknown provenance '" + name + "'");
}

bool Signature::contains(const std::string& g) const {
  return std::find(genes.begin(), genes.end(), g) != genes.end();
}

void Signature::push(const std::string& g, Provenance p) {
  genes.push_back(g);
  provenance.push_back(p);
}

void save_signature(const Signature& sig, const std::string& path) {
  std::ostringstream out;
  out << "gene\tprovenance\n";
  for (size_t i = 0; i < sig.genes.size(); ++i)
    out << sig.genes[i] << '\t' << provenance_name(sig.provenance[i]) << '\n';
  tsv::write_file(path, out.str());
}

Signature load_signature(const std::string& path) {
  const auto lines = tsv::read_lines(path);
  if (lines.empty() || tsv::split(lines[0]) != std::vector<std::string>{"gene", "provenance"})
    fail(Errc::SchemaMismatch, path + ": expected columns gene, provenance");
  Signature sig;
  for (size_t r = 1; r < lines.size(); ++r) {
    const auto fields = tsv::split(lines[r]);
    if (fields.size() != 2) fail(Errc::SchemaMismatch, path + ": row " + std::to_string(r + 1));
    sig.push(fields[0], provenance_from(fields[1]));
  }
  return sig;
}

}  // namespace priornet
