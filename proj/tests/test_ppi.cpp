#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "priornet/ppi.hpp"
#include "priornet/rng.hpp"

using namespace priornet;
namespace fs = std::filesystem;

namespace {

fs::path write_ppi(const std::string& name, const std::string& content) {
  const fs::path dir = fs::temp_directory_path() / "priornet_ppi_test";
  fs::create_directories(dir);
  std::ofstream out(dir / name);
  out << content;
  return dir / name;
}

Signature sig_of(std::initializer_list<std::string> genes) {
  Signature s;
  for (const auto& g : genes) s.push(g, Provenance::ForestRetained);
  return s;
}

}  // namespace

TEST_SUITE("ppi") {

TEST_CASE("load_ppi applies the 0-999 convention") {
  const auto path = write_ppi("int.tsv", "A\tB\t950\nA\tC\t400\n");
  const auto net = load_ppi(path.string());
  REQUIRE(net.edges.size() == 2);
  CHECK(net.edges[0].score == doctest::Approx(0.95));
  CHECK(net.edges[1].score == doctest::Approx(0.4));
}

TEST_CASE("load_ppi collapses duplicates keeping the highest score") {
  const auto path = write_ppi("dup.tsv", "A\tB\t0.4\nB\tA\t0.6\n");
  const auto net = load_ppi(path.string());
  REQUIRE(net.edges.size() == 1);
  CHECK(net.edges[0].a == "A");
  CHECK(net.edges[0].b == "B");
  CHECK(net.edges[0].score == doctest::Approx(0.6));
  CHECK(net.duplicates_collapsed == 1);
}

TEST_CASE("load_ppi skips self-loops with a warning count") {
  const auto path = write_ppi("self.tsv", "A\tA\t0.9\nA\tB\t0.8\n");
  const auto net = load_ppi(path.string());
  CHECK(net.edges.size() == 1);
  CHECK(net.self_loops_skipped == 1);
}

TEST_CASE("load_ppi rejects scores outside both conventions") {
  const auto bad = write_ppi("bad.tsv", "A\tB\t12.5\n");
  CHECK_THROWS_AS(load_ppi(bad.string()), Error);
  const auto neg = write_ppi("neg.tsv", "A\tB\t-0.2\n");
  CHECK_THROWS_AS(load_ppi(neg.string()), Error);
}

TEST_CASE("expand_signature applies threshold, exclusion and min_links") {
  PpiNetwork net;
  net.edges = {{"a", "b", 0.95}, {"a", "c", 0.5}};
  const auto ex = expand_signature(sig_of({"a"}), net, 0.9, 1, -1);
  CHECK(ex.genes == std::vector<std::string>{"a", "b"});
  CHECK(ex.provenance[1] == Provenance::PpiAdded);

  PpiNetwork internal;
  internal.edges = {{"a", "b", 0.99}};
  const auto same = expand_signature(sig_of({"a", "b"}), internal, 0.9, 1, -1);
  CHECK(same.genes == std::vector<std::string>{"a", "b"});

  PpiNetwork two;
  two.edges = {{"a", "c", 0.95}, {"b", "c", 0.92}};
  const auto linked = expand_signature(sig_of({"a", "b"}), two, 0.9, 2, -1);
  CHECK(linked.genes == std::vector<std::string>{"a", "b", "c"});
}

TEST_CASE("expand_signature caps additions by link count then score then id") {
  PpiNetwork net;
  net.edges = {{"a", "x", 0.95}, {"b", "x", 0.95}, {"a", "y", 0.99}, {"a", "z", 0.99}};
  const auto capped = expand_signature(sig_of({"a", "b"}), net, 0.9, 1, 2);
  // x has two links; y and z tie on one link and score; y wins by id.
  CHECK(capped.genes == std::vector<std::string>{"a", "b", "x", "y"});
}

TEST_CASE("expansion is monotone, contains input, and grows on re-application") {
  Rng rng(6);
  for (int trial = 0; trial < 25; ++trial) {
    PpiNetwork net;
    const int n_nodes = 12;
    for (int i = 0; i < n_nodes; ++i)
      for (int j = i + 1; j < n_nodes; ++j)
        if (rng.uniform() < 0.3)
          net.edges.push_back({"n" + std::to_string(i), "n" + std::to_string(j), rng.uniform()});
    Signature sig;
    for (int i = 0; i < 3; ++i) sig.push("n" + std::to_string(i), Provenance::Differential);

    const auto base = expand_signature(sig, net, 0.8, 2, -1);
    for (const auto& g : sig.genes) CHECK(base.contains(g));

    const auto looser_threshold = expand_signature(sig, net, 0.5, 2, -1);
    const auto looser_links = expand_signature(sig, net, 0.8, 1, -1);
    for (const auto& g : base.genes) {
      CHECK(looser_threshold.contains(g));
      CHECK(looser_links.contains(g));
    }

    const auto again = expand_signature(base, net, 0.8, 2, -1);
    for (const auto& g : base.genes) CHECK(again.contains(g));
  }
}

TEST_CASE("expansion is independent of edge ordering") {
  PpiNetwork net;
  net.edges = {{"a", "x", 0.95}, {"b", "x", 0.93}, {"a", "y", 0.91}, {"b", "z", 0.4}};
  PpiNetwork reversed = net;
  std::reverse(reversed.edges.begin(), reversed.edges.end());
  const auto s1 = expand_signature(sig_of({"a", "b"}), net, 0.9, 1, -1);
  const auto s2 = expand_signature(sig_of({"a", "b"}), reversed, 0.9, 1, -1);
  CHECK(s1.genes == s2.genes);
}

}  // TEST_SUITE
