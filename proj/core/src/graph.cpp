#include "rrglab/graph.hpp"

#include <algorithm>
#include <istream>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "rrglab/rng.hpp"

namespace rrg {

namespace {

void validate_parameters(int n, int d) {
  if (d < 3) throw std::invalid_argument("sample_regular_graph: degree must be >= 3");
  if (n <= d) throw std::invalid_argument("sample_regular_graph: need n > d");
  if ((static_cast<long long>(n) * d) % 2 != 0)
    throw std::invalid_argument("sample_regular_graph: n*d must be even (handshake parity)");
}

// One pairing attempt: uniform perfect matching of the n*d stubs.
// Returns false if the matching has a loop or multi-edge.
bool try_pairing(int n, int d, Engine& rng, std::vector<std::pair<int, int>>& edges) {
  const int stubs = n * d;
  std::vector<int> stub(stubs);
  std::iota(stub.begin(), stub.end(), 0);

  edges.clear();
  edges.reserve(stubs / 2);
  std::set<std::pair<int, int>> seen;

  int last = stubs;
  while (last > 0) {
    // match stub[0] with a uniformly chosen partner among the rest
    std::uniform_int_distribution<int> pick(1, last - 1);
    const int j = pick(rng);
    int u = stub[0] / d;
    int v = stub[j] / d;
    if (u == v) return false;  // loop
    if (u > v) std::swap(u, v);
    if (!seen.emplace(u, v).second) return false;  // multi-edge
    edges.emplace_back(u, v);
    stub[j] = stub[last - 1];
    stub[0] = stub[last - 2];
    last -= 2;
  }
  return true;
}

}  // namespace

RegularGraph sample_regular_graph(int n, int d, std::uint64_t seed) {
  validate_parameters(n, d);
  Engine rng = make_engine(seed);
  RegularGraph g;
  g.n_vertices = n;
  g.degree = d;
  while (!try_pairing(n, d, rng, g.edges)) {
    // full restart, fresh matching from the same stream
  }
  std::sort(g.edges.begin(), g.edges.end());
  return g;
}

bool audit_regularity(const RegularGraph& g) {
  if (g.n_vertices <= 0 || g.degree < 3) return false;
  if ((static_cast<long long>(g.n_vertices) * g.degree) % 2 != 0) return false;
  if (static_cast<long long>(g.edges.size()) * 2 !=
      static_cast<long long>(g.n_vertices) * g.degree)
    return false;

  std::vector<int> deg(g.n_vertices, 0);
  std::set<std::pair<int, int>> seen;
  for (const auto& [u, v] : g.edges) {
    if (u < 0 || v < 0 || u >= g.n_vertices || v >= g.n_vertices) return false;
    if (u >= v) return false;  // loop or non-canonical order
    if (!seen.emplace(u, v).second) return false;
    ++deg[u];
    ++deg[v];
  }
  return std::all_of(deg.begin(), deg.end(),
                     [&](int k) { return k == g.degree; });
}

void write_edge_list(std::ostream& os, const RegularGraph& g) {
  os << g.n_vertices << ' ' << g.degree << '\n';
  for (const auto& [u, v] : g.edges) os << u << ' ' << v << '\n';
}

RegularGraph read_edge_list(std::istream& is) {
  RegularGraph g;
  if (!(is >> g.n_vertices >> g.degree))
    throw std::invalid_argument("read_edge_list: missing 'n d' header");
  int u = 0, v = 0;
  while (is >> u >> v) g.edges.emplace_back(u, v);
  std::sort(g.edges.begin(), g.edges.end());
  if (!audit_regularity(g))
    throw std::invalid_argument("read_edge_list: edge list fails the regularity audit");
  return g;
}

}  // namespace rrg
