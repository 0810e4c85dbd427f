#pragma once

#include <cstdint>
#include <iosfwd>
#include <utility>
#include <vector>

// Uniform random simple d-regular graphs via the pairing (configuration)
// model with full restart: d stubs per vertex are matched uniformly at
// random, and the whole matching is redrawn whenever it produces a loop or
// a repeated pair. Conditioned on simplicity every simple d-regular graph
// corresponds to exactly (d!)^n pairings, so the accepted law is uniform.
// For fixed d the acceptance probability is bounded below by a constant,
// so the expected number of restarts is O(1).

namespace rrg {

struct RegularGraph {
  int n_vertices = 0;
  int degree = 0;
  // unordered pairs stored with the smaller endpoint first,
  // sorted lexicographically
  std::vector<std::pair<int, int>> edges;
};

// Requires n*d even, n > d, d >= 3. Deterministic given (n, d, seed).
RegularGraph sample_regular_graph(int n, int d, std::uint64_t seed);

// True iff all RegularGraph invariants hold: every vertex has exactly
// `degree` incident edges, no loops, no repeated pairs, n*d even, and the
// canonical edge ordering is respected.
bool audit_regularity(const RegularGraph& g);

// Edge-list text format: first line "n d", then one "u v" line per edge,
// u < v, sorted lexicographically.
void write_edge_list(std::ostream& os, const RegularGraph& g);
RegularGraph read_edge_list(std::istream& is);

}  // namespace rrg
