#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "genet/common.hpp"

namespace genet {

using NodeId = int64_t;
using EdgeId = int64_t;

// Immutable undirected graph in CSR form. Each undirected edge {u,v} is stored
// as the two directed slots (u->v) and (v->u); self-loops, when requested, are
// one slot per node. Neighbor lists are sorted and duplicate-free.
class CsrGraph {
 public:
  CsrGraph() = default;

  NodeId num_nodes() const { return num_nodes_; }
  EdgeId num_slots() const { return static_cast<EdgeId>(targets_.size()); }
  EdgeId num_nonself_slots() const { return num_slots() - num_self_slots_; }
  // undirected edge count, self-loops excluded
  int64_t num_edges() const { return num_nonself_slots() / 2; }
  bool has_self_loops() const { return has_self_loops_; }

  EdgeId row_begin(NodeId u) const { return offsets_[static_cast<size_t>(u)]; }
  EdgeId row_end(NodeId u) const { return offsets_[static_cast<size_t>(u) + 1]; }
  NodeId target(EdgeId e) const { return targets_[static_cast<size_t>(e)]; }
  NodeId source(EdgeId e) const { return sources_[static_cast<size_t>(e)]; }
  // slot of (v,u) given the slot of (u,v); a self-loop maps to itself
  EdgeId reverse_slot(EdgeId e) const { return reverse_[static_cast<size_t>(e)]; }
  // self-loop slot of u, or -1
  EdgeId self_slot(NodeId u) const { return self_slot_[static_cast<size_t>(u)]; }

  // neighbor count including a self-loop slot if present
  int64_t degree(NodeId u) const { return row_end(u) - row_begin(u); }

  const std::vector<EdgeId>& offsets() const { return offsets_; }
  const std::vector<NodeId>& targets() const { return targets_; }

  friend CsrGraph build_csr(const std::vector<std::pair<NodeId, NodeId>>& edges,
                            NodeId num_nodes, bool add_self_loops);

 private:
  NodeId num_nodes_ = 0;
  EdgeId num_self_slots_ = 0;
  bool has_self_loops_ = false;
  std::vector<EdgeId> offsets_;   // num_nodes + 1
  std::vector<NodeId> targets_;   // sorted per row
  std::vector<NodeId> sources_;   // row id per slot
  std::vector<EdgeId> reverse_;   // slot of the opposite direction
  std::vector<EdgeId> self_slot_; // per node, -1 if absent
};

// Symmetrizes, deduplicates and sorts. Parallel input edges merge silently;
// out-of-range endpoints report the offending input position.
inline CsrGraph build_csr(const std::vector<std::pair<NodeId, NodeId>>& edges,
                          NodeId num_nodes, bool add_self_loops) {
  if (num_nodes < 0) throw InputError("build_csr: negative node count");
  std::vector<std::pair<NodeId, NodeId>> dir;
  dir.reserve(edges.size() * 2 + (add_self_loops ? static_cast<size_t>(num_nodes) : 0));
  for (size_t idx = 0; idx < edges.size(); ++idx) {
    const auto [u, v] = edges[idx];
    if (u < 0 || u >= num_nodes || v < 0 || v >= num_nodes)
      throw InputError(cat("build_csr: edge ", idx + 1, " (", u, ",", v,
                           ") out of range for ", num_nodes, " nodes"));
    if (u == v) continue;  // input self entries are handled by the flag
    dir.emplace_back(u, v);
    dir.emplace_back(v, u);
  }
  if (add_self_loops)
    for (NodeId u = 0; u < num_nodes; ++u) dir.emplace_back(u, u);
  std::sort(dir.begin(), dir.end());
  dir.erase(std::unique(dir.begin(), dir.end()), dir.end());

  CsrGraph g;
  g.num_nodes_ = num_nodes;
  g.has_self_loops_ = add_self_loops;
  g.offsets_.assign(static_cast<size_t>(num_nodes) + 1, 0);
  g.targets_.reserve(dir.size());
  g.sources_.reserve(dir.size());
  for (const auto& [u, v] : dir) {
    ++g.offsets_[static_cast<size_t>(u) + 1];
    g.targets_.push_back(v);
    g.sources_.push_back(u);
  }
  for (NodeId u = 0; u < num_nodes; ++u)
    g.offsets_[static_cast<size_t>(u) + 1] += g.offsets_[static_cast<size_t>(u)];

  g.self_slot_.assign(static_cast<size_t>(num_nodes), -1);
  g.reverse_.assign(dir.size(), -1);
  for (EdgeId e = 0; e < g.num_slots(); ++e) {
    const NodeId u = g.sources_[static_cast<size_t>(e)];
    const NodeId v = g.targets_[static_cast<size_t>(e)];
    if (u == v) {
      g.self_slot_[static_cast<size_t>(u)] = e;
      g.num_self_slots_++;
      g.reverse_[static_cast<size_t>(e)] = e;
      continue;
    }
    // targets are sorted per row: binary search for u in v's row
    const auto lo = g.targets_.begin() + g.offsets_[static_cast<size_t>(v)];
    const auto hi = g.targets_.begin() + g.offsets_[static_cast<size_t>(v) + 1];
    const auto it = std::lower_bound(lo, hi, u);
    g.reverse_[static_cast<size_t>(e)] =
        static_cast<EdgeId>(it - g.targets_.begin());
  }
  return g;
}

// Per-slot coefficients aligned with the graph's targets array, plus the
// per-node self weight (mirrors the self-loop slot when one exists, and is
// the alpha_ii of the implicit-self convention otherwise).
struct EdgeCoefficients {
  std::vector<double> edge;  // length num_slots
  std::vector<double> self;  // length num_nodes

  static EdgeCoefficients uniform(const CsrGraph& g, double edge_value,
                                  double self_value) {
    EdgeCoefficients c;
    c.edge.assign(static_cast<size_t>(g.num_slots()), edge_value);
    c.self.assign(static_cast<size_t>(g.num_nodes()), self_value);
    for (NodeId u = 0; u < g.num_nodes(); ++u) {
      const EdgeId s = g.self_slot(u);
      if (s >= 0) c.edge[static_cast<size_t>(s)] = self_value;
    }
    return c;
  }

  static EdgeCoefficients unit(const CsrGraph& g) { return uniform(g, 1.0, 1.0); }

  // Wraps a raw per-slot array; self[] is extracted from self-loop slots
  // (zero for loop-free graphs).
  static EdgeCoefficients from_slots(const CsrGraph& g,
                                     std::vector<double> slots) {
    if (slots.size() != static_cast<size_t>(g.num_slots()))
      throw ContractError("EdgeCoefficients: slot array length mismatch");
    EdgeCoefficients c;
    c.edge = std::move(slots);
    c.self.assign(static_cast<size_t>(g.num_nodes()), 0.0);
    for (NodeId u = 0; u < g.num_nodes(); ++u) {
      const EdgeId s = g.self_slot(u);
      if (s >= 0) c.self[static_cast<size_t>(u)] = c.edge[static_cast<size_t>(s)];
    }
    return c;
  }
};

// C_uv = d_u^{-1/2} d_v^{-1/2} over every slot, self entries included.
// Degrees count stored slots, so self-loops contribute one.
inline EdgeCoefficients gcn_coefficients(const CsrGraph& g) {
  std::vector<double> inv_sqrt(static_cast<size_t>(g.num_nodes()));
  for (NodeId u = 0; u < g.num_nodes(); ++u) {
    const int64_t d = g.degree(u);
    if (d < 1)
      throw InputError(cat("gcn_coefficients: node ", u,
                           " has degree 0 and no self-loop"));
    inv_sqrt[static_cast<size_t>(u)] = 1.0 / std::sqrt(static_cast<double>(d));
  }
  EdgeCoefficients c;
  c.edge.resize(static_cast<size_t>(g.num_slots()));
  c.self.assign(static_cast<size_t>(g.num_nodes()), 0.0);
  for (EdgeId e = 0; e < g.num_slots(); ++e)
    c.edge[static_cast<size_t>(e)] =
        inv_sqrt[static_cast<size_t>(g.source(e))] *
        inv_sqrt[static_cast<size_t>(g.target(e))];
  for (NodeId u = 0; u < g.num_nodes(); ++u) {
    const EdgeId s = g.self_slot(u);
    if (s >= 0) c.self[static_cast<size_t>(u)] = c.edge[static_cast<size_t>(s)];
  }
  return c;
}

// Breadth-first shells from `source`, self-loops ignored. Returns k_max + 1
// sets; shell 0 is {source}; shells are disjoint by construction.
inline std::vector<std::vector<NodeId>> k_hop_sets(const CsrGraph& g,
                                                   NodeId source, int k_max) {
  if (source < 0 || source >= g.num_nodes())
    throw InputError(cat("k_hop_sets: source ", source, " out of range"));
  std::vector<int> dist(static_cast<size_t>(g.num_nodes()), -1);
  std::deque<NodeId> queue{source};
  dist[static_cast<size_t>(source)] = 0;
  std::vector<std::vector<NodeId>> shells(static_cast<size_t>(k_max) + 1);
  shells[0].push_back(source);
  while (!queue.empty()) {
    const NodeId u = queue.front();
    queue.pop_front();
    const int du = dist[static_cast<size_t>(u)];
    if (du >= k_max) continue;
    for (EdgeId e = g.row_begin(u); e < g.row_end(u); ++e) {
      const NodeId v = g.target(e);
      if (v == u || dist[static_cast<size_t>(v)] >= 0) continue;
      dist[static_cast<size_t>(v)] = du + 1;
      shells[static_cast<size_t>(du) + 1].push_back(v);
      queue.push_back(v);
    }
  }
  for (auto& shell : shells) std::sort(shell.begin(), shell.end());
  return shells;
}

// Hop distances from `source` (-1 = unreachable), self-loops ignored.
inline std::vector<int> hop_distances(const CsrGraph& g, NodeId source) {
  std::vector<int> dist(static_cast<size_t>(g.num_nodes()), -1);
  std::deque<NodeId> queue{source};
  dist[static_cast<size_t>(source)] = 0;
  while (!queue.empty()) {
    const NodeId u = queue.front();
    queue.pop_front();
    for (EdgeId e = g.row_begin(u); e < g.row_end(u); ++e) {
      const NodeId v = g.target(e);
      if (v == u || dist[static_cast<size_t>(v)] >= 0) continue;
      dist[static_cast<size_t>(v)] = dist[static_cast<size_t>(u)] + 1;
      queue.push_back(v);
    }
  }
  return dist;
}

// True when the undirected simple graph (self-loops ignored) has no cycle.
inline bool is_acyclic(const CsrGraph& g) {
  std::vector<int> color(static_cast<size_t>(g.num_nodes()), 0);
  int64_t components = 0;
  for (NodeId s = 0; s < g.num_nodes(); ++s) {
    if (color[static_cast<size_t>(s)]) continue;
    ++components;
    std::deque<NodeId> queue{s};
    color[static_cast<size_t>(s)] = 1;
    while (!queue.empty()) {
      const NodeId u = queue.front();
      queue.pop_front();
      for (EdgeId e = g.row_begin(u); e < g.row_end(u); ++e) {
        const NodeId v = g.target(e);
        if (v == u) continue;
        if (!color[static_cast<size_t>(v)]) {
          color[static_cast<size_t>(v)] = 1;
          queue.push_back(v);
        }
      }
    }
  }
  return g.num_edges() == g.num_nodes() - components;
}

// --------------------------- edge-list text I/O ----------------------------
// One "u<TAB>v" pair per line, 0-indexed; '#' comments and blank lines ignored.

inline std::vector<std::pair<NodeId, NodeId>> parse_edge_list(
    std::istream& in, const std::string& origin) {
  std::vector<std::pair<NodeId, NodeId>> edges;
  std::string line;
  int64_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    NodeId u, v;
    if (!(ls >> u >> v))
      throw InputError(cat(origin, ":", lineno, ": expected 'u<TAB>v'"));
    edges.emplace_back(u, v);
  }
  return edges;
}

inline CsrGraph load_edge_list(const std::string& path, bool add_self_loops) {
  std::ifstream in(path);
  if (!in) throw InputError(cat("cannot open edge list: ", path));
  const auto edges = parse_edge_list(in, path);
  NodeId max_id = -1;
  for (const auto& [u, v] : edges) max_id = std::max({max_id, u, v});
  return build_csr(edges, max_id + 1, add_self_loops);
}

inline void write_edge_list(std::ostream& out,
                            const std::vector<std::pair<NodeId, NodeId>>& edges) {
  for (const auto& [u, v] : edges) out << u << '\t' << v << '\n';
}

}  // namespace genet
