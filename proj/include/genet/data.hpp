#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "genet/graph.hpp"
#include "genet/random.hpp"
#include "genet/tensor.hpp"

namespace genet {

struct Dataset {
  CsrGraph graph;
  Tensor features;          // [N, F]
  std::vector<int> labels;  // -1 = unlabeled
  std::vector<NodeId> train, val, test;

  int num_classes() const {
    int c = 0;
    for (int l : labels) c = std::max(c, l + 1);
    return c;
  }

  void validate() const {
    const NodeId n = graph.num_nodes();
    if (features.rows() != n)
      throw InputError(cat("dataset: ", features.rows(), " feature rows for ",
                           n, " nodes"));
    if (static_cast<NodeId>(labels.size()) != n)
      throw InputError(cat("dataset: ", labels.size(), " labels for ", n,
                           " nodes"));
    std::vector<char> seen(static_cast<size_t>(n), 0);
    auto check_split = [&](const std::vector<NodeId>& split, const char* name) {
      for (NodeId id : split) {
        if (id < 0 || id >= n)
          throw InputError(cat("dataset: ", name, " split id ", id,
                               " out of range"));
        if (seen[static_cast<size_t>(id)])
          throw InputError(cat("dataset: node ", id,
                               " appears in more than one split"));
        seen[static_cast<size_t>(id)] = 1;
      }
    };
    check_split(train, "train");
    check_split(val, "val");
    check_split(test, "test");
    const int c = num_classes();
    for (size_t i = 0; i < labels.size(); ++i)
      if (labels[i] < -1 || labels[i] >= c)
        throw InputError(cat("dataset: label ", labels[i], " at node ", i,
                             " outside [0,", c, ") and not -1"));
  }
};

// ------------------------------ text formats -------------------------------
// edges.tsv     one "u<TAB>v" per line (graph-core format)
// features.csv  header "f0,f1,..."; one row per node, no id column
// labels.csv    header "node,label"
// splits.csv    header "node,split", split in {train,val,test}

namespace detail {
inline std::ifstream open_or_throw(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw InputError(cat("missing file: ", p.string()));
  return in;
}

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}
}  // namespace detail

inline Dataset load_dataset(const std::string& dir, bool add_self_loops = true) {
  namespace fs = std::filesystem;
  const fs::path root(dir);
  Dataset d;

  // features first: they determine the node count
  {
    std::ifstream in = detail::open_or_throw(root / "features.csv");
    std::string line;
    if (!std::getline(in, line))
      throw InputError(cat(dir, "/features.csv: empty file"));
    const size_t width = detail::split_csv(line).size();
    std::vector<double> values;
    int64_t rows = 0, lineno = 1;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      const auto cells = detail::split_csv(line);
      if (cells.size() != width)
        throw InputError(cat(dir, "/features.csv:", lineno, ": row has ",
                             cells.size(), " cells, header has ", width));
      for (const std::string& c : cells) values.push_back(std::stod(c));
      ++rows;
    }
    d.features = Tensor::from({rows, static_cast<int64_t>(width)},
                              std::move(values));
  }
  const NodeId n = d.features.rows();

  {
    std::ifstream in = detail::open_or_throw(root / "edges.tsv");
    const auto edges = parse_edge_list(in, dir + "/edges.tsv");
    for (const auto& [u, v] : edges)
      if (u >= n || v >= n)
        throw InputError(cat(dir, "/edges.tsv: node id ", std::max(u, v),
                             " exceeds feature row count ", n));
    d.graph = build_csr(edges, n, add_self_loops);
  }

  d.labels.assign(static_cast<size_t>(n), -1);
  {
    std::ifstream in = detail::open_or_throw(root / "labels.csv");
    std::string line;
    std::getline(in, line);  // header
    int64_t lineno = 1;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      const auto cells = detail::split_csv(line);
      if (cells.size() != 2)
        throw InputError(cat(dir, "/labels.csv:", lineno, ": want node,label"));
      const NodeId id = std::stoll(cells[0]);
      if (id < 0 || id >= n)
        throw InputError(cat(dir, "/labels.csv:", lineno, ": node ", id,
                             " out of range"));
      d.labels[static_cast<size_t>(id)] = std::stoi(cells[1]);
    }
  }

  {
    std::ifstream in = detail::open_or_throw(root / "splits.csv");
    std::string line;
    std::getline(in, line);  // header
    int64_t lineno = 1;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      const auto cells = detail::split_csv(line);
      if (cells.size() != 2)
        throw InputError(cat(dir, "/splits.csv:", lineno, ": want node,split"));
      const NodeId id = std::stoll(cells[0]);
      if (cells[1] == "train")
        d.train.push_back(id);
      else if (cells[1] == "val")
        d.val.push_back(id);
      else if (cells[1] == "test")
        d.test.push_back(id);
      else
        throw InputError(cat(dir, "/splits.csv:", lineno, ": unknown split '",
                             cells[1], "'"));
    }
  }

  d.validate();
  return d;
}

// 17 significant digits round-trip 64-bit floats exactly.
inline void write_dataset(const std::string& dir, const Dataset& d) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  {
    std::ofstream out(fs::path(dir) / "edges.tsv");
    for (NodeId u = 0; u < d.graph.num_nodes(); ++u)
      for (EdgeId e = d.graph.row_begin(u); e < d.graph.row_end(u); ++e)
        if (d.graph.target(e) > u) out << u << '\t' << d.graph.target(e) << '\n';
  }
  {
    std::ofstream out(fs::path(dir) / "features.csv");
    for (int64_t f = 0; f < d.features.cols(); ++f)
      out << (f ? "," : "") << "f" << f;
    out << '\n';
    char buf[64];
    for (int64_t i = 0; i < d.features.rows(); ++i) {
      for (int64_t f = 0; f < d.features.cols(); ++f) {
        std::snprintf(buf, sizeof buf, "%.17g", d.features.at(i, f));
        out << (f ? "," : "") << buf;
      }
      out << '\n';
    }
  }
  {
    std::ofstream out(fs::path(dir) / "labels.csv");
    out << "node,label\n";
    for (size_t i = 0; i < d.labels.size(); ++i)
      out << i << ',' << d.labels[i] << '\n';
  }
  {
    std::ofstream out(fs::path(dir) / "splits.csv");
    out << "node,split\n";
    for (NodeId id : d.train) out << id << ",train\n";
    for (NodeId id : d.val) out << id << ",val\n";
    for (NodeId id : d.test) out << id << ",test\n";
  }
}

// ----------------------------- synthetic graphs ----------------------------

enum class SyntheticKind { Chain, BalancedTree, Cycle, ErdosRenyi };

struct SyntheticGraph {
  std::vector<std::pair<NodeId, NodeId>> edges;
  NodeId num_nodes = 0;
};

inline SyntheticGraph synthetic_edges(SyntheticKind kind, int64_t n_or_branch,
                                      int64_t depth_unused_or_depth = 0,
                                      double er_prob = 0.0, uint64_t seed = 0) {
  SyntheticGraph out;
  switch (kind) {
    case SyntheticKind::Chain: {
      if (n_or_branch < 1) throw InputError("chain: need n >= 1");
      out.num_nodes = n_or_branch;
      for (NodeId v = 0; v + 1 < n_or_branch; ++v) out.edges.emplace_back(v, v + 1);
      return out;
    }
    case SyntheticKind::Cycle: {
      if (n_or_branch < 3) throw InputError("cycle: need n >= 3");
      out.num_nodes = n_or_branch;
      for (NodeId v = 0; v < n_or_branch; ++v)
        out.edges.emplace_back(v, (v + 1) % n_or_branch);
      return out;
    }
    case SyntheticKind::BalancedTree: {
      const int64_t b = n_or_branch, d = depth_unused_or_depth;
      if (b < 1 || d < 0) throw InputError("balanced_tree: need branching >= 1, depth >= 0");
      // (b^{d+1} - 1) / (b - 1) nodes; b == 1 degenerates to a chain
      int64_t total = 0, level = 1;
      for (int64_t l = 0; l <= d; ++l) {
        total += level;
        level *= b;
      }
      out.num_nodes = total;
      NodeId next = 1;
      std::vector<NodeId> frontier{0};
      for (int64_t l = 0; l < d; ++l) {
        std::vector<NodeId> nxt;
        for (NodeId parent : frontier)
          for (int64_t c = 0; c < b; ++c) {
            out.edges.emplace_back(parent, next);
            nxt.push_back(next++);
          }
        frontier = std::move(nxt);
      }
      return out;
    }
    case SyntheticKind::ErdosRenyi: {
      const int64_t n = n_or_branch;
      const double p = er_prob;
      if (n < 1 || p <= 0.0 || p >= 1.0)
        throw InputError("erdos_renyi: need n >= 1 and p in (0,1)");
      out.num_nodes = n;
      // geometric gap sampling over the linearized upper triangle
      Rng rng(seed);
      const double log1mp = std::log1p(-p);
      const int64_t total = n * (n - 1) / 2;
      int64_t idx = -1;
      while (true) {
        const double u = rng.uniform();
        idx += 1 + static_cast<int64_t>(std::floor(std::log1p(-u) / log1mp));
        if (idx >= total) break;
        // invert idx -> (i, j), i < j
        int64_t i = 0, rem = idx;
        int64_t row = n - 1;
        while (rem >= row) {
          rem -= row;
          --row;
          ++i;
        }
        out.edges.emplace_back(i, i + 1 + rem);
      }
      return out;
    }
  }
  throw InputError("unknown synthetic kind");
}

inline CsrGraph make_synthetic(SyntheticKind kind, int64_t a, int64_t b = 0,
                               double p = 0.0, uint64_t seed = 0,
                               bool add_self_loops = false) {
  const SyntheticGraph s = synthetic_edges(kind, a, b, p, seed);
  return build_csr(s.edges, s.num_nodes, add_self_loops);
}

// Uniform random recursive tree on n nodes (test fixture helper).
inline std::vector<std::pair<NodeId, NodeId>> random_tree_edges(int64_t n,
                                                                Rng& rng) {
  std::vector<std::pair<NodeId, NodeId>> edges;
  for (NodeId v = 1; v < n; ++v)
    edges.emplace_back(static_cast<NodeId>(rng.uniform_index(static_cast<uint64_t>(v))), v);
  return edges;
}

inline CsrGraph random_tree(int64_t n, uint64_t seed, bool add_self_loops = false) {
  Rng rng(seed);
  return build_csr(random_tree_edges(n, rng), n, add_self_loops);
}

// --------------------------------- fixtures --------------------------------

// Citation-style node-classification fixture at Cora's scale: 7 blocks over
// 2708 nodes, ~5.3k homophilous edges, 1433 sparse binary word features with
// per-class signature words, 140/500/1000 standard-size splits.
inline Dataset citation_fixture(uint64_t seed = 7, NodeId num_nodes = 2708,
                                int num_classes = 7, int64_t vocab = 1433) {
  Rng rng(seed);
  Dataset d;
  std::vector<int> cls(static_cast<size_t>(num_nodes));
  for (NodeId v = 0; v < num_nodes; ++v)
    cls[static_cast<size_t>(v)] = static_cast<int>(v % num_classes);

  // edges: fixed counts, homophily ~0.81 like the real graph
  const int64_t within = 4275, cross = 1003;
  std::set<std::pair<NodeId, NodeId>> edge_set;
  auto add_edge = [&](NodeId u, NodeId v) {
    if (u == v) return false;
    if (u > v) std::swap(u, v);
    return edge_set.insert({u, v}).second;
  };
  int64_t added = 0;
  while (added < within) {
    const NodeId u = static_cast<NodeId>(rng.uniform_index(static_cast<uint64_t>(num_nodes)));
    NodeId v = static_cast<NodeId>(rng.uniform_index(static_cast<uint64_t>(num_nodes)));
    if (cls[static_cast<size_t>(u)] != cls[static_cast<size_t>(v)]) continue;
    if (add_edge(u, v)) ++added;
  }
  added = 0;
  while (added < cross) {
    const NodeId u = static_cast<NodeId>(rng.uniform_index(static_cast<uint64_t>(num_nodes)));
    const NodeId v = static_cast<NodeId>(rng.uniform_index(static_cast<uint64_t>(num_nodes)));
    if (cls[static_cast<size_t>(u)] == cls[static_cast<size_t>(v)]) continue;
    if (add_edge(u, v)) ++added;
  }
  std::vector<std::pair<NodeId, NodeId>> edges(edge_set.begin(), edge_set.end());
  d.graph = build_csr(edges, num_nodes, /*add_self_loops=*/true);

  // features: 40 signature words per class at p=0.12, 10 background draws
  std::vector<std::vector<int64_t>> signature(static_cast<size_t>(num_classes));
  for (int c = 0; c < num_classes; ++c) {
    std::unordered_set<int64_t> words;
    while (words.size() < 40)
      words.insert(static_cast<int64_t>(rng.uniform_index(static_cast<uint64_t>(vocab))));
    signature[static_cast<size_t>(c)].assign(words.begin(), words.end());
    std::sort(signature[static_cast<size_t>(c)].begin(),
              signature[static_cast<size_t>(c)].end());
  }
  d.features = Tensor::zeros({num_nodes, vocab});
  double* feat = d.features.mutable_data();
  for (NodeId v = 0; v < num_nodes; ++v) {
    for (int64_t w : signature[static_cast<size_t>(cls[static_cast<size_t>(v)])])
      if (rng.bernoulli(0.12)) feat[v * vocab + w] = 1.0;
    for (int b = 0; b < 10; ++b)
      feat[v * vocab + static_cast<int64_t>(rng.uniform_index(static_cast<uint64_t>(vocab)))] = 1.0;
  }

  d.labels = cls;

  // splits: 20 per class for train, then 500 val / 1000 test
  std::vector<NodeId> order(static_cast<size_t>(num_nodes));
  for (NodeId v = 0; v < num_nodes; ++v) order[static_cast<size_t>(v)] = v;
  for (size_t i = order.size(); i > 1; --i)
    std::swap(order[i - 1], order[rng.uniform_index(i)]);
  std::vector<int> taken(static_cast<size_t>(num_classes), 0);
  std::vector<char> used(static_cast<size_t>(num_nodes), 0);
  for (NodeId v : order) {
    int& t = taken[static_cast<size_t>(cls[static_cast<size_t>(v)])];
    if (t < 20) {
      d.train.push_back(v);
      used[static_cast<size_t>(v)] = 1;
      ++t;
    }
  }
  for (NodeId v : order) {
    if (used[static_cast<size_t>(v)]) continue;
    if (d.val.size() < 500)
      d.val.push_back(v);
    else if (d.test.size() < 1000)
      d.test.push_back(v);
  }
  d.validate();
  return d;
}

// Long-range fixture: a forest of 5-node chains. Each endpoint's label is the
// color of the node exactly 4 hops away (the opposite endpoint); interior
// nodes are unlabeled. Solvable at K = 4 only if hop-4 signal stays clean.
inline Dataset hop_distance_fixture(int64_t num_chains, int num_colors,
                                    uint64_t seed) {
  Rng rng(seed);
  Dataset d;
  const int64_t chain_len = 5;
  const NodeId n = static_cast<NodeId>(num_chains * chain_len);
  std::vector<std::pair<NodeId, NodeId>> edges;
  std::vector<int> color(static_cast<size_t>(n));
  d.labels.assign(static_cast<size_t>(n), -1);
  std::vector<NodeId> endpoints;
  for (int64_t c = 0; c < num_chains; ++c) {
    const NodeId base = static_cast<NodeId>(c * chain_len);
    for (int64_t v = 0; v < chain_len; ++v) {
      color[static_cast<size_t>(base + v)] =
          static_cast<int>(rng.uniform_index(static_cast<uint64_t>(num_colors)));
      if (v > 0) edges.emplace_back(base + v - 1, base + v);
    }
    d.labels[static_cast<size_t>(base)] = color[static_cast<size_t>(base + 4)];
    d.labels[static_cast<size_t>(base + 4)] = color[static_cast<size_t>(base)];
    endpoints.push_back(base);
    endpoints.push_back(base + 4);
  }
  d.graph = build_csr(edges, n, /*add_self_loops=*/true);
  d.features = Tensor::zeros({n, num_colors});
  for (NodeId v = 0; v < n; ++v)
    d.features.mutable_data()[v * num_colors + color[static_cast<size_t>(v)]] = 1.0;

  for (size_t i = endpoints.size(); i > 1; --i)
    std::swap(endpoints[i - 1], endpoints[rng.uniform_index(i)]);
  const size_t n_train = endpoints.size() * 6 / 10;
  const size_t n_val = endpoints.size() * 2 / 10;
  for (size_t i = 0; i < endpoints.size(); ++i) {
    if (i < n_train)
      d.train.push_back(endpoints[i]);
    else if (i < n_train + n_val)
      d.val.push_back(endpoints[i]);
    else
      d.test.push_back(endpoints[i]);
  }
  d.validate();
  return d;
}

// Tiny linearly separable 2-class toy: two clusters bridged by one edge.
inline Dataset toy_two_class(uint64_t seed = 3) {
  Rng rng(seed);
  Dataset d;
  const NodeId n = 24;
  const int64_t F = 4;
  std::vector<std::pair<NodeId, NodeId>> edges;
  for (NodeId v = 0; v < n; ++v) {
    const NodeId lo = v < n / 2 ? 0 : n / 2;
    for (int t = 0; t < 2; ++t) {
      NodeId u = lo + static_cast<NodeId>(rng.uniform_index(static_cast<uint64_t>(n / 2)));
      if (u != v) edges.emplace_back(v, u);
    }
  }
  edges.emplace_back(0, n / 2);
  d.graph = build_csr(edges, n, /*add_self_loops=*/true);
  d.features = Tensor::zeros({n, F});
  d.labels.assign(static_cast<size_t>(n), -1);
  for (NodeId v = 0; v < n; ++v) {
    const int c = v < n / 2 ? 0 : 1;
    d.labels[static_cast<size_t>(v)] = c;
    for (int64_t f = 0; f < F; ++f)
      d.features.mutable_data()[v * F + f] =
          (c == 0 ? 1.0 : -1.0) + 0.2 * rng.normal();
  }
  for (NodeId v = 0; v < n; ++v) {
    if (v % 3 == 0)
      d.val.push_back(v);
    else if (v % 3 == 1)
      d.test.push_back(v);
    else
      d.train.push_back(v);
  }
  d.validate();
  return d;
}

}  // namespace genet
