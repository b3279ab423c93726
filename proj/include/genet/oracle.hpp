#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "genet/graph.hpp"
#include "genet/tensor.hpp"

// Brute-force references. Everything here is deliberately dense and
// quadratic-or-worse, and shares no computation with the engine: BFS plus
// unique-path products, explicit walk enumeration, nested-sum closed forms,
// and central finite differences.

namespace genet::oracle {

inline EdgeId find_slot(const CsrGraph& g, NodeId u, NodeId v) {
  for (EdgeId e = g.row_begin(u); e < g.row_end(u); ++e)
    if (g.target(e) == v) return e;
  throw ContractError(cat("oracle: no edge (", u, ",", v, ")"));
}

// Sum over nodes n with d(i,n) == k of (path product) * X_n, where the edge
// at path position p (counted from i) carries the round-(k+1-p) coefficient.
// Valid on acyclic graphs only: the path i -> n must be unique.
inline std::vector<double> exact_khop_aggregate(
    const CsrGraph& g, const Tensor& X,
    const std::vector<EdgeCoefficients>& coefs, NodeId i, int k) {
  if (!is_acyclic(g))
    throw ContractError("exact_khop_aggregate: graph must be acyclic");
  if (k > static_cast<int>(coefs.size()))
    throw ContractError("exact_khop_aggregate: not enough coefficient rounds");
  const int64_t F = X.cols();
  std::vector<double> acc(static_cast<size_t>(F), 0.0);
  if (k == 0) {
    for (int64_t f = 0; f < F; ++f) acc[static_cast<size_t>(f)] = X.at(i, f);
    return acc;
  }
  // BFS with parents; unique paths exist because the graph is acyclic
  std::vector<NodeId> parent(static_cast<size_t>(g.num_nodes()), -2);
  std::vector<int> dist(static_cast<size_t>(g.num_nodes()), -1);
  std::deque<NodeId> queue{i};
  parent[static_cast<size_t>(i)] = -1;
  dist[static_cast<size_t>(i)] = 0;
  while (!queue.empty()) {
    const NodeId u = queue.front();
    queue.pop_front();
    for (EdgeId e = g.row_begin(u); e < g.row_end(u); ++e) {
      const NodeId v = g.target(e);
      if (v == u || dist[static_cast<size_t>(v)] >= 0) continue;
      dist[static_cast<size_t>(v)] = dist[static_cast<size_t>(u)] + 1;
      parent[static_cast<size_t>(v)] = u;
      queue.push_back(v);
    }
  }
  for (NodeId n = 0; n < g.num_nodes(); ++n) {
    if (dist[static_cast<size_t>(n)] != k) continue;
    std::vector<NodeId> path{n};
    while (path.back() != i) path.push_back(parent[static_cast<size_t>(path.back())]);
    // path[k-p+1] -> path[k-p] is traversed in round k-p+1
    double prod = 1.0;
    for (int p = 1; p <= k; ++p) {
      const NodeId u = path[static_cast<size_t>(k - p + 1)];
      const NodeId v = path[static_cast<size_t>(k - p)];
      const int round = k - p + 1;
      prod *= coefs[static_cast<size_t>(round - 1)]
                  .edge[static_cast<size_t>(find_slot(g, u, v))];
    }
    for (int64_t f = 0; f < F; ++f) acc[static_cast<size_t>(f)] += prod * X.at(n, f);
  }
  return acc;
}

// All walks from a source with revisits allowed, over stored slots (self-loop
// slots are walkable edges). Guarded: this is exponential by design.
struct WalkEnumeration {
  // by_length[len] = walks of that length; each walk is a node sequence
  std::vector<std::vector<std::vector<NodeId>>> by_length;

  // Product of round-indexed coefficients along a walk: step p of an
  // l-step walk is traversed in round l-p+1.
  static double product(const CsrGraph& g,
                        const std::vector<EdgeCoefficients>& coefs,
                        const std::vector<NodeId>& walk) {
    const int l = static_cast<int>(walk.size()) - 1;
    double prod = 1.0;
    for (int p = 1; p <= l; ++p) {
      const NodeId u = walk[static_cast<size_t>(p - 1)];
      const NodeId v = walk[static_cast<size_t>(p)];
      const int round = l - p + 1;
      prod *= coefs[static_cast<size_t>(round - 1)]
                  .edge[static_cast<size_t>(find_slot(g, u, v))];
    }
    return prod;
  }
};

inline WalkEnumeration enumerate_walks(const CsrGraph& g, NodeId source,
                                       int max_len) {
  if (max_len > 8 || g.num_nodes() > 64)
    throw SizeError(cat("enumerate_walks: guard exceeded (max_len ", max_len,
                        ", |V| ", g.num_nodes(), "; limits are 8 and 64)"));
  WalkEnumeration w;
  w.by_length.resize(static_cast<size_t>(max_len) + 1);
  std::vector<NodeId> cur{source};
  std::function<void()> extend = [&]() {
    const int len = static_cast<int>(cur.size()) - 1;
    w.by_length[static_cast<size_t>(len)].push_back(cur);
    if (len == max_len) return;
    const NodeId u = cur.back();
    for (EdgeId e = g.row_begin(u); e < g.row_end(u); ++e) {
      cur.push_back(g.target(e));
      extend();
      cur.pop_back();
    }
  };
  extend();
  return w;
}

// What plain (non-eliminated) propagation must produce at node i after k
// rounds: every length-k walk contributes its coefficient product times the
// feature at its endpoint. Requires self transitions to be explicit slots
// (or self coefficients of zero on loop-free graphs).
inline std::vector<double> predict_plain_propagation(
    const CsrGraph& g, const Tensor& X,
    const std::vector<EdgeCoefficients>& coefs, NodeId i, int k) {
  const WalkEnumeration walks = enumerate_walks(g, i, k);
  const int64_t F = X.cols();
  std::vector<double> acc(static_cast<size_t>(F), 0.0);
  for (const auto& walk : walks.by_length[static_cast<size_t>(k)]) {
    const double prod = WalkEnumeration::product(g, coefs, walk);
    const NodeId end = walk.back();
    for (int64_t f = 0; f < F; ++f)
      acc[static_cast<size_t>(f)] += prod * X.at(end, f);
  }
  return acc;
}

// Central finite differences, one coordinate at a time.
inline std::vector<double> finite_diff_grad(
    const std::function<double(const std::vector<double>&)>& f,
    std::vector<double> theta, double step) {
  if (step <= 0.0) throw ContractError("finite_diff_grad: step must be > 0");
  std::vector<double> grad(theta.size());
  for (size_t i = 0; i < theta.size(); ++i) {
    const double orig = theta[i];
    theta[i] = orig + step;
    const double up = f(theta);
    theta[i] = orig - step;
    const double down = f(theta);
    theta[i] = orig;
    if (!std::isfinite(up) || !std::isfinite(down))
      throw NumericError("finite_diff_grad: non-finite evaluation");
    grad[i] = (up - down) / (2.0 * step);
  }
  return grad;
}

// ------------------- nonlinear GCN pure-hop closed forms -------------------
// Nested-sum forms of the first three eliminated GCN layers, written directly
// with per-node loops. T_l(x) = relu(x W_l) in the row convention. The inner
// sums keep only nodes at the exact hop distance from the center; on acyclic
// graphs these ranges coincide with the neighborhood differences
// mu(j)-j-i, mu(k)-k-j of the derivation, while on cyclic graphs the two
// readings part ways, which is exactly what the triangle check exposes.

namespace detail {
inline std::vector<double> relu_vec_times(const std::vector<double>& x,
                                          const Tensor& W) {
  std::vector<double> y(static_cast<size_t>(W.cols()), 0.0);
  for (int64_t c = 0; c < W.cols(); ++c) {
    double s = 0.0;
    for (int64_t r = 0; r < W.rows(); ++r)
      s += x[static_cast<size_t>(r)] * W.at(r, c);
    y[static_cast<size_t>(c)] = s > 0.0 ? s : 0.0;
  }
  return y;
}

inline std::vector<double> row_of(const Tensor& X, NodeId n) {
  std::vector<double> v(static_cast<size_t>(X.cols()));
  for (int64_t f = 0; f < X.cols(); ++f) v[static_cast<size_t>(f)] = X.at(n, f);
  return v;
}

inline void axpy(std::vector<double>& y, double a, const std::vector<double>& x) {
  for (size_t i = 0; i < y.size(); ++i) y[i] += a * x[i];
}

inline double coef(const CsrGraph& g, NodeId u, NodeId v) {
  const double du = static_cast<double>(g.degree(u));
  const double dv = static_cast<double>(g.degree(v));
  return 1.0 / std::sqrt(du * dv);
}
}  // namespace detail

// h1_i = T1(C_ii x_i + sum_j C_ij x_j)
inline Tensor gcn_pure_h1(const CsrGraph& g, const Tensor& X, const Tensor& W1) {
  Tensor out = Tensor::zeros({g.num_nodes(), W1.cols()});
  for (NodeId i = 0; i < g.num_nodes(); ++i) {
    std::vector<double> agg(static_cast<size_t>(X.cols()), 0.0);
    if (g.self_slot(i) >= 0)
      detail::axpy(agg, detail::coef(g, i, i), detail::row_of(X, i));
    for (EdgeId e = g.row_begin(i); e < g.row_end(i); ++e) {
      const NodeId j = g.target(e);
      if (j == i) continue;
      detail::axpy(agg, detail::coef(g, i, j), detail::row_of(X, j));
    }
    const auto y = detail::relu_vec_times(agg, W1);
    for (int64_t f = 0; f < W1.cols(); ++f)
      out.mutable_data()[i * W1.cols() + f] = y[static_cast<size_t>(f)];
  }
  return out;
}

// h2_i = T2(C_ii h1_i + sum_{j at hop 1} C_ij T1(sum_{k at hop 2} C_jk x_k))
inline Tensor gcn_pure_h2(const CsrGraph& g, const Tensor& X, const Tensor& W1,
                          const Tensor& W2) {
  const Tensor h1 = gcn_pure_h1(g, X, W1);
  Tensor out = Tensor::zeros({g.num_nodes(), W2.cols()});
  for (NodeId i = 0; i < g.num_nodes(); ++i) {
    const std::vector<int> dist = hop_distances(g, i);
    std::vector<double> agg(static_cast<size_t>(W1.cols()), 0.0);
    detail::axpy(agg, detail::coef(g, i, i), detail::row_of(h1, i));
    for (EdgeId e = g.row_begin(i); e < g.row_end(i); ++e) {
      const NodeId j = g.target(e);
      if (j == i) continue;
      std::vector<double> inner(static_cast<size_t>(X.cols()), 0.0);
      for (EdgeId e2 = g.row_begin(j); e2 < g.row_end(j); ++e2) {
        const NodeId k = g.target(e2);
        if (k == j || dist[static_cast<size_t>(k)] != 2) continue;
        detail::axpy(inner, detail::coef(g, j, k), detail::row_of(X, k));
      }
      detail::axpy(agg, detail::coef(g, i, j), detail::relu_vec_times(inner, W1));
    }
    const auto y = detail::relu_vec_times(agg, W2);
    for (int64_t f = 0; f < W2.cols(); ++f)
      out.mutable_data()[i * W2.cols() + f] = y[static_cast<size_t>(f)];
  }
  return out;
}

// h3_i = T3(C_ii h2_i + sum_{j at hop 1} C_ij T2(sum_{k at hop 2} C_jk
//           T1(sum_{l at hop 3} C_kl x_l)))
inline Tensor gcn_pure_h3(const CsrGraph& g, const Tensor& X, const Tensor& W1,
                          const Tensor& W2, const Tensor& W3) {
  const Tensor h2 = gcn_pure_h2(g, X, W1, W2);
  Tensor out = Tensor::zeros({g.num_nodes(), W3.cols()});
  for (NodeId i = 0; i < g.num_nodes(); ++i) {
    const std::vector<int> dist = hop_distances(g, i);
    std::vector<double> agg(static_cast<size_t>(W2.cols()), 0.0);
    detail::axpy(agg, detail::coef(g, i, i), detail::row_of(h2, i));
    for (EdgeId e = g.row_begin(i); e < g.row_end(i); ++e) {
      const NodeId j = g.target(e);
      if (j == i) continue;
      std::vector<double> mid(static_cast<size_t>(W1.cols()), 0.0);
      for (EdgeId e2 = g.row_begin(j); e2 < g.row_end(j); ++e2) {
        const NodeId k = g.target(e2);
        if (k == j || dist[static_cast<size_t>(k)] != 2) continue;
        std::vector<double> inner(static_cast<size_t>(X.cols()), 0.0);
        for (EdgeId e3 = g.row_begin(k); e3 < g.row_end(k); ++e3) {
          const NodeId l = g.target(e3);
          if (l == k || dist[static_cast<size_t>(l)] != 3) continue;
          detail::axpy(inner, detail::coef(g, k, l), detail::row_of(X, l));
        }
        detail::axpy(mid, detail::coef(g, j, k), detail::relu_vec_times(inner, W1));
      }
      detail::axpy(agg, detail::coef(g, i, j), detail::relu_vec_times(mid, W2));
    }
    const auto y = detail::relu_vec_times(agg, W3);
    for (int64_t f = 0; f < W3.cols(); ++f)
      out.mutable_data()[i * W3.cols() + f] = y[static_cast<size_t>(f)];
  }
  return out;
}

}  // namespace genet::oracle
