#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "genet/bench.hpp"
#include "genet/data.hpp"
#include "genet/elimination.hpp"
#include "genet/layer.hpp"
#include "genet/oracle.hpp"
#include "genet/train.hpp"

// Oracle-grounded property suites. The `verify` CLI prints one row per check;
// the acceptance tests assert the same functions.

namespace genet::verify {

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

namespace detail {
inline double rel_err(double analytic, double numeric) {
  return std::abs(analytic - numeric) /
         std::max({1.0, std::abs(analytic), std::abs(numeric)});
}

inline EdgeCoefficients random_coefficients(const CsrGraph& g, Rng& rng,
                                            double self_value) {
  EdgeCoefficients c = EdgeCoefficients::uniform(g, 0.0, self_value);
  for (EdgeId e = 0; e < g.num_slots(); ++e)
    if (g.target(e) != g.source(e))
      c.edge[static_cast<size_t>(e)] = rng.uniform(0.05, 1.5);
  return c;
}

inline Tensor random_features(int64_t n, int64_t f, Rng& rng, double lo = -2.0,
                              double hi = 2.0) {
  Tensor x = Tensor::zeros({n, f});
  double* p = x.mutable_data();
  for (int64_t i = 0; i < x.numel(); ++i) p[i] = rng.uniform(lo, hi);
  return x;
}
}  // namespace detail

// Acceptance criterion 1: on random trees with alpha_ii = 1 and nonnegative
// per-round coefficients, differenced rounds equal the unique-path-product
// k-hop aggregate, to 1e-9.
inline CheckResult tree_exactness(uint64_t seed = 11, int num_trees = 50) {
  Rng rng(seed);
  double worst = 0.0;
  for (int t = 0; t < num_trees; ++t) {
    const int64_t n = 8 + static_cast<int64_t>(rng.uniform_index(57));  // 8..64
    const int K = 1 + static_cast<int>(rng.uniform_index(6));           // 1..6
    CsrGraph g = random_tree(n, rng.next_u64());
    std::vector<EdgeCoefficients> coefs;
    for (int k = 0; k < K; ++k)
      coefs.push_back(detail::random_coefficients(g, rng, 1.0));
    const Tensor x = detail::random_features(n, 3, rng);
    const PropagationTrace trace = propagate_eliminated(g, x, coefs, K, true);
    const std::vector<Tensor> inc = hop_decompose(trace);
    for (int k = 1; k <= K; ++k)
      for (NodeId i = 0; i < n; ++i) {
        const auto want = oracle::exact_khop_aggregate(g, x, coefs, i, k);
        for (int64_t f = 0; f < 3; ++f)
          worst = std::max(worst,
                           std::abs(inc[static_cast<size_t>(k - 1)].at(i, f) -
                                    want[static_cast<size_t>(f)]));
      }
  }
  return {"tree-exactness", worst < 1e-9,
          cat(num_trees, " trees, max |engine - oracle| = ", worst)};
}

// Acceptance criterion 2 (library side): the 5-node chain with one-hot inputs
// and unit coefficients decomposes into exact BFS shells; increments vanish
// beyond each node's eccentricity.
inline CheckResult fig1_chain() {
  CsrGraph g = make_synthetic(SyntheticKind::Chain, 5, 0, 0, 0, true);
  Tensor x = Tensor::zeros({5, 5});
  for (int i = 0; i < 5; ++i) x.mutable_data()[i * 5 + i] = 1.0;
  const int K = 5;
  std::vector<EdgeCoefficients> coefs(K, EdgeCoefficients::unit(g));
  const auto inc = hop_decompose(propagate_eliminated(g, x, coefs, K, true));
  double worst = 0.0;
  for (NodeId i = 0; i < 5; ++i) {
    const auto shells = k_hop_sets(g, i, K);
    for (int k = 1; k <= K; ++k) {
      std::vector<double> want(5, 0.0);
      for (NodeId n : shells[static_cast<size_t>(k)])
        want[static_cast<size_t>(n)] = 1.0;
      for (int64_t f = 0; f < 5; ++f)
        worst = std::max(worst, std::abs(inc[static_cast<size_t>(k - 1)].at(i, f) -
                                         want[static_cast<size_t>(f)]));
    }
  }
  return {"fig1-chain", worst == 0.0, cat("max deviation from BFS shells = ", worst)};
}

// Oracle self-validation: plain propagation equals explicit walk enumeration.
inline CheckResult walk_prediction(uint64_t seed = 5) {
  Rng rng(seed);
  double worst = 0.0;
  for (int rep = 0; rep < 6; ++rep) {
    const bool loops = rep % 2 == 0;
    CsrGraph g;
    if (rep < 2) {
      g = make_synthetic(SyntheticKind::Chain, 3, 0, 0, 0, loops);
    } else if (rep < 4) {
      g = make_synthetic(SyntheticKind::Cycle, 5, 0, 0, 0, loops);
    } else {
      g = make_synthetic(SyntheticKind::ErdosRenyi, 8, 0, 0.35, seed + rep, loops);
    }
    const int K = 4;
    std::vector<EdgeCoefficients> coefs;
    for (int k = 0; k < K; ++k)
      coefs.push_back(detail::random_coefficients(g, rng, loops ? 0.7 : 0.0));
    if (loops)  // mirror the random self slots into self[]
      for (auto& c : coefs) c = EdgeCoefficients::from_slots(g, std::move(c.edge));
    const Tensor x = detail::random_features(g.num_nodes(), 2, rng);
    const PropagationTrace trace = propagate_eliminated(g, x, coefs, K, false);
    for (int k = 0; k <= K; ++k)
      for (NodeId i = 0; i < g.num_nodes(); ++i) {
        const auto want = oracle::predict_plain_propagation(g, x, coefs, i, k);
        for (int64_t f = 0; f < 2; ++f)
          worst = std::max(worst,
                           std::abs(trace.h[static_cast<size_t>(k)].at(i, f) -
                                    want[static_cast<size_t>(f)]));
      }
  }
  return {"walk-prediction", worst < 1e-9,
          cat("max |propagation - walk sum| = ", worst)};
}

namespace detail {
inline Tensor sign_coherent_weights(int64_t rows, int64_t cols, Rng& rng) {
  Tensor w = Tensor::zeros({rows, cols});
  double* p = w.mutable_data();
  for (int64_t c = 0; c < cols; ++c) {
    const double sgn = rng.bernoulli(0.5) ? 1.0 : -1.0;
    for (int64_t r = 0; r < rows; ++r)
      p[r * cols + c] = sgn * rng.uniform(0.1, 0.9) / std::sqrt(static_cast<double>(rows));
  }
  return w;
}
}  // namespace detail

// Acceptance criterion 3, acyclic half: the eliminated nonlinear GCN matches
// the pure-hop closed form on sign-coherent trees.
inline CheckResult gcn_elimination_trees(uint64_t seed = 23, int num_trees = 20) {
  Rng rng(seed);
  double worst = 0.0;
  for (int t = 0; t < num_trees; ++t) {
    const int64_t n = 4 + static_cast<int64_t>(rng.uniform_index(13));  // 4..16
    CsrGraph g = random_tree(n, rng.next_u64(), /*add_self_loops=*/true);
    const Tensor x = detail::random_features(n, 3, rng, 0.0, 1.0);
    const Tensor w1 = detail::sign_coherent_weights(3, 4, rng);
    const Tensor w2 = detail::sign_coherent_weights(4, 4, rng);
    const Tensor w3 = detail::sign_coherent_weights(4, 3, rng);
    const auto h = gcn_forward_eliminated(g, x, {w1, w2, w3}, true);
    const Tensor want = oracle::gcn_pure_h3(g, x, w1, w2, w3);
    for (NodeId i = 0; i < n; ++i)
      for (int64_t f = 0; f < 3; ++f)
        worst = std::max(worst, std::abs(h[2].at(i, f) - want.at(i, f)));
  }
  return {"gcn-elimination-trees", worst < 1e-8,
          cat(num_trees, " trees, max |engine - closed form| = ", worst)};
}

// Acceptance criterion 3, cyclic half: the same three-layer comparison on a
// triangle must diverge. On a cycle the recursion cannot tell cyclic
// revisits from genuinely new hop-k nodes, so its output departs from the
// exact-hop-distance form that it reproduces on trees.
inline CheckResult gcn_elimination_cycle_fails() {
  CsrGraph g = make_synthetic(SyntheticKind::Cycle, 3, 0, 0, 0, true);
  const Tensor x = Tensor::full({3, 2}, 1.0);
  Rng rng(99);
  const Tensor w1 = detail::sign_coherent_weights(2, 3, rng);
  const Tensor w2 = detail::sign_coherent_weights(3, 3, rng);
  const Tensor w3 = detail::sign_coherent_weights(3, 2, rng);
  const auto h = gcn_forward_eliminated(g, x, {w1, w2, w3}, true);
  const Tensor want = oracle::gcn_pure_h3(g, x, w1, w2, w3);
  double gap = 0.0;
  for (NodeId i = 0; i < 3; ++i)
    for (int64_t f = 0; f < 2; ++f)
      gap = std::max(gap, std::abs(h[2].at(i, f) - want.at(i, f)));
  return {"gcn-elimination-triangle", gap >= 1e-3,
          cat("triangle mismatch = ", gap, " (expected >= 1e-3)")};
}

// Acceptance criterion 6: with self-loops removed, round k's support on a
// tree sits exactly on hop distances of matching parity.
inline CheckResult selfloop_parity(uint64_t seed = 31) {
  Rng rng(seed);
  bool ok = true;
  std::string detail_msg = "parity support exact for k <= 5";
  for (int t = 0; t < 8 && ok; ++t) {
    const int64_t n = 6 + static_cast<int64_t>(rng.uniform_index(11));
    CsrGraph g = random_tree(n, rng.next_u64());
    const int K = 5;
    std::vector<EdgeCoefficients> coefs(static_cast<size_t>(K),
                                        EdgeCoefficients::uniform(g, 1.0, 0.0));
    for (NodeId probe = 0; probe < n && ok; ++probe) {
      Tensor x = Tensor::zeros({n, 1});
      x.mutable_data()[probe] = 1.0;
      const auto trace = propagate_self_loop_eliminated(g, x, coefs, K);
      const auto dist = hop_distances(g, probe);
      for (int k = 1; k <= K && ok; ++k)
        for (NodeId i = 0; i < n && ok; ++i) {
          const int d = dist[static_cast<size_t>(i)];
          const bool reachable = d >= 0 && d <= k && (k - d) % 2 == 0;
          const bool nonzero =
              std::abs(trace.h[static_cast<size_t>(k)].at(i, 0)) > 1e-12;
          if (nonzero != reachable) {
            ok = false;
            detail_msg = cat("node ", i, ", probe ", probe, ", round ", k,
                             ": support ", nonzero, " vs parity rule ", reachable);
          }
        }
    }
  }
  return {"selfloop-parity", ok, detail_msg};
}

// Acceptance criterion 4: with the linearized layer (gamma = 0, identity V
// and FFN, zero residual, decomposed inputs), the probed coefficient of x_n
// in node i's output equals the Eq.-13b composite kernel.
inline CheckResult kernel_faithfulness(uint64_t seed = 41, int num_trees = 20) {
  Rng rng(seed);
  double worst = 0.0;
  for (int t = 0; t < num_trees; ++t) {
    const int64_t n = 6 + static_cast<int64_t>(rng.uniform_index(7));  // 6..12
    CsrGraph g = random_tree(n, rng.next_u64(), /*add_self_loops=*/true);
    GenLayerConfig cfg;
    cfg.K = 4;
    cfg.hidden = n;
    cfg.gamma = 0.0;
    cfg.decompose_inputs = true;
    Rng prng(seed + 100 + t);
    GenLayerParams params = GenLayerParams::init(cfg, prng);
    for (int k = 0; k < cfg.K; ++k) {  // non-trivial edge attention
      double* pa = params.a[static_cast<size_t>(k)].mutable_data();
      for (int64_t i = 0; i < 2 * n; ++i) pa[i] = 0.3 * prng.normal();
    }
    params.w_v = Tensor::zeros({n, n});
    params.w_res = Tensor::zeros({n, n});
    params.ffn1 = Tensor::zeros({n, 2 * n});
    params.ffn2 = Tensor::zeros({2 * n, n});
    for (int64_t i = 0; i < n; ++i) {
      params.w_v.mutable_data()[i * n + i] = 1.0;
      params.ffn1.mutable_data()[i * 2 * n + i] = 1.0;
      params.ffn1.mutable_data()[i * 2 * n + n + i] = -1.0;
      params.ffn2.mutable_data()[i * n + i] = 1.0;
      params.ffn2.mutable_data()[(n + i) * n + i] = -1.0;
    }
    Tensor x = Tensor::zeros({n, n});
    for (int64_t i = 0; i < n; ++i) x.mutable_data()[i * n + i] = 1.0;

    LayerTrace trace;
    const Tensor out = layer_forward(g, x, params, true, true, nullptr, &trace);
    std::vector<EdgeCoefficients> coefs;
    for (const Tensor& alpha : trace.alpha)
      coefs.push_back(EdgeCoefficients::from_slots(
          g, std::vector<double>(alpha.data(), alpha.data() + alpha.numel())));
    for (NodeId i = 0; i < n; ++i) {
      const auto dist = hop_distances(g, i);
      for (NodeId m = 0; m < n; ++m) {
        const int d = dist[static_cast<size_t>(m)];
        if (m == i || d < 1 || d > cfg.K) continue;
        const double want = composite_kernel(g, coefs, trace.beta[0], i, m);
        worst = std::max(worst, std::abs(out.at(i, m) - want));
      }
    }
  }
  return {"kernel-faithfulness", worst < 1e-9,
          cat(num_trees, " trees, max |probe - kernel| = ", worst)};
}

// Acceptance criterion 5: analytic gradients of a 2-layer model against
// central finite differences over full parameter vectors.
inline CheckResult gradient_integrity(uint64_t seed = 71, int num_seeds = 5) {
  double worst = 0.0;
  for (int s = 0; s < num_seeds; ++s) {
    Rng rng(seed + static_cast<uint64_t>(s));
    const int64_t n = 8;
    CsrGraph g = random_tree(n, rng.next_u64(), true);
    Dataset data;
    data.graph = g;
    data.features = detail::random_features(n, 5, rng, -1.0, 1.0);
    data.labels.assign(static_cast<size_t>(n), 0);
    for (NodeId v = 0; v < n; ++v)
      data.labels[static_cast<size_t>(v)] = static_cast<int>(rng.uniform_index(3));
    for (NodeId v = 0; v < n; ++v) data.train.push_back(v);

    TrainConfig cfg;
    cfg.layers = 2;
    cfg.layer.K = 3;
    cfg.layer.hidden = 6;
    cfg.layer.heads = 2;
    cfg.layer.d_key = 6;
    cfg.seed = seed + static_cast<uint64_t>(s);
    Rng init(cfg.seed);
    GenModel model = GenModel::init(cfg, 5, 3, init);
    // zero attention vectors put every edge score exactly on the LeakyReLU
    // kink, where central differences are invalid; nudge them off it
    for (GenLayerParams& layer : model.layers)
      for (Tensor& a : layer.a) {
        double* pa = a.mutable_data();
        for (int64_t i = 0; i < a.numel(); ++i) pa[i] = 0.2 * init.normal();
      }
    auto params = model.named();

    std::vector<double> theta;
    for (auto& [name, t] : params)
      theta.insert(theta.end(), t->data(), t->data() + t->numel());
    auto unflatten = [&](const std::vector<double>& v) {
      size_t off = 0;
      for (auto& [name, t] : params) {
        std::copy(v.begin() + static_cast<long>(off),
                  v.begin() + static_cast<long>(off + t->numel()),
                  t->mutable_data());
        off += static_cast<size_t>(t->numel());
      }
    };
    auto loss_at = [&](const std::vector<double>& v) {
      unflatten(v);
      const Tensor logits = model.forward(data.graph, data.features);
      return cross_entropy(logits, data.labels, data.train).at(0);
    };

    unflatten(theta);
    Tape tape;
    GenModel view = model;
    {
      auto vp = view.named();
      for (auto& [name, t] : vp) *t = tape.leaf(*t, true);
    }
    Tensor loss = cross_entropy(
        view.forward(data.graph, data.features, &tape), data.labels,
        data.train, &tape);
    tape.backward(loss);
    std::vector<double> analytic;
    for (auto& [name, t] : view.named()) {
      const Tensor gt = tape.grad(*t);
      analytic.insert(analytic.end(), gt.data(), gt.data() + gt.numel());
    }
    const std::vector<double> numeric =
        oracle::finite_diff_grad(loss_at, theta, 1e-5);
    for (size_t i = 0; i < theta.size(); ++i)
      worst = std::max(worst, detail::rel_err(analytic[i], numeric[i]));
  }
  return {"gradient-integrity", worst < 1e-4,
          cat(num_seeds, " seeds, max rel err = ", worst)};
}

// Node-relabeling equivariance of propagation and of the whole layer.
inline CheckResult equivariance(uint64_t seed = 53) {
  Rng rng(seed);
  double worst = 0.0;
  for (int rep = 0; rep < 4; ++rep) {
    CsrGraph g = make_synthetic(SyntheticKind::ErdosRenyi, 12, 0, 0.3,
                                seed + rep, true);
    const int64_t n = g.num_nodes();
    std::vector<NodeId> perm(static_cast<size_t>(n));
    for (NodeId v = 0; v < n; ++v) perm[static_cast<size_t>(v)] = v;
    for (size_t i = perm.size(); i > 1; --i)
      std::swap(perm[i - 1], perm[rng.uniform_index(i)]);

    std::vector<std::pair<NodeId, NodeId>> pedges;
    for (NodeId u = 0; u < n; ++u)
      for (EdgeId e = g.row_begin(u); e < g.row_end(u); ++e)
        if (g.target(e) > u)
          pedges.emplace_back(perm[static_cast<size_t>(u)],
                              perm[static_cast<size_t>(g.target(e))]);
    CsrGraph pg = build_csr(pedges, n, true);

    const int64_t F = 4;
    Tensor z = detail::random_features(n, F, rng, -1.0, 1.0);
    Tensor pz = Tensor::zeros({n, F});
    for (NodeId v = 0; v < n; ++v)
      for (int64_t f = 0; f < F; ++f)
        pz.mutable_data()[perm[static_cast<size_t>(v)] * F + f] = z.at(v, f);

    GenLayerConfig cfg;
    cfg.K = 3;
    cfg.hidden = F;
    Rng prng(seed + 1000 + rep);
    GenLayerParams params = GenLayerParams::init(cfg, prng);
    for (int k = 0; k < cfg.K; ++k) {
      double* pa = params.a[static_cast<size_t>(k)].mutable_data();
      for (int64_t i = 0; i < 2 * F; ++i) pa[i] = 0.3 * prng.normal();
    }
    const Tensor out = layer_forward(g, z, params, true, true);
    const Tensor pout = layer_forward(pg, pz, params, true, true);
    for (NodeId v = 0; v < n; ++v)
      for (int64_t f = 0; f < F; ++f)
        worst = std::max(worst, std::abs(out.at(v, f) -
                                         pout.at(perm[static_cast<size_t>(v)], f)));

    // propagation alone, GCN coefficients
    std::vector<EdgeCoefficients> c(3, gcn_coefficients(g));
    std::vector<EdgeCoefficients> pc(3, gcn_coefficients(pg));
    const auto t1 = propagate_eliminated(g, z, c, 3, true);
    const auto t2 = propagate_eliminated(pg, pz, pc, 3, true);
    for (NodeId v = 0; v < n; ++v)
      for (int64_t f = 0; f < F; ++f)
        worst = std::max(worst,
                         std::abs(t1.h[3].at(v, f) -
                                  t2.h[3].at(perm[static_cast<size_t>(v)], f)));
  }
  return {"permutation-equivariance", worst < 1e-9,
          cat("max |perm(out) - out(perm)| = ", worst)};
}

inline std::vector<std::string> suite_names() {
  return {"tree-exactness", "fig1",   "walks",      "gcn-elimination",
          "selfloop-parity", "kernel", "gradients", "equivariance",
          "all"};
}

inline std::vector<CheckResult> run_suite(const std::string& suite,
                                          uint64_t seed = 0) {
  const uint64_t s = seed ? seed : 17;
  std::vector<CheckResult> out;
  const bool all = suite == "all";
  if (all || suite == "tree-exactness") out.push_back(tree_exactness(s));
  if (all || suite == "fig1") out.push_back(fig1_chain());
  if (all || suite == "walks") out.push_back(walk_prediction(s));
  if (all || suite == "gcn-elimination") {
    out.push_back(gcn_elimination_trees(s));
    out.push_back(gcn_elimination_cycle_fails());
  }
  if (all || suite == "selfloop-parity") out.push_back(selfloop_parity(s));
  if (all || suite == "kernel") out.push_back(kernel_faithfulness(s));
  if (all || suite == "gradients") out.push_back(gradient_integrity(s));
  if (all || suite == "equivariance") out.push_back(equivariance(s));
  if (out.empty())
    throw InputError(cat("unknown verify suite '", suite,
                         "'; available: tree-exactness fig1 walks "
                         "gcn-elimination selfloop-parity kernel gradients "
                         "equivariance all"));
  return out;
}

}  // namespace genet::verify
