#pragma once

#include <optional>
#include <vector>

#include "genet/graph.hpp"
#include "genet/graph_ops.hpp"
#include "genet/ops.hpp"

namespace genet {

// Per-round state of the elimination recursion
//   f(k-1)[i->j] = alpha(k)[i->j] * ( alpha(k-1)[j->j] * h(k-2)[j]
//                                   + alpha(k-1)[j->i] * h(k-2)[i]
//                                   - f(k-2)[j->i] ),      f(0) = 0,
// carried on directed non-self slots. Two slot-aligned buffers ping-pong, so
// a state holds exactly 2 * num_slots * F doubles.
class EliminationState {
 public:
  EliminationState(const CsrGraph& g, int64_t feat_dim)
      : graph_(&g), feat_dim_(feat_dim) {
    buf_[0] = Tensor::zeros({g.num_slots(), feat_dim});
    buf_[1] = Tensor::zeros({g.num_slots(), feat_dim});
  }

  // the round about to execute; 1-based
  int round() const { return round_; }
  int64_t feat_dim() const { return feat_dim_; }
  const CsrGraph& graph() const { return *graph_; }

  // f^(round-2): carriers produced by the previous round (zeros before round 2)
  const Tensor& carrier() const { return buf_[cur_]; }
  // f^(round-2)[j->i] for the slot holding (i->j)
  double carrier_reversed(EdgeId e, int64_t f) const {
    return buf_[cur_].at(graph_->reverse_slot(e), f);
  }

  int64_t bytes_held() const {
    return 2 * graph_->num_slots() * feat_dim_ *
           static_cast<int64_t>(sizeof(double));
  }

  Tensor& scratch() { return buf_[1 - cur_]; }
  void advance() {
    cur_ = 1 - cur_;
    ++round_;
  }

 private:
  const CsrGraph* graph_;
  int64_t feat_dim_;
  Tensor buf_[2];
  int cur_ = 0;
  int round_ = 1;
};

// One elimination step: computes the redundancy r for the state's current
// round from h^(k-2) and the two coefficient sets, stores the new carriers,
// and advances the state. Round 1 returns zeros (f^(0) = 0).
inline Tensor gea_round(const CsrGraph& g, const Tensor& h_prev,
                        const Tensor& h_prev2, const EdgeCoefficients& coef_k,
                        const EdgeCoefficients& coef_km1,
                        EliminationState& state) {
  if (&state.graph() != &g)
    throw ContractError("gea_round: state belongs to a different graph");
  if (h_prev.rows() != g.num_nodes() || h_prev2.rows() != g.num_nodes() ||
      h_prev.cols() != state.feat_dim() || h_prev2.cols() != state.feat_dim())
    throw ContractError(cat("gea_round: feature dims ", shape_str(h_prev), "/",
                            shape_str(h_prev2), " do not match state F=",
                            state.feat_dim()));
  if (coef_k.edge.size() != static_cast<size_t>(g.num_slots()) ||
      coef_km1.edge.size() != static_cast<size_t>(g.num_slots()))
    throw ContractError("gea_round: coefficient arrays do not match the graph");

  const int64_t N = g.num_nodes(), F = state.feat_dim();
  Tensor r = Tensor::zeros({N, F});
  if (state.round() == 1) {
    state.advance();
    return r;
  }

  const Tensor& f_prev = state.carrier();
  Tensor& f_new = state.scratch();
  double* fn = f_new.mutable_data();
  double* pr = r.mutable_data();
  parallel_for(N, [&](int64_t lo, int64_t hi) {
    for (int64_t i = lo; i < hi; ++i) {
      double* ri = pr + i * F;
      const double* h2i = h_prev2.data() + i * F;
      for (EdgeId e = g.row_begin(i); e < g.row_end(i); ++e) {
        const NodeId j = g.target(e);
        double* fe = fn + e * F;
        if (j == i) {
          std::fill(fe, fe + F, 0.0);
          continue;
        }
        const EdgeId rev = g.reverse_slot(e);
        const double a_jj = coef_km1.self[static_cast<size_t>(j)];
        const double a_ji = coef_km1.edge[static_cast<size_t>(rev)];
        const double a_k = coef_k.edge[static_cast<size_t>(e)];
        const double* h2j = h_prev2.data() + j * F;
        const double* fr = f_prev.data() + rev * F;
        for (int64_t f = 0; f < F; ++f) {
          const double v = a_k * ((a_jj * h2j[f] + a_ji * h2i[f]) - fr[f]);
          fe[f] = v;
          ri[f] += v;
        }
      }
    }
  });
  state.advance();
  return r;
}

struct PropagationTrace {
  std::vector<Tensor> h;                // h[0..K], each [N,F]; h[0] == input
  std::vector<EdgeCoefficients> coefs;  // coefficients used per round 1..K
  int64_t edge_visits = 0;              // non-self directed-edge touches
};

// Elimination-based propagation (one GEN layer's K rounds, fixed
// coefficients):
//   h(k)[i] = alpha(k)[i->i] h(k-1)[i] - r(k-1)[i]
//             + sum_{j in mu(i)-i} alpha(k)[i->j] h(k-1)[j].
// With eliminate=false the r term is dropped (the "w/o GEA" ablation).
inline PropagationTrace propagate_eliminated(
    const CsrGraph& g, const Tensor& h0,
    const std::vector<EdgeCoefficients>& coefs, int K, bool eliminate) {
  if (K < 1) throw ContractError("propagate_eliminated: K must be >= 1");
  if (static_cast<int>(coefs.size()) < K)
    throw ContractError(cat("propagate_eliminated: ", coefs.size(),
                            " coefficient sets for K=", K, " rounds"));
  if (h0.rows() != g.num_nodes())
    throw ShapeError("propagate_eliminated: feature row count mismatch");
  const int64_t N = g.num_nodes(), F = h0.cols();

  PropagationTrace trace;
  trace.h.reserve(static_cast<size_t>(K) + 1);
  trace.h.push_back(h0);
  trace.coefs.assign(coefs.begin(), coefs.begin() + K);

  EliminationState state(g, F);
  for (int k = 1; k <= K; ++k) {
    const EdgeCoefficients& ck = coefs[static_cast<size_t>(k - 1)];
    const Tensor& hp = trace.h.back();
    Tensor r;
    if (eliminate) {
      const EdgeCoefficients& ckm1 = coefs[static_cast<size_t>(k >= 2 ? k - 2 : 0)];
      const Tensor& hp2 =
          k >= 2 ? trace.h[static_cast<size_t>(k - 2)] : trace.h[0];
      r = gea_round(g, hp, hp2, ck, ckm1, state);
      trace.edge_visits += g.num_nonself_slots();  // carrier buffer pass
    }
    Tensor hk = Tensor::zeros({N, F});
    double* out = hk.mutable_data();
    parallel_for(N, [&](int64_t lo, int64_t hi) {
      for (int64_t i = lo; i < hi; ++i) {
        double* row = out + i * F;
        for (EdgeId e = g.row_begin(i); e < g.row_end(i); ++e) {
          const double a = ck.edge[static_cast<size_t>(e)];
          const double* hj = hp.data() + g.target(e) * F;
          for (int64_t f = 0; f < F; ++f) row[f] += a * hj[f];
        }
        if (!g.has_self_loops()) {
          const double s = ck.self[static_cast<size_t>(i)];
          const double* hi_row = hp.data() + i * F;
          for (int64_t f = 0; f < F; ++f) row[f] += s * hi_row[f];
        }
        if (r.defined()) {
          const double* ri = r.data() + i * F;
          for (int64_t f = 0; f < F; ++f) row[f] -= ri[f];
        }
      }
    });
    trace.edge_visits += g.num_nonself_slots();  // aggregation pass
    debug_check_finite(hk, "propagate_eliminated");
    trace.h.push_back(std::move(hk));
  }
  return trace;
}

// Differences successive rounds: increment[k] = h(k) - alpha(k)_ii (.) h(k-1).
// Under the default alpha_ii = 1 convention this is literally h(k) - h(k-1);
// with no recorded coefficients the literal difference is used.
inline std::vector<Tensor> hop_decompose(const PropagationTrace& trace) {
  if (trace.h.size() < 2)
    throw ContractError("hop_decompose: trace holds no completed rounds");
  const int64_t N = trace.h[0].rows(), F = trace.h[0].cols();
  std::vector<Tensor> inc;
  for (size_t k = 1; k < trace.h.size(); ++k) {
    Tensor d = Tensor::zeros({N, F});
    double* pd = d.mutable_data();
    const double* hk = trace.h[k].data();
    const double* hkm1 = trace.h[k - 1].data();
    const std::vector<double>* self =
        k - 1 < trace.coefs.size() ? &trace.coefs[k - 1].self : nullptr;
    for (int64_t i = 0; i < N; ++i) {
      const double s = self ? (*self)[static_cast<size_t>(i)] : 1.0;
      for (int64_t f = 0; f < F; ++f)
        pd[i * F + f] = hk[i * F + f] - s * hkm1[i * F + f];
    }
    inc.push_back(std::move(d));
  }
  return inc;
}

// Plain propagation on a loop-free graph. On acyclic graphs round k's output
// at node i is supported on hop distances {k, k-2, k-4, ...}.
inline PropagationTrace propagate_self_loop_eliminated(
    const CsrGraph& g, const Tensor& h0,
    const std::vector<EdgeCoefficients>& coefs, int K) {
  if (g.has_self_loops())
    throw ContractError("self-loop elimination requires a graph built without self-loops");
  for (const auto& c : coefs)
    for (double s : c.self)
      if (s != 0.0)
        throw ContractError("self-loop elimination: self coefficients must be zero");
  return propagate_eliminated(g, h0, coefs, K, /*eliminate=*/false);
}

// ---------------------------------------------------------------------------
// Full nonlinear GCN with elimination (the appendix variant). Layer l applies
// T_l(x) = relu(x W_l) after aggregation; carriers store post-activation edge
// vectors, so each f update runs T_{l-1} per edge.
// ---------------------------------------------------------------------------

namespace detail {
inline Tensor relu_linear(const Tensor& x, const Tensor& w) {
  Tensor y = matmul(x, w);
  double* p = y.mutable_data();
  for (int64_t i = 0; i < y.numel(); ++i) p[i] = p[i] > 0.0 ? p[i] : 0.0;
  return y;
}

inline void check_sign_conditions(const Tensor& X,
                                  const std::vector<Tensor>& weights) {
  int sign = 0;
  for (int64_t i = 0; i < X.numel(); ++i) {
    const double v = X.data()[i];
    if (v == 0.0) continue;
    const int s = v > 0.0 ? 1 : -1;
    if (sign == 0) sign = s;
    if (s != sign)
      throw ContractError("gcn_forward_eliminated: X entries must share one sign");
  }
  for (size_t l = 0; l < weights.size(); ++l) {
    const Tensor& W = weights[l];
    for (int64_t c = 0; c < W.cols(); ++c) {
      int csign = 0;
      for (int64_t r = 0; r < W.rows(); ++r) {
        const double v = W.at(r, c);
        if (v == 0.0) continue;
        const int s = v > 0.0 ? 1 : -1;
        if (csign == 0) csign = s;
        if (s != csign)
          throw ContractError(cat("gcn_forward_eliminated: column ", c,
                                  " of layer-", l + 1,
                                  " weights mixes signs"));
      }
    }
  }
}
}  // namespace detail

// Returns h^(1..L). Verification mode enforces the separability preconditions
// (sign-coherent X, sign-coherent weight columns); elimination is exact only
// on acyclic graphs, which callers assert where needed.
inline std::vector<Tensor> gcn_forward_eliminated(
    const CsrGraph& g, const Tensor& X, const std::vector<Tensor>& weights,
    bool eliminate, bool verify_signs = true) {
  if (weights.empty()) throw ContractError("gcn_forward_eliminated: no layers");
  if (X.rows() != g.num_nodes())
    throw ShapeError("gcn_forward_eliminated: feature row count mismatch");
  if (verify_signs) detail::check_sign_conditions(X, weights);

  const EdgeCoefficients C = gcn_coefficients(g);
  const int64_t N = g.num_nodes();
  const int L = static_cast<int>(weights.size());

  std::vector<Tensor> h;  // h[0] = X
  h.push_back(X);
  // f carriers per non-self slot, width of the previous layer's output
  Tensor f_prev;

  for (int l = 1; l <= L; ++l) {
    const Tensor& W = weights[static_cast<size_t>(l - 1)];
    const Tensor& hp = h[static_cast<size_t>(l - 1)];
    if (hp.cols() != W.rows())
      throw ShapeError(cat("gcn layer ", l, ": features ", shape_str(hp),
                           " vs weights ", shape_str(W)));
    const int64_t Fin = hp.cols();

    Tensor r;
    Tensor f_new;
    if (eliminate && l >= 2) {
      const Tensor& Wprev = weights[static_cast<size_t>(l - 2)];
      const Tensor& hp2 = h[static_cast<size_t>(l - 2)];
      f_new = Tensor::zeros({g.num_slots(), Fin});
      r = Tensor::zeros({N, Fin});
      for (NodeId i = 0; i < N; ++i) {
        for (EdgeId e = g.row_begin(i); e < g.row_end(i); ++e) {
          const NodeId j = g.target(e);
          if (j == i) continue;
          const EdgeId rev = g.reverse_slot(e);
          Tensor arg = Tensor::zeros({1, hp2.cols()});
          double* pa = arg.mutable_data();
          const double a_jj = C.self[static_cast<size_t>(j)];
          const double a_ji = C.edge[static_cast<size_t>(rev)];
          for (int64_t f = 0; f < hp2.cols(); ++f)
            pa[f] = a_jj * hp2.at(j, f) + a_ji * hp2.at(i, f);
          if (f_prev.defined())
            for (int64_t f = 0; f < hp2.cols(); ++f)
              pa[f] -= f_prev.at(rev, f);
          Tensor te = detail::relu_linear(arg, Wprev);  // [1, Fin]
          const double a_ij = C.edge[static_cast<size_t>(e)];
          for (int64_t f = 0; f < Fin; ++f) {
            const double v = a_ij * te.at(0, f);
            f_new.mutable_data()[e * Fin + f] = v;
            r.mutable_data()[i * Fin + f] += v;
          }
        }
      }
    }

    // aggregate, subtract redundancy, transform
    Tensor agg = Tensor::zeros({N, Fin});
    double* pg = agg.mutable_data();
    for (NodeId i = 0; i < N; ++i) {
      double* row = pg + i * Fin;
      for (EdgeId e = g.row_begin(i); e < g.row_end(i); ++e) {
        const double a = C.edge[static_cast<size_t>(e)];
        const double* hj = hp.data() + g.target(e) * Fin;
        for (int64_t f = 0; f < Fin; ++f) row[f] += a * hj[f];
      }
      if (r.defined()) {
        const double* ri = r.data() + i * Fin;
        for (int64_t f = 0; f < Fin; ++f) row[f] -= ri[f];
      }
    }
    h.push_back(detail::relu_linear(agg, W));
    if (eliminate && l >= 2) f_prev = std::move(f_new);
  }

  h.erase(h.begin());  // drop the input; return h^(1..L)
  return h;
}

}  // namespace genet
