#pragma once

#include <cmath>
#include <vector>

#include "genet/graph.hpp"
#include "genet/ops.hpp"

namespace genet {

// Sparse counterparts of the dense ops: gathers and segment reductions over a
// CSR graph, recorded on the same tape. Edge tensors have one row per slot,
// in slot order.

// m[e] = h[target(e)]
inline Tensor gather_dst(const CsrGraph& g, const Tensor& h,
                         Tape* tape = nullptr) {
  if (h.rows() != g.num_nodes())
    throw ShapeError(cat("gather_dst: features ", shape_str(h), " vs ",
                         g.num_nodes(), " nodes"));
  const int64_t E = g.num_slots(), F = h.cols();
  Tensor out = Tensor::zeros({E, F});
  double* po = out.mutable_data();
  parallel_for(E, [&](int64_t lo, int64_t hi) {
    for (int64_t e = lo; e < hi; ++e) {
      const double* src = h.data() + g.target(e) * F;
      std::copy(src, src + F, po + e * F);
    }
  });
  if (!tape) return out;
  return tape->track_op(
      "gather_dst", {h.id}, std::move(out), [&g, h](Tape& t, long out_id) {
        const Tensor& grad = *t.grad_ptr(out_id);
        const int64_t F = h.cols();
        Tensor dh = Tensor::zeros(h.shape());
        double* p = dh.mutable_data();
        for (EdgeId e = 0; e < g.num_slots(); ++e) {
          double* row = p + g.target(e) * F;
          const double* ge = grad.data() + e * F;
          for (int64_t f = 0; f < F; ++f) row[f] += ge[f];
        }
        t.add_grad(h.id, dh);
      });
}

// m[e] = h[source(e)]
inline Tensor gather_src(const CsrGraph& g, const Tensor& h,
                         Tape* tape = nullptr) {
  if (h.rows() != g.num_nodes())
    throw ShapeError(cat("gather_src: features ", shape_str(h), " vs ",
                         g.num_nodes(), " nodes"));
  const int64_t E = g.num_slots(), F = h.cols();
  Tensor out = Tensor::zeros({E, F});
  double* po = out.mutable_data();
  parallel_for(E, [&](int64_t lo, int64_t hi) {
    for (int64_t e = lo; e < hi; ++e) {
      const double* src = h.data() + g.source(e) * F;
      std::copy(src, src + F, po + e * F);
    }
  });
  if (!tape) return out;
  return tape->track_op(
      "gather_src", {h.id}, std::move(out), [&g, h](Tape& t, long out_id) {
        const Tensor& grad = *t.grad_ptr(out_id);
        const int64_t F = h.cols();
        Tensor dh = Tensor::zeros(h.shape());
        double* p = dh.mutable_data();
        for (NodeId u = 0; u < g.num_nodes(); ++u) {
          double* row = p + u * F;
          for (EdgeId e = g.row_begin(u); e < g.row_end(u); ++e) {
            const double* ge = grad.data() + e * F;
            for (int64_t f = 0; f < F; ++f) row[f] += ge[f];
          }
        }
        t.add_grad(h.id, dh);
      });
}

// out[u] = sum over u's slots of m[e]; the CSR row layout makes this a
// per-node reduction, deterministic left-to-right.
inline Tensor aggregate_to_src(const CsrGraph& g, const Tensor& m,
                               Tape* tape = nullptr) {
  if (m.rows() != g.num_slots())
    throw ShapeError(cat("aggregate_to_src: edge tensor ", shape_str(m),
                         " vs ", g.num_slots(), " slots"));
  const int64_t N = g.num_nodes(), F = m.cols();
  Tensor out = Tensor::zeros({N, F});
  double* po = out.mutable_data();
  parallel_for(N, [&](int64_t lo, int64_t hi) {
    for (int64_t u = lo; u < hi; ++u) {
      double* row = po + u * F;
      for (EdgeId e = g.row_begin(u); e < g.row_end(u); ++e) {
        const double* me = m.data() + e * F;
        for (int64_t f = 0; f < F; ++f) row[f] += me[f];
      }
    }
  });
  if (!tape) return out;
  return tape->track_op(
      "aggregate_to_src", {m.id}, std::move(out),
      [&g, m](Tape& t, long out_id) {
        const Tensor& grad = *t.grad_ptr(out_id);
        const int64_t F = m.cols();
        Tensor dm = Tensor::zeros(m.shape());
        double* p = dm.mutable_data();
        for (EdgeId e = 0; e < g.num_slots(); ++e) {
          const double* gu = grad.data() + g.source(e) * F;
          std::copy(gu, gu + F, p + e * F);
        }
        t.add_grad(m.id, dm);
      });
}

// out[e] = m[reverse_slot(e)]; an involution, so backward is itself.
inline Tensor reverse_edges(const CsrGraph& g, const Tensor& m,
                            Tape* tape = nullptr) {
  if (m.rows() != g.num_slots())
    throw ShapeError("reverse_edges: edge tensor row count mismatch");
  const int64_t E = g.num_slots(), F = m.cols();
  Tensor out = Tensor::zeros({E, F});
  double* po = out.mutable_data();
  for (EdgeId e = 0; e < E; ++e) {
    const double* src = m.data() + g.reverse_slot(e) * F;
    std::copy(src, src + F, po + e * F);
  }
  if (!tape) return out;
  return tape->track_op("reverse_edges", {m.id}, std::move(out),
                        [&g, m](Tape& t, long out_id) {
                          t.add_grad(m.id, reverse_edges(g, *t.grad_ptr(out_id)));
                        });
}

// out[u] = e[self_slot(u)] (0 when the node has no self-loop).
inline Tensor select_self(const CsrGraph& g, const Tensor& e,
                          Tape* tape = nullptr) {
  if (e.rows() != g.num_slots())
    throw ShapeError("select_self: edge tensor row count mismatch");
  const int64_t N = g.num_nodes(), F = e.cols();
  Tensor out = Tensor::zeros({N, F});
  double* po = out.mutable_data();
  for (NodeId u = 0; u < N; ++u) {
    const EdgeId s = g.self_slot(u);
    if (s < 0) continue;
    std::copy(e.data() + s * F, e.data() + (s + 1) * F, po + u * F);
  }
  if (!tape) return out;
  return tape->track_op("select_self", {e.id}, std::move(out),
                        [&g, e](Tape& t, long out_id) {
                          const Tensor& grad = *t.grad_ptr(out_id);
                          const int64_t F = e.cols();
                          Tensor de = Tensor::zeros(e.shape());
                          double* p = de.mutable_data();
                          for (NodeId u = 0; u < g.num_nodes(); ++u) {
                            const EdgeId s = g.self_slot(u);
                            if (s < 0) continue;
                            for (int64_t f = 0; f < F; ++f)
                              p[s * F + f] = grad.data()[u * F + f];
                          }
                          t.add_grad(e.id, de);
                        });
}

// 1.0 on non-self slots, 0.0 on self slots; constant, never tracked.
inline Tensor nonself_mask(const CsrGraph& g) {
  Tensor m = Tensor::full({g.num_slots(), 1}, 1.0);
  for (NodeId u = 0; u < g.num_nodes(); ++u) {
    const EdgeId s = g.self_slot(u);
    if (s >= 0) m.mutable_data()[s] = 0.0;
  }
  return m;
}

// Softmax over each node's slot segment (Eq. 2 normalization: the
// neighborhood including the self-loop). scores and result are [E,1].
inline Tensor edge_softmax(const CsrGraph& g, const Tensor& scores,
                           Tape* tape = nullptr) {
  if (scores.rows() != g.num_slots() || scores.cols() != 1)
    throw ShapeError(cat("edge_softmax: want [slots,1], got ", shape_str(scores)));
  Tensor out = Tensor::zeros(scores.shape());
  double* po = out.mutable_data();
  for (NodeId u = 0; u < g.num_nodes(); ++u) {
    const EdgeId b = g.row_begin(u);
    kernels::softmax_row(scores.data() + b, po + b, g.row_end(u) - b);
  }
  debug_check_finite(out, "edge_softmax");
  if (!tape) return out;
  return tape->track_op(
      "edge_softmax", {scores.id}, std::move(out),
      [&g, scores, out](Tape& t, long out_id) {
        const Tensor& grad = *t.grad_ptr(out_id);
        Tensor dx = Tensor::zeros(scores.shape());
        for (NodeId u = 0; u < g.num_nodes(); ++u) {
          const EdgeId b = g.row_begin(u);
          kernels::softmax_row_backward(out.data() + b, grad.data() + b,
                                        dx.mutable_data() + b,
                                        g.row_end(u) - b);
        }
        t.add_grad(scores.id, dx);
      });
}

// --------------------- blocked (per-node) attention ops ---------------------
// H-style tensors pack K rows per node: row n*K + k belongs to node n, hop k+1.

// out[n,k] = q[n,:] . km[n*K+k,:]
inline Tensor block_rowdot(const Tensor& q, const Tensor& km, int64_t K,
                           Tape* tape = nullptr) {
  const int64_t N = q.rows(), d = q.cols();
  if (km.rows() != N * K || km.cols() != d)
    throw ShapeError(cat("block_rowdot: ", shape_str(q), " vs ", shape_str(km),
                         " with K=", K));
  Tensor out = Tensor::zeros({N, K});
  double* po = out.mutable_data();
  for (int64_t n = 0; n < N; ++n) {
    const double* qn = q.data() + n * d;
    for (int64_t k = 0; k < K; ++k) {
      const double* kr = km.data() + (n * K + k) * d;
      double s = 0.0;
      for (int64_t f = 0; f < d; ++f) s += qn[f] * kr[f];
      po[n * K + k] = s;
    }
  }
  if (!tape) return out;
  return tape->track_op(
      "block_rowdot", {q.id, km.id}, std::move(out),
      [q, km, K](Tape& t, long out_id) {
        const Tensor& g = *t.grad_ptr(out_id);
        const int64_t N = q.rows(), d = q.cols();
        if (t.wants_grad(q.id)) {
          Tensor dq = Tensor::zeros(q.shape());
          double* p = dq.mutable_data();
          for (int64_t n = 0; n < N; ++n)
            for (int64_t k = 0; k < K; ++k) {
              const double gv = g.data()[n * K + k];
              const double* kr = km.data() + (n * K + k) * d;
              for (int64_t f = 0; f < d; ++f) p[n * d + f] += gv * kr[f];
            }
          t.add_grad(q.id, dq);
        }
        if (t.wants_grad(km.id)) {
          Tensor dk = Tensor::zeros(km.shape());
          double* p = dk.mutable_data();
          for (int64_t n = 0; n < N; ++n)
            for (int64_t k = 0; k < K; ++k) {
              const double gv = g.data()[n * K + k];
              const double* qn = q.data() + n * d;
              for (int64_t f = 0; f < d; ++f) p[(n * K + k) * d + f] += gv * qn[f];
            }
          t.add_grad(km.id, dk);
        }
      });
}

// out[n,:] = sum_k w[n,k] * v[n*K+k,:]
inline Tensor block_weighted_sum(const Tensor& w, const Tensor& v,
                                 Tape* tape = nullptr) {
  const int64_t N = w.rows(), K = w.cols();
  if (v.rows() != N * K)
    throw ShapeError(cat("block_weighted_sum: ", shape_str(w), " vs ",
                         shape_str(v)));
  const int64_t F = v.cols();
  Tensor out = Tensor::zeros({N, F});
  double* po = out.mutable_data();
  for (int64_t n = 0; n < N; ++n) {
    double* row = po + n * F;
    for (int64_t k = 0; k < K; ++k) {
      const double wv = w.data()[n * K + k];
      const double* vr = v.data() + (n * K + k) * F;
      for (int64_t f = 0; f < F; ++f) row[f] += wv * vr[f];
    }
  }
  if (!tape) return out;
  return tape->track_op(
      "block_weighted_sum", {w.id, v.id}, std::move(out),
      [w, v](Tape& t, long out_id) {
        const Tensor& g = *t.grad_ptr(out_id);
        const int64_t N = w.rows(), K = w.cols(), F = v.cols();
        if (t.wants_grad(w.id)) {
          Tensor dw = Tensor::zeros(w.shape());
          double* p = dw.mutable_data();
          for (int64_t n = 0; n < N; ++n)
            for (int64_t k = 0; k < K; ++k) {
              const double* vr = v.data() + (n * K + k) * F;
              const double* gn = g.data() + n * F;
              double s = 0.0;
              for (int64_t f = 0; f < F; ++f) s += gn[f] * vr[f];
              p[n * K + k] = s;
            }
          t.add_grad(w.id, dw);
        }
        if (t.wants_grad(v.id)) {
          Tensor dv = Tensor::zeros(v.shape());
          double* p = dv.mutable_data();
          for (int64_t n = 0; n < N; ++n)
            for (int64_t k = 0; k < K; ++k) {
              const double wv = w.data()[n * K + k];
              const double* gn = g.data() + n * F;
              for (int64_t f = 0; f < F; ++f) p[(n * K + k) * F + f] = wv * gn[f];
            }
          t.add_grad(v.id, dv);
        }
      });
}

// Stacks K per-node matrices [N,F] into [N*K,F], row n*K+k = parts[k][n].
inline Tensor row_interleave(const std::vector<Tensor>& parts,
                             Tape* tape = nullptr) {
  if (parts.empty()) throw ContractError("row_interleave: no inputs");
  const int64_t N = parts[0].rows(), F = parts[0].cols();
  const int64_t K = static_cast<int64_t>(parts.size());
  for (const Tensor& p : parts)
    if (p.rows() != N || p.cols() != F)
      throw ShapeError("row_interleave: mismatched part shapes");
  Tensor out = Tensor::zeros({N * K, F});
  double* po = out.mutable_data();
  for (int64_t k = 0; k < K; ++k)
    for (int64_t n = 0; n < N; ++n)
      std::copy(parts[static_cast<size_t>(k)].data() + n * F,
                parts[static_cast<size_t>(k)].data() + (n + 1) * F,
                po + (n * K + k) * F);
  if (!tape) return out;
  std::vector<long> ids;
  for (const Tensor& p : parts) ids.push_back(p.id);
  return tape->track_op(
      "row_interleave", ids, std::move(out), [parts](Tape& t, long out_id) {
        const Tensor& g = *t.grad_ptr(out_id);
        const int64_t N = parts[0].rows(), F = parts[0].cols();
        const int64_t K = static_cast<int64_t>(parts.size());
        for (int64_t k = 0; k < K; ++k) {
          const Tensor& p = parts[static_cast<size_t>(k)];
          if (!t.wants_grad(p.id)) continue;
          Tensor dp = Tensor::zeros({N, F});
          double* pd = dp.mutable_data();
          for (int64_t n = 0; n < N; ++n)
            std::copy(g.data() + (n * K + k) * F, g.data() + (n * K + k + 1) * F,
                      pd + n * F);
          t.add_grad(p.id, dp);
        }
      });
}

// Row-wise power compression: y_r = x_r / (||x_r|| + eps)^gamma. Direction is
// preserved; gamma = 0 is the identity. The zero row maps to zero and its
// norm kink takes the zero subgradient.
inline Tensor norm_compress_rows(const Tensor& x, double gamma, double eps,
                                 Tape* tape = nullptr) {
  if (gamma < 0.0 || gamma > 1.0)
    throw ContractError("norm_compress: gamma must be in [0,1]");
  if (eps <= 0.0) throw ContractError("norm_compress: epsilon must be > 0");
  const int64_t m = x.rows(), n = x.cols();
  Tensor out = Tensor::zeros({m, n});
  std::vector<double> norms(static_cast<size_t>(m));
  double* po = out.mutable_data();
  for (int64_t i = 0; i < m; ++i) {
    double sq = 0.0;
    for (int64_t j = 0; j < n; ++j) sq += x.at(i, j) * x.at(i, j);
    const double nrm = std::sqrt(sq);
    norms[static_cast<size_t>(i)] = nrm;
    const double s = std::pow(nrm + eps, -gamma);
    for (int64_t j = 0; j < n; ++j) po[i * n + j] = x.at(i, j) * s;
  }
  if (!tape) return out;
  return tape->track_op(
      "norm_compress", {x.id}, std::move(out),
      [x, gamma, eps, norms](Tape& t, long out_id) {
        const Tensor& g = *t.grad_ptr(out_id);
        const int64_t m = x.rows(), n = x.cols();
        Tensor dx = Tensor::zeros({m, n});
        double* p = dx.mutable_data();
        for (int64_t i = 0; i < m; ++i) {
          const double nrm = norms[static_cast<size_t>(i)];
          const double s = std::pow(nrm + eps, -gamma);
          double gdotx = 0.0;
          for (int64_t j = 0; j < n; ++j) gdotx += g.at(i, j) * x.at(i, j);
          const double coef =
              nrm > 0.0 ? -gamma * std::pow(nrm + eps, -gamma - 1.0) * gdotx / nrm
                        : 0.0;
          for (int64_t j = 0; j < n; ++j)
            p[i * n + j] = s * g.at(i, j) + coef * x.at(i, j);
        }
        t.add_grad(x.id, dx);
      });
}

}  // namespace genet
