#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "genet/common.hpp"
#include "genet/parallel.hpp"
#include "genet/random.hpp"
#include "genet/tape.hpp"
#include "genet/tensor.hpp"

namespace genet {

// ---------------------------------------------------------------------------
// Raw kernels. Row-major, fixed left-to-right accumulation per output element;
// parallelism only splits output rows, so results are identical for any
// thread count.
// ---------------------------------------------------------------------------
namespace kernels {

// c = a[m,k] * b[k,n]
inline void matmul_nn(const double* a, const double* b, double* c, int64_t m,
                      int64_t k, int64_t n) {
  parallel_for(m, [&](int64_t lo, int64_t hi) {
    for (int64_t i = lo; i < hi; ++i) {
      double* ci = c + i * n;
      std::fill(ci, ci + n, 0.0);
      const double* ai = a + i * k;
      for (int64_t p = 0; p < k; ++p) {
        const double av = ai[p];
        if (av == 0.0) continue;  // bag-of-words inputs are mostly zeros
        const double* bp = b + p * n;
        for (int64_t j = 0; j < n; ++j) ci[j] += av * bp[j];
      }
    }
  });
}

// c = a[m,k] * b[n,k]^T
inline void matmul_nt(const double* a, const double* b, double* c, int64_t m,
                      int64_t k, int64_t n) {
  parallel_for(m, [&](int64_t lo, int64_t hi) {
    for (int64_t i = lo; i < hi; ++i) {
      const double* ai = a + i * k;
      double* ci = c + i * n;
      for (int64_t j = 0; j < n; ++j) {
        const double* bj = b + j * k;
        double s = 0.0;
        for (int64_t p = 0; p < k; ++p) s += ai[p] * bj[p];
        ci[j] = s;
      }
    }
  });
}

// c = a[k,m]^T * b[k,n]
inline void matmul_tn(const double* a, const double* b, double* c, int64_t m,
                      int64_t k, int64_t n) {
  std::fill(c, c + m * n, 0.0);
  for (int64_t p = 0; p < k; ++p) {
    const double* ap = a + p * m;
    const double* bp = b + p * n;
    for (int64_t i = 0; i < m; ++i) {
      const double av = ap[i];
      if (av == 0.0) continue;
      double* ci = c + i * n;
      for (int64_t j = 0; j < n; ++j) ci[j] += av * bp[j];
    }
  }
}

inline void softmax_row(const double* x, double* y, int64_t n) {
  if (n == 0) return;
  double mx = x[0];
  for (int64_t j = 1; j < n; ++j) mx = std::max(mx, x[j]);
  double sum = 0.0;
  for (int64_t j = 0; j < n; ++j) {
    y[j] = std::exp(x[j] - mx);
    sum += y[j];
  }
  const double inv = 1.0 / sum;
  for (int64_t j = 0; j < n; ++j) y[j] *= inv;
}

// dx_j = y_j * (g_j - sum_t y_t g_t)
inline void softmax_row_backward(const double* y, const double* g, double* dx,
                                 int64_t n) {
  double dot = 0.0;
  for (int64_t j = 0; j < n; ++j) dot += y[j] * g[j];
  for (int64_t j = 0; j < n; ++j) dx[j] = y[j] * (g[j] - dot);
}

}  // namespace kernels

// ---------------------------------------------------------------------------
// Dense ops. Forward runs eagerly; with a tape and a tracked input, a
// backward closure is recorded. Closures capture input tensors by value
// (shared storage), which keeps forward intermediates alive for backward.
// ---------------------------------------------------------------------------

inline Tensor matmul(const Tensor& a, const Tensor& b, Tape* tape = nullptr) {
  if (a.dim() != 2 || b.dim() != 2 || a.cols() != b.rows())
    throw ShapeError(cat("matmul: incompatible shapes ", shape_str(a), " and ",
                         shape_str(b)));
  const int64_t m = a.rows(), k = a.cols(), n = b.cols();
  Tensor out = Tensor::zeros({m, n});
  kernels::matmul_nn(a.data(), b.data(), out.mutable_data(), m, k, n);
  debug_check_finite(out, "matmul");
  if (!tape) return out;
  return tape->track_op(
      "matmul", {a.id, b.id}, std::move(out), [a, b](Tape& t, long out_id) {
        const Tensor& g = *t.grad_ptr(out_id);
        const int64_t m = a.rows(), k = a.cols(), n = b.cols();
        if (t.wants_grad(a.id)) {
          Tensor da = Tensor::zeros(a.shape());
          kernels::matmul_nt(g.data(), b.data(), da.mutable_data(), m, n, k);
          t.add_grad(a.id, da);
        }
        if (t.wants_grad(b.id)) {
          Tensor db = Tensor::zeros(b.shape());
          kernels::matmul_tn(a.data(), g.data(), db.mutable_data(), k, m, n);
          t.add_grad(b.id, db);
        }
      });
}

namespace detail {
enum class Ewise { Add, Sub, Mul };
}

inline Tensor ewise(detail::Ewise kind, const Tensor& a, const Tensor& b,
                    Tape* tape) {
  if (!a.same_shape(b))
    throw ShapeError(cat("elementwise op: shapes ", shape_str(a), " vs ",
                         shape_str(b)));
  Tensor out = Tensor::zeros(a.shape());
  const double* pa = a.data();
  const double* pb = b.data();
  double* po = out.mutable_data();
  const int64_t n = a.numel();
  switch (kind) {
    case detail::Ewise::Add:
      for (int64_t i = 0; i < n; ++i) po[i] = pa[i] + pb[i];
      break;
    case detail::Ewise::Sub:
      for (int64_t i = 0; i < n; ++i) po[i] = pa[i] - pb[i];
      break;
    case detail::Ewise::Mul:
      for (int64_t i = 0; i < n; ++i) po[i] = pa[i] * pb[i];
      break;
  }
  debug_check_finite(out, "ewise");
  if (!tape) return out;
  const char* name = kind == detail::Ewise::Add   ? "add"
                     : kind == detail::Ewise::Sub ? "sub"
                                                  : "mul";
  return tape->track_op(
      name, {a.id, b.id}, std::move(out), [kind, a, b](Tape& t, long out_id) {
        const Tensor& g = *t.grad_ptr(out_id);
        const int64_t n = g.numel();
        if (t.wants_grad(a.id)) {
          if (kind == detail::Ewise::Mul) {
            Tensor da = Tensor::zeros(a.shape());
            double* p = da.mutable_data();
            for (int64_t i = 0; i < n; ++i) p[i] = g.data()[i] * b.data()[i];
            t.add_grad(a.id, da);
          } else {
            t.add_grad(a.id, g);
          }
        }
        if (t.wants_grad(b.id)) {
          Tensor db = Tensor::zeros(b.shape());
          double* p = db.mutable_data();
          if (kind == detail::Ewise::Mul) {
            for (int64_t i = 0; i < n; ++i) p[i] = g.data()[i] * a.data()[i];
          } else if (kind == detail::Ewise::Sub) {
            for (int64_t i = 0; i < n; ++i) p[i] = -g.data()[i];
          } else {
            t.add_grad(b.id, g);
            return;
          }
          t.add_grad(b.id, db);
        }
      });
}

inline Tensor add(const Tensor& a, const Tensor& b, Tape* tape = nullptr) {
  return ewise(detail::Ewise::Add, a, b, tape);
}
inline Tensor sub(const Tensor& a, const Tensor& b, Tape* tape = nullptr) {
  return ewise(detail::Ewise::Sub, a, b, tape);
}
inline Tensor mul(const Tensor& a, const Tensor& b, Tape* tape = nullptr) {
  return ewise(detail::Ewise::Mul, a, b, tape);
}

inline Tensor scale(const Tensor& a, double c, Tape* tape = nullptr) {
  Tensor out = Tensor::zeros(a.shape());
  const double* pa = a.data();
  double* po = out.mutable_data();
  for (int64_t i = 0; i < a.numel(); ++i) po[i] = pa[i] * c;
  if (!tape) return out;
  return tape->track_op("scale", {a.id}, std::move(out),
                        [a, c](Tape& t, long out_id) {
                          const Tensor& g = *t.grad_ptr(out_id);
                          Tensor da = Tensor::zeros(a.shape());
                          double* p = da.mutable_data();
                          for (int64_t i = 0; i < g.numel(); ++i)
                            p[i] = g.data()[i] * c;
                          t.add_grad(a.id, da);
                        });
}

// max(x, slope*x). Subgradient at 0 takes the negative-branch value (slope).
inline Tensor leaky_relu(const Tensor& x, double slope, Tape* tape = nullptr) {
  if (slope < 0.0) throw ContractError("leaky_relu: slope must be >= 0");
  Tensor out = Tensor::zeros(x.shape());
  const double* px = x.data();
  double* po = out.mutable_data();
  for (int64_t i = 0; i < x.numel(); ++i)
    po[i] = px[i] > 0.0 ? px[i] : slope * px[i];
  if (!tape) return out;
  return tape->track_op("leaky_relu", {x.id}, std::move(out),
                        [x, slope](Tape& t, long out_id) {
                          const Tensor& g = *t.grad_ptr(out_id);
                          Tensor dx = Tensor::zeros(x.shape());
                          double* p = dx.mutable_data();
                          for (int64_t i = 0; i < x.numel(); ++i)
                            p[i] = g.data()[i] * (x.data()[i] > 0.0 ? 1.0 : slope);
                          t.add_grad(x.id, dx);
                        });
}

inline Tensor relu(const Tensor& x, Tape* tape = nullptr) {
  return leaky_relu(x, 0.0, tape);
}

// Per-row softmax with max subtraction. Empty rows (n == 0) pass through.
inline Tensor row_softmax(const Tensor& x, Tape* tape = nullptr) {
  if (x.dim() != 2) throw ShapeError("row_softmax: expects a 2-D tensor");
  const int64_t m = x.rows(), n = x.cols();
  Tensor out = Tensor::zeros({m, n});
  for (int64_t i = 0; i < m; ++i)
    kernels::softmax_row(x.data() + i * n, out.mutable_data() + i * n, n);
  debug_check_finite(out, "row_softmax");
  if (!tape) return out;
  return tape->track_op(
      "row_softmax", {x.id}, std::move(out), [x, out](Tape& t, long out_id) {
        const Tensor& g = *t.grad_ptr(out_id);
        const int64_t m = x.rows(), n = x.cols();
        Tensor dx = Tensor::zeros({m, n});
        for (int64_t i = 0; i < m; ++i)
          kernels::softmax_row_backward(out.data() + i * n, g.data() + i * n,
                                        dx.mutable_data() + i * n, n);
        t.add_grad(x.id, dx);
      });
}

inline Tensor sum_all(const Tensor& x, Tape* tape = nullptr) {
  double s = 0.0;
  for (int64_t i = 0; i < x.numel(); ++i) s += x.data()[i];
  Tensor out = Tensor::scalar(s);
  if (!tape) return out;
  return tape->track_op("sum", {x.id}, std::move(out),
                        [x](Tape& t, long out_id) {
                          const double g = t.grad_ptr(out_id)->at(0);
                          t.add_grad(x.id, Tensor::full(x.shape(), g));
                        });
}

// x[m,n] scaled per row by s[m,1] (or s[m]).
inline Tensor mul_rowscale(const Tensor& x, const Tensor& s,
                           Tape* tape = nullptr) {
  if (x.dim() != 2 || s.numel() != x.rows())
    throw ShapeError(cat("mul_rowscale: ", shape_str(x), " vs ", shape_str(s)));
  const int64_t m = x.rows(), n = x.cols();
  Tensor out = Tensor::zeros({m, n});
  const double* px = x.data();
  const double* ps = s.data();
  double* po = out.mutable_data();
  for (int64_t i = 0; i < m; ++i) {
    const double v = ps[i];
    for (int64_t j = 0; j < n; ++j) po[i * n + j] = px[i * n + j] * v;
  }
  if (!tape) return out;
  return tape->track_op(
      "mul_rowscale", {x.id, s.id}, std::move(out),
      [x, s](Tape& t, long out_id) {
        const Tensor& g = *t.grad_ptr(out_id);
        const int64_t m = x.rows(), n = x.cols();
        if (t.wants_grad(x.id)) {
          Tensor dx = Tensor::zeros({m, n});
          double* p = dx.mutable_data();
          for (int64_t i = 0; i < m; ++i)
            for (int64_t j = 0; j < n; ++j)
              p[i * n + j] = g.data()[i * n + j] * s.data()[i];
          t.add_grad(x.id, dx);
        }
        if (t.wants_grad(s.id)) {
          Tensor ds = Tensor::zeros(s.shape());
          double* p = ds.mutable_data();
          for (int64_t i = 0; i < m; ++i) {
            double acc = 0.0;
            for (int64_t j = 0; j < n; ++j)
              acc += g.data()[i * n + j] * x.data()[i * n + j];
            p[i] = acc;
          }
          t.add_grad(s.id, ds);
        }
      });
}

inline Tensor slice_cols(const Tensor& x, int64_t c0, int64_t c1,
                         Tape* tape = nullptr) {
  if (x.dim() != 2 || c0 < 0 || c1 > x.cols() || c0 >= c1)
    throw ShapeError(cat("slice_cols: [", c0, ",", c1, ") of ", shape_str(x)));
  const int64_t m = x.rows(), n = x.cols(), w = c1 - c0;
  Tensor out = Tensor::zeros({m, w});
  for (int64_t i = 0; i < m; ++i)
    std::copy(x.data() + i * n + c0, x.data() + i * n + c1,
              out.mutable_data() + i * w);
  if (!tape) return out;
  return tape->track_op("slice_cols", {x.id}, std::move(out),
                        [x, c0, w](Tape& t, long out_id) {
                          const Tensor& g = *t.grad_ptr(out_id);
                          const int64_t m = x.rows(), n = x.cols();
                          Tensor dx = Tensor::zeros({m, n});
                          double* p = dx.mutable_data();
                          for (int64_t i = 0; i < m; ++i)
                            for (int64_t j = 0; j < w; ++j)
                              p[i * n + c0 + j] = g.data()[i * w + j];
                          t.add_grad(x.id, dx);
                        });
}

inline Tensor slice_rows(const Tensor& x, int64_t r0, int64_t r1,
                         Tape* tape = nullptr) {
  if (x.dim() != 2 || r0 < 0 || r1 > x.rows() || r0 >= r1)
    throw ShapeError(cat("slice_rows: [", r0, ",", r1, ") of ", shape_str(x)));
  const int64_t n = x.cols(), h = r1 - r0;
  Tensor out = Tensor::zeros({h, n});
  std::copy(x.data() + r0 * n, x.data() + r1 * n, out.mutable_data());
  if (!tape) return out;
  return tape->track_op("slice_rows", {x.id}, std::move(out),
                        [x, r0, h](Tape& t, long out_id) {
                          const Tensor& g = *t.grad_ptr(out_id);
                          const int64_t n = x.cols();
                          Tensor dx = Tensor::zeros(x.shape());
                          std::copy(g.data(), g.data() + h * n,
                                    dx.mutable_data() + r0 * n);
                          t.add_grad(x.id, dx);
                        });
}

inline Tensor concat_cols(const std::vector<Tensor>& parts,
                          Tape* tape = nullptr) {
  if (parts.empty()) throw ContractError("concat_cols: no inputs");
  const int64_t m = parts[0].rows();
  int64_t total = 0;
  for (const Tensor& p : parts) {
    if (p.dim() != 2 || p.rows() != m)
      throw ShapeError("concat_cols: row counts differ");
    total += p.cols();
  }
  Tensor out = Tensor::zeros({m, total});
  int64_t off = 0;
  for (const Tensor& p : parts) {
    const int64_t w = p.cols();
    for (int64_t i = 0; i < m; ++i)
      std::copy(p.data() + i * w, p.data() + (i + 1) * w,
                out.mutable_data() + i * total + off);
    off += w;
  }
  if (!tape) return out;
  std::vector<long> ids;
  for (const Tensor& p : parts) ids.push_back(p.id);
  return tape->track_op(
      "concat_cols", ids, std::move(out), [parts](Tape& t, long out_id) {
        const Tensor& g = *t.grad_ptr(out_id);
        const int64_t m = parts[0].rows(), total = g.cols();
        int64_t off = 0;
        for (const Tensor& p : parts) {
          const int64_t w = p.cols();
          if (t.wants_grad(p.id)) {
            Tensor dp = Tensor::zeros({m, w});
            for (int64_t i = 0; i < m; ++i)
              std::copy(g.data() + i * total + off, g.data() + i * total + off + w,
                        dp.mutable_data() + i * w);
            t.add_grad(p.id, dp);
          }
          off += w;
        }
      });
}

// Inverted dropout; the kept mask is scaled by 1/(1-rate) so expectations
// match eval mode. rate == 0 or !training is the identity.
inline Tensor dropout(const Tensor& x, double rate, Rng& rng, bool training,
                      Tape* tape = nullptr) {
  if (rate < 0.0 || rate >= 1.0)
    throw ContractError("dropout: rate must be in [0, 1)");
  if (!training || rate == 0.0) return x;
  Tensor mask = Tensor::zeros(x.shape());
  double* pm = mask.mutable_data();
  const double keep = 1.0 - rate;
  for (int64_t i = 0; i < x.numel(); ++i)
    pm[i] = rng.uniform() < keep ? 1.0 / keep : 0.0;
  return mul(x, mask, tape);  // mask is untracked; grad flows through x only
}

}  // namespace genet
