#pragma once

#include <functional>
#include <vector>

#include "genet/oracle.hpp"
#include "genet/random.hpp"
#include "genet/tape.hpp"
#include "genet/tensor.hpp"

namespace genet::testing {

inline Tensor rand_tensor(std::vector<int64_t> shape, Rng& rng, double lo = -2.0,
                          double hi = 2.0) {
  Tensor t = Tensor::zeros(std::move(shape));
  double* p = t.mutable_data();
  for (int64_t i = 0; i < t.numel(); ++i) p[i] = rng.uniform(lo, hi);
  return t;
}

inline double rel_err(double analytic, double numeric) {
  return std::abs(analytic - numeric) /
         std::max({1.0, std::abs(analytic), std::abs(numeric)});
}

// Max relative error between tape gradients and central differences for
// loss = sum(w .* f(inputs)), over all input coordinates.
inline double fd_max_rel_err(
    const std::function<Tensor(const std::vector<Tensor>&, Tape*)>& f,
    std::vector<Tensor> inputs, uint64_t seed, double step = 1e-5) {
  std::vector<double> theta;
  for (const Tensor& t : inputs)
    theta.insert(theta.end(), t.data(), t.data() + t.numel());
  auto unflatten = [&](const std::vector<double>& v) {
    std::vector<Tensor> out;
    size_t off = 0;
    for (const Tensor& t : inputs) {
      out.push_back(Tensor::from(
          t.shape(), std::vector<double>(v.begin() + static_cast<long>(off),
                                         v.begin() + static_cast<long>(off) +
                                             static_cast<long>(t.numel()))));
      off += static_cast<size_t>(t.numel());
    }
    return out;
  };

  Tensor probe = f(inputs, nullptr);
  Rng wrng(seed ^ 0xabcdef);
  Tensor w = rand_tensor(probe.shape(), wrng, -1.0, 1.0);

  auto loss_at = [&](const std::vector<double>& v) {
    const std::vector<Tensor> in = unflatten(v);
    const Tensor out = f(in, nullptr);
    double s = 0.0;
    for (int64_t i = 0; i < out.numel(); ++i) s += w.data()[i] * out.data()[i];
    return s;
  };

  Tape tape;
  std::vector<Tensor> tracked;
  for (const Tensor& t : inputs) tracked.push_back(tape.leaf(t, true));
  Tensor out = f(tracked, &tape);
  Tensor loss = sum_all(mul(out, w, &tape), &tape);
  tape.backward(loss);
  std::vector<double> analytic;
  for (const Tensor& t : tracked) {
    const Tensor g = tape.grad(t);
    analytic.insert(analytic.end(), g.data(), g.data() + g.numel());
  }

  const std::vector<double> numeric = oracle::finite_diff_grad(loss_at, theta, step);
  double worst = 0.0;
  for (size_t i = 0; i < theta.size(); ++i)
    worst = std::max(worst, rel_err(analytic[i], numeric[i]));
  return worst;
}

inline double max_abs_diff(const Tensor& a, const Tensor& b) {
  double worst = 0.0;
  for (int64_t i = 0; i < a.numel(); ++i)
    worst = std::max(worst, std::abs(a.data()[i] - b.data()[i]));
  return worst;
}

}  // namespace genet::testing
