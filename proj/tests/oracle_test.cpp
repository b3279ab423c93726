#include <gtest/gtest.h>

#include "genet/data.hpp"
#include "genet/oracle.hpp"

using namespace genet;

namespace {
Tensor onehot(int64_t n) {
  Tensor x = Tensor::zeros({n, n});
  for (int64_t i = 0; i < n; ++i) x.mutable_data()[i * n + i] = 1.0;
  return x;
}
}  // namespace

TEST(ExactKhop, HopZeroIsOwnFeature) {
  const CsrGraph g = make_synthetic(SyntheticKind::Chain, 4);
  const Tensor x = onehot(4);
  const auto v = oracle::exact_khop_aggregate(g, x, {}, 1, 0);
  EXPECT_DOUBLE_EQ(v[1], 1.0);
  EXPECT_DOUBLE_EQ(v[0] + v[2] + v[3], 0.0);
}

TEST(ExactKhop, ChainTwoHopsFromCenter) {
  const CsrGraph g = make_synthetic(SyntheticKind::Chain, 5);
  const Tensor x = onehot(5);
  std::vector<EdgeCoefficients> coefs(2, EdgeCoefficients::unit(g));
  const auto v = oracle::exact_khop_aggregate(g, x, coefs, 2, 2);
  EXPECT_DOUBLE_EQ(v[0], 1.0);
  EXPECT_DOUBLE_EQ(v[4], 1.0);
  EXPECT_DOUBLE_EQ(v[1] + v[2] + v[3], 0.0);
}

TEST(ExactKhop, StarCenterSumsLeaves) {
  const CsrGraph g = build_csr({{0, 1}, {0, 2}, {0, 3}}, 4, false);
  Tensor x = Tensor::zeros({4, 1});
  for (int i = 0; i < 4; ++i) x.mutable_data()[i] = static_cast<double>(i);
  std::vector<EdgeCoefficients> coefs(1, EdgeCoefficients::unit(g));
  const auto v = oracle::exact_khop_aggregate(g, x, coefs, 0, 1);
  EXPECT_DOUBLE_EQ(v[0], 6.0);
}

TEST(ExactKhop, RoundIndexedPathProduct) {
  // chain 0-1-2 with distinct per-round coefficients: the edge incident to
  // the destination carries round 1, the edge at the source carries round 2
  const CsrGraph g = make_synthetic(SyntheticKind::Chain, 3);
  const Tensor x = onehot(3);
  EdgeCoefficients r1 = EdgeCoefficients::unit(g);
  EdgeCoefficients r2 = EdgeCoefficients::unit(g);
  const EdgeId e01 = oracle::find_slot(g, 0, 1);
  const EdgeId e12 = oracle::find_slot(g, 1, 2);
  r1.edge[static_cast<size_t>(e12)] = 0.5;  // far edge, round 1
  r2.edge[static_cast<size_t>(e01)] = 0.25; // near edge, round 2
  const auto v = oracle::exact_khop_aggregate(g, x, {r1, r2}, 0, 2);
  EXPECT_DOUBLE_EQ(v[2], 0.125);
}

TEST(ExactKhop, CyclicGraphRejected) {
  const CsrGraph g = make_synthetic(SyntheticKind::Cycle, 4);
  EXPECT_THROW(
      oracle::exact_khop_aggregate(g, onehot(4), {EdgeCoefficients::unit(g)}, 0, 1),
      ContractError);
}

TEST(Walks, SelfLoopNodeEnumerates) {
  const CsrGraph g = build_csr({}, 1, true);
  const auto w = oracle::enumerate_walks(g, 0, 2);
  EXPECT_EQ(w.by_length[0].size(), 1u);  // [0]
  EXPECT_EQ(w.by_length[1].size(), 1u);  // [0,0]
  EXPECT_EQ(w.by_length[2].size(), 1u);  // [0,0,0]
}

TEST(Walks, BacktrackingWalkExists) {
  const CsrGraph g = build_csr({{0, 1}}, 2, false);
  const auto w = oracle::enumerate_walks(g, 0, 2);
  ASSERT_EQ(w.by_length[2].size(), 1u);
  EXPECT_EQ(w.by_length[2][0], (std::vector<NodeId>{0, 1, 0}));
}

TEST(Walks, ChainOfThreeLengthTwo) {
  const CsrGraph g = make_synthetic(SyntheticKind::Chain, 3);
  const auto w = oracle::enumerate_walks(g, 0, 2);
  ASSERT_EQ(w.by_length[2].size(), 2u);
  EXPECT_EQ(w.by_length[2][0], (std::vector<NodeId>{0, 1, 0}));
  EXPECT_EQ(w.by_length[2][1], (std::vector<NodeId>{0, 1, 2}));
}

TEST(Walks, GuardLimitsEnforced) {
  const CsrGraph small = make_synthetic(SyntheticKind::Chain, 3);
  EXPECT_THROW(oracle::enumerate_walks(small, 0, 9), SizeError);
  const CsrGraph big = make_synthetic(SyntheticKind::Chain, 65);
  EXPECT_THROW(oracle::enumerate_walks(big, 0, 2), SizeError);
}

TEST(FiniteDiff, QuadraticGivesIdentity) {
  auto f = [](const std::vector<double>& t) {
    double s = 0.0;
    for (double v : t) s += 0.5 * v * v;
    return s;
  };
  const std::vector<double> theta{0.3, -1.7, 2.5};
  const auto g = oracle::finite_diff_grad(f, theta, 1e-5);
  for (size_t i = 0; i < theta.size(); ++i)
    EXPECT_NEAR(g[i], theta[i], 1e-9);
}

TEST(FiniteDiff, ConstantGivesZero) {
  auto f = [](const std::vector<double>&) { return 42.0; };
  const auto g = oracle::finite_diff_grad(f, {1.0, 2.0}, 1e-5);
  EXPECT_DOUBLE_EQ(g[0], 0.0);
  EXPECT_DOUBLE_EQ(g[1], 0.0);
}

TEST(FiniteDiff, NonFiniteEvaluationRejected) {
  auto f = [](const std::vector<double>& t) { return std::log(t[0]); };
  EXPECT_THROW(oracle::finite_diff_grad(f, {-0.5}, 1e-5), NumericError);
}
