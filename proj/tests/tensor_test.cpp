#include <gtest/gtest.h>

#include "genet/ops.hpp"
#include "test_util.hpp"

using namespace genet;
using genet::testing::fd_max_rel_err;
using genet::testing::rand_tensor;

TEST(Tensor, ShapeNumelInvariant) {
  const Tensor t = Tensor::from({2, 3}, {1, 2, 3, 4, 5, 6});
  EXPECT_EQ(t.numel(), 6);
  EXPECT_EQ(t.rows(), 2);
  EXPECT_EQ(t.cols(), 3);
  EXPECT_THROW(Tensor::from({2, 2}, {1.0}), ShapeError);
}

TEST(Matmul, IdentityPassthrough) {
  const Tensor id = Tensor::from({2, 2}, {1, 0, 0, 1});
  const Tensor b = Tensor::from({2, 2}, {2, 3, 4, 5});
  const Tensor out = matmul(id, b);
  EXPECT_EQ(genet::testing::max_abs_diff(out, b), 0.0);
}

TEST(Matmul, InnerProduct) {
  const Tensor a = Tensor::from({1, 2}, {1, 2});
  const Tensor b = Tensor::from({2, 1}, {3, 4});
  EXPECT_DOUBLE_EQ(matmul(a, b).at(0), 11.0);
}

TEST(Matmul, ShapeMismatchNamesBothShapes) {
  const Tensor a = Tensor::zeros({2, 3});
  const Tensor b = Tensor::zeros({2, 3});
  try {
    matmul(a, b);
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("[2x3]"), std::string::npos) << msg;
  }
}

TEST(Matmul, GradientMatchesFiniteDifferences) {
  Rng rng(2024);
  const Tensor a = rand_tensor({5, 4}, rng);
  const Tensor b = rand_tensor({4, 3}, rng);
  const double err = fd_max_rel_err(
      [](const std::vector<Tensor>& in, Tape* t) {
        return matmul(in[0], in[1], t);
      },
      {a, b}, 7);
  EXPECT_LT(err, 1e-6);
}

TEST(RowSoftmax, UniformOnEqualScores) {
  const Tensor out = row_softmax(Tensor::from({1, 3}, {0, 0, 0}));
  for (int j = 0; j < 3; ++j) EXPECT_NEAR(out.at(0, j), 1.0 / 3.0, 1e-15);
}

TEST(RowSoftmax, TwoLogitValues) {
  const Tensor out = row_softmax(Tensor::from({1, 2}, {1, 0}));
  EXPECT_NEAR(out.at(0, 0), 0.7310585786300049, 1e-15);
  EXPECT_NEAR(out.at(0, 1), 0.2689414213699951, 1e-15);
}

TEST(RowSoftmax, LargeLogitsDoNotOverflow) {
  const Tensor out = row_softmax(Tensor::from({1, 2}, {1000, 0}));
  EXPECT_TRUE(out.all_finite());
  EXPECT_NEAR(out.at(0, 0), 1.0, 1e-12);
  EXPECT_LT(out.at(0, 1), 1e-12);
}

TEST(RowSoftmax, RowsSumToOne) {
  Rng rng(5);
  const Tensor x = rand_tensor({17, 9}, rng, -30.0, 30.0);
  const Tensor out = row_softmax(x);
  for (int64_t i = 0; i < 17; ++i) {
    double s = 0.0;
    for (int64_t j = 0; j < 9; ++j) s += out.at(i, j);
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
}

TEST(RowSoftmax, EmptyRowsPassThrough) {
  const Tensor out = row_softmax(Tensor::zeros({3, 0}));
  EXPECT_EQ(out.rows(), 3);
  EXPECT_EQ(out.cols(), 0);
}

TEST(RowSoftmax, GradientMatchesFiniteDifferences) {
  Rng rng(11);
  const Tensor x = rand_tensor({4, 5}, rng);
  const double err = fd_max_rel_err(
      [](const std::vector<Tensor>& in, Tape* t) {
        return row_softmax(in[0], t);
      },
      {x}, 13);
  EXPECT_LT(err, 1e-4);
}

TEST(LeakyRelu, PointValues) {
  EXPECT_DOUBLE_EQ(leaky_relu(Tensor::scalar(5.0), 0.2).at(0), 5.0);
  EXPECT_DOUBLE_EQ(leaky_relu(Tensor::scalar(-5.0), 0.2).at(0), -1.0);
  EXPECT_DOUBLE_EQ(leaky_relu(Tensor::scalar(0.0), 0.2).at(0), 0.0);
}

TEST(LeakyRelu, SubgradientAtZeroIsSlope) {
  Tape tape;
  const Tensor x = tape.leaf(Tensor::scalar(0.0));
  const Tensor y = leaky_relu(x, 0.2, &tape);
  tape.backward(y);
  EXPECT_DOUBLE_EQ(tape.grad(x).at(0), 0.2);
}

TEST(LeakyRelu, GradientAwayFromKink) {
  Rng rng(17);
  Tensor x = rand_tensor({6, 6}, rng);
  // keep clear of the kink so central differences stay valid
  double* p = x.mutable_data();
  for (int64_t i = 0; i < x.numel(); ++i)
    if (std::abs(p[i]) < 1e-3) p[i] = 0.5;
  const double err = fd_max_rel_err(
      [](const std::vector<Tensor>& in, Tape* t) {
        return leaky_relu(in[0], 0.2, t);
      },
      {x}, 19);
  EXPECT_LT(err, 1e-6);
}

TEST(Elementwise, GradientsMatchFiniteDifferences) {
  Rng rng(23);
  const Tensor a = rand_tensor({3, 4}, rng);
  const Tensor b = rand_tensor({3, 4}, rng);
  for (auto kind : {0, 1, 2}) {
    const double err = fd_max_rel_err(
        [kind](const std::vector<Tensor>& in, Tape* t) {
          if (kind == 0) return add(in[0], in[1], t);
          if (kind == 1) return sub(in[0], in[1], t);
          return mul(in[0], in[1], t);
        },
        {a, b}, 29 + static_cast<uint64_t>(kind));
    EXPECT_LT(err, 1e-6) << "kind " << kind;
  }
}

TEST(RowscaleSliceConcat, GradientsMatchFiniteDifferences) {
  Rng rng(31);
  const Tensor x = rand_tensor({4, 6}, rng);
  const Tensor s = rand_tensor({4, 1}, rng);
  EXPECT_LT(fd_max_rel_err(
                [](const std::vector<Tensor>& in, Tape* t) {
                  return mul_rowscale(in[0], in[1], t);
                },
                {x, s}, 37),
            1e-6);
  EXPECT_LT(fd_max_rel_err(
                [](const std::vector<Tensor>& in, Tape* t) {
                  return concat_cols(
                      {slice_cols(in[0], 0, 2, t), slice_cols(in[0], 2, 6, t)},
                      t);
                },
                {x}, 41),
            1e-6);
  EXPECT_LT(fd_max_rel_err(
                [](const std::vector<Tensor>& in, Tape* t) {
                  return slice_rows(in[0], 1, 3, t);
                },
                {x}, 43),
            1e-6);
}

TEST(Backward, SumYieldsOnes) {
  Tape tape;
  const Tensor x = tape.leaf(Tensor::from({2, 3}, {1, 2, 3, 4, 5, 6}));
  tape.backward(sum_all(x, &tape));
  const Tensor g = tape.grad(x);
  for (int64_t i = 0; i < 6; ++i) EXPECT_DOUBLE_EQ(g.at(i), 1.0);
}

TEST(Backward, HalfSquareYieldsIdentity) {
  Rng rng(47);
  Tape tape;
  const Tensor x0 = rand_tensor({3, 3}, rng);
  const Tensor x = tape.leaf(x0);
  const Tensor loss = scale(sum_all(mul(x, x, &tape), &tape), 0.5, &tape);
  tape.backward(loss);
  EXPECT_LT(genet::testing::max_abs_diff(tape.grad(x), x0), 1e-15);
}

TEST(Backward, NonScalarLossRejected) {
  Tape tape;
  const Tensor x = tape.leaf(Tensor::zeros({2, 2}));
  EXPECT_THROW(tape.backward(x), ContractError);
}

TEST(Backward, UntouchedTensorGetsZeros) {
  Tape tape;
  const Tensor used = tape.leaf(Tensor::from({1, 2}, {1, 2}));
  const Tensor unused = tape.leaf(Tensor::from({2, 2}, {1, 2, 3, 4}));
  tape.backward(sum_all(used, &tape));
  const Tensor g = tape.grad(unused);
  for (int64_t i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(g.at(i), 0.0);
}

TEST(Backward, FanOutAccumulates) {
  Tape tape;
  const Tensor x = tape.leaf(Tensor::scalar(3.0));
  // loss = x*x + x -> d/dx = 2x + 1 = 7
  const Tensor loss = sum_all(add(mul(x, x, &tape), x, &tape), &tape);
  tape.backward(loss);
  EXPECT_DOUBLE_EQ(tape.grad(x).at(0), 7.0);
}

TEST(Forward, DeterministicGivenSameInputs) {
  Rng rng(53);
  const Tensor a = rand_tensor({7, 5}, rng);
  const Tensor b = rand_tensor({5, 6}, rng);
  const Tensor c1 = matmul(a, b);
  const Tensor c2 = matmul(a, b);
  EXPECT_EQ(genet::testing::max_abs_diff(c1, c2), 0.0);
}

TEST(Dropout, IdentityWhenDisabled) {
  Rng rng(59);
  const Tensor x = rand_tensor({4, 4}, rng);
  Rng drng(1);
  const Tensor same = dropout(x, 0.0, drng, true);
  EXPECT_EQ(genet::testing::max_abs_diff(same, x), 0.0);
  const Tensor eval_mode = dropout(x, 0.5, drng, false);
  EXPECT_EQ(genet::testing::max_abs_diff(eval_mode, x), 0.0);
}

TEST(MemoryStats, TracksPayloadBytes) {
  const int64_t before = MemoryStats::current().load();
  {
    const Tensor t = Tensor::zeros({100, 10});
    EXPECT_EQ(MemoryStats::current().load(), before + 8000);
  }
  EXPECT_EQ(MemoryStats::current().load(), before);
}
