#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "tanet/error.hpp"
#include "tanet/losses.hpp"

using namespace tanet;

namespace {

PrototypeSet protos(Matrix v) {
  PrototypeSet s;
  s.vectors = std::move(v);
  for (std::size_t i = 0; i < s.vectors.rows(); ++i) s.ids.push_back(static_cast<int>(i));
  return s;
}

Matrix rotate(const Matrix& x, const Matrix& q) { return matmul(x, q); }

// Random orthogonal matrix by Gram-Schmidt.
Matrix random_orthogonal(std::mt19937_64& rng, std::size_t d) {
  Matrix q = oracle::random_matrix(rng, d, d);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      const double p = dot(q.row(i), q.row(j));
      axpy(-p, q.row(j), q.row(i));
    }
    const double n = norm(q.row(i));
    for (double& v : q.row(i)) v /= n;
  }
  return q;
}

}  // namespace

TEST(LossP2I, ZeroAtPrototypes) {
  const auto pl = protos(Matrix::from_rows({{1, 2}, {3, 4}}));
  MatchMap mm;
  mm.pairs = {{0, 1}, {1, 0}};
  const Matrix z = Matrix::from_rows({{3, 4}, {1, 2}, {1, 2}});
  const auto l = loss_p2i(z, std::vector<int>{0, 1, 1}, pl, mm);
  EXPECT_EQ(l.value, 0.0);
  EXPECT_EQ(l.count, 3u);
  for (double v : l.grad.values()) EXPECT_EQ(v, 0.0);
}

TEST(LossP2I, SingleInstanceAtDistanceThree) {
  const auto pl = protos(Matrix::from_rows({{0, 0}}));
  MatchMap mm;
  mm.pairs = {{0, 0}};
  const auto l = loss_p2i(Matrix::from_rows({{3, 0}}), std::vector<int>{0}, pl, mm);
  EXPECT_DOUBLE_EQ(l.value, 3.0);
  EXPECT_EQ(l.count, 1u);
}

TEST(LossP2I, UnmatchedClustersAreIgnoredAndEmptyIsZero) {
  const auto pl = protos(Matrix::from_rows({{0, 0}}));
  MatchMap mm;
  mm.pairs = {{0, 0}};
  const auto l = loss_p2i(Matrix::from_rows({{3, 0}, {100, 100}}), std::vector<int>{0, 1}, pl, mm);
  EXPECT_DOUBLE_EQ(l.value, 3.0);
  EXPECT_EQ(l.grad(1, 0), 0.0);
  const auto e = loss_p2i(Matrix::from_rows({{3, 0}}), std::vector<int>{1}, pl, mm);
  EXPECT_TRUE(e.empty());
  EXPECT_EQ(e.value, 0.0);
}

TEST(LossP2I, MatchesNaiveRecomputation) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix z = oracle::random_matrix(rng, 30, 4);
    const auto pl = protos(oracle::random_matrix(rng, 3, 4));
    std::vector<int> a(30);
    for (int& v : a) v = static_cast<int>(rng() % 5);
    MatchMap mm;
    mm.pairs = {{0, 4}, {1, 0}, {2, 2}};
    double total = 0.0;
    std::size_t n = 0;
    for (std::size_t j = 0; j < 30; ++j)
      for (const auto& [l, c] : mm.pairs)
        if (a[j] == c) {
          total += oracle::naive_distance(z, j, pl.vectors, static_cast<std::size_t>(l));
          ++n;
        }
    const auto got = loss_p2i(z, a, pl, mm);
    EXPECT_EQ(got.count, n);
    EXPECT_NEAR(got.value, n ? total / double(n) : 0.0, 1e-12);
  }
}

TEST(LossI2P, ZeroAtPrototypesAndMeanOfDistances) {
  const auto pc = protos(Matrix::from_rows({{0, 0}, {10, 10}}));
  EXPECT_EQ(loss_i2p(Matrix::from_rows({{0, 0}, {10, 10}}), std::vector<int>{0, 1}, pc).value, 0.0);
  EXPECT_DOUBLE_EQ(loss_i2p(Matrix::from_rows({{1, 0}, {10, 13}}), std::vector<int>{0, 1}, pc).value, 2.0);
}

TEST(LossI2P, IsPositiveAndMatchesNaive) {
  std::mt19937_64 rng(6);
  const Matrix z = oracle::random_matrix(rng, 25, 3);
  const auto pc = protos(oracle::random_matrix(rng, 4, 3));
  std::vector<int> a(25);
  for (int& v : a) v = static_cast<int>(rng() % 4);
  double total = 0.0;
  for (std::size_t j = 0; j < 25; ++j) total += oracle::naive_distance(z, j, pc.vectors, static_cast<std::size_t>(a[j]));
  const auto l = loss_i2p(z, a, pc);
  EXPECT_GT(l.value, 0.0);
  EXPECT_NEAR(l.value, total / 25.0, 1e-12);
}

TEST(LossI2P, TranslationInvariantWithP2I) {
  std::mt19937_64 rng(7);
  Matrix z = oracle::random_matrix(rng, 20, 3);
  auto pc = protos(oracle::random_matrix(rng, 3, 3));
  std::vector<int> a(20);
  for (int& v : a) v = static_cast<int>(rng() % 3);
  MatchMap mm;
  mm.pairs = {{0, 1}, {1, 2}};
  auto pl = protos(oracle::random_matrix(rng, 2, 3));
  const double i2p = loss_i2p(z, a, pc).value, p2i = loss_p2i(z, a, pl, mm).value;
  const Vector t = {5, -3, 8};
  for (std::size_t i = 0; i < z.rows(); ++i) axpy(1.0, t, z.row(i));
  for (std::size_t i = 0; i < 3; ++i) axpy(1.0, t, pc.vectors.row(i));
  for (std::size_t i = 0; i < 2; ++i) axpy(1.0, t, pl.vectors.row(i));
  EXPECT_NEAR(loss_i2p(z, a, pc).value, i2p, 1e-12);
  EXPECT_NEAR(loss_p2i(z, a, pl, mm).value, p2i, 1e-12);
}

TEST(LossI2P, ZeroDistanceHasZeroSubgradient) {
  const auto pc = protos(Matrix::from_rows({{1, 1}}));
  const auto l = loss_i2p(Matrix::from_rows({{1, 1}}), std::vector<int>{0}, pc);
  EXPECT_EQ(l.grad(0, 0), 0.0);
  EXPECT_EQ(l.grad(0, 1), 0.0);
}

TEST(LossI2I, IdenticalViewsGiveLogThree) {
  const Matrix v = Matrix::from_rows({{1, 0}, {1, 0}});
  EXPECT_NEAR(loss_i2i(v, v, 0.07).value, std::log(3.0), 1e-12);
}

TEST(LossI2I, SharpPositivesWithOrthogonalNegativesApproachZero) {
  const Matrix a = Matrix::from_rows({{1, 0}, {0, 1}});
  EXPECT_LT(loss_i2i(a, a, 0.01).value, 1e-40);
}

TEST(LossI2I, MatchesNaivePairwise) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t b = 2 + rng() % 8;
    const auto a = normalize_rows(oracle::random_matrix(rng, b, 5)).rows;
    const auto c = normalize_rows(oracle::random_matrix(rng, b, 5)).rows;
    const auto l = loss_i2i(a, c, 0.07);
    EXPECT_NEAR(l.value, oracle::naive_info_nce(a, c, 0.07), 1e-10);
    EXPECT_GE(l.value, 0.0);
  }
}

TEST(LossI2I, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(9);
  const auto a = normalize_rows(oracle::random_matrix(rng, 4, 3)).rows;
  const auto b = normalize_rows(oracle::random_matrix(rng, 4, 3)).rows;
  const auto l = loss_i2i(a, b, 0.5);
  std::vector<double> ana, fd;
  for (int side = 0; side < 2; ++side) {
    Matrix x = side ? b : a;
    const Matrix& g = side ? l.grad_b : l.grad_a;
    for (std::size_t i = 0; i < x.values().size(); ++i) {
      const double s = x.values()[i];
      x.values()[i] = s + 1e-6;
      const double up = side ? loss_i2i(a, x, 0.5).value : loss_i2i(x, b, 0.5).value;
      x.values()[i] = s - 1e-6;
      const double down = side ? loss_i2i(a, x, 0.5).value : loss_i2i(x, b, 0.5).value;
      x.values()[i] = s;
      fd.push_back((up - down) / 2e-6);
      ana.push_back(g.values()[i]);
    }
  }
  EXPECT_LT(oracle::relative_error(ana, fd), 1e-6);
}

TEST(LossI2I, RotationInvariant) {
  std::mt19937_64 rng(10);
  const auto a = normalize_rows(oracle::random_matrix(rng, 6, 4)).rows;
  const auto b = normalize_rows(oracle::random_matrix(rng, 6, 4)).rows;
  const Matrix q = random_orthogonal(rng, 4);
  EXPECT_NEAR(loss_i2i(rotate(a, q), rotate(b, q), 0.07).value, loss_i2i(a, b, 0.07).value, 1e-9);
}

TEST(LossI2I, NeedsTwoPairs) {
  const Matrix v = Matrix::from_rows({{1, 0}});
  EXPECT_THROW(loss_i2i(v, v, 0.07), Error);
}

TEST(LossCE, UniformLogitsGiveLogK) {
  EXPECT_NEAR(loss_ce(Matrix(3, 4, 0.7), std::vector<int>{0, 3, 2}).value, std::log(4.0), 1e-12);
}

TEST(LossCE, LargeCorrectMarginNearZero) {
  EXPECT_LT(loss_ce(Matrix::from_rows({{50, 0, 0}}), std::vector<int>{0}).value, 1e-20);
}

TEST(LossCE, MatchesNaiveAndSoftmaxMinusOneHot) {
  std::mt19937_64 rng(11);
  const Matrix logits = oracle::random_matrix(rng, 7, 5, 3.0);
  std::vector<int> t(7);
  for (int& v : t) v = static_cast<int>(rng() % 5);
  const auto l = loss_ce(logits, t);
  EXPECT_NEAR(l.value, oracle::naive_cross_entropy(logits, t), 1e-12);
  for (std::size_t i = 0; i < 7; ++i) {
    double z = 0.0;
    for (std::size_t c = 0; c < 5; ++c) z += std::exp(logits(i, c));
    for (std::size_t c = 0; c < 5; ++c) {
      const double p = std::exp(logits(i, c)) / z - (static_cast<int>(c) == t[i] ? 1.0 : 0.0);
      EXPECT_NEAR(l.grad(i, c), p / 7.0, 1e-12);
    }
  }
}

TEST(LossCE, RejectsEmptyBatchAndBadTarget) {
  EXPECT_THROW(loss_ce(Matrix(0, 3), std::vector<int>{}), Error);
  EXPECT_THROW(loss_ce(Matrix(1, 3), std::vector<int>{3}), Error);
}

TEST(Normalize, RowsHaveUnitNormAndZeroRowThrows) {
  std::mt19937_64 rng(1);
  const auto n = normalize_rows(oracle::random_matrix(rng, 5, 3));
  for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(norm(n.rows.row(i)), 1.0, 1e-14);
  const auto z = normalize_rows(Matrix(1, 3));
  for (double v : z.rows.values()) EXPECT_EQ(v, 0.0);
}

TEST(TotalLoss, Arithmetic) {
  LossBreakdown zero;
  EXPECT_EQ(total_loss(zero, 100.0).total, 0.0);
  LossBreakdown ones;
  ones.l_p2i = ones.l_i2p = ones.l_i2i = ones.l_u = ones.l_ce = 1.0;
  EXPECT_DOUBLE_EQ(total_loss(ones, 100.0).total, 104.0);
  EXPECT_EQ(total_loss(ones, 100.0).beta, 100.0);
  LossTerms no_ce;
  no_ce.ce = false;
  EXPECT_DOUBLE_EQ(total_loss(ones, 100.0, no_ce).total, 4.0);
}

TEST(TotalLoss, DefaultsMatchImplementationDetails) {
  const LossBreakdown b;
  EXPECT_EQ(b.beta, 100.0);
  EXPECT_EQ(b.tau, 0.07);
}

TEST(GradientsThroughEncoder, AllLossesMatchFiniteDifferences) {
  for (auto which : {oracle::GradLoss::kP2I, oracle::GradLoss::kI2P, oracle::GradLoss::kI2I, oracle::GradLoss::kCE})
    for (std::uint64_t seed = 0; seed < 5; ++seed)
      EXPECT_LE(oracle::gradient_case(which, seed), 1e-4) << static_cast<int>(which) << " seed " << seed;
}
