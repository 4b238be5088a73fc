#include "ganad/kernels.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace ganad;

namespace {

std::vector<MatrixXd> sequences(std::size_t n, Index steps, Index dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<MatrixXd> out(n, MatrixXd(steps, dim));
  for (auto& m : out)
    for (Index i = 0; i < m.size(); ++i) m.data()[i] = z(rng);
  return out;
}

double square_loss(std::span<const MatrixXd> out, std::vector<MatrixXd>& g) {
  double total = 0.0;
  g.clear();
  for (const auto& o : out) {
    total += 0.5 * o.squaredNorm();
    g.push_back(o);
  }
  return total;
}

StackedLstm net(std::uint64_t seed) {
  StackedLstm n(3, {7, 5}, 2, Activation::tanh);
  n.initialize(seed, 0.3);
  return n;
}

}  // namespace

// Batch sizes straddle the chunk size so partial chunks are exercised.
TEST(Kernels, ForwardAgreesAcrossBackends) {
  const StackedLstm n = net(1);
  for (std::size_t count : {1u, 15u, 16u, 17u, 40u}) {
    const auto x = sequences(count, 9, 3, count);
    const auto a = kernels::serial::forward(n, x);
    const auto b = kernels::omp::forward(n, x);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_LT((a[i] - b[i]).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Kernels, GradientAgreesAcrossBackends) {
  const StackedLstm n = net(2);
  for (std::size_t count : {3u, 16u, 33u}) {
    const auto x = sequences(count, 6, 3, 50 + count);
    const auto a = kernels::serial::gradient(n, x, square_loss, true, true);
    const auto b = kernels::omp::gradient(n, x, square_loss, true, true);
    EXPECT_NEAR(a.loss, b.loss, 1e-10);
    EXPECT_LT((a.params - b.params).cwiseAbs().maxCoeff(), 1e-10);
    for (std::size_t i = 0; i < count; ++i) EXPECT_LT((a.inputs[i] - b.inputs[i]).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Kernels, ParallelResultDoesNotDependOnThreadCount) {
  const StackedLstm n = net(3);
  const auto x = sequences(50, 8, 3, 9);
  std::vector<VectorXd> flat;
  for (const auto& m : x) flat.push_back(Eigen::Map<const VectorXd>(m.data(), m.size()));

  const int before = kernels::workers();
  kernels::set_workers(1);
  const auto g1 = kernels::omp::gradient(n, x, square_loss, true, false);
  const double r1 = kernels::omp::rbf_sum(flat, flat, 1.5, true);
  kernels::set_workers(4);
  EXPECT_EQ(kernels::workers(), 4);
  const auto g4 = kernels::omp::gradient(n, x, square_loss, true, false);
  const double r4 = kernels::omp::rbf_sum(flat, flat, 1.5, true);
  kernels::set_workers(before);

  EXPECT_EQ(g1.params, g4.params);
  EXPECT_EQ(g1.loss, g4.loss);
  EXPECT_EQ(r1, r4);
}

TEST(Kernels, RbfSumAndDistancesAgreeAcrossBackends) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<VectorXd> a(37, VectorXd(5)), b(21, VectorXd(5));
  for (auto& v : a)
    for (Index i = 0; i < 5; ++i) v(i) = z(rng);
  for (auto& v : b)
    for (Index i = 0; i < 5; ++i) v(i) = z(rng);
  EXPECT_NEAR(kernels::serial::rbf_sum(a, b, 0.9, false), kernels::omp::rbf_sum(a, b, 0.9, false), 1e-10);
  EXPECT_NEAR(kernels::serial::rbf_sum(a, a, 0.9, true), kernels::omp::rbf_sum(a, a, 0.9, true), 1e-10);

  double direct = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a.size(); ++j)
      if (i != j) direct += std::exp(-(a[i] - a[j]).squaredNorm() / (2.0 * 0.81));
  EXPECT_NEAR(kernels::serial::rbf_sum(a, a, 0.9, true), direct, 1e-10);

  const auto ds = kernels::serial::pairwise_distances(a);
  const auto dp = kernels::omp::pairwise_distances(a);
  ASSERT_EQ(ds.size(), a.size() * (a.size() - 1) / 2);
  ASSERT_EQ(ds.size(), dp.size());
  for (std::size_t i = 0; i < ds.size(); ++i) EXPECT_NEAR(ds[i], dp[i], 1e-12);
  EXPECT_NEAR(ds[0], (a[0] - a[1]).norm(), 1e-12);
}
