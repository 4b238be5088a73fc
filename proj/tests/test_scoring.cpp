#include "ganad/scoring.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>

using namespace ganad;

namespace {

VectorXd vec(std::initializer_list<double> v) {
  VectorXd out(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

}  // namespace

TEST(AnomalyScore, WorkedExample) {
  const auto s = anomaly_score(vec({0, 2}), vec({0.9, 0.1}), 0.5);
  EXPECT_NEAR(s.combined(0), 0.05, 1e-15);
  EXPECT_NEAR(s.combined(1), 0.95, 1e-15);
  EXPECT_NEAR(s.realness()(1), 0.05, 1e-15);
  EXPECT_EQ(s.normalized_residual, vec({0, 1}));
}

TEST(AnomalyScore, LambdaEndpointsReduceToTheirSignals) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  VectorXd res(30), disc(30);
  for (Index i = 0; i < 30; ++i) res(i) = 5.0 * u(rng), disc(i) = u(rng);
  const auto one = anomaly_score(res, disc, 1.0);
  const auto zero = anomaly_score(res, disc, 0.0);
  EXPECT_EQ(one.combined, one.normalized_residual);
  EXPECT_LT((zero.combined - (1.0 - disc.array()).matrix()).cwiseAbs().maxCoeff(), 1e-15);
  for (double lambda : {0.0, 0.3, 0.5, 1.0}) {
    const auto s = anomaly_score(res, disc, lambda);
    EXPECT_GE(s.combined.minCoeff(), 0.0);
    EXPECT_LE(s.combined.maxCoeff(), 1.0);
  }
}

TEST(AnomalyScore, ExternalScaleClampsAndFlatResidualsNormalizeToZero) {
  const ResidualScale scale{1.0, 3.0};
  const VectorXd n = normalize_residuals(vec({0, 1, 2, 3, 9}), scale);
  EXPECT_EQ(n, vec({0, 0, 0.5, 1, 1}));
  EXPECT_TRUE(normalize_residuals(vec({2, 2, 2}), fit_residual_scale(vec({2, 2, 2}))).isZero());
  const ResidualScale fitted = fit_residual_scale(vec({4, 1, 7}));
  EXPECT_EQ(fitted.min, 1.0);
  EXPECT_EQ(fitted.max, 7.0);
}

TEST(AnomalyScore, RejectsBadInputs) {
  EXPECT_THROW(anomaly_score(vec({1}), vec({0.5}), 1.5), std::invalid_argument);
  EXPECT_THROW(anomaly_score(vec({1, 2}), vec({0.5}), 0.5), std::invalid_argument);
  EXPECT_THROW(anomaly_score(vec({-1}), vec({0.5}), 0.5), std::invalid_argument);
  EXPECT_THROW(anomaly_score(vec({1}), vec({1.5}), 0.5), std::invalid_argument);
}

TEST(AssignLabels, WorkedExamples) {
  const std::vector<double> s{0.9, 0.2};
  EXPECT_EQ(assign_labels(s, 0.5), (std::vector<int>{0, 1}));
  EXPECT_EQ(assign_labels(s, 0.0), (std::vector<int>{1, 1}));
  const std::vector<double> confident{1.0 - kLabelEpsilon, 1.0};
  EXPECT_EQ(assign_labels(confident, 2.0 * kLabelEpsilon), (std::vector<int>{0, 0}));
  const std::vector<double> zero{0.0};
  EXPECT_EQ(assign_labels(zero, 10.0), (std::vector<int>{1}));
}

TEST(AssignLabels, MonotoneInTau) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> s(200);
  for (auto& x : s) x = u(rng);
  std::vector<int> prev = assign_labels(s, 0.0);
  for (double tau = 0.05; tau < 5.0; tau += 0.05) {
    const auto cur = assign_labels(s, tau);
    for (std::size_t i = 0; i < s.size(); ++i) EXPECT_LE(cur[i], prev[i]);
    prev = cur;
  }
}

TEST(AssignLabels, SeriesOverloadFlagsHighAnomalyScores) {
  const auto s = anomaly_score(vec({0, 2}), vec({0.9, 0.1}), 0.5);
  const auto labels = assign_labels(s, 0.5);
  EXPECT_EQ(labels, (std::vector<int>{0, 1}));
}

TEST(Threshold, TargetFprPicksKPlusFirstLargest) {
  std::vector<double> normal(100);
  for (std::size_t i = 0; i < 100; ++i) normal[i] = static_cast<double>(i + 1);
  EXPECT_EQ(threshold_for_target_fpr(normal, 0.05), 95.0);
  EXPECT_EQ(threshold_for_target_fpr(normal, 0.0), 100.0);
  EXPECT_EQ(threshold_for_target_fpr(normal, 0.049), 96.0);

  std::mt19937_64 rng(3);
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<double> random(1000);
  for (auto& x : random) x = z(rng);
  for (double fpr : {0.0, 0.01, 0.1, 0.37}) {
    const double v = threshold_for_target_fpr(random, fpr);
    long above = 0;
    for (double x : random) above += x > v;
    EXPECT_EQ(above, static_cast<long>(std::floor(fpr * 1000.0)));
  }

  const std::vector<double> ties(10, 0.3);
  const double v = threshold_for_target_fpr(ties, 0.2);
  long above = 0;
  for (double x : ties) above += x > v;
  EXPECT_EQ(above, 0);
  EXPECT_THROW(threshold_for_target_fpr(std::vector<double>{}, 0.1), std::invalid_argument);
  EXPECT_THROW(threshold_for_target_fpr(normal, 1.0), std::invalid_argument);
}

TEST(Threshold, TauReproducesScoreThreshold) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  VectorXd res(300), disc(300);
  for (Index i = 0; i < 300; ++i) res(i) = u(rng), disc(i) = u(rng);
  const auto s = anomaly_score(res, disc, 0.5);
  for (double v : {0.1, 0.35, 0.5, 0.8}) {
    const auto labels = assign_labels(s, tau_for_score_threshold(v));
    long mismatches = 0;
    for (Index t = 0; t < s.size(); ++t) mismatches += labels[static_cast<std::size_t>(t)] != (s.combined(t) > v ? 1 : 0);
    EXPECT_EQ(mismatches, 0) << "v " << v;
  }
}

TEST(Metrics, WorkedExample) {
  // TP=2, FP=1, TN=6, FN=1.
  const std::vector<int> pred{1, 1, 1, 0, 0, 0, 0, 0, 0, 0};
  const std::vector<int> truth{1, 1, 0, 1, 0, 0, 0, 0, 0, 0};
  const auto r = metrics(pred, truth);
  EXPECT_EQ(r.tp, 2);
  EXPECT_EQ(r.fp, 1);
  EXPECT_EQ(r.tn, 6);
  EXPECT_EQ(r.fn, 1);
  EXPECT_NEAR(r.accuracy, 0.8, 1e-15);
  EXPECT_NEAR(r.precision, 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(r.recall, 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(r.f1, 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(r.fpr, 1.0 / 7.0, 1e-15);
}

TEST(Metrics, PerfectAndAllPositivePredictors) {
  const std::vector<int> truth{0, 1, 1, 0, 0, 1};
  const auto perfect = metrics(truth, truth);
  EXPECT_EQ(perfect.accuracy, 1.0);
  EXPECT_EQ(perfect.fpr, 0.0);
  const auto all = metrics(std::vector<int>(6, 1), truth);
  EXPECT_EQ(all.recall, 1.0);
  EXPECT_EQ(all.fpr, 1.0);
}

TEST(Metrics, UndefinedRatiosAreZeroAndFlagged) {
  const auto r = metrics(std::vector<int>(4, 0), std::vector<int>(4, 0));
  EXPECT_FALSE(r.precision_defined);
  EXPECT_FALSE(r.recall_defined);
  EXPECT_FALSE(r.f1_defined);
  EXPECT_TRUE(r.fpr_defined);
  EXPECT_EQ(r.precision, 0.0);
  EXPECT_EQ(r.accuracy, 1.0);
  EXPECT_THROW(metrics(std::vector<int>{1}, std::vector<int>{1, 0}), std::invalid_argument);
}

TEST(Metrics, MatchesBruteForceCounts) {
  std::mt19937_64 rng(5);
  std::bernoulli_distribution b(0.3);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<int> p(97), t(97);
    for (std::size_t i = 0; i < 97; ++i) p[i] = b(rng), t[i] = b(rng);
    const auto r = metrics(p, t);
    const auto c = oracle::confusion(p, t);
    EXPECT_EQ(r.tp, c.tp);
    EXPECT_EQ(r.fp, c.fp);
    EXPECT_EQ(r.tn, c.tn);
    EXPECT_EQ(r.fn, c.fn);
    EXPECT_EQ(r.tp + r.fp + r.tn + r.fn, 97);
    if (c.tp + c.fp > 0 && c.tp + c.fn > 0 && c.tp > 0) {
      const double pre = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
      const double rec = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
      EXPECT_NEAR(r.f1, 2.0 * pre * rec / (pre + rec), 1e-12);
    }
  }
}

TEST(Attribution, IdentityLoadingsAndExplicitFormula) {
  PcaModel id;
  id.mean = VectorXd::Zero(3);
  id.loadings = MatrixXd::Identity(3, 3);
  id.eigenvalues = VectorXd::Ones(3);
  id.total_variance = 3.0;
  MatrixXd r(2, 3);
  r << 0.1, 0.2, 0.3, 1, 0, 2;
  EXPECT_EQ(attribute_to_variables(r, id), r);

  PcaModel m;
  m.mean = VectorXd::Zero(3);
  m.loadings.resize(2, 3);
  m.loadings << 0.6, -0.8, 0.0, 0.0, 0.0, 1.0;
  m.eigenvalues = VectorXd::Ones(2);
  MatrixXd pr(1, 2);
  pr << 2.0, 5.0;
  const MatrixXd w = attribute_to_variables(pr, m);
  EXPECT_NEAR(w(0, 0), 2.0, 1e-15);
  EXPECT_NEAR(w(0, 1), 2.0, 1e-15);
  EXPECT_NEAR(w(0, 2), 5.0, 1e-15);
  EXPECT_THROW(attribute_to_variables(MatrixXd::Zero(1, 3), m), std::invalid_argument);
}

TEST(Attribution, SingleVariableMatchesScalarLabels) {
  PcaModel m;
  m.mean = VectorXd::Zero(1);
  m.loadings = MatrixXd::Ones(1, 1);
  m.eigenvalues = VectorXd::Ones(1);
  MatrixXd r(4, 1);
  r << 0.1, 0.7, 0.4, 0.95;
  const auto per = per_variable_labels(attribute_to_variables(r, m), 0.5);
  std::vector<double> realness;
  for (Index t = 0; t < 4; ++t) realness.push_back(1.0 - r(t, 0));
  EXPECT_EQ(per.front(), assign_labels(realness, 0.5));
}

// Attack on the second of three variables with distinct scales: its column collects the
// most flags after projecting the deviation onto the components.
TEST(Attribution, AttackedVariableDominates) {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> z(0.0, 1.0);
  MatrixXd normal(400, 3);
  for (Index t = 0; t < 400; ++t)
    normal.row(t) << 1.0 * z(rng), 2.0 * z(rng), 3.0 * z(rng);
  const PcaModel m = fit_pca(normal, 3);
  MatrixXd clean(200, 3);
  for (Index t = 0; t < 200; ++t) clean.row(t) << 1.0 * z(rng), 2.0 * z(rng), 3.0 * z(rng);
  MatrixXd attacked = clean;
  for (Index t = 100; t < 200; ++t) attacked(t, 1) += 6.0;

  const MatrixXd pc_res = (project(m, attacked) - project(m, clean)).cwiseAbs();
  MatrixXd w = attribute_to_variables(pc_res, m);
  w /= w.maxCoeff();
  const auto labels = per_variable_labels(w, tau_for_score_threshold(0.5));
  std::vector<long> counts;
  for (const auto& l : labels) counts.push_back(std::count(l.begin(), l.end(), 1));
  EXPECT_GT(counts[1], counts[0]);
  EXPECT_GT(counts[1], counts[2]);
  EXPECT_THROW(per_variable_labels(w, std::vector<double>{0.1}), std::invalid_argument);
}
