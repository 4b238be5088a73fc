#pragma once

// Anomaly scores, thresholded labels and detection metrics.

#include "ganad/pca.hpp"

#include <optional>
#include <span>
#include <vector>

namespace ganad {

/// Bounds used to min-max normalize residuals.
struct ResidualScale {
  double min = 0.0;
  double max = 0.0;
};

ResidualScale fit_residual_scale(const VectorXd& residuals);

/// (r - min) / (max - min) clamped to [0, 1]; all zero when max == min.
VectorXd normalize_residuals(const VectorXd& residuals, const ResidualScale& scale);

/// Per-timestep anomaly score S_t = lambda * res_norm_t + (1 - lambda) * (1 - D(x_t)).
/// Larger means more anomalous.
struct AnomalyScoreSeries {
  VectorXd residual;             // raw Res_t
  VectorXd normalized_residual;  // in [0, 1]
  VectorXd discrimination;       // 1 - D(x_t)
  VectorXd combined;             // S_t in [0, 1]
  double lambda = 0.5;

  Index size() const { return combined.size(); }
  /// 1 - S_t: the probability-like "looks normal" value that the cross-entropy rule tests.
  VectorXd realness() const;
};

/// `disc` holds raw discriminator outputs D(x_t) in [0, 1]. Without `scale` the residuals
/// are normalized over `res` itself.
AnomalyScoreSeries anomaly_score(const VectorXd& res, const VectorXd& disc, double lambda,
                                 std::optional<ResidualScale> scale = std::nullopt);

inline constexpr double kLabelEpsilon = 1e-7;

/// A_t = 1 iff -log(s_t) > tau, with s_t clamped into (eps, 1 - eps).
std::vector<int> assign_labels(std::span<const double> scores, double tau);
/// Applies the rule to `scores.realness()`, so high anomaly scores are flagged.
std::vector<int> assign_labels(const AnomalyScoreSeries& scores, double tau);

/// Threshold v such that at most floor(target_fpr * N) of `normal_scores` exceed it: the
/// (k+1)-th largest value. Flags use the strict rule score > v.
double threshold_for_target_fpr(std::span<const double> normal_scores, double target_fpr);

/// tau for which assign_labels(AnomalyScoreSeries) flags exactly the scores S_t > v.
double tau_for_score_threshold(double v);

struct DetectionReport {
  std::vector<int> predicted;
  std::vector<int> truth;
  long tp = 0, fp = 0, tn = 0, fn = 0;
  double accuracy = 0.0, precision = 0.0, recall = 0.0, f1 = 0.0, fpr = 0.0;
  // False when the ratio had a zero denominator and was reported as 0.
  bool accuracy_defined = true, precision_defined = true, recall_defined = true, f1_defined = true,
       fpr_defined = true;
};

DetectionReport metrics(std::span<const int> predicted, std::span<const int> truth);

/// Maps per-PC absolute residuals (rows = timesteps, cols = n components) onto the m data
/// variables: w_tj = sum_k |P_kj| r_tk / sum_k |P_kj|. Variables with no loading get 0.
MatrixXd attribute_to_variables(const MatrixXd& pc_residuals, const PcaModel& model);

/// Column j of `variable_scores` thresholded like assign_labels(AnomalyScoreSeries):
/// flagged iff -log(1 - s_tj) > tau_j. Returns one label vector per variable.
std::vector<std::vector<int>> per_variable_labels(const MatrixXd& variable_scores, std::span<const double> tau);
std::vector<std::vector<int>> per_variable_labels(const MatrixXd& variable_scores, double tau);

}  // namespace ganad
