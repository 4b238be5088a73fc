#pragma once

// Reference detectors: tabular CUSUM on one variable, and SPE thresholding of a PCA model.

#include "ganad/pca.hpp"

#include <span>
#include <vector>

namespace ganad {

struct CusumConfig {
  double target_mean = 0.0;  // mu0
  double slack = 0.5;        // k
  double threshold = 5.0;    // h
  bool two_sided = true;

  void validate() const;
};

/// mu0 and sigma from normal data, k = slack_sigmas * sigma, h = threshold_sigmas * sigma.
CusumConfig cusum_defaults(std::span<const double> normal, double slack_sigmas = 0.5,
                           double threshold_sigmas = 5.0, bool two_sided = true);

struct CusumTrace {
  std::vector<double> upper;  // S+ after the step (before any reset)
  std::vector<double> lower;  // S-
  std::vector<int> alarms;
};

/// S+_t = max(0, S+_{t-1} + x_t - mu0 - k), S-_t = max(0, S-_{t-1} + mu0 - x_t - k).
/// Alarm when S+ > h (or S- > h when two-sided); both sums reset to 0 after an alarm.
CusumTrace cusum_run(std::span<const double> series, const CusumConfig& config);
std::vector<int> cusum_detect(std::span<const double> series, const CusumConfig& config);

/// Smallest h (to bisection precision) whose alarm rate on `normal` is at most target_fpr.
double calibrate_cusum_threshold(std::span<const double> normal, const CusumConfig& base, double target_fpr);

/// Flags rows with spe(model, x) > threshold.
std::vector<int> spe_detect(const PcaModel& model, const MatrixXd& x, double threshold);
double calibrate_spe_threshold(const PcaModel& model, const MatrixXd& normal, double target_fpr);

}  // namespace ganad
