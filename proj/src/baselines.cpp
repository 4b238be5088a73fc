#include "ganad/baselines.hpp"

#include "ganad/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace ganad {

void CusumConfig::validate() const {
  if (!std::isfinite(target_mean)) throw std::invalid_argument("CUSUM target mean must be finite");
  if (!(slack >= 0.0) || !std::isfinite(slack)) throw std::invalid_argument("CUSUM slack must be non-negative");
  if (!(threshold > 0.0) || !std::isfinite(threshold)) throw std::invalid_argument("CUSUM threshold must be positive");
}

CusumConfig cusum_defaults(std::span<const double> normal, double slack_sigmas, double threshold_sigmas,
                           bool two_sided) {
  if (normal.size() < 2) throw std::invalid_argument("CUSUM defaults need at least two normal samples");
  const double n = static_cast<double>(normal.size());
  const double mean = std::accumulate(normal.begin(), normal.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : normal) ss += (x - mean) * (x - mean);
  // A perfectly constant reference still needs a positive threshold.
  const double sigma = std::max(std::sqrt(ss / (n - 1.0)), 1e-12);
  CusumConfig c;
  c.target_mean = mean;
  c.slack = slack_sigmas * sigma;
  c.threshold = threshold_sigmas * sigma;
  c.two_sided = two_sided;
  c.validate();
  return c;
}

CusumTrace cusum_run(std::span<const double> series, const CusumConfig& config) {
  config.validate();
  CusumTrace trace;
  trace.upper.resize(series.size());
  trace.lower.resize(series.size());
  trace.alarms.resize(series.size());
  double up = 0.0;
  double down = 0.0;
  for (std::size_t t = 0; t < series.size(); ++t) {
    const double x = series[t];
    if (!std::isfinite(x)) throw std::invalid_argument("CUSUM input must be finite");
    up = std::max(0.0, up + (x - config.target_mean - config.slack));
    down = std::max(0.0, down + (config.target_mean - x - config.slack));
    trace.upper[t] = up;
    trace.lower[t] = down;
    const bool alarm = up > config.threshold || (config.two_sided && down > config.threshold);
    trace.alarms[t] = alarm ? 1 : 0;
    if (alarm) up = down = 0.0;
  }
  return trace;
}

std::vector<int> cusum_detect(std::span<const double> series, const CusumConfig& config) {
  return cusum_run(series, config).alarms;
}

double calibrate_cusum_threshold(std::span<const double> normal, const CusumConfig& base, double target_fpr) {
  if (normal.empty()) throw std::invalid_argument("CUSUM calibration needs normal samples");
  if (!(target_fpr >= 0.0 && target_fpr < 1.0)) throw std::invalid_argument("target FPR must lie in [0, 1)");
  const auto allowed = static_cast<long>(std::floor(target_fpr * static_cast<double>(normal.size())));
  auto alarms_at = [&](double h) {
    CusumConfig c = base;
    c.threshold = h;
    const auto a = cusum_detect(normal, c);
    return std::accumulate(a.begin(), a.end(), 0L);
  };
  double hi = base.threshold;
  for (int i = 0; i < 200 && alarms_at(hi) > allowed; ++i) hi *= 2.0;
  double lo = 0.0;
  for (int i = 0; i < 100; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (alarms_at(mid) > allowed) lo = mid;
    else hi = mid;
  }
  return hi;
}

std::vector<int> spe_detect(const PcaModel& model, const MatrixXd& x, double threshold) {
  const VectorXd e = spe(model, x);
  std::vector<int> flags(static_cast<std::size_t>(e.size()));
  for (Index i = 0; i < e.size(); ++i) flags[static_cast<std::size_t>(i)] = e(i) > threshold ? 1 : 0;
  return flags;
}

double calibrate_spe_threshold(const PcaModel& model, const MatrixXd& normal, double target_fpr) {
  const VectorXd e = spe(model, normal);
  return threshold_for_target_fpr(std::span<const double>(e.data(), static_cast<std::size_t>(e.size())), target_fpr);
}

}  // namespace ganad
