#include "ganad/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

namespace ganad {

ResidualScale fit_residual_scale(const VectorXd& residuals) {
  if (residuals.size() == 0) throw std::invalid_argument("cannot fit a residual scale on no data");
  return {residuals.minCoeff(), residuals.maxCoeff()};
}

VectorXd normalize_residuals(const VectorXd& residuals, const ResidualScale& scale) {
  const double span = scale.max - scale.min;
  if (!(span > 0.0)) return VectorXd::Zero(residuals.size());
  return ((residuals.array() - scale.min) / span).cwiseMax(0.0).cwiseMin(1.0);
}

VectorXd AnomalyScoreSeries::realness() const { return (1.0 - combined.array()).matrix(); }

AnomalyScoreSeries anomaly_score(const VectorXd& res, const VectorXd& disc, double lambda,
                                 std::optional<ResidualScale> scale) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw std::invalid_argument("lambda must lie in [0, 1]");
  if (res.size() != disc.size()) throw std::invalid_argument("residual and discrimination lengths differ");
  if ((res.array() < 0.0).any()) throw std::invalid_argument("residuals must be non-negative");
  if ((disc.array() < 0.0).any() || (disc.array() > 1.0).any())
    throw std::invalid_argument("discriminator outputs must lie in [0, 1]");

  AnomalyScoreSeries out;
  out.lambda = lambda;
  out.residual = res;
  if (res.size() == 0) {
    out.normalized_residual = out.discrimination = out.combined = VectorXd();
    return out;
  }
  out.normalized_residual = normalize_residuals(res, scale ? *scale : fit_residual_scale(res));
  out.discrimination = (1.0 - disc.array()).matrix();
  out.combined = lambda * out.normalized_residual + (1.0 - lambda) * out.discrimination;
  return out;
}

std::vector<int> assign_labels(std::span<const double> scores, double tau) {
  std::vector<int> labels(scores.size());
  for (std::size_t t = 0; t < scores.size(); ++t) {
    const double s = std::clamp(scores[t], kLabelEpsilon, 1.0 - kLabelEpsilon);
    labels[t] = -std::log(s) > tau ? 1 : 0;
  }
  return labels;
}

std::vector<int> assign_labels(const AnomalyScoreSeries& scores, double tau) {
  const VectorXd r = scores.realness();
  return assign_labels(std::span<const double>(r.data(), static_cast<std::size_t>(r.size())), tau);
}

double threshold_for_target_fpr(std::span<const double> normal_scores, double target_fpr) {
  if (normal_scores.empty()) throw std::invalid_argument("threshold calibration needs normal scores");
  if (!(target_fpr >= 0.0 && target_fpr < 1.0)) throw std::invalid_argument("target FPR must lie in [0, 1)");
  std::vector<double> sorted(normal_scores.begin(), normal_scores.end());
  const auto k = static_cast<std::size_t>(std::floor(target_fpr * static_cast<double>(sorted.size())));
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(k), sorted.end(),
                   std::greater<>());
  return sorted[k];
}

double tau_for_score_threshold(double v) {
  const double r = std::clamp(1.0 - v, kLabelEpsilon, 1.0 - kLabelEpsilon);
  return -std::log(r);
}

DetectionReport metrics(std::span<const int> predicted, std::span<const int> truth) {
  if (predicted.size() != truth.size()) throw std::invalid_argument("prediction and truth lengths differ");
  DetectionReport r;
  r.predicted.assign(predicted.begin(), predicted.end());
  r.truth.assign(truth.begin(), truth.end());
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const bool p = predicted[i] != 0;
    const bool t = truth[i] != 0;
    if (p && t) ++r.tp;
    else if (p) ++r.fp;
    else if (t) ++r.fn;
    else ++r.tn;
  }
  auto ratio = [](long num, long den, bool& defined) {
    defined = den != 0;
    return defined ? static_cast<double>(num) / static_cast<double>(den) : 0.0;
  };
  r.accuracy = ratio(r.tp + r.tn, r.tp + r.fp + r.tn + r.fn, r.accuracy_defined);
  r.precision = ratio(r.tp, r.tp + r.fp, r.precision_defined);
  r.recall = ratio(r.tp, r.tp + r.fn, r.recall_defined);
  r.fpr = ratio(r.fp, r.fp + r.tn, r.fpr_defined);
  const double pr = r.precision + r.recall;
  r.f1_defined = r.precision_defined && r.recall_defined && pr > 0.0;
  r.f1 = r.f1_defined ? 2.0 * r.precision * r.recall / pr : 0.0;
  return r;
}

MatrixXd attribute_to_variables(const MatrixXd& pc_residuals, const PcaModel& model) {
  if (pc_residuals.cols() != model.n_components())
    throw std::invalid_argument("residual columns do not match the PCA component count");
  const MatrixXd weights = model.loadings.cwiseAbs();  // n x m
  const VectorXd norm = weights.colwise().sum().transpose();
  MatrixXd out = pc_residuals.cwiseAbs() * weights;  // rows x m
  for (Index j = 0; j < out.cols(); ++j) {
    if (norm(j) > 0.0) out.col(j) /= norm(j);
    else out.col(j).setZero();
  }
  return out;
}

std::vector<std::vector<int>> per_variable_labels(const MatrixXd& variable_scores, std::span<const double> tau) {
  if (static_cast<Index>(tau.size()) != variable_scores.cols())
    throw std::invalid_argument("need one threshold per variable");
  std::vector<std::vector<int>> out;
  out.reserve(tau.size());
  for (Index j = 0; j < variable_scores.cols(); ++j) {
    const VectorXd realness = (1.0 - variable_scores.col(j).array()).matrix();
    out.push_back(assign_labels(std::span<const double>(realness.data(), static_cast<std::size_t>(realness.size())),
                                tau[static_cast<std::size_t>(j)]));
  }
  return out;
}

std::vector<std::vector<int>> per_variable_labels(const MatrixXd& variable_scores, double tau) {
  const std::vector<double> taus(static_cast<std::size_t>(variable_scores.cols()), tau);
  return per_variable_labels(variable_scores, taus);
}

}  // namespace ganad
