#pragma once

// End-to-end orchestration behind the command-line tool. Each command reads the artifacts of
// the previous one from the output directory:
//
//   synth     normal.csv, attack.csv, attack_mask.csv
//   ingest    dataset/{train,calibration,test}.bin, dataset/manifest.json, dataset/pca.json
//   train     checkpoints/*.json, history.csv, history.svg
//   generate  samples.csv
//   detect    scores.csv, inversion.csv, per_variable.csv, detection.json
//   evaluate  metrics.json

#include "ganad/config.hpp"
#include "ganad/pca.hpp"
#include "ganad/scoring.hpp"

#include <iosfwd>

namespace ganad::pipeline {

/// Normalized, windowed and downsampled data, all with `m` raw variables.
struct PreparedData {
  WindowSet train;
  /// Non-overlapping normal windows used to calibrate thresholds: the held-out tail of the
  /// normal stream, or the training stream itself when no holdout is configured.
  WindowSet calibration;
  WindowSet test;
  NormalizationStats stats;
  std::vector<std::string> columns;
  bool calibration_is_holdout = true;
};

PreparedData prepare(const RunConfig& config, const RawSeries& normal, const RawSeries& attack);

/// PCA projection followed by one common scale so that training features lie in [-1, 1].
struct FeatureMap {
  PcaModel pca;
  double scale = 1.0;

  MatrixXd apply(const MatrixXd& window) const;
  WindowSet apply(const WindowSet& windows) const;
};

FeatureMap fit_feature_map(const WindowSet& train, Index components);

struct DetectionResult {
  AnomalyScoreSeries calibration;
  AnomalyScoreSeries test;
  std::vector<InversionResult> calibration_inversions;
  std::vector<InversionResult> test_inversions;
  double threshold = 0.0;  // on S_t
  double tau = 0.0;
  std::vector<int> predicted;
  std::vector<int> truth;
  MatrixXd variable_scores;  // test timesteps x m
  std::vector<double> variable_tau;
  std::vector<std::vector<int>> variable_labels;
};

DetectionResult detect(const RunConfig& config, const GanModel& model, const FeatureMap& features,
                       const PreparedData& data);

struct MethodResult {
  std::string name;
  DetectionReport report;
};

struct EvaluationResult {
  MethodResult gan_ad;
  std::vector<MethodResult> cusum;  // one per variable
  std::optional<MethodResult> cusum_best;
  std::optional<MethodResult> spe;
  /// Per-variable GAN-AD labels scored against the per-variable attack mask, when known.
  std::vector<MethodResult> per_variable;
};

EvaluationResult evaluate(const RunConfig& config, const FeatureMap& features, const PreparedData& data,
                          std::span<const int> gan_predicted, const std::vector<std::vector<int>>& variable_labels,
                          const std::optional<Eigen::MatrixXi>& test_mask = std::nullopt);

/// Per-timestep mask of the test windows (any-in-block over downsampling), from a raw
/// per-row mask of the attack stream.
Eigen::MatrixXi window_mask(const Eigen::MatrixXi& raw_mask, const WindowSet& test);

// File-level commands. `log` receives progress lines when non-null.
void cmd_synth(const RunConfig& config, std::ostream* log = nullptr);
void cmd_ingest(const RunConfig& config, std::ostream* log = nullptr);
void cmd_train(const RunConfig& config, std::ostream* log = nullptr);
void cmd_generate(const RunConfig& config, Index count, std::ostream* log = nullptr);
void cmd_detect(const RunConfig& config, std::ostream* log = nullptr);
void cmd_evaluate(const RunConfig& config, std::ostream* log = nullptr);

}  // namespace ganad::pipeline
