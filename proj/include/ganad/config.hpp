#pragma once

// Run configuration for the command-line pipeline, read from a YAML file.

#include "ganad/gan.hpp"
#include "ganad/inversion.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>

namespace ganad {

struct PathConfig {
  /// Empty paths default to files inside `output_dir`.
  std::filesystem::path normal_csv;
  std::filesystem::path attack_csv;
  std::filesystem::path output_dir = "out";
  std::filesystem::path checkpoint_dir;

  std::filesystem::path normal() const { return normal_csv.empty() ? output_dir / "normal.csv" : normal_csv; }
  std::filesystem::path attack() const { return attack_csv.empty() ? output_dir / "attack.csv" : attack_csv; }
  std::filesystem::path checkpoints() const {
    return checkpoint_dir.empty() ? output_dir / "checkpoints" : checkpoint_dir;
  }
};

struct PreprocessConfig {
  Index window_length = 120;  // T
  Index train_shift = 10;
  Index test_shift = 120;
  Index downsample_factor = 10;
  Index trim_rows = 0;
  /// Tail fraction of the normal stream kept out of training for threshold calibration.
  double holdout_fraction = 0.2;
};

struct ScoringConfig {
  double lambda = 0.5;
  double target_fpr = 0.01;
  /// Fixed cross-entropy threshold; when unset tau is calibrated on held-out normal data.
  std::optional<double> tau;
};

struct BaselineConfig {
  bool cusum = true;
  bool spe = true;
  double cusum_slack_sigmas = 0.5;
  double cusum_threshold_sigmas = 5.0;
  bool cusum_two_sided = true;
};

struct SynthConfig {
  Index normal_rows = 30000;
  Index attack_rows = 20000;
  bool label_coupled = false;
};

struct RunConfig {
  std::uint64_t seed = 0;
  int workers = 0;
  PathConfig paths;
  CsvSchema schema;
  PreprocessConfig preprocess;
  Index pca_components = 5;
  TrainingConfig gan;
  InversionConfig inversion;
  ScoringConfig scoring;
  BaselineConfig baselines;
  SynthConfig synth;

  /// Source line of each key read from the file, keyed "section.key".
  std::map<std::string, int> source_lines;

  /// Range checks; ConfigError carries the offending key's line when known.
  void validate() const;
};

/// Paper-scale defaults: T=120, shifts 10/120, factor 10, latent 15, G depth 3, D depth 1,
/// 100 hidden units.
RunConfig default_run_config();

RunConfig parse_config(const std::string& yaml_text);
RunConfig load_config(const std::filesystem::path& path);

/// GANAD_NORMAL_CSV, GANAD_ATTACK_CSV, GANAD_OUTPUT_DIR and GANAD_CHECKPOINT_DIR replace the
/// matching paths when set.
void apply_env_overrides(RunConfig& config);

/// Canonical text of every parameter that affects results (paths and worker count excluded).
std::string canonical_dump(const RunConfig& config);
/// FNV-1a 64 of canonical_dump, as 16 hex digits.
std::string config_hash(const RunConfig& config);

}  // namespace ganad
