#pragma once

// Adversarial training of an LSTM generator and an LSTM discriminator on windows of
// normal data.

#include "ganad/kernels.hpp"
#include "ganad/lstm.hpp"
#include "ganad/optimizer.hpp"
#include "ganad/series.hpp"

#include <filesystem>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <vector>

namespace ganad {

/// Maps latent sequences (L x latent_dim) to data sequences (L x features); tanh head.
struct Generator {
  StackedLstm net;

  Index latent_dim() const { return net.input_size(); }
  Index features() const { return net.output_size(); }
};

/// Per-timestep probability that a sequence is real; sigmoid head with one output.
struct Discriminator {
  StackedLstm net;

  Index features() const { return net.input_size(); }
};

struct TrainingConfig {
  Index epochs = 100;
  Index batch_size = 32;
  Index d_steps = 1;
  Index g_steps = 3;
  OptimizerConfig d_optimizer{OptimizerRule::adam, 1e-3};
  OptimizerConfig g_optimizer{OptimizerRule::adam, 1e-3};
  std::uint64_t seed = 0;
  Index latent_dim = 15;
  Index sequence_length = 12;
  Index generator_depth = 3;
  Index generator_hidden = 100;
  Index discriminator_depth = 1;
  Index discriminator_hidden = 100;
  double clip_norm = 5.0;
  /// Caps minibatch iterations per epoch; 0 runs a full pass over the windows.
  Index max_batches_per_epoch = 0;
  /// Sample count for the per-epoch MMD; 0 disables MMD tracking.
  Index mmd_samples = 0;
  /// Writes a checkpoint every `checkpoint_interval` epochs when a directory is set.
  Index checkpoint_interval = 0;
  std::optional<std::filesystem::path> checkpoint_dir;
  kernels::Backend backend = kernels::Backend::parallel;

  /// Throws std::invalid_argument when a count or rate is out of range.
  void validate() const;
};

struct LossRecord {
  double d_loss = 0.0;
  double g_loss = 0.0;
};

struct GanModel {
  Generator generator;
  Discriminator discriminator;
  TrainingConfig config;
  OptimizerState d_state;
  OptimizerState g_state;
  std::vector<LossRecord> loss_history;
  std::vector<double> mmd_history;
  Index epochs_completed = 0;
  /// Stream position for latent draws and shuffling, advanced once per epoch.
  std::uint64_t rng_epoch_stream = 0;
};

/// i.i.d. standard normal latent sequences drawn from `rng`.
std::vector<MatrixXd> sample_latent(Index count, Index length, Index dim, std::mt19937_64& rng);

/// Discriminator loss (1/m) sum_i [-log D(x_i) - log(1 - D(G(z_i)))]. Each entry of
/// `real`/`fake` holds one sequence's per-timestep scores; the log terms are averaged over
/// timesteps before averaging over the batch. Scores must lie in (0, 1).
double d_loss(std::span<const VectorXd> real, std::span<const VectorXd> fake);
double d_loss(std::span<const double> real, std::span<const double> fake);

/// Non-saturating generator loss (1/m) sum_i -log D(G(z_i)), same averaging as d_loss.
double g_loss(std::span<const VectorXd> fake);
double g_loss(std::span<const double> fake);

/// Fresh generator/discriminator initialised from `config.seed` for `features` data columns.
GanModel initialize_gan(const TrainingConfig& config, Index features);

struct EpochReport {
  Index epoch = 0;  // 1-based
  LossRecord losses;
  std::optional<double> mmd;
};

using EpochCallback = std::function<void(const GanModel&, const EpochReport&)>;

/// Runs `config.epochs` epochs from initialisation. Each minibatch iteration updates D
/// `d_steps` times on fresh real/fake batches, then G `g_steps` times.
GanModel train(const TrainingConfig& config, const WindowSet& data, const EpochCallback& on_epoch = {});

/// Continues training `model` for `epochs` more epochs. On a non-finite loss the model is
/// restored to its state after the last completed epoch and DivergenceError is thrown.
void train_epochs(GanModel& model, const WindowSet& data, Index epochs, const EpochCallback& on_epoch = {});

std::vector<MatrixXd> generate(const Generator& gen, std::span<const MatrixXd> latent,
                               kernels::Backend backend = kernels::Backend::parallel);

/// Per-timestep discriminator outputs, one L-vector per sequence.
std::vector<VectorXd> discriminate(const Discriminator& disc, std::span<const MatrixXd> sequences,
                                   kernels::Backend backend = kernels::Backend::parallel);

void save_checkpoint(const GanModel& model, const std::filesystem::path& path);
GanModel load_checkpoint(const std::filesystem::path& path);

}  // namespace ganad
