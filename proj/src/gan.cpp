#include "ganad/gan.hpp"

#include "ganad/mmd.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace ganad {

void TrainingConfig::validate() const {
  auto positive = [](Index v, const char* name) {
    if (v < 1) throw std::invalid_argument(std::string(name) + " must be at least 1");
  };
  if (epochs < 0) throw std::invalid_argument("epochs must be non-negative");
  positive(batch_size, "batch_size");
  positive(d_steps, "d_steps");
  positive(g_steps, "g_steps");
  positive(latent_dim, "latent_dim");
  positive(sequence_length, "sequence_length");
  positive(generator_depth, "generator_depth");
  positive(generator_hidden, "generator_hidden");
  positive(discriminator_depth, "discriminator_depth");
  positive(discriminator_hidden, "discriminator_hidden");
  if (!(d_optimizer.learning_rate > 0.0) || !(g_optimizer.learning_rate > 0.0))
    throw std::invalid_argument("learning rates must be positive");
  if (max_batches_per_epoch < 0 || mmd_samples < 0 || checkpoint_interval < 0)
    throw std::invalid_argument("batch cap, MMD sample count and checkpoint interval must be non-negative");
  if (mmd_samples == 1) throw std::invalid_argument("mmd_samples must be 0 or at least 2");
}

std::vector<MatrixXd> sample_latent(Index count, Index length, Index dim, std::mt19937_64& rng) {
  if (count < 1 || length < 1 || dim < 1) throw std::invalid_argument("latent sizes must be positive");
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<MatrixXd> out(static_cast<std::size_t>(count), MatrixXd(length, dim));
  for (auto& z : out)
    for (Index r = 0; r < length; ++r)
      for (Index c = 0; c < dim; ++c) z(r, c) = normal(rng);
  return out;
}

namespace {

void check_scores(const VectorXd& s) {
  if (s.size() == 0) throw std::invalid_argument("empty score sequence");
  for (Index t = 0; t < s.size(); ++t)
    if (!(s(t) > 0.0 && s(t) < 1.0)) throw std::invalid_argument("discriminator scores must lie in (0, 1)");
}

VectorXd scalar_scores(double v) { return VectorXd::Constant(1, v); }

// Scores closer to 0 or 1 than this are clamped inside the training losses.
constexpr double kLossClamp = 1e-12;

double clamp_score(double s) { return std::clamp(s, kLossClamp, 1.0 - kLossClamp); }

}  // namespace

double d_loss(std::span<const VectorXd> real, std::span<const VectorXd> fake) {
  if (real.empty() || real.size() != fake.size())
    throw std::invalid_argument("d_loss needs equal, non-empty real and fake batches");
  double total = 0.0;
  for (std::size_t i = 0; i < real.size(); ++i) {
    check_scores(real[i]);
    check_scores(fake[i]);
    total += -real[i].array().log().mean() - (1.0 - fake[i].array()).log().mean();
  }
  return total / static_cast<double>(real.size());
}

double d_loss(std::span<const double> real, std::span<const double> fake) {
  std::vector<VectorXd> r, f;
  for (double v : real) r.push_back(scalar_scores(v));
  for (double v : fake) f.push_back(scalar_scores(v));
  return d_loss(r, f);
}

double g_loss(std::span<const VectorXd> fake) {
  if (fake.empty()) throw std::invalid_argument("g_loss needs a non-empty batch");
  double total = 0.0;
  for (const auto& s : fake) {
    check_scores(s);
    total += -s.array().log().mean();
  }
  return total / static_cast<double>(fake.size());
}

double g_loss(std::span<const double> fake) {
  std::vector<VectorXd> f;
  for (double v : fake) f.push_back(scalar_scores(v));
  return g_loss(f);
}

GanModel initialize_gan(const TrainingConfig& config, Index features) {
  config.validate();
  if (features < 1) throw std::invalid_argument("feature dimension must be positive");
  GanModel model;
  model.config = config;
  model.generator.net = StackedLstm(config.latent_dim,
                                    std::vector<Index>(static_cast<std::size_t>(config.generator_depth),
                                                       config.generator_hidden),
                                    features, Activation::tanh);
  model.generator.net.initialize(mix_seed(config.seed, 1));
  model.discriminator.net = StackedLstm(features,
                                        std::vector<Index>(static_cast<std::size_t>(config.discriminator_depth),
                                                           config.discriminator_hidden),
                                        1, Activation::sigmoid);
  model.discriminator.net.initialize(mix_seed(config.seed, 2));
  model.d_state = make_optimizer(config.d_optimizer, model.discriminator.net.parameter_count());
  model.g_state = make_optimizer(config.g_optimizer, model.generator.net.parameter_count());
  return model;
}

std::vector<MatrixXd> generate(const Generator& gen, std::span<const MatrixXd> latent, kernels::Backend backend) {
  for (const auto& z : latent)
    if (z.cols() != gen.latent_dim())
      throw std::invalid_argument("latent dimension " + std::to_string(z.cols()) + " does not match generator " +
                                  std::to_string(gen.latent_dim()));
  return kernels::forward(backend, gen.net, latent);
}

std::vector<VectorXd> discriminate(const Discriminator& disc, std::span<const MatrixXd> sequences,
                                   kernels::Backend backend) {
  auto out = kernels::forward(backend, disc.net, sequences);
  std::vector<VectorXd> scores;
  scores.reserve(out.size());
  for (auto& o : out) scores.emplace_back(o.col(0));
  return scores;
}

namespace {

// Per-timestep cross entropy against a fixed target (1 = real, 0 = fake), averaged over
// timesteps and the batch; fills dLoss/dD.
double cross_entropy_head(std::span<const MatrixXd> outputs, std::vector<MatrixXd>& grads, double target) {
  const auto m = static_cast<double>(outputs.size());
  grads.resize(outputs.size());
  double total = 0.0;
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    const auto& d = outputs[i];
    const auto steps = static_cast<double>(d.rows());
    grads[i].resize(d.rows(), 1);
    for (Index t = 0; t < d.rows(); ++t) {
      const double s = clamp_score(d(t, 0));
      if (target > 0.5) {
        total -= std::log(s) / steps;
        grads[i](t, 0) = -1.0 / (s * steps * m);
      } else {
        total -= std::log(1.0 - s) / steps;
        grads[i](t, 0) = 1.0 / ((1.0 - s) * steps * m);
      }
    }
  }
  return total / m;
}

void check_loss(double value, const char* which) {
  if (!std::isfinite(value)) throw DivergenceError(std::string("diverged: non-finite ") + which + " loss");
}

struct EpochState {
  std::mt19937_64 rng;
  std::vector<std::size_t> order;
  std::size_t cursor = 0;
};

std::vector<MatrixXd> next_real_batch(const WindowSet& data, EpochState& st, std::size_t m) {
  std::vector<MatrixXd> batch;
  batch.reserve(m);
  for (std::size_t k = 0; k < m; ++k) {
    if (st.cursor == st.order.size()) {
      std::shuffle(st.order.begin(), st.order.end(), st.rng);
      st.cursor = 0;
    }
    batch.push_back(data.windows[st.order[st.cursor++]]);
  }
  return batch;
}

double discriminator_step(GanModel& model, const WindowSet& data, EpochState& st, std::size_t m) {
  const auto& cfg = model.config;
  const auto real = next_real_batch(data, st, m);
  const auto z = sample_latent(static_cast<Index>(m), cfg.sequence_length, cfg.latent_dim, st.rng);
  const auto fake = kernels::forward(cfg.backend, model.generator.net, z);

  const auto& dnet = model.discriminator.net;
  auto real_grad = kernels::gradient(
      cfg.backend, dnet, real,
      [](std::span<const MatrixXd> out, std::vector<MatrixXd>& g) { return cross_entropy_head(out, g, 1.0); }, true,
      false);
  auto fake_grad = kernels::gradient(
      cfg.backend, dnet, fake,
      [](std::span<const MatrixXd> out, std::vector<MatrixXd>& g) { return cross_entropy_head(out, g, 0.0); }, true,
      false);
  const double loss = real_grad.loss + fake_grad.loss;
  check_loss(loss, "discriminator");
  GradientSet grads = real_grad.params + fake_grad.params;
  clip_global_norm(grads, cfg.clip_norm);
  optimizer_step(model.discriminator.net.parameters(), grads, model.d_state);
  return loss;
}

double generator_step(GanModel& model, EpochState& st, std::size_t m) {
  const auto& cfg = model.config;
  const auto z = sample_latent(static_cast<Index>(m), cfg.sequence_length, cfg.latent_dim, st.rng);
  const auto& dnet = model.discriminator.net;
  const auto backend = cfg.backend;
  // dLoss/dG(z) comes from backpropagating the non-saturating loss through the frozen D.
  auto loss = [&dnet, backend](std::span<const MatrixXd> fakes, std::vector<MatrixXd>& g) {
    auto through_d = kernels::gradient(
        backend, dnet, fakes,
        [](std::span<const MatrixXd> out, std::vector<MatrixXd>& dg) { return cross_entropy_head(out, dg, 1.0); },
        false, true);
    g = std::move(through_d.inputs);
    return through_d.loss;
  };
  auto result = kernels::gradient(backend, model.generator.net, z, loss, true, false);
  check_loss(result.loss, "generator");
  clip_global_norm(result.params, cfg.clip_norm);
  optimizer_step(model.generator.net.parameters(), result.params, model.g_state);
  return result.loss;
}

// Fixed latent draws, reference windows and bandwidth so per-epoch MMD values are comparable.
struct MmdProbe {
  std::vector<MatrixXd> latent;
  std::vector<VectorXd> reference;
  double bandwidth = 1.0;
};

MmdProbe make_mmd_probe(const TrainingConfig& cfg, const WindowSet& data) {
  MmdProbe probe;
  std::mt19937_64 rng(mix_seed(cfg.seed, 7));
  std::vector<std::size_t> idx(data.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::shuffle(idx.begin(), idx.end(), rng);
  const auto n = std::min<std::size_t>(idx.size(), static_cast<std::size_t>(cfg.mmd_samples));
  for (std::size_t k = 0; k < n; ++k) probe.reference.push_back(flatten(data.windows[idx[k]]));
  probe.latent = sample_latent(cfg.mmd_samples, cfg.sequence_length, cfg.latent_dim, rng);
  probe.bandwidth = median_heuristic(probe.reference, cfg.backend);
  return probe;
}

}  // namespace

void train_epochs(GanModel& model, const WindowSet& data, Index epochs, const EpochCallback& on_epoch) {
  const auto& cfg = model.config;
  cfg.validate();
  if (epochs <= 0) return;
  if (data.size() == 0) throw std::invalid_argument("no training windows");
  for (const auto& w : data.windows)
    if (w.rows() != cfg.sequence_length || w.cols() != model.generator.features())
      throw std::invalid_argument("training windows must be " + std::to_string(cfg.sequence_length) + " x " +
                                  std::to_string(model.generator.features()));

  const std::size_t m = std::min(data.size(), static_cast<std::size_t>(cfg.batch_size));
  Index iterations = std::max<Index>(1, static_cast<Index>(data.size()) / static_cast<Index>(m * cfg.d_steps));
  if (cfg.max_batches_per_epoch > 0) iterations = std::min(iterations, cfg.max_batches_per_epoch);

  std::optional<MmdProbe> probe;
  if (cfg.mmd_samples >= 2 && data.size() >= 2) probe = make_mmd_probe(cfg, data);

  for (Index e = 0; e < epochs; ++e) {
    const GanModel snapshot = model;
    EpochReport report;
    try {
      EpochState st{std::mt19937_64(mix_seed(cfg.seed, 1000 + model.rng_epoch_stream)), {}, 0};
      st.order.resize(data.size());
      std::iota(st.order.begin(), st.order.end(), std::size_t{0});
      std::shuffle(st.order.begin(), st.order.end(), st.rng);

      double d_total = 0.0, g_total = 0.0;
      for (Index it = 0; it < iterations; ++it) {
        for (Index k = 0; k < cfg.d_steps; ++k) d_total += discriminator_step(model, data, st, m);
        for (Index k = 0; k < cfg.g_steps; ++k) g_total += generator_step(model, st, m);
      }
      report.losses.d_loss = d_total / static_cast<double>(iterations * cfg.d_steps);
      report.losses.g_loss = g_total / static_cast<double>(iterations * cfg.g_steps);
      if (probe) {
        const auto samples = generate(model.generator, probe->latent, cfg.backend);
        const auto flat = flatten_all(samples);
        report.mmd = mmd_unbiased(flat, probe->reference, KernelConfig::fixed(probe->bandwidth), cfg.backend);
        check_loss(*report.mmd, "MMD");
      }
    } catch (const DivergenceError&) {
      model = snapshot;
      throw;
    }
    ++model.rng_epoch_stream;
    ++model.epochs_completed;
    report.epoch = model.epochs_completed;
    model.loss_history.push_back(report.losses);
    if (report.mmd) model.mmd_history.push_back(*report.mmd);
    if (cfg.checkpoint_dir && cfg.checkpoint_interval > 0 && model.epochs_completed % cfg.checkpoint_interval == 0) {
      std::filesystem::create_directories(*cfg.checkpoint_dir);
      char name[32];
      std::snprintf(name, sizeof(name), "epoch_%04ld.json", static_cast<long>(model.epochs_completed));
      save_checkpoint(model, *cfg.checkpoint_dir / name);
      save_checkpoint(model, *cfg.checkpoint_dir / "latest.json");
    }
    if (on_epoch) on_epoch(model, report);
  }
}

GanModel train(const TrainingConfig& config, const WindowSet& data, const EpochCallback& on_epoch) {
  if (data.size() == 0) throw std::invalid_argument("no training windows");
  GanModel model = initialize_gan(config, data.features());
  train_epochs(model, data, config.epochs, on_epoch);
  return model;
}

}  // namespace ganad
