#include "ganad/gan.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <random>

using namespace ganad;

namespace {

TrainingConfig tiny_config() {
  TrainingConfig c;
  c.epochs = 3;
  c.batch_size = 8;
  c.g_steps = 1;
  c.latent_dim = 3;
  c.sequence_length = 6;
  c.generator_depth = 1;
  c.generator_hidden = 6;
  c.discriminator_hidden = 6;
  c.seed = 5;
  c.backend = kernels::Backend::serial;
  return c;
}

WindowSet sine_windows(Index count, Index length, Index features, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> phase(0.0, 6.283185307179586);
  WindowSet w;
  for (Index i = 0; i < count; ++i) {
    MatrixXd x(length, features);
    const double p = phase(rng);
    for (Index t = 0; t < length; ++t)
      for (Index j = 0; j < features; ++j) x(t, j) = 0.7 * std::sin(0.5 * static_cast<double>(t) + p + j);
    w.windows.push_back(x);
  }
  w.length = w.raw_length = length;
  return w;
}

double bce_head(std::span<const MatrixXd> out, std::vector<MatrixXd>& g, bool real) {
  const double m = static_cast<double>(out.size());
  double total = 0.0;
  g.clear();
  for (const auto& d : out) {
    const double steps = static_cast<double>(d.rows());
    MatrixXd gi(d.rows(), 1);
    for (Index t = 0; t < d.rows(); ++t) {
      const double s = d(t, 0);
      total -= (real ? std::log(s) : std::log(1.0 - s)) / (steps * m);
      gi(t, 0) = real ? -1.0 / (s * steps * m) : 1.0 / ((1.0 - s) * steps * m);
    }
    g.push_back(gi);
  }
  return total;
}

}  // namespace

TEST(Latent, ShapeDeterminismAndMoments) {
  std::mt19937_64 a(9), b(9);
  const auto za = sample_latent(4, 12, 15, a);
  const auto zb = sample_latent(4, 12, 15, b);
  ASSERT_EQ(za.size(), 4u);
  EXPECT_EQ(za[0].rows(), 12);
  EXPECT_EQ(za[0].cols(), 15);
  for (std::size_t i = 0; i < za.size(); ++i) EXPECT_EQ(za[i], zb[i]);

  std::mt19937_64 rng(123);
  const auto big = sample_latent(1, 10000, 1, rng).front();
  const double mean = big.mean();
  const double var = (big.array() - mean).square().mean();
  EXPECT_NEAR(mean, 0.0, 0.05);
  EXPECT_NEAR(var, 1.0, 0.05);
  EXPECT_THROW(sample_latent(0, 12, 15, rng), std::invalid_argument);
}

TEST(Losses, IndifferentPoint) {
  const std::vector<double> half(5, 0.5);
  EXPECT_NEAR(d_loss(half, half), 2.0 * std::log(2.0), 1e-12);
  EXPECT_NEAR(g_loss(half), std::log(2.0), 1e-12);
}

TEST(Losses, HandExamples) {
  const std::vector<double> real{0.9, 0.8}, fake{0.1, 0.3};
  const double expect = 0.5 * ((-std::log(0.9) - std::log(0.9)) + (-std::log(0.8) - std::log(0.7)));
  EXPECT_NEAR(d_loss(real, fake), expect, 1e-15);
  const std::vector<double> g{0.25, 0.5};
  EXPECT_NEAR(g_loss(g), 0.5 * (std::log(4.0) + std::log(2.0)), 1e-15);

  const std::vector<double> near_perfect_real{1.0 - 1e-12}, near_perfect_fake{1e-12};
  EXPECT_LT(d_loss(near_perfect_real, near_perfect_fake), 1e-10);
  EXPECT_LT(g_loss(near_perfect_real), 1e-10);
}

TEST(Losses, SequenceBatchesMatchDirectSummation) {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(0.01, 0.99);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t m = 1 + static_cast<std::size_t>(trial % 7);
    const Index steps = 1 + trial % 5;
    std::vector<VectorXd> real(m, VectorXd(steps)), fake(m, VectorXd(steps));
    double dsum = 0.0, gsum = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      double dr = 0.0, df = 0.0, gf = 0.0;
      for (Index t = 0; t < steps; ++t) {
        real[i](t) = u(rng);
        fake[i](t) = u(rng);
        dr += -std::log(real[i](t));
        df += -std::log(1.0 - fake[i](t));
        gf += -std::log(fake[i](t));
      }
      dsum += (dr + df) / static_cast<double>(steps);
      gsum += gf / static_cast<double>(steps);
    }
    EXPECT_NEAR(d_loss(real, fake), dsum / static_cast<double>(m), 1e-10);
    EXPECT_NEAR(g_loss(fake), gsum / static_cast<double>(m), 1e-10);
  }
}

TEST(Losses, RejectScoresOutsideOpenInterval) {
  EXPECT_THROW(d_loss(std::vector<double>{1.0}, std::vector<double>{0.5}), std::invalid_argument);
  EXPECT_THROW(d_loss(std::vector<double>{0.5}, std::vector<double>{0.0}), std::invalid_argument);
  EXPECT_THROW(g_loss(std::vector<double>{-0.1}), std::invalid_argument);
  EXPECT_THROW(d_loss(std::vector<double>{0.5, 0.5}, std::vector<double>{0.5}), std::invalid_argument);
  EXPECT_THROW(g_loss(std::vector<double>{}), std::invalid_argument);
}

TEST(Generate, DeterministicBoundedAndChecked) {
  const GanModel model = initialize_gan(tiny_config(), 2);
  std::mt19937_64 rng(1);
  auto z = sample_latent(5, 6, 3, rng);
  for (auto& m : z) m *= 20.0;
  const auto a = generate(model.generator, z);
  const auto b = generate(model.generator, z, kernels::Backend::serial);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].rows(), 6);
    EXPECT_EQ(a[i].cols(), 2);
    EXPECT_LT((a[i] - b[i]).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT(a[i].cwiseAbs().maxCoeff(), 1.0);
  }
  EXPECT_THROW(generate(model.generator, std::vector<MatrixXd>{MatrixXd::Zero(6, 4)}), std::invalid_argument);

  Generator zero{StackedLstm(3, {4}, 2, Activation::tanh)};
  zero.net.parameters().setZero();
  for (const auto& y : generate(zero, z)) EXPECT_TRUE(y.isZero());
}

TEST(Discriminate, ScoresInUnitInterval) {
  const GanModel model = initialize_gan(tiny_config(), 2);
  const WindowSet w = sine_windows(7, 6, 2, 3);
  const auto d = discriminate(model.discriminator, w.windows);
  ASSERT_EQ(d.size(), 7u);
  for (const auto& v : d) {
    EXPECT_EQ(v.size(), 6);
    EXPECT_GT(v.minCoeff(), 0.0);
    EXPECT_LT(v.maxCoeff(), 1.0);
  }
}

TEST(Training, ZeroEpochsLeavesInitialization) {
  TrainingConfig c = tiny_config();
  const GanModel init = initialize_gan(c, 2);
  c.epochs = 0;
  const GanModel trained = train(c, sine_windows(16, 6, 2, 1));
  EXPECT_EQ(trained.generator.net.parameters(), init.generator.net.parameters());
  EXPECT_EQ(trained.discriminator.net.parameters(), init.discriminator.net.parameters());
  EXPECT_TRUE(trained.loss_history.empty());
  EXPECT_EQ(trained.epochs_completed, 0);
}

// A small step along the negative analytic gradient lowers the loss on the same batch.
TEST(Training, DiscriminatorAndGeneratorStepsDescend) {
  const TrainingConfig c = tiny_config();
  const GanModel model = initialize_gan(c, 2);
  const WindowSet w = sine_windows(8, 6, 2, 4);
  std::mt19937_64 rng(8);
  const auto z = sample_latent(8, 6, 3, rng);
  const auto fake = generate(model.generator, z, kernels::Backend::serial);

  auto d_batch_loss = [&](const StackedLstm& d) {
    const Discriminator disc{d};
    return d_loss(discriminate(disc, w.windows, kernels::Backend::serial),
                  discriminate(disc, fake, kernels::Backend::serial));
  };
  const auto& dnet = model.discriminator.net;
  const auto real_grad = kernels::gradient(kernels::Backend::serial, dnet, w.windows,
      [](std::span<const MatrixXd> o, std::vector<MatrixXd>& g) { return bce_head(o, g, true); }, true, false);
  const auto fake_grad = kernels::gradient(kernels::Backend::serial, dnet, fake,
      [](std::span<const MatrixXd> o, std::vector<MatrixXd>& g) { return bce_head(o, g, false); }, true, false);
  EXPECT_NEAR(real_grad.loss + fake_grad.loss, d_batch_loss(dnet), 1e-12);
  const VectorXd dg = real_grad.params + fake_grad.params;
  StackedLstm stepped = dnet;
  stepped.parameters() -= 1e-3 / dg.norm() * dg;
  EXPECT_LT(d_batch_loss(stepped), d_batch_loss(dnet));

  auto g_batch_loss = [&](const StackedLstm& g) {
    return g_loss(discriminate(model.discriminator, generate(Generator{g}, z, kernels::Backend::serial),
                               kernels::Backend::serial));
  };
  const auto& gnet = model.generator.net;
  const auto g_grad = kernels::gradient(kernels::Backend::serial, gnet, z,
      [&](std::span<const MatrixXd> o, std::vector<MatrixXd>& g) {
        const auto inner = kernels::gradient(kernels::Backend::serial, dnet, o,
            [](std::span<const MatrixXd> d, std::vector<MatrixXd>& dg2) { return bce_head(d, dg2, true); },
            false, true);
        g = inner.inputs;
        return inner.loss;
      },
      true, false);
  EXPECT_NEAR(g_grad.loss, g_batch_loss(gnet), 1e-12);
  StackedLstm g_stepped = gnet;
  g_stepped.parameters() -= 1e-3 / g_grad.params.norm() * g_grad.params;
  EXPECT_LT(g_batch_loss(g_stepped), g_batch_loss(gnet));
}

TEST(Training, BitwiseDeterministic) {
  TrainingConfig c = tiny_config();
  c.mmd_samples = 8;
  const WindowSet w = sine_windows(24, 6, 2, 2);
  const GanModel a = train(c, w);
  const GanModel b = train(c, w);
  EXPECT_EQ(a.generator.net.parameters(), b.generator.net.parameters());
  EXPECT_EQ(a.discriminator.net.parameters(), b.discriminator.net.parameters());
  ASSERT_EQ(a.loss_history.size(), 3u);
  for (std::size_t e = 0; e < 3; ++e) {
    EXPECT_EQ(a.loss_history[e].d_loss, b.loss_history[e].d_loss);
    EXPECT_EQ(a.loss_history[e].g_loss, b.loss_history[e].g_loss);
  }
  EXPECT_EQ(a.mmd_history, b.mmd_history);
  EXPECT_EQ(a.mmd_history.size(), 3u);
}

TEST(Training, ResumingFromCheckpointMatchesUninterruptedRun) {
  TrainingConfig c = tiny_config();
  c.epochs = 4;
  const WindowSet w = sine_windows(24, 6, 2, 6);
  const GanModel full = train(c, w);

  c.epochs = 2;
  GanModel half = train(c, w);
  const auto path = std::filesystem::temp_directory_path() / "ganad_test_resume.json";
  save_checkpoint(half, path);
  GanModel resumed = load_checkpoint(path);
  std::filesystem::remove(path);
  EXPECT_EQ(resumed.generator.net.parameters(), half.generator.net.parameters());
  EXPECT_EQ(resumed.rng_epoch_stream, half.rng_epoch_stream);
  resumed.config.backend = kernels::Backend::serial;
  train_epochs(resumed, w, 2);

  EXPECT_EQ(resumed.epochs_completed, 4);
  EXPECT_EQ(resumed.generator.net.parameters(), full.generator.net.parameters());
  EXPECT_EQ(resumed.discriminator.net.parameters(), full.discriminator.net.parameters());
  ASSERT_EQ(resumed.loss_history.size(), 4u);
  EXPECT_EQ(resumed.loss_history.back().d_loss, full.loss_history.back().d_loss);
}

TEST(Training, CallbackSeesEveryEpochAndCheckpointsAreWritten) {
  TrainingConfig c = tiny_config();
  c.epochs = 4;
  c.checkpoint_interval = 2;
  const auto dir = std::filesystem::temp_directory_path() / "ganad_test_ckpt";
  std::filesystem::remove_all(dir);
  c.checkpoint_dir = dir;
  std::vector<Index> seen;
  train(c, sine_windows(16, 6, 2, 9), [&](const GanModel& m, const EpochReport& r) {
    EXPECT_EQ(m.epochs_completed, r.epoch);
    EXPECT_TRUE(std::isfinite(r.losses.d_loss));
    seen.push_back(r.epoch);
  });
  EXPECT_EQ(seen, (std::vector<Index>{1, 2, 3, 4}));
  std::size_t files = 0;
  for (const auto& e : std::filesystem::directory_iterator(dir)) files += e.is_regular_file();
  EXPECT_GE(files, 2u);
  std::filesystem::remove_all(dir);
}

TEST(Training, ConstantDataIsLearned) {
  TrainingConfig c = tiny_config();
  c.epochs = 500;
  c.batch_size = 16;
  c.sequence_length = 4;
  c.latent_dim = 2;
  c.generator_hidden = 8;
  c.discriminator_hidden = 8;
  c.d_optimizer.learning_rate = c.g_optimizer.learning_rate = 1e-2;
  WindowSet w;
  w.windows.assign(64, MatrixXd::Constant(4, 1, 0.5));
  w.length = w.raw_length = 4;
  std::mt19937_64 rng(3);
  const auto z = sample_latent(100, 4, 2, rng);
  // The adversarial iterates circle the target, so average the last 100 epochs.
  double mean = 0.0;
  for (std::uint64_t seed : {1, 2, 3}) {
    c.seed = seed;
    mean = 0.0;
    train(c, w, [&](const GanModel& m, const EpochReport& r) {
      if (r.epoch <= 400) return;
      for (const auto& y : generate(m.generator, z, kernels::Backend::serial)) mean += y.mean() / 1e4;
    });
    EXPECT_NEAR(mean, 0.5, 0.1) << "seed " << seed;
  }
}

TEST(Training, ConfigValidation) {
  TrainingConfig c = tiny_config();
  c.batch_size = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = tiny_config();
  c.d_optimizer.learning_rate = -1.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = tiny_config();
  EXPECT_THROW(train(c, sine_windows(4, 5, 2, 1)), std::invalid_argument);
}
