#include "ganad/inversion.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>

namespace ganad {

void InversionConfig::validate() const {
  if (max_iterations < 0) throw std::invalid_argument("max_iterations must be non-negative");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("inversion learning rate must be positive");
  if (max_halvings < 0) throw std::invalid_argument("max_halvings must be non-negative");
  if (restarts < 1) throw std::invalid_argument("restarts must be at least 1");
  if (!(tolerance >= 0.0)) throw std::invalid_argument("tolerance must be non-negative");
}

namespace {

// Columns whose centered norm is below this count as constant.
constexpr double kConstantColumn = 1e-12;

void check_pair(const MatrixXd& x, const MatrixXd& y) {
  if (x.rows() != y.rows() || x.cols() != y.cols()) throw std::invalid_argument("similarity shape mismatch");
  if (x.rows() < 2) throw std::invalid_argument("similarity needs at least two timesteps");
}

}  // namespace

double similarity(const MatrixXd& x, const MatrixXd& y) {
  check_pair(x, y);
  double total = 0.0;
  for (Index j = 0; j < x.cols(); ++j) {
    const VectorXd a = x.col(j).array() - x.col(j).mean();
    const VectorXd b = y.col(j).array() - y.col(j).mean();
    const double na = a.norm();
    const double nb = b.norm();
    if (na < kConstantColumn || nb < kConstantColumn) continue;
    total += std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
  }
  return total / static_cast<double>(x.cols());
}

MatrixXd similarity_gradient(const MatrixXd& x, const MatrixXd& y) {
  check_pair(x, y);
  MatrixXd grad = MatrixXd::Zero(y.rows(), y.cols());
  const double inv_cols = 1.0 / static_cast<double>(x.cols());
  for (Index j = 0; j < x.cols(); ++j) {
    const VectorXd a = x.col(j).array() - x.col(j).mean();
    const VectorXd b = y.col(j).array() - y.col(j).mean();
    const double na = a.norm();
    const double nb = b.norm();
    if (na < kConstantColumn || nb < kConstantColumn) continue;
    const double r = a.dot(b) / (na * nb);
    // dr/dy_t = a_t / (|a||b|) - r b_t / |b|^2 (the centering terms cancel since sum(a) = 0).
    grad.col(j) = inv_cols * (a / (na * nb) - (r / (nb * nb)) * b);
  }
  return grad;
}

VectorXd residual(const MatrixXd& x, const MatrixXd& reconstruction) {
  if (x.rows() != reconstruction.rows() || x.cols() != reconstruction.cols())
    throw std::invalid_argument("residual shape mismatch");
  return (x - reconstruction).cwiseAbs().rowwise().sum();
}

namespace {

void check_window(const Generator& gen, const MatrixXd& window) {
  if (window.cols() != gen.features())
    throw std::invalid_argument("window has " + std::to_string(window.cols()) + " features, generator produces " +
                                std::to_string(gen.features()));
  if (window.rows() < 2) throw std::invalid_argument("inversion needs windows of at least two timesteps");
}

MatrixXd draw_latent(const Generator& gen, Index steps, std::mt19937_64& rng) {
  return sample_latent(1, steps, gen.latent_dim(), rng).front();
}

// Adam-style scaling of the raw gradient into a search direction. The line search along it
// stays monotone; if momentum points uphill the unsmoothed scaled gradient is used.
struct Preconditioner {
  MatrixXd m;
  MatrixXd v;
  int t = 0;

  void reset(Index rows, Index cols) {
    m = MatrixXd::Zero(rows, cols);
    v = MatrixXd::Zero(rows, cols);
    t = 0;
  }

  MatrixXd direction(const MatrixXd& g) {
    constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    ++t;
    m = b1 * m + (1.0 - b1) * g;
    v = b2 * v + (1.0 - b2) * g.cwiseProduct(g);
    const Eigen::ArrayXXd scale = (v.array() / (1.0 - std::pow(b2, t))).sqrt() + eps;
    MatrixXd d = (m.array() / (1.0 - std::pow(b1, t))) / scale;
    if (d.cwiseProduct(g).sum() <= 0.0) d = g.array() / scale;
    return d;
  }
};

}  // namespace

InversionResult invert(const Generator& gen, const MatrixXd& window, const InversionConfig& config) {
  config.validate();
  check_window(gen, window);
  const auto& net = gen.net;
  std::mt19937_64 rng(config.seed);
  std::optional<InversionResult> best;
  Index run = 0;

  for (Index r = 0; r < config.restarts; ++r) {
    ++run;
    MatrixXd z = draw_latent(gen, window.rows(), rng);
    LstmCache cache;
    MatrixXd y = forward(net, z, &cache);
    double err = inversion_error(window, y);
    if (!std::isfinite(err)) continue;

    InversionResult cur;
    double step = config.learning_rate;
    Preconditioner pre;
    pre.reset(z.rows(), z.cols());
    bool diverged = false;
    while (cur.iterations < config.max_iterations && err > config.tolerance) {
      const MatrixXd d_out = -similarity_gradient(window, y);
      const MatrixXd g = backward(net, cache, std::span<const MatrixXd>(&d_out, 1), false, true).inputs.front();
      if (!g.allFinite()) {
        diverged = true;
        break;
      }
      ++cur.iterations;
      const MatrixXd dir = pre.direction(g);
      bool accepted = false;
      double trial = std::min(2.0 * step, config.learning_rate);
      for (Index k = 0; k <= config.max_halvings; ++k, trial *= 0.5) {
        const MatrixXd z_trial = z - trial * dir;
        LstmCache trial_cache;
        MatrixXd y_trial = forward(net, z_trial, &trial_cache);
        const double e = inversion_error(window, y_trial);
        if (!std::isfinite(e)) {
          diverged = true;
          break;
        }
        if (e < err) {
          z = z_trial;
          y = std::move(y_trial);
          cache = std::move(trial_cache);
          err = e;
          step = trial;
          accepted = true;
          cur.trace.push_back(err);
          break;
        }
      }
      if (diverged || !accepted) break;
    }
    if (diverged) continue;

    cur.latent = std::move(z);
    cur.reconstruction = std::move(y);
    cur.error = err;
    if (!best || cur.error < best->error) best = std::move(cur);
    if (best->error <= config.tolerance) break;
  }
  if (!best) throw DivergenceError("inversion diverged in every restart");
  best->restarts_run = run;
  return *best;
}

namespace {

// One window's progress through the lock-step descent.
struct Lane {
  const MatrixXd* window = nullptr;
  std::mt19937_64 rng;
  Index restarts_started = 0;
  bool in_restart = false;
  bool done = false;
  MatrixXd z;
  MatrixXd y;
  double err = 0.0;
  double step = 0.0;
  double trial = 0.0;
  Preconditioner pre;
  MatrixXd dir;
  Index iterations = 0;
  std::vector<double> trace;
  std::optional<InversionResult> best;
};

std::vector<InversionResult> invert_lockstep(const Generator& gen, std::span<const MatrixXd> windows,
                                             std::size_t first_index, const InversionConfig& config) {
  const auto& net = gen.net;
  std::vector<Lane> lanes(windows.size());
  for (std::size_t i = 0; i < windows.size(); ++i) {
    lanes[i].window = &windows[i];
    lanes[i].rng.seed(window_seed(config.seed, first_index + i));
  }

  auto end_restart = [&](Lane& lane) {
    InversionResult cur;
    cur.latent = lane.z;
    cur.reconstruction = lane.y;
    cur.error = lane.err;
    cur.iterations = lane.iterations;
    cur.trace = std::move(lane.trace);
    lane.trace.clear();
    if (!lane.best || cur.error < lane.best->error) lane.best = std::move(cur);
    lane.in_restart = false;
    if (lane.best->error <= config.tolerance) lane.done = true;
  };

  auto batch_forward = [&](const std::vector<Lane*>& group, const std::vector<MatrixXd>& zs, LstmCache* cache) {
    (void)group;
    return forward(net, zs, cache);
  };

  while (true) {
    // Start fresh restarts until every unfinished lane is descending.
    while (true) {
      std::vector<Lane*> starting;
      for (auto& lane : lanes) {
        if (lane.done || lane.in_restart) continue;
        if (lane.restarts_started == config.restarts) {
          lane.done = true;
          continue;
        }
        lane.z = draw_latent(gen, lane.window->rows(), lane.rng);
        ++lane.restarts_started;
        starting.push_back(&lane);
      }
      if (starting.empty()) break;
      std::vector<MatrixXd> zs;
      for (auto* lane : starting) zs.push_back(lane->z);
      auto ys = batch_forward(starting, zs, nullptr);
      for (std::size_t k = 0; k < starting.size(); ++k) {
        Lane& lane = *starting[k];
        lane.y = std::move(ys[k]);
        lane.err = inversion_error(*lane.window, lane.y);
        lane.step = config.learning_rate;
        lane.pre.reset(lane.z.rows(), lane.z.cols());
        lane.iterations = 0;
        lane.trace.clear();
        lane.in_restart = std::isfinite(lane.err);
      }
    }

    std::vector<Lane*> descending;
    for (auto& lane : lanes) {
      if (!lane.in_restart) continue;
      if (lane.iterations < config.max_iterations && lane.err > config.tolerance) {
        descending.push_back(&lane);
      } else {
        end_restart(lane);
      }
    }
    if (descending.empty()) {
      if (std::all_of(lanes.begin(), lanes.end(), [](const Lane& l) { return l.done; })) break;
      continue;
    }

    std::vector<MatrixXd> zs;
    for (auto* lane : descending) zs.push_back(lane->z);
    LstmCache cache;
    const auto ys = batch_forward(descending, zs, &cache);
    std::vector<MatrixXd> d_out;
    for (std::size_t k = 0; k < descending.size(); ++k)
      d_out.push_back(-similarity_gradient(*descending[k]->window, ys[k]));
    const auto grads = backward(net, cache, d_out, false, true).inputs;

    std::vector<Lane*> searching;
    for (std::size_t k = 0; k < descending.size(); ++k) {
      Lane& lane = *descending[k];
      if (!grads[k].allFinite()) {
        lane.in_restart = false;
        continue;
      }
      ++lane.iterations;
      lane.dir = lane.pre.direction(grads[k]);
      lane.trial = std::min(2.0 * lane.step, config.learning_rate);
      searching.push_back(&lane);
    }

    for (Index h = 0; h <= config.max_halvings && !searching.empty(); ++h) {
      std::vector<MatrixXd> trial_z;
      for (std::size_t k = 0; k < searching.size(); ++k)
        trial_z.push_back(searching[k]->z - searching[k]->trial * searching[k]->dir);
      auto trial_y = batch_forward(searching, trial_z, nullptr);
      std::vector<Lane*> still;
      for (std::size_t k = 0; k < searching.size(); ++k) {
        Lane& lane = *searching[k];
        const double e = inversion_error(*lane.window, trial_y[k]);
        if (!std::isfinite(e)) {
          lane.in_restart = false;
        } else if (e < lane.err) {
          lane.z = std::move(trial_z[k]);
          lane.y = std::move(trial_y[k]);
          lane.err = e;
          lane.step = lane.trial;
          lane.trace.push_back(e);
        } else {
          lane.trial *= 0.5;
          still.push_back(&lane);
        }
      }
      searching = std::move(still);
    }
    // No decrease within the halving budget: the restart has stalled.
    for (auto* lane : searching) end_restart(*lane);
  }

  std::vector<InversionResult> out;
  out.reserve(lanes.size());
  for (auto& lane : lanes) {
    if (!lane.best) throw DivergenceError("inversion diverged in every restart");
    lane.best->restarts_run = lane.restarts_started;
    out.push_back(std::move(*lane.best));
  }
  return out;
}

}  // namespace

std::vector<InversionResult> invert_batch(const Generator& gen, std::span<const MatrixXd> windows,
                                          const InversionConfig& config, kernels::Backend backend) {
  config.validate();
  for (const auto& w : windows) check_window(gen, w);
  if (windows.empty()) return {};
  if (windows.front().rows() < 2) throw std::invalid_argument("windows too short");
  for (const auto& w : windows)
    if (w.rows() != windows.front().rows()) throw std::invalid_argument("windows must share their length");

  std::vector<InversionResult> out(windows.size());
  if (backend == kernels::Backend::serial) {
    for (std::size_t i = 0; i < windows.size(); ++i) {
      InversionConfig c = config;
      c.seed = window_seed(config.seed, i);
      out[i] = invert(gen, windows[i], c);
    }
    return out;
  }

  const auto chunk = static_cast<std::size_t>(kernels::kChunkSize);
  const auto n_chunks = static_cast<std::ptrdiff_t>((windows.size() + chunk - 1) / chunk);
  std::vector<std::string> errors(static_cast<std::size_t>(n_chunks));
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t c = 0; c < n_chunks; ++c) {
    const std::size_t begin = static_cast<std::size_t>(c) * chunk;
    const std::size_t end = std::min(windows.size(), begin + chunk);
    try {
      auto part = invert_lockstep(gen, windows.subspan(begin, end - begin), begin, config);
      for (std::size_t i = begin; i < end; ++i) out[i] = std::move(part[i - begin]);
    } catch (const std::exception& e) {
      errors[static_cast<std::size_t>(c)] = e.what();
    }
  }
  for (const auto& e : errors)
    if (!e.empty()) throw DivergenceError(e);
  return out;
}

}  // namespace ganad
