#pragma once

// Latent-space inversion: find Z whose generated sequence G(Z) best matches a test
// window, by gradient descent on 1 - similarity(X, G(Z)) through the frozen generator.

#include "ganad/gan.hpp"

#include <span>
#include <vector>

namespace ganad {

struct InversionConfig {
  Index max_iterations = 200;
  /// Largest step tried along the search direction, the gradient -dEr/dZ rescaled by running
  /// first and second moments (Adam). The step adapts between iterations and is halved up to
  /// `max_halvings` times whenever a trial does not lower the error.
  double learning_rate = 0.5;
  Index max_halvings = 10;
  Index restarts = 3;
  double tolerance = 1e-3;
  std::uint64_t seed = 0;

  void validate() const;
};

struct InversionResult {
  MatrixXd latent;          // L x latent_dim
  MatrixXd reconstruction;  // G(latent), L x features
  double error = 0.0;       // 1 - similarity(X, reconstruction)
  Index iterations = 0;     // descent iterations of the returned restart
  Index restarts_run = 0;
  std::vector<double> trace;  // error after each accepted step of the returned restart
};

/// Mean over columns of the Pearson correlation between matching columns of X and Y.
/// A column that is constant in either input contributes 0. Needs at least two rows.
double similarity(const MatrixXd& x, const MatrixXd& y);

/// d similarity / d Y.
MatrixXd similarity_gradient(const MatrixXd& x, const MatrixXd& y);

/// Er = 1 - similarity(x, y), in [0, 2].
inline double inversion_error(const MatrixXd& x, const MatrixXd& y) { return 1.0 - similarity(x, y); }

/// Best-of-restarts descent for a single window. Each restart draws a fresh standard-normal
/// Z from a generator seeded with `config.seed`; a restart whose error turns non-finite is
/// abandoned. Throws DivergenceError when every restart diverged.
InversionResult invert(const Generator& gen, const MatrixXd& window, const InversionConfig& config);

/// Seed used for window `index` of a batch.
inline std::uint64_t window_seed(std::uint64_t seed, std::size_t index) { return mix_seed(seed, 5000 + index); }

/// Inverts every window, window i with seed window_seed(config.seed, i).
///   serial:   loops over `invert`.
///   parallel: windows advance in lock-step chunks (one batched forward/backward per
///             iteration, one batched forward per halving round), chunks over OpenMP threads.
std::vector<InversionResult> invert_batch(const Generator& gen, std::span<const MatrixXd> windows,
                                          const InversionConfig& config,
                                          kernels::Backend backend = kernels::Backend::parallel);

/// Per-timestep residual sum_i |x_t,i - recon_t,i|.
VectorXd residual(const MatrixXd& x, const MatrixXd& reconstruction);

}  // namespace ganad
