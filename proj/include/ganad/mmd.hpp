#pragma once

#include "ganad/kernels.hpp"

#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace ganad {

/// RBF kernel exp(-|a - b|^2 / (2 sigma^2)). An empty bandwidth selects the median
/// heuristic on the pooled samples.
struct KernelConfig {
  std::optional<double> bandwidth;

  static KernelConfig median_heuristic() { return {}; }
  static KernelConfig fixed(double sigma);
};

/// Row-major flattening of an L x n sequence into an L*n vector.
VectorXd flatten(const MatrixXd& sequence);
std::vector<VectorXd> flatten_all(std::span<const MatrixXd> sequences);

/// Median of the non-zero pairwise Euclidean distances; 1.0 when all points coincide.
double median_heuristic(std::span<const VectorXd> samples,
                        kernels::Backend backend = kernels::Backend::parallel);

/// Unbiased three-term MMD^2 estimate between a generated set and a reference set.
double mmd_unbiased(std::span<const VectorXd> generated, std::span<const VectorXd> reference,
                    const KernelConfig& kernel = {}, kernels::Backend backend = kernels::Backend::parallel);
double mmd_unbiased(std::span<const MatrixXd> generated, std::span<const MatrixXd> reference,
                    const KernelConfig& kernel = {}, kernels::Backend backend = kernels::Backend::parallel);

/// Same estimator with an arbitrary kernel function.
double mmd_unbiased(std::span<const VectorXd> generated, std::span<const VectorXd> reference,
                    const std::function<double(const VectorXd&, const VectorXd&)>& kernel);

}  // namespace ganad
