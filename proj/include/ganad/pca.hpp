#pragma once

#include "ganad/common.hpp"

#include <nlohmann/json_fwd.hpp>

namespace ganad {

/// Principal components of normal data.
///
/// `loadings` is n x m: each row is a unit-norm principal direction, rows ordered by
/// descending eigenvalue. Projection is (X - mean) * loadings^T.
struct PcaModel {
  VectorXd mean;
  MatrixXd loadings;
  VectorXd eigenvalues;
  double total_variance = 0.0;

  Index n_components() const { return loadings.rows(); }
  Index n_features() const { return mean.size(); }
};

/// Eigen-decomposition of a symmetric matrix: `vectors.col(i)` pairs with `values(i)`,
/// sorted by descending eigenvalue.
struct SymmetricEigen {
  VectorXd values;
  MatrixXd vectors;
};

/// Cyclic Jacobi rotations, sweeping until the off-diagonal norm falls below
/// `tolerance` relative to the Frobenius norm.
SymmetricEigen jacobi_eigen(const MatrixXd& symmetric, double tolerance = 1e-15, int max_sweeps = 100);

MatrixXd sample_covariance(const MatrixXd& data);

/// Fits on an N x m data matrix (N >= 2). The largest-magnitude entry of each component is
/// made positive.
PcaModel fit_pca(const MatrixXd& data, Index n_components);

MatrixXd project(const PcaModel& model, const MatrixXd& x);

/// Maps PC scores back to the data space: mean + scores * loadings.
MatrixXd reconstruct(const PcaModel& model, const MatrixXd& scores);

/// eigenvalue_i / total_variance; all zero when the data had no variance.
VectorXd variance_ratios(const PcaModel& model);

/// Per-row squared distance between the centered row and its rank-n reconstruction.
VectorXd spe(const PcaModel& model, const MatrixXd& x);

void to_json(nlohmann::json& j, const PcaModel& model);
void from_json(const nlohmann::json& j, PcaModel& model);

}  // namespace ganad
