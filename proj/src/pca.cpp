#include "ganad/pca.hpp"

#include "json_eigen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace ganad {

SymmetricEigen jacobi_eigen(const MatrixXd& symmetric, double tolerance, int max_sweeps) {
  if (symmetric.rows() != symmetric.cols()) throw std::invalid_argument("matrix must be square");
  const Index n = symmetric.rows();
  MatrixXd a = 0.5 * (symmetric + symmetric.transpose());
  MatrixXd v = MatrixXd::Identity(n, n);
  const double scale = std::max(a.norm(), 1e-300);

  auto off_norm = [&] {
    double s = 0.0;
    for (Index p = 0; p < n; ++p)
      for (Index q = p + 1; q < n; ++q) s += 2.0 * a(p, q) * a(p, q);
    return std::sqrt(s);
  };

  for (int sweep = 0; sweep < max_sweeps && off_norm() > tolerance * scale; ++sweep) {
    for (Index p = 0; p < n - 1; ++p) {
      for (Index q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        // Rotation angle zeroing a(p, q) (Golub & Van Loan, symmetric Schur).
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (Index k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Index k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (Index k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index i, Index j) { return a(i, i) > a(j, j); });
  SymmetricEigen out{VectorXd(n), MatrixXd(n, n)};
  for (Index i = 0; i < n; ++i) {
    out.values(i) = a(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(i)]);
    out.vectors.col(i) = v.col(order[static_cast<std::size_t>(i)]);
  }
  return out;
}

MatrixXd sample_covariance(const MatrixXd& data) {
  if (data.rows() < 2) throw std::invalid_argument("covariance needs at least two rows");
  const MatrixXd centered = data.rowwise() - data.colwise().mean();
  return (centered.transpose() * centered) / static_cast<double>(data.rows() - 1);
}

PcaModel fit_pca(const MatrixXd& data, Index n_components) {
  if (data.rows() < 2) throw std::invalid_argument("PCA needs at least two rows");
  if (n_components < 1 || n_components > data.cols())
    throw std::invalid_argument("n_components must be in [1, " + std::to_string(data.cols()) + "]");

  const auto eig = jacobi_eigen(sample_covariance(data));
  PcaModel model;
  model.mean = data.colwise().mean().transpose();
  model.loadings.resize(n_components, data.cols());
  model.eigenvalues.resize(n_components);
  model.total_variance = eig.values.cwiseMax(0.0).sum();
  for (Index k = 0; k < n_components; ++k) {
    VectorXd dir = eig.vectors.col(k);
    Index largest = 0;
    dir.cwiseAbs().maxCoeff(&largest);
    if (dir(largest) < 0.0) dir = -dir;
    model.loadings.row(k) = dir.transpose();
    model.eigenvalues(k) = std::max(eig.values(k), 0.0);
  }
  return model;
}

namespace {

void check_columns(const PcaModel& model, const MatrixXd& x) {
  if (x.cols() != model.n_features())
    throw std::invalid_argument("data has " + std::to_string(x.cols()) + " columns, model expects " +
                                std::to_string(model.n_features()));
}

}  // namespace

MatrixXd project(const PcaModel& model, const MatrixXd& x) {
  check_columns(model, x);
  return (x.rowwise() - model.mean.transpose()) * model.loadings.transpose();
}

MatrixXd reconstruct(const PcaModel& model, const MatrixXd& scores) {
  if (scores.cols() != model.n_components()) throw std::invalid_argument("score width mismatch");
  return (scores * model.loadings).rowwise() + model.mean.transpose();
}

VectorXd variance_ratios(const PcaModel& model) {
  if (model.total_variance <= 0.0) return VectorXd::Zero(model.n_components());
  return model.eigenvalues / model.total_variance;
}

VectorXd spe(const PcaModel& model, const MatrixXd& x) {
  check_columns(model, x);
  const MatrixXd centered = x.rowwise() - model.mean.transpose();
  const MatrixXd residual = centered - (centered * model.loadings.transpose()) * model.loadings;
  return residual.rowwise().squaredNorm();
}

void to_json(nlohmann::json& j, const PcaModel& model) {
  j = nlohmann::json{{"mean", vector_to_json(model.mean)},
                     {"loadings", matrix_to_json(model.loadings)},
                     {"eigenvalues", vector_to_json(model.eigenvalues)},
                     {"total_variance", model.total_variance}};
}

void from_json(const nlohmann::json& j, PcaModel& model) {
  model.mean = vector_from_json(j.at("mean"));
  model.loadings = matrix_from_json(j.at("loadings"));
  model.eigenvalues = vector_from_json(j.at("eigenvalues"));
  model.total_variance = j.at("total_variance").get<double>();
  if (model.loadings.cols() != model.mean.size() || model.loadings.rows() != model.eigenvalues.size())
    throw std::runtime_error("inconsistent PCA model shapes");
}

}  // namespace ganad
