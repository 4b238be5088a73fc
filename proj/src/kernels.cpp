#include "ganad/kernels.hpp"

#include <omp.h>

#include <cmath>
#include <stdexcept>

namespace ganad::kernels {

void set_workers(int n) {
  if (n > 0) omp_set_num_threads(n);
}

int workers() { return omp_get_max_threads(); }

namespace serial {

std::vector<MatrixXd> forward(const StackedLstm& net, std::span<const MatrixXd> inputs) {
  std::vector<MatrixXd> out;
  out.reserve(inputs.size());
  for (const auto& x : inputs) out.push_back(ganad::forward(net, x));
  return out;
}

BatchGradient gradient(const StackedLstm& net, std::span<const MatrixXd> inputs, const BatchLoss& loss,
                       bool want_params, bool want_inputs) {
  std::vector<LstmCache> caches(inputs.size());
  std::vector<MatrixXd> outputs;
  outputs.reserve(inputs.size());
  for (std::size_t i = 0; i < inputs.size(); ++i) outputs.push_back(ganad::forward(net, inputs[i], &caches[i]));

  std::vector<MatrixXd> grads;
  BatchGradient result;
  result.loss = loss(outputs, grads);
  if (grads.size() != inputs.size()) throw std::logic_error("loss returned the wrong number of gradients");
  if (want_params) result.params = GradientSet::Zero(net.parameter_count());
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    auto g = backward(net, caches[i], std::span<const MatrixXd>(&grads[i], 1), want_params, want_inputs);
    if (want_params) result.params += g.params;
    if (want_inputs) result.inputs.push_back(std::move(g.inputs.front()));
  }
  return result;
}

double rbf_sum(std::span<const VectorXd> a, std::span<const VectorXd> b, double bandwidth, bool exclude_diagonal) {
  const double scale = 1.0 / (2.0 * bandwidth * bandwidth);
  double total = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) {
      if (exclude_diagonal && i == j) continue;
      total += std::exp(-(a[i] - b[j]).squaredNorm() * scale);
    }
  return total;
}

std::vector<double> pairwise_distances(std::span<const VectorXd> x) {
  std::vector<double> out;
  out.reserve(x.size() * (x.size() - 1) / 2);
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = i + 1; j < x.size(); ++j) out.push_back((x[i] - x[j]).norm());
  return out;
}

}  // namespace serial

namespace omp {

namespace {

struct Chunk {
  std::size_t begin;
  std::size_t end;
};

std::vector<Chunk> chunks_of(std::size_t n) {
  std::vector<Chunk> out;
  for (std::size_t b = 0; b < n; b += static_cast<std::size_t>(kChunkSize))
    out.push_back({b, std::min(n, b + static_cast<std::size_t>(kChunkSize))});
  return out;
}

}  // namespace

std::vector<MatrixXd> forward(const StackedLstm& net, std::span<const MatrixXd> inputs) {
  const auto chunks = chunks_of(inputs.size());
  std::vector<MatrixXd> out(inputs.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(chunks.size()); ++c) {
    const auto [begin, end] = chunks[static_cast<std::size_t>(c)];
    auto part = ganad::forward(net, inputs.subspan(begin, end - begin));
    for (std::size_t i = begin; i < end; ++i) out[i] = std::move(part[i - begin]);
  }
  return out;
}

BatchGradient gradient(const StackedLstm& net, std::span<const MatrixXd> inputs, const BatchLoss& loss,
                       bool want_params, bool want_inputs) {
  const auto chunks = chunks_of(inputs.size());
  const auto n_chunks = static_cast<std::ptrdiff_t>(chunks.size());
  std::vector<LstmCache> caches(chunks.size());
  std::vector<MatrixXd> outputs(inputs.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t c = 0; c < n_chunks; ++c) {
    const auto [begin, end] = chunks[static_cast<std::size_t>(c)];
    auto part = ganad::forward(net, inputs.subspan(begin, end - begin), &caches[static_cast<std::size_t>(c)]);
    for (std::size_t i = begin; i < end; ++i) outputs[i] = std::move(part[i - begin]);
  }

  std::vector<MatrixXd> grads;
  BatchGradient result;
  result.loss = loss(outputs, grads);
  if (grads.size() != inputs.size()) throw std::logic_error("loss returned the wrong number of gradients");

  std::vector<LstmGradients> partial(chunks.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t c = 0; c < n_chunks; ++c) {
    const auto [begin, end] = chunks[static_cast<std::size_t>(c)];
    partial[static_cast<std::size_t>(c)] =
        backward(net, caches[static_cast<std::size_t>(c)],
                 std::span<const MatrixXd>(grads).subspan(begin, end - begin), want_params, want_inputs);
  }

  if (want_params) {
    result.params = GradientSet::Zero(net.parameter_count());
    for (const auto& p : partial) result.params += p.params;
  }
  if (want_inputs) {
    result.inputs.reserve(inputs.size());
    for (auto& p : partial)
      for (auto& g : p.inputs) result.inputs.push_back(std::move(g));
  }
  return result;
}

double rbf_sum(std::span<const VectorXd> a, std::span<const VectorXd> b, double bandwidth, bool exclude_diagonal) {
  const double scale = 1.0 / (2.0 * bandwidth * bandwidth);
  std::vector<double> row_sums(a.size(), 0.0);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(a.size()); ++i) {
    const auto iu = static_cast<std::size_t>(i);
    double s = 0.0;
    for (std::size_t j = 0; j < b.size(); ++j) {
      if (exclude_diagonal && iu == j) continue;
      s += std::exp(-(a[iu] - b[j]).squaredNorm() * scale);
    }
    row_sums[iu] = s;
  }
  double total = 0.0;
  for (double s : row_sums) total += s;
  return total;
}

std::vector<double> pairwise_distances(std::span<const VectorXd> x) {
  const std::size_t n = x.size();
  std::vector<double> out(n * (n - 1) / 2);
#pragma omp parallel for schedule(dynamic, 8)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
    const auto iu = static_cast<std::size_t>(i);
    // Offset of row i in the packed upper triangle.
    std::size_t k = iu * n - iu * (iu + 1) / 2;
    for (std::size_t j = iu + 1; j < n; ++j) out[k++] = (x[iu] - x[j]).norm();
  }
  return out;
}

}  // namespace omp

std::vector<MatrixXd> forward(Backend backend, const StackedLstm& net, std::span<const MatrixXd> inputs) {
  return backend == Backend::serial ? serial::forward(net, inputs) : omp::forward(net, inputs);
}

BatchGradient gradient(Backend backend, const StackedLstm& net, std::span<const MatrixXd> inputs,
                       const BatchLoss& loss, bool want_params, bool want_inputs) {
  return backend == Backend::serial ? serial::gradient(net, inputs, loss, want_params, want_inputs)
                                    : omp::gradient(net, inputs, loss, want_params, want_inputs);
}

double rbf_sum(Backend backend, std::span<const VectorXd> a, std::span<const VectorXd> b, double bandwidth,
               bool exclude_diagonal) {
  return backend == Backend::serial ? serial::rbf_sum(a, b, bandwidth, exclude_diagonal)
                                    : omp::rbf_sum(a, b, bandwidth, exclude_diagonal);
}

std::vector<double> pairwise_distances(Backend backend, std::span<const VectorXd> x) {
  return backend == Backend::serial ? serial::pairwise_distances(x) : omp::pairwise_distances(x);
}

}  // namespace ganad::kernels
