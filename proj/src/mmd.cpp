#include "ganad/mmd.hpp"

#include "ganad/series.hpp"

#include <stdexcept>

namespace ganad {

KernelConfig KernelConfig::fixed(double sigma) {
  if (!(sigma > 0.0)) throw std::invalid_argument("kernel bandwidth must be positive");
  return KernelConfig{sigma};
}

VectorXd flatten(const MatrixXd& sequence) {
  VectorXd out(sequence.size());
  Index k = 0;
  for (Index r = 0; r < sequence.rows(); ++r)
    for (Index c = 0; c < sequence.cols(); ++c) out(k++) = sequence(r, c);
  return out;
}

std::vector<VectorXd> flatten_all(std::span<const MatrixXd> sequences) {
  std::vector<VectorXd> out;
  out.reserve(sequences.size());
  for (const auto& s : sequences) out.push_back(flatten(s));
  return out;
}

double median_heuristic(std::span<const VectorXd> samples, kernels::Backend backend) {
  if (samples.size() < 2) throw std::invalid_argument("median heuristic needs at least two samples");
  auto distances = kernels::pairwise_distances(backend, samples);
  std::erase_if(distances, [](double d) { return d == 0.0; });
  if (distances.empty()) return 1.0;
  return median_inplace(distances);
}

namespace {

void check_sets(std::span<const VectorXd> generated, std::span<const VectorXd> reference) {
  if (generated.size() < 2 || reference.size() < 2)
    throw std::invalid_argument("MMD needs at least two samples in each set");
  const Index dim = generated.front().size();
  for (const auto& g : generated)
    if (g.size() != dim) throw std::invalid_argument("sample length mismatch");
  for (const auto& r : reference)
    if (r.size() != dim) throw std::invalid_argument("sample length mismatch");
}

}  // namespace

double mmd_unbiased(std::span<const VectorXd> generated, std::span<const VectorXd> reference,
                    const KernelConfig& kernel, kernels::Backend backend) {
  check_sets(generated, reference);
  double sigma = 0.0;
  if (kernel.bandwidth) {
    sigma = *kernel.bandwidth;
  } else {
    std::vector<VectorXd> pooled(generated.begin(), generated.end());
    pooled.insert(pooled.end(), reference.begin(), reference.end());
    sigma = median_heuristic(pooled, backend);
  }
  const auto n = static_cast<double>(generated.size());
  const auto m = static_cast<double>(reference.size());
  const double gg = kernels::rbf_sum(backend, generated, generated, sigma, true);
  const double gr = kernels::rbf_sum(backend, generated, reference, sigma, false);
  const double rr = kernels::rbf_sum(backend, reference, reference, sigma, true);
  return gg / (n * (n - 1.0)) - 2.0 * gr / (m * n) + rr / (m * (m - 1.0));
}

double mmd_unbiased(std::span<const MatrixXd> generated, std::span<const MatrixXd> reference,
                    const KernelConfig& kernel, kernels::Backend backend) {
  const auto g = flatten_all(generated);
  const auto r = flatten_all(reference);
  return mmd_unbiased(g, r, kernel, backend);
}

double mmd_unbiased(std::span<const VectorXd> generated, std::span<const VectorXd> reference,
                    const std::function<double(const VectorXd&, const VectorXd&)>& kernel) {
  check_sets(generated, reference);
  const auto n = generated.size();
  const auto m = reference.size();
  double gg = 0.0, gr = 0.0, rr = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) gg += kernel(generated[i], generated[j]);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) gr += kernel(generated[i], reference[j]);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j)
      if (i != j) rr += kernel(reference[i], reference[j]);
  const auto dn = static_cast<double>(n);
  const auto dm = static_cast<double>(m);
  return gg / (dn * (dn - 1.0)) - 2.0 * gr / (dm * dn) + rr / (dm * (dm - 1.0));
}

}  // namespace ganad
