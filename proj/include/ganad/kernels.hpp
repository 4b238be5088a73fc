#pragma once

// Batch kernels in two flavours:
//   serial::  one sequence (or row) at a time, plain loops. Kept as the reference the
//             parallel versions are tested and benchmarked against.
//   omp::     fixed-size chunks processed as batched matrix products, chunks spread over
//             OpenMP threads. Partial results are reduced in chunk order, so the output
//             does not depend on the thread count.

#include "ganad/lstm.hpp"

#include <functional>
#include <span>
#include <vector>

namespace ganad::kernels {

enum class Backend { serial, parallel };

inline constexpr Index kChunkSize = 16;

/// Sets the OpenMP worker count (n < 1 leaves the runtime default).
void set_workers(int n);
int workers();

/// Loss over all outputs of a batch; fills dLoss/dOutputs (one matrix per sequence).
using BatchLoss = std::function<double(std::span<const MatrixXd> outputs, std::vector<MatrixXd>& grads)>;

struct BatchGradient {
  double loss = 0.0;
  GradientSet params;            // summed over sequences
  std::vector<MatrixXd> inputs;  // per sequence
};

namespace serial {
std::vector<MatrixXd> forward(const StackedLstm& net, std::span<const MatrixXd> inputs);
BatchGradient gradient(const StackedLstm& net, std::span<const MatrixXd> inputs, const BatchLoss& loss,
                       bool want_params, bool want_inputs);
/// Sum of exp(-|a_i - b_j|^2 / (2 bw^2)); `exclude_diagonal` skips i == j (a and b the same set).
double rbf_sum(std::span<const VectorXd> a, std::span<const VectorXd> b, double bandwidth, bool exclude_diagonal);
/// Distances |x_i - x_j| for i < j, row-major over i.
std::vector<double> pairwise_distances(std::span<const VectorXd> x);
}  // namespace serial

namespace omp {
std::vector<MatrixXd> forward(const StackedLstm& net, std::span<const MatrixXd> inputs);
BatchGradient gradient(const StackedLstm& net, std::span<const MatrixXd> inputs, const BatchLoss& loss,
                       bool want_params, bool want_inputs);
double rbf_sum(std::span<const VectorXd> a, std::span<const VectorXd> b, double bandwidth, bool exclude_diagonal);
std::vector<double> pairwise_distances(std::span<const VectorXd> x);
}  // namespace omp

std::vector<MatrixXd> forward(Backend backend, const StackedLstm& net, std::span<const MatrixXd> inputs);
BatchGradient gradient(Backend backend, const StackedLstm& net, std::span<const MatrixXd> inputs,
                       const BatchLoss& loss, bool want_params, bool want_inputs);
double rbf_sum(Backend backend, std::span<const VectorXd> a, std::span<const VectorXd> b, double bandwidth,
               bool exclude_diagonal);
std::vector<double> pairwise_distances(Backend backend, std::span<const VectorXd> x);

}  // namespace ganad::kernels
