#pragma once

// Stacked LSTM with a linear output head, written out by hand so that the forward pass,
// backpropagation through time and the finite-difference check all live in one place.
//
// Per layer and timestep (column vectors, h = hidden size):
//   a = Wx x_t + Wh h_{t-1} + b,            a split as [a_i; a_f; a_o; a_g]
//   i = sigma(a_i)  f = sigma(a_f)  o = sigma(a_o)  g = tanh(a_g)
//   c_t = f * c_{t-1} + i * g
//   h_t = o * tanh(c_t)
// and the head y_t = act(Wy h_t + by) on the top layer. Pre-activations are clamped to
// [-kPreActivationClamp, kPreActivationClamp]; the clamp has zero derivative outside.

#include "ganad/common.hpp"

#include <nlohmann/json_fwd.hpp>

#include <functional>
#include <span>
#include <string_view>
#include <vector>

namespace ganad {

inline constexpr double kPreActivationClamp = 50.0;

enum class Activation { identity, tanh, sigmoid };

std::string_view to_string(Activation a);
Activation activation_from_string(std::string_view name);

/// Flat gradient vector laid out exactly like StackedLstm::parameters().
using GradientSet = VectorXd;

class StackedLstm {
 public:
  using MatrixMap = Eigen::Map<MatrixXd>;
  using ConstMatrixMap = Eigen::Map<const MatrixXd>;
  using VectorMap = Eigen::Map<VectorXd>;
  using ConstVectorMap = Eigen::Map<const VectorXd>;

  StackedLstm() = default;
  StackedLstm(Index input_size, std::vector<Index> hidden_sizes, Index output_size,
              Activation output_activation);

  Index input_size() const { return input_size_; }
  Index output_size() const { return output_size_; }
  Index depth() const { return static_cast<Index>(hidden_.size()); }
  Index hidden_size(Index layer) const { return hidden_[static_cast<std::size_t>(layer)]; }
  const std::vector<Index>& hidden_sizes() const { return hidden_; }
  Index layer_input_size(Index layer) const {
    return layer == 0 ? input_size_ : hidden_size(layer - 1);
  }
  Activation output_activation() const { return activation_; }

  Index parameter_count() const { return params_.size(); }
  const VectorXd& parameters() const { return params_; }
  VectorXd& parameters() { return params_; }

  // Views into a flat vector with this network's layout: `parameters()` or a GradientSet.
  // Gate blocks are stacked i, f, o, g.
  ConstMatrixMap input_weights(Index layer, const VectorXd& flat) const;
  ConstMatrixMap recurrent_weights(Index layer, const VectorXd& flat) const;
  ConstVectorMap biases(Index layer, const VectorXd& flat) const;
  ConstMatrixMap projection_weights(const VectorXd& flat) const;
  ConstVectorMap projection_bias(const VectorXd& flat) const;
  MatrixMap input_weights(Index layer, VectorXd& flat) const;
  MatrixMap recurrent_weights(Index layer, VectorXd& flat) const;
  VectorMap biases(Index layer, VectorXd& flat) const;
  MatrixMap projection_weights(VectorXd& flat) const;
  VectorMap projection_bias(VectorXd& flat) const;

  ConstMatrixMap input_weights(Index layer) const { return input_weights(layer, params_); }
  ConstMatrixMap recurrent_weights(Index layer) const { return recurrent_weights(layer, params_); }
  ConstVectorMap biases(Index layer) const { return biases(layer, params_); }
  ConstMatrixMap projection_weights() const { return projection_weights(params_); }
  ConstVectorMap projection_bias() const { return projection_bias(params_); }
  MatrixMap input_weights(Index layer) { return input_weights(layer, params_); }
  MatrixMap recurrent_weights(Index layer) { return recurrent_weights(layer, params_); }
  VectorMap biases(Index layer) { return biases(layer, params_); }
  MatrixMap projection_weights() { return projection_weights(params_); }
  VectorMap projection_bias() { return projection_bias(params_); }

  /// Weights uniform in [-scale, scale], forget-gate biases `forget_bias`, other biases 0.
  void initialize(std::uint64_t seed, double scale = 0.08, double forget_bias = 1.0);

  bool same_shape(const StackedLstm& other) const;

 private:
  struct LayerOffsets {
    Index input_weights;
    Index recurrent_weights;
    Index biases;
  };

  Index input_size_ = 0;
  Index output_size_ = 0;
  std::vector<Index> hidden_;
  Activation activation_ = Activation::identity;
  std::vector<LayerOffsets> offsets_;
  Index projection_offset_ = 0;
  Index projection_bias_offset_ = 0;
  VectorXd params_;
};

/// Activations kept by `forward` for backpropagation. Matrices hold one column per
/// (timestep, sequence) pair, column index t * batch + b.
struct LstmCache {
  Index batch = 0;
  Index steps = 0;
  std::vector<MatrixXd> layer_inputs;  // d_l x (steps * batch)
  std::vector<MatrixXd> pre;           // 4h x (steps * batch), clamped pre-activations
  std::vector<MatrixXd> gates;         // 4h x (steps * batch), i f o g after nonlinearity
  std::vector<MatrixXd> cells;         // h x (steps * batch)
  std::vector<MatrixXd> hidden;        // h x (steps * batch)
  MatrixXd head_pre;                   // o x (steps * batch)
  MatrixXd outputs;                    // o x (steps * batch)
};

/// Runs a batch of equal-length sequences (each steps x input_size) from zero state and
/// returns one steps x output_size matrix per sequence.
std::vector<MatrixXd> forward(const StackedLstm& net, std::span<const MatrixXd> batch,
                              LstmCache* cache = nullptr);
MatrixXd forward(const StackedLstm& net, const MatrixXd& sequence, LstmCache* cache = nullptr);

struct LstmGradients {
  GradientSet params;           // summed over the batch; empty when not requested
  std::vector<MatrixXd> inputs;  // per sequence, steps x input_size; empty when not requested
};

/// Exact BPTT for the scalar loss whose partial derivatives with respect to the outputs
/// are `output_grads` (one steps x output_size matrix per sequence).
LstmGradients backward(const StackedLstm& net, const LstmCache& cache,
                       std::span<const MatrixXd> output_grads, bool want_params = true,
                       bool want_inputs = false);

/// Scalar loss over a batch of network outputs. Writes dLoss/dOutputs into `grads`
/// (resized by the callee) when it is non-null.
using OutputLoss =
    std::function<double(std::span<const MatrixXd> outputs, std::vector<MatrixXd>* grads)>;

struct GradCheckResult {
  double max_relative_error = 0.0;
  double max_param_error = 0.0;
  double max_input_error = 0.0;
};

/// Compares BPTT gradients against central differences with step `eps` over every
/// parameter (and every input entry when `check_inputs`). Relative error per entry is
/// |analytic - numeric| / max(|analytic|, |numeric|, 1e-8).
GradCheckResult grad_check(const StackedLstm& net, std::span<const MatrixXd> inputs,
                           const OutputLoss& loss, double eps = 1e-5, bool check_inputs = false);

void to_json(nlohmann::json& j, const StackedLstm& net);
void from_json(const nlohmann::json& j, StackedLstm& net);

}  // namespace ganad
