#pragma once

#include "ganad/common.hpp"

#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <string_view>

namespace ganad {

enum class OptimizerRule { adam, sgd };

std::string_view to_string(OptimizerRule rule);
OptimizerRule optimizer_rule_from_string(std::string_view name);

struct OptimizerConfig {
  OptimizerRule rule = OptimizerRule::adam;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Step counter and Adam moment accumulators for one flat parameter vector.
struct OptimizerState {
  OptimizerConfig config;
  std::int64_t step = 0;
  VectorXd first_moment;
  VectorXd second_moment;
};

OptimizerState make_optimizer(const OptimizerConfig& config, Index parameter_count);

/// sgd: p -= lr * g.  adam: bias-corrected moments, p -= lr * m_hat / (sqrt(v_hat) + eps).
/// Throws DivergenceError on non-finite gradients, leaving `params` and `state` untouched.
void optimizer_step(VectorXd& params, const VectorXd& grads, OptimizerState& state);

/// Rescales `grads` so its Euclidean norm is at most `max_norm`; returns the norm before scaling.
double clip_global_norm(VectorXd& grads, double max_norm);

void to_json(nlohmann::json& j, const OptimizerState& state);
void from_json(const nlohmann::json& j, OptimizerState& state);

}  // namespace ganad
