#include "ganad/optimizer.hpp"

#include "json_eigen.hpp"

#include <cmath>
#include <stdexcept>

namespace ganad {

std::string_view to_string(OptimizerRule rule) { return rule == OptimizerRule::adam ? "adam" : "sgd"; }

OptimizerRule optimizer_rule_from_string(std::string_view name) {
  if (name == "adam") return OptimizerRule::adam;
  if (name == "sgd") return OptimizerRule::sgd;
  throw std::invalid_argument("unknown optimizer: " + std::string(name));
}

OptimizerState make_optimizer(const OptimizerConfig& config, Index parameter_count) {
  if (!(config.learning_rate > 0.0)) throw std::invalid_argument("learning rate must be positive");
  OptimizerState state;
  state.config = config;
  if (config.rule == OptimizerRule::adam) {
    state.first_moment = VectorXd::Zero(parameter_count);
    state.second_moment = VectorXd::Zero(parameter_count);
  }
  return state;
}

void optimizer_step(VectorXd& params, const VectorXd& grads, OptimizerState& state) {
  if (params.size() != grads.size()) throw std::invalid_argument("gradient/parameter size mismatch");
  if (!grads.allFinite()) throw DivergenceError("diverged: non-finite gradient");
  const auto& cfg = state.config;
  if (cfg.rule == OptimizerRule::sgd) {
    params -= cfg.learning_rate * grads;
    ++state.step;
    return;
  }
  if (state.first_moment.size() != params.size() || state.second_moment.size() != params.size())
    throw std::invalid_argument("optimizer state does not match parameters");
  ++state.step;
  state.first_moment = cfg.beta1 * state.first_moment + (1.0 - cfg.beta1) * grads;
  state.second_moment = cfg.beta2 * state.second_moment + (1.0 - cfg.beta2) * grads.cwiseAbs2();
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  params.array() -= cfg.learning_rate * (state.first_moment.array() / c1) /
                    ((state.second_moment.array() / c2).sqrt() + cfg.epsilon);
}

double clip_global_norm(VectorXd& grads, double max_norm) {
  const double norm = grads.norm();
  if (max_norm > 0.0 && norm > max_norm) grads *= max_norm / norm;
  return norm;
}

void to_json(nlohmann::json& j, const OptimizerState& state) {
  j = nlohmann::json{{"rule", std::string(to_string(state.config.rule))},
                     {"learning_rate", state.config.learning_rate},
                     {"beta1", state.config.beta1},
                     {"beta2", state.config.beta2},
                     {"epsilon", state.config.epsilon},
                     {"step", state.step},
                     {"first_moment", vector_to_json(state.first_moment)},
                     {"second_moment", vector_to_json(state.second_moment)}};
}

void from_json(const nlohmann::json& j, OptimizerState& state) {
  state.config.rule = optimizer_rule_from_string(j.at("rule").get<std::string>());
  state.config.learning_rate = j.at("learning_rate").get<double>();
  state.config.beta1 = j.at("beta1").get<double>();
  state.config.beta2 = j.at("beta2").get<double>();
  state.config.epsilon = j.at("epsilon").get<double>();
  state.step = j.at("step").get<std::int64_t>();
  state.first_moment = vector_from_json(j.at("first_moment"));
  state.second_moment = vector_from_json(j.at("second_moment"));
}

}  // namespace ganad
