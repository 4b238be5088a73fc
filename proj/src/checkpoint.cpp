// Versioned JSON checkpoints for GanModel.

#include "ganad/gan.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <stdexcept>

namespace ganad {
namespace {

constexpr int kCheckpointVersion = 1;

nlohmann::json optimizer_config_json(const OptimizerConfig& c) {
  return {{"rule", std::string(to_string(c.rule))},
          {"learning_rate", c.learning_rate},
          {"beta1", c.beta1},
          {"beta2", c.beta2},
          {"epsilon", c.epsilon}};
}

OptimizerConfig optimizer_config_from(const nlohmann::json& j) {
  OptimizerConfig c;
  c.rule = optimizer_rule_from_string(j.at("rule").get<std::string>());
  c.learning_rate = j.at("learning_rate").get<double>();
  c.beta1 = j.at("beta1").get<double>();
  c.beta2 = j.at("beta2").get<double>();
  c.epsilon = j.at("epsilon").get<double>();
  return c;
}

nlohmann::json training_config_json(const TrainingConfig& c) {
  return {{"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"d_steps", c.d_steps},
          {"g_steps", c.g_steps},
          {"d_optimizer", optimizer_config_json(c.d_optimizer)},
          {"g_optimizer", optimizer_config_json(c.g_optimizer)},
          {"seed", c.seed},
          {"latent_dim", c.latent_dim},
          {"sequence_length", c.sequence_length},
          {"generator_depth", c.generator_depth},
          {"generator_hidden", c.generator_hidden},
          {"discriminator_depth", c.discriminator_depth},
          {"discriminator_hidden", c.discriminator_hidden},
          {"clip_norm", c.clip_norm},
          {"max_batches_per_epoch", c.max_batches_per_epoch},
          {"mmd_samples", c.mmd_samples}};
}

TrainingConfig training_config_from(const nlohmann::json& j) {
  TrainingConfig c;
  c.epochs = j.at("epochs").get<Index>();
  c.batch_size = j.at("batch_size").get<Index>();
  c.d_steps = j.at("d_steps").get<Index>();
  c.g_steps = j.at("g_steps").get<Index>();
  c.d_optimizer = optimizer_config_from(j.at("d_optimizer"));
  c.g_optimizer = optimizer_config_from(j.at("g_optimizer"));
  c.seed = j.at("seed").get<std::uint64_t>();
  c.latent_dim = j.at("latent_dim").get<Index>();
  c.sequence_length = j.at("sequence_length").get<Index>();
  c.generator_depth = j.at("generator_depth").get<Index>();
  c.generator_hidden = j.at("generator_hidden").get<Index>();
  c.discriminator_depth = j.at("discriminator_depth").get<Index>();
  c.discriminator_hidden = j.at("discriminator_hidden").get<Index>();
  c.clip_norm = j.at("clip_norm").get<double>();
  c.max_batches_per_epoch = j.at("max_batches_per_epoch").get<Index>();
  c.mmd_samples = j.at("mmd_samples").get<Index>();
  return c;
}

}  // namespace

void save_checkpoint(const GanModel& model, const std::filesystem::path& path) {
  nlohmann::json history = nlohmann::json::array();
  for (const auto& r : model.loss_history) history.push_back({r.d_loss, r.g_loss});
  nlohmann::json j{{"format", "ganad.checkpoint"},
                   {"version", kCheckpointVersion},
                   {"epoch", model.epochs_completed},
                   {"rng_epoch_stream", model.rng_epoch_stream},
                   {"config", training_config_json(model.config)},
                   {"generator", model.generator.net},
                   {"discriminator", model.discriminator.net},
                   {"generator_optimizer", model.g_state},
                   {"discriminator_optimizer", model.d_state},
                   {"loss_history", history},
                   {"mmd_history", model.mmd_history}};
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path.string());
  out << j.dump() << '\n';
}

GanModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("missing checkpoint: " + path.string());
  const auto j = nlohmann::json::parse(in);
  if (j.value("format", "") != "ganad.checkpoint") throw std::runtime_error("not a checkpoint: " + path.string());
  if (j.at("version").get<int>() != kCheckpointVersion)
    throw std::runtime_error("unsupported checkpoint version in " + path.string());
  GanModel model;
  model.config = training_config_from(j.at("config"));
  model.epochs_completed = j.at("epoch").get<Index>();
  model.rng_epoch_stream = j.at("rng_epoch_stream").get<std::uint64_t>();
  model.generator.net = j.at("generator").get<StackedLstm>();
  model.discriminator.net = j.at("discriminator").get<StackedLstm>();
  model.g_state = j.at("generator_optimizer").get<OptimizerState>();
  model.d_state = j.at("discriminator_optimizer").get<OptimizerState>();
  for (const auto& r : j.at("loss_history")) model.loss_history.push_back({r.at(0).get<double>(), r.at(1).get<double>()});
  model.mmd_history = j.at("mmd_history").get<std::vector<double>>();
  return model;
}

}  // namespace ganad
