#include "ganad/config.hpp"

#include <nlohmann/json.hpp>
#include <yaml-cpp/yaml.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace ganad {

RunConfig default_run_config() {
  RunConfig c;
  c.schema.label_column = "label";
  c.gan.sequence_length = c.preprocess.window_length / c.preprocess.downsample_factor;
  return c;
}

namespace {

int line_of(const YAML::Node& node) { return node.Mark().is_null() ? 0 : node.Mark().line + 1; }

template <class T>
const char* type_name() {
  if constexpr (std::is_same_v<T, bool>) return "a boolean";
  else if constexpr (std::is_same_v<T, std::string>) return "a string";
  else if constexpr (std::is_floating_point_v<T>) return "a number";
  else if constexpr (std::is_unsigned_v<T>) return "a non-negative integer";
  else return "an integer";
}

class Reader {
 public:
  explicit Reader(RunConfig& config) : config_(config) {}

  // Returns the section node, or an undefined node when absent.
  YAML::Node section(const YAML::Node& root, const std::string& name, std::initializer_list<const char*> keys) {
    const YAML::Node node = root[name];
    if (!node) return node;
    if (!node.IsMap()) throw ConfigError("section '" + name + "' must be a mapping", line_of(node));
    check_keys(node, name, keys);
    return node;
  }

  void check_keys(const YAML::Node& map, const std::string& section, std::initializer_list<const char*> keys) {
    for (const auto& kv : map) {
      const auto key = kv.first.as<std::string>();
      bool known = false;
      for (const char* k : keys) known = known || key == k;
      if (!known) {
        const std::string where = section.empty() ? "" : " in section '" + section + "'";
        throw ConfigError("unknown key '" + key + "'" + where, line_of(kv.first));
      }
    }
  }

  template <class T>
  bool read(const YAML::Node& map, const std::string& section, const char* key, T& out) {
    if (!map) return false;
    const YAML::Node v = map[key];
    if (!v) return false;
    const std::string name = section.empty() ? std::string(key) : section + "." + key;
    if (!v.IsScalar()) throw ConfigError("'" + name + "' expects " + type_name<T>(), line_of(v));
    if constexpr (std::is_unsigned_v<T>) {
      if (!v.Scalar().empty() && v.Scalar().front() == '-')
        throw ConfigError("'" + name + "' expects " + type_name<T>(), line_of(v));
    }
    try {
      out = v.as<T>();
    } catch (const YAML::Exception&) {
      throw ConfigError("'" + name + "' expects " + type_name<T>(), line_of(v));
    }
    config_.source_lines[name] = line_of(v);
    return true;
  }

  void read_path(const YAML::Node& map, const char* key, std::filesystem::path& out) {
    std::string s;
    if (read(map, "paths", key, s)) out = s;
  }

 private:
  RunConfig& config_;
};

RunConfig parse_root(const YAML::Node& root) {
  RunConfig c = default_run_config();
  if (!root || root.IsNull()) return c;
  if (!root.IsMap()) throw ConfigError("configuration must be a mapping", line_of(root));
  Reader r(c);
  r.check_keys(root, "",
               {"seed", "workers", "paths", "schema", "preprocess", "pca", "gan", "inversion", "scoring", "baselines",
                "synth"});
  r.read(root, "", "seed", c.seed);
  r.read(root, "", "workers", c.workers);

  if (auto s = r.section(root, "paths", {"normal_csv", "attack_csv", "output_dir", "checkpoint_dir"})) {
    r.read_path(s, "normal_csv", c.paths.normal_csv);
    r.read_path(s, "attack_csv", c.paths.attack_csv);
    r.read_path(s, "output_dir", c.paths.output_dir);
    r.read_path(s, "checkpoint_dir", c.paths.checkpoint_dir);
  }

  if (auto s = r.section(root, "schema", {"timestamp_column", "label_column", "value_columns", "label_mapping"})) {
    r.read(s, "schema", "timestamp_column", c.schema.timestamp_column);
    std::string label;
    if (r.read(s, "schema", "label_column", label)) c.schema.label_column = label;
    if (const YAML::Node cols = s["value_columns"]) {
      if (!cols.IsSequence()) throw ConfigError("'schema.value_columns' expects a list of names", line_of(cols));
      for (const auto& col : cols) {
        if (!col.IsScalar()) throw ConfigError("'schema.value_columns' entries must be names", line_of(col));
        c.schema.value_columns.push_back(col.as<std::string>());
      }
      c.source_lines["schema.value_columns"] = line_of(cols);
    }
    if (const YAML::Node mapping = s["label_mapping"]) {
      if (!mapping.IsMap()) throw ConfigError("'schema.label_mapping' expects a mapping", line_of(mapping));
      for (const auto& kv : mapping) {
        int v = 0;
        try {
          v = kv.second.as<int>();
        } catch (const YAML::Exception&) {
          throw ConfigError("label mapping values must be 0 or 1", line_of(kv.second));
        }
        if (v != 0 && v != 1) throw ConfigError("label mapping values must be 0 or 1", line_of(kv.second));
        c.schema.label_mapping[kv.first.as<std::string>()] = v;
      }
      c.source_lines["schema.label_mapping"] = line_of(mapping);
    }
  }

  if (auto s = r.section(root, "preprocess", {"window_length", "train_shift", "test_shift", "downsample_factor",
                                               "trim_rows", "holdout_fraction"})) {
    r.read(s, "preprocess", "window_length", c.preprocess.window_length);
    r.read(s, "preprocess", "train_shift", c.preprocess.train_shift);
    r.read(s, "preprocess", "test_shift", c.preprocess.test_shift);
    r.read(s, "preprocess", "downsample_factor", c.preprocess.downsample_factor);
    r.read(s, "preprocess", "trim_rows", c.preprocess.trim_rows);
    r.read(s, "preprocess", "holdout_fraction", c.preprocess.holdout_fraction);
  }

  if (auto s = r.section(root, "pca", {"components"})) r.read(s, "pca", "components", c.pca_components);

  if (auto s = r.section(root, "gan", {"epochs", "batch_size", "d_steps", "g_steps", "optimizer", "d_learning_rate",
                                        "g_learning_rate", "latent_dim", "generator_depth", "generator_hidden",
                                        "discriminator_depth", "discriminator_hidden", "clip_norm",
                                        "max_batches_per_epoch", "mmd_samples", "checkpoint_interval"})) {
    auto& g = c.gan;
    r.read(s, "gan", "epochs", g.epochs);
    r.read(s, "gan", "batch_size", g.batch_size);
    r.read(s, "gan", "d_steps", g.d_steps);
    r.read(s, "gan", "g_steps", g.g_steps);
    std::string rule;
    if (r.read(s, "gan", "optimizer", rule)) {
      try {
        g.d_optimizer.rule = g.g_optimizer.rule = optimizer_rule_from_string(rule);
      } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what(), c.source_lines["gan.optimizer"]);
      }
    }
    r.read(s, "gan", "d_learning_rate", g.d_optimizer.learning_rate);
    r.read(s, "gan", "g_learning_rate", g.g_optimizer.learning_rate);
    r.read(s, "gan", "latent_dim", g.latent_dim);
    r.read(s, "gan", "generator_depth", g.generator_depth);
    r.read(s, "gan", "generator_hidden", g.generator_hidden);
    r.read(s, "gan", "discriminator_depth", g.discriminator_depth);
    r.read(s, "gan", "discriminator_hidden", g.discriminator_hidden);
    r.read(s, "gan", "clip_norm", g.clip_norm);
    r.read(s, "gan", "max_batches_per_epoch", g.max_batches_per_epoch);
    r.read(s, "gan", "mmd_samples", g.mmd_samples);
    r.read(s, "gan", "checkpoint_interval", g.checkpoint_interval);
  }

  if (auto s = r.section(root, "inversion",
                         {"max_iterations", "learning_rate", "max_halvings", "restarts", "tolerance"})) {
    r.read(s, "inversion", "max_iterations", c.inversion.max_iterations);
    r.read(s, "inversion", "learning_rate", c.inversion.learning_rate);
    r.read(s, "inversion", "max_halvings", c.inversion.max_halvings);
    r.read(s, "inversion", "restarts", c.inversion.restarts);
    r.read(s, "inversion", "tolerance", c.inversion.tolerance);
  }

  if (auto s = r.section(root, "scoring", {"lambda", "target_fpr", "tau"})) {
    r.read(s, "scoring", "lambda", c.scoring.lambda);
    r.read(s, "scoring", "target_fpr", c.scoring.target_fpr);
    double tau = 0.0;
    if (r.read(s, "scoring", "tau", tau)) c.scoring.tau = tau;
  }

  if (auto s = r.section(root, "baselines", {"cusum", "spe", "cusum_slack_sigmas", "cusum_threshold_sigmas",
                                              "cusum_two_sided"})) {
    r.read(s, "baselines", "cusum", c.baselines.cusum);
    r.read(s, "baselines", "spe", c.baselines.spe);
    r.read(s, "baselines", "cusum_slack_sigmas", c.baselines.cusum_slack_sigmas);
    r.read(s, "baselines", "cusum_threshold_sigmas", c.baselines.cusum_threshold_sigmas);
    r.read(s, "baselines", "cusum_two_sided", c.baselines.cusum_two_sided);
  }

  if (auto s = r.section(root, "synth", {"normal_rows", "attack_rows", "label_coupled"})) {
    r.read(s, "synth", "normal_rows", c.synth.normal_rows);
    r.read(s, "synth", "attack_rows", c.synth.attack_rows);
    r.read(s, "synth", "label_coupled", c.synth.label_coupled);
  }

  if (c.preprocess.downsample_factor > 0)
    c.gan.sequence_length = c.preprocess.window_length / c.preprocess.downsample_factor;
  c.validate();
  return c;
}

}  // namespace

void RunConfig::validate() const {
  auto line = [this](const std::string& key) {
    const auto it = source_lines.find(key);
    return it == source_lines.end() ? 0 : it->second;
  };
  auto require = [&](bool ok, const std::string& key, const std::string& message) {
    if (!ok) throw ConfigError("'" + key + "' " + message, line(key));
  };
  const auto& p = preprocess;
  require(workers >= 0, "workers", "must be non-negative");
  require(p.window_length >= 1, "preprocess.window_length", "must be at least 1");
  require(p.train_shift >= 1, "preprocess.train_shift", "must be at least 1");
  require(p.test_shift >= 1, "preprocess.test_shift", "must be at least 1");
  require(p.downsample_factor >= 1, "preprocess.downsample_factor", "must be at least 1");
  require(p.window_length % p.downsample_factor == 0, "preprocess.downsample_factor", "must divide window_length");
  require(p.window_length / p.downsample_factor >= 2, "preprocess.window_length",
          "must leave at least two rows per window after downsampling");
  require(p.trim_rows >= 0, "preprocess.trim_rows", "must be non-negative");
  require(p.holdout_fraction >= 0.0 && p.holdout_fraction < 1.0, "preprocess.holdout_fraction", "must lie in [0, 1)");
  require(pca_components >= 1, "pca.components", "must be at least 1");
  require(scoring.lambda >= 0.0 && scoring.lambda <= 1.0, "scoring.lambda", "must lie in [0, 1]");
  require(scoring.target_fpr >= 0.0 && scoring.target_fpr < 1.0, "scoring.target_fpr", "must lie in [0, 1)");
  require(!scoring.tau || *scoring.tau >= 0.0, "scoring.tau", "must be non-negative");
  require(baselines.cusum_slack_sigmas >= 0.0, "baselines.cusum_slack_sigmas", "must be non-negative");
  require(baselines.cusum_threshold_sigmas > 0.0, "baselines.cusum_threshold_sigmas", "must be positive");
  require(synth.normal_rows >= p.window_length, "synth.normal_rows", "must cover at least one window");
  require(synth.attack_rows >= p.window_length, "synth.attack_rows", "must cover at least one window");
  try {
    gan.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("gan: ") + e.what(), line("gan.epochs"));
  }
  try {
    inversion.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("inversion: ") + e.what(), line("inversion.max_iterations"));
  }
}

RunConfig parse_config(const std::string& yaml_text) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(e.msg, e.mark.is_null() ? 0 : e.mark.line + 1);
  }
  return parse_root(root);
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read configuration file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

void apply_env_overrides(RunConfig& config) {
  auto take = [](const char* name, std::filesystem::path& target) {
    if (const char* v = std::getenv(name); v && *v) target = v;
  };
  take("GANAD_NORMAL_CSV", config.paths.normal_csv);
  take("GANAD_ATTACK_CSV", config.paths.attack_csv);
  take("GANAD_OUTPUT_DIR", config.paths.output_dir);
  take("GANAD_CHECKPOINT_DIR", config.paths.checkpoint_dir);
}

std::string canonical_dump(const RunConfig& c) {
  nlohmann::json j;
  j["seed"] = c.seed;
  j["schema"] = {{"timestamp_column", c.schema.timestamp_column},
                 {"label_column", c.schema.label_column.value_or("")},
                 {"value_columns", c.schema.value_columns},
                 {"label_mapping", c.schema.label_mapping}};
  const auto& p = c.preprocess;
  j["preprocess"] = {{"window_length", p.window_length},   {"train_shift", p.train_shift},
                     {"test_shift", p.test_shift},         {"downsample_factor", p.downsample_factor},
                     {"trim_rows", p.trim_rows},           {"holdout_fraction", p.holdout_fraction}};
  j["pca"] = {{"components", c.pca_components}};
  const auto& g = c.gan;
  j["gan"] = {{"epochs", g.epochs},
              {"batch_size", g.batch_size},
              {"d_steps", g.d_steps},
              {"g_steps", g.g_steps},
              {"optimizer", to_string(g.g_optimizer.rule)},
              {"d_learning_rate", g.d_optimizer.learning_rate},
              {"g_learning_rate", g.g_optimizer.learning_rate},
              {"latent_dim", g.latent_dim},
              {"sequence_length", g.sequence_length},
              {"generator_depth", g.generator_depth},
              {"generator_hidden", g.generator_hidden},
              {"discriminator_depth", g.discriminator_depth},
              {"discriminator_hidden", g.discriminator_hidden},
              {"clip_norm", g.clip_norm},
              {"max_batches_per_epoch", g.max_batches_per_epoch},
              {"mmd_samples", g.mmd_samples}};
  const auto& inv = c.inversion;
  j["inversion"] = {{"max_iterations", inv.max_iterations}, {"learning_rate", inv.learning_rate},
                    {"max_halvings", inv.max_halvings},     {"restarts", inv.restarts},
                    {"tolerance", inv.tolerance}};
  j["scoring"] = {{"lambda", c.scoring.lambda}, {"target_fpr", c.scoring.target_fpr}};
  j["scoring"]["tau"] = c.scoring.tau ? nlohmann::json(*c.scoring.tau) : nlohmann::json(nullptr);
  const auto& b = c.baselines;
  j["baselines"] = {{"cusum", b.cusum},
                    {"spe", b.spe},
                    {"cusum_slack_sigmas", b.cusum_slack_sigmas},
                    {"cusum_threshold_sigmas", b.cusum_threshold_sigmas},
                    {"cusum_two_sided", b.cusum_two_sided}};
  j["synth"] = {{"normal_rows", c.synth.normal_rows},
                {"attack_rows", c.synth.attack_rows},
                {"label_coupled", c.synth.label_coupled}};
  return j.dump();
}

std::string config_hash(const RunConfig& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : canonical_dump(config)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace ganad
