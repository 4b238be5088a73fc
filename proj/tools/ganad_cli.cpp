// ganad: command-line front end for the detection pipeline.
//
//   ganad synth    --config run.yaml
//   ganad ingest   --config run.yaml
//   ganad train    --config run.yaml --workers 4
//   ganad generate --config run.yaml --count 64
//   ganad detect   --config run.yaml
//   ganad evaluate --config run.yaml
//   ganad run      --config run.yaml      (ingest, train, detect, evaluate)
//
// Exit codes: 0 success, 1 invalid configuration or input, 2 runtime failure.

#include "ganad/config.hpp"
#include "ganad/kernels.hpp"
#include "ganad/pipeline.hpp"

#include "CLI11.hpp"

#include <iostream>
#include <optional>

namespace {

struct Options {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<std::string> out;
  ganad::Index count = 64;
};

ganad::RunConfig resolve(const Options& o) {
  ganad::RunConfig c = o.config_path.empty() ? ganad::default_run_config() : ganad::load_config(o.config_path);
  ganad::apply_env_overrides(c);
  if (o.seed) c.seed = *o.seed;
  if (o.workers) c.workers = *o.workers;
  if (o.out) c.paths.output_dir = *o.out;
  c.validate();
  ganad::kernels::set_workers(c.workers);
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"GAN-based anomaly detection for multivariate time series"};
  app.require_subcommand(1);
  Options opt;
  app.add_option("--config", opt.config_path, "YAML run configuration")->check(CLI::ExistingFile);
  app.add_option("--seed", opt.seed, "Override the configured seed");
  app.add_option("--workers", opt.workers, "OpenMP worker count (0 = runtime default)")->check(CLI::NonNegativeNumber);
  app.add_option("--out", opt.out, "Output directory");

  auto* synth = app.add_subcommand("synth", "Write the synthetic benchmark as normal/attack CSVs");
  auto* ingest = app.add_subcommand("ingest", "Normalize, window and downsample the CSVs; fit PCA");
  auto* train = app.add_subcommand("train", "Train the generator and discriminator");
  auto* generate = app.add_subcommand("generate", "Write generated and real samples side by side");
  generate->add_option("--count", opt.count, "Number of samples of each kind")->check(CLI::PositiveNumber);
  auto* detect = app.add_subcommand("detect", "Invert test windows and score them");
  auto* evaluate = app.add_subcommand("evaluate", "Compare GAN-AD with CUSUM and SPE");
  auto* run = app.add_subcommand("run", "ingest, train, detect and evaluate in sequence");
  for (auto* sub : app.get_subcommands({})) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    const ganad::RunConfig config = resolve(opt);
    namespace p = ganad::pipeline;
    std::ostream* log = &std::cerr;
    if (synth->parsed()) p::cmd_synth(config, log);
    if (ingest->parsed()) p::cmd_ingest(config, log);
    if (train->parsed()) p::cmd_train(config, log);
    if (generate->parsed()) p::cmd_generate(config, opt.count, log);
    if (detect->parsed()) p::cmd_detect(config, log);
    if (evaluate->parsed()) p::cmd_evaluate(config, log);
    if (run->parsed()) {
      p::cmd_ingest(config, log);
      p::cmd_train(config, log);
      p::cmd_detect(config, log);
      p::cmd_evaluate(config, log);
    }
  } catch (const ganad::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
