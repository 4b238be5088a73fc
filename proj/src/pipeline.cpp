#include "ganad/pipeline.hpp"

#include "ganad/baselines.hpp"
#include "ganad/svg.hpp"
#include "ganad/synthetic.hpp"

#include <nlohmann/json.hpp>

#include <cstdio>
#include <fstream>
#include <ostream>
#include <random>
#include <stdexcept>

namespace ganad::pipeline {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

RawSeries slice_rows(const RawSeries& s, Index begin, Index count) {
  RawSeries out;
  out.values = s.values.middleRows(begin, count);
  out.timestamps.assign(s.timestamps.begin() + begin, s.timestamps.begin() + begin + count);
  out.column_names = s.column_names;
  if (s.labels) out.labels = std::vector<int>(s.labels->begin() + begin, s.labels->begin() + begin + count);
  return out;
}

WindowSet window_and_downsample(const RawSeries& s, const PreprocessConfig& p, Index shift) {
  return downsample_median(make_windows(s, p.window_length, shift), p.downsample_factor);
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::span<const double> col_span(const VectorXd& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

void log_line(std::ostream* log, const std::string& line) {
  if (log) *log << line << '\n';
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("missing artifact: " + path.string() + " (run the previous command first)");
  return json::parse(in);
}

void write_json(const fs::path& path, const json& j) { open_out(path) << j.dump(2) << '\n'; }

json report_json(const DetectionReport& r) {
  return {{"tp", r.tp},
          {"fp", r.fp},
          {"tn", r.tn},
          {"fn", r.fn},
          {"accuracy", r.accuracy},
          {"precision", r.precision},
          {"recall", r.recall},
          {"f1", r.f1},
          {"fpr", r.fpr},
          {"undefined", json::array()}};
}

json method_json(const MethodResult& m) {
  json j = report_json(m.report);
  j["name"] = m.name;
  auto& undefined = j["undefined"];
  if (!m.report.precision_defined) undefined.push_back("precision");
  if (!m.report.recall_defined) undefined.push_back("recall");
  if (!m.report.f1_defined) undefined.push_back("f1");
  if (!m.report.fpr_defined) undefined.push_back("fpr");
  return j;
}

fs::path dataset_dir(const RunConfig& c) { return c.paths.output_dir / "dataset"; }

TrainingConfig training_config(const RunConfig& c) {
  TrainingConfig t = c.gan;
  t.seed = c.seed;
  t.sequence_length = c.preprocess.window_length / c.preprocess.downsample_factor;
  t.checkpoint_dir = c.paths.checkpoints();
  return t;
}

}  // namespace

PreparedData prepare(const RunConfig& config, const RawSeries& normal, const RawSeries& attack) {
  normal.validate();
  attack.validate();
  if (normal.column_names != attack.column_names)
    throw std::invalid_argument("normal and attack data must have the same value columns");
  const auto& p = config.preprocess;
  const RawSeries trimmed = trim_startup(normal, p.trim_rows);
  const auto hold = static_cast<Index>(std::floor(p.holdout_fraction * static_cast<double>(trimmed.rows())));
  const Index train_rows = trimmed.rows() - hold;
  if (train_rows < p.window_length) throw std::invalid_argument("normal data too short for one training window");
  if (hold > 0 && hold < p.window_length)
    throw std::invalid_argument("held-out normal slice too short for one window");

  PreparedData out;
  out.columns = normal.column_names;
  const RawSeries train_series = slice_rows(trimmed, 0, train_rows);
  out.stats = fit_normalizer(train_series);
  const RawSeries train_norm = apply_normalizer(train_series, out.stats);
  out.train = window_and_downsample(train_norm, p, p.train_shift);
  if (hold > 0) {
    out.calibration = window_and_downsample(apply_normalizer(slice_rows(trimmed, train_rows, hold), out.stats), p,
                                            p.test_shift);
  } else {
    out.calibration = window_and_downsample(train_norm, p, p.test_shift);
    out.calibration_is_holdout = false;
  }
  out.test = window_and_downsample(apply_normalizer(attack, out.stats), p, p.test_shift);
  return out;
}

MatrixXd FeatureMap::apply(const MatrixXd& window) const { return project(pca, window) / scale; }

WindowSet FeatureMap::apply(const WindowSet& windows) const {
  WindowSet out = windows;
  for (auto& w : out.windows) w = apply(w);
  return out;
}

FeatureMap fit_feature_map(const WindowSet& train, Index components) {
  const MatrixXd rows = concat_rows(train);
  if (components > rows.cols())
    throw std::invalid_argument("pca.components (" + std::to_string(components) + ") exceeds the " +
                                std::to_string(rows.cols()) + " data columns");
  FeatureMap map;
  map.pca = fit_pca(rows, components);
  const double peak = project(map.pca, rows).cwiseAbs().maxCoeff();
  map.scale = peak > 0.0 ? peak : 1.0;
  return map;
}

namespace {

struct WindowSignals {
  VectorXd residual;
  VectorXd disc;
  MatrixXd pc_residual;  // timesteps x n
};

WindowSignals collect(const GanModel& model, const WindowSet& feats, const std::vector<InversionResult>& inv) {
  const auto disc = discriminate(model.discriminator, feats.windows);
  const Index L = feats.length;
  const auto n = static_cast<Index>(feats.size());
  WindowSignals s;
  s.residual.resize(n * L);
  s.disc.resize(n * L);
  s.pc_residual.resize(n * L, feats.features());
  for (Index w = 0; w < n; ++w) {
    const auto& x = feats.windows[static_cast<std::size_t>(w)];
    const auto& recon = inv[static_cast<std::size_t>(w)].reconstruction;
    s.residual.segment(w * L, L) = residual(x, recon);
    s.disc.segment(w * L, L) = disc[static_cast<std::size_t>(w)];
    s.pc_residual.middleRows(w * L, L) = (x - recon).cwiseAbs();
  }
  return s;
}

}  // namespace

DetectionResult detect(const RunConfig& config, const GanModel& model, const FeatureMap& features,
                       const PreparedData& data) {
  if (data.calibration.size() == 0 || data.test.size() == 0) throw std::invalid_argument("no windows to score");
  const WindowSet cal_feats = features.apply(data.calibration);
  const WindowSet test_feats = features.apply(data.test);

  DetectionResult r;
  InversionConfig inv = config.inversion;
  inv.seed = mix_seed(config.seed, 3);
  r.calibration_inversions = invert_batch(model.generator, cal_feats.windows, inv);
  inv.seed = mix_seed(config.seed, 4);
  r.test_inversions = invert_batch(model.generator, test_feats.windows, inv);

  const auto cal = collect(model, cal_feats, r.calibration_inversions);
  const auto test = collect(model, test_feats, r.test_inversions);
  const ResidualScale scale = fit_residual_scale(cal.residual);
  r.calibration = anomaly_score(cal.residual, cal.disc, config.scoring.lambda, scale);
  r.test = anomaly_score(test.residual, test.disc, config.scoring.lambda, scale);
  r.threshold = threshold_for_target_fpr(col_span(r.calibration.combined), config.scoring.target_fpr);
  r.tau = config.scoring.tau ? *config.scoring.tau : tau_for_score_threshold(r.threshold);
  r.predicted = assign_labels(r.test, r.tau);
  r.truth = concat_labels(data.test);

  const MatrixXd cal_var = attribute_to_variables(cal.pc_residual, features.pca);
  const MatrixXd test_var = attribute_to_variables(test.pc_residual, features.pca);
  r.variable_scores.resize(test_var.rows(), test_var.cols());
  for (Index j = 0; j < test_var.cols(); ++j) {
    const VectorXd cal_col = cal_var.col(j);
    const ResidualScale s = fit_residual_scale(cal_col);
    const VectorXd cal_norm = normalize_residuals(cal_col, s);
    r.variable_scores.col(j) = normalize_residuals(test_var.col(j), s);
    r.variable_tau.push_back(
        tau_for_score_threshold(threshold_for_target_fpr(col_span(cal_norm), config.scoring.target_fpr)));
  }
  r.variable_labels = per_variable_labels(r.variable_scores, r.variable_tau);
  return r;
}

Eigen::MatrixXi window_mask(const Eigen::MatrixXi& raw_mask, const WindowSet& test) {
  const Index L = test.length;
  const Index factor = test.downsample_factor;
  Eigen::MatrixXi out = Eigen::MatrixXi::Zero(static_cast<Index>(test.size()) * L, raw_mask.cols());
  for (std::size_t w = 0; w < test.size(); ++w) {
    const Index offset = test.source_offsets[w];
    if (offset + test.raw_length > raw_mask.rows()) throw std::invalid_argument("attack mask shorter than test data");
    for (Index r = 0; r < L; ++r)
      out.row(static_cast<Index>(w) * L + r) = raw_mask.middleRows(offset + r * factor, factor).colwise().maxCoeff();
  }
  return out;
}

EvaluationResult evaluate(const RunConfig& config, const FeatureMap& features, const PreparedData& data,
                          std::span<const int> gan_predicted, const std::vector<std::vector<int>>& variable_labels,
                          const std::optional<Eigen::MatrixXi>& test_mask) {
  const auto truth = concat_labels(data.test);
  EvaluationResult out;
  out.gan_ad = {"GAN-AD", metrics(gan_predicted, truth)};
  const double target = config.scoring.target_fpr;
  const MatrixXd train_rows = concat_rows(data.train);
  const MatrixXd cal_rows = concat_rows(data.calibration);
  const MatrixXd test_rows = concat_rows(data.test);
  const auto& b = config.baselines;

  if (b.cusum) {
    for (Index j = 0; j < test_rows.cols(); ++j) {
      const VectorXd tr = train_rows.col(j), ca = cal_rows.col(j), te = test_rows.col(j);
      CusumConfig c = cusum_defaults(col_span(tr), b.cusum_slack_sigmas, b.cusum_threshold_sigmas, b.cusum_two_sided);
      c.threshold = calibrate_cusum_threshold(col_span(ca), c, target);
      out.cusum.push_back({"CUSUM " + data.columns[static_cast<std::size_t>(j)],
                           metrics(cusum_detect(col_span(te), c), truth)});
    }
    for (const auto& m : out.cusum)
      if (!out.cusum_best || m.report.f1 > out.cusum_best->report.f1) out.cusum_best = m;
  }
  if (b.spe) {
    const double thr = calibrate_spe_threshold(features.pca, cal_rows, target);
    out.spe = MethodResult{"SPE", metrics(spe_detect(features.pca, test_rows, thr), truth)};
  }
  if (test_mask) {
    if (static_cast<std::size_t>(test_mask->cols()) != variable_labels.size())
      throw std::invalid_argument("attack mask does not match the variable count");
    for (std::size_t j = 0; j < variable_labels.size(); ++j) {
      std::vector<int> col(static_cast<std::size_t>(test_mask->rows()));
      for (Index t = 0; t < test_mask->rows(); ++t) col[static_cast<std::size_t>(t)] = (*test_mask)(t, static_cast<Index>(j));
      out.per_variable.push_back({data.columns[j], metrics(variable_labels[j], col)});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------------------
// File-level commands

namespace {

std::vector<std::string> header_comments(const RunConfig& c) { return {"config_hash=" + config_hash(c)}; }

void save_feature_map(const fs::path& path, const FeatureMap& map, const std::string& hash) {
  json j;
  j["config_hash"] = hash;
  j["pca"] = map.pca;
  j["feature_scale"] = map.scale;
  write_json(path, j);
}

FeatureMap load_feature_map(const fs::path& path) {
  const json j = read_json(path);
  FeatureMap map;
  map.pca = j.at("pca").get<PcaModel>();
  map.scale = j.at("feature_scale").get<double>();
  return map;
}

PreparedData load_prepared(const RunConfig& c) {
  const fs::path dir = dataset_dir(c);
  const json manifest = read_json(dir / "manifest.json");
  PreparedData d;
  d.train = read_window_bundle(dir / "train.bin");
  d.calibration = read_window_bundle(dir / "calibration.bin");
  d.test = read_window_bundle(dir / "test.bin");
  d.columns = manifest.at("columns").get<std::vector<std::string>>();
  d.stats.min = Eigen::Map<const VectorXd>(manifest.at("normalization").at("min").get<std::vector<double>>().data(),
                                           static_cast<Index>(d.columns.size()));
  d.stats.max = Eigen::Map<const VectorXd>(manifest.at("normalization").at("max").get<std::vector<double>>().data(),
                                           static_cast<Index>(d.columns.size()));
  d.calibration_is_holdout = manifest.at("calibration_source").get<std::string>() == "holdout";
  return d;
}

std::vector<double> to_std(const VectorXd& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

void cmd_synth(const RunConfig& config, std::ostream* log) {
  ScenarioSpec normal = benchmark_normal(config.synth.normal_rows, mix_seed(config.seed, 11));
  ScenarioSpec attack = benchmark_attack(config.synth.attack_rows, mix_seed(config.seed, 12));
  attack.label_coupled = config.synth.label_coupled;
  const RawSeries n = generate_scenario(normal);
  const RawSeries a = generate_scenario(attack);
  const std::string label = config.schema.label_column.value_or("label");
  const auto comments = header_comments(config);
  fs::create_directories(config.paths.output_dir);
  write_csv(config.paths.normal(), n, label, comments);
  write_csv(config.paths.attack(), a, label, comments);

  RawSeries mask;
  mask.timestamps = a.timestamps;
  mask.column_names = a.column_names;
  mask.values = variable_attack_mask(attack).cast<double>();
  write_csv(config.paths.output_dir / "attack_mask.csv", mask, label, comments);
  log_line(log, "synth: wrote " + std::to_string(n.rows()) + " normal and " + std::to_string(a.rows()) +
                    " attack rows with " + std::to_string(attack.attacks.size()) + " attacks");
}

void cmd_ingest(const RunConfig& config, std::ostream* log) {
  const RawSeries normal = load_csv(config.paths.normal(), config.schema);
  const RawSeries attack = load_csv(config.paths.attack(), config.schema);
  const PreparedData d = prepare(config, normal, attack);
  const FeatureMap map = fit_feature_map(d.train, config.pca_components);
  const fs::path dir = dataset_dir(config);
  fs::create_directories(dir);
  write_window_bundle(dir / "train.bin", d.train);
  write_window_bundle(dir / "calibration.bin", d.calibration);
  write_window_bundle(dir / "test.bin", d.test);
  const std::string hash = config_hash(config);
  save_feature_map(dir / "pca.json", map, hash);

  const auto& p = config.preprocess;
  json m;
  m["config_hash"] = hash;
  m["order"] = "window_then_downsample";
  m["window_length"] = p.window_length;
  m["sequence_length"] = d.train.length;
  m["train_shift"] = p.train_shift;
  m["test_shift"] = p.test_shift;
  m["downsample_factor"] = p.downsample_factor;
  m["trim_rows"] = p.trim_rows;
  m["holdout_fraction"] = p.holdout_fraction;
  m["normal_rows"] = normal.rows();
  m["attack_rows"] = attack.rows();
  m["train_windows"] = d.train.size();
  m["calibration_windows"] = d.calibration.size();
  m["calibration_source"] = d.calibration_is_holdout ? "holdout" : "training";
  m["test_windows"] = d.test.size();
  m["columns"] = d.columns;
  m["normalization"] = {{"min", to_std(d.stats.min)}, {"max", to_std(d.stats.max)}};
  m["pca"] = {{"components", map.pca.n_components()},
              {"variance_ratios", to_std(variance_ratios(map.pca))},
              {"feature_scale", map.scale}};
  write_json(dir / "manifest.json", m);
  log_line(log, "ingest: " + std::to_string(d.train.size()) + " training, " + std::to_string(d.calibration.size()) +
                    " calibration and " + std::to_string(d.test.size()) + " test windows of length " +
                    std::to_string(d.train.length));
}

void cmd_train(const RunConfig& config, std::ostream* log) {
  const fs::path dir = dataset_dir(config);
  const FeatureMap map = load_feature_map(dir / "pca.json");
  const WindowSet feats = map.apply(read_window_bundle(dir / "train.bin"));
  const TrainingConfig tc = training_config(config);
  fs::create_directories(*tc.checkpoint_dir);

  GanModel model = initialize_gan(tc, feats.features());
  train_epochs(model, feats, tc.epochs, [&](const GanModel&, const EpochReport& r) {
    std::string line = "epoch " + std::to_string(r.epoch) + "/" + std::to_string(tc.epochs) +
                       " d_loss=" + num(r.losses.d_loss) + " g_loss=" + num(r.losses.g_loss);
    if (r.mmd) line += " mmd=" + num(*r.mmd);
    log_line(log, line);
  });
  save_checkpoint(model, *tc.checkpoint_dir / "latest.json");

  auto out = open_out(config.paths.output_dir / "history.csv");
  out << "# config_hash=" << config_hash(config) << "\nepoch,d_loss,g_loss,mmd\n";
  Polyline d{"D loss", {}, "#1f77b4"}, g{"G loss", {}, "#ff7f0e"}, mmd{"MMD", {}, "#2ca02c"};
  for (std::size_t e = 0; e < model.loss_history.size(); ++e) {
    const auto& rec = model.loss_history[e];
    out << e + 1 << ',' << num(rec.d_loss) << ',' << num(rec.g_loss) << ','
        << (e < model.mmd_history.size() ? num(model.mmd_history[e]) : "") << '\n';
    d.values.push_back(rec.d_loss);
    g.values.push_back(rec.g_loss);
    if (e < model.mmd_history.size()) mmd.values.push_back(model.mmd_history[e]);
  }
  write_line_chart(config.paths.output_dir / "history.svg", "training losses", {d, g});
  if (!mmd.values.empty()) write_line_chart(config.paths.output_dir / "mmd.svg", "MMD per epoch", {mmd});
}

void cmd_generate(const RunConfig& config, Index count, std::ostream* log) {
  if (count < 1) throw std::invalid_argument("sample count must be positive");
  const fs::path dir = dataset_dir(config);
  const FeatureMap map = load_feature_map(dir / "pca.json");
  const WindowSet train = read_window_bundle(dir / "train.bin");
  const GanModel model = load_checkpoint(config.paths.checkpoints() / "latest.json");
  const json manifest = read_json(dir / "manifest.json");
  const auto columns = manifest.at("columns").get<std::vector<std::string>>();

  std::mt19937_64 rng(mix_seed(config.seed, 9));
  const auto z = sample_latent(count, train.length, model.generator.latent_dim(), rng);
  const auto fake = generate(model.generator, z);
  std::vector<std::size_t> real_idx(static_cast<std::size_t>(count));
  std::uniform_int_distribution<std::size_t> pick(0, train.size() - 1);
  for (auto& i : real_idx) i = pick(rng);

  auto out = open_out(config.paths.output_dir / "samples.csv");
  out << "# config_hash=" << config_hash(config) << "\nsource,sample,step";
  for (Index k = 0; k < map.pca.n_components(); ++k) out << ",pc" << k + 1;
  for (const auto& c : columns) out << ',' << c;
  out << '\n';
  auto emit = [&](const char* source, std::size_t sample, const MatrixXd& feats) {
    const MatrixXd data = reconstruct(map.pca, feats * map.scale);
    for (Index t = 0; t < feats.rows(); ++t) {
      out << source << ',' << sample << ',' << t;
      for (Index k = 0; k < feats.cols(); ++k) out << ',' << num(feats(t, k));
      for (Index k = 0; k < data.cols(); ++k) out << ',' << num(data(t, k));
      out << '\n';
    }
  };
  for (std::size_t s = 0; s < fake.size(); ++s) emit("generated", s, fake[s]);
  for (std::size_t s = 0; s < real_idx.size(); ++s) emit("real", s, map.apply(train.windows[real_idx[s]]));
  log_line(log, "generate: wrote " + std::to_string(count) + " generated and real samples");
}

void cmd_detect(const RunConfig& config, std::ostream* log) {
  const PreparedData data = load_prepared(config);
  const FeatureMap map = load_feature_map(dataset_dir(config) / "pca.json");
  const GanModel model = load_checkpoint(config.paths.checkpoints() / "latest.json");
  if (model.generator.features() != map.pca.n_components())
    throw std::runtime_error("checkpoint feature count does not match the dataset's PCA components");
  const DetectionResult r = detect(config, model, map, data);
  const std::string hash = config_hash(config);
  const fs::path out_dir = config.paths.output_dir;

  auto scores = open_out(out_dir / "scores.csv");
  scores << "# config_hash=" << hash
         << "\nwindow,step,row,residual,normalized_residual,discrimination,score,label,truth\n";
  const Index L = data.test.length;
  for (Index t = 0; t < r.test.size(); ++t) {
    const auto w = static_cast<std::size_t>(t / L);
    const Index row = data.test.source_offsets[w] + (t % L) * data.test.downsample_factor;
    scores << w << ',' << t % L << ',' << row << ',' << num(r.test.residual(t)) << ','
           << num(r.test.normalized_residual(t)) << ',' << num(r.test.discrimination(t)) << ','
           << num(r.test.combined(t)) << ',' << r.predicted[static_cast<std::size_t>(t)] << ','
           << r.truth[static_cast<std::size_t>(t)] << '\n';
  }

  auto inv = open_out(out_dir / "inversion.csv");
  inv << "# config_hash=" << hash << "\nset,window,error,iterations,restarts\n";
  auto dump_inv = [&](const char* set, const std::vector<InversionResult>& v) {
    for (std::size_t w = 0; w < v.size(); ++w)
      inv << set << ',' << w << ',' << num(v[w].error) << ',' << v[w].iterations << ',' << v[w].restarts_run << '\n';
  };
  dump_inv("calibration", r.calibration_inversions);
  dump_inv("test", r.test_inversions);

  auto pv = open_out(out_dir / "per_variable.csv");
  pv << "# config_hash=" << hash << "\nstep";
  for (const auto& c : data.columns) pv << ',' << c << "_score," << c << "_label";
  pv << '\n';
  for (Index t = 0; t < r.variable_scores.rows(); ++t) {
    pv << t;
    for (Index j = 0; j < r.variable_scores.cols(); ++j)
      pv << ',' << num(r.variable_scores(t, j)) << ',' << r.variable_labels[static_cast<std::size_t>(j)][static_cast<std::size_t>(t)];
    pv << '\n';
  }

  json j;
  j["config_hash"] = hash;
  j["lambda"] = config.scoring.lambda;
  j["target_fpr"] = config.scoring.target_fpr;
  j["score_threshold"] = r.threshold;
  j["tau"] = r.tau;
  j["calibration_source"] = data.calibration_is_holdout ? "holdout" : "training";
  j["predicted"] = r.predicted;
  j["truth"] = r.truth;
  j["columns"] = data.columns;
  j["variable_tau"] = r.variable_tau;
  j["variable_labels"] = r.variable_labels;
  write_json(out_dir / "detection.json", j);

  long flagged = 0;
  for (int p : r.predicted) flagged += p;
  write_line_chart(out_dir / "scores.svg", "anomaly score",
                   {{"S_t", to_std(r.test.combined), "#d62728"},
                    {"threshold", std::vector<double>(static_cast<std::size_t>(r.test.size()), r.threshold), "#7f7f7f"}});
  log_line(log, "detect: flagged " + std::to_string(flagged) + " of " + std::to_string(r.predicted.size()) +
                    " timesteps (tau=" + num(r.tau) + ")");
}

void cmd_evaluate(const RunConfig& config, std::ostream* log) {
  const PreparedData data = load_prepared(config);
  const FeatureMap map = load_feature_map(dataset_dir(config) / "pca.json");
  const json det = read_json(config.paths.output_dir / "detection.json");
  const auto predicted = det.at("predicted").get<std::vector<int>>();
  const auto variable_labels = det.at("variable_labels").get<std::vector<std::vector<int>>>();

  std::optional<Eigen::MatrixXi> mask;
  const fs::path mask_path = config.paths.output_dir / "attack_mask.csv";
  if (fs::exists(mask_path)) {
    CsvSchema schema;
    schema.timestamp_column = config.schema.timestamp_column;
    schema.value_columns = data.columns;
    const RawSeries raw = load_csv(mask_path, schema);
    mask = window_mask(raw.values.cast<int>(), data.test);
  }
  const EvaluationResult e = evaluate(config, map, data, predicted, variable_labels, mask);

  json j;
  j["config_hash"] = config_hash(config);
  j["timesteps"] = predicted.size();
  j["target_fpr"] = config.scoring.target_fpr;
  j["methods"]["gan_ad"] = method_json(e.gan_ad);
  if (!e.cusum.empty()) {
    json per = json::array();
    for (const auto& m : e.cusum) per.push_back(method_json(m));
    j["methods"]["cusum"] = {{"per_variable", per}, {"best", method_json(*e.cusum_best)}};
  }
  if (e.spe) j["methods"]["spe"] = method_json(*e.spe);
  if (!e.per_variable.empty()) {
    json per = json::array();
    for (const auto& m : e.per_variable) per.push_back(method_json(m));
    j["per_variable_gan_ad"] = per;
  }
  write_json(config.paths.output_dir / "metrics.json", j);

  if (log) {
    auto row = [&](const MethodResult& m) {
      char buf[160];
      std::snprintf(buf, sizeof buf, "%-16s Accu %.3f  Pre %.3f  Rec %.3f  F1 %.3f  FPR %.3f", m.name.c_str(),
                    m.report.accuracy, m.report.precision, m.report.recall, m.report.f1, m.report.fpr);
      log_line(log, buf);
    };
    row(e.gan_ad);
    if (e.cusum_best) row(*e.cusum_best);
    if (e.spe) row(*e.spe);
  }
}

}  // namespace ganad::pipeline
