#include "ganad/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace ganad {

const char* to_string(AttackType type) {
  switch (type) {
    case AttackType::mean_shift: return "mean_shift";
    case AttackType::stuck_value: return "stuck_value";
    case AttackType::spike: return "spike";
  }
  return "?";
}

AttackType attack_type_from_string(const std::string& name) {
  if (name == "mean_shift") return AttackType::mean_shift;
  if (name == "stuck_value") return AttackType::stuck_value;
  if (name == "spike") return AttackType::spike;
  throw std::invalid_argument("unknown attack type: " + name);
}

void ScenarioSpec::validate() const {
  if (duration < 1) throw std::invalid_argument("scenario duration must be positive");
  if (!(sample_period > 0.0)) throw std::invalid_argument("sample period must be positive");
  if (variables.empty()) throw std::invalid_argument("scenario needs at least one variable");
  for (std::size_t j = 0; j < variables.size(); ++j) {
    const auto& v = variables[j];
    if (!(v.noise >= 0.0)) throw std::invalid_argument("noise must be non-negative for " + v.name);
    if (const auto* s = std::get_if<SineSensor>(&v.kind)) {
      if (!(s->period > 0.0)) throw std::invalid_argument("sine period must be positive for " + v.name);
    } else if (const auto* a = std::get_if<SquareActuator>(&v.kind)) {
      if (!(a->period > 0.0)) throw std::invalid_argument("actuator period must be positive for " + v.name);
      if (!(a->duty >= 0.0 && a->duty <= 1.0)) throw std::invalid_argument("duty cycle must lie in [0, 1] for " + v.name);
    } else {
      const auto& c = std::get<CoupledSensor>(v.kind);
      if (c.source >= j) throw std::invalid_argument("coupled sensor " + v.name + " must follow an earlier variable");
      if (c.delay < 0) throw std::invalid_argument("delay must be non-negative for " + v.name);
    }
  }
  for (const auto& a : attacks) {
    if (a.target >= variables.size()) throw std::invalid_argument("attack targets an unknown variable");
    if (a.duration < 1 || a.start < 0 || a.start + a.duration > duration)
      throw std::invalid_argument("attack interval outside the scenario");
  }
}

namespace {

double spike_envelope(Index t, const AttackSpec& a) {
  const double u = (static_cast<double>(t - a.start) + 0.5) / static_cast<double>(a.duration);
  return 1.0 - std::abs(2.0 * u - 1.0);
}

void apply_attack(Eigen::Ref<VectorXd> column, const AttackSpec& a) {
  const double frozen = column(a.start);
  for (Index t = a.start; t < a.start + a.duration; ++t) {
    switch (a.type) {
      case AttackType::mean_shift: column(t) += a.magnitude; break;
      case AttackType::stuck_value: column(t) = frozen; break;
      case AttackType::spike: column(t) += a.magnitude * spike_envelope(t, a); break;
    }
  }
}

// Cumulative delay from `origin` to every variable that follows it physically; -1 elsewhere.
std::vector<Index> propagation_delays(const ScenarioSpec& spec, std::size_t origin) {
  std::vector<Index> delay(spec.variables.size(), -1);
  delay[origin] = 0;
  for (std::size_t j = origin + 1; j < spec.variables.size(); ++j) {
    if (const auto* c = std::get_if<CoupledSensor>(&spec.variables[j].kind)) {
      if (delay[c->source] >= 0) delay[j] = delay[c->source] + c->delay;
    }
  }
  return delay;
}

}  // namespace

RawSeries generate_scenario(const ScenarioSpec& spec) {
  spec.validate();
  const Index n = spec.duration;
  const auto m = static_cast<Index>(spec.variables.size());
  MatrixXd physical(n, m);

  for (Index j = 0; j < m; ++j) {
    const auto& v = spec.variables[static_cast<std::size_t>(j)];
    auto col = physical.col(j);
    if (const auto* s = std::get_if<SineSensor>(&v.kind)) {
      for (Index t = 0; t < n; ++t)
        col(t) = s->offset + s->amplitude * std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / s->period + s->phase);
    } else if (const auto* a = std::get_if<SquareActuator>(&v.kind)) {
      for (Index t = 0; t < n; ++t) {
        const double pos = std::fmod(static_cast<double>(t) + a->phase, a->period);
        col(t) = (pos < 0 ? pos + a->period : pos) < a->duty * a->period ? a->high : a->low;
      }
    } else {
      const auto& c = std::get<CoupledSensor>(v.kind);
      const auto src = static_cast<Index>(c.source);
      for (Index t = 0; t < n; ++t) col(t) = c.gain * physical(std::max<Index>(0, t - c.delay), src) + c.offset;
    }
    if (v.is_actuator()) {
      for (const auto& atk : spec.attacks)
        if (atk.target == static_cast<std::size_t>(j)) apply_attack(col, atk);
    }
  }

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  MatrixXd readings = physical;
  for (Index j = 0; j < m; ++j) {
    const auto& v = spec.variables[static_cast<std::size_t>(j)];
    if (v.noise > 0.0)
      for (Index t = 0; t < n; ++t) readings(t, j) += v.noise * normal(rng);
    if (!v.is_actuator()) {
      for (const auto& atk : spec.attacks)
        if (atk.target == static_cast<std::size_t>(j)) apply_attack(readings.col(j), atk);
    }
  }

  RawSeries out;
  out.values = std::move(readings);
  out.timestamps.resize(static_cast<std::size_t>(n));
  for (Index t = 0; t < n; ++t)
    out.timestamps[static_cast<std::size_t>(t)] = spec.start_time + static_cast<double>(t) * spec.sample_period;
  for (const auto& v : spec.variables) out.column_names.push_back(v.name);

  std::vector<int> labels(static_cast<std::size_t>(n), 0);
  if (spec.label_coupled) {
    const Eigen::MatrixXi mask = variable_attack_mask(spec);
    for (Index t = 0; t < n; ++t) labels[static_cast<std::size_t>(t)] = mask.row(t).maxCoeff() > 0 ? 1 : 0;
  } else {
    for (const auto& atk : spec.attacks)
      std::fill_n(labels.begin() + atk.start, atk.duration, 1);
  }
  out.labels = std::move(labels);
  return out;
}

Eigen::MatrixXi variable_attack_mask(const ScenarioSpec& spec) {
  spec.validate();
  const Index n = spec.duration;
  Eigen::MatrixXi mask = Eigen::MatrixXi::Zero(n, static_cast<Index>(spec.variables.size()));
  for (const auto& atk : spec.attacks) {
    if (!spec.variables[atk.target].is_actuator()) {
      mask.col(static_cast<Index>(atk.target)).segment(atk.start, atk.duration).setOnes();
      continue;
    }
    const auto delay = propagation_delays(spec, atk.target);
    for (std::size_t j = 0; j < delay.size(); ++j) {
      if (delay[j] < 0) continue;
      const Index begin = std::min(n, atk.start + delay[j]);
      const Index end = std::min(n, atk.start + atk.duration + delay[j]);
      mask.col(static_cast<Index>(j)).segment(begin, end - begin).setOnes();
    }
  }
  return mask;
}

std::vector<VariableSpec> benchmark_variables() {
  return {
      {"SEN1", SineSensor{120.0, 1.0, 0.0, 0.0}, 0.1},
      {"SEN2", SineSensor{200.0, 1.0, 1.0, 0.0}, 0.1},
      {"ACT1", SquareActuator{160.0, 0.4, 0.0, 1.0, 0.0}, 0.0},
      {"LVL1", CoupledSensor{2, 1.5, 10, 0.2}, 0.1},
      {"FLW1", CoupledSensor{0, -0.8, 15, 0.0}, 0.1},
      {"LVL2", CoupledSensor{1, 1.2, 8, 0.0}, 0.1},
  };
}

ScenarioSpec benchmark_normal(Index duration, std::uint64_t seed) {
  ScenarioSpec spec;
  spec.duration = duration;
  spec.variables = benchmark_variables();
  spec.seed = seed;
  return spec;
}

ScenarioSpec benchmark_attack(Index duration, std::uint64_t seed) {
  ScenarioSpec spec = benchmark_normal(duration, seed);
  spec.start_time = 1e6;
  struct Plan {
    AttackType type;
    std::size_t target;
    double length;  // fraction of a slot
    double magnitude;
  };
  const Plan plans[] = {
      {AttackType::stuck_value, 0, 0.25, 0.0}, {AttackType::stuck_value, 2, 0.35, 0.0},
      {AttackType::spike, 3, 0.2, 3.0},        {AttackType::mean_shift, 1, 0.3, 1.0},
      {AttackType::stuck_value, 4, 0.3, 0.0},  {AttackType::mean_shift, 5, 0.25, -1.0},
      {AttackType::spike, 0, 0.2, 2.5},        {AttackType::mean_shift, 2, 0.3, 0.6},
  };
  const double slot = static_cast<double>(duration) / 8.0;
  for (std::size_t i = 0; i < 8; ++i) {
    AttackSpec a;
    a.type = plans[i].type;
    a.target = plans[i].target;
    a.duration = std::max<Index>(1, static_cast<Index>(plans[i].length * slot));
    a.start = static_cast<Index>((static_cast<double>(i) + 0.4) * slot);
    a.magnitude = plans[i].magnitude;
    spec.attacks.push_back(a);
  }
  return spec;
}

}  // namespace ganad
