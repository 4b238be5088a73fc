#pragma once

// Synthetic plant telemetry: periodic sensors, on/off actuators and sensors that follow
// another variable after a delay, with labelled attack injections.
//
// Attacks on an actuator change the physical state, so sensors coupled to it see the
// effect after their delay. Attacks on a sensor change only its reading.

#include "ganad/series.hpp"

#include <string>
#include <variant>
#include <vector>

namespace ganad {

struct SineSensor {
  double period = 100.0;  // in samples
  double amplitude = 1.0;
  double phase = 0.0;  // radians
  double offset = 0.0;
};

struct SquareActuator {
  double period = 100.0;
  double duty = 0.5;  // fraction of each period spent high
  double low = 0.0;
  double high = 1.0;
  double phase = 0.0;  // in samples
};

/// gain * physical(source, t - delay) + offset; `source` must be an earlier variable.
struct CoupledSensor {
  std::size_t source = 0;
  double gain = 1.0;
  Index delay = 0;
  double offset = 0.0;
};

struct VariableSpec {
  std::string name;
  std::variant<SineSensor, SquareActuator, CoupledSensor> kind;
  double noise = 0.0;  // Gaussian reading noise sigma

  bool is_actuator() const { return std::holds_alternative<SquareActuator>(kind); }
};

enum class AttackType { mean_shift, stuck_value, spike };

const char* to_string(AttackType type);
AttackType attack_type_from_string(const std::string& name);

struct AttackSpec {
  AttackType type = AttackType::mean_shift;
  std::size_t target = 0;
  Index start = 0;
  Index duration = 1;
  /// Offset for mean_shift, peak height for spike; unused by stuck_value, which freezes the
  /// value held when the attack starts.
  double magnitude = 0.0;
};

struct ScenarioSpec {
  Index duration = 0;
  double sample_period = 1.0;  // seconds between rows
  double start_time = 0.0;
  std::vector<VariableSpec> variables;
  std::vector<AttackSpec> attacks;
  /// Also label the rows where coupled sensors carry an actuator attack's effect.
  bool label_coupled = false;
  std::uint64_t seed = 0;

  void validate() const;
};

RawSeries generate_scenario(const ScenarioSpec& spec);

/// duration x variables matrix of 0/1: 1 where the variable is attacked directly or (for
/// sensors coupled to an attacked actuator) where the effect arrives after the delay.
Eigen::MatrixXi variable_attack_mask(const ScenarioSpec& spec);

/// Six coupled variables at 1 Hz: two sine sensors, one actuator and three coupled sensors.
std::vector<VariableSpec> benchmark_variables();

/// Normal-operation recording of the benchmark plant.
ScenarioSpec benchmark_normal(Index duration, std::uint64_t seed);

/// Attack recording of the benchmark plant with eight attacks spread over the run.
ScenarioSpec benchmark_attack(Index duration, std::uint64_t seed);

}  // namespace ganad
