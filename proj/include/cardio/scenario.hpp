#pragma once

#include "cardio/control.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace cardio {

/// Conductivity entry of a config: isotropic value or full row-major d x d.
struct TensorSpec {
  std::vector<double> entries;
  bool isotropic = true;

  LocalTensor local(int dim) const;
  bool operator==(const TensorSpec&) const = default;
};

/// Gaussian bump in space times an on/off window in time, or a snapshot file.
struct StimulusSpec {
  double amplitude = 0.0;
  std::array<double, 3> center{0.5, 0.5, 0.5};
  double width = 0.1;
  double t_on = 0.0;
  double t_off = kInfinity;
  std::string file;

  bool operator==(const StimulusSpec&) const = default;
};

/// Resolution-independent problem description as read from an INI file.
struct Scenario {
  // [geometry]
  int dim = 1;
  std::array<int, 3> nodes{33, 1, 1};
  std::array<double, 3> lengths{1.0, 1.0, 1.0};
  double T = 1.0;
  int steps = 100;
  // [model]
  SystemKind system = SystemKind::Monodomain;
  IonicParams ionic;
  bool reaction = true;
  // [tensors]
  TensorSpec m_i{{1.0}, true};
  bool has_m_e = false;
  TensorSpec m_e{{1.0}, true};
  double lambda = 1.0;
  // [initial]
  double phi0_offset = 0.0;
  double phi0_amplitude = 0.0;
  std::array<double, 3> phi0_center{0.5, 0.5, 0.5};
  double phi0_width = 0.1;
  double w0 = 0.0;
  // [stimulus_i], [stimulus_e]
  StimulusSpec stimulus_i;
  StimulusSpec stimulus_e;
  // [cost]
  std::string target = "rest";
  double w_phi = 1.0;
  double w_eta = 0.0;
  double w_gate = 0.0;
  double mu = 1e-2;
  std::array<double, 3> control_lo{0.0, 0.0, 0.0};
  std::array<double, 3> control_hi{kInfinity, kInfinity, kInfinity};
  double radius = 10.0;
  int max_iter = 50;
  double gradient_tol = 1e-6;
  // [solver]
  double cg_tol = 1e-10;
  double inner_tol = 1e-11;
  // [output]
  std::string out_dir = "out";
  std::uint64_t seed = 1;
  /// Directory that relative file paths resolve against.
  std::string base_dir;

  Grid grid() const;
  /// Problem and cost discretized on `grid` (which may be a refinement).
  /// Bidomain stimuli are made compatible; a note is appended to
  /// `warnings` when that changes I_e.
  ControlProblem instantiate(const Grid& grid, std::vector<std::string>* warnings = nullptr) const;
  ControlProblem instantiate(std::vector<std::string>* warnings = nullptr) const { return instantiate(grid(), warnings); }

  /// Throws ConfigError naming the offending key.
  void validate() const;

  bool operator==(const Scenario&) const = default;
};

/// Parses and validates an INI config. Unknown keys are rejected.
Scenario parse_config(const std::string& path, std::vector<std::string>* warnings = nullptr);
Scenario parse_config_text(const std::string& text, const std::string& base_dir = ".",
                           std::vector<std::string>* warnings = nullptr);
/// INI text that parses back to an identical Scenario.
std::string serialize(const Scenario& s);

/// Evaluates a stimulus on every node and frame of `grid`.
Series stimulus_series(const StimulusSpec& spec, const Grid& grid, const std::string& base_dir);

}  // namespace cardio
