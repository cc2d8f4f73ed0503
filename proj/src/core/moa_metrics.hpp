#pragma once

#include "arm_model.hpp"
#include "trajectory_log.hpp"

#include <optional>
#include <string>
#include <vector>

namespace mstudio {

// Thresholds and filter settings for the effort metrics. Every number the
// classifier uses lives here so it can be recalibrated from a file.
struct MetricConfig {
  double filter_hz = 10.0;  // zero-phase low-pass cutoff; <= 0 disables
  double speed_ref = 1.0;   // [m/s] peak speed mapped to weight_index 1
  double min_path_length = 1e-6;  // [m]
  Eigen::Vector3d up = Eigen::Vector3d::UnitZ();

  double direct_threshold = 0.8;    // directness >= -> unidirectional
  double indirect_threshold = 0.5;  // directness <= -> multidirectional
  double accel_threshold = 0.2;     // skew >= -> accelerated
  double decel_threshold = -0.2;    // skew <= -> decelerated
  double strong_threshold = 0.6;    // weight_index >= -> strong
  double heavy_drop_threshold = 0.5;
  double flow_threshold = -8.0;     // ldj >= -> unhindered

  bool operator==(const MetricConfig&) const = default;
};

MetricConfig metric_config_from_json(const nlohmann::json& j);
nlohmann::json metric_config_to_json(const MetricConfig& c);
MetricConfig load_metric_config(const std::string& path);

struct EffortProfile {
  double directness = 0.0;           // [0, 1]
  double temporal_skew = 0.0;        // [-1, 1]
  double weight_index = 0.0;         // [0, 1]
  double smoothness_ldj = 0.0;       // log dimensionless jerk
  double vertical_drop_ratio = 0.0;  // [-1, 1]

  // Supporting quantities, reported but not classified.
  double duration = 0.0;     // [s]
  double path_length = 0.0;  // [m]
  double peak_speed = 0.0;   // [m/s]

  bool operator==(const EffortProfile&) const = default;
};

// Uniformly sampled end-effector path.
struct Path {
  double dt = 0.01;
  std::vector<Eigen::Vector3d> points;
};

Path end_effector_path(const TrajectoryLog& log, const RobotModel& model);

EffortProfile compute_profile(const Path& path, const MetricConfig& cfg = {});
EffortProfile compute_profile(const TrajectoryLog& log, const RobotModel& model,
                              const MetricConfig& cfg = {});

// Per-sample speed and jerk magnitude after the same smoothing the profile uses.
struct MetricSeries {
  std::vector<double> t, speed, jerk;
};
MetricSeries metric_series(const Path& path, const MetricConfig& cfg = {});
std::string metric_series_csv(const MetricSeries& s);

// Zero-phase second-order Butterworth: forward-backward and backward-forward
// passes averaged, so filtering commutes with time reversal. The input is
// extended by odd reflection at both ends first, which keeps lines straight.
// A cutoff <= 0 or at or above Nyquist returns the input unchanged.
std::vector<double> zero_phase_lowpass(const std::vector<double>& x, double cutoff_hz, double rate_hz);

enum class Spatial { Unidirectional, Multidirectional, Neutral };
enum class Temporal { Accelerated, Decelerated, Neutral };
enum class Weight { Light, Strong, Heavy };
enum class Flow { Controlled, Unhindered };

const char* to_string(Spatial v);
const char* to_string(Temporal v);
const char* to_string(Weight v);
const char* to_string(Flow v);
std::optional<Spatial> spatial_from_string(const std::string& s);
std::optional<Temporal> temporal_from_string(const std::string& s);
std::optional<Weight> weight_from_string(const std::string& s);
std::optional<Flow> flow_from_string(const std::string& s);

struct TonalityClassification {
  Spatial spatial = Spatial::Neutral;
  Temporal temporal = Temporal::Neutral;
  Weight weight = Weight::Light;
  Flow flow = Flow::Unhindered;
  MetricConfig thresholds_used;

  bool operator==(const TonalityClassification&) const = default;
};

TonalityClassification classify(const EffortProfile& profile, const MetricConfig& cfg = {});

// Tonalities the designer meant to express; unset dimensions are not checked.
struct IntendedTonalities {
  std::optional<Spatial> spatial;
  std::optional<Temporal> temporal;
  std::optional<Weight> weight;
  std::optional<Flow> flow;

  bool empty() const { return !spatial && !temporal && !weight && !flow; }
  bool operator==(const IntendedTonalities&) const = default;
};

IntendedTonalities intended_from_json(const nlohmann::json& j);
nlohmann::json intended_to_json(const IntendedTonalities& i);

struct ConsistencyFlag {
  std::string dimension;
  std::string intended;
  std::string classified;
};

// Observation loop: impressions (step 1, free text), parameter analysis
// (step 2, computed), meaning (step 3, free text plus consistency flags).
struct MoaReport {
  std::optional<std::string> impressions;
  EffortProfile profile;
  TonalityClassification classification;
  std::optional<std::string> meaning;
  IntendedTonalities intended;
  std::vector<ConsistencyFlag> flags;
};

MoaReport build_report(const EffortProfile& profile, const TonalityClassification& classification,
                       std::optional<std::string> impressions = std::nullopt,
                       std::optional<std::string> meaning = std::nullopt,
                       const IntendedTonalities& intended = {});

// Profile, classification and report in one step; the CLI and the server
// both go through here so their reports match.
MoaReport analyze_log(const TrajectoryLog& log, const RobotModel& model, const MetricConfig& cfg = {},
                      std::optional<std::string> impressions = std::nullopt,
                      std::optional<std::string> meaning = std::nullopt,
                      const IntendedTonalities& intended = {});

nlohmann::json report_to_json(const MoaReport& r);
std::string report_to_text(const MoaReport& r);

}  // namespace mstudio
