#pragma once

#include "arm_model.hpp"

#include <string>
#include <vector>

namespace mstudio {

struct LogRow {
  double t = 0.0;
  JointVector q_ref;
  JointVector q;
  JointVector qd;
  double gripper = 0.0;

  bool operator==(const LogRow& o) const {
    return t == o.t && q_ref == o.q_ref && q == o.q && qd == o.qd && gripper == o.gripper;
  }
};

// Time-stamped record of executed (or sampled) motion at a uniform rate.
struct TrajectoryLog {
  double rate = 100.0;  // [Hz]
  std::string sequence_name;
  std::string model_name;
  bool reference_only = false;
  std::vector<LogRow> rows;

  int joint_count() const { return rows.empty() ? 0 : static_cast<int>(rows.front().q.size()); }
  double duration() const { return rows.empty() ? 0.0 : rows.back().t - rows.front().t; }
  bool operator==(const TrajectoryLog&) const = default;
};

// Column layout: t,q0..qN-1,ref0..refN-1,qd0..qdN-1,grip. Numbers are written
// in shortest round-trip form so parsing the text restores identical doubles.
std::string log_to_csv(const TrajectoryLog& log);
TrajectoryLog log_from_csv(const std::string& text);

nlohmann::json log_metadata(const TrajectoryLog& log);
void apply_metadata(TrajectoryLog& log, const nlohmann::json& meta);

// Sidecar lives next to the CSV as "<csv path>.meta.json".
std::string sidecar_path(const std::string& csv_path);
void write_log(const TrajectoryLog& log, const std::string& csv_path);
// Reads the CSV and, when present, its sidecar. Without a sidecar the rate
// is inferred from the first two timestamps.
TrajectoryLog read_log(const std::string& csv_path);

std::string format_double(double v);

}  // namespace mstudio
