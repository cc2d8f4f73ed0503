#include "trajectory_log.hpp"

#include "error.hpp"
#include "json_util.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <sstream>

namespace mstudio {

namespace {

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

double parse_double(std::string_view s, std::size_t line_no) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.remove_suffix(1);
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw Error(ErrorCode::Parse,
                "log line " + std::to_string(line_no) + ": bad number '" + std::string(s) + "'");
  }
  return v;
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::string log_to_csv(const TrajectoryLog& log) {
  const int n = log.joint_count();
  std::string out = "t";
  for (const char* prefix : {"q", "ref", "qd"}) {
    for (int i = 0; i < n; ++i) out += "," + std::string(prefix) + std::to_string(i);
  }
  out += ",grip\n";
  for (const auto& r : log.rows) {
    out += format_double(r.t);
    for (const JointVector* v : {&r.q, &r.q_ref, &r.qd}) {
      for (int i = 0; i < n; ++i) {
        out += ',';
        out += format_double((*v)[i]);
      }
    }
    out += ',';
    out += format_double(r.gripper);
    out += '\n';
  }
  return out;
}

TrajectoryLog log_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::Parse, "log: empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split(line, ',');
  if (header.size() < 5 || header.front() != "t" || header.back() != "grip" ||
      (header.size() - 2) % 3 != 0) {
    throw Error(ErrorCode::Parse, "log: header must be t,q0..,ref0..,qd0..,grip");
  }
  const int n = static_cast<int>((header.size() - 2) / 3);
  for (int i = 0; i < n; ++i) {
    const std::string idx = std::to_string(i);
    if (header[1 + i] != "q" + idx || header[1 + n + i] != "ref" + idx ||
        header[1 + 2 * n + i] != "qd" + idx) {
      throw Error(ErrorCode::Parse, "log: unexpected column order in header");
    }
  }

  TrajectoryLog log;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto cells = split(line, ',');
    if (cells.size() != header.size()) {
      throw Error(ErrorCode::Parse, "log line " + std::to_string(line_no) + ": expected " +
                                        std::to_string(header.size()) + " columns");
    }
    LogRow r;
    r.t = parse_double(cells[0], line_no);
    r.q.resize(n);
    r.q_ref.resize(n);
    r.qd.resize(n);
    for (int i = 0; i < n; ++i) {
      r.q[i] = parse_double(cells[1 + i], line_no);
      r.q_ref[i] = parse_double(cells[1 + n + i], line_no);
      r.qd[i] = parse_double(cells[1 + 2 * n + i], line_no);
    }
    r.gripper = parse_double(cells.back(), line_no);
    log.rows.push_back(std::move(r));
  }
  if (log.rows.size() >= 2) {
    const double dt = log.rows[1].t - log.rows[0].t;
    if (dt > 0.0) log.rate = 1.0 / dt;
  }
  return log;
}

nlohmann::json log_metadata(const TrajectoryLog& log) {
  return {{"version", 1},
          {"rate", log.rate},
          {"sequence", log.sequence_name},
          {"model", log.model_name},
          {"joints", log.joint_count()},
          {"rows", log.rows.size()},
          {"reference_only", log.reference_only}};
}

void apply_metadata(TrajectoryLog& log, const nlohmann::json& meta) {
  json_util::check_version(meta, "log metadata");
  log.rate = json_util::require<double>(meta, "rate", "meta");
  if (!(log.rate > 0.0)) throw Error(ErrorCode::Validation, "meta.rate: must be positive");
  log.sequence_name = meta.value("sequence", std::string());
  log.model_name = meta.value("model", std::string());
  log.reference_only = meta.value("reference_only", false);
}

std::string sidecar_path(const std::string& csv_path) { return csv_path + ".meta.json"; }

void write_log(const TrajectoryLog& log, const std::string& csv_path) {
  json_util::write_file(csv_path, log_to_csv(log));
  json_util::write_file(sidecar_path(csv_path), log_metadata(log).dump(2) + "\n");
}

TrajectoryLog read_log(const std::string& csv_path) {
  TrajectoryLog log = log_from_csv(json_util::read_text(csv_path));
  const std::string meta = sidecar_path(csv_path);
  if (std::filesystem::exists(meta)) apply_metadata(log, json_util::read_file(meta));
  return log;
}

}  // namespace mstudio
