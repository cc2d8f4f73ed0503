#include "moa_metrics.hpp"

#include "error.hpp"
#include "json_util.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>

namespace mstudio {

namespace {

constexpr double kPi = 3.141592653589793;
constexpr std::size_t kMaxPad = 100;

struct Biquad {
  double b0, b1, b2, a1, a2;
};

Biquad butterworth2(double cutoff_hz, double rate_hz) {
  const double k = std::tan(kPi * cutoff_hz / rate_hz);
  const double k2 = k * k;
  const double norm = 1.0 / (1.0 + std::sqrt(2.0) * k + k2);
  Biquad f;
  f.b0 = k2 * norm;
  f.b1 = 2.0 * f.b0;
  f.b2 = f.b0;
  f.a1 = 2.0 * (k2 - 1.0) * norm;
  f.a2 = (1.0 - std::sqrt(2.0) * k + k2) * norm;
  return f;
}

// Causal pass started from steady state at x[0].
std::vector<double> causal(const Biquad& f, const std::vector<double>& x) {
  std::vector<double> y(x.size());
  if (x.empty()) return y;
  double x1 = x[0], x2 = x[0], y1 = x[0], y2 = x[0];
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double v = f.b0 * x[i] + f.b1 * x1 + f.b2 * x2 - f.a1 * y1 - f.a2 * y2;
    x2 = x1;
    x1 = x[i];
    y2 = y1;
    y1 = v;
    y[i] = v;
  }
  return y;
}

std::vector<double> reversed(std::vector<double> v) {
  std::reverse(v.begin(), v.end());
  return v;
}

// Odd reflection about both end points; keeps value and slope continuous.
std::vector<double> pad_odd(const std::vector<double>& x, std::size_t pad) {
  const std::size_t n = x.size();
  std::vector<double> out;
  out.reserve(n + 2 * pad);
  for (std::size_t k = pad; k >= 1; --k) out.push_back(2.0 * x.front() - x[k]);
  out.insert(out.end(), x.begin(), x.end());
  for (std::size_t k = 1; k <= pad; ++k) out.push_back(2.0 * x.back() - x[n - 1 - k]);
  return out;
}

struct Derivatives {
  std::vector<Eigen::Vector3d> velocity;
  std::vector<Eigen::Vector3d> jerk;
};

Derivatives differentiate(const Path& path, const MetricConfig& cfg) {
  const std::size_t n = path.points.size();
  const std::size_t pad = std::min(n - 1, kMaxPad);
  const double rate = 1.0 / path.dt;
  std::array<std::vector<double>, 3> axes;
  for (int a = 0; a < 3; ++a) {
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = path.points[i][a];
    // The outer pad only supplies stencil neighbours at the ends; the
    // filter pads again internally.
    x = zero_phase_lowpass(pad_odd(x, pad), cfg.filter_hz, rate);
    axes[a] = std::move(x);
  }
  Derivatives d;
  d.velocity.resize(n);
  d.jerk.resize(n);
  const double h = path.dt;
  const double h3 = h * h * h;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = i + pad;
    for (int a = 0; a < 3; ++a) {
      const auto& y = axes[a];
      d.velocity[i][a] = (y[c + 1] - y[c - 1]) / (2.0 * h);
      d.jerk[i][a] = (y[c + 2] - 2.0 * y[c + 1] + 2.0 * y[c - 1] - y[c - 2]) / (2.0 * h3);
    }
  }
  return d;
}

void check_path(const Path& path) {
  if (path.points.size() < 3) {
    throw Error(ErrorCode::TooShort, "log too short: need at least 3 samples, got " +
                                         std::to_string(path.points.size()));
  }
  if (!(path.dt > 0.0) || !std::isfinite(path.dt)) {
    throw Error(ErrorCode::TooShort, "log has zero duration");
  }
}

template <typename E>
std::optional<E> from_names(const std::string& s, std::initializer_list<E> values) {
  for (E v : values) {
    if (s == to_string(v)) return v;
  }
  return std::nullopt;
}

template <typename E>
void flag_if(std::vector<ConsistencyFlag>& flags, const char* dim, const std::optional<E>& intended,
             E classified) {
  if (intended && *intended != classified) {
    flags.push_back({dim, to_string(*intended), to_string(classified)});
  }
}

}  // namespace

std::vector<double> zero_phase_lowpass(const std::vector<double>& x, double cutoff_hz, double rate_hz) {
  if (!(cutoff_hz > 0.0) || !(cutoff_hz < 0.5 * rate_hz) || x.size() < 2) return x;
  const Biquad f = butterworth2(cutoff_hz, rate_hz);
  const std::size_t pad = std::min(x.size() - 1, kMaxPad);
  const std::vector<double> p = pad_odd(x, pad);
  const std::vector<double> fb = reversed(causal(f, reversed(causal(f, p))));
  const std::vector<double> bf = causal(f, reversed(causal(f, reversed(p))));
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = 0.5 * (fb[i + pad] + bf[i + pad]);
  return out;
}

MetricConfig metric_config_from_json(const nlohmann::json& j) {
  json_util::check_version(j, "metric config");
  MetricConfig c;
  auto num = [&](const char* key, double& field) {
    if (!j.contains(key)) return;
    if (!j.at(key).is_number()) throw Error(ErrorCode::Validation, std::string(key) + ": expected a number");
    field = j.at(key).get<double>();
  };
  num("filter_hz", c.filter_hz);
  num("speed_ref", c.speed_ref);
  num("min_path_length", c.min_path_length);
  num("direct_threshold", c.direct_threshold);
  num("indirect_threshold", c.indirect_threshold);
  num("accel_threshold", c.accel_threshold);
  num("decel_threshold", c.decel_threshold);
  num("strong_threshold", c.strong_threshold);
  num("heavy_drop_threshold", c.heavy_drop_threshold);
  num("flow_threshold", c.flow_threshold);
  if (j.contains("up")) {
    const auto up = json_util::require<std::vector<double>>(j, "up", "");
    if (up.size() != 3) throw Error(ErrorCode::Validation, "up: expected a 3-vector");
    c.up = Eigen::Vector3d(up[0], up[1], up[2]);
    if (c.up.norm() < 1e-12) throw Error(ErrorCode::Validation, "up: must be nonzero");
    c.up.normalize();
  }
  if (!(c.speed_ref > 0.0)) throw Error(ErrorCode::Validation, "speed_ref: must be positive");
  if (c.indirect_threshold > c.direct_threshold) {
    throw Error(ErrorCode::Validation, "indirect_threshold must not exceed direct_threshold");
  }
  if (c.decel_threshold > c.accel_threshold) {
    throw Error(ErrorCode::Validation, "decel_threshold must not exceed accel_threshold");
  }
  return c;
}

nlohmann::json metric_config_to_json(const MetricConfig& c) {
  return {{"version", 1},
          {"filter_hz", c.filter_hz},
          {"speed_ref", c.speed_ref},
          {"min_path_length", c.min_path_length},
          {"up", {c.up.x(), c.up.y(), c.up.z()}},
          {"direct_threshold", c.direct_threshold},
          {"indirect_threshold", c.indirect_threshold},
          {"accel_threshold", c.accel_threshold},
          {"decel_threshold", c.decel_threshold},
          {"strong_threshold", c.strong_threshold},
          {"heavy_drop_threshold", c.heavy_drop_threshold},
          {"flow_threshold", c.flow_threshold}};
}

MetricConfig load_metric_config(const std::string& path) {
  return metric_config_from_json(json_util::read_file(path));
}

Path end_effector_path(const TrajectoryLog& log, const RobotModel& model) {
  Path p;
  const std::size_t n = log.rows.size();
  if (n < 3) {
    throw Error(ErrorCode::TooShort,
                "log too short: need at least 3 samples, got " + std::to_string(n));
  }
  p.dt = (log.rows.back().t - log.rows.front().t) / static_cast<double>(n - 1);
  if (!(p.dt > 0.0)) throw Error(ErrorCode::TooShort, "log has zero duration");
  p.points.reserve(n);
  for (const auto& r : log.rows) p.points.push_back(forward_kinematics(model, r.q).position);
  return p;
}

EffortProfile compute_profile(const Path& path, const MetricConfig& cfg) {
  check_path(path);
  const std::size_t n = path.points.size();
  EffortProfile e;
  e.duration = path.dt * static_cast<double>(n - 1);

  double length = 0.0;
  for (std::size_t i = 1; i < n; ++i) length += (path.points[i] - path.points[i - 1]).norm();
  e.path_length = length;
  const Eigen::Vector3d net = path.points.back() - path.points.front();
  const bool moved = length >= cfg.min_path_length;
  e.directness = moved ? std::clamp(net.norm() / length, 0.0, 1.0) : 0.0;
  e.vertical_drop_ratio = moved ? std::clamp(-cfg.up.dot(net) / length, -1.0, 1.0) : 0.0;

  const Derivatives d = differentiate(path, cfg);
  std::vector<double> speed(n);
  for (std::size_t i = 0; i < n; ++i) speed[i] = d.velocity[i].norm();
  e.peak_speed = *std::max_element(speed.begin(), speed.end());
  e.weight_index = std::clamp(e.peak_speed / cfg.speed_ref, 0.0, 1.0);

  // Least-squares slope of speed against time, times T over the peak speed.
  const double t_mean = 0.5 * e.duration;
  double v_mean = 0.0;
  for (double v : speed) v_mean += v;
  v_mean /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dtm = path.dt * static_cast<double>(i) - t_mean;
    sxy += dtm * (speed[i] - v_mean);
    sxx += dtm * dtm;
  }
  const double slope = sxy / sxx;
  e.temporal_skew = e.peak_speed > 0.0 ? std::clamp(slope * e.duration / e.peak_speed, -1.0, 1.0) : 0.0;

  double jerk_sq = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    jerk_sq += 0.5 * (d.jerk[i].squaredNorm() + d.jerk[i + 1].squaredNorm()) * path.dt;
  }
  if (moved) {
    const double dimensionless =
        std::pow(e.duration, 5) / (length * length) * jerk_sq;
    e.smoothness_ldj = -std::log(std::max(dimensionless, std::numeric_limits<double>::min()));
  }
  return e;
}

EffortProfile compute_profile(const TrajectoryLog& log, const RobotModel& model, const MetricConfig& cfg) {
  return compute_profile(end_effector_path(log, model), cfg);
}

MetricSeries metric_series(const Path& path, const MetricConfig& cfg) {
  check_path(path);
  const Derivatives d = differentiate(path, cfg);
  MetricSeries s;
  for (std::size_t i = 0; i < path.points.size(); ++i) {
    s.t.push_back(path.dt * static_cast<double>(i));
    s.speed.push_back(d.velocity[i].norm());
    s.jerk.push_back(d.jerk[i].norm());
  }
  return s;
}

std::string metric_series_csv(const MetricSeries& s) {
  std::string out = "t,speed,jerk\n";
  for (std::size_t i = 0; i < s.t.size(); ++i) {
    out += format_double(s.t[i]) + "," + format_double(s.speed[i]) + "," + format_double(s.jerk[i]) + "\n";
  }
  return out;
}

const char* to_string(Spatial v) {
  switch (v) {
    case Spatial::Unidirectional: return "unidirectional";
    case Spatial::Multidirectional: return "multidirectional";
    case Spatial::Neutral: return "neutral";
  }
  return "neutral";
}

const char* to_string(Temporal v) {
  switch (v) {
    case Temporal::Accelerated: return "accelerated";
    case Temporal::Decelerated: return "decelerated";
    case Temporal::Neutral: return "neutral";
  }
  return "neutral";
}

const char* to_string(Weight v) {
  switch (v) {
    case Weight::Light: return "light";
    case Weight::Strong: return "strong";
    case Weight::Heavy: return "heavy";
  }
  return "light";
}

const char* to_string(Flow v) { return v == Flow::Controlled ? "controlled" : "unhindered"; }

std::optional<Spatial> spatial_from_string(const std::string& s) {
  return from_names(s, {Spatial::Unidirectional, Spatial::Multidirectional, Spatial::Neutral});
}
std::optional<Temporal> temporal_from_string(const std::string& s) {
  return from_names(s, {Temporal::Accelerated, Temporal::Decelerated, Temporal::Neutral});
}
std::optional<Weight> weight_from_string(const std::string& s) {
  return from_names(s, {Weight::Light, Weight::Strong, Weight::Heavy});
}
std::optional<Flow> flow_from_string(const std::string& s) {
  return from_names(s, {Flow::Controlled, Flow::Unhindered});
}

TonalityClassification classify(const EffortProfile& p, const MetricConfig& cfg) {
  TonalityClassification c;
  c.thresholds_used = cfg;

  if (p.directness >= cfg.direct_threshold) {
    c.spatial = Spatial::Unidirectional;
  } else if (p.directness <= cfg.indirect_threshold) {
    c.spatial = Spatial::Multidirectional;
  } else {
    c.spatial = Spatial::Neutral;
  }

  if (p.temporal_skew >= cfg.accel_threshold) {
    c.temporal = Temporal::Accelerated;
  } else if (p.temporal_skew <= cfg.decel_threshold) {
    c.temporal = Temporal::Decelerated;
  } else {
    c.temporal = Temporal::Neutral;
  }

  const bool free_flow = p.smoothness_ldj >= cfg.flow_threshold;
  if (p.weight_index >= cfg.strong_threshold) {
    c.weight = Weight::Strong;
  } else if (p.vertical_drop_ratio >= cfg.heavy_drop_threshold && !free_flow) {
    c.weight = Weight::Heavy;
  } else {
    c.weight = Weight::Light;
  }

  c.flow = free_flow ? Flow::Unhindered : Flow::Controlled;
  return c;
}

IntendedTonalities intended_from_json(const nlohmann::json& j) {
  IntendedTonalities out;
  if (j.is_null()) return out;
  if (!j.is_object()) throw Error(ErrorCode::Validation, "intended: expected an object");
  auto field = [&](const char* key, auto parse, auto& slot) {
    if (!j.contains(key)) return;
    const auto name = json_util::require<std::string>(j, key, "intended");
    auto v = parse(name);
    if (!v) throw Error(ErrorCode::Validation, std::string("intended.") + key + ": unknown value '" + name + "'");
    slot = *v;
  };
  field("spatial", spatial_from_string, out.spatial);
  field("temporal", temporal_from_string, out.temporal);
  field("weight", weight_from_string, out.weight);
  field("flow", flow_from_string, out.flow);
  return out;
}

nlohmann::json intended_to_json(const IntendedTonalities& i) {
  nlohmann::json j = nlohmann::json::object();
  if (i.spatial) j["spatial"] = to_string(*i.spatial);
  if (i.temporal) j["temporal"] = to_string(*i.temporal);
  if (i.weight) j["weight"] = to_string(*i.weight);
  if (i.flow) j["flow"] = to_string(*i.flow);
  return j;
}

MoaReport build_report(const EffortProfile& profile, const TonalityClassification& classification,
                       std::optional<std::string> impressions, std::optional<std::string> meaning,
                       const IntendedTonalities& intended) {
  MoaReport r;
  r.profile = profile;
  r.classification = classification;
  if (impressions && !impressions->empty()) r.impressions = std::move(impressions);
  if (meaning && !meaning->empty()) r.meaning = std::move(meaning);
  r.intended = intended;
  flag_if(r.flags, "spatial", intended.spatial, classification.spatial);
  flag_if(r.flags, "temporal", intended.temporal, classification.temporal);
  flag_if(r.flags, "weight", intended.weight, classification.weight);
  flag_if(r.flags, "flow", intended.flow, classification.flow);
  return r;
}

nlohmann::json report_to_json(const MoaReport& r) {
  const auto& p = r.profile;
  const auto& c = r.classification;
  nlohmann::json j;
  j["version"] = 1;
  if (r.impressions) j["impressions"] = *r.impressions;
  j["parameter_analysis"] = {
      {"profile",
       {{"directness", p.directness},
        {"temporal_skew", p.temporal_skew},
        {"weight_index", p.weight_index},
        {"smoothness_ldj", p.smoothness_ldj},
        {"vertical_drop_ratio", p.vertical_drop_ratio},
        {"duration", p.duration},
        {"path_length", p.path_length},
        {"peak_speed", p.peak_speed}}},
      {"classification",
       {{"spatial", to_string(c.spatial)},
        {"temporal", to_string(c.temporal)},
        {"weight", to_string(c.weight)},
        {"flow", to_string(c.flow)}}},
      {"thresholds", metric_config_to_json(c.thresholds_used)}};
  if (r.meaning || !r.intended.empty()) {
    nlohmann::json m = nlohmann::json::object();
    if (r.meaning) m["text"] = *r.meaning;
    if (!r.intended.empty()) m["intended"] = intended_to_json(r.intended);
    nlohmann::json flags = nlohmann::json::array();
    for (const auto& f : r.flags) {
      flags.push_back({{"dimension", f.dimension}, {"intended", f.intended}, {"classified", f.classified}});
    }
    m["flags"] = flags;
    j["meaning"] = m;
  }
  return j;
}

std::string report_to_text(const MoaReport& r) {
  std::ostringstream os;
  os.precision(4);
  // Adding +0.0 turns a negative zero into a plain zero.
  auto num = [](double v) { return v + 0.0; };
  const auto& p = r.profile;
  const auto& c = r.classification;
  if (r.impressions) os << "1. Subjective impressions\n   " << *r.impressions << "\n\n";
  os << "2. Movement parameter analysis\n";
  os << "   directness           " << num(p.directness) << "\n";
  os << "   temporal skew        " << num(p.temporal_skew) << "\n";
  os << "   weight index         " << num(p.weight_index) << "\n";
  os << "   smoothness (LDJ)     " << num(p.smoothness_ldj) << "\n";
  os << "   vertical drop ratio  " << num(p.vertical_drop_ratio) << "\n";
  os << "   duration " << num(p.duration) << " s, path " << num(p.path_length) << " m, peak speed "
     << num(p.peak_speed) << " m/s\n";
  os << "   spatial tonality:  " << to_string(c.spatial) << "\n";
  os << "   temporal tonality: " << to_string(c.temporal) << "\n";
  os << "   weight tonality:   " << to_string(c.weight) << "\n";
  os << "   flow tonality:     " << to_string(c.flow) << "\n";
  if (r.meaning || !r.intended.empty()) {
    os << "\n3. Construction of meaning\n";
    if (r.meaning) os << "   " << *r.meaning << "\n";
    if (r.flags.empty() && !r.intended.empty()) os << "   intended tonalities match the analysis\n";
    for (const auto& f : r.flags) {
      os << "   ! " << f.dimension << ": intended " << f.intended << ", observed " << f.classified << "\n";
    }
  }
  return os.str();
}

MoaReport analyze_log(const TrajectoryLog& log, const RobotModel& model, const MetricConfig& cfg,
                      std::optional<std::string> impressions, std::optional<std::string> meaning,
                      const IntendedTonalities& intended) {
  const EffortProfile profile = compute_profile(log, model, cfg);
  return build_report(profile, classify(profile, cfg), std::move(impressions), std::move(meaning), intended);
}

}  // namespace mstudio
