#include "timeline.hpp"

#include "error.hpp"
#include "json_util.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace mstudio {

namespace {

std::string channel_path(std::size_t ci) { return "channels[" + std::to_string(ci) + "]"; }

std::string key_path(std::size_t ci, std::size_t ki) {
  return channel_path(ci) + ".keys[" + std::to_string(ki) + "]";
}

double cubic(double p0, double p1, double p2, double p3, double u) {
  const double m = 1.0 - u;
  return m * m * m * p0 + 3.0 * m * m * u * p1 + 3.0 * m * u * u * p2 + u * u * u * p3;
}

// Shrinks a handle to at most `span` in time, keeping its slope.
Handle fit_handle(Handle h, double span) {
  if (h.dt > span) {
    h.dv *= span / h.dt;
    h.dt = span;
  }
  return h;
}

double bezier_value(const Keyframe& k0, const Keyframe& k1, double t) {
  const double span = k1.t - k0.t;
  Handle out = fit_handle(k0.h_out, span);
  Handle in = fit_handle(k1.h_in, span);
  // Handles that together reach past the span are scaled down, slopes kept,
  // so x(u) is strictly increasing inside the segment and the value is a
  // well-conditioned function of time. Zero-length handles are flat.
  if (out.dt + in.dt > span) {
    const double f = span / (out.dt + in.dt);
    out = {out.dt * f, out.dv * f};
    in = {in.dt * f, in.dv * f};
  }
  if (out.dt == 0.0) out.dv = 0.0;
  if (in.dt == 0.0) in.dv = 0.0;
  const double x0 = k0.t, x1 = k0.t + out.dt, x2 = k1.t - in.dt, x3 = k1.t;
  const double y0 = k0.value, y1 = k0.value + out.dv, y2 = k1.value - in.dv, y3 = k1.value;
  // x(u) is monotone, so bisection on u finds the unique curve point at t.
  double lo = 0.0, hi = 1.0;
  for (int i = 0; i < 100 && hi - lo > 0.0; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    if (cubic(x0, x1, x2, x3, mid) < t) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return cubic(y0, y1, y2, y3, 0.5 * (lo + hi));
}

void normalize_handles(Channel& ch) {
  for (std::size_t i = 0; i < ch.keys.size(); ++i) {
    auto& k = ch.keys[i];
    if (i > 0) k.h_in = fit_handle(k.h_in, k.t - ch.keys[i - 1].t);
    if (i + 1 < ch.keys.size()) k.h_out = fit_handle(k.h_out, ch.keys[i + 1].t - k.t);
  }
}

void sort_channel(Channel& ch) {
  std::sort(ch.keys.begin(), ch.keys.end(),
            [](const Keyframe& a, const Keyframe& b) { return a.t < b.t; });
}

std::pair<double, double> target_range(const RobotModel& model, int target) {
  if (target == kGripperTarget) return {model.gripper_min, model.gripper_max};
  return {model.joints[target].min, model.joints[target].max};
}

void check_target(const RobotModel& model, int target, const std::string& at) {
  if (target == kGripperTarget) return;
  if (target < 0 || target >= model.dof()) {
    std::ostringstream os;
    os << at << ".target: joint " << target << " does not exist in model '" << model.name
       << "' (" << model.dof() << " joints)";
    throw Error(ErrorCode::Validation, os.str());
  }
}

void check_key_shape(const Keyframe& k, const std::string& at) {
  if (!std::isfinite(k.t) || k.t < 0.0) throw Error(ErrorCode::Validation, at + ".t: must be >= 0");
  if (!std::isfinite(k.value)) throw Error(ErrorCode::Validation, at + ".v: must be finite");
  for (const auto* h : {&k.h_in, &k.h_out}) {
    if (!std::isfinite(h->dt) || !std::isfinite(h->dv) || h->dt < 0.0) {
      throw Error(ErrorCode::Validation, at + ": handle dt must be finite and >= 0");
    }
  }
}

Handle handle_from_json(const nlohmann::json& j, const std::string& at) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    throw Error(ErrorCode::Validation, at + ": expected [dt, dv]");
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

}  // namespace

const char* to_string(Interp i) {
  switch (i) {
    case Interp::Step: return "step";
    case Interp::Linear: return "linear";
    case Interp::CubicBezier: return "bezier";
  }
  return "linear";
}

std::optional<Interp> interp_from_string(const std::string& s) {
  if (s == "step") return Interp::Step;
  if (s == "linear") return Interp::Linear;
  if (s == "bezier") return Interp::CubicBezier;
  return std::nullopt;
}

std::string target_name(int target) {
  return target == kGripperTarget ? "gripper" : "joint " + std::to_string(target);
}

double Sequence::duration() const {
  double d = 0.0;
  for (const auto& ch : channels) {
    if (!ch.keys.empty()) d = std::max(d, ch.keys.back().t);
  }
  return d;
}

const Channel* Sequence::find(int target) const {
  for (const auto& ch : channels) {
    if (ch.target == target) return &ch;
  }
  return nullptr;
}

double evaluate_channel(const Channel& channel, double t) {
  const auto& keys = channel.keys;
  if (keys.empty()) return 0.0;
  if (t <= keys.front().t) return keys.front().value;
  if (t >= keys.back().t) return keys.back().value;
  const auto next = std::upper_bound(keys.begin(), keys.end(), t,
                                     [](double tt, const Keyframe& k) { return tt < k.t; });
  const Keyframe& k1 = *next;
  const Keyframe& k0 = *(next - 1);
  if (t == k0.t) return k0.value;
  switch (k0.interp) {
    case Interp::Step:
      return k0.value;
    case Interp::Linear:
      return k0.value + (k1.value - k0.value) * ((t - k0.t) / (k1.t - k0.t));
    case Interp::CubicBezier:
      return bezier_value(k0, k1, t);
  }
  return k0.value;
}

Frame evaluate(const Sequence& seq, double t, int joint_count) {
  Frame f{JointVector::Zero(joint_count), 0.0};
  for (const auto& ch : seq.channels) {
    if (ch.target == kGripperTarget) {
      f.gripper = evaluate_channel(ch, t);
    } else if (ch.target >= 0 && ch.target < joint_count) {
      f.q[ch.target] = evaluate_channel(ch, t);
    }
  }
  return f;
}

void validate_structure(const Sequence& seq) {
  for (std::size_t ci = 0; ci < seq.channels.size(); ++ci) {
    const auto& ch = seq.channels[ci];
    if (ch.target < kGripperTarget) {
      throw Error(ErrorCode::Validation, channel_path(ci) + ".target: invalid target");
    }
    for (std::size_t cj = 0; cj < ci; ++cj) {
      if (seq.channels[cj].target == ch.target) {
        throw Error(ErrorCode::Validation, channel_path(ci) + ".target: duplicate channel for " +
                                               target_name(ch.target));
      }
    }
    for (std::size_t ki = 0; ki < ch.keys.size(); ++ki) {
      const auto& k = ch.keys[ki];
      check_key_shape(k, key_path(ci, ki));
      if (ki > 0) {
        const auto& prev = ch.keys[ki - 1];
        if (!(k.t > prev.t + kTimeEpsilon)) {
          throw Error(ErrorCode::Validation,
                      key_path(ci, ki) + ".t: keys must be strictly increasing in time");
        }
        const double span = k.t - prev.t;
        if (prev.h_out.dt > span + kTimeEpsilon || k.h_in.dt > span + kTimeEpsilon) {
          throw Error(ErrorCode::Validation,
                      key_path(ci, ki) + ": bezier handles cross a neighbouring key");
        }
      }
    }
  }
}

void validate(const Sequence& seq, const RobotModel& model) {
  if (!seq.robot.empty() && seq.robot != model.name) {
    throw Error(ErrorCode::ModelMismatch, "sequence '" + seq.name + "' targets robot '" +
                                              seq.robot + "', model is '" + model.name + "'");
  }
  for (std::size_t ci = 0; ci < seq.channels.size(); ++ci) {
    check_target(model, seq.channels[ci].target, channel_path(ci));
  }
  validate_structure(seq);
  for (std::size_t ci = 0; ci < seq.channels.size(); ++ci) {
    const auto& ch = seq.channels[ci];
    const auto [lo, hi] = target_range(model, ch.target);
    for (std::size_t ki = 0; ki < ch.keys.size(); ++ki) {
      const double v = ch.keys[ki].value;
      if (v < lo || v > hi) {
        std::ostringstream os;
        os << key_path(ci, ki) << ".v: " << v << " outside " << target_name(ch.target)
           << " range [" << lo << ", " << hi << "]";
        throw Error(ErrorCode::Validation, os.str());
      }
    }
  }
}

Sequence insert_keyframe(const Sequence& seq, const RobotModel& model, int target,
                         const Keyframe& key) {
  const std::string at = "insert " + target_name(target);
  check_target(model, target, at);
  check_key_shape(key, at);
  const auto [lo, hi] = target_range(model, target);
  if (key.value < lo || key.value > hi) {
    std::ostringstream os;
    os << at << ": value " << key.value << " outside range [" << lo << ", " << hi << "]";
    throw Error(ErrorCode::Validation, os.str());
  }
  Sequence out = seq;
  auto it = std::find_if(out.channels.begin(), out.channels.end(),
                         [&](const Channel& c) { return c.target == target; });
  if (it == out.channels.end()) {
    out.channels.push_back({target, {}});
    it = out.channels.end() - 1;
  }
  auto existing = std::find_if(it->keys.begin(), it->keys.end(), [&](const Keyframe& k) {
    return std::abs(k.t - key.t) <= kTimeEpsilon;
  });
  if (existing != it->keys.end()) {
    const double t = existing->t;
    *existing = key;
    existing->t = t;
  } else {
    it->keys.push_back(key);
    sort_channel(*it);
  }
  normalize_handles(*it);
  return out;
}

Sequence delete_keyframe(const Sequence& seq, int target, double t) {
  Sequence out = seq;
  for (auto& ch : out.channels) {
    if (ch.target != target) continue;
    auto k = std::find_if(ch.keys.begin(), ch.keys.end(),
                          [&](const Keyframe& kf) { return std::abs(kf.t - t) <= kTimeEpsilon; });
    if (k == ch.keys.end()) break;
    ch.keys.erase(k);
    return out;
  }
  std::ostringstream os;
  os << "no key at t=" << t << " on " << target_name(target);
  throw Error(ErrorCode::InvalidArgument, os.str());
}

Sequence duplicate_segment(const Sequence& seq, double t0, double t1, double paste_at) {
  if (!(t0 >= 0.0) || !(t1 > t0) || !(paste_at >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "duplicate_segment: need 0 <= t0 < t1 and paste_at >= 0");
  }
  const double shift = paste_at - t0;
  bool any = false;
  for (const auto& ch : seq.channels) {
    for (const auto& k : ch.keys) any = any || (k.t >= t0 && k.t <= t1);
  }
  if (!any) return seq;

  const double w0 = paste_at, w1 = paste_at + (t1 - t0);
  for (const auto& ch : seq.channels) {
    for (const auto& k : ch.keys) {
      if (k.t >= w0 - kTimeEpsilon && k.t <= w1 + kTimeEpsilon) {
        std::ostringstream os;
        os << "duplicate_segment: paste window [" << w0 << ", " << w1 << "] overlaps the key at t="
           << k.t << " on " << target_name(ch.target);
        throw Error(ErrorCode::InvalidArgument, os.str());
      }
    }
  }

  Sequence out = seq;
  for (auto& ch : out.channels) {
    std::vector<Keyframe> copies;
    for (const auto& k : ch.keys) {
      if (k.t >= t0 && k.t <= t1) {
        Keyframe c = k;
        c.t = k.t + shift;
        copies.push_back(c);
      }
    }
    ch.keys.insert(ch.keys.end(), copies.begin(), copies.end());
    sort_channel(ch);
    normalize_handles(ch);
  }
  return out;
}

Sequence time_scale(const Sequence& seq, double t0, double t1, double factor) {
  if (!(factor > 0.0) || !std::isfinite(factor)) {
    throw Error(ErrorCode::InvalidArgument, "time_scale: factor must be positive");
  }
  if (!(t0 >= 0.0) || !(t1 > t0)) {
    throw Error(ErrorCode::InvalidArgument, "time_scale: need 0 <= t0 < t1");
  }
  if (factor == 1.0) return seq;
  const double tail_shift = (factor - 1.0) * (t1 - t0);
  Sequence out = seq;
  for (auto& ch : out.channels) {
    for (auto& k : ch.keys) {
      if (k.t >= t0 && k.t <= t1) {
        k.t = t0 + factor * (k.t - t0);
        k.h_in.dt *= factor;
        k.h_out.dt *= factor;
      } else if (k.t > t1) {
        k.t += tail_shift;
      }
    }
    for (std::size_t i = 1; i < ch.keys.size(); ++i) {
      if (!(ch.keys[i].t > ch.keys[i - 1].t + kTimeEpsilon)) {
        std::ostringstream os;
        os << "time_scale: keys near t=" << ch.keys[i].t << " on " << target_name(ch.target)
           << " would merge";
        throw Error(ErrorCode::InvalidArgument, os.str());
      }
    }
    normalize_handles(ch);
  }
  return out;
}

TrajectoryLog sample(const Sequence& seq, double rate, int joint_count) {
  if (!(rate > 0.0)) throw Error(ErrorCode::InvalidArgument, "sample: rate must be positive");
  TrajectoryLog log;
  log.rate = rate;
  log.sequence_name = seq.name;
  log.model_name = seq.robot;
  log.reference_only = true;
  const auto n = static_cast<long>(std::ceil(seq.duration() * rate - 1e-9));
  const double h = 1e-6;
  for (long i = 0; i <= std::max(n, 0L); ++i) {
    const double t = static_cast<double>(i) / rate;
    const Frame f = evaluate(seq, t, joint_count);
    const Frame ahead = evaluate(seq, t + h, joint_count);
    LogRow r;
    r.t = t;
    r.q_ref = f.q;
    r.q = f.q;
    if (t >= h) {
      r.qd = (ahead.q - evaluate(seq, t - h, joint_count).q) / (2.0 * h);
    } else {
      r.qd = (ahead.q - f.q) / h;
    }
    r.gripper = f.gripper;
    log.rows.push_back(std::move(r));
  }
  return log;
}

Sequence sequence_from_json(const nlohmann::json& j) {
  json_util::check_version(j, "sequence");
  Sequence seq;
  seq.name = j.value("name", std::string());
  seq.robot = j.value("robot", std::string());
  const auto& channels = json_util::require_array(j, "channels", "");
  for (std::size_t ci = 0; ci < channels.size(); ++ci) {
    const auto& cj = channels[ci];
    const std::string at = channel_path(ci);
    if (!cj.is_object() || !cj.contains("target")) {
      throw Error(ErrorCode::Validation, at + ".target: missing");
    }
    Channel ch;
    const auto& target = cj.at("target");
    if (target.is_string() && target.get<std::string>() == "gripper") {
      ch.target = kGripperTarget;
    } else if (target.is_number_integer() && target.get<long long>() >= 0) {
      ch.target = target.get<int>();
    } else {
      throw Error(ErrorCode::Validation, at + ".target: expected a joint index or \"gripper\"");
    }
    const auto& keys = json_util::require_array(cj, "keys", at);
    for (std::size_t ki = 0; ki < keys.size(); ++ki) {
      const auto& kj = keys[ki];
      const std::string kat = key_path(ci, ki);
      Keyframe k;
      k.t = json_util::require<double>(kj, "t", kat);
      k.value = json_util::require<double>(kj, "v", kat);
      const auto interp = kj.value("interp", std::string("linear"));
      const auto mode = interp_from_string(interp);
      if (!mode) throw Error(ErrorCode::Validation, kat + ".interp: unknown mode '" + interp + "'");
      k.interp = *mode;
      if (kj.contains("h_in")) k.h_in = handle_from_json(kj.at("h_in"), kat + ".h_in");
      if (kj.contains("h_out")) k.h_out = handle_from_json(kj.at("h_out"), kat + ".h_out");
      ch.keys.push_back(k);
    }
    seq.channels.push_back(std::move(ch));
  }
  validate_structure(seq);
  return seq;
}

nlohmann::json sequence_to_json(const Sequence& seq) {
  nlohmann::json channels = nlohmann::json::array();
  for (const auto& ch : seq.channels) {
    nlohmann::json keys = nlohmann::json::array();
    for (const auto& k : ch.keys) {
      keys.push_back({{"t", k.t},
                      {"v", k.value},
                      {"interp", to_string(k.interp)},
                      {"h_in", {k.h_in.dt, k.h_in.dv}},
                      {"h_out", {k.h_out.dt, k.h_out.dv}}});
    }
    nlohmann::json target = ch.target == kGripperTarget ? nlohmann::json("gripper")
                                                        : nlohmann::json(ch.target);
    channels.push_back({{"target", target}, {"keys", keys}});
  }
  return {{"version", 1}, {"name", seq.name}, {"robot", seq.robot}, {"channels", channels}};
}

Sequence load_sequence(const std::string& path) {
  return sequence_from_json(json_util::read_file(path));
}

void save_sequence(const Sequence& seq, const std::string& path) {
  json_util::write_file(path, sequence_to_json(seq).dump(2) + "\n");
}

}  // namespace mstudio
