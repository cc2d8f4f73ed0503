#pragma once

// Random protocol messages for round-trip tests. Values are finite doubles
// and valid UTF-8 strings, the domain the wire format promises to carry.

#include "protocol.hpp"

#include <random>
#include <string>

namespace randmsg {

using namespace mstudio;
using namespace mstudio::protocol;
using Rng = std::mt19937_64;

inline double real(Rng& rng, double lo = -1e3, double hi = 1e3) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline std::uint64_t id(Rng& rng) {
  switch (rng() % 3) {
    case 0: return rng() % 10;
    case 1: return rng();  // full 64-bit range
    default: return rng() % 100000;
  }
}

inline bool coin(Rng& rng) { return rng() % 2 == 0; }

inline std::string text(Rng& rng) {
  static const char* pieces[] = {"a", "Z", "0", " ", "\"", "\\", "/", "\n", "\t", "\x01", "{", "}",
                                 "é", "→", "日本", "😀", "null", ",", ":"};
  const std::size_t n = rng() % 12;
  std::string s;
  for (std::size_t i = 0; i < n; ++i) s += pieces[rng() % (sizeof(pieces) / sizeof(pieces[0]))];
  return s;
}

inline nlohmann::json json_value(Rng& rng, int depth = 0) {
  const int kind = static_cast<int>(rng() % (depth >= 3 ? 5 : 7));
  switch (kind) {
    case 0: return nullptr;
    case 1: return coin(rng);
    case 2: return static_cast<std::int64_t>(rng() % 2000) - 1000;
    case 3: return real(rng);
    case 4: return text(rng);
    case 5: {
      nlohmann::json a = nlohmann::json::array();
      for (std::size_t i = 0, n = rng() % 4; i < n; ++i) a.push_back(json_value(rng, depth + 1));
      return a;
    }
    default: {
      nlohmann::json o = nlohmann::json::object();
      for (std::size_t i = 0, n = rng() % 4; i < n; ++i) o[text(rng)] = json_value(rng, depth + 1);
      return o;
    }
  }
}

inline nlohmann::json json_object(Rng& rng) {
  nlohmann::json o = nlohmann::json::object();
  for (std::size_t i = 0, n = rng() % 5; i < n; ++i) o[text(rng)] = json_value(rng, 1);
  return o;
}

inline JointVector joints(Rng& rng, Eigen::Index n) {
  JointVector q(n);
  for (Eigen::Index i = 0; i < n; ++i) q[i] = real(rng, -4.0, 4.0);
  return q;
}

inline InputEvent event(Rng& rng) {
  InputEvent e;
  e.kind = static_cast<InputEvent::Kind>(rng() % 3);
  e.id = text(rng);
  if (e.kind == InputEvent::Kind::AxisMove) e.value = real(rng, -1.0, 1.0);
  e.t = real(rng, 0.0, 100.0);
  return e;
}

inline Sequence sequence(Rng& rng) {
  Sequence s;
  s.name = text(rng);
  s.robot = text(rng);
  const int channels = static_cast<int>(rng() % 4);
  for (int c = 0; c < channels; ++c) {
    Channel ch;
    ch.target = c == 0 && coin(rng) ? kGripperTarget : c + 1;
    double t = real(rng, 0.0, 1.0);
    for (std::size_t k = 0, n = 1 + rng() % 4; k < n; ++k) {
      Keyframe key;
      key.t = t;
      key.value = real(rng, -3.0, 3.0);
      key.interp = static_cast<Interp>(rng() % 3);
      key.h_in = {real(rng, 0.0, 0.5), real(rng, -1.0, 1.0)};
      key.h_out = {real(rng, 0.0, 0.5), real(rng, -1.0, 1.0)};
      ch.keys.push_back(key);
      t += real(rng, 1.0, 2.0);  // wide enough that handles (<= 0.5) never cross
    }
    s.channels.push_back(ch);
  }
  return s;
}

inline IntendedTonalities intended(Rng& rng) {
  IntendedTonalities i;
  if (coin(rng)) i.spatial = static_cast<Spatial>(rng() % 3);
  if (coin(rng)) i.temporal = static_cast<Temporal>(rng() % 3);
  if (coin(rng)) i.weight = static_cast<Weight>(rng() % 3);
  if (coin(rng)) i.flow = static_cast<Flow>(rng() % 2);
  return i;
}

inline StateSnapshot snapshot(Rng& rng) {
  StateSnapshot s;
  const Eigen::Index n = 1 + static_cast<Eigen::Index>(rng() % 7);
  s.t = real(rng, 0.0, 1e4);
  s.q = joints(rng, n);
  s.qd = joints(rng, n);
  s.ee_pose.position = Eigen::Vector3d(real(rng), real(rng), real(rng));
  s.ee_pose.orientation = Eigen::Quaterniond(real(rng), real(rng), real(rng), real(rng));
  s.mode = static_cast<SimMode>(rng() % 3);
  if (coin(rng)) s.fault = static_cast<FaultKind>(rng() % 3);
  s.manipulability = real(rng, 0.0, 2.0);
  s.gripper = real(rng, 0.0, 1.0);
  s.teleop_mode = static_cast<TeleopMode>(rng() % 2);
  s.selected_joint = static_cast<int>(rng() % 7);
  s.joint_speed_scale = real(rng, 0.0, 1.0);
  s.cart_speed_scale = real(rng, 0.0, 1.0);
  s.inertia_enabled = coin(rng);
  return s;
}

inline std::optional<std::string> maybe_text(Rng& rng) {
  if (coin(rng)) return text(rng);
  return std::nullopt;
}

// Random instance of alternative I of a variant.
template <typename V, std::size_t I = 0>
V make(Rng& rng, std::size_t which) {
  if constexpr (I + 1 < std::variant_size_v<V>) {
    if (which != I) return make<V, I + 1>(rng, which);
  }
  using T = std::variant_alternative_t<I, V>;
  T m{};
  if constexpr (std::is_same_v<T, Hello>) {
    m.client = text(rng);
    m.protocol_version = static_cast<int>(rng() % 5);
  } else if constexpr (std::is_same_v<T, Input>) {
    m.event = event(rng);
  } else if constexpr (std::is_same_v<T, ModeSet>) {
    m.mode = static_cast<TeleopMode>(rng() % 2);
  } else if constexpr (std::is_same_v<T, PresetGoto>) {
    m.name = text(rng);
  } else if constexpr (std::is_same_v<T, SeqUpload>) {
    m.sequence = sequence(rng);
  } else if constexpr (std::is_same_v<T, SeqPlay>) {
    m.seq_id = id(rng);
    m.record_rate = real(rng, 1.0, 1000.0);
  } else if constexpr (std::is_same_v<T, LogFetch>) {
    m.log_id = id(rng);
  } else if constexpr (std::is_same_v<T, Analyze>) {
    m.log_id = id(rng);
    m.impressions = maybe_text(rng);
    m.meaning = maybe_text(rng);
    m.intended = intended(rng);
  } else if constexpr (std::is_same_v<T, Welcome>) {
    m.protocol_version = static_cast<int>(rng() % 5);
    m.server = text(rng);
    m.session = id(rng);
    m.model = json_object(rng);
    m.bindings = json_object(rng);
    m.snapshot_rate = real(rng, 1.0, 200.0);
    m.fast = coin(rng);
  } else if constexpr (std::is_same_v<T, PilotDenied>) {
    m.holder = id(rng);
  } else if constexpr (std::is_same_v<T, Ack> || std::is_same_v<T, NotPilot>) {
    m.of = text(rng);
  } else if constexpr (std::is_same_v<T, protocol::Busy>) {
    m.reason = text(rng);
  } else if constexpr (std::is_same_v<T, ErrorReply>) {
    m.reason = text(rng);
    if (coin(rng)) m.offending_seq = id(rng);
  } else if constexpr (std::is_same_v<T, protocol::Snapshot>) {
    m.state = snapshot(rng);
  } else if constexpr (std::is_same_v<T, SeqUploaded>) {
    m.seq_id = id(rng);
    m.name = text(rng);
    m.duration = real(rng, 0.0, 100.0);
  } else if constexpr (std::is_same_v<T, PlayStarted>) {
    m.seq_id = id(rng);
  } else if constexpr (std::is_same_v<T, PlayDone>) {
    m.seq_id = id(rng);
    m.log_id = id(rng);
    m.rows = id(rng);
    m.stopped = coin(rng);
  } else if constexpr (std::is_same_v<T, LogData>) {
    m.log_id = id(rng);
    m.metadata = json_object(rng);
    m.csv = text(rng);
  } else if constexpr (std::is_same_v<T, Report>) {
    m.log_id = id(rng);
    m.report = json_object(rng);
    m.text = text(rng);
  } else if constexpr (std::is_same_v<T, Config>) {
    m.config = json_object(rng);
  }
  return V{std::move(m)};
}

}  // namespace randmsg
