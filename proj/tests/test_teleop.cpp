#include "doctest.h"

#include "error.hpp"
#include "teleop.hpp"
#include "support/oracles.hpp"

#include <random>

using namespace mstudio;

namespace {

InputEvent press(const std::string& id, double t = 0.0) {
  return {InputEvent::Kind::ButtonPress, id, 0.0, t};
}
InputEvent axis(const std::string& id, double v, double t = 0.0) {
  return {InputEvent::Kind::AxisMove, id, v, t};
}

JointVector jv(std::initializer_list<double> v) {
  JointVector q(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) q[i++] = x;
  return q;
}

RobotModel three_joint() {
  RobotModel m;
  m.name = "three";
  for (double a : {0.5, 0.4, 0.3}) {
    JointSpec s;
    s.a = a;
    s.vel_limit = 2.0;
    m.joints.push_back(s);
  }
  m.joints[2].vel_limit = 1.5;
  return m;
}

}  // namespace

TEST_CASE("mode toggle flips the mode and nothing else") {
  const RobotModel m = planar_two_link();
  const BindingMap b = default_bindings();
  TeleopState s = make_teleop_state(m);
  s = process_input(s, axis("left_y", 0.3), b);
  s.commanded_vel = jv({0.1, -0.2});
  const TeleopState after = process_input(s, press("options"), b);
  CHECK(after.mode == TeleopMode::Cartesian);
  TeleopState expected = s;
  expected.mode = TeleopMode::Cartesian;
  CHECK(after == expected);
  // Bit-identical velocity state across the toggle.
  CHECK(after.commanded_vel[0] == s.commanded_vel[0]);
  CHECK(after.commanded_vel[1] == s.commanded_vel[1]);
  CHECK(process_input(after, press("options"), b).mode == TeleopMode::Joint);
}

TEST_CASE("zero speed scale annihilates joint motion") {
  const RobotModel m = planar_two_link();
  TeleopState s = make_teleop_state(m);
  s.joint_speed_scale = 0.0;
  s = process_input(s, axis("left_y", 0.5), default_bindings());
  const auto r = resolve_velocity(s, m, jv({0.2, 0.3}));
  CHECK(r.velocity.isZero(0.0));
  CHECK(!r.fault);
}

TEST_CASE("fault latches motion until fault_clear") {
  const RobotModel m = planar_two_link();
  const BindingMap b = default_bindings();
  TeleopState s = make_teleop_state(m);
  s.fault = FaultKind::NearSingularity;
  s.commanded_vel = jv({0.4, 0.4});
  s = process_input(s, axis("left_y", 1.0), b);
  CHECK(s.commanded_vel.isZero(0.0));
  CHECK(resolve_velocity(s, m, jv({0.1, 0.5})).velocity.isZero(0.0));
  s = process_input(s, press("ps"), b);
  CHECK(!s.pending_preset);
  s = process_input(s, press("share"), b);
  CHECK(!s.fault);
  CHECK(!resolve_velocity(s, m, jv({0.1, 0.5})).velocity.isZero(0.0));
}

TEST_CASE("unknown binding leaves the state unchanged") {
  const RobotModel m = planar_two_link();
  const TeleopState s = make_teleop_state(m);
  const TeleopState after = process_input(s, press("no_such_button", 3.0), default_bindings());
  CHECK(after == s);
  CHECK(after.last_event_t == s.last_event_t);
}

TEST_CASE("axis values are clamped and scales stay in [0, 1]") {
  const RobotModel m = planar_two_link();
  const BindingMap b = default_bindings();
  TeleopState s = make_teleop_state(m);
  s = process_input(s, axis("left_y", 7.0), b);
  CHECK(s.axes[static_cast<std::size_t>(AxisAction::JointVelocity)] == 1.0);
  for (int i = 0; i < 30; ++i) s = process_input(s, press("r1"), b);
  CHECK(s.joint_speed_scale == 1.0);
  for (int i = 0; i < 30; ++i) s = process_input(s, press("l1"), b);
  CHECK(s.joint_speed_scale == 0.0);
  CHECK(s.cart_speed_scale == 0.5);  // only the active mode's scale moved
}

TEST_CASE("joint select cycles modulo the joint count") {
  const RobotModel m = three_joint();
  const BindingMap b = default_bindings();
  TeleopState s = make_teleop_state(m);
  for (int i = 1; i <= 7; ++i) {
    s = process_input(s, press("triangle"), b);
    CHECK(s.selected_joint == i % 3);
  }
  s = make_teleop_state(m);
  s = process_input(s, press("square"), b);
  CHECK(s.selected_joint == 2);
}

TEST_CASE("joint mode drives only the selected joint") {
  const RobotModel m = three_joint();
  TeleopState s = make_teleop_state(m);
  s.selected_joint = 2;
  s.joint_speed_scale = 0.5;
  s = process_input(s, axis("left_y", 1.0), default_bindings());
  const auto r = resolve_velocity(s, m, JointVector::Zero(3));
  CHECK(r.velocity[0] == 0.0);
  CHECK(r.velocity[1] == 0.0);
  CHECK(r.velocity[2] == doctest::Approx(0.5 * 1.5).epsilon(1e-15));
}

TEST_CASE("cartesian twist is reproduced through the jacobian") {
  const RobotModel m = planar_two_link();
  TeleopState s = make_teleop_state(m);
  s.mode = TeleopMode::Cartesian;
  s = process_input(s, axis("left_x", 1.0), default_bindings());  // +y
  const JointVector q = jv({0.0, oracle::kPi / 2});
  const auto r = resolve_velocity(s, m, q);
  CHECK(!r.fault);
  // Oracle: planar Jacobian written out by hand.
  const double q1 = q[0], q2 = q[1];
  Eigen::Matrix2d J;
  J << -std::sin(q1) - 0.5 * std::sin(q1 + q2), -0.5 * std::sin(q1 + q2), std::cos(q1) + 0.5 * std::cos(q1 + q2),
      0.5 * std::cos(q1 + q2);
  const Eigen::Vector2d xdot = J * r.velocity;
  const TeleopConfig cfg;
  const double vy = s.cart_speed_scale * cfg.cart_linear_speed;
  CHECK(std::abs(xdot[0]) <= 1e-6);
  CHECK(std::abs(xdot[1] - vy) <= 1e-6);
}

TEST_CASE("cartesian at the extended pose raises NearSingularity") {
  const RobotModel m = planar_two_link();
  TeleopState s = make_teleop_state(m);
  s.mode = TeleopMode::Cartesian;
  s = process_input(s, axis("left_x", 1.0), default_bindings());
  const auto r = resolve_velocity(s, m, jv({0.3, 0.0}));
  CHECK(r.velocity.isZero(0.0));
  REQUIRE(r.fault);
  CHECK(*r.fault == FaultKind::NearSingularity);
}

TEST_CASE("resolved velocities respect vel_limit under random streams") {
  const RobotModel m = three_joint();
  const BindingMap b = default_bindings();
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> val(-1.5, 1.5), ang(-3.0, 3.0);
  const std::vector<std::string> ids = {"left_y", "left_x", "right_y", "right_x", "options", "r1", "l1", "triangle", "share"};
  TeleopState s = make_teleop_state(m);
  for (int k = 0; k < 5000; ++k) {
    const std::string& id = ids[rng() % ids.size()];
    const bool is_axis = id.find('_') != std::string::npos;
    s = process_input(s, is_axis ? axis(id, val(rng), k * 0.01) : press(id, k * 0.01), b);
    const JointVector q = jv({ang(rng), ang(rng), ang(rng)});
    const auto r = resolve_velocity(s, m, q);
    for (int i = 0; i < 3; ++i) CHECK(std::abs(r.velocity[i]) <= m.joints[i].vel_limit * (1 + 1e-12));
    CHECK(s.joint_speed_scale >= 0.0);
    CHECK(s.joint_speed_scale <= 1.0);
    CHECK(s.selected_joint < 3);
    if (r.fault) s.fault = r.fault;
  }
}

TEST_CASE("processing is deterministic") {
  const RobotModel m = planar_two_link();
  const BindingMap b = default_bindings();
  std::vector<InputEvent> events;
  std::mt19937_64 rng(12);
  for (int k = 0; k < 500; ++k) events.push_back(k % 3 ? axis("left_y", (rng() % 200) / 100.0 - 1, k) : press("options", k));
  TeleopState a = make_teleop_state(m), c = make_teleop_state(m);
  for (const auto& e : events) a = process_input(a, e, b);
  for (const auto& e : events) c = process_input(c, e, b);
  CHECK(a == c);
}

TEST_CASE("apply_inertia examples") {
  const JointVector zero = JointVector::Zero(1), one = JointVector::Ones(1);
  CHECK(apply_inertia(zero, one, 0.1, 1.0, false)[0] == 1.0);
  CHECK(apply_inertia(zero, one, 0.4, 0.4, true)[0] == 1.0);
  CHECK(apply_inertia(zero, one, 2.0, 0.4, true)[0] == 1.0);
  CHECK(apply_inertia(zero, one, 0.1, 1.0, true)[0] == doctest::Approx(oracle::lag(0.0, 1.0, 0.1, 1.0)));
  CHECK(apply_inertia(zero, one, 0.1, 1.0, true)[0] == doctest::Approx(0.1));
  // Repeated steps converge towards the target like exp(-t / tau).
  JointVector v = zero;
  for (int k = 0; k < 1000; ++k) v = apply_inertia(v, one, 0.001, 0.4, true);
  CHECK(v[0] == doctest::Approx(1.0 - std::exp(-1.0 / 0.4)).epsilon(1e-3));
  CHECK_THROWS_AS(apply_inertia(zero, one, 0.0, 0.4, true), Error);
}

TEST_CASE("goto_preset durations") {
  RobotModel m = planar_two_link();
  auto req = goto_preset(m, jv({0, 0}), "home");
  CHECK(req.duration == 1.0);
  CHECK(min_jerk_position(req, 0.5) == jv({0, 0}));
  // Delta of vel_limit * 4 s on one joint: 4 / 0.5 = 8 s.
  m.presets["far"] = jv({4.0 * m.joints[0].vel_limit - 3.0, 0.0});
  req = goto_preset(m, jv({-3.0, 0.0}), "far");
  CHECK(req.duration == doctest::Approx(8.0).epsilon(1e-15));
  try {
    goto_preset(m, jv({0, 0}), "foo");
    FAIL("expected UnknownPreset");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnknownPreset);
  }
}

TEST_CASE("minimum-jerk preset reference") {
  const MotionRequest req{jv({0.0}), jv({2.0}), 4.0};
  for (double t : {0.0, 0.7, 2.0, 3.1, 4.0}) {
    CHECK(min_jerk_position(req, t)[0] == doctest::Approx(2.0 * oracle::mj_s(t / 4.0)));
  }
  CHECK(min_jerk_velocity(req, 2.0)[0] == doctest::Approx(2.0 * 30 * 0.0625 / 4.0));
  CHECK(min_jerk_position(req, 10.0)[0] == 2.0);
}

TEST_CASE("command timeout") {
  const RobotModel m = planar_two_link();
  TeleopState s = make_teleop_state(m);
  s.last_event_t = 1.0;
  CHECK(!check_timeout(s, 10.0).fault);  // idle: no timeout
  s.commanded_vel = jv({0.2, 0.0});
  CHECK(!check_timeout(s, 3.0).fault);
  const TeleopState t = check_timeout(s, 3.01);
  REQUIRE(t.fault);
  CHECK(*t.fault == FaultKind::CommandTimeout);
  CHECK(t.commanded_vel.isZero(0.0));
}

TEST_CASE("bindings parse, round trip and reject unknown actions") {
  const BindingMap file = load_bindings(MS_SOURCE_DIR "/config/bindings.default.json");
  CHECK(bindings_to_json(file) == bindings_to_json(default_bindings()));
  CHECK(bindings_to_json(bindings_from_json(bindings_to_json(file))) == bindings_to_json(file));
  const auto preset = parse_action("preset:elbow");
  REQUIRE(preset);
  CHECK(preset->button == ButtonAction::Preset);
  CHECK(preset->preset == "elbow");
  CHECK(!parse_action("fly"));
  CHECK_THROWS_AS(bindings_from_json(nlohmann::json{{"x", "fly"}}), Error);
  CHECK_THROWS_AS(bindings_from_json(nlohmann::json{{"version", 9}, {"x", "mode_toggle"}}), Error);
}

TEST_CASE("event lists parse in both accepted forms") {
  const std::vector<InputEvent> ev = {axis("left_y", 0.5, 0.1), press("options", 0.2),
                                      {InputEvent::Kind::ButtonRelease, "options", 0.0, 0.3}};
  const auto j = events_to_json(ev);
  CHECK(events_from_json(j) == ev);
  CHECK(events_from_json(j["events"]) == ev);
  nlohmann::json bad = j;
  bad["events"][0]["kind"] = "wiggle";
  CHECK_THROWS_AS(events_from_json(bad), Error);
}
