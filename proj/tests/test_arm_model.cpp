#include "doctest.h"

#include "arm_model.hpp"
#include "error.hpp"
#include "support/oracles.hpp"

#include <random>

using namespace mstudio;

namespace {

JointVector jv(std::initializer_list<double> v) {
  JointVector q(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) q[i++] = x;
  return q;
}

JointVector random_q(const RobotModel& m, std::mt19937_64& rng, double margin = 0.0) {
  JointVector q(m.dof());
  for (int i = 0; i < m.dof(); ++i) {
    std::uniform_real_distribution<double> d(m.joints[i].min + margin, m.joints[i].max - margin);
    q[i] = d(rng);
  }
  return q;
}

RobotModel single_joint() {
  RobotModel m;
  m.name = "one";
  JointSpec s;
  s.a = 0.7;
  m.joints.push_back(s);
  return m;
}

RobotModel gen3like() {
  RobotModel m = load_model(MS_SOURCE_DIR "/models/gen3lite_like.json");
  return m;
}

}  // namespace

TEST_CASE("planar forward kinematics hand cases") {
  const RobotModel m = planar_two_link();
  const double pi = oracle::kPi;
  struct Case {
    double q1, q2, x, y;
  } cases[] = {{0, 0, 1.5, 0}, {pi / 2, 0, 0, 1.5}, {pi / 2, -pi / 2, 0.5, 1.0}};
  for (const auto& c : cases) {
    const Pose p = forward_kinematics(m, jv({c.q1, c.q2}));
    CHECK(std::abs(p.position.x() - c.x) <= 1e-12);
    CHECK(std::abs(p.position.y() - c.y) <= 1e-12);
    CHECK(std::abs(p.position.z()) <= 1e-12);
    CHECK(std::abs(p.orientation.norm() - 1.0) <= 1e-9);
  }
}

TEST_CASE("planar forward kinematics agrees with trigonometry everywhere") {
  const RobotModel m = planar_two_link();
  std::mt19937_64 rng(11);
  for (int k = 0; k < 200; ++k) {
    const JointVector q = random_q(m, rng);
    const Eigen::Vector2d ref = oracle::planar_fk(1.0, 0.5, q[0], q[1]);
    const Pose p = forward_kinematics(m, q);
    CHECK((p.position.head<2>() - ref).norm() <= 1e-12);
    // Planar chain: orientation is a pure yaw of q1 + q2.
    const Eigen::Quaterniond yaw(Eigen::AngleAxisd(q[0] + q[1], Eigen::Vector3d::UnitZ()));
    CHECK(orientation_error(p.orientation, yaw) <= 1e-9);
  }
}

TEST_CASE("dimension mismatch is reported") {
  const RobotModel m = planar_two_link();
  CHECK_THROWS_AS(forward_kinematics(m, jv({0.0})), Error);
  try {
    jacobian(m, jv({0, 0, 0}));
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DimensionMismatch);
  }
}

TEST_CASE("jacobian matches finite differences") {
  std::mt19937_64 rng(5);
  for (const RobotModel& m : {planar_two_link(), gen3like()}) {
    for (int k = 0; k < 50; ++k) {
      const JointVector q = random_q(m, rng, 1e-3);
      const Jacobian J = jacobian(m, q);
      const auto F = oracle::fd_jacobian(m, q);
      CHECK((J - F).cwiseAbs().maxCoeff() <= 1e-5);
    }
  }
}

TEST_CASE("jacobian lever arm at the extended pose") {
  const Jacobian J = jacobian(planar_two_link(), jv({0, 0}));
  CHECK((J.block<3, 1>(0, 1) - Eigen::Vector3d(0, 0.5, 0)).norm() <= 1e-12);
  CHECK((J.block<3, 1>(0, 0) - Eigen::Vector3d(0, 1.5, 0)).norm() <= 1e-12);
}

TEST_CASE("single joint angular row is one about its axis") {
  const RobotModel m = single_joint();
  for (double q : {-2.0, -0.3, 0.0, 1.1, 3.0}) {
    const Jacobian J = jacobian(m, jv({q}));
    CHECK(J(5, 0) == doctest::Approx(1.0));
    CHECK(std::abs(J(3, 0)) <= 1e-15);
    CHECK(std::abs(J(4, 0)) <= 1e-15);
  }
}

TEST_CASE("manipulability of the planar arm") {
  const RobotModel m = planar_two_link();
  for (double q1 : {-2.0, 0.0, 0.4, 3.0}) CHECK(manipulability(m, jv({q1, 0.0})) <= 1e-9);
  CHECK(manipulability(m, jv({0, oracle::kPi / 2})) == doctest::Approx(0.5).epsilon(1e-12));
  std::mt19937_64 rng(3);
  for (int k = 0; k < 100; ++k) {
    const JointVector q = random_q(m, rng);
    const double w = manipulability(m, q);
    CHECK(w >= 0.0);
    CHECK(w == doctest::Approx(oracle::planar_manipulability(1.0, 0.5, q[1])).epsilon(1e-9));
  }
  // Approaches zero towards the folded and extended configurations.
  double prev = 1.0;
  for (double q2 : {0.5, 0.1, 0.01, 1e-4}) {
    const double w = manipulability(m, jv({0.3, q2}));
    CHECK(w < prev);
    prev = w;
  }
}

TEST_CASE("manipulability is invariant under a base rotation") {
  RobotModel m = gen3like();
  RobotModel rotated = m;
  // Rotating the base about z is an offset on the first joint angle.
  rotated.joints[0].theta_offset += 0.7;
  std::mt19937_64 rng(9);
  for (int k = 0; k < 20; ++k) {
    JointVector q = random_q(m, rng, 0.8);
    JointVector q2 = q;
    q2[0] -= 0.7;
    CHECK(manipulability(m, q) == doctest::Approx(manipulability(rotated, q2)).epsilon(1e-9));
  }
  const RobotModel p = planar_two_link();
  RobotModel pr = p;
  pr.joints[0].theta_offset = 1.3;
  CHECK(manipulability(p, jv({0.2, 0.9})) == doctest::Approx(manipulability(pr, jv({0.2 - 1.3, 0.9}))));
}

TEST_CASE("ik fixed point returns the seed") {
  const RobotModel m = planar_two_link();
  const JointVector seed = jv({0.3, 0.8});
  const IkResult r = inverse_kinematics(m, forward_kinematics(m, seed), seed);
  CHECK(r.converged);
  CHECK(r.iterations <= 1);
  CHECK((r.solution - seed).norm() <= 1e-9);
  CHECK(r.position_error <= 1e-12);
}

TEST_CASE("ik reaches (1.2, 0.3, 0)") {
  const RobotModel m = planar_two_link();
  Pose target;
  target.position = {1.2, 0.3, 0.0};
  const IkResult r = inverse_kinematics(m, target, jv({0.1, 0.5}));
  CHECK(r.converged);
  CHECK((forward_kinematics(m, r.solution).position - target.position).norm() <= 1e-4);
  CHECK(m.within_limits(r.solution));
}

TEST_CASE("ik out of reach") {
  const RobotModel m = planar_two_link();
  Pose target;
  target.position = {2.0, 0.0, 0.0};
  try {
    inverse_kinematics(m, target, jv({0.1, 0.5}));
    FAIL("expected OutOfReach");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::OutOfReach);
  }
}

TEST_CASE("ik rejects a seed outside the limits") {
  const RobotModel m = planar_two_link();
  Pose target;
  target.position = {1.0, 0.5, 0.0};
  CHECK_THROWS_AS(inverse_kinematics(m, target, jv({4.0, 0.0})), Error);
}

TEST_CASE("fk-ik round trip from random configurations") {
  const RobotModel m = planar_two_link();
  std::mt19937_64 rng(21);
  for (int k = 0; k < 100; ++k) {
    const JointVector q = random_q(m, rng);
    const Pose target = forward_kinematics(m, q);
    // Seed away from the answer so the solver has work to do.
    JointVector seed = q;
    seed[0] += 0.4;
    seed[1] += (q[1] > 0 ? -0.4 : 0.4);
    const IkResult r = inverse_kinematics(m, target, m.clamp(seed));
    CHECK(r.converged);
    CHECK((forward_kinematics(m, r.solution).position - target.position).norm() <= 1e-4);
  }
}

TEST_CASE("ik solutions respect joint limits") {
  RobotModel m = planar_two_link();
  m.joints[1].min = 0.0;  // elbow may only bend one way
  m.joints[1].max = 2.5;
  m.presets.clear();
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> ang(-3.0, 3.0), rad(0.6, 1.45);
  int converged = 0;
  for (int k = 0; k < 100; ++k) {
    Pose target;
    const double a = ang(rng), r = rad(rng);
    target.position = {r * std::cos(a), r * std::sin(a), 0.0};
    try {
      const IkResult res = inverse_kinematics(m, target, jv({0.0, 1.0}));
      CHECK(m.within_limits(res.solution));
      converged += res.converged;
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::OutOfReach);
    }
  }
  CHECK(converged > 50);
}

TEST_CASE("six-joint arm solves full pose targets") {
  const RobotModel m = gen3like();
  std::mt19937_64 rng(17);
  int ok = 0;
  for (int k = 0; k < 20; ++k) {
    const JointVector q = random_q(m, rng, 1.0);
    JointVector seed = q;
    for (int i = 0; i < m.dof(); ++i) seed[i] += 0.05 * std::sin(3.0 * i + k);
    const Pose target = forward_kinematics(m, q);
    const IkResult r = inverse_kinematics(m, target, m.clamp(seed));
    if (r.converged) {
      ++ok;
      const Pose got = forward_kinematics(m, r.solution);
      CHECK((got.position - target.position).norm() <= 1e-4);
      CHECK(orientation_error(got.orientation, target.orientation) <= 1e-3);
    }
  }
  CHECK(ok >= 18);
}

TEST_CASE("damped solve matches the normal equations") {
  Eigen::MatrixXd J(3, 2);
  J << 1, 2, 0.5, -1, 0.3, 0.2;
  Eigen::VectorXd b(3);
  b << 0.1, -0.2, 0.4;
  const double lambda = 0.05;
  const Eigen::VectorXd x = damped_solve(J, b, lambda);
  const Eigen::MatrixXd A = J.transpose() * J + lambda * lambda * Eigen::MatrixXd::Identity(2, 2);
  const Eigen::VectorXd ref = A.ldlt().solve(J.transpose() * b);
  CHECK((x - ref).norm() <= 1e-12);
}

TEST_CASE("model validation") {
  RobotModel m = planar_two_link();
  CHECK_NOTHROW(validate(m));
  auto expect_invalid = [](RobotModel bad, const std::string& fragment) {
    try {
      validate(bad);
      FAIL("expected validation error for " << fragment);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::Validation);
      CHECK(std::string(e.what()).find(fragment) != std::string::npos);
    }
  };
  RobotModel a = m;
  a.joints.clear();
  a.presets.clear();
  expect_invalid(a, "joint");
  RobotModel b = m;
  b.joints[1].min = 1.0;
  b.joints[1].max = 0.5;
  expect_invalid(b, "joints[1]");
  RobotModel c = m;
  c.joints[0].vel_limit = 0.0;
  expect_invalid(c, "vel_limit");
  RobotModel d = m;
  d.joints[0].inertia = 0.0;
  expect_invalid(d, "inertia");
  RobotModel e = m;
  e.joints[0].damping = -1.0;
  expect_invalid(e, "damping");
  RobotModel f = m;
  f.presets["bad"] = jv({0.0});
  expect_invalid(f, "presets.bad");
  RobotModel g = m;
  g.presets["far"] = jv({0.0, 4.0});
  expect_invalid(g, "presets.far");
}

TEST_CASE("model json round trip and file parsing") {
  const RobotModel m = planar_two_link();
  const RobotModel back = model_from_json(model_to_json(m));
  CHECK(model_to_json(back) == model_to_json(m));
  const RobotModel file = load_model(MS_SOURCE_DIR "/models/planar2.json");
  CHECK(file.dof() == 2);
  CHECK(file.joints[0].a == 1.0);
  CHECK(file.joints[1].a == 0.5);
  for (double q1 : {0.0, 0.7}) {
    CHECK((forward_kinematics(file, jv({q1, 0.4})).position - forward_kinematics(m, jv({q1, 0.4})).position).norm() ==
          0.0);
  }

  nlohmann::json j = model_to_json(m);
  j["version"] = 2;
  try {
    model_from_json(j);
    FAIL("expected version rejection");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnsupportedVersion);
  }
  j = model_to_json(m);
  j["joints"][1].erase("vel_limit");
  try {
    model_from_json(j);
    FAIL("expected validation error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("joints[1].vel_limit") != std::string::npos);
  }
  j = model_to_json(m);
  j["presets"]["home"] = "zero";
  CHECK_THROWS_AS(model_from_json(j), Error);
  j = model_to_json(m);
  j["gripper_range"] = {1};
  CHECK_THROWS_AS(model_from_json(j), Error);
}

TEST_CASE("orientation error is the rotation angle") {
  const Eigen::Quaterniond a(Eigen::AngleAxisd(0.3, Eigen::Vector3d::UnitX()));
  const Eigen::Quaterniond b(Eigen::AngleAxisd(0.3 + 0.25, Eigen::Vector3d::UnitX()));
  CHECK(orientation_error(a, b) == doctest::Approx(0.25));
  // q and -q are the same rotation.
  const Eigen::Quaterniond neg(-b.w(), -b.x(), -b.y(), -b.z());
  CHECK(orientation_error(a, neg) == doctest::Approx(0.25));
}
