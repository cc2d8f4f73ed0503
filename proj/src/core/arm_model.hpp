#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <map>
#include <string>
#include <vector>

#include "json.hpp"

namespace mstudio {

using JointVector = Eigen::VectorXd;
using Jacobian = Eigen::Matrix<double, 6, Eigen::Dynamic>;

// One revolute joint in standard Denavit-Hartenberg form:
//   T_i = Rz(theta_offset + q_i) * Tz(d) * Tx(a) * Rx(alpha)
struct JointSpec {
  double a = 0.0;             // link length [m]
  double alpha = 0.0;         // link twist [rad]
  double d = 0.0;             // link offset [m]
  double theta_offset = 0.0;  // constant added to the joint variable [rad]
  double min = -3.141592653589793;
  double max = 3.141592653589793;
  double vel_limit = 1.0;       // [rad/s]
  double inertia = 1.0;         // lumped [kg m^2]
  double damping = 0.0;         // [N m s/rad]
  double gravity_torque = 0.0;  // constant load torque [N m], 0 = no gravity
};

struct RobotModel {
  std::string name;
  std::vector<JointSpec> joints;
  double gripper_min = 0.0;
  double gripper_max = 1.0;
  std::map<std::string, JointVector> presets;

  int dof() const { return static_cast<int>(joints.size()); }
  bool within_limits(const JointVector& q, double tol = 0.0) const;
  JointVector clamp(const JointVector& q) const;
  JointVector lower() const;
  JointVector upper() const;
  JointVector vel_limits() const;
  // "home" preset when present, else the zero vector clamped into limits.
  JointVector home() const;
};

struct Pose {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  Eigen::Quaterniond orientation = Eigen::Quaterniond::Identity();
};

// Throws Error(Validation) naming the offending field.
void validate(const RobotModel& model);

RobotModel model_from_json(const nlohmann::json& j);
nlohmann::json model_to_json(const RobotModel& model);
RobotModel load_model(const std::string& path);

// Two-link planar arm with revolute z joints, links 1.0 m and 0.5 m.
RobotModel planar_two_link();

Pose forward_kinematics(const RobotModel& model, const JointVector& q);

// Frame origins and z axes for joints 0..N-1 plus the end-effector pose.
struct ChainFrames {
  std::vector<Eigen::Vector3d> origins;  // origin of frame i-1 (the axis of joint i)
  std::vector<Eigen::Vector3d> axes;
  Pose end_effector;
};
ChainFrames chain_frames(const RobotModel& model, const JointVector& q);

// Geometric Jacobian in the base frame; rows 0-2 linear, 3-5 angular.
Jacobian jacobian(const RobotModel& model, const JointVector& q);

// Yoshikawa measure: product of the singular values of the task Jacobian
// (position rows for N < 6, full Jacobian otherwise).
double manipulability(const RobotModel& model, const JointVector& q);

// Rows of the Jacobian that are controlled for this arm: 3 for N < 6, else 6.
int task_rows(const RobotModel& model);

// Angle of the rotation taking `from` to `to`, in [0, pi].
double orientation_error(const Eigen::Quaterniond& from, const Eigen::Quaterniond& to);

// Damped pseudo-inverse solve: argmin |J x - b|^2 + lambda^2 |x|^2.
Eigen::VectorXd damped_solve(const Eigen::MatrixXd& J, const Eigen::VectorXd& b, double lambda);

struct IkOptions {
  double pos_tol = 1e-4;  // [m]
  double rot_tol = 1e-3;  // [rad]
  int max_iterations = 200;  // per attempt
  int restarts = 8;          // extra attempts from fixed pseudo-random seeds
  double damping = 0.05;
  // Arms with fewer than six joints cannot place an arbitrary orientation;
  // by default they are solved for position only.
  enum class Orientation { Auto, Enforce, Ignore } orientation = Orientation::Auto;
};

struct IkResult {
  JointVector solution;
  double position_error = 0.0;
  double orientation_error = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Damped-least-squares IK clamped to joint limits every step. Throws
// Error(OutOfReach) when the best error over all attempts exceeds ten times
// the tolerance; otherwise returns the best iterate found.
IkResult inverse_kinematics(const RobotModel& model, const Pose& target, const JointVector& seed,
                            const IkOptions& opts = {});

}  // namespace mstudio
