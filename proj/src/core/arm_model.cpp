#include "arm_model.hpp"

#include "error.hpp"
#include "json_util.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

namespace mstudio {

namespace {

constexpr double kPi = 3.141592653589793;
constexpr double kDampingFade = 0.01;  // [m]
constexpr double kRotToPos = 0.1;      // [m/rad] when weighing rotation error
constexpr double kMaxIkStep = 0.5;     // [rad]

Eigen::Isometry3d dh_transform(const JointSpec& j, double q) {
  const double theta = j.theta_offset + q;
  const double ct = std::cos(theta), st = std::sin(theta);
  const double ca = std::cos(j.alpha), sa = std::sin(j.alpha);
  Eigen::Matrix4d m;
  m << ct, -st * ca, st * sa, j.a * ct,
       st, ct * ca, -ct * sa, j.a * st,
       0.0, sa, ca, j.d,
       0.0, 0.0, 0.0, 1.0;
  Eigen::Isometry3d t;
  t.matrix() = m;
  return t;
}

void check_dof(const RobotModel& model, const JointVector& q) {
  if (q.size() != model.dof()) {
    std::ostringstream os;
    os << "joint vector has " << q.size() << " entries, model '" << model.name << "' has "
       << model.dof() << " joints";
    throw Error(ErrorCode::DimensionMismatch, os.str());
  }
}

Eigen::Vector3d rotation_vector(const Eigen::Quaterniond& from, const Eigen::Quaterniond& to) {
  Eigen::Quaterniond d = to * from.conjugate();
  if (d.w() < 0.0) d.coeffs() = -d.coeffs();
  const Eigen::AngleAxisd aa(d.normalized());
  return aa.axis() * aa.angle();
}

}  // namespace

bool RobotModel::within_limits(const JointVector& q, double tol) const {
  if (q.size() != dof()) return false;
  for (int i = 0; i < dof(); ++i) {
    if (!(q[i] >= joints[i].min - tol && q[i] <= joints[i].max + tol)) return false;
  }
  return true;
}

JointVector RobotModel::clamp(const JointVector& q) const {
  JointVector out = q;
  for (int i = 0; i < dof(); ++i) out[i] = std::clamp(q[i], joints[i].min, joints[i].max);
  return out;
}

JointVector RobotModel::lower() const {
  JointVector v(dof());
  for (int i = 0; i < dof(); ++i) v[i] = joints[i].min;
  return v;
}

JointVector RobotModel::upper() const {
  JointVector v(dof());
  for (int i = 0; i < dof(); ++i) v[i] = joints[i].max;
  return v;
}

JointVector RobotModel::vel_limits() const {
  JointVector v(dof());
  for (int i = 0; i < dof(); ++i) v[i] = joints[i].vel_limit;
  return v;
}

JointVector RobotModel::home() const {
  if (auto it = presets.find("home"); it != presets.end()) return it->second;
  return clamp(JointVector::Zero(dof()));
}

void validate(const RobotModel& model) {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::Validation, msg); };
  if (model.joints.empty()) fail("model must have at least one joint");
  for (std::size_t i = 0; i < model.joints.size(); ++i) {
    const auto& j = model.joints[i];
    const std::string at = "joints[" + std::to_string(i) + "]";
    if (!(j.min < j.max)) fail(at + ".limits: min must be below max");
    if (!(j.vel_limit > 0.0)) fail(at + ".vel_limit must be positive");
    if (!(j.inertia > 0.0)) fail(at + ".inertia must be positive");
    if (!(j.damping >= 0.0)) fail(at + ".damping must be non-negative");
    for (double v : {j.a, j.alpha, j.d, j.theta_offset, j.gravity_torque}) {
      if (!std::isfinite(v)) fail(at + ": link parameters must be finite");
    }
  }
  if (!(model.gripper_min < model.gripper_max)) fail("gripper_range: min must be below max");
  for (const auto& [name, q] : model.presets) {
    if (q.size() != model.dof()) {
      fail("presets." + name + ": expected " + std::to_string(model.dof()) + " values");
    }
    if (!model.within_limits(q)) fail("presets." + name + ": outside joint limits");
  }
}

RobotModel model_from_json(const nlohmann::json& j) {
  json_util::check_version(j, "robot model");
  RobotModel m;
  m.name = json_util::require<std::string>(j, "name", "");
  const auto& joints = json_util::require_array(j, "joints", "");
  for (std::size_t i = 0; i < joints.size(); ++i) {
    const auto& jj = joints[i];
    const std::string at = "joints[" + std::to_string(i) + "]";
    JointSpec s;
    s.a = json_util::require<double>(jj, "a", at);
    s.alpha = json_util::require<double>(jj, "alpha", at);
    s.d = json_util::require<double>(jj, "d", at);
    s.theta_offset = jj.value("theta_offset", 0.0);
    const auto lim = json_util::require<std::vector<double>>(jj, "limits", at);
    if (lim.size() != 2) throw Error(ErrorCode::Validation, at + ".limits: expected [min, max]");
    s.min = lim[0];
    s.max = lim[1];
    s.vel_limit = json_util::require<double>(jj, "vel_limit", at);
    s.inertia = json_util::require<double>(jj, "inertia", at);
    s.damping = json_util::require<double>(jj, "damping", at);
    s.gravity_torque = jj.value("gravity_torque", 0.0);
    m.joints.push_back(s);
  }
  if (j.contains("gripper_range")) {
    const auto g = json_util::require<std::vector<double>>(j, "gripper_range", "");
    if (g.size() != 2) throw Error(ErrorCode::Validation, "gripper_range: expected [min, max]");
    m.gripper_min = g[0];
    m.gripper_max = g[1];
  }
  if (j.contains("presets")) {
    if (!j.at("presets").is_object()) throw Error(ErrorCode::Validation, "presets: expected an object");
    for (const auto& [name, values] : j.at("presets").items()) {
      const auto v = json_util::require<std::vector<double>>(j.at("presets"), name, "presets");
      m.presets[name] = Eigen::Map<const JointVector>(v.data(), static_cast<Eigen::Index>(v.size()));
    }
  }
  validate(m);
  return m;
}

nlohmann::json model_to_json(const RobotModel& model) {
  nlohmann::json joints = nlohmann::json::array();
  for (const auto& s : model.joints) {
    joints.push_back({{"a", s.a},
                      {"alpha", s.alpha},
                      {"d", s.d},
                      {"theta_offset", s.theta_offset},
                      {"limits", {s.min, s.max}},
                      {"vel_limit", s.vel_limit},
                      {"inertia", s.inertia},
                      {"damping", s.damping},
                      {"gravity_torque", s.gravity_torque}});
  }
  nlohmann::json presets = nlohmann::json::object();
  for (const auto& [name, q] : model.presets) {
    presets[name] = std::vector<double>(q.data(), q.data() + q.size());
  }
  return {{"version", 1},
          {"name", model.name},
          {"joints", joints},
          {"gripper_range", {model.gripper_min, model.gripper_max}},
          {"presets", presets}};
}

RobotModel load_model(const std::string& path) {
  return model_from_json(json_util::read_file(path));
}

RobotModel planar_two_link() {
  RobotModel m;
  m.name = "planar2";
  for (double len : {1.0, 0.5}) {
    JointSpec s;
    s.a = len;
    s.min = -kPi;
    s.max = kPi;
    s.vel_limit = 1.0;
    s.inertia = 0.5;
    s.damping = 0.2;
    m.joints.push_back(s);
  }
  m.presets["home"] = JointVector::Zero(2);
  JointVector elbow(2);
  elbow << 0.0, kPi / 2;
  m.presets["elbow"] = elbow;
  return m;
}

ChainFrames chain_frames(const RobotModel& model, const JointVector& q) {
  check_dof(model, q);
  ChainFrames frames;
  frames.origins.reserve(model.joints.size());
  frames.axes.reserve(model.joints.size());
  Eigen::Isometry3d t = Eigen::Isometry3d::Identity();
  for (int i = 0; i < model.dof(); ++i) {
    frames.origins.push_back(t.translation());
    frames.axes.push_back(t.linear().col(2));
    t = t * dh_transform(model.joints[i], q[i]);
  }
  frames.end_effector.position = t.translation();
  frames.end_effector.orientation = Eigen::Quaterniond(t.linear()).normalized();
  return frames;
}

Pose forward_kinematics(const RobotModel& model, const JointVector& q) {
  return chain_frames(model, q).end_effector;
}

Jacobian jacobian(const RobotModel& model, const JointVector& q) {
  const ChainFrames f = chain_frames(model, q);
  Jacobian J(6, model.dof());
  const Eigen::Vector3d& pe = f.end_effector.position;
  for (int i = 0; i < model.dof(); ++i) {
    J.block<3, 1>(0, i) = f.axes[i].cross(pe - f.origins[i]);
    J.block<3, 1>(3, i) = f.axes[i];
  }
  return J;
}

int task_rows(const RobotModel& model) { return model.dof() < 6 ? 3 : 6; }

double manipulability(const RobotModel& model, const JointVector& q) {
  const Jacobian J = jacobian(model, q);
  const Eigen::MatrixXd Jt = J.topRows(task_rows(model));
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(Jt);
  // sqrt(det(J J^T)) for wide J, sqrt(det(J^T J)) for tall J; both equal
  // the product of the min(rows, cols) singular values.
  return svd.singularValues().prod();
}

double orientation_error(const Eigen::Quaterniond& from, const Eigen::Quaterniond& to) {
  return rotation_vector(from, to).norm();
}

Eigen::VectorXd damped_solve(const Eigen::MatrixXd& J, const Eigen::VectorXd& b, double lambda) {
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(J, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  const Eigen::VectorXd ub = svd.matrixU().transpose() * b;
  Eigen::VectorXd scaled(s.size());
  const double l2 = lambda * lambda;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    const double den = s[i] * s[i] + l2;
    scaled[i] = den > 0.0 ? s[i] / den * ub[i] : 0.0;
  }
  return svd.matrixV() * scaled;
}

IkResult inverse_kinematics(const RobotModel& model, const Pose& target, const JointVector& seed,
                            const IkOptions& opts) {
  check_dof(model, seed);
  if (!model.within_limits(seed, 1e-12)) {
    throw Error(ErrorCode::InvalidArgument, "IK seed outside joint limits");
  }
  const bool use_rot = opts.orientation == IkOptions::Orientation::Enforce ||
                       (opts.orientation == IkOptions::Orientation::Auto && model.dof() >= 6);
  const int rows = use_rot ? 6 : 3;

  IkResult best;
  double best_score = std::numeric_limits<double>::infinity();
  int total_iterations = 0;

  // The first attempt starts at the seed. If it stalls (typically pinned
  // against a limit, or crawling near a fold) the solver restarts from fixed
  // pseudo-random configurations, so results stay deterministic.
  std::mt19937_64 rng(0x5eed);
  for (int attempt = 0; attempt <= opts.restarts; ++attempt) {
    JointVector q = model.clamp(seed);
    if (attempt > 0) {
      for (int i = 0; i < model.dof(); ++i) {
        std::uniform_real_distribution<double> d(model.joints[i].min, model.joints[i].max);
        q[i] = d(rng);
      }
    }
    for (int iter = 0;; ++iter, ++total_iterations) {
      const Pose p = forward_kinematics(model, q);
      const Eigen::Vector3d dp = target.position - p.position;
      const Eigen::Vector3d dr = rotation_vector(p.orientation, target.orientation);
      const double pos_err = dp.norm();
      const double rot_err = dr.norm();
      const double score = pos_err / opts.pos_tol + (use_rot ? rot_err / opts.rot_tol : 0.0);
      if (score < best_score) {
        best_score = score;
        best = {q, pos_err, rot_err, total_iterations, false};
      }
      if (pos_err <= opts.pos_tol && (!use_rot || rot_err <= opts.rot_tol)) {
        return {q, pos_err, rot_err, total_iterations, true};
      }
      if (iter >= opts.max_iterations) break;

      Eigen::VectorXd e(rows);
      e.head<3>() = dp;
      if (use_rot) e.tail<3>() = dr;
      const Eigen::MatrixXd J = jacobian(model, q).topRows(rows);
      // Full damping far from the target; it fades within the last
      // centimetre so targets near a fold still converge. The step cap keeps
      // the lightly damped solve from jumping across the workspace.
      const double lambda = opts.damping * std::min(1.0, (pos_err + (use_rot ? rot_err * kRotToPos : 0.0)) / kDampingFade);
      Eigen::VectorXd dq = damped_solve(J, e, lambda);
      const double biggest = dq.cwiseAbs().maxCoeff();
      if (biggest > kMaxIkStep) dq *= kMaxIkStep / biggest;
      q = model.clamp(q + dq);
    }
  }

  best.iterations = total_iterations;
  if (best.position_error > 10.0 * opts.pos_tol ||
      (use_rot && best.orientation_error > 10.0 * opts.rot_tol)) {
    std::ostringstream os;
    os << "IK did not reach target: best position error " << best.position_error << " m";
    if (use_rot) os << ", orientation error " << best.orientation_error << " rad";
    throw Error(ErrorCode::OutOfReach, os.str());
  }
  return best;
}

}  // namespace mstudio
