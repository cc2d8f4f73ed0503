#include "motion_studio.h"

#include "arm_model.hpp"
#include "dispatcher.hpp"
#include "error.hpp"
#include "json_util.hpp"
#include "moa_metrics.hpp"
#include "server.hpp"
#include "simulation.hpp"
#include "teleop.hpp"
#include "timeline.hpp"
#include "trajectory_log.hpp"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <memory>
#include <new>
#include <string>

using namespace mstudio;

struct ms_model {
  RobotModel model;
};
struct ms_sequence {
  Sequence seq;
};
struct ms_log {
  TrajectoryLog log;
};
struct ms_metric_config {
  MetricConfig cfg;
};
struct ms_report {
  MoaReport report;
};
struct ms_server {
  std::unique_ptr<Server> server;
};

namespace {

thread_local std::string g_last_error;

ms_status fail(ms_status s, const std::string& message) {
  g_last_error = message;
  return s;
}

// Runs f, translating exceptions into a status and the thread's last error.
template <typename F>
ms_status guarded(F&& f) {
  try {
    f();
    g_last_error.clear();
    return MS_OK;
  } catch (const Error& e) {
    return fail(static_cast<ms_status>(static_cast<int>(e.code())), e.what());
  } catch (const nlohmann::json::exception& e) {
    return fail(MS_ERR_PARSE, e.what());
  } catch (const std::bad_alloc&) {
    return fail(MS_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(MS_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(MS_ERR_INTERNAL, "unknown failure");
  }
}

void need(const void* p, const char* what) {
  if (!p) throw Error(ErrorCode::InvalidArgument, std::string(what) + " is NULL");
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.data(), s.size() + 1);
  return out;
}

nlohmann::json parse_json(const char* text, const char* what) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::Parse, std::string(what) + ": " + e.what());
  }
}

JointVector joints(const ms_model* m, const double* q, size_t n) {
  need(q, "q");
  if (n != static_cast<size_t>(m->model.dof())) {
    throw Error(ErrorCode::DimensionMismatch, "expected " + std::to_string(m->model.dof()) + " joint values, got " +
                                                  std::to_string(n));
  }
  return Eigen::Map<const JointVector>(q, static_cast<Eigen::Index>(n));
}

SimSetup setup_from(const ms_model* m, const char* sim_config) {
  return sim_setup_from_json(m->model, sim_config ? parse_json(sim_config, "sim config") : nlohmann::json());
}

template <typename T, typename Make>
ms_status make_handle(T** out, Make&& make) {
  if (!out) return fail(MS_ERR_INVALID_ARGUMENT, "out is NULL");
  *out = nullptr;
  return guarded([&] { *out = new T{make()}; });
}

}  // namespace

extern "C" {

const char* ms_last_error(void) { return g_last_error.c_str(); }

const char* ms_status_name(ms_status status) {
  if (status == MS_OK) return "ok";
  if (status == MS_ERR_INTERNAL) return "internal";
  if (status >= MS_ERR_INVALID_ARGUMENT && status <= MS_ERR_PROTOCOL) {
    return to_string(static_cast<ErrorCode>(static_cast<int>(status)));
  }
  return "unknown";
}

const char* ms_version(void) { return "1.0.0"; }

void ms_string_free(char* s) { std::free(s); }

// ---- model ----

ms_status ms_model_load(const char* path, ms_model** out) {
  return make_handle(out, [&] {
    need(path, "path");
    return load_model(path);
  });
}

ms_status ms_model_from_json(const char* json, ms_model** out) {
  return make_handle(out, [&] {
    need(json, "json");
    return model_from_json(parse_json(json, "model"));
  });
}

ms_status ms_model_planar2(ms_model** out) {
  return make_handle(out, [] { return planar_two_link(); });
}

void ms_model_free(ms_model* model) { delete model; }

size_t ms_model_dof(const ms_model* model) { return model ? static_cast<size_t>(model->model.dof()) : 0; }

ms_status ms_model_to_json(const ms_model* model, char** out) {
  return guarded([&] {
    need(model, "model");
    need(out, "out");
    *out = dup_string(model_to_json(model->model).dump(2));
  });
}

ms_status ms_fk(const ms_model* model, const double* q, size_t n, double position[3], double orientation[4]) {
  return guarded([&] {
    need(model, "model");
    const Pose p = forward_kinematics(model->model, joints(model, q, n));
    if (position) {
      for (int i = 0; i < 3; ++i) position[i] = p.position[i];
    }
    if (orientation) {
      orientation[0] = p.orientation.w();
      orientation[1] = p.orientation.x();
      orientation[2] = p.orientation.y();
      orientation[3] = p.orientation.z();
    }
  });
}

ms_status ms_jacobian(const ms_model* model, const double* q, size_t n, double* out) {
  return guarded([&] {
    need(model, "model");
    need(out, "out");
    const Jacobian J = jacobian(model->model, joints(model, q, n));
    for (Eigen::Index r = 0; r < 6; ++r) {
      for (Eigen::Index c = 0; c < J.cols(); ++c) out[r * J.cols() + c] = J(r, c);
    }
  });
}

ms_status ms_manipulability(const ms_model* model, const double* q, size_t n, double* out) {
  return guarded([&] {
    need(model, "model");
    need(out, "out");
    *out = manipulability(model->model, joints(model, q, n));
  });
}

ms_status ms_ik(const ms_model* model, const double position[3], const double* orientation, const double* seed,
                size_t n, double* q_out, int* converged) {
  return guarded([&] {
    need(model, "model");
    need(position, "position");
    need(q_out, "q_out");
    Pose target;
    target.position = Eigen::Vector3d(position[0], position[1], position[2]);
    IkOptions opts;
    if (orientation) {
      target.orientation = Eigen::Quaterniond(orientation[0], orientation[1], orientation[2], orientation[3]);
      if (std::abs(target.orientation.norm() - 1.0) > 1e-6) {
        throw Error(ErrorCode::InvalidArgument, "orientation must be a unit quaternion");
      }
    } else {
      opts.orientation = IkOptions::Orientation::Ignore;
    }
    const IkResult r = inverse_kinematics(model->model, target, joints(model, seed, n), opts);
    for (size_t i = 0; i < n; ++i) q_out[i] = r.solution[static_cast<Eigen::Index>(i)];
    if (converged) *converged = r.converged ? 1 : 0;
  });
}

// ---- sequences ----

ms_status ms_sequence_load(const char* path, ms_sequence** out) {
  return make_handle(out, [&] {
    need(path, "path");
    return load_sequence(path);
  });
}

ms_status ms_sequence_from_json(const char* json, ms_sequence** out) {
  return make_handle(out, [&] {
    need(json, "json");
    return sequence_from_json(parse_json(json, "sequence"));
  });
}

void ms_sequence_free(ms_sequence* seq) { delete seq; }

ms_status ms_sequence_validate(const ms_sequence* seq, const ms_model* model) {
  return guarded([&] {
    need(seq, "seq");
    need(model, "model");
    validate(seq->seq, model->model);
  });
}

ms_status ms_sequence_to_json(const ms_sequence* seq, char** out) {
  return guarded([&] {
    need(seq, "seq");
    need(out, "out");
    *out = dup_string(sequence_to_json(seq->seq).dump(2));
  });
}

double ms_sequence_duration(const ms_sequence* seq) { return seq ? seq->seq.duration() : 0.0; }

// ---- execution ----

ms_status ms_play(const ms_model* model, const char* sim_config, const ms_sequence* seq, double record_rate,
                  ms_log** out) {
  return make_handle(out, [&] {
    need(model, "model");
    need(seq, "seq");
    SimSetup s = setup_from(model, sim_config);
    Simulation sim(model->model, s.gains, s.config);
    return sim.run_playback(seq->seq, record_rate);
  });
}

ms_status ms_replay(const ms_model* model, const char* sim_config, const char* events_json, double settle,
                    ms_log** out) {
  return make_handle(out, [&] {
    need(model, "model");
    need(events_json, "events_json");
    const SimSetup s = setup_from(model, sim_config);
    const auto events = events_from_json(parse_json(events_json, "events"));
    return replay_events(model->model, s.gains, s.config, events, settle);
  });
}

// ---- logs ----

ms_status ms_log_load(const char* csv_path, ms_log** out) {
  return make_handle(out, [&] {
    need(csv_path, "csv_path");
    return read_log(csv_path);
  });
}

ms_status ms_log_write(const ms_log* log, const char* csv_path) {
  return guarded([&] {
    need(log, "log");
    need(csv_path, "csv_path");
    write_log(log->log, csv_path);
  });
}

ms_status ms_log_to_csv(const ms_log* log, char** out) {
  return guarded([&] {
    need(log, "log");
    need(out, "out");
    *out = dup_string(log_to_csv(log->log));
  });
}

size_t ms_log_rows(const ms_log* log) { return log ? log->log.rows.size() : 0; }

void ms_log_free(ms_log* log) { delete log; }

// ---- metrics ----

ms_status ms_metric_config_default(ms_metric_config** out) {
  return make_handle(out, [] { return MetricConfig{}; });
}

ms_status ms_metric_config_load(const char* path, ms_metric_config** out) {
  return make_handle(out, [&] {
    need(path, "path");
    return load_metric_config(path);
  });
}

void ms_metric_config_free(ms_metric_config* cfg) { delete cfg; }

ms_status ms_analyze(const ms_log* log, const ms_model* model, const ms_metric_config* cfg, const char* notes_json,
                     ms_report** out) {
  return make_handle(out, [&] {
    need(log, "log");
    need(model, "model");
    std::optional<std::string> impressions, meaning;
    IntendedTonalities intended;
    if (notes_json) {
      const auto j = parse_json(notes_json, "notes");
      if (!j.is_object()) throw Error(ErrorCode::Validation, "notes: expected an object");
      if (j.contains("impressions")) impressions = json_util::require<std::string>(j, "impressions", "notes");
      if (j.contains("meaning")) meaning = json_util::require<std::string>(j, "meaning", "notes");
      if (j.contains("intended")) intended = intended_from_json(j.at("intended"));
    }
    return analyze_log(log->log, model->model, cfg ? cfg->cfg : MetricConfig{}, impressions, meaning, intended);
  });
}

ms_status ms_report_json(const ms_report* report, char** out) {
  return guarded([&] {
    need(report, "report");
    need(out, "out");
    *out = dup_string(report_to_json(report->report).dump(2));
  });
}

ms_status ms_report_text(const ms_report* report, char** out) {
  return guarded([&] {
    need(report, "report");
    need(out, "out");
    *out = dup_string(report_to_text(report->report));
  });
}

void ms_report_free(ms_report* report) { delete report; }

ms_status ms_metric_series_csv(const ms_log* log, const ms_model* model, const ms_metric_config* cfg, char** out) {
  return guarded([&] {
    need(log, "log");
    need(model, "model");
    need(out, "out");
    const MetricConfig c = cfg ? cfg->cfg : MetricConfig{};
    *out = dup_string(metric_series_csv(metric_series(end_effector_path(log->log, model->model), c)));
  });
}

ms_status ms_validate_file(const char* kind, const char* path, const ms_model* model) {
  return guarded([&] {
    need(kind, "kind");
    need(path, "path");
    const std::string k = kind;
    if (k == "model") {
      load_model(path);
    } else if (k == "sequence") {
      need(model, "model");
      validate(load_sequence(path), model->model);
    } else if (k == "bindings") {
      load_bindings(path);
    } else if (k == "metrics") {
      load_metric_config(path);
    } else if (k == "events") {
      events_from_json(json_util::read_file(path));
    } else if (k == "gains") {
      need(model, "model");
      const auto j = json_util::read_file(path);
      json_util::check_version(j, "gains");
      validate(gains_from_json(j, model->model), model->model);
    } else if (k == "log") {
      const TrajectoryLog log = read_log(path);
      if (model && log.joint_count() != model->model.dof()) {
        throw Error(ErrorCode::ModelMismatch, "log has " + std::to_string(log.joint_count()) +
                                                  " joints, model has " + std::to_string(model->model.dof()));
      }
    } else {
      throw Error(ErrorCode::InvalidArgument, "unknown file kind '" + k + "'");
    }
  });
}

// ---- server ----

void ms_server_options_init(ms_server_options* options) {
  if (!options) return;
  options->address = nullptr;
  options->ws_port = 8765;
  options->tcp_port = -1;
  options->snapshot_rate = 50.0;
  options->fast = 0;
}

ms_status ms_server_create(const ms_model* model, const char* sim_config, const ms_metric_config* cfg,
                           const ms_server_options* options, ms_server** out) {
  return make_handle(out, [&] {
    need(model, "model");
    ms_server_options o;
    ms_server_options_init(&o);
    if (options) o = *options;
    SimSetup s = setup_from(model, sim_config);
    DispatcherConfig dc;
    dc.snapshot_rate = o.snapshot_rate;
    dc.fast = o.fast != 0;
    if (cfg) dc.metrics = cfg->cfg;
    ServerOptions so;
    if (o.address) so.address = o.address;
    so.ws_port = o.ws_port;
    so.tcp_port = o.tcp_port;
    Dispatcher d(Simulation(model->model, s.gains, s.config), dc);
    return std::make_unique<Server>(std::move(d), so);
  });
}

ms_status ms_server_start(ms_server* server) {
  return guarded([&] {
    need(server, "server");
    server->server->start();
  });
}

uint16_t ms_server_ws_port(const ms_server* server) { return server ? server->server->ws_port() : 0; }
uint16_t ms_server_tcp_port(const ms_server* server) { return server ? server->server->tcp_port() : 0; }

void ms_server_stop(ms_server* server) {
  if (server) server->server->stop();
}

void ms_server_wait(ms_server* server) {
  if (server) server->server->wait();
}

void ms_server_free(ms_server* server) { delete server; }

}  // extern "C"
