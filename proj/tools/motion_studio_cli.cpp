// motion-studio: headless driver over the C API.

#include "motion_studio.h"

#include "CLI11.hpp"
#include "json.hpp"

#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <pthread.h>
#include <signal.h>

namespace fs = std::filesystem;

namespace {

struct Failure {
  std::string message;
};

void check(ms_status s, const std::string& context) {
  if (s != MS_OK) throw Failure{context + ": " + ms_last_error()};
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Failure{"cannot read " + path};
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Failure{"cannot write " + path};
  out << text;
  if (!out) throw Failure{"failed writing " + path};
}

nlohmann::json read_json(const std::string& path) {
  try {
    return nlohmann::json::parse(read_text(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw Failure{path + ": " + e.what()};
  }
}

struct CString {
  char* p = nullptr;
  ~CString() { ms_string_free(p); }
  std::string str() const { return p ? p : ""; }
};

template <typename T, void (*Free)(T*)>
struct Handle {
  T* p = nullptr;
  Handle() = default;
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  ~Handle() { Free(p); }
};

using Model = Handle<ms_model, ms_model_free>;
using SequenceH = Handle<ms_sequence, ms_sequence_free>;
using LogH = Handle<ms_log, ms_log_free>;
using MetricsH = Handle<ms_metric_config, ms_metric_config_free>;
using ReportH = Handle<ms_report, ms_report_free>;
using ServerH = Handle<ms_server, ms_server_free>;

// Defaults from the file named by MOTION_STUDIO_CONFIG:
// {"model": path, "bindings": path, "metrics": path, "sim": path}.
// Relative paths resolve against the config file's directory.
struct Defaults {
  std::string model, bindings, metrics, sim;
};

Defaults load_defaults() {
  Defaults d;
  const char* env = std::getenv("MOTION_STUDIO_CONFIG");
  if (!env || !*env) return d;
  const nlohmann::json j = read_json(env);
  if (!j.is_object()) throw Failure{std::string(env) + ": expected a JSON object"};
  if (j.contains("version") && j.at("version") != 1) {
    throw Failure{std::string(env) + ": unsupported version " + j.at("version").dump() +
                  " (this build reads version 1)"};
  }
  const fs::path base = fs::path(env).parent_path();
  auto get = [&](const char* key) -> std::string {
    if (!j.contains(key)) return {};
    if (!j.at(key).is_string()) throw Failure{std::string(env) + ": " + key + " must be a path string"};
    const fs::path p = j.at(key).get<std::string>();
    return (p.is_relative() ? base / p : p).string();
  };
  d.model = get("model");
  d.bindings = get("bindings");
  d.metrics = get("metrics");
  d.sim = get("sim");
  return d;
}

struct Common {
  std::string model;
  std::string bindings;
  std::string sim;
};

void load_model(const std::string& path, Model& m) {
  if (path.empty()) {
    check(ms_model_planar2(&m.p), "model");
  } else {
    check(ms_model_load(path.c_str(), &m.p), path);
  }
}

// Simulation settings: the --sim file, with a --bindings file spliced in.
std::optional<std::string> sim_config(const Common& c) {
  if (c.sim.empty() && c.bindings.empty()) return std::nullopt;
  nlohmann::json j = c.sim.empty() ? nlohmann::json::object() : read_json(c.sim);
  if (!j.is_object()) throw Failure{c.sim + ": expected a JSON object"};
  if (!c.bindings.empty()) j["bindings"] = read_json(c.bindings);
  return j.dump();
}

const char* c_str_or_null(const std::optional<std::string>& s) { return s ? s->c_str() : nullptr; }

void load_metrics(const std::string& path, MetricsH& m) {
  if (path.empty()) {
    check(ms_metric_config_default(&m.p), "metrics");
  } else {
    check(ms_metric_config_load(path.c_str(), &m.p), path);
  }
}

void add_common(CLI::App* app, Common& c, const Defaults& d) {
  c.model = d.model;
  c.bindings = d.bindings;
  c.sim = d.sim;
  app->add_option("--model", c.model, "robot model JSON (default: built-in 2-link planar arm)");
  app->add_option("--bindings", c.bindings, "controller binding map JSON");
  app->add_option("--sim", c.sim, "simulation settings JSON (gains, teleop, dt, record_rate)");
}

int cmd_serve(const Common& c, const std::string& metrics, const std::string& host, int port, int tcp_port,
              double rate, bool fast) {
  Model model;
  load_model(c.model, model);
  MetricsH m;
  load_metrics(metrics, m);
  const auto sim = sim_config(c);
  ms_server_options o;
  ms_server_options_init(&o);
  o.address = host.c_str();
  o.ws_port = port;
  o.tcp_port = tcp_port;
  o.snapshot_rate = rate;
  o.fast = fast ? 1 : 0;
  ServerH server;
  check(ms_server_create(model.p, c_str_or_null(sim), m.p, &o, &server.p), "serve");

  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);
  check(ms_server_start(server.p), "serve");
  std::cout << "ws://" << host << ":" << ms_server_ws_port(server.p) << "/ws";
  if (tcp_port >= 0) std::cout << "  tcp://" << host << ":" << ms_server_tcp_port(server.p);
  std::cout << (fast ? "  (fast)" : "") << std::endl;
  int sig = 0;
  sigwait(&set, &sig);
  ms_server_stop(server.p);
  return 0;
}

int cmd_play(const Common& c, const std::string& seq_path, const std::string& out, double rate) {
  Model model;
  load_model(c.model, model);
  SequenceH seq;
  check(ms_sequence_load(seq_path.c_str(), &seq.p), seq_path);
  check(ms_sequence_validate(seq.p, model.p), seq_path);
  const auto sim = sim_config(c);
  LogH log;
  check(ms_play(model.p, c_str_or_null(sim), seq.p, rate, &log.p), "play");
  check(ms_log_write(log.p, out.c_str()), out);
  std::cout << "wrote " << out << " (" << ms_log_rows(log.p) << " rows)" << std::endl;
  return 0;
}

int cmd_replay(const Common& c, const std::string& events_path, const std::string& out, double settle) {
  Model model;
  load_model(c.model, model);
  const std::string events = read_text(events_path);
  const auto sim = sim_config(c);
  LogH log;
  check(ms_replay(model.p, c_str_or_null(sim), events.c_str(), settle, &log.p), events_path);
  check(ms_log_write(log.p, out.c_str()), out);
  std::cout << "wrote " << out << " (" << ms_log_rows(log.p) << " rows)" << std::endl;
  return 0;
}

int cmd_analyze(const Common& c, const std::string& log_path, const std::string& metrics, const std::string& notes,
                const std::string& out, const std::string& text_out, const std::string& series_out) {
  Model model;
  load_model(c.model, model);
  MetricsH m;
  load_metrics(metrics, m);
  LogH log;
  check(ms_log_load(log_path.c_str(), &log.p), log_path);
  const std::string notes_text = notes.empty() ? std::string() : read_text(notes);
  ReportH report;
  check(ms_analyze(log.p, model.p, m.p, notes.empty() ? nullptr : notes_text.c_str(), &report.p), log_path);
  CString json, text;
  check(ms_report_json(report.p, &json.p), "report");
  check(ms_report_text(report.p, &text.p), "report");
  if (out.empty()) {
    std::cout << text.str();
  } else {
    write_text(out, json.str() + "\n");
    const std::string tpath = text_out.empty() ? fs::path(out).replace_extension(".txt").string() : text_out;
    write_text(tpath, text.str());
    std::cout << "wrote " << out << " and " << tpath << std::endl;
  }
  if (!series_out.empty()) {
    CString series;
    check(ms_metric_series_csv(log.p, model.p, m.p, &series.p), "series");
    write_text(series_out, series.str());
  }
  return 0;
}

int cmd_validate(const Common& c, const std::map<std::string, std::vector<std::string>>& files) {
  Model model;
  if (!c.model.empty()) {
    check(ms_validate_file("model", c.model.c_str(), nullptr), c.model);
    std::cout << "ok  model     " << c.model << "\n";
  }
  load_model(c.model, model);
  if (!c.bindings.empty()) {
    check(ms_validate_file("bindings", c.bindings.c_str(), nullptr), c.bindings);
    std::cout << "ok  bindings  " << c.bindings << "\n";
  }
  for (const auto& [kind, paths] : files) {
    for (const auto& p : paths) {
      check(ms_validate_file(kind.c_str(), p.c_str(), model.p), p);
      std::cout << "ok  " << kind << std::string(10 - kind.size(), ' ') << p << "\n";
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"motion-studio: simulate, choreograph and analyze expressive arm motion"};
  app.require_subcommand(1);

  Defaults defaults;
  try {
    defaults = load_defaults();
  } catch (const Failure& f) {
    std::cerr << "motion-studio: MOTION_STUDIO_CONFIG: " << f.message << std::endl;
    return 1;
  }

  Common common;

  auto* serve = app.add_subcommand("serve", "run the simulation server");
  add_common(serve, common, defaults);
  std::string host = "127.0.0.1", serve_metrics = defaults.metrics;
  int port = 8765, tcp_port = -1;
  double snap_rate = 50.0;
  bool fast = false;
  serve->add_option("--host", host, "listen address")->capture_default_str();
  serve->add_option("--port", port, "WebSocket port (endpoint /ws)")->capture_default_str();
  serve->add_option("--tcp-port", tcp_port, "length-prefixed TCP port; negative disables")->capture_default_str();
  serve->add_option("--rate", snap_rate, "snapshot broadcast rate [Hz]")->capture_default_str()->check(
      CLI::PositiveNumber);
  serve->add_option("--metrics", serve_metrics, "metric thresholds JSON");
  serve->add_flag("--fast", fast, "run sequence playback without wall-clock pacing");

  auto* play = app.add_subcommand("play", "execute a keyframe sequence and write its log");
  add_common(play, common, defaults);
  std::string seq_path, play_out;
  double play_rate = 100.0;
  play->add_option("sequence", seq_path, "sequence JSON")->required();
  play->add_option("-o,--out", play_out, "output CSV log (metadata goes to <out>.meta.json)")->required();
  play->add_option("--rate", play_rate, "recording rate [Hz]")->capture_default_str()->check(CLI::PositiveNumber);

  auto* analyze = app.add_subcommand("analyze", "compute effort metrics and the observation report for a log");
  add_common(analyze, common, defaults);
  std::string log_path, metrics_path = defaults.metrics, notes_path, report_out, text_out, series_out;
  analyze->add_option("log", log_path, "CSV log")->required();
  analyze->add_option("--metrics,--config", metrics_path, "metric thresholds JSON");
  analyze->add_option("--notes", notes_path, "JSON with impressions, meaning and intended tonalities");
  analyze->add_option("-o,--out", report_out, "report JSON (text goes next to it as .txt)");
  analyze->add_option("--text", text_out, "report text path");
  analyze->add_option("--series", series_out, "CSV of speed and jerk magnitude over time");

  auto* replay = app.add_subcommand("replay", "re-simulate a recorded stream of controller events");
  add_common(replay, common, defaults);
  std::string events_path, replay_out;
  double settle = 1.0;
  replay->add_option("events", events_path, "event list JSON")->required();
  replay->add_option("-o,--out", replay_out, "output CSV log")->required();
  replay->add_option("--settle", settle, "seconds recorded after the last event")->capture_default_str()->check(
      CLI::NonNegativeNumber);

  auto* validate = app.add_subcommand("validate", "check input files without running anything");
  add_common(validate, common, defaults);
  std::map<std::string, std::vector<std::string>> files;
  for (const char* kind : {"sequence", "metrics", "events", "gains", "log"}) {
    validate->add_option(std::string("--") + kind, files[kind], std::string(kind) + " file(s)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*serve) return cmd_serve(common, serve_metrics, host, port, tcp_port, snap_rate, fast);
    if (*play) return cmd_play(common, seq_path, play_out, play_rate);
    if (*analyze) return cmd_analyze(common, log_path, metrics_path, notes_path, report_out, text_out, series_out);
    if (*replay) return cmd_replay(common, events_path, replay_out, settle);
    if (*validate) return cmd_validate(common, files);
  } catch (const Failure& f) {
    std::cerr << "motion-studio: " << f.message << std::endl;
    return 1;
  }
  return 1;
}
