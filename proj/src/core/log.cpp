#include "log.hpp"

#include <iostream>
#include <mutex>

namespace mstudio::log {

namespace {

std::mutex& sink_mutex() {
  static std::mutex m;
  return m;
}

Sink& sink() {
  static Sink s = [](Level level, const std::string& message) {
    if (level < Level::Warn) return;
    std::cerr << (level == Level::Warn ? "warning: " : "error: ") << message << '\n';
  };
  return s;
}

}  // namespace

void set_sink(Sink s) {
  std::lock_guard lock(sink_mutex());
  sink() = std::move(s);
}

void write(Level level, const std::string& message) {
  std::lock_guard lock(sink_mutex());
  if (sink()) sink()(level, message);
}

}  // namespace mstudio::log
