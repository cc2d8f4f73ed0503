#pragma once

#include <functional>
#include <string>

namespace mstudio::log {

enum class Level { Debug, Info, Warn, Error };

using Sink = std::function<void(Level, const std::string&)>;

// Default sink writes warnings and errors to stderr.
void set_sink(Sink sink);
void write(Level level, const std::string& message);

inline void info(const std::string& m) { write(Level::Info, m); }
inline void warn(const std::string& m) { write(Level::Warn, m); }
inline void error(const std::string& m) { write(Level::Error, m); }

}  // namespace mstudio::log
