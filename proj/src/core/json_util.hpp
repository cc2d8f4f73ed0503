#pragma once

#include "error.hpp"
#include "json.hpp"

#include <string>

namespace mstudio::json_util {

// Parses a JSON file; Error(Io) if unreadable, Error(Parse) if malformed.
nlohmann::json read_file(const std::string& path);
void write_file(const std::string& path, const std::string& text);
std::string read_text(const std::string& path);

// Accepts a missing "version" as 1 and rejects anything else.
void check_version(const nlohmann::json& j, const std::string& what);

inline std::string join_path(const std::string& at, const std::string& key) {
  return at.empty() ? key : at + "." + key;
}

template <typename T>
T require(const nlohmann::json& j, const std::string& key, const std::string& at) {
  if (!j.is_object() || !j.contains(key)) {
    throw Error(ErrorCode::Validation, join_path(at, key) + ": missing");
  }
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorCode::Validation, join_path(at, key) + ": wrong type");
  }
}

inline const nlohmann::json& require_array(const nlohmann::json& j, const std::string& key,
                                           const std::string& at) {
  if (!j.is_object() || !j.contains(key) || !j.at(key).is_array()) {
    throw Error(ErrorCode::Validation, join_path(at, key) + ": expected an array");
  }
  return j.at(key);
}

}  // namespace mstudio::json_util
