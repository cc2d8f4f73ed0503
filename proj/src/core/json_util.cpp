#include "json_util.hpp"

#include <fstream>
#include <sstream>

namespace mstudio::json_util {

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

nlohmann::json read_file(const std::string& path) {
  const std::string text = read_text(path);
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::Parse, path + ": " + e.what());
  }
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write '" + path + "'");
  out << text;
  if (!out) throw Error(ErrorCode::Io, "write failed for '" + path + "'");
}

void check_version(const nlohmann::json& j, const std::string& what) {
  if (!j.is_object()) throw Error(ErrorCode::Validation, what + ": expected a JSON object");
  if (!j.contains("version")) return;
  const auto& v = j.at("version");
  if (!v.is_number_integer() || v.get<long long>() != 1) {
    throw Error(ErrorCode::UnsupportedVersion,
                what + ": unsupported version " + v.dump() + " (this build reads version 1)");
  }
}

}  // namespace mstudio::json_util
