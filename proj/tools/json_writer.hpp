#pragma once

// Ordered JSON object builder with fixed 17-digit number formatting, so
// reports are byte-identical across identical runs.

#include "etacurv/format.hpp"

#include <json.hpp>

#include <cmath>
#include <string>
#include <string_view>
#include <vector>

namespace etacurv::cli {

class JsonObject {
public:
  JsonObject& add(std::string_view key, double value) { return raw(key, format_number(value)); }
  JsonObject& add(std::string_view key, int value) { return raw(key, std::to_string(value)); }
  JsonObject& add(std::string_view key, bool value) { return raw(key, value ? "true" : "false"); }
  JsonObject& add(std::string_view key, const char* value) { return add(key, std::string_view(value)); }
  JsonObject& add(std::string_view key, std::string_view value) {
    return raw(key, nlohmann::json(std::string(value)).dump());
  }
  JsonObject& add(std::string_view key, const std::vector<double>& values) {
    std::string s = "[";
    for (std::size_t i = 0; i < values.size(); ++i) {
      s += (i ? "," : "") + format_number(values[i]);
    }
    return raw(key, s + "]");
  }
  JsonObject& add(std::string_view key, const JsonObject& child) { return raw(key, child.str()); }
  JsonObject& null(std::string_view key) { return raw(key, "null"); }

  /// Inserts pre-rendered JSON.
  JsonObject& raw(std::string_view key, std::string_view json) {
    body_ += body_.empty() ? "" : ",";
    body_ += nlohmann::json(std::string(key)).dump();
    body_ += ':';
    body_ += json;
    return *this;
  }

  [[nodiscard]] std::string str() const { return "{" + body_ + "}"; }

private:
  static std::string format_number(double v) {
    return std::isfinite(v) ? format_double(v) : "null";
  }

  std::string body_;
};

}  // namespace etacurv::cli
