#pragma once

#include "gmf/common.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace gmf {

//! Read-only view of a configuration subtree that remembers its dotted path,
//! so that errors can name the offending key.
class ConfigView
{
public:
  ConfigView(const nlohmann::json& node, std::string path = "")
    : node_(&node)
    , path_(std::move(path))
  {
  }

  bool has(std::string_view key) const { return node_->is_object() && node_->contains(key); }
  const nlohmann::json& raw() const { return *node_; }
  const std::string& path() const { return path_; }

  ConfigView child(std::string_view key) const { return { require(key), join(key) }; }

  double number(std::string_view key) const
  {
    const auto& v = require(key);
    if (!v.is_number())
      throw ConfigError("config key '" + join(key) + "' must be a number");
    return v.get<double>();
  }
  double number_or(std::string_view key, double fallback) const { return has(key) ? number(key) : fallback; }

  long long integer(std::string_view key) const
  {
    const auto& v = require(key);
    if (!v.is_number_integer())
      throw ConfigError("config key '" + join(key) + "' must be an integer");
    return v.get<long long>();
  }
  long long integer_or(std::string_view key, long long fallback) const
  {
    return has(key) ? integer(key) : fallback;
  }

  std::string string(std::string_view key) const
  {
    const auto& v = require(key);
    if (!v.is_string())
      throw ConfigError("config key '" + join(key) + "' must be a string");
    return v.get<std::string>();
  }
  std::string string_or(std::string_view key, std::string fallback) const
  {
    return has(key) ? string(key) : fallback;
  }

  bool boolean_or(std::string_view key, bool fallback) const
  {
    if (!has(key))
      return fallback;
    const auto& v = require(key);
    if (!v.is_boolean())
      throw ConfigError("config key '" + join(key) + "' must be true or false");
    return v.get<bool>();
  }

  std::vector<double> numbers(std::string_view key) const
  {
    const auto& v = require(key);
    if (!v.is_array())
      throw ConfigError("config key '" + join(key) + "' must be an array of numbers");
    std::vector<double> out;
    for (const auto& e : v) {
      if (!e.is_number())
        throw ConfigError("config key '" + join(key) + "' must be an array of numbers");
      out.push_back(e.get<double>());
    }
    return out;
  }

private:
  const nlohmann::json& require(std::string_view key) const
  {
    if (!has(key))
      throw ConfigError("missing required config key '" + join(key) + "'");
    return (*node_)[std::string(key)];
  }
  std::string join(std::string_view key) const
  {
    return path_.empty() ? std::string(key) : path_ + "." + std::string(key);
  }

  const nlohmann::json* node_;
  std::string path_;
};

} // namespace gmf
