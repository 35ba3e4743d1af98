#ifndef L1L2_TOOLS_CONFIG_HPP
#define L1L2_TOOLS_CONFIG_HPP

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "l1l2/experiments.hpp"

namespace l1l2::cli {

/// Invalid or unreadable configuration. field() names the offending key.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::runtime_error(field.empty() ? message : field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

enum class SweepAxis { S, F, D, M };

struct SweepSpec {
  SweepAxis axis = SweepAxis::S;
  std::vector<double> values;
};

/// Everything a config file can set.
struct RunSettings {
  ExperimentSpec spec;
  bool trace = false;
  std::optional<SweepSpec> sweep;
  std::size_t checks = 0;  // 0 means the command default
  std::uint64_t check_seed = 20240601;
};

std::string_view axis_name(SweepAxis axis);

/// Applies a sweep value to a copy of an ExperimentSpec.
ExperimentSpec with_axis_value(const ExperimentSpec& spec, SweepAxis axis, double value);

/// Parses `key = value` lines; '#' starts a comment. Unknown keys, malformed
/// values and failed validation raise ConfigError.
RunSettings parse_config(const std::string& text);

RunSettings load_config(const std::filesystem::path& path);

/// Keys accepted by parse_config, in documentation order.
const std::vector<std::string>& config_keys();

}  // namespace l1l2::cli

#endif  // L1L2_TOOLS_CONFIG_HPP
