#pragma once

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "neurotouch/pipeline.hpp"

namespace neurotouch {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ConfigKey {
  std::string key;
  std::string help;
  std::string default_value;
};

/// Every recognized `section.name` key with its documentation and default.
const std::vector<ConfigKey>& config_keys();

/// Applies one `key=value` assignment. Throws ConfigError for unknown keys or bad values.
void apply_config_value(PipelineConfig& cfg, std::string_view key, std::string_view value);
void apply_override(PipelineConfig& cfg, std::string_view assignment);

/// Flat `section.key = value` text; `#` starts a comment; blank lines ignored.
/// A `[section]` line prefixes the following bare keys.
PipelineConfig parse_config(std::string_view text, PipelineConfig base = {});
PipelineConfig load_config(const std::filesystem::path& path, PipelineConfig base = {});

std::string config_value(const PipelineConfig& cfg, std::string_view key);
void write_config(std::ostream& out, const PipelineConfig& cfg);

}  // namespace neurotouch
