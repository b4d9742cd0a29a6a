#pragma once

// Named, config-driven experiments producing machine-readable reports.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace stirwalk::experiment {

using Json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

/// Invalid configuration; field() names the offending key.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::runtime_error("config field '" + field + "': " + message), field_(std::move(field)) {}
  [[nodiscard]] const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// JSON when the text starts with '{'. Otherwise "key = value" lines, '#'
/// comments, dotted keys nesting into objects, values read as JSON scalars
/// when they parse and as strings otherwise.
Json parse_config(std::string_view text);

const std::vector<std::string>& experiment_names();

struct RunOptions {
  std::optional<std::uint64_t> seed;  // overrides the config seed
  unsigned threads = 1;
};

struct Artifact {
  std::string filename;
  std::string content;
};

struct Report {
  Json document;  // everything except the timestamp header
  bool pass = false;
  std::vector<Artifact> artifacts;
};

/// Runs config["experiment"]. Throws ConfigError for invalid configs.
Report run_experiment(const Json& config, const RunOptions& options);

std::string timestamp_utc();
/// The document with a leading {"header": {"timestamp": ...}} entry.
std::string render_json(const Report& report, const std::string& timestamp);
/// Flattened "key,value" rows; the first row carries the timestamp.
std::string render_csv(const Report& report, const std::string& timestamp);

}  // namespace stirwalk::experiment
