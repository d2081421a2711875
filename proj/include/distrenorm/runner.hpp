#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

// Batch experiment runner behind the distrenorm command line tool.
namespace distrenorm::cli {

using Json = nlohmann::ordered_json;

// Invalid or unreadable configuration. what() is anchored at a line of the
// config file when the offending token can be located.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Status { Pass, Fail, Diverged, Error };
std::string to_string(Status s);

// Process exit code for a set of outcomes: 1 (error) > 3 (diverged) > 2 (fail) > 0.
int exit_code(const std::vector<Status>& statuses);

struct KindInfo {
  std::string name;
  std::string summary;
  std::string csv_header;
};
const std::vector<KindInfo>& experiment_kinds();

// Parses a config document; syntax errors become ConfigError("<origin>:<line>:<col>: ...").
Json parse_config_text(const std::string& text, const std::string& origin);
Json load_config_file(const std::filesystem::path& path);

struct Overrides {
  std::optional<std::string> output;
  std::optional<std::uint64_t> seed;
};

// Validates the document and returns it with every default filled in and keys
// in canonical order. Unknown keys are rejected. Idempotent:
// resolve_config(resolve_config(c)) == resolve_config(c). `text` (optional) is
// the source, used to anchor messages at a line.
Json resolve_config(const Json& raw, const Overrides& ov = {}, const std::string& origin = "config",
                    const std::string& text = "");

struct ExperimentOutcome {
  std::string name;
  std::string kind;
  Status status = Status::Pass;
  std::string message;
  // File name (relative to the output directory) -> contents.
  std::vector<std::pair<std::string, std::string>> files;
  Json metrics = Json::object();
};

// Runs the i-th experiment of a resolved config. Never throws for library
// errors; they become Status::Error with the message.
ExperimentOutcome run_experiment(const Json& resolved, std::size_t index);

struct RunReport {
  std::vector<ExperimentOutcome> outcomes;
  int exit_code = 0;
};

// Runs all experiments (up to `jobs` at a time), writing each experiment's
// files atomically as it completes, then summary.json and resolved_config.json.
RunReport run(const Json& resolved, int jobs = 1);

// 17 significant digits; NaN prints as "nan".
std::string format_double(double v);
// JSON text with doubles printed to 17 significant digits (non-finite as null).
std::string dump_json(const Json& j);
// Writes through a temporary file in the same directory and renames it into place.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

// Reference oracles exposed on the command line.
struct OracleParam {
  std::string name;
  double default_value;
  std::string help;
};
struct OracleKind {
  std::string name;
  std::string summary;
  std::vector<OracleParam> params;
};
const std::vector<OracleKind>& oracle_kinds();
// Missing parameters take their defaults; unknown names raise ConfigError.
double evaluate_oracle(const std::string& kind, const std::map<std::string, double>& params);

}  // namespace distrenorm::cli
