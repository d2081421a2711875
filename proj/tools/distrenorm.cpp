#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "distrenorm/runner.hpp"

namespace cli = distrenorm::cli;

namespace {

int jobs_from_env() {
  const char* v = std::getenv("DISTRENORM_JOBS");
  if (!v || !*v) return 1;
  char* end = nullptr;
  const long n = std::strtol(v, &end, 10);
  if (*end != '\0' || n < 1 || n > 1024) throw cli::ConfigError("DISTRENORM_JOBS must be an integer in [1, 1024]");
  return static_cast<int>(n);
}

int run_command(const std::string& path, const std::optional<std::string>& out, const std::optional<std::uint64_t>& seed,
                std::optional<int> jobs) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw cli::ConfigError(path + ":1: cannot read config file");
  std::ostringstream ss;
  ss << in.rdbuf();
  const auto text = ss.str();
  const auto raw = cli::parse_config_text(text, path);
  const auto resolved = cli::resolve_config(raw, {out, seed}, path, text);
  const int k = jobs ? *jobs : jobs_from_env();
  const auto report = cli::run(resolved, k);
  for (const auto& o : report.outcomes) {
    std::cout << o.name << " [" << o.kind << "] " << cli::to_string(o.status);
    if (!o.message.empty()) std::cout << ": " << o.message;
    std::cout << "\n";
  }
  std::cout << "results in " << resolved.at("output").get<std::string>() << " (exit " << report.exit_code << ")\n";
  return report.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"distrenorm: extension and renormalization experiments"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "run the experiments of a JSON config");
  std::string config;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  run->add_option("config", config, "config file")->required();
  run->add_option("--out", out, "output directory (overrides the config)");
  run->add_option("--seed", seed, "base seed (overrides the config)");
  run->add_option("--jobs", jobs, "experiments run concurrently (default: DISTRENORM_JOBS or 1)")
      ->check(CLI::Range(1, 1024));

  auto* oracle = app.add_subcommand("oracle", "evaluate a reference oracle");
  oracle->require_subcommand(1);
  std::map<std::string, std::map<std::string, double>> oracle_args;
  for (const auto& k : cli::oracle_kinds()) {
    auto* sub = oracle->add_subcommand(k.name, k.summary);
    auto& args = oracle_args[k.name];
    for (const auto& p : k.params) {
      auto* opt = sub->add_option_function<double>(
          "--" + p.name, [&args, name = p.name](const double& v) { args[name] = v; }, p.help);
      opt->default_str(cli::format_double(p.default_value));
    }
  }

  auto* list = app.add_subcommand("list-kinds", "list experiment kinds, their CSV headers and the oracles");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // Usage errors share the config-error exit code.
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (*run) return run_command(config, out, seed, jobs);
    if (*oracle) {
      for (auto* sub : oracle->get_subcommands()) {
        std::cout << cli::format_double(cli::evaluate_oracle(sub->get_name(), oracle_args[sub->get_name()])) << "\n";
      }
      return 0;
    }
    if (*list) {
      for (const auto& k : cli::experiment_kinds())
        std::cout << k.name << "\n  " << k.summary << "\n  csv: " << k.csv_header << "\n";
      std::cout << "\noracles:\n";
      for (const auto& k : cli::oracle_kinds()) std::cout << "  " << k.name << ": " << k.summary << "\n";
      return 0;
    }
  } catch (const cli::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
