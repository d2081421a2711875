#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "distrenorm/oracles.hpp"
#include "distrenorm/runner.hpp"

using namespace distrenorm::cli;
namespace fs = std::filesystem;
namespace orc = distrenorm::oracle;

namespace {

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("distrenorm-cli-" + name + "-" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const fs::path& p, const std::string& s) { std::ofstream(p, std::ios::binary) << s; }

// Cheap experiments covering several kinds.
const char* kSmallSuite = R"({
  "seed": 3,
  "experiments": [
    {"kind": "finite-part", "name": "fp", "phi": {"center": [0.2], "radius": 0.7}, "ladder": {"j_min": 2, "j_max": 8}},
    {"kind": "cutoff-check", "name": "cut", "samples": 200, "lambdas": [0.5, 0.01]},
    {"kind": "growth", "name": "gr", "function": {"type": "power", "exponent": 1.5}, "expected_s": 1.5},
    {"kind": "extend", "name": "ext", "phis": [{"center": [0.1], "radius": 0.9}, {"center": [2.0], "radius": 0.5}]}
  ]
})";

int run_binary(const std::string& args) {
  const std::string cmd = std::string(DISTRENORM_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

}  // namespace

TEST(Config, DefaultsAreFilledAndResolutionIsIdempotent) {
  auto r = resolve_config(Json::parse(kSmallSuite), {}, "suite");
  EXPECT_EQ(r["output"], "distrenorm-out");
  EXPECT_EQ(r["seed"], 3);
  const auto& fp = r["experiments"][0];
  EXPECT_EQ(fp["exponent"], 1.0);
  EXPECT_EQ(fp["order"], 0);
  EXPECT_EQ(fp["tolerance"], 1e-6);
  EXPECT_EQ(fp["quadrature"]["method"], "auto");
  EXPECT_EQ(r["experiments"][3]["order"], "auto");
  EXPECT_EQ(resolve_config(r), r);
  // The printed echo parses back to itself.
  EXPECT_EQ(dump_json(resolve_config(Json::parse(dump_json(r)))), dump_json(r));
  auto o = resolve_config(Json::parse(kSmallSuite), {std::string("elsewhere"), 11}, "suite");
  EXPECT_EQ(o["output"], "elsewhere");
  EXPECT_EQ(o["seed"], 11);
}

TEST(Config, UnknownKeysAreRejectedWithALine) {
  const std::string text = "{\n  \"experiments\": [\n    {\"kind\": \"growth\",\n     \"bogus\": 1}\n  ]\n}\n";
  try {
    resolve_config(parse_config_text(text, "c.json"), {}, "c.json", text);
    FAIL() << "accepted an unknown key";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("c.json:4:"), std::string::npos) << e.what();
    EXPECT_NE(std::string(e.what()).find("bogus"), std::string::npos);
  }
  EXPECT_THROW(resolve_config(Json::parse(R"({"experiments": [], "x": 1})")), ConfigError);
  EXPECT_THROW(resolve_config(Json::parse(R"({"experiments": [{"kind": "finite-part", "quadrature": {"tol": 1}}]})")),
               ConfigError);
}

TEST(Config, InvalidValuesAreRejected) {
  auto bad = [](const char* s) { return Json::parse(s); };
  EXPECT_THROW(resolve_config(bad(R"({"experiments": [{"kind": "nope"}]})")), ConfigError);
  EXPECT_THROW(resolve_config(bad(R"({"experiments": [{"name": "x"}]})")), ConfigError);
  EXPECT_THROW(resolve_config(bad(R"({"experiments": [{"kind": "finite-part", "r_in": 2.0}]})")), ConfigError);
  EXPECT_THROW(resolve_config(bad(R"({"experiments": [{"kind": "finite-part", "phi": {"center": [0, 0]}}]})")),
               ConfigError);
  EXPECT_THROW(resolve_config(bad(R"({"experiments": [{"kind": "growth", "name": "a"}, {"kind": "growth", "name": "a"}]})")),
               ConfigError);
  EXPECT_THROW(resolve_config(bad(R"({"experiments": [{"kind": "growth", "name": "../up"}]})")), ConfigError);
  EXPECT_THROW(resolve_config(bad(R"({"experiments": [{"kind": "factorize", "d": 1, "n": 3, "edges": [1, 1, 1],
      "pieces": ["{1,2}|{4}"], "phis": [{"center": [0, 0, 0]}]}]})")),
               ConfigError);
  EXPECT_THROW(resolve_config(bad(R"({"experiments": [{"kind": "amplitude", "d": 1, "n": 2, "edges": [1],
      "phis": [{"center": [0, 0, 0]}]}]})")),
               ConfigError);
  EXPECT_THROW(resolve_config(bad(R"({"experiments": [{"kind": "extend", "set": {"type": "big-diagonal", "n": 3, "d": 1},
      "phis": [{"center": [0, 0, 0]}]}]})")),
               ConfigError);
  EXPECT_THROW(resolve_config(bad(R"({"seed": -1, "experiments": [{"kind": "growth"}]})")), ConfigError);
}

TEST(Config, SyntaxErrorsCarryLineAndColumn) {
  const std::string text = "{\n  \"experiments\": [\n    {\"kind\": \"growth\",,}\n  ]\n}\n";
  try {
    parse_config_text(text, "c.json");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(std::string(e.what()).rfind("c.json:3:", 0), 0u) << e.what();
  }
  EXPECT_THROW(load_config_file("/nonexistent/config.json"), ConfigError);
}

TEST(Output, SeventeenSignificantDigits) {
  EXPECT_EQ(format_double(0.1), "0.10000000000000001");
  EXPECT_EQ(format_double(1.0), "1");
  EXPECT_EQ(format_double(std::nan("")), "nan");
  EXPECT_EQ(std::stod(format_double(1.0 / 3.0)), 1.0 / 3.0);
  Json j{{"a", 0.1}, {"b", 2.0}, {"c", std::nan("")}, {"d", 3}};
  EXPECT_EQ(dump_json(j), "{\n  \"a\": 0.10000000000000001,\n  \"b\": 2.0,\n  \"c\": null,\n  \"d\": 3\n}\n");
}

TEST(Output, ExitCodePrecedence) {
  EXPECT_EQ(exit_code({Status::Pass, Status::Pass}), 0);
  EXPECT_EQ(exit_code({Status::Pass, Status::Fail}), 2);
  EXPECT_EQ(exit_code({Status::Fail, Status::Diverged}), 3);
  EXPECT_EQ(exit_code({Status::Diverged, Status::Error, Status::Fail}), 1);
}

TEST(Output, AtomicWriteLeavesOnlyTheTarget) {
  auto dir = scratch("atomic");
  write_file_atomic(dir / "a.txt", "one");
  write_file_atomic(dir / "a.txt", "two");
  EXPECT_EQ(slurp(dir / "a.txt"), "two");
  EXPECT_EQ(std::distance(fs::directory_iterator(dir), fs::directory_iterator()), 1);
  fs::remove_all(dir);
}

TEST(Run, DeterministicAcrossRunsJobsAndEchoRoundTrip) {
  auto dir = scratch("det");
  auto a = resolve_config(Json::parse(kSmallSuite), {(dir / "a").string(), std::nullopt});
  auto b = resolve_config(Json::parse(kSmallSuite), {(dir / "b").string(), std::nullopt});
  auto ra = run(a, 1);
  auto rb = run(b, 3);
  EXPECT_EQ(ra.exit_code, 0);
  for (const auto& o : ra.outcomes) EXPECT_EQ(o.status, Status::Pass) << o.name << ": " << o.message;
  // Re-run from the echoed config.
  auto echoed = load_config_file(dir / "a" / "resolved_config.json");
  auto c = resolve_config(echoed, {(dir / "c").string(), std::nullopt});
  run(c, 1);
  for (const auto& name : {"fp.csv", "cut.csv", "gr.csv", "ext.csv", "summary.json"}) {
    const auto ref = slurp(dir / "a" / name);
    EXPECT_FALSE(ref.empty()) << name;
    EXPECT_EQ(ref, slurp(dir / "b" / name)) << name;
    EXPECT_EQ(ref, slurp(dir / "c" / name)) << name;
  }
  EXPECT_EQ(slurp(dir / "a" / "fp.csv").substr(0, 52), "j,lambda,F,deltaF,ratio,extrapolated,oracle,abs_err\n");
  EXPECT_EQ(slurp(dir / "a" / "gr.csv").substr(0, 38), "shell_r,sup_value,fit_s,fit_C,residual");
  fs::remove_all(dir);
}

TEST(Run, FinitePartOracleColumnMatches) {
  auto r = resolve_config(Json::parse(R"({"experiments": [{"kind": "finite-part", "phi": {"center": [-0.1], "radius": 1.5}}]})"));
  auto out = run_experiment(r, 0);
  EXPECT_EQ(out.status, Status::Pass) << out.message;
  const double oracle = out.metrics["oracle"].get<double>();
  EXPECT_NEAR(out.metrics["extrapolated"].get<double>(), oracle, 1e-6);
  const double ref = static_cast<double>(orc::finite_part_inverse_abs(
      [](long double x) { return orc::bump(x + 0.1L, 1.5L); }, 0.25L, 1.0L, 2.0L, {1.4L, 1.6L}));
  EXPECT_NEAR(oracle, ref, 1e-12);
}

TEST(Run, StatusesFollowResults) {
  // Order too low for |x|^-1: divergence.
  auto div = resolve_config(Json::parse(R"({"experiments": [{"kind": "finite-part", "order": "none"}]})"));
  EXPECT_EQ(run_experiment(div, 0).status, Status::Diverged);
  // An impossible target exponent: tolerance failure.
  auto fail = resolve_config(
      Json::parse(R"({"experiments": [{"kind": "growth", "function": {"type": "cos"}, "expected_s": 2.0}]})"));
  EXPECT_EQ(run_experiment(fail, 0).status, Status::Fail);
  // phi meeting a cross-coincidence locus violates the factorization precondition.
  auto err = resolve_config(Json::parse(R"({"experiments": [{"kind": "factorize", "d": 1, "n": 3, "edges": [1, 1, 1],
      "pieces": ["{1,2}|{3}"], "phis": [{"type": "bump-product", "center": [0, 0.2, 0.4], "radii": [0.3, 0.3, 0.3]}]}]})"));
  auto e = run_experiment(err, 0);
  EXPECT_EQ(e.status, Status::Error);
  EXPECT_FALSE(e.message.empty());
  // Failed experiments still produce a CSV with its header.
  EXPECT_EQ(e.files.at(0).second, "piece,phi_id,lhs,rhs,residual\n");
}

TEST(Oracle, KindsMatchTheReferenceLibrary) {
  EXPECT_NEAR(evaluate_oracle("finite-part", {{"center", 0.2}, {"radius", 0.7}}),
              static_cast<double>(orc::finite_part_inverse_abs([](long double x) { return orc::bump(x - 0.2L, 0.7L); },
                                                               0.25L, 1.0L, 1.0L, {0.5L, 0.9L})),
              1e-13);
  EXPECT_NEAR(evaluate_oracle("window-difference", {}), static_cast<double>(orc::window_difference(0.25L, 1, 0.5L, 2)),
              1e-15);
  // Analytic: int (w2 - w1)/|x| over R = 2 log 2 when both windows scale by 2.
  EXPECT_NEAR(evaluate_oracle("window-difference", {}), 2 * std::log(2.0), 1e-12);
  const double fp = evaluate_oracle("two-point-3d", {{"n", 3}});
  EXPECT_NEAR(fp, -0.00018973693756790561, 1e-15);
  EXPECT_THROW(evaluate_oracle("finite-part", {{"bogus", 1}}), ConfigError);
  EXPECT_THROW(evaluate_oracle("nope", {}), ConfigError);
  EXPECT_THROW(evaluate_oracle("improper-power", {{"exponent", 1.0}}), ConfigError);
}

TEST(Binary, ExitCodes) {
  auto dir = scratch("bin");
  spit(dir / "cut.json", R"({"experiments": [{"kind": "cutoff-check", "samples": 300}]})");
  EXPECT_EQ(run_binary("run " + (dir / "cut.json").string() + " --out " + (dir / "o1").string()), 0);
  EXPECT_EQ(slurp(dir / "o1" / "0-cutoff-check.csv").substr(0, 4), "set,");
  spit(dir / "mc.json", R"({"experiments": [{"kind": "factorize", "d": 2, "n": 3, "edges": [1, 1, 1],
      "pieces": ["{1,2}|{3}"],
      "phis": [{"type": "bump-product", "center": [0, 0, 0.1, 0, 3, 0], "radii": [0.5, 0.5, 0.5, 0.5, 0.5, 0.5]}],
      "quadrature": {"method": "monte-carlo", "mc_samples": 50}}]})");
  EXPECT_EQ(run_binary("run " + (dir / "mc.json").string() + " --out " + (dir / "o2").string()), 2);
  spit(dir / "div.json", R"({"experiments": [{"kind": "finite-part", "order": "none"}]})");
  EXPECT_EQ(run_binary("run " + (dir / "div.json").string() + " --out " + (dir / "o3").string()), 3);
  spit(dir / "bad.json", "{\n  \"experiments\": [\n");
  EXPECT_EQ(run_binary("run " + (dir / "bad.json").string() + " --out " + (dir / "o4").string()), 1);
  EXPECT_EQ(run_binary("run " + (dir / "missing.json").string()), 1);
  EXPECT_EQ(run_binary("run " + (dir / "cut.json").string() + " --jobs 0"), 1);
  EXPECT_EQ(run_binary("list-kinds"), 0);
  EXPECT_EQ(run_binary("oracle finite-part --center 0.2 --radius 0.7"), 0);
  EXPECT_EQ(run_binary("oracle finite-part --radius -1"), 1);
  const std::string env_cmd = "DISTRENORM_JOBS=zero " + std::string(DISTRENORM_CLI_PATH) + " run " +
                              (dir / "cut.json").string() + " --out " + (dir / "o5").string() + " >/dev/null 2>&1";
  const int rc = std::system(env_cmd.c_str());
  EXPECT_EQ(WEXITSTATUS(rc), 1);
  fs::remove_all(dir);
}
