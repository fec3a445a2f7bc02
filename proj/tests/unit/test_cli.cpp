#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "thermoray/commands.hpp"

using namespace thermoray;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("thermoray_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

fs::path write_config(const fs::path& dir, const std::string& text) {
  const fs::path p = dir / "config.json";
  std::ofstream(p) << text;
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_in_process(const std::string& cmd, const fs::path& cfg, const fs::path& out, std::optional<std::uint64_t> seed = {}) {
  RunOptions o;
  o.config_path = cfg.string();
  o.out_dir = out.string();
  o.seed = seed;
  std::ostringstream err;
  return run(cmd, o, err);
}

int run_binary(const std::string& args) {
  const int rc = std::system((std::string(THERMORAY_CLI) + " " + args + " >/dev/null 2>&1").c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

const char* kDisk = R"({"scene": {"R": 1.0}, "discretization": {"fan": [6, 6], "grid": [16, 16]}})";

}  // namespace

TEST_CASE("trace of the flat diameter") {
  const fs::path d = scratch("trace");
  const fs::path cfg = write_config(d, kDisk);
  REQUIRE(run_in_process("trace", cfg, d / "out") == kExitOk);
  const json rep = json::parse(slurp(d / "out" / "trace_report.json"));
  CHECK(rep["command"] == "trace");
  CHECK(rep["schema"] == 1);
  CHECK(rep["results"]["convexity_margin"].get<double>() == doctest::Approx(1.0));
  const std::string csv = slurp(d / "out" / "trace.csv");
  std::istringstream is(csv);
  std::string header, row;
  std::getline(is, header);
  std::getline(is, row);
  CHECK(header == "s,alpha,tau,exit_s,exit_alpha");
  std::vector<double> v;
  std::stringstream rs(row);
  for (std::string c; std::getline(rs, c, ',');) v.push_back(std::stod(c));
  REQUIRE(v.size() == 5);
  CHECK(v[2] == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(v[3] == doctest::Approx(kPi).epsilon(1e-9));
  CHECK(fs::exists(d / "out" / "metadata.json"));
}

TEST_CASE("malformed config fails before any output") {
  const fs::path d = scratch("bad");
  const fs::path cfg = write_config(d, "{\"scene\": {\"R\": 1.0,");
  CHECK(run_in_process("scatter", cfg, d / "out") == kExitConfig);
  CHECK_FALSE(fs::exists(d / "out"));
  const fs::path cfg2 = write_config(d, R"({"scene": {"R": -1}})");
  CHECK(run_in_process("scatter", cfg2, d / "out") == kExitConfig);
  const fs::path cfg3 = write_config(d, R"({"scene": {}, "discretization": {"grid": [16, 12]}})");
  CHECK(run_in_process("verify", cfg3, d / "out") == kExitConfig);
  CHECK(run_in_process("scatter", d / "missing.json", d / "out") == kExitConfig);
  CHECK_FALSE(fs::exists(d / "out"));
}

TEST_CASE("non-convex scenes are rejected") {
  const fs::path d = scratch("reject");
  const fs::path cfg = write_config(d, R"({"scene": {"R": 1.0, "E": {"kind": "radial", "params": {"c": -2.0}}}})");
  CHECK(run_in_process("scatter", cfg, d / "out") == kExitRejected);
  CHECK_FALSE(fs::exists(d / "out"));
}

TEST_CASE("reruns are byte identical") {
  const fs::path d = scratch("rerun");
  const fs::path cfg = write_config(d, R"({"scene": {"R": 1.0, "E": {"kind": "radial", "params": {"c": 0.5}}},
    "pair": {"kind": "random", "rank": 2, "degree": 1},
    "discretization": {"fan": [5, 4], "seed": 3}})");
  REQUIRE(run_in_process("transport", cfg, d / "a") == kExitOk);
  REQUIRE(run_in_process("transport", cfg, d / "b") == kExitOk);
  CHECK(slurp(d / "a" / "transport.csv") == slurp(d / "b" / "transport.csv"));
  CHECK(slurp(d / "a" / "transport_report.json") == slurp(d / "b" / "transport_report.json"));
  REQUIRE(run_in_process("transport", cfg, d / "c", 4) == kExitOk);
  CHECK(slurp(d / "a" / "transport.csv") != slurp(d / "c" / "transport.csv"));
  const json rep = json::parse(slurp(d / "c" / "transport_report.json"));
  CHECK(rep["seed"] == 4);
  CHECK(rep["results"]["max_inverse_defect"].get<double>() < 1e-9);
}

TEST_CASE("verify report structure") {
  const fs::path d = scratch("verify");
  const fs::path cfg = write_config(d, R"({"scene": {"R": 1.0, "E": {"kind": "radial", "params": {"c": 0.3}}},
    "verify": {"resolutions": [[16, 16], [32, 16]], "energy": false}})");
  REQUIRE(run_in_process("verify", cfg, d / "out") == kExitOk);
  const json rep = json::parse(slurp(d / "out" / "verify_report.json"));
  REQUIRE(rep["results"]["identities"].is_array());
  CHECK_FALSE(rep["results"]["identities"].empty());
  for (const auto& e : rep["results"]["identities"]) {
    CHECK(e.contains("identity"));
    CHECK(e["residuals"].size() == 2);
    CHECK(e["orders"].size() == (e["exact"].get<bool>() ? 0u : 1u));
  }
  CHECK(slurp(d / "out" / "verify.csv").rfind("identity,n_x,n_theta,residual\n", 0) == 0);
}

TEST_CASE("binary exit codes") {
  const fs::path d = scratch("binary");
  const fs::path good = write_config(d, kDisk);
  CHECK(run_binary("trace --config " + good.string() + " --out " + (d / "out").string()) == 0);
  CHECK(fs::exists(d / "out" / "trace.csv"));
  CHECK(run_binary("trace --config " + good.string() + " --out " + (d / "out2").string() + " --threads 2 --seed 9") == 0);
  CHECK(run_binary("trace --config " + (d / "nope.json").string()) == 1);
  CHECK(run_binary("trace") == 1);
  CHECK(run_binary("bogus --config " + good.string()) == 1);
  CHECK(run_binary("trace --config " + good.string() + " --threads 0 --out " + (d / "out3").string()) == 1);
  CHECK(run_binary("trace --config " + good.string() + " --out " + good.string()) == 1);
  const fs::path bad = d / "bad.json";
  std::ofstream(bad) << R"({"scene": {"R": 1.0, "E": {"kind": "radial", "params": {"c": -2.0}}}})";
  CHECK(run_binary("kernel --config " + bad.string() + " --out " + (d / "out4").string()) == 2);
}
