#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "gwlimits/experiment.hpp"
#include "gwlimits/output.hpp"

using namespace gwlimits;
namespace fs = std::filesystem;

namespace {

const fs::path kData = GWLIMITS_DATA_DIR;

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("gwlimits_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

ExperimentConfig config(const std::string& body) {
  return parse_experiment_config(body, kData / "configs");
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(GWLIMITS_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("validate") {
  std::ostringstream out, err;
  CHECK(cmd_validate(kData / "processes/e1.json", out, err) == kExitPass);
  CHECK(out.str().find("v = (1)") != std::string::npos);
  CHECK(out.str().find("u = (1)") != std::string::npos);
  CHECK(out.str().find("H(u) = 1\n") != std::string::npos);

  std::ostringstream out2, err2;
  CHECK(cmd_validate(kData / "processes/subcritical.json", out2, err2) == kExitValidation);
  CHECK(err2.str().find("NotCritical") != std::string::npos);
  CHECK(err2.str().find("0.8") != std::string::npos);

  std::ostringstream out3, err3;
  CHECK(cmd_validate(kData / "processes/bad_probabilities.json", out3, err3) == kExitValidation);
  CHECK(err3.str().find("NotAProbability") != std::string::npos);

  std::ostringstream out4, err4;
  CHECK(cmd_validate(kData / "processes/missing.json", out4, err4) == kExitIo);
}

TEST_CASE("config parsing") {
  const auto cfg = config(R"({"process": "../processes/e4.json", "root_type": 2, "master_seed": 5,
      "verify_thm3": {"j": 1, "rules": [[0, 0], [1, 0]]}})");
  CHECK(cfg.root_type == 1);
  REQUIRE(cfg.verify_thm3);
  CHECK(cfg.verify_thm3->rules.size() == 2);
  CHECK(cfg.hash().size() == 16);

  auto code = [](const std::string& body) {
    try {
      config(body);
    } catch (const Error& e) {
      return exit_code_for(e.code());
    }
    return 0;
  };
  CHECK(code(R"({"process": "../processes/e4.json"})") == kExitIo);
  CHECK(code(R"({"process": "../processes/e4.json", "master_seed": 1, "bogus": 2})") == kExitIo);
  CHECK(code(R"({"process": "../processes/e4.json", "master_seed": 1, "verify_thm3": {"j": 1, "rules": [[2, 2]]}})") ==
        kExitValidation);
  CHECK(code(R"({"process": "../processes/nope.json", "master_seed": 1})") == kExitIo);
  CHECK(code("{not json") == kExitIo);
}

TEST_CASE("hash ignores seed, workers and output directory") {
  const auto a = config(R"({"process": "../processes/e1.json", "master_seed": 1, "workers": 1, "output_dir": "a"})");
  const auto b = config(R"({"process": "../processes/e1.json", "master_seed": 2, "workers": 8, "output_dir": "b"})");
  const auto c = config(R"({"process": "../processes/e4.json", "master_seed": 1})");
  CHECK(a.hash() == b.hash());
  CHECK(a.hash() != c.hash());
}

TEST_CASE("estimate on E2") {
  auto cfg = config(R"({"process": "../processes/e2.json", "master_seed": 31, "node_cap": 1000000000000,
      "estimate": {"N": 10000, "beta": 0.25}, "verify_thm4": {"N_grid": [100, 1000], "chains": 10}})");
  cfg.output_dir = scratch("estimate");
  std::ostringstream out, err;
  REQUIRE(cmd_estimate(cfg, out, err) == kExitPass);
  const auto csv = slurp(cfg.output_dir / "estimate.csv");
  CHECK(csv.rfind("# config_hash=" + cfg.hash() + " master_seed=31\n", 0) == 0);
  std::istringstream lines(csv);
  std::string line;
  int checked = 0;
  while (std::getline(lines, line)) {
    if (line.rfind("v_", 0) != 0) continue;
    const auto first = line.find(',');
    CHECK(std::abs(std::stod(line.substr(first + 1)) - 0.5) <= 0.02);
    ++checked;
  }
  CHECK(checked == 2);

  std::ostringstream out4, err4;
  CHECK(cmd_verify(cfg, 4, out4, err4) != kExitRuntime);
  const auto json = slurp(cfg.output_dir / "thm4.json");
  CHECK(json.find("\"exact_identity\": true") != std::string::npos);
  CHECK(out4.str().find("exact identity holds") != std::string::npos);
}

TEST_CASE("tolerance failures exit with code 3") {
  auto cfg = config(R"({"process": "../processes/e1.json", "master_seed": 1, "node_cap": 1000000000000,
      "verify_thm1": {"N": 20, "replicates": 30, "cf_tolerance": 0.0001}})");
  cfg.output_dir = scratch("tolerance");
  std::ostringstream out, err;
  CHECK(cmd_verify(cfg, 1, out, err) == kExitTolerance);
  CHECK(fs::exists(cfg.output_dir / "thm1.json"));
  CHECK(slurp(cfg.output_dir / "thm1.csv").rfind("# config_hash=", 0) == 0);
  std::ostringstream out2, err2;
  CHECK(cmd_verify(cfg, 2, out2, err2) == kExitIo);
}

TEST_CASE("outputs are byte-identical across reruns and worker counts") {
  const std::string body = R"({"process": "../processes/e4.json", "master_seed": 77, "node_cap": 1000000000000,
      "sample": {"N": 3000, "lambdas": [0.5, 0.99]},
      "estimate": {"N": 3000, "beta": 0.25},
      "verify_thm1": {"N": 200, "replicates": 40, "c": [1, 0]},
      "verify_thm2": {"N": 200, "replicates": 40},
      "verify_thm3": {"j": 2, "N": 200, "replicates": 40},
      "verify_thm4": {"N_grid": [100, 1000], "chains": 10}})";
  std::map<std::string, std::string> reference;
  for (unsigned workers : {1u, 4u, 8u, 1u}) {
    auto cfg = config(body);
    cfg.workers = workers;
    cfg.output_dir = scratch("determinism_" + std::to_string(workers));
    std::ostringstream out, err;
    cmd_all_checks(cfg, out, err);
    for (const auto& entry : fs::directory_iterator(cfg.output_dir)) {
      const auto name = entry.path().filename().string();
      const auto bytes = slurp(entry.path());
      auto [it, fresh] = reference.emplace(name, bytes);
      CAPTURE(name);
      CAPTURE(workers);
      if (!fresh) CHECK(it->second == bytes);
    }
  }
  CHECK(reference.size() == 11);
}

TEST_CASE("command-line front end") {
  CHECK(run_cli("validate " + (kData / "processes/e1.json").string()) == 0);
  CHECK(run_cli("validate " + (kData / "processes/subcritical.json").string()) == 2);
  CHECK(run_cli("validate /nonexistent.json") == 4);
  CHECK(run_cli("frobnicate") != 0);

  const auto dir = scratch("front_end");
  const fs::path cfg = dir / "cfg.json";
  std::ofstream(cfg) << R"({"process": ")" << (kData / "processes/e1.json").string()
                     << R"(", "master_seed": 1, "sample": {"N": 10}})";
  CHECK(run_cli("sample -c " + cfg.string() + " --seed 3 --out " + (dir / "out").string()) == 0);
  const auto csv = slurp(dir / "out/trees.csv");
  CHECK(csv.find("master_seed=3") != std::string::npos);
  CHECK(csv.find("tree_index,size,f_1,censored") != std::string::npos);
  CHECK(run_cli("verify-thm1 -c " + cfg.string() + " --out " + (dir / "out").string()) == 4);
}

}  // TEST_SUITE
