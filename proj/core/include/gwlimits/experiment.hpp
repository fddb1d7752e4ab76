#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gwlimits/process_model.hpp"
#include "gwlimits/tree_sampler.hpp"
#include "gwlimits/verification.hpp"

namespace gwlimits {

enum ExitCode : int {
  kExitPass = 0,
  kExitValidation = 2,
  kExitTolerance = 3,
  kExitIo = 4,
  kExitRuntime = 5,
};

int exit_code_for(ErrorCode code) noexcept;

struct SampleBlock {
  std::uint64_t N = 1000;
  std::vector<double> lambdas;
};

struct EstimateBlock {
  std::uint64_t N = 10000;
  std::optional<double> beta;      // also estimate u_k when set
  std::vector<TrackedRule> rules;  // every rule when empty
};

struct Thm1Block {
  std::uint64_t N = 2000;
  std::uint64_t replicates = 500;
  std::optional<Eigen::VectorXd> c;  // all ones when absent
  std::vector<double> t_grid;        // default grid when empty
  double cf_tolerance = 0.08;
  std::optional<double> ks_tolerance = 0.08;
};

struct DirectionGridSpec {
  std::vector<DirectionPoint> points;  // explicit points win
  std::size_t count = 8;
  std::uint64_t seed = 20040601;
};

struct Thm2Block {
  std::uint64_t N = 5000;
  std::uint64_t replicates = 400;
  DirectionGridSpec grid;
  double cf_tolerance = 0.1;
};

struct Thm3Block {
  std::size_t j = 0;
  std::vector<CountVector> rules;  // every rule of type j when empty
  std::uint64_t N = 5000;
  std::uint64_t replicates = 400;
  DirectionGridSpec grid;
  double cf_tolerance = 0.1;
};

struct Thm4Block {
  std::vector<std::uint64_t> N_grid{1000, 10000, 100000};
  double beta = 0.25;
  std::size_t chains = 10;
  double tolerance = 0.05;
};

/// One archived experiment. Root and rule types are 1-based in the file and
/// 0-based here.
struct ExperimentConfig {
  std::shared_ptr<const ProcessSpec> process;
  std::string experiment_id;
  std::size_t root_type = 0;
  std::uint64_t master_seed = 0;
  std::uint64_t node_cap = 10'000'000;
  unsigned workers = 1;
  std::filesystem::path output_dir = ".";
  std::optional<SampleBlock> sample;
  std::optional<EstimateBlock> estimate;
  std::optional<Thm1Block> verify_thm1;
  std::optional<Thm2Block> verify_thm2;
  std::optional<Thm3Block> verify_thm3;
  std::optional<Thm4Block> verify_thm4;
  std::string canonical_json;

  /// FNV-1a of the canonical JSON of everything that affects results, with
  /// the process inlined. Seed, workers and output directory are excluded.
  std::string hash() const;
};

/// `base_dir` resolves a relative process path. A missing master_seed is an
/// error: runs are never seeded from the clock.
ExperimentConfig parse_experiment_config(std::string_view text, const std::filesystem::path& base_dir);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

int cmd_validate(const std::filesystem::path& process_file, std::ostream& out, std::ostream& err);
int cmd_sample(const ExperimentConfig& config, std::ostream& out, std::ostream& err);
int cmd_estimate(const ExperimentConfig& config, std::ostream& out, std::ostream& err);
/// theorem in 1..4.
int cmd_verify(const ExperimentConfig& config, int theorem, std::ostream& out, std::ostream& err);
/// Validation plus every block present in the config; returns the worst exit code.
int cmd_all_checks(const ExperimentConfig& config, std::ostream& out, std::ostream& err);

}  // namespace gwlimits
