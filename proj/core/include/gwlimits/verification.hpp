#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gwlimits/limit_laws.hpp"
#include "gwlimits/process_model.hpp"
#include "gwlimits/tree_sampler.hpp"

namespace gwlimits {

/// One replicate of a joint statistic: (first component, scalar W).
struct JointSample {
  Eigen::VectorXd z;
  double w = 0.0;
};

std::complex<double> empirical_cf(std::span<const double> samples, double t);
std::complex<double> empirical_joint_cf(std::span<const JointSample> samples, const Eigen::VectorXd& c, double K);

/// Two-sided Kolmogorov-Smirnov distance between the sample and `cdf`.
double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf);

/// +-{0.1, 0.2, 0.5, 1, 2, 5}.
std::vector<double> default_t_grid();

/// `count` directions drawn uniformly on the unit sphere of dimension `dim`
/// from a fixed seed, with K cycling through {-1, -0.3, 0.3, 1}. Directions
/// with |c.avoid| < 1e-6 are redrawn when `avoid` is given.
std::vector<DirectionPoint> default_direction_grid(std::size_t dim, std::size_t count = 8,
                                                   std::uint64_t seed = 20040601,
                                                   const Eigen::VectorXd* avoid = nullptr);

/// Fixed direction c paired with each K in {-1, -0.3, 0.3, 1}.
std::vector<DirectionPoint> fixed_direction_grid(const Eigen::VectorXd& c);

struct VerifyOptions {
  std::uint64_t master_seed = 1;
  std::uint64_t node_cap = 10'000'000;
  unsigned workers = 1;
  double cf_tolerance = 0.1;
  std::optional<double> ks_tolerance;
  double warn_censored_fraction = 0.01;
  double max_censored_fraction = 0.05;
  std::string experiment_id;
};

struct GridPointResult {
  double t_or_K = 0.0;
  std::optional<std::size_t> direction_id;
  std::complex<double> theory;
  std::complex<double> empirical;
  double distance = 0.0;
};

struct ConvergenceRow {
  std::uint64_t N = 0;
  double lambda = 0.0;
  double median_abs_error = 0.0;
  std::vector<double> chain_estimates;
  double expected_estimate = 0.0;  // (1 - lambda) S_lambda,k, no sampling noise
  double identity_error = 0.0;     // |expected_estimate - u_k|
};

struct VerificationReport {
  std::string experiment_id;
  std::string theorem;
  std::string grid_description;
  double sup_cf_distance = 0.0;
  double avg_cf_distance = 0.0;
  std::optional<double> ks_statistic;
  std::uint64_t N = 0;
  std::uint64_t replicates = 0;
  std::uint64_t master_seed = 0;
  std::uint64_t trees = 0;
  std::uint64_t censored = 0;
  double censored_fraction = 0.0;
  double cf_tolerance = 0.0;
  std::optional<double> ks_tolerance;
  std::vector<GridPointResult> points;
  std::vector<ConvergenceRow> convergence;
  bool exact_identity = false;
  std::vector<std::string> warnings;
  bool passed = false;
};

VerificationReport verify_theorem1(const ProcessSpec& spec, const EigenData& eigen, std::size_t k, std::uint64_t N,
                                   std::uint64_t replicates, std::span<const double> t_grid,
                                   const Eigen::VectorXd& c, const VerifyOptions& options);

VerificationReport verify_theorem2(const ProcessSpec& spec, const EigenData& eigen, std::size_t k, std::uint64_t N,
                                   std::uint64_t replicates, std::span<const DirectionPoint> grid,
                                   const VerifyOptions& options);

VerificationReport verify_theorem3(const ProcessSpec& spec, const EigenData& eigen, std::size_t k, std::size_t j,
                                   std::span<const CountVector> rules, std::uint64_t N, std::uint64_t replicates,
                                   std::span<const DirectionPoint> grid, const VerifyOptions& options);

struct Theorem4Options {
  std::size_t chains = 10;
  double tolerance = 0.05;
  double identity_tolerance = 1e-12;
};

/// Passes when the median error over chains strictly decreases along the
/// (increasing) N grid and the final median is within tolerance.
VerificationReport verify_theorem4(const ProcessSpec& spec, const EigenData& eigen, std::size_t k,
                                   std::span<const std::uint64_t> N_grid, double beta, const Theorem4Options& t4,
                                   const VerifyOptions& options);

/// Replicate statistics, exposed for testing and custom experiments.
std::vector<double> theorem1_replicates(const ProcessSpec& spec, std::size_t k, std::uint64_t N,
                                        std::uint64_t replicates, const Eigen::VectorXd& c,
                                        const VerifyOptions& options, std::uint64_t* censored = nullptr);
std::vector<JointSample> theorem2_replicates(const ProcessSpec& spec, const EigenData& eigen, std::size_t k,
                                             std::uint64_t N, std::uint64_t replicates, const VerifyOptions& options,
                                             std::uint64_t* censored = nullptr);
std::vector<JointSample> theorem3_replicates(const ProcessSpec& spec, std::size_t k, std::size_t j,
                                             std::span<const CountVector> rules, std::uint64_t N,
                                             std::uint64_t replicates, const VerifyOptions& options,
                                             std::uint64_t* censored = nullptr);

}  // namespace gwlimits
