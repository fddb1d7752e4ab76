#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gwlimits/process_model.hpp"
#include "gwlimits/tree_sampler.hpp"

namespace gwlimits {

/// v_hat = sum f / sum |tree| over every tree in the batch (censored included).
Eigen::VectorXd estimate_v(const BatchAccumulator& batch);

/// p_hat_j(n) = sum f(j->n) / sum f(j) for each tracked rule of type j.
/// Rules that are not tracked are absent from the map.
std::map<CountVector, double> estimate_offspring(const BatchAccumulator& batch, std::span<const TrackedRule> tracked,
                                                 std::size_t j);

/// lambda_N = 1 - N^{-beta}; beta must lie in (0, 1/2).
double lambda_schedule(std::uint64_t N, double beta);

struct RightEigenEstimate {
  double u_hat = 0.0;
  double lambda = 0.0;
  std::uint64_t N = 0;
  std::uint64_t used = 0;      // uncensored trees in the average
  std::uint64_t censored = 0;  // excluded from the average
};

/// (1 - lambda_N) / N' * sum S(tree, lambda_N) over the first N records of a
/// batch holding depth histograms, where N' counts the uncensored trees.
RightEigenEstimate estimate_u_from_batch(const BatchAccumulator& batch, std::uint64_t N, double beta);

/// Samples N trees rooted at config.root_type and returns the estimate.
RightEigenEstimate estimate_u(const ProcessSpec& spec, SamplerConfig config, std::uint64_t N, double beta,
                              unsigned workers = 1);

struct AdditiveSum {
  double scaled_sum = 0.0;  // N^{-2} sum G
  double c_g = 0.0;
  std::uint64_t N = 0;
};

/// Requires a batch sampled with `g` as its additive function. Throws ZeroCg
/// when C_g vanishes, since the N^{-2} scaling is then degenerate.
AdditiveSum additive_sum(const BatchAccumulator& batch, const ProcessSpec& spec, const EigenData& eigen,
                         const AdditiveFunction& g);

struct EstimateRow {
  std::string name;
  double estimate = 0.0;
  std::optional<double> truth;
};

struct EstimateReport {
  Eigen::VectorXd v_hat;
  std::vector<std::map<CountVector, double>> p_hat;  // per type
  std::optional<RightEigenEstimate> u_hat;
  std::size_t u_type = 0;
  std::uint64_t N = 0;
  std::uint64_t censored_count = 0;
  std::uint64_t total_size = 0;
  std::vector<std::uint64_t> type_totals;

  /// Flat (name, estimate, truth) rows; truth comes from the process when given.
  std::vector<EstimateRow> rows(const ProcessSpec* spec = nullptr, const EigenData* eigen = nullptr) const;
};

EstimateReport build_estimate_report(const BatchAccumulator& batch, std::span<const TrackedRule> tracked,
                                     std::optional<RightEigenEstimate> u_hat = std::nullopt, std::size_t u_type = 0);

}  // namespace gwlimits
