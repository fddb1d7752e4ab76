#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gwlimits/alias_table.hpp"
#include "gwlimits/process_model.hpp"
#include "gwlimits/rng.hpp"

namespace gwlimits {

enum class CapPolicy { Censor, Abort };

struct TrackedRule {
  std::size_t type = 0;
  CountVector counts;
};

/// Per-rule values g_s(n), aligned with spec.rules(s). G(tree) is the sum of
/// g over every rule application in the tree.
struct AdditiveFunction {
  std::vector<std::vector<double>> values;

  static AdditiveFunction per_type_constant(const ProcessSpec& spec, std::span<const double> c);
  static AdditiveFunction terminals(const ProcessSpec& spec);
  static AdditiveFunction tree_size(const ProcessSpec& spec);

  /// C_g = sum_s v_s sum_n p_s(n) g_s(n).
  double mean_under_q(const ProcessSpec& spec, const Eigen::VectorXd& v) const;
};

struct SamplerConfig {
  std::size_t root_type = 0;
  std::uint64_t node_cap = 10'000'000;
  CapPolicy cap_policy = CapPolicy::Censor;
  std::vector<double> lambdas;
  std::vector<TrackedRule> tracked_rules;
  std::optional<AdditiveFunction> additive_g;
  std::uint64_t master_seed = 0;
  bool keep_depth_histogram = false;
};

/// Tracks every rule of every type, in spec order.
std::vector<TrackedRule> all_rules(const ProcessSpec& spec);

struct TreeStats {
  std::vector<std::uint64_t> f;
  std::vector<std::uint64_t> rule_counts;  // aligned with SamplerConfig::tracked_rules
  std::uint64_t size = 0;
  std::vector<double> s_lambda;  // aligned with SamplerConfig::lambdas
  double g_sum = 0.0;
  bool censored = false;
  std::vector<std::uint64_t> depth_histogram;  // nodes per depth, when requested
};

/// S(tree, lambda) = sum_d lambda^d * histogram[d].
double discounted_size(std::span<const std::uint64_t> depth_histogram, double lambda);

/// Generation-by-generation sampler. Trees are never materialized: each
/// generation is a vector of per-type particle counts, and the rules applied
/// by the m particles of type s are a Multinomial(m, p_s) draw. Censoring
/// happens at generation granularity: a generation that would push the node
/// count past node_cap is not added.
class TreeSampler {
 public:
  TreeSampler(const ProcessSpec& spec, SamplerConfig config);

  const SamplerConfig& config() const noexcept { return config_; }
  std::size_t num_types() const noexcept { return num_types_; }

  /// Deterministic in (master_seed, tree_index).
  TreeStats sample(std::uint64_t tree_index) const;

  /// Replays a fixed sequence of offspring vectors. Particles consume the
  /// sequence generation by generation, lower type indices first.
  TreeStats sample_forced(std::span<const CountVector> rule_sequence) const;

 private:
  struct TypeLaw {
    std::vector<double> probs;               // positive-probability rules only
    std::vector<std::size_t> rule_index;     // into spec.rules(s)
    std::vector<CountVector> counts;
    std::vector<double> g;
    AliasTable table;
  };

  template <class DrawRules>
  TreeStats grow(std::uint64_t tree_index, DrawRules&& draw) const;

  std::size_t num_types_;
  SamplerConfig config_;
  std::vector<TypeLaw> laws_;
  std::vector<std::vector<std::size_t>> rule_slot_;  // (type, spec rule) -> flat slot
  std::size_t num_slots_ = 0;
  std::vector<std::ptrdiff_t> tracked_slot_;         // tracked rule -> flat slot, -1 if p = 0
};

TreeStats sample_tree(const ProcessSpec& spec, const SamplerConfig& config, std::uint64_t tree_index);

enum class RecordLevel {
  None,     // integer totals only
  Compact,  // plus per-tree size, censored flag, S values, G value, tracked rule counts
  Full,     // plus per-tree type counts and depth histograms
};

struct TreeRecord {
  std::uint64_t index = 0;
  std::uint64_t size = 0;
  bool censored = false;
  std::vector<double> s_lambda;
  double g_sum = 0.0;
  std::vector<std::uint64_t> rule_counts;
  std::vector<std::uint64_t> f;
  std::vector<std::uint64_t> depth_histogram;
};

struct BatchTotals {
  std::uint64_t trees = 0;
  std::uint64_t size = 0;
  std::vector<std::uint64_t> f;
  std::vector<std::uint64_t> rule_counts;

  bool operator==(const BatchTotals&) const = default;
};

/// Mergeable aggregate over a set of tree indices. Merging is associative
/// and commutative: integer totals add and records are kept sorted by index.
class BatchAccumulator {
 public:
  BatchAccumulator(std::size_t num_types, std::size_t num_tracked, RecordLevel level);

  void add(std::uint64_t tree_index, const TreeStats& stats);
  void merge(const BatchAccumulator& other);

  RecordLevel record_level() const noexcept { return level_; }
  std::size_t num_types() const noexcept { return all_.f.size(); }
  std::uint64_t num_trees() const noexcept { return all_.trees; }
  std::uint64_t censored_count() const noexcept { return all_.trees - uncensored_.trees; }

  /// Totals over every tree, censored ones included.
  const BatchTotals& totals() const noexcept { return all_; }
  /// Totals over uncensored trees only.
  const BatchTotals& uncensored_totals() const noexcept { return uncensored_; }

  std::span<const TreeRecord> records() const noexcept { return records_; }

  /// Index-ordered sums over per-tree records (requires records).
  std::vector<double> total_s_lambda(bool include_censored = true) const;
  double total_g(bool include_censored = true) const;

  bool operator==(const BatchAccumulator&) const;

 private:
  RecordLevel level_;
  BatchTotals all_;
  BatchTotals uncensored_;
  std::vector<TreeRecord> records_;
};

struct BatchOptions {
  RecordLevel records = RecordLevel::Compact;
  unsigned workers = 1;
  std::uint64_t first_index = 0;
};

/// Samples trees first_index .. first_index + N - 1. Work is split into fixed
/// chunks independent of the worker count, so results are bit-identical for
/// any number of workers.
BatchAccumulator sample_batch(const ProcessSpec& spec, const SamplerConfig& config, std::uint64_t N,
                              const BatchOptions& options = {});
BatchAccumulator sample_batch(const TreeSampler& sampler, std::uint64_t N, const BatchOptions& options = {});

/// Per-tree CSV: tree_index,size,f_1..f_V,censored,S_<lambda>... (Full records).
void write_tree_csv(std::ostream& out, const BatchAccumulator& batch, std::span<const double> lambdas);

}  // namespace gwlimits
