#include "gwlimits/estimators.hpp"

#include <cmath>

namespace gwlimits {

namespace {

std::string counts_label(const CountVector& n) {
  std::string s = "(";
  for (std::size_t i = 0; i < n.size(); ++i) {
    if (i) s += ' ';
    s += std::to_string(n[i]);
  }
  return s + ")";
}

}  // namespace

Eigen::VectorXd estimate_v(const BatchAccumulator& batch) {
  const auto& t = batch.totals();
  if (t.size == 0) throw Error(ErrorCode::EmptySample, "no particles in the sample");
  Eigen::VectorXd v(static_cast<Eigen::Index>(t.f.size()));
  for (std::size_t s = 0; s < t.f.size(); ++s)
    v[static_cast<Eigen::Index>(s)] = static_cast<double>(t.f[s]) / static_cast<double>(t.size);
  return v;
}

std::map<CountVector, double> estimate_offspring(const BatchAccumulator& batch, std::span<const TrackedRule> tracked,
                                                 std::size_t j) {
  const auto& t = batch.totals();
  if (tracked.size() != t.rule_counts.size()) {
    throw Error(ErrorCode::InvalidArgument, "tracked rule list does not match the batch");
  }
  if (j >= t.f.size() || t.f[j] == 0) {
    throw Error(ErrorCode::TypeNeverObserved, "type " + std::to_string(j + 1) + " never appears in the sample");
  }
  std::map<CountVector, double> p;
  const double denom = static_cast<double>(t.f[j]);
  for (std::size_t r = 0; r < tracked.size(); ++r)
    if (tracked[r].type == j) p[tracked[r].counts] = static_cast<double>(t.rule_counts[r]) / denom;
  return p;
}

double lambda_schedule(std::uint64_t N, double beta) {
  if (!(beta > 0.0 && beta < 0.5)) throw Error(ErrorCode::InvalidArgument, "beta must lie in (0, 1/2)");
  if (N == 0) throw Error(ErrorCode::InvalidArgument, "N must be positive");
  return 1.0 - std::pow(static_cast<double>(N), -beta);
}

RightEigenEstimate estimate_u_from_batch(const BatchAccumulator& batch, std::uint64_t N, double beta) {
  if (batch.record_level() != RecordLevel::Full) {
    throw Error(ErrorCode::InvalidArgument, "right-eigenvector estimate needs depth histograms");
  }
  const auto records = batch.records();
  if (N == 0 || N > records.size()) {
    throw Error(ErrorCode::InvalidArgument, "N=" + std::to_string(N) + " exceeds the " +
                                                std::to_string(records.size()) + " stored trees");
  }
  RightEigenEstimate out;
  out.N = N;
  // lambda_N = 1 - N^{-beta}. N = 1 gives lambda = 0, outside (0,1); the
  // estimate is then the mean root count, still well defined.
  out.lambda = (N == 1) ? 0.0 : lambda_schedule(N, beta);
  double sum = 0.0;
  for (std::uint64_t i = 0; i < N; ++i) {
    const auto& r = records[i];
    if (r.censored) {
      ++out.censored;
      continue;
    }
    if (r.depth_histogram.empty()) {
      throw Error(ErrorCode::InvalidArgument, "tree " + std::to_string(r.index) + " has no depth histogram");
    }
    sum += discounted_size(r.depth_histogram, out.lambda);
    ++out.used;
  }
  if (out.used == 0) throw Error(ErrorCode::EmptySample, "every tree was censored");
  out.u_hat = (1.0 - out.lambda) * sum / static_cast<double>(out.used);
  return out;
}

RightEigenEstimate estimate_u(const ProcessSpec& spec, SamplerConfig config, std::uint64_t N, double beta,
                              unsigned workers) {
  lambda_schedule(std::max<std::uint64_t>(N, 2), beta);
  config.keep_depth_histogram = true;
  const auto batch = sample_batch(spec, config, N, {RecordLevel::Full, workers, 0});
  return estimate_u_from_batch(batch, N, beta);
}

AdditiveSum additive_sum(const BatchAccumulator& batch, const ProcessSpec& spec, const EigenData& eigen,
                         const AdditiveFunction& g) {
  AdditiveSum out;
  out.c_g = g.mean_under_q(spec, eigen.v);
  if (std::abs(out.c_g) <= 1e-14) {
    throw Error(ErrorCode::ZeroCg, "C_g vanishes; the N^-2 scaling of the additive sum is degenerate");
  }
  out.N = batch.num_trees();
  if (out.N == 0) throw Error(ErrorCode::EmptySample, "empty batch");
  const double n = static_cast<double>(out.N);
  out.scaled_sum = batch.total_g() / (n * n);
  return out;
}

EstimateReport build_estimate_report(const BatchAccumulator& batch, std::span<const TrackedRule> tracked,
                                     std::optional<RightEigenEstimate> u_hat, std::size_t u_type) {
  EstimateReport rep;
  rep.v_hat = estimate_v(batch);
  rep.N = batch.num_trees();
  rep.censored_count = batch.censored_count();
  rep.total_size = batch.totals().size;
  rep.type_totals = batch.totals().f;
  rep.p_hat.resize(batch.num_types());
  for (std::size_t j = 0; j < batch.num_types(); ++j) {
    if (batch.totals().f[j] > 0) rep.p_hat[j] = estimate_offspring(batch, tracked, j);
  }
  rep.u_hat = u_hat;
  rep.u_type = u_type;
  return rep;
}

std::vector<EstimateRow> EstimateReport::rows(const ProcessSpec* spec, const EigenData* eigen) const {
  std::vector<EstimateRow> out;
  for (Eigen::Index s = 0; s < v_hat.size(); ++s) {
    EstimateRow row{"v_" + std::to_string(s + 1), v_hat[s], std::nullopt};
    if (eigen) row.truth = eigen->v[s];
    out.push_back(std::move(row));
  }
  for (std::size_t j = 0; j < p_hat.size(); ++j) {
    for (const auto& [n, p] : p_hat[j]) {
      EstimateRow row{"p_" + std::to_string(j + 1) + counts_label(n), p, std::nullopt};
      if (spec) {
        if (auto idx = spec->find_rule(j, n)) row.truth = spec->rules(j)[*idx].prob;
      }
      out.push_back(std::move(row));
    }
  }
  if (u_hat) {
    EstimateRow row{"u_" + std::to_string(u_type + 1), u_hat->u_hat, std::nullopt};
    if (eigen) row.truth = eigen->u[static_cast<Eigen::Index>(u_type)];
    out.push_back(std::move(row));
  }
  return out;
}

}  // namespace gwlimits
