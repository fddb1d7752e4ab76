#include "gwlimits/verification.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "gwlimits/errors.hpp"
#include "gwlimits/estimators.hpp"
#include "gwlimits/parallel.hpp"
#include "gwlimits/rng.hpp"

namespace gwlimits {

std::complex<double> empirical_cf(std::span<const double> samples, double t) {
  if (samples.empty()) throw Error(ErrorCode::EmptySample, "empirical characteristic function of an empty sample");
  double re = 0.0, im = 0.0;
  for (double x : samples) {
    re += std::cos(t * x);
    im += std::sin(t * x);
  }
  const auto n = static_cast<double>(samples.size());
  return {re / n, im / n};
}

std::complex<double> empirical_joint_cf(std::span<const JointSample> samples, const Eigen::VectorXd& c, double K) {
  if (samples.empty()) throw Error(ErrorCode::EmptySample, "empirical characteristic function of an empty sample");
  double re = 0.0, im = 0.0;
  for (const auto& s : samples) {
    if (s.z.size() != c.size()) throw Error(ErrorCode::InvalidArgument, "direction has the wrong dimension");
    const double arg = c.dot(s.z) + K * s.w;
    re += std::cos(arg);
    im += std::sin(arg);
  }
  const auto n = static_cast<double>(samples.size());
  return {re / n, im / n};
}

double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf) {
  if (samples.empty()) throw Error(ErrorCode::EmptySample, "KS statistic of an empty sample");
  std::sort(samples.begin(), samples.end());
  const auto n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double F = cdf(samples[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - F, F - static_cast<double>(i) / n});
  }
  return d;
}

std::vector<double> default_t_grid() {
  std::vector<double> grid;
  for (double t : {0.1, 0.2, 0.5, 1.0, 2.0, 5.0}) {
    grid.push_back(-t);
    grid.push_back(t);
  }
  return grid;
}

namespace {

constexpr double kKCycle[] = {-1.0, -0.3, 0.3, 1.0};

double standard_normal(Xoshiro256& rng) {
  double u1 = rng.uniform();
  while (u1 <= 0.0) u1 = rng.uniform();
  const double u2 = rng.uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace

std::vector<DirectionPoint> default_direction_grid(std::size_t dim, std::size_t count, std::uint64_t seed,
                                                   const Eigen::VectorXd* avoid) {
  if (dim == 0) throw Error(ErrorCode::InvalidArgument, "direction dimension must be positive");
  if (avoid && static_cast<std::size_t>(avoid->size()) != dim)
    throw Error(ErrorCode::InvalidArgument, "avoided vector has the wrong dimension");
  Xoshiro256 rng(seed);
  std::vector<DirectionPoint> grid;
  grid.reserve(count);
  while (grid.size() < count) {
    Eigen::VectorXd c(static_cast<Eigen::Index>(dim));
    for (auto& x : c) x = standard_normal(rng);
    const double norm = c.norm();
    if (norm < 1e-12) continue;
    c /= norm;
    if (avoid && std::abs(c.dot(*avoid)) < 1e-6) continue;
    grid.push_back({std::move(c), kKCycle[grid.size() % 4]});
  }
  return grid;
}

std::vector<DirectionPoint> fixed_direction_grid(const Eigen::VectorXd& c) {
  std::vector<DirectionPoint> grid;
  for (double K : kKCycle) grid.push_back({c, K});
  return grid;
}

namespace {

struct ReplicateTotals {
  std::uint64_t used = 0;
  std::uint64_t censored = 0;
  std::uint64_t size = 0;
  std::vector<std::uint64_t> f;
  std::vector<std::uint64_t> rule_counts;
};

// Replicate r uses master seed stream_key(master, r) and tree indices 0..N-1.
std::vector<ReplicateTotals> run_replicates(const ProcessSpec& spec, std::size_t k, std::uint64_t N,
                                            std::uint64_t replicates, std::vector<TrackedRule> tracked,
                                            const VerifyOptions& options) {
  if (N == 0 || replicates == 0) throw Error(ErrorCode::InvalidArgument, "N and the replicate count must be positive");
  std::vector<ReplicateTotals> out(replicates);
  parallel_for(replicates, options.workers, [&](std::size_t r) {
    SamplerConfig cfg;
    cfg.root_type = k;
    cfg.node_cap = options.node_cap;
    cfg.tracked_rules = tracked;
    cfg.master_seed = stream_key(options.master_seed, r);
    const TreeSampler sampler(spec, std::move(cfg));
    const auto batch = sample_batch(sampler, N, {RecordLevel::None, 1, 0});
    const auto& t = batch.uncensored_totals();
    out[r] = {t.trees, batch.censored_count(), t.size, t.f, t.rule_counts};
  });
  return out;
}

void check_censoring(VerificationReport& report, const VerifyOptions& options) {
  report.censored_fraction =
      report.trees == 0 ? 0.0 : static_cast<double>(report.censored) / static_cast<double>(report.trees);
  if (report.censored_fraction > options.max_censored_fraction) {
    std::ostringstream msg;
    msg << "censored fraction " << report.censored_fraction << " exceeds " << options.max_censored_fraction
        << "; raise node_cap";
    throw Error(ErrorCode::CensoringExceeded, msg.str());
  }
  if (report.censored_fraction > options.warn_censored_fraction) {
    std::ostringstream msg;
    msg << "censored fraction " << report.censored_fraction << " exceeds " << options.warn_censored_fraction;
    report.warnings.push_back(msg.str());
  }
}

std::uint64_t sum_censored(const std::vector<ReplicateTotals>& reps) {
  std::uint64_t c = 0;
  for (const auto& r : reps) c += r.censored;
  return c;
}

std::vector<double> to_double(std::span<const std::uint64_t> xs) {
  return {xs.begin(), xs.end()};
}

void check_root(const ProcessSpec& spec, std::size_t k) {
  if (k >= spec.num_types()) throw Error(ErrorCode::InvalidArgument, "root type out of range");
}

VerificationReport make_report(const char* theorem, std::uint64_t N, std::uint64_t replicates,
                               const VerifyOptions& options) {
  VerificationReport r;
  r.experiment_id = options.experiment_id;
  r.theorem = theorem;
  r.N = N;
  r.replicates = replicates;
  r.master_seed = options.master_seed;
  r.trees = N * replicates;
  r.cf_tolerance = options.cf_tolerance;
  r.ks_tolerance = options.ks_tolerance;
  return r;
}

void summarize(VerificationReport& r) {
  double sup = 0.0, sum = 0.0;
  for (const auto& p : r.points) {
    sup = std::max(sup, p.distance);
    sum += p.distance;
  }
  r.sup_cf_distance = sup;
  r.avg_cf_distance = r.points.empty() ? 0.0 : sum / static_cast<double>(r.points.size());
  r.passed = sup <= r.cf_tolerance && (!r.ks_tolerance || !r.ks_statistic || *r.ks_statistic <= *r.ks_tolerance);
}

VerificationReport joint_report(const char* theorem, const LimitTarget& target, std::span<const JointSample> samples,
                                std::span<const DirectionPoint> grid, std::uint64_t N, std::uint64_t replicates,
                                std::uint64_t censored, const VerifyOptions& options) {
  auto report = make_report(theorem, N, replicates, options);
  report.censored = censored;
  check_censoring(report, options);
  std::ostringstream desc;
  desc << grid.size() << " (c, K) points";
  report.grid_description = desc.str();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    GridPointResult p;
    p.t_or_K = grid[i].K;
    p.direction_id = i;
    p.theory = joint_cf(target, grid[i].c, grid[i].K);
    p.empirical = empirical_joint_cf(samples, grid[i].c, grid[i].K);
    p.distance = std::abs(p.theory - p.empirical);
    report.points.push_back(p);
  }
  report.ks_tolerance.reset();
  summarize(report);
  return report;
}

}  // namespace

std::vector<double> theorem1_replicates(const ProcessSpec& spec, std::size_t k, std::uint64_t N,
                                        std::uint64_t replicates, const Eigen::VectorXd& c,
                                        const VerifyOptions& options, std::uint64_t* censored) {
  check_root(spec, k);
  if (static_cast<std::size_t>(c.size()) != spec.num_types())
    throw Error(ErrorCode::InvalidArgument, "c has the wrong dimension");
  const auto reps = run_replicates(spec, k, N, replicates, {}, options);
  if (censored) *censored = sum_censored(reps);
  std::vector<double> out;
  out.reserve(reps.size());
  for (const auto& r : reps) {
    if (r.used == 0) throw Error(ErrorCode::EmptySample, "every tree of a replicate was censored");
    const auto n = static_cast<double>(r.used);
    double s = 0.0;
    for (std::size_t t = 0; t < r.f.size(); ++t) s += c[static_cast<Eigen::Index>(t)] * static_cast<double>(r.f[t]);
    out.push_back(s / (n * n));
  }
  return out;
}

std::vector<JointSample> theorem2_replicates(const ProcessSpec& spec, const EigenData& eigen, std::size_t k,
                                             std::uint64_t N, std::uint64_t replicates, const VerifyOptions& options,
                                             std::uint64_t* censored) {
  check_root(spec, k);
  const auto reps = run_replicates(spec, k, N, replicates, {}, options);
  if (censored) *censored = sum_censored(reps);
  std::vector<JointSample> out;
  out.reserve(reps.size());
  for (const auto& r : reps) {
    if (r.used == 0) throw Error(ErrorCode::EmptySample, "every tree of a replicate was censored");
    const auto n = static_cast<double>(r.used);
    const auto size = static_cast<double>(r.size);
    const Eigen::VectorXd f = Eigen::Map<const Eigen::VectorXd>(to_double(r.f).data(), eigen.v.size());
    out.push_back({(f - eigen.v * size) / n, size / (n * n)});
  }
  return out;
}

std::vector<JointSample> theorem3_replicates(const ProcessSpec& spec, std::size_t k, std::size_t j,
                                             std::span<const CountVector> rules, std::uint64_t N,
                                             std::uint64_t replicates, const VerifyOptions& options,
                                             std::uint64_t* censored) {
  check_root(spec, k);
  if (j >= spec.num_types()) throw Error(ErrorCode::InvalidArgument, "rule type out of range");
  if (rules.empty()) throw Error(ErrorCode::InvalidArgument, "no rules selected");
  std::vector<TrackedRule> tracked;
  std::vector<double> q;
  for (const auto& n : rules) {
    const auto idx = spec.find_rule(j, n);
    if (!idx) throw Error(ErrorCode::UnknownRule, "selected rule is not in the support of its type");
    tracked.push_back({j, n});
    q.push_back(spec.rules(j)[*idx].prob);
  }
  const auto reps = run_replicates(spec, k, N, replicates, tracked, options);
  if (censored) *censored = sum_censored(reps);
  std::vector<JointSample> out;
  out.reserve(reps.size());
  for (const auto& r : reps) {
    if (r.used == 0) throw Error(ErrorCode::EmptySample, "every tree of a replicate was censored");
    const auto n = static_cast<double>(r.used);
    const auto fj = static_cast<double>(r.f[j]);
    Eigen::VectorXd z(static_cast<Eigen::Index>(rules.size()));
    for (std::size_t m = 0; m < rules.size(); ++m)
      z[static_cast<Eigen::Index>(m)] = (static_cast<double>(r.rule_counts[m]) - q[m] * fj) / n;
    out.push_back({std::move(z), fj / (n * n)});
  }
  return out;
}

VerificationReport verify_theorem1(const ProcessSpec& spec, const EigenData& eigen, std::size_t k, std::uint64_t N,
                                   std::uint64_t replicates, std::span<const double> t_grid,
                                   const Eigen::VectorXd& c, const VerifyOptions& options) {
  const auto target = LimitTarget::total_progeny(spec, eigen, k, c);
  auto report = make_report("thm1", N, replicates, options);
  const auto samples = theorem1_replicates(spec, k, N, replicates, c, options, &report.censored);
  check_censoring(report, options);
  std::ostringstream desc;
  desc << t_grid.size() << " t points";
  report.grid_description = desc.str();
  for (double t : t_grid) {
    GridPointResult p;
    p.t_or_K = t;
    p.theory = target.cf(t);
    p.empirical = empirical_cf(samples, t);
    p.distance = std::abs(p.theory - p.empirical);
    report.points.push_back(p);
  }
  if (target.scale() > 0.0) report.ks_statistic = ks_statistic(samples, [&](double x) { return target.cdf(x); });
  summarize(report);
  return report;
}

VerificationReport verify_theorem2(const ProcessSpec& spec, const EigenData& eigen, std::size_t k, std::uint64_t N,
                                   std::uint64_t replicates, std::span<const DirectionPoint> grid,
                                   const VerifyOptions& options) {
  const auto target = LimitTarget::type_frequencies(spec, eigen, k);
  std::uint64_t censored = 0;
  const auto samples = theorem2_replicates(spec, eigen, k, N, replicates, options, &censored);
  return joint_report("thm2", target, samples, grid, N, replicates, censored, options);
}

VerificationReport verify_theorem3(const ProcessSpec& spec, const EigenData& eigen, std::size_t k, std::size_t j,
                                   std::span<const CountVector> rules, std::uint64_t N, std::uint64_t replicates,
                                   std::span<const DirectionPoint> grid, const VerifyOptions& options) {
  const auto target =
      LimitTarget::rule_frequencies(spec, eigen, k, j, std::vector<CountVector>(rules.begin(), rules.end()));
  std::uint64_t censored = 0;
  const auto samples = theorem3_replicates(spec, k, j, rules, N, replicates, options, &censored);
  return joint_report("thm3", target, samples, grid, N, replicates, censored, options);
}

VerificationReport verify_theorem4(const ProcessSpec& spec, const EigenData& eigen, std::size_t k,
                                   std::span<const std::uint64_t> N_grid, double beta, const Theorem4Options& t4,
                                   const VerifyOptions& options) {
  check_root(spec, k);
  if (N_grid.empty()) throw Error(ErrorCode::InvalidArgument, "empty N grid");
  if (!std::is_sorted(N_grid.begin(), N_grid.end()) || N_grid.front() == 0)
    throw Error(ErrorCode::InvalidArgument, "N grid must be positive and increasing");
  if (t4.chains == 0) throw Error(ErrorCode::InvalidArgument, "at least one chain is required");
  const std::uint64_t n_max = N_grid.back();

  auto report = make_report("thm4", n_max, t4.chains, options);
  report.ks_tolerance.reset();
  report.cf_tolerance = t4.tolerance;
  std::ostringstream desc;
  desc << N_grid.size() << " N values, beta=" << beta;
  report.grid_description = desc.str();

  // estimates[chain][grid point]
  std::vector<std::vector<double>> estimates(t4.chains);
  std::vector<std::uint64_t> censored(t4.chains, 0);
  parallel_for(t4.chains, options.workers, [&](std::size_t ch) {
    SamplerConfig cfg;
    cfg.root_type = k;
    cfg.node_cap = options.node_cap;
    cfg.master_seed = stream_key(options.master_seed, ch);
    cfg.keep_depth_histogram = true;
    const auto batch = sample_batch(TreeSampler(spec, std::move(cfg)), n_max, {RecordLevel::Full, 1, 0});
    censored[ch] = batch.censored_count();
    for (std::uint64_t N : N_grid) estimates[ch].push_back(estimate_u_from_batch(batch, N, beta).u_hat);
  });
  for (auto c : censored) report.censored += c;
  report.trees = n_max * t4.chains;
  check_censoring(report, options);

  const double uk = eigen.u[static_cast<Eigen::Index>(k)];
  bool exact = true;
  for (std::size_t g = 0; g < N_grid.size(); ++g) {
    ConvergenceRow row;
    row.N = N_grid[g];
    row.lambda = N_grid[g] == 1 ? 0.0 : lambda_schedule(N_grid[g], beta);
    std::vector<double> errors;
    for (std::size_t ch = 0; ch < t4.chains; ++ch) {
      row.chain_estimates.push_back(estimates[ch][g]);
      errors.push_back(std::abs(estimates[ch][g] - uk));
    }
    std::sort(errors.begin(), errors.end());
    const std::size_t m = errors.size();
    row.median_abs_error = m % 2 ? errors[m / 2] : 0.5 * (errors[m / 2 - 1] + errors[m / 2]);
    row.expected_estimate = (1.0 - row.lambda) * s_lambda(eigen, row.lambda)[static_cast<Eigen::Index>(k)];
    row.identity_error = std::abs(row.expected_estimate - uk);
    if (row.identity_error > t4.identity_tolerance) exact = false;
    report.convergence.push_back(std::move(row));
  }
  report.exact_identity = exact;

  bool decreasing = true;
  for (std::size_t g = 1; g < report.convergence.size(); ++g)
    if (report.convergence[g].median_abs_error >= report.convergence[g - 1].median_abs_error) decreasing = false;
  const double final_error = report.convergence.back().median_abs_error;
  report.sup_cf_distance = final_error;
  report.avg_cf_distance = final_error;
  if (!decreasing) report.warnings.push_back("median error is not strictly decreasing in N");
  report.passed = decreasing && final_error <= t4.tolerance;
  return report;
}

}  // namespace gwlimits
