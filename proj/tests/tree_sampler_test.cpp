#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "gwlimits/alias_table.hpp"
#include "gwlimits/tree_sampler.hpp"
#include "support/processes.hpp"

using namespace gwlimits;
using gwtest::e1;
using gwtest::e2;
using gwtest::e4;

namespace {

// P_k(|tree| = s) for s < smax by convolution over children, no sampling.
std::vector<std::vector<double>> exact_size_law(const ProcessSpec& spec, std::size_t smax) {
  const std::size_t V = spec.num_types();
  std::vector<std::vector<double>> P(V, std::vector<double>(smax, 0.0));
  for (std::size_t s = 1; s < smax; ++s) {
    for (std::size_t k = 0; k < V; ++k) {
      double total = 0.0;
      for (const auto& rule : spec.rules(k)) {
        // law of the summed subtree sizes of the children, truncated below s
        std::vector<double> conv(s, 0.0);
        conv[0] = 1.0;
        for (std::size_t t = 0; t < V; ++t) {
          for (std::uint32_t c = 0; c < rule.counts[t]; ++c) {
            std::vector<double> next(s, 0.0);
            for (std::size_t a = 0; a < s; ++a)
              for (std::size_t b = 1; a + b < s; ++b) next[a + b] += conv[a] * P[t][b];
            conv = std::move(next);
          }
        }
        total += rule.prob * conv[s - 1];
      }
      P[k][s] = total;
    }
  }
  return P;
}

}  // namespace

TEST_SUITE("tree_sampler") {

TEST_CASE("forced single-node and binary trees") {
  SamplerConfig cfg;
  cfg.lambdas = {0.5};
  const TreeSampler s1(e1(), cfg);
  const CountVector dead{0}, two{2};
  auto st = s1.sample_forced(std::vector<CountVector>{dead});
  CHECK(st.size == 1);
  CHECK(st.f == std::vector<std::uint64_t>{1});
  CHECK(st.s_lambda[0] == 1.0);

  st = s1.sample_forced(std::vector<CountVector>{two, dead, dead});
  CHECK(st.size == 3);
  CHECK(st.s_lambda[0] == 1.0 + 2 * 0.5);

  CHECK_THROWS_AS(s1.sample_forced(std::vector<CountVector>{two, dead}), Error);
  CHECK_THROWS_AS(s1.sample_forced(std::vector<CountVector>{dead, dead}), Error);
  CHECK_THROWS_AS(s1.sample_forced(std::vector<CountVector>{CountVector{1}}), Error);
}

TEST_CASE("forced two-type tree") {
  SamplerConfig cfg;
  cfg.lambdas = {0.3};
  cfg.tracked_rules = all_rules(e4());
  const TreeSampler s(e4(), cfg);
  const auto st = s.sample_forced(std::vector<CountVector>{{0, 1}, {0, 0}});
  CHECK(st.f == std::vector<std::uint64_t>{1, 1});
  CHECK(st.s_lambda[0] == doctest::Approx(1.3));
  for (std::size_t r = 0; r < cfg.tracked_rules.size(); ++r) {
    const auto& t = cfg.tracked_rules[r];
    const bool used = (t.type == 0 && t.counts == CountVector{0, 1}) || (t.type == 1 && t.counts == CountVector{0, 0});
    CHECK(st.rule_counts[r] == (used ? 1u : 0u));
  }
}

TEST_CASE("sampling is a pure function of (seed, index)") {
  SamplerConfig cfg;
  cfg.master_seed = 99;
  cfg.lambdas = {0.9};
  const auto a = sample_tree(e4(), cfg, 17);
  const auto b = sample_tree(e4(), cfg, 17);
  CHECK(a.f == b.f);
  CHECK(a.s_lambda == b.s_lambda);
  cfg.master_seed = 100;
  std::size_t differing = 0;
  for (std::uint64_t i = 0; i < 50; ++i) differing += sample_tree(e4(), cfg, i).size != a.size;
  CHECK(differing > 0);
}

TEST_CASE("per-tree invariants, censored trees included") {
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    const auto spec = seed <= 3 ? gwtest::random_critical_spec(seed) : e4();
    SamplerConfig cfg;
    cfg.master_seed = seed;
    cfg.node_cap = 500;
    cfg.lambdas = {0.2, 0.9};
    cfg.tracked_rules = all_rules(spec);
    const TreeSampler sampler(spec, cfg);
    for (std::uint64_t i = 0; i < 400; ++i) {
      const auto st = sampler.sample(i);
      std::uint64_t total = 0;
      for (auto f : st.f) total += f;
      CHECK(total == st.size);
      CHECK(st.size <= cfg.node_cap);
      std::vector<std::uint64_t> per_type(spec.num_types(), 0);
      for (std::size_t r = 0; r < cfg.tracked_rules.size(); ++r) per_type[cfg.tracked_rules[r].type] += st.rule_counts[r];
      if (!st.censored) CHECK(per_type == st.f);
      for (double s : st.s_lambda) {
        CHECK(s >= 1.0);
        CHECK(s <= static_cast<double>(st.size) + 1e-9);
      }
    }
  }
}

TEST_CASE("censoring and abort") {
  SamplerConfig cfg;
  cfg.node_cap = 5;
  cfg.master_seed = 3;
  const auto batch = sample_batch(e1(), cfg, 2000);
  CHECK(batch.censored_count() > 0);
  for (const auto& r : batch.records()) CHECK(r.size <= 5);
  cfg.cap_policy = CapPolicy::Abort;
  CHECK_THROWS_AS(sample_batch(e1(), cfg, 2000), Error);

  SamplerConfig wide;
  wide.node_cap = 1'000'000'000'000ULL;
  wide.master_seed = 4;
  CHECK(sample_batch(e1(), wide, 200).censored_count() == 0);
}

TEST_CASE("batches are identical for any worker count and partition") {
  SamplerConfig cfg;
  cfg.master_seed = 5;
  cfg.lambdas = {0.95};
  cfg.tracked_rules = all_rules(e4());
  cfg.keep_depth_histogram = true;
  const auto one = sample_batch(e4(), cfg, 5000, {RecordLevel::Full, 1, 0});
  for (unsigned w : {4u, 8u}) CHECK(sample_batch(e4(), cfg, 5000, {RecordLevel::Full, w, 0}) == one);

  auto left = sample_batch(e4(), cfg, 1234, {RecordLevel::Full, 2, 0});
  const auto right = sample_batch(e4(), cfg, 5000 - 1234, {RecordLevel::Full, 3, 1234});
  auto swapped = right;
  swapped.merge(left);
  left.merge(right);
  CHECK(left == one);
  CHECK(swapped == one);
  CHECK_THROWS_AS(left.merge(right), Error);

  const auto single = sample_batch(e4(), cfg, 1, {RecordLevel::Full, 1, 0});
  const auto st = sample_tree(e4(), cfg, 0);
  CHECK(single.totals().f == st.f);
  CHECK(single.records()[0].s_lambda == st.s_lambda);
}

TEST_CASE("small-tree size law matches exact enumeration") {
  SUBCASE("E1") {
    // P(|tree| = 1) over 20 fixed seeds at N = 1e5: the z-scores should look
    // standard normal. A single seed fails the 3 SE band about 0.3% of the time.
    const std::uint64_t N = 100000;
    const double se = std::sqrt(0.25 / static_cast<double>(N));
    double sum_z2 = 0.0;
    int within = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      SamplerConfig cfg;
      cfg.master_seed = seed;
      const auto batch = sample_batch(e1(), cfg, N);
      std::map<std::uint64_t, double> freq;
      for (const auto& r : batch.records()) freq[r.size] += 1.0 / static_cast<double>(N);
      const double z = (freq[1] - 0.5) / se;
      sum_z2 += z * z;
      within += std::abs(z) <= 3.0;
      CHECK(std::abs(freq[3] - 0.125) < 4 * std::sqrt(0.125 * 0.875 / static_cast<double>(N)));
      CHECK(freq[2] == 0.0);
      if (seed == 1) {
        std::vector<std::uint64_t> sizes;
        for (const auto& r : batch.records())
          if (r.index < 10000) sizes.push_back(r.size);
        std::nth_element(sizes.begin(), sizes.begin() + 5000, sizes.end());
        CHECK(sizes[5000] >= 1);
        CHECK(sizes[5000] <= 3);
      }
    }
    CHECK(within >= 19);
    CHECK(sum_z2 / 20.0 < 2.0);
  }
  SUBCASE("E4 and a random process") {
    for (const auto& spec : {e4(), gwtest::random_critical_spec(7, 3)}) {
      const auto law = exact_size_law(spec, 9);
      SamplerConfig cfg;
      cfg.master_seed = 12;
      cfg.root_type = spec.num_types() - 1;
      const std::uint64_t N = 100000;
      const auto batch = sample_batch(spec, cfg, N);
      std::vector<double> freq(9, 0.0);
      for (const auto& r : batch.records())
        if (r.size < 9) freq[r.size] += 1.0 / static_cast<double>(N);
      for (std::size_t s = 1; s < 9; ++s) {
        const double p = law[cfg.root_type][s];
        CAPTURE(s);
        CHECK(std::abs(freq[s] - p) <= 4 * std::sqrt(p * (1 - p) / static_cast<double>(N)) + 1e-12);
      }
    }
  }
}

TEST_CASE("enumeration oracle reproduces the Catalan probabilities of E1") {
  const auto law = exact_size_law(e1(), 8);
  CHECK(law[0][1] == doctest::Approx(0.5));
  CHECK(law[0][3] == doctest::Approx(0.125));
  CHECK(law[0][5] == doctest::Approx(2.0 / 32.0));
  CHECK(law[0][7] == doctest::Approx(5.0 / 128.0));
}

TEST_CASE("alias table and multinomial draws") {
  const std::vector<double> w{0.1, 0.2, 0.3, 0.4};
  const AliasTable table(w);
  Xoshiro256 rng(1);
  std::vector<double> freq(4, 0.0);
  const int n = 200000;
  for (int i = 0; i < n; ++i) freq[table.sample(rng)] += 1.0 / n;
  for (std::size_t i = 0; i < 4; ++i) CHECK(std::abs(freq[i] - w[i]) < 4 * std::sqrt(w[i] * (1 - w[i]) / n));

  for (std::uint64_t trials : std::vector<std::uint64_t>{7, kAliasTrialLimit + 1, 1000000}) {
    std::vector<std::uint64_t> counts(4, 0);
    std::vector<double> mean(4, 0.0);
    const int reps = trials > 1000 ? 20 : 5000;
    for (int r = 0; r < reps; ++r) {
      sample_multinomial(trials, w, table, rng, counts);
      std::uint64_t total = 0;
      for (std::size_t i = 0; i < 4; ++i) {
        total += counts[i];
        mean[i] += static_cast<double>(counts[i]) / reps;
      }
      CHECK(total == trials);
    }
    for (std::size_t i = 0; i < 4; ++i) {
      const double sd = std::sqrt(static_cast<double>(trials) * w[i] * (1 - w[i]) / reps);
      CHECK(std::abs(mean[i] - static_cast<double>(trials) * w[i]) < 5 * sd);
    }
  }
}

TEST_CASE("config errors") {
  SamplerConfig cfg;
  cfg.root_type = 3;
  CHECK_THROWS_AS(TreeSampler(e2(), cfg), Error);
  cfg.root_type = 0;
  cfg.lambdas = {1.0};
  CHECK_THROWS_AS(TreeSampler(e2(), cfg), Error);
  cfg.lambdas = {};
  cfg.tracked_rules = {{0, {2, 2}}};
  CHECK_THROWS_AS(TreeSampler(e2(), cfg), Error);
}

}  // TEST_SUITE
