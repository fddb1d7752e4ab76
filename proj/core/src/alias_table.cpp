#include "gwlimits/alias_table.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <stdexcept>

namespace gwlimits {

AliasTable::AliasTable(std::span<const double> weights) {
  const std::size_t n = weights.size();
  if (n == 0) throw std::invalid_argument("alias table needs at least one outcome");
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (!(total > 0.0)) throw std::invalid_argument("alias table weights must have positive sum");

  threshold_.assign(n, 0.0);
  alias_.assign(n, 0);
  std::vector<double> scaled(n);
  std::vector<std::uint32_t> small, large;
  for (std::size_t i = 0; i < n; ++i) {
    scaled[i] = weights[i] * static_cast<double>(n) / total;
    (scaled[i] < 1.0 ? small : large).push_back(static_cast<std::uint32_t>(i));
  }
  while (!small.empty() && !large.empty()) {
    const auto s = small.back();
    small.pop_back();
    const auto l = large.back();
    threshold_[s] = scaled[s];
    alias_[s] = l;
    scaled[l] = (scaled[l] + scaled[s]) - 1.0;
    if (scaled[l] < 1.0) {
      large.pop_back();
      small.push_back(l);
    }
  }
  for (auto i : large) {
    threshold_[i] = 1.0;
    alias_[i] = i;
  }
  // Leftovers from rounding.
  for (auto i : small) {
    threshold_[i] = 1.0;
    alias_[i] = i;
  }
}

void sample_multinomial(std::uint64_t trials, std::span<const double> probs, const AliasTable& table,
                        Xoshiro256& rng, std::span<std::uint64_t> counts) {
  std::fill(counts.begin(), counts.end(), 0);
  if (trials == 0) return;
  if (probs.size() == 1) {
    counts[0] = trials;
    return;
  }
  if (trials <= kAliasTrialLimit) {
    for (std::uint64_t t = 0; t < trials; ++t) ++counts[table.sample(rng)];
    return;
  }
  std::uint64_t remaining = trials;
  double mass = 1.0;
  const std::size_t last = probs.size() - 1;
  for (std::size_t i = 0; i < last && remaining > 0; ++i) {
    if (probs[i] <= 0.0) continue;
    const double p = std::clamp(probs[i] / mass, 0.0, 1.0);
    std::uint64_t x;
    if (p >= 1.0) {
      x = remaining;
    } else {
      std::binomial_distribution<std::uint64_t> binom(remaining, p);
      x = binom(rng);
    }
    counts[i] = x;
    remaining -= x;
    mass -= probs[i];
  }
  counts[last] += remaining;
}

}  // namespace gwlimits
