#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "gwlimits/rng.hpp"

namespace gwlimits {

/// Walker/Vose alias table: O(n) build, O(1) draw.
class AliasTable {
 public:
  AliasTable() = default;
  explicit AliasTable(std::span<const double> weights);

  std::size_t size() const noexcept { return threshold_.size(); }

  std::size_t sample(Xoshiro256& rng) const noexcept {
    const double x = rng.uniform() * static_cast<double>(threshold_.size());
    const auto column = static_cast<std::size_t>(x);
    return (x - static_cast<double>(column)) < threshold_[column] ? column : alias_[column];
  }

 private:
  std::vector<double> threshold_;
  std::vector<std::uint32_t> alias_;
};

/// Draws counts ~ Multinomial(trials, probs). Small trial counts use the
/// alias table one particle at a time; larger ones use conditional binomials.
void sample_multinomial(std::uint64_t trials, std::span<const double> probs, const AliasTable& table,
                        Xoshiro256& rng, std::span<std::uint64_t> counts);

inline constexpr std::uint64_t kAliasTrialLimit = 48;

}  // namespace gwlimits
