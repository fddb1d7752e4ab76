#include "gwlimits/tree_sampler.hpp"

#include <algorithm>
#include <optional>
#include <ostream>

#include "gwlimits/output.hpp"
#include "gwlimits/parallel.hpp"

namespace gwlimits {

namespace {

constexpr std::uint64_t kChunkSize = 1024;

void add_into(std::vector<std::uint64_t>& acc, std::span<const std::uint64_t> x) {
  for (std::size_t i = 0; i < x.size(); ++i) acc[i] += x[i];
}

}  // namespace

AdditiveFunction AdditiveFunction::per_type_constant(const ProcessSpec& spec, std::span<const double> c) {
  if (c.size() != spec.num_types()) throw Error(ErrorCode::InvalidArgument, "constant table needs one value per type");
  AdditiveFunction g;
  for (std::size_t s = 0; s < spec.num_types(); ++s) g.values.emplace_back(spec.num_rules(s), c[s]);
  return g;
}

AdditiveFunction AdditiveFunction::terminals(const ProcessSpec& spec) {
  AdditiveFunction g;
  for (std::size_t s = 0; s < spec.num_types(); ++s) {
    auto& row = g.values.emplace_back();
    for (const auto& rule : spec.rules(s)) row.push_back(rule.total() == 0 ? 1.0 : 0.0);
  }
  return g;
}

AdditiveFunction AdditiveFunction::tree_size(const ProcessSpec& spec) {
  const std::vector<double> ones(spec.num_types(), 1.0);
  return per_type_constant(spec, ones);
}

double AdditiveFunction::mean_under_q(const ProcessSpec& spec, const Eigen::VectorXd& v) const {
  double cg = 0.0;
  for (std::size_t s = 0; s < spec.num_types(); ++s) {
    const auto rules = spec.rules(s);
    double inner = 0.0;
    for (std::size_t i = 0; i < rules.size(); ++i) inner += rules[i].prob * values.at(s).at(i);
    cg += v[static_cast<Eigen::Index>(s)] * inner;
  }
  return cg;
}

std::vector<TrackedRule> all_rules(const ProcessSpec& spec) {
  std::vector<TrackedRule> out;
  for (std::size_t s = 0; s < spec.num_types(); ++s)
    for (const auto& rule : spec.rules(s)) out.push_back({s, rule.counts});
  return out;
}

double discounted_size(std::span<const std::uint64_t> depth_histogram, double lambda) {
  double sum = 0.0;
  double power = 1.0;
  for (auto count : depth_histogram) {
    sum += power * static_cast<double>(count);
    power *= lambda;
  }
  return sum;
}

TreeSampler::TreeSampler(const ProcessSpec& spec, SamplerConfig config)
    : num_types_(spec.num_types()), config_(std::move(config)) {
  if (config_.root_type >= num_types_) {
    throw Error(ErrorCode::InvalidArgument, "root type " + std::to_string(config_.root_type + 1) + " outside 1.." +
                                                std::to_string(num_types_));
  }
  if (config_.node_cap == 0) throw Error(ErrorCode::InvalidArgument, "node_cap must be positive");
  for (double lambda : config_.lambdas) {
    if (!(lambda > 0.0 && lambda < 1.0)) {
      throw Error(ErrorCode::InvalidArgument, "lambda " + format_double(lambda) + " is not strictly inside (0,1)");
    }
  }
  if (config_.additive_g) {
    const auto& values = config_.additive_g->values;
    bool ok = values.size() == num_types_;
    for (std::size_t s = 0; ok && s < num_types_; ++s) ok = values[s].size() == spec.num_rules(s);
    if (!ok) throw Error(ErrorCode::InvalidArgument, "additive function table does not match the rule list");
  }

  std::vector<std::vector<std::ptrdiff_t>> slot_of(num_types_);
  for (std::size_t s = 0; s < num_types_; ++s) {
    TypeLaw law;
    const auto rules = spec.rules(s);
    slot_of[s].assign(rules.size(), -1);
    for (std::size_t i = 0; i < rules.size(); ++i) {
      if (rules[i].prob <= 0.0) continue;
      slot_of[s][i] = static_cast<std::ptrdiff_t>(num_slots_ + law.probs.size());
      law.probs.push_back(rules[i].prob);
      law.rule_index.push_back(i);
      law.counts.push_back(rules[i].counts);
      law.g.push_back(config_.additive_g ? config_.additive_g->values[s][i] : 0.0);
    }
    if (law.probs.empty()) {
      throw Error(ErrorCode::NotAProbability, "type " + std::to_string(s + 1) + " has no positive-probability rule");
    }
    law.table = AliasTable(law.probs);
    num_slots_ += law.probs.size();
    laws_.push_back(std::move(law));
  }
  for (const auto& tracked : config_.tracked_rules) {
    if (tracked.type >= num_types_) {
      throw Error(ErrorCode::UnknownRule, "tracked rule refers to type " + std::to_string(tracked.type + 1));
    }
    const auto idx = spec.find_rule(tracked.type, tracked.counts);
    if (!idx) throw Error(ErrorCode::UnknownRule, "type " + std::to_string(tracked.type + 1) + " has no such rule");
    tracked_slot_.push_back(slot_of[tracked.type][*idx]);
  }
}

template <class DrawRules>
TreeStats TreeSampler::grow(std::uint64_t tree_index, DrawRules&& draw) const {
  const std::size_t L = config_.lambdas.size();
  TreeStats st;
  st.f.assign(num_types_, 0);
  st.s_lambda.assign(L, 0.0);

  std::vector<std::uint64_t> current(num_types_, 0), next(num_types_, 0);
  std::vector<std::uint64_t> slot_counts(num_slots_, 0);
  std::vector<std::uint64_t> drawn;
  std::vector<double> power(L, 1.0);
  current[config_.root_type] = 1;
  double g_sum = 0.0;

  for (;;) {
    std::uint64_t generation = 0;
    for (auto c : current) generation += c;
    if (generation == 0) break;
    if (generation > config_.node_cap - st.size) {
      if (config_.cap_policy == CapPolicy::Abort) {
        throw Error(ErrorCode::CapExceeded, "tree " + std::to_string(tree_index) + " exceeds node cap " +
                                                std::to_string(config_.node_cap));
      }
      st.censored = true;
      break;
    }
    st.size += generation;
    add_into(st.f, current);
    if (config_.keep_depth_histogram) st.depth_histogram.push_back(generation);
    for (std::size_t l = 0; l < L; ++l) {
      st.s_lambda[l] += power[l] * static_cast<double>(generation);
      power[l] *= config_.lambdas[l];
    }

    std::fill(next.begin(), next.end(), 0);
    std::size_t base = 0;
    for (std::size_t s = 0; s < num_types_; ++s) {
      const auto& law = laws_[s];
      const std::uint64_t m = current[s];
      if (m != 0) {
        drawn.assign(law.probs.size(), 0);
        draw(s, m, law, std::span<std::uint64_t>(drawn));
        for (std::size_t i = 0; i < drawn.size(); ++i) {
          const std::uint64_t c = drawn[i];
          if (c == 0) continue;
          slot_counts[base + i] += c;
          const auto& n = law.counts[i];
          for (std::size_t t = 0; t < num_types_; ++t) next[t] += c * n[t];
          g_sum += static_cast<double>(c) * law.g[i];
        }
      }
      base += law.probs.size();
    }
    current.swap(next);
  }

  st.g_sum = g_sum;
  st.rule_counts.reserve(tracked_slot_.size());
  for (auto slot : tracked_slot_) st.rule_counts.push_back(slot < 0 ? 0 : slot_counts[static_cast<std::size_t>(slot)]);
  return st;
}

TreeStats TreeSampler::sample(std::uint64_t tree_index) const {
  auto rng = Xoshiro256::for_stream(config_.master_seed, tree_index);
  return grow(tree_index, [&](std::size_t, std::uint64_t m, const TypeLaw& law, std::span<std::uint64_t> out) {
    sample_multinomial(m, law.probs, law.table, rng, out);
  });
}

TreeStats TreeSampler::sample_forced(std::span<const CountVector> rule_sequence) const {
  std::size_t cursor = 0;
  auto stats = grow(0, [&](std::size_t s, std::uint64_t m, const TypeLaw& law, std::span<std::uint64_t> out) {
    for (std::uint64_t p = 0; p < m; ++p) {
      if (cursor >= rule_sequence.size()) {
        throw Error(ErrorCode::InvalidArgument, "forced rule sequence ran out after " + std::to_string(cursor) +
                                                    " particles");
      }
      const auto& want = rule_sequence[cursor++];
      const auto it = std::find(law.counts.begin(), law.counts.end(), want);
      if (it == law.counts.end()) {
        throw Error(ErrorCode::UnknownRule, "forced rule " + std::to_string(cursor - 1) + " is not a rule of type " +
                                                std::to_string(s + 1));
      }
      ++out[static_cast<std::size_t>(it - law.counts.begin())];
    }
  });
  if (cursor != rule_sequence.size() && !stats.censored) {
    throw Error(ErrorCode::InvalidArgument, "forced rule sequence has " +
                                                std::to_string(rule_sequence.size() - cursor) + " unused entries");
  }
  return stats;
}

TreeStats sample_tree(const ProcessSpec& spec, const SamplerConfig& config, std::uint64_t tree_index) {
  return TreeSampler(spec, config).sample(tree_index);
}

BatchAccumulator::BatchAccumulator(std::size_t num_types, std::size_t num_tracked, RecordLevel level) : level_(level) {
  for (auto* t : {&all_, &uncensored_}) {
    t->f.assign(num_types, 0);
    t->rule_counts.assign(num_tracked, 0);
  }
}

void BatchAccumulator::add(std::uint64_t tree_index, const TreeStats& stats) {
  auto accumulate = [&](BatchTotals& t) {
    ++t.trees;
    t.size += stats.size;
    add_into(t.f, stats.f);
    add_into(t.rule_counts, stats.rule_counts);
  };
  accumulate(all_);
  if (!stats.censored) accumulate(uncensored_);
  if (level_ == RecordLevel::None) return;

  TreeRecord rec;
  rec.index = tree_index;
  rec.size = stats.size;
  rec.censored = stats.censored;
  rec.s_lambda = stats.s_lambda;
  rec.g_sum = stats.g_sum;
  rec.rule_counts = stats.rule_counts;
  if (level_ == RecordLevel::Full) {
    rec.f = stats.f;
    rec.depth_histogram = stats.depth_histogram;
  }
  const auto pos = std::upper_bound(records_.begin(), records_.end(), tree_index,
                                    [](std::uint64_t i, const TreeRecord& r) { return i < r.index; });
  if (pos != records_.begin() && std::prev(pos)->index == tree_index) {
    throw Error(ErrorCode::InvalidArgument, "tree " + std::to_string(tree_index) + " added twice");
  }
  records_.insert(pos, std::move(rec));
}

void BatchAccumulator::merge(const BatchAccumulator& other) {
  if (other.level_ != level_ || other.all_.f.size() != all_.f.size() ||
      other.all_.rule_counts.size() != all_.rule_counts.size()) {
    throw Error(ErrorCode::InvalidArgument, "cannot merge accumulators with different layouts");
  }
  for (auto [mine, theirs] : {std::pair{&all_, &other.all_}, std::pair{&uncensored_, &other.uncensored_}}) {
    mine->trees += theirs->trees;
    mine->size += theirs->size;
    add_into(mine->f, theirs->f);
    add_into(mine->rule_counts, theirs->rule_counts);
  }
  if (other.records_.empty()) return;
  if (records_.empty() || records_.back().index < other.records_.front().index) {
    records_.insert(records_.end(), other.records_.begin(), other.records_.end());
    return;
  }
  std::vector<TreeRecord> merged;
  merged.reserve(records_.size() + other.records_.size());
  std::merge(records_.begin(), records_.end(), other.records_.begin(), other.records_.end(),
             std::back_inserter(merged), [](const TreeRecord& a, const TreeRecord& b) { return a.index < b.index; });
  for (std::size_t i = 1; i < merged.size(); ++i) {
    if (merged[i].index == merged[i - 1].index) {
      throw Error(ErrorCode::InvalidArgument, "merged accumulators share tree " + std::to_string(merged[i].index));
    }
  }
  records_ = std::move(merged);
}

std::vector<double> BatchAccumulator::total_s_lambda(bool include_censored) const {
  if (level_ == RecordLevel::None) throw Error(ErrorCode::InvalidArgument, "S totals need per-tree records");
  std::vector<double> total;
  for (const auto& r : records_) {
    if (r.censored && !include_censored) continue;
    if (total.empty()) total.assign(r.s_lambda.size(), 0.0);
    for (std::size_t l = 0; l < r.s_lambda.size(); ++l) total[l] += r.s_lambda[l];
  }
  return total;
}

double BatchAccumulator::total_g(bool include_censored) const {
  if (level_ == RecordLevel::None) throw Error(ErrorCode::InvalidArgument, "G totals need per-tree records");
  double total = 0.0;
  for (const auto& r : records_)
    if (include_censored || !r.censored) total += r.g_sum;
  return total;
}

namespace {

bool same_record(const TreeRecord& a, const TreeRecord& b) {
  return a.index == b.index && a.size == b.size && a.censored == b.censored && a.s_lambda == b.s_lambda &&
         a.g_sum == b.g_sum && a.rule_counts == b.rule_counts && a.f == b.f && a.depth_histogram == b.depth_histogram;
}

}  // namespace

bool BatchAccumulator::operator==(const BatchAccumulator& other) const {
  return level_ == other.level_ && all_ == other.all_ && uncensored_ == other.uncensored_ &&
         std::equal(records_.begin(), records_.end(), other.records_.begin(), other.records_.end(), same_record);
}

BatchAccumulator sample_batch(const TreeSampler& sampler, std::uint64_t N, const BatchOptions& options) {
  const std::size_t V = sampler.num_types();
  const std::size_t T = sampler.config().tracked_rules.size();
  const std::uint64_t chunks = (N + kChunkSize - 1) / kChunkSize;
  std::vector<std::optional<BatchAccumulator>> parts(chunks);
  parallel_for(chunks, options.workers, [&](std::size_t c) {
    BatchAccumulator part(V, T, options.records);
    const std::uint64_t begin = options.first_index + c * kChunkSize;
    const std::uint64_t end = options.first_index + std::min<std::uint64_t>(N, (c + 1) * kChunkSize);
    for (std::uint64_t i = begin; i < end; ++i) part.add(i, sampler.sample(i));
    parts[c] = std::move(part);
  });
  BatchAccumulator out(V, T, options.records);
  for (auto& part : parts) out.merge(*part);
  return out;
}

BatchAccumulator sample_batch(const ProcessSpec& spec, const SamplerConfig& config, std::uint64_t N,
                              const BatchOptions& options) {
  if (N == 0) throw Error(ErrorCode::InvalidArgument, "batch size must be at least 1");
  return sample_batch(TreeSampler(spec, config), N, options);
}

void write_tree_csv(std::ostream& out, const BatchAccumulator& batch, std::span<const double> lambdas) {
  if (batch.record_level() != RecordLevel::Full) {
    throw Error(ErrorCode::InvalidArgument, "per-tree CSV needs full records");
  }
  out << "tree_index,size";
  for (std::size_t s = 0; s < batch.num_types(); ++s) out << ",f_" << s + 1;
  out << ",censored";
  for (double l : lambdas) out << ",S_" << format_double(l);
  out << '\n';
  for (const auto& r : batch.records()) {
    out << r.index << ',' << r.size;
    for (auto c : r.f) out << ',' << c;
    out << ',' << (r.censored ? 1 : 0);
    for (double s : r.s_lambda) out << ',' << format_double(s);
    out << '\n';
  }
}

}  // namespace gwlimits
