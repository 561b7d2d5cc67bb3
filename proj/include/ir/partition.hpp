#pragma once

// Partitioning of a measure-specific subset into folds.
//
// Four modes:
//   disjoint          shuffle, then deal round-robin; folds are disjoint,
//                     exhaustive and differ in size by at most one
//   partial           seeded sample of ceil(fraction * |m|) members (original
//                     order kept), then disjoint
//   with_replacement  n folds of exactly fold_size uniform draws each
//   incremental       members dealt one at a time as they arrive, each block
//                     of n arrivals following a seeded permutation of folds
//
// Fold count degrades to min(n, floor(|m| / min_fold_size)), never below one.
// In disjoint and incremental modes a single fold is the identity partition:
// the members, unshuffled.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ir/dataset.hpp"
#include "ir/error.hpp"
#include "ir/rng.hpp"

namespace ir {

enum class PartitionMode { disjoint, partial, with_replacement, incremental };

inline std::string_view to_string(PartitionMode m) {
  switch (m) {
    case PartitionMode::disjoint: return "disjoint";
    case PartitionMode::partial: return "partial";
    case PartitionMode::with_replacement: return "with_replacement";
    case PartitionMode::incremental: return "incremental";
  }
  return "?";
}

inline std::optional<PartitionMode> partition_mode_from_string(std::string_view s) {
  for (auto m : {PartitionMode::disjoint, PartitionMode::partial, PartitionMode::with_replacement,
                 PartitionMode::incremental})
    if (to_string(m) == s) return m;
  return std::nullopt;
}

inline constexpr std::size_t kDefaultFolds = 5;
inline constexpr std::size_t kMaxUiFolds = 10;
inline constexpr std::size_t kDefaultMinFoldSize = 25;

struct PartitionConfig {
  std::size_t n_requested = kDefaultFolds;
  std::size_t min_fold_size = kDefaultMinFoldSize;
  PartitionMode mode = PartitionMode::disjoint;
  double fraction = 1.0;       // partial only
  std::size_t fold_size = 0;   // with_replacement only
  std::uint64_t seed = 0;

  void validate() const {
    if (n_requested < 1) throw ValidationError("partition: n must be at least 1");
    if (min_fold_size < 1) throw ValidationError("partition: min_fold_size must be at least 1");
    if (mode == PartitionMode::partial && !(fraction > 0.0 && fraction <= 1.0))
      throw ValidationError("partition: partial fraction must lie in (0, 1]");
    if (mode == PartitionMode::with_replacement && fold_size < min_fold_size)
      throw ValidationError("partition: with_replacement fold_size (" + std::to_string(fold_size) +
                            ") must be at least min_fold_size (" + std::to_string(min_fold_size) +
                            ")");
  }

  bool operator==(const PartitionConfig&) const = default;
};

struct Fold {
  std::size_t index = 0;
  std::vector<RowId> members;  // a multiset in with_replacement mode
  bool operator==(const Fold&) const = default;
};

struct FoldSet {
  std::vector<Fold> folds;
  std::size_t n_effective = 0;
  PartitionConfig config;
  GroupKey source;

  bool degraded() const { return n_effective < config.n_requested; }
  bool operator==(const FoldSet&) const = default;
};

/// min(n, floor(size / min_fold_size)), clamped to at least one.
constexpr std::size_t effective_fold_count(std::size_t size, std::size_t n_requested,
                                           std::size_t min_fold_size) {
  return std::max<std::size_t>(1, std::min(n_requested, size / min_fold_size));
}

namespace detail {

inline FoldSet identity_folds(std::span<const RowId> members, const PartitionConfig& config) {
  FoldSet fs;
  fs.config = config;
  fs.n_effective = 1;
  fs.folds.push_back({0, {members.begin(), members.end()}});
  return fs;
}

inline FoldSet deal_disjoint(std::span<const RowId> members, const PartitionConfig& config) {
  const std::size_t n = effective_fold_count(members.size(), config.n_requested,
                                             config.min_fold_size);
  if (n == 1) return identity_folds(members, config);
  std::vector<RowId> order(members.begin(), members.end());
  CounterRng rng(config.seed, stream::kShuffle);
  shuffle(std::span<RowId>(order), rng);
  FoldSet fs;
  fs.config = config;
  fs.n_effective = n;
  fs.folds.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    fs.folds[j].index = j;
    fs.folds[j].members.reserve(order.size() / n + 1);
  }
  for (std::size_t k = 0; k < order.size(); ++k) fs.folds[k % n].members.push_back(order[k]);
  return fs;
}

}  // namespace detail

inline FoldSet partition_disjoint(std::span<const RowId> members, PartitionConfig config) {
  config.validate();
  return detail::deal_disjoint(members, config);
}

/// Size of the partial-mode sample: ceil(fraction * size), at least one when
/// size > 0. The small slack absorbs representation error in the product
/// (0.1 * 1000 must give 100, not 101).
inline std::size_t partial_sample_size(std::size_t size, double fraction) {
  if (size == 0) return 0;
  const double raw = fraction * static_cast<double>(size);
  auto k = static_cast<std::size_t>(std::ceil(raw - 1e-9 * std::max(1.0, raw)));
  return std::clamp<std::size_t>(k, 1, size);
}

inline FoldSet partition_partial(std::span<const RowId> members, PartitionConfig config) {
  config.validate();
  const std::size_t k = partial_sample_size(members.size(), config.fraction);
  std::vector<std::size_t> idx(members.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  CounterRng rng(config.seed, stream::kPartialSample);
  shuffle(std::span<std::size_t>(idx), rng);
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  std::vector<RowId> sample;
  sample.reserve(k);
  for (auto i : idx) sample.push_back(members[i]);
  return detail::deal_disjoint(sample, config);
}

inline FoldSet partition_with_replacement(std::span<const RowId> members,
                                          PartitionConfig config) {
  config.validate();
  if (members.empty()) throw ValidationError("partition with replacement: subset is empty");
  FoldSet fs;
  fs.config = config;
  fs.n_effective = config.n_requested;
  fs.folds.resize(config.n_requested);
  for (std::size_t j = 0; j < config.n_requested; ++j) {
    CounterRng rng(config.seed, stream::replacement_fold(j));
    auto& fold = fs.folds[j];
    fold.index = j;
    fold.members.reserve(config.fold_size);
    for (std::size_t k = 0; k < config.fold_size; ++k)
      fold.members.push_back(members[rng.uniform_below(members.size())]);
  }
  return fs;
}

/// Streaming fold assignment. Single writer; snapshot() copies.
class IncrementalPartitionState {
 public:
  explicit IncrementalPartitionState(PartitionConfig config) : config_(config) {
    config_.validate();
    folds_.resize(config_.n_requested);
  }

  void add(RowId id) {
    const std::size_t n = folds_.size();
    const std::size_t pos = arrivals_ % n;
    if (pos == 0) {
      block_order_.resize(n);
      std::iota(block_order_.begin(), block_order_.end(), std::size_t{0});
      CounterRng rng(config_.seed, stream::incremental_block(arrivals_ / n));
      shuffle(std::span<std::size_t>(block_order_), rng);
    }
    folds_[block_order_[pos]].push_back(id);
    ++arrivals_;
  }

  template <typename Range>
  void add_all(const Range& ids) {
    for (RowId id : ids) add(id);
  }

  std::size_t arrivals_seen() const { return arrivals_; }
  const PartitionConfig& config() const { return config_; }

  std::vector<std::size_t> fold_sizes() const {
    std::vector<std::size_t> out;
    for (const auto& f : folds_) out.push_back(f.size());
    return out;
  }

  FoldSet snapshot() const {
    FoldSet fs;
    fs.config = config_;
    fs.n_effective = folds_.size();
    fs.folds.reserve(folds_.size());
    for (std::size_t j = 0; j < folds_.size(); ++j) fs.folds.push_back({j, folds_[j]});
    return fs;
  }

 private:
  PartitionConfig config_;
  std::vector<std::vector<RowId>> folds_;
  std::vector<std::size_t> block_order_;
  std::size_t arrivals_ = 0;
};

/// Dispatches on config.mode. incremental mode replays the members in order
/// through an IncrementalPartitionState.
inline FoldSet partition(std::span<const RowId> members, const PartitionConfig& config) {
  config.validate();
  switch (config.mode) {
    case PartitionMode::disjoint: return partition_disjoint(members, config);
    case PartitionMode::partial: return partition_partial(members, config);
    case PartitionMode::with_replacement: return partition_with_replacement(members, config);
    case PartitionMode::incremental: {
      IncrementalPartitionState state(config);
      state.add_all(members);
      return state.snapshot();
    }
  }
  return {};
}

inline FoldSet partition(const MeasureSubset& subset, const PartitionConfig& config) {
  FoldSet fs = partition(std::span<const RowId>(subset.member_row_ids), config);
  fs.source = subset.group_key;
  return fs;
}

}  // namespace ir
