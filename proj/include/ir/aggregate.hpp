#pragma once

// Merging per-fold statistics into one aggregate value per statistic while
// keeping the fold detail for unfolding.

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ir/error.hpp"
#include "ir/metrics.hpp"
#include "ir/partition.hpp"

namespace ir {

/// `none` leaves the aggregate undefined (a lone fold still passes through);
/// it is the default for p_value, which is only ever acted on through the
/// vote over `significant`.
enum class Strategy { sum, mean, weighted_mean, majority_vote, none };

inline std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::sum: return "sum";
    case Strategy::mean: return "mean";
    case Strategy::weighted_mean: return "weighted_mean";
    case Strategy::majority_vote: return "majority_vote";
    case Strategy::none: return "none";
  }
  return "?";
}

inline std::optional<Strategy> strategy_from_string(std::string_view s) {
  for (auto v : {Strategy::sum, Strategy::mean, Strategy::weighted_mean, Strategy::majority_vote,
                 Strategy::none})
    if (to_string(v) == s) return v;
  return std::nullopt;
}

inline std::optional<Strategy> default_strategy(std::string_view statistic) {
  if (statistic == "count") return Strategy::sum;
  if (statistic == "significant") return Strategy::majority_vote;
  if (statistic == "p_value") return Strategy::none;
  for (std::string_view s : {"proportion", "complement", "mean", "slope", "intercept", "r2",
                             "phi", "odds_ratio", "odds_ratio_uncorrected", "positive_support",
                             "negative_support"})
    if (statistic == s) return Strategy::weighted_mean;
  return std::nullopt;
}

struct AggregationSpec {
  std::map<std::string, Strategy> strategies;      // overrides of default_strategy
  std::map<std::string, StatValue> default_labels;  // majority_vote fallback

  Strategy strategy_for(const std::string& statistic) const {
    if (auto it = strategies.find(statistic); it != strategies.end()) return it->second;
    if (auto s = default_strategy(statistic)) return *s;
    throw ValidationError("no aggregation strategy for statistic '" + statistic + "'");
  }

  bool operator==(const AggregationSpec&) const = default;
};

/// Label counts over the folds with a defined value. The three flags are
/// filled for boolean statistics only.
struct VoteDetail {
  std::map<std::string, std::size_t> counts;
  std::size_t defined = 0;
  std::size_t n_effective = 0;
  bool boolean = false;
  bool unanimous = false;
  bool majority = false;
  bool at_least_one = false;

  bool operator==(const VoteDetail&) const = default;
};

struct Provenance {
  PartitionConfig partition;
  MetricSpec metric;
  AggregationSpec aggregation;
  bool operator==(const Provenance&) const = default;
};

struct MergedMeasure {
  GroupKey group_key;
  std::map<std::string, StatValue> aggregates;
  std::map<std::string, std::string> reasons;
  std::vector<FoldStats> fold_stats;
  std::size_t n_effective = 0;
  std::map<std::string, VoteDetail> vote_detail;
  Provenance provenance;

  bool all_undefined() const {
    for (const auto& [name, v] : aggregates)
      if (is_defined(v)) return false;
    return true;
  }
};

inline std::string label_of(const StatValue& v) {
  if (auto b = std::get_if<bool>(&v)) return *b ? "true" : "false";
  if (auto s = std::get_if<std::string>(&v)) return *s;
  throw ValidationError("majority vote over a non-categorical value");
}

inline VoteDetail vote_tally(const std::vector<FoldStats>& folds, const std::string& statistic,
                             std::size_t n_effective) {
  VoteDetail v;
  v.n_effective = n_effective;
  bool saw_string = false;
  std::size_t trues = 0;
  for (const auto& f : folds) {
    auto it = f.values.find(statistic);
    if (it == f.values.end() || !is_defined(it->second)) continue;
    ++v.defined;
    ++v.counts[label_of(it->second)];
    if (auto b = std::get_if<bool>(&it->second)) trues += *b;
    else saw_string = true;
  }
  v.boolean = !saw_string;
  if (v.boolean) {
    v.at_least_one = trues >= 1;
    v.majority = 2 * trues > n_effective;
    v.unanimous = v.defined == n_effective && trues == v.defined && trues > 0;
  }
  return v;
}

inline VoteDetail vote_tally(const std::vector<FoldStats>& folds, const std::string& statistic) {
  return vote_tally(folds, statistic, folds.size());
}

namespace detail {

inline StatValue majority_value(const std::vector<FoldStats>& folds, const std::string& name,
                                const VoteDetail& tally, const AggregationSpec& spec,
                                std::string& reason) {
  for (const auto& [label, count] : tally.counts) {
    if (2 * count > tally.n_effective) {
      for (const auto& f : folds) {
        auto it = f.values.find(name);
        if (it != f.values.end() && is_defined(it->second) && label_of(it->second) == label)
          return it->second;
      }
    }
  }
  if (auto it = spec.default_labels.find(name); it != spec.default_labels.end()) return it->second;
  if (tally.boolean) return false;
  reason = "no strict majority";
  return std::monostate{};
}

}  // namespace detail

/// Merges fold statistics. `n_effective` is the denominator of the majority
/// test; folds with an undefined value never vote but still count there.
inline MergedMeasure aggregate(const std::vector<FoldStats>& folds, const AggregationSpec& spec,
                               std::size_t n_effective) {
  if (folds.empty()) throw ValidationError("aggregate: no fold statistics");
  MergedMeasure m;
  m.fold_stats = folds;
  m.n_effective = n_effective;

  std::vector<std::string> names;
  for (const auto& f : folds)
    for (const auto& [name, v] : f.values)
      if (std::find(names.begin(), names.end(), name) == names.end()) names.push_back(name);

  for (const auto& name : names) {
    const Strategy strategy = spec.strategy_for(name);
    std::vector<const FoldStats*> defined;
    for (const auto& f : folds)
      if (auto it = f.values.find(name); it != f.values.end() && is_defined(it->second))
        defined.push_back(&f);

    if (strategy == Strategy::majority_vote) {
      VoteDetail tally = vote_tally(folds, name, n_effective);
      if (defined.empty()) {
        m.aggregates[name] = std::monostate{};
        m.reasons[name] = "undefined in every fold";
      } else {
        std::string reason;
        m.aggregates[name] = detail::majority_value(folds, name, tally, spec, reason);
        if (!reason.empty()) m.reasons[name] = reason;
      }
      m.vote_detail[name] = std::move(tally);
      continue;
    }
    if (strategy == Strategy::none) {
      if (folds.size() == 1) {  // identity partition: nothing to merge
        m.aggregates[name] = folds.front().values.at(name);
        if (auto r = folds.front().reasons.find(name); r != folds.front().reasons.end())
          m.reasons[name] = r->second;
        continue;
      }
      m.aggregates[name] = std::monostate{};
      m.reasons[name] = "not aggregated; per-fold values only";
      continue;
    }
    if (defined.empty()) {
      m.aggregates[name] = std::monostate{};
      m.reasons[name] = "undefined in every fold";
      if (auto r = folds.front().reasons.find(name); r != folds.front().reasons.end())
        m.reasons[name] += ": " + r->second;
      continue;
    }
    auto value = [&](const FoldStats* f) {
      auto d = as_number(f->values.at(name));
      if (!d)
        throw ValidationError("strategy " + std::string(to_string(strategy)) +
                              " needs a numeric statistic, '" + name + "' is categorical");
      return *d;
    };
    const double first = value(defined.front());
    const bool all_same = std::all_of(defined.begin(), defined.end(),
                                      [&](const FoldStats* f) { return value(f) == first; });
    if (defined.size() == 1 || (all_same && strategy != Strategy::sum)) {
      // a lone fold passes through untouched, so n = 1 matches a direct computation bit for bit
      m.aggregates[name] = first;
      continue;
    }
    double result = 0;
    switch (strategy) {
      case Strategy::sum:
        for (auto* f : defined) result += value(f);
        break;
      case Strategy::mean:
        for (auto* f : defined) result += value(f);
        result /= static_cast<double>(defined.size());
        break;
      case Strategy::weighted_mean: {
        double weight = 0;
        for (auto* f : defined) {
          result += value(f) * static_cast<double>(f->support_n);
          weight += static_cast<double>(f->support_n);
        }
        if (weight == 0) {
          m.aggregates[name] = std::monostate{};
          m.reasons[name] = "zero total support";
          continue;
        }
        result /= weight;
        break;
      }
      default: break;
    }
    m.aggregates[name] = result;
  }
  return m;
}

inline MergedMeasure aggregate(const std::vector<FoldStats>& folds, const AggregationSpec& spec) {
  return aggregate(folds, spec, folds.size());
}

}  // namespace ir
