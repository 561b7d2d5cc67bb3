#pragma once

// Per-fold statistics. Every metric is computed from one fold's members only;
// statistical degeneracy inside a fold yields an undefined value plus a
// reason, never an exception.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "ir/dataset.hpp"
#include "ir/error.hpp"
#include "ir/partition.hpp"

namespace ir {

/// monostate is the undefined marker; bool and string are categorical labels.
using StatValue = std::variant<std::monostate, double, bool, std::string>;

inline bool is_defined(const StatValue& v) { return !std::holds_alternative<std::monostate>(v); }

inline std::optional<double> as_number(const StatValue& v) {
  if (auto d = std::get_if<double>(&v)) return *d;
  return std::nullopt;
}

enum class MetricKind { count, proportion, mean, linear_regression, binary_association };

inline std::string_view to_string(MetricKind k) {
  switch (k) {
    case MetricKind::count: return "count";
    case MetricKind::proportion: return "proportion";
    case MetricKind::mean: return "mean";
    case MetricKind::linear_regression: return "linear_regression";
    case MetricKind::binary_association: return "binary_association";
  }
  return "?";
}

inline std::optional<MetricKind> metric_kind_from_string(std::string_view s) {
  for (auto k : {MetricKind::count, MetricKind::proportion, MetricKind::mean,
                 MetricKind::linear_regression, MetricKind::binary_association})
    if (to_string(k) == s) return k;
  return std::nullopt;
}

inline constexpr double kDefaultAlpha = 0.05;

/// Which statistic to compute. Only the fields of the chosen kind are read:
///   proportion          column, target
///   mean                column
///   linear_regression   x, y
///   binary_association  feature, outcome, alpha (outcome true = good)
struct MetricSpec {
  MetricKind kind = MetricKind::count;
  std::string column;
  Cell target;
  std::string x;
  std::string y;
  std::string feature;
  std::string outcome;
  double alpha = kDefaultAlpha;

  static MetricSpec count() { return {}; }
  static MetricSpec proportion(std::string column, Cell target) {
    MetricSpec s;
    s.kind = MetricKind::proportion;
    s.column = std::move(column);
    s.target = std::move(target);
    return s;
  }
  static MetricSpec mean(std::string column) {
    MetricSpec s;
    s.kind = MetricKind::mean;
    s.column = std::move(column);
    return s;
  }
  static MetricSpec linear_regression(std::string x, std::string y) {
    MetricSpec s;
    s.kind = MetricKind::linear_regression;
    s.x = std::move(x);
    s.y = std::move(y);
    return s;
  }
  static MetricSpec binary_association(std::string feature, std::string outcome,
                                       double alpha = kDefaultAlpha) {
    MetricSpec s;
    s.kind = MetricKind::binary_association;
    s.feature = std::move(feature);
    s.outcome = std::move(outcome);
    s.alpha = alpha;
    return s;
  }

  std::vector<std::string> output_names() const {
    switch (kind) {
      case MetricKind::count: return {"count"};
      case MetricKind::proportion: return {"proportion", "complement"};
      case MetricKind::mean: return {"mean"};
      case MetricKind::linear_regression: return {"slope", "intercept", "r2"};
      case MetricKind::binary_association:
        return {"positive_support", "negative_support", "odds_ratio", "odds_ratio_uncorrected",
                "phi", "p_value", "significant"};
    }
    return {};
  }

  void validate(const Schema& schema) const {
    auto kind_of = [&](const std::string& name, std::string_view role) {
      for (const auto& c : schema)
        if (c.name == name) return c.kind;
      throw ValidationError(std::string(to_string(kind)) + ": " + std::string(role) +
                            " column '" + name + "' does not exist");
    };
    auto need_numeric = [&](const std::string& name, std::string_view role) {
      if (!is_numeric_kind(kind_of(name, role)))
        throw ValidationError(std::string(to_string(kind)) + ": " + std::string(role) +
                              " column '" + name + "' is not numeric");
    };
    auto need_binary = [&](const std::string& name, std::string_view role) {
      auto k = kind_of(name, role);
      if (k != ColumnKind::boolean && k != ColumnKind::integer && k != ColumnKind::number)
        throw ValidationError(std::string(to_string(kind)) + ": " + std::string(role) +
                              " column '" + name + "' is not binary (boolean or 0/1 numeric)");
    };
    switch (kind) {
      case MetricKind::count: break;
      case MetricKind::proportion: {
        auto k = kind_of(column, "target");
        if (k != ColumnKind::category && k != ColumnKind::boolean && k != ColumnKind::integer)
          throw ValidationError("proportion: target column '" + column +
                                "' must be category, boolean or integer");
        if (is_missing(target) || !detail::cell_matches_kind(target, k))
          throw ValidationError("proportion: target value does not match the kind of '" +
                                column + "'");
        break;
      }
      case MetricKind::mean: need_numeric(column, "value"); break;
      case MetricKind::linear_regression:
        need_numeric(x, "x");
        need_numeric(y, "y");
        break;
      case MetricKind::binary_association:
        need_binary(feature, "feature");
        need_binary(outcome, "outcome");
        if (!(alpha > 0.0 && alpha < 1.0))
          throw ValidationError("binary_association: alpha must lie in (0, 1)");
        break;
    }
  }

  bool operator==(const MetricSpec&) const = default;
};

struct FoldStats {
  std::size_t fold_index = 0;
  std::map<std::string, StatValue> values;
  std::size_t support_n = 0;        // rows actually used
  std::size_t dropped_missing = 0;  // rows skipped for a missing input cell
  std::map<std::string, std::string> reasons;  // why a value is undefined
  std::vector<std::string> flags;

  void set_undefined(const std::string& name, std::string reason) {
    values[name] = std::monostate{};
    reasons[name] = std::move(reason);
  }
  bool operator==(const FoldStats&) const = default;
};

// ---------------------------------------------------------------------------
// Value-level statistics

struct OlsFit {
  double slope = 0;
  double intercept = 0;
  double r2 = 0;
};

struct OlsResult {
  std::optional<OlsFit> fit;
  std::string reason;
};

/// Ordinary least squares of y on x. Points are sorted first so the result
/// depends only on the multiset of points. Sums are taken relative to the
/// first point; for integer-valued data on an exact line every sum is exact
/// and the slope and intercept come out exact.
inline OlsResult ols_fit(std::vector<std::pair<double, double>> pts) {
  if (pts.size() < 2) return {std::nullopt, "insufficient points"};
  std::sort(pts.begin(), pts.end());
  const double x0 = pts.front().first, y0 = pts.front().second;
  const double n = static_cast<double>(pts.size());
  double su = 0, sv = 0, suu = 0, suv = 0;
  for (const auto& [x, y] : pts) {
    const double u = x - x0, v = y - y0;
    su += u;
    sv += v;
    suu += u * u;
    suv += u * v;
  }
  const double denom = n * suu - su * su;
  if (!(denom > 0)) return {std::nullopt, "zero x variance"};
  OlsFit fit;
  fit.slope = (n * suv - su * sv) / denom;
  fit.intercept = y0 + (sv - fit.slope * su) / n - fit.slope * x0;
  const double y_mean = y0 + sv / n;
  double ss_res = 0, ss_tot = 0;
  for (const auto& [x, y] : pts) {
    const double r = y - (fit.intercept + fit.slope * x);
    ss_res += r * r;
    ss_tot += (y - y_mean) * (y - y_mean);
  }
  // constant y is fitted perfectly by a flat line
  fit.r2 = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
  return {fit, {}};
}

/// 2x2 table of feature presence against outcome.
///
///                 good outcome   bad outcome
///   feature          a              c
///   no feature       b              d
struct ContingencyTable {
  std::uint64_t a = 0, b = 0, c = 0, d = 0;

  std::uint64_t total() const { return a + b + c + d; }
  std::uint64_t good() const { return a + b; }
  std::uint64_t bad() const { return c + d; }
  std::uint64_t present() const { return a + c; }
  std::uint64_t absent() const { return b + d; }

  /// Smallest expected cell count under independence.
  double min_expected() const {
    const double n = static_cast<double>(total());
    if (n == 0) return 0;
    const double rows[2] = {double(present()), double(absent())};
    const double cols[2] = {double(good()), double(bad())};
    double m = std::numeric_limits<double>::infinity();
    for (double r : rows)
      for (double col : cols) m = std::min(m, r * col / n);
    return m;
  }

  /// Pearson chi-square without continuity correction; nullopt when a margin is zero.
  std::optional<double> chi_square() const {
    const double margins = double(good()) * double(bad()) * double(present()) * double(absent());
    if (margins == 0) return std::nullopt;
    const double cross = double(a) * double(d) - double(b) * double(c);
    return double(total()) * cross * cross / margins;
  }

  std::optional<double> phi() const {
    const double margins = double(good()) * double(bad()) * double(present()) * double(absent());
    if (margins == 0) return std::nullopt;
    return (double(a) * double(d) - double(b) * double(c)) / std::sqrt(margins);
  }
};

/// Upper tail of the chi-square distribution with one degree of freedom.
inline double chi_square_1df_pvalue(double statistic) {
  double p = std::erfc(std::sqrt(std::max(0.0, statistic) / 2.0));
  // keep p in (0, 1] when the tail underflows
  return std::clamp(p, std::numeric_limits<double>::min(), 1.0);
}

inline constexpr double kSmallExpectedCell = 5.0;

// ---------------------------------------------------------------------------
// Fold-level metrics

inline FoldStats metric_count(std::span<const RowId> members, std::size_t fold_index = 0) {
  FoldStats s;
  s.fold_index = fold_index;
  s.support_n = members.size();
  s.values["count"] = static_cast<double>(members.size());
  return s;
}

inline FoldStats metric_proportion(const Dataset& ds, std::span<const RowId> members,
                                   const std::string& column, const Cell& target,
                                   std::size_t fold_index = 0) {
  const std::size_t col = ds.require_column(column);
  FoldStats s;
  s.fold_index = fold_index;
  std::size_t match = 0;
  for (RowId id : members) {
    const Cell& v = ds.cell(id, col);
    if (is_missing(v)) {
      ++s.dropped_missing;
      continue;
    }
    ++s.support_n;
    if (v == target) ++match;
  }
  if (s.support_n == 0) {
    s.set_undefined("proportion", "no usable rows");
    s.set_undefined("complement", "no usable rows");
    return s;
  }
  const double p = static_cast<double>(match) / static_cast<double>(s.support_n);
  s.values["proportion"] = p;
  // p + (1 - p) rounds to exactly 1 for every p in [0, 1]
  s.values["complement"] = 1.0 - p;
  return s;
}

inline FoldStats metric_mean(const Dataset& ds, std::span<const RowId> members,
                             const std::string& column, std::size_t fold_index = 0) {
  const std::size_t col = ds.require_column(column);
  FoldStats s;
  s.fold_index = fold_index;
  std::vector<double> vals;
  vals.reserve(members.size());
  for (RowId id : members) {
    if (auto v = numeric_value(ds.cell(id, col))) vals.push_back(*v);
    else ++s.dropped_missing;
  }
  s.support_n = vals.size();
  if (vals.empty()) {
    s.set_undefined("mean", "no usable rows");
    return s;
  }
  std::sort(vals.begin(), vals.end());
  double sum = 0;
  for (double v : vals) sum += v;
  s.values["mean"] = sum / static_cast<double>(vals.size());
  return s;
}

inline FoldStats metric_linear_regression(const Dataset& ds, std::span<const RowId> members,
                                          const std::string& x, const std::string& y,
                                          std::size_t fold_index = 0) {
  const std::size_t cx = ds.require_column(x), cy = ds.require_column(y);
  FoldStats s;
  s.fold_index = fold_index;
  std::vector<std::pair<double, double>> pts;
  pts.reserve(members.size());
  for (RowId id : members) {
    auto vx = numeric_value(ds.cell(id, cx));
    auto vy = numeric_value(ds.cell(id, cy));
    if (vx && vy) pts.emplace_back(*vx, *vy);
    else ++s.dropped_missing;
  }
  s.support_n = pts.size();
  auto res = ols_fit(std::move(pts));
  if (!res.fit) {
    for (const char* name : {"slope", "intercept", "r2"}) s.set_undefined(name, res.reason);
    return s;
  }
  s.values["slope"] = res.fit->slope;
  s.values["intercept"] = res.fit->intercept;
  s.values["r2"] = res.fit->r2;
  return s;
}

/// Association statistics from a finished table; `s` receives the values.
inline void association_from_table(const ContingencyTable& t, double alpha, FoldStats& s) {
  s.support_n = static_cast<std::size_t>(t.total());
  if (t.good() > 0) s.values["positive_support"] = double(t.a) / double(t.good());
  else s.set_undefined("positive_support", "no good-outcome rows");
  if (t.bad() > 0) s.values["negative_support"] = double(t.c) / double(t.bad());
  else s.set_undefined("negative_support", "no bad-outcome rows");

  if (t.good() == 0 || t.bad() == 0) {
    const std::string why = t.total() == 0 ? "no usable rows" : "single outcome class";
    for (const char* name : {"odds_ratio", "odds_ratio_uncorrected", "phi", "p_value", "significant"})
      s.set_undefined(name, why);
    return;
  }

  const double a = double(t.a), b = double(t.b), c = double(t.c), d = double(t.d);
  if (b * c > 0) s.values["odds_ratio_uncorrected"] = (a * d) / (b * c);
  else s.set_undefined("odds_ratio_uncorrected", "zero cell in denominator");
  if (t.a == 0 || t.b == 0 || t.c == 0 || t.d == 0) {
    s.values["odds_ratio"] = ((a + 0.5) * (d + 0.5)) / ((b + 0.5) * (c + 0.5));
    s.flags.push_back("haldane_corrected");
  } else {
    s.values["odds_ratio"] = (a * d) / (b * c);
  }

  auto phi = t.phi();
  auto chi2 = t.chi_square();
  if (!phi || !chi2) {
    for (const char* name : {"phi", "p_value", "significant"})
      s.set_undefined(name, "constant feature");
    return;
  }
  s.values["phi"] = std::clamp(*phi, -1.0, 1.0);
  const double p = chi_square_1df_pvalue(*chi2);
  s.values["p_value"] = p;
  s.values["significant"] = p < alpha;
  if (t.min_expected() < kSmallExpectedCell) s.flags.push_back("small_expected_cells");
}

inline ContingencyTable tabulate(const Dataset& ds, std::span<const RowId> members,
                                 std::size_t feature_col, std::size_t outcome_col,
                                 std::size_t* dropped = nullptr) {
  ContingencyTable t;
  for (RowId id : members) {
    auto f = binary_value(ds.cell(id, feature_col));
    auto o = binary_value(ds.cell(id, outcome_col));
    if (!f || !o) {
      if (dropped) ++*dropped;
      continue;
    }
    if (*o) (*f ? t.a : t.b)++;
    else (*f ? t.c : t.d)++;
  }
  return t;
}

inline FoldStats metric_binary_association(const Dataset& ds, std::span<const RowId> members,
                                           const std::string& feature, const std::string& outcome,
                                           double alpha = kDefaultAlpha,
                                           std::size_t fold_index = 0) {
  FoldStats s;
  s.fold_index = fold_index;
  auto t = tabulate(ds, members, ds.require_column(feature), ds.require_column(outcome),
                    &s.dropped_missing);
  association_from_table(t, alpha, s);
  return s;
}

/// Computes `spec` over one member list. Callers validate `spec` first.
inline FoldStats compute_metric(const Dataset& ds, std::span<const RowId> members,
                                const MetricSpec& spec, std::size_t fold_index = 0) {
  switch (spec.kind) {
    case MetricKind::count: return metric_count(members, fold_index);
    case MetricKind::proportion:
      return metric_proportion(ds, members, spec.column, spec.target, fold_index);
    case MetricKind::mean: return metric_mean(ds, members, spec.column, fold_index);
    case MetricKind::linear_regression:
      return metric_linear_regression(ds, members, spec.x, spec.y, fold_index);
    case MetricKind::binary_association:
      return metric_binary_association(ds, members, spec.feature, spec.outcome, spec.alpha,
                                       fold_index);
  }
  return {};
}

/// One FoldStats per fold, in fold-index order.
inline std::vector<FoldStats> run_metrics(const FoldSet& folds, const MetricSpec& spec,
                                          const Dataset& ds) {
  spec.validate(ds.schema);
  std::vector<FoldStats> out;
  out.reserve(folds.folds.size());
  for (const auto& f : folds.folds) out.push_back(compute_metric(ds, f.members, spec, f.index));
  return out;
}

}  // namespace ir
