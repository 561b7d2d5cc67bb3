#pragma once

// Renderer-neutral chart descriptions ("irchart/1"). Every aggregate mark
// carries its merged measure and per-fold marks so a client can unfold it
// without another request.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ir/aggregate.hpp"
#include "ir/dataset.hpp"
#include "ir/hull.hpp"

namespace ir {

inline constexpr std::string_view kChartSchema = "irchart/1";

enum class ChartKind { bar, scatter_regression, bubble };

inline std::string_view to_string(ChartKind k) {
  switch (k) {
    case ChartKind::bar: return "bar";
    case ChartKind::scatter_regression: return "scatter_regression";
    case ChartKind::bubble: return "bubble";
  }
  return "?";
}

inline std::optional<ChartKind> chart_kind_from_string(std::string_view s) {
  for (auto k : {ChartKind::bar, ChartKind::scatter_regression, ChartKind::bubble})
    if (to_string(k) == s) return k;
  return std::nullopt;
}

using Channels = std::map<std::string, StatValue>;

struct FoldMark {
  std::size_t fold = 0;
  Channels channels;
  bool undefined = false;
};

struct AggregateMark {
  std::string id;
  std::string label;
  Channels channels;
  bool undefined = false;
  std::string reason;
  bool significant = false;  // bubble: distinct border
  std::vector<FoldMark> fold_marks;
  std::optional<std::vector<Point2>> unfold_region;
  MergedMeasure measure;
};

struct QueryProvenance {
  std::string dataset;
  std::vector<FilterPredicate> filters;
  std::vector<std::string> group_by;
};

struct ChartSpec {
  ChartKind kind = ChartKind::bar;
  std::map<std::string, std::string> axes;  // channel -> statistic
  std::vector<AggregateMark> marks;
  std::vector<Point2> points;  // raw scatter points (scatter_regression)
  std::optional<std::pair<double, double>> x_extent;
  std::vector<std::string> omitted;  // measures left out, with reason
  std::vector<std::string> diagnostics;
  QueryProvenance query;
};

namespace detail {

inline StatValue channel_of(const std::map<std::string, StatValue>& values, const std::string& key) {
  auto it = values.find(key);
  return it == values.end() ? StatValue{} : it->second;
}

inline std::string mark_id(std::size_t i) { return "m" + std::to_string(i); }

inline std::string undefined_reason(const MergedMeasure& m, const std::string& statistic) {
  auto it = m.reasons.find(statistic);
  return it == m.reasons.end() ? "undefined" : it->second;
}

}  // namespace detail

/// One bar per measure; fold marks carry the per-fold heights.
inline ChartSpec build_bar_chart(const std::vector<MergedMeasure>& measures,
                                 const std::string& statistic) {
  ChartSpec spec;
  spec.kind = ChartKind::bar;
  spec.axes = {{"x", "group"}, {"y", statistic}};
  for (std::size_t i = 0; i < measures.size(); ++i) {
    const auto& m = measures[i];
    auto it = m.aggregates.find(statistic);
    if (it == m.aggregates.end())
      throw ValidationError("bar chart: measure has no statistic '" + statistic + "'");
    if (is_defined(it->second) && !as_number(it->second))
      throw ValidationError("bar chart: statistic '" + statistic + "' is not numeric");
    AggregateMark mark;
    mark.id = detail::mark_id(i);
    mark.label = group_label(m.group_key);
    mark.channels["x"] = mark.label;
    mark.channels["y"] = it->second;
    if (!is_defined(it->second)) {
      mark.undefined = true;
      mark.reason = detail::undefined_reason(m, statistic);
    }
    for (const auto& f : m.fold_stats) {
      FoldMark fm{f.fold_index, {{"y", detail::channel_of(f.values, statistic)}}, false};
      fm.undefined = !is_defined(fm.channels["y"]);
      mark.fold_marks.push_back(std::move(fm));
    }
    mark.measure = m;
    spec.marks.push_back(std::move(mark));
  }
  return spec;
}

/// Raw points plus one aggregate line per measure and one line per fold with
/// a defined fit. Folds without a fit are left out of fold_marks.
inline ChartSpec build_regression_chart(const std::vector<MergedMeasure>& measures,
                                        std::vector<Point2> points) {
  ChartSpec spec;
  spec.kind = ChartKind::scatter_regression;
  spec.axes = {{"x", "x"}, {"y", "y"}, {"line", "slope,intercept"}};
  spec.points = std::move(points);
  if (!spec.points.empty()) {
    auto [lo, hi] = std::minmax_element(spec.points.begin(), spec.points.end(),
                                        [](const Point2& a, const Point2& b) { return a.x < b.x; });
    spec.x_extent = {lo->x, hi->x};
  }
  for (std::size_t i = 0; i < measures.size(); ++i) {
    const auto& m = measures[i];
    AggregateMark mark;
    mark.id = detail::mark_id(i);
    mark.label = group_label(m.group_key);
    for (const char* ch : {"slope", "intercept", "r2"})
      mark.channels[ch] = detail::channel_of(m.aggregates, ch);
    if (!is_defined(mark.channels["slope"]) || !is_defined(mark.channels["intercept"])) {
      mark.undefined = true;
      mark.reason = detail::undefined_reason(m, "slope");
      spec.diagnostics.push_back(mark.label + ": no aggregate regression line (" + mark.reason +
                                 "); scatter only");
    }
    for (const auto& f : m.fold_stats) {
      auto slope = detail::channel_of(f.values, "slope");
      auto intercept = detail::channel_of(f.values, "intercept");
      if (!is_defined(slope) || !is_defined(intercept)) continue;
      mark.fold_marks.push_back({f.fold_index, {{"slope", slope}, {"intercept", intercept}}, false});
    }
    mark.measure = m;
    spec.marks.push_back(std::move(mark));
  }
  return spec;
}

/// One circle per measure at (positive_support, negative_support). Size is
/// |phi|, color the odds-ratio direction, and the unfold region the convex
/// hull of the fold positions together with the aggregate position.
inline ChartSpec build_bubble_chart(const std::vector<MergedMeasure>& measures) {
  ChartSpec spec;
  spec.kind = ChartKind::bubble;
  spec.axes = {{"x", "positive_support"},
               {"y", "negative_support"},
               {"size", "abs(phi)"},
               {"color", "odds_ratio"}};
  auto color_of = [](const StatValue& odds) -> StatValue {
    auto v = as_number(odds);
    if (!v) return std::monostate{};
    return std::string(*v > 1 ? "positive" : *v < 1 ? "negative" : "neutral");
  };
  auto size_of = [](const StatValue& phi) -> StatValue {
    if (auto v = as_number(phi)) return std::abs(*v);
    return std::monostate{};
  };
  std::size_t next_id = 0;
  for (const auto& m : measures) {
    const std::string label = group_label(m.group_key);
    AggregateMark mark;
    std::vector<Point2> fold_points;
    for (const auto& f : m.fold_stats) {
      FoldMark fm;
      fm.fold = f.fold_index;
      fm.channels["x"] = detail::channel_of(f.values, "positive_support");
      fm.channels["y"] = detail::channel_of(f.values, "negative_support");
      fm.channels["size"] = size_of(detail::channel_of(f.values, "phi"));
      fm.channels["color"] = color_of(detail::channel_of(f.values, "odds_ratio"));
      auto x = as_number(fm.channels["x"]), y = as_number(fm.channels["y"]);
      fm.undefined = !x || !y;
      if (!fm.undefined) fold_points.push_back({*x, *y});
      mark.fold_marks.push_back(std::move(fm));
    }
    auto ax = as_number(detail::channel_of(m.aggregates, "positive_support"));
    auto ay = as_number(detail::channel_of(m.aggregates, "negative_support"));
    if (fold_points.empty() || !ax || !ay) {
      spec.omitted.push_back(label + ": no fold with defined supports");
      continue;
    }
    mark.id = detail::mark_id(next_id++);
    mark.label = label;
    mark.channels["x"] = *ax;
    mark.channels["y"] = *ay;
    mark.channels["size"] = size_of(detail::channel_of(m.aggregates, "phi"));
    mark.channels["color"] = color_of(detail::channel_of(m.aggregates, "odds_ratio"));
    auto sig = detail::channel_of(m.aggregates, "significant");
    mark.significant = std::holds_alternative<bool>(sig) && std::get<bool>(sig);
    fold_points.push_back({*ax, *ay});
    mark.unfold_region = convex_hull(std::move(fold_points));
    mark.measure = m;
    spec.marks.push_back(std::move(mark));
  }
  return spec;
}

/// The chart with all fold detail removed: what a pipeline without
/// replication would draw from the same aggregates.
inline ChartSpec strip_fold_detail(ChartSpec spec) {
  for (auto& mark : spec.marks) {
    mark.fold_marks.clear();
    mark.unfold_region.reset();
    mark.measure.fold_stats.clear();
    mark.measure.vote_detail.clear();
  }
  return spec;
}

}  // namespace ir
