#pragma once

// End-to-end analysis: filter -> group -> partition -> metrics -> aggregate
// -> chart. Used by the HTTP service and the command-line tool alike.

#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "ir/aggregate.hpp"
#include "ir/chartspec.hpp"
#include "ir/dataset.hpp"
#include "ir/json.hpp"
#include "ir/metrics.hpp"
#include "ir/partition.hpp"

namespace ir {

struct AnalysisRequest {
  std::string dataset;
  std::vector<FilterPredicate> filters;
  std::vector<std::string> group_by;
  std::vector<MetricSpec> metrics;  // several only for a multi-feature association
  PartitionConfig partition;
  AggregationSpec aggregation;
  ChartKind chart_kind = ChartKind::bar;
  std::string statistic;  // bar height; empty picks the metric's main output
};

struct AnalysisResponse {
  ChartSpec chart;
  std::vector<MergedMeasure> measures;
  std::vector<std::string> warnings;
};

inline ChartKind default_chart_kind(MetricKind k) {
  switch (k) {
    case MetricKind::linear_regression: return ChartKind::scatter_regression;
    case MetricKind::binary_association: return ChartKind::bubble;
    default: return ChartKind::bar;
  }
}

inline AnalysisRequest analysis_request_from_json(const json& j, const Schema& schema) {
  constexpr const char* where = "request";
  if (!j.is_object()) throw ValidationError("request must be a JSON object");
  AnalysisRequest r;
  r.dataset = detail::get_or<std::string>(j, "dataset", "", where);
  if (j.contains("filters")) r.filters = predicates_from_json(j.at("filters"), schema);
  if (j.contains("group_by")) {
    const json& g = j.at("group_by");
    if (!g.is_array()) throw ValidationError("group_by must be an array of column names");
    for (const auto& c : g) {
      if (!c.is_string()) throw ValidationError("group_by must be an array of column names");
      r.group_by.push_back(c.get<std::string>());
    }
  }
  r.metrics = metric_specs_from_json(detail::require(j, "metric", where), schema);
  r.partition = partition_config_from_json(j.contains("partition") ? j.at("partition") : json());
  r.aggregation = aggregation_spec_from_json(j.contains("aggregation") ? j.at("aggregation") : json());
  r.chart_kind = default_chart_kind(r.metrics.front().kind);
  if (j.contains("chart_kind") && !j.at("chart_kind").is_null()) {
    auto k = chart_kind_from_string(detail::get_or<std::string>(j, "chart_kind", "", where));
    if (!k) throw ValidationError("unknown chart_kind '" + j.at("chart_kind").dump() + "'");
    r.chart_kind = *k;
  }
  r.statistic = detail::get_or<std::string>(j, "statistic", "", where);
  return r;
}

inline json to_json(const AnalysisRequest& r) {
  json metrics = json::array();
  for (const auto& m : r.metrics) metrics.push_back(to_json(m));
  json filters = json::array();
  for (const auto& f : r.filters) filters.push_back(to_json(f));
  return {{"dataset", r.dataset},
          {"filters", filters},
          {"group_by", r.group_by},
          {"metrics", metrics},
          {"partition", to_json(r.partition)},
          {"aggregation", to_json(r.aggregation)},
          {"chart_kind", to_string(r.chart_kind)},
          {"statistic", r.statistic}};
}

/// Response body. Wall-clock timing is deliberately absent so equal requests
/// produce equal bytes; servers report it in a header.
inline json to_json(const AnalysisResponse& r, const json& provenance) {
  json measures = json::array();
  for (const auto& m : r.measures) measures.push_back(to_json(m));
  return {{"chart", to_json(r.chart)},
          {"measures", measures},
          {"warnings", r.warnings},
          {"provenance", provenance}};
}

namespace detail {

inline std::string default_statistic(const MetricSpec& m) {
  switch (m.kind) {
    case MetricKind::count: return "count";
    case MetricKind::proportion: return "proportion";
    case MetricKind::mean: return "mean";
    case MetricKind::linear_regression: return "slope";
    case MetricKind::binary_association: return "positive_support";
  }
  return {};
}

inline void measure_warnings(const MergedMeasure& m, std::vector<std::string>& warnings) {
  const std::string label = group_label(m.group_key);
  for (const auto& [name, v] : m.aggregates) {
    if (is_defined(v)) continue;
    auto r = m.reasons.find(name);
    if (r != m.reasons.end() && r->second.starts_with("not aggregated")) continue;
    warnings.push_back(label + ": " + name + " undefined (" +
                       (r == m.reasons.end() ? std::string("undefined") : r->second) + ")");
  }
  std::size_t small = 0;
  for (const auto& f : m.fold_stats)
    if (std::find(f.flags.begin(), f.flags.end(), "small_expected_cells") != f.flags.end()) ++small;
  if (small)
    warnings.push_back(label + ": " + std::to_string(small) + " of " +
                       std::to_string(m.fold_stats.size()) +
                       " folds have an expected cell count below 5; chi-square p-values are approximate");
}

inline ChartSpec build_chart(const AnalysisRequest& req, const std::vector<MergedMeasure>& measures,
                             const DatasetView& view) {
  const MetricSpec& metric = req.metrics.front();
  switch (req.chart_kind) {
    case ChartKind::bar:
      return build_bar_chart(measures, req.statistic.empty() ? default_statistic(metric) : req.statistic);
    case ChartKind::scatter_regression: {
      if (metric.kind != MetricKind::linear_regression)
        throw ValidationError("scatter_regression chart needs a linear_regression metric");
      const Dataset& ds = view.dataset();
      const std::size_t cx = ds.require_column(metric.x), cy = ds.require_column(metric.y);
      std::vector<Point2> pts;
      for (RowId id : view.row_ids) {
        auto x = numeric_value(ds.cell(id, cx)), y = numeric_value(ds.cell(id, cy));
        if (x && y) pts.push_back({*x, *y});
      }
      return build_regression_chart(measures, std::move(pts));
    }
    case ChartKind::bubble:
      if (metric.kind != MetricKind::binary_association)
        throw ValidationError("bubble chart needs a binary_association metric");
      return build_bubble_chart(measures);
  }
  return {};
}

}  // namespace detail

/// Merged measure for one fold set. Stamps group key and provenance.
inline MergedMeasure merge_folds(const Dataset& ds, const FoldSet& folds, const MetricSpec& metric,
                                 const AggregationSpec& aggregation, GroupKey key) {
  auto stats = run_metrics(folds, metric, ds);
  MergedMeasure m = aggregate(stats, aggregation, folds.n_effective);
  m.group_key = std::move(key);
  m.provenance = {folds.config, metric, aggregation};
  return m;
}

inline AnalysisResponse run_analysis(const DatasetPtr& ds, const AnalysisRequest& req) {
  if (req.metrics.empty()) throw ValidationError("request has no metric");
  for (const auto& m : req.metrics) m.validate(ds->schema);
  req.partition.validate();

  AnalysisResponse resp;
  const DatasetView view = apply_filter(ds, req.filters);
  const auto subsets = group_measures(view, req.group_by);
  if (subsets.empty()) resp.warnings.push_back("no rows match the filters");

  for (const auto& subset : subsets) {
    const FoldSet folds = partition(subset, req.partition);
    if (folds.degraded())
      resp.warnings.push_back(group_label(subset.group_key) + ": n_effective=" +
                              std::to_string(folds.n_effective) + " < n_requested=" +
                              std::to_string(req.partition.n_requested) + " (subset of " +
                              std::to_string(subset.member_row_ids.size()) +
                              " rows, min_fold_size " + std::to_string(req.partition.min_fold_size) +
                              ")");
    for (const auto& metric : req.metrics) {
      GroupKey key = subset.group_key;
      if (req.metrics.size() > 1 || metric.kind == MetricKind::binary_association)
        key.emplace_back("feature", Cell{metric.feature});
      resp.measures.push_back(merge_folds(*ds, folds, metric, req.aggregation, std::move(key)));
    }
  }
  for (const auto& m : resp.measures) detail::measure_warnings(m, resp.warnings);
  if (!resp.measures.empty() &&
      std::all_of(resp.measures.begin(), resp.measures.end(),
                  [](const MergedMeasure& m) { return m.all_undefined(); }))
    throw AllUndefinedError("every measure is undefined");

  resp.chart = detail::build_chart(req, resp.measures, view);
  resp.chart.query = {req.dataset.empty() ? ds->name : req.dataset, view.predicates, req.group_by};
  return resp;
}

// ---------------------------------------------------------------------------
// Incremental sessions

enum class SourceOrder { ordered, random };

/// Records arrive over time and are dealt to folds as they come. A session
/// may pull records from a bound source dataset (in file order or a seeded
/// random order) or receive them directly. Not thread-safe; callers
/// serialize access per session.
class IncrementalSession {
 public:
  struct Options {
    MetricSpec metric;
    PartitionConfig partition;
    AggregationSpec aggregation;
    ChartKind chart_kind = ChartKind::bar;
    std::string statistic;
  };

  IncrementalSession(Schema schema, Options options, DatasetPtr source = nullptr,
                     SourceOrder order = SourceOrder::ordered)
      : options_(std::move(options)),
        state_(as_incremental(options_.partition)),
        source_(std::move(source)) {
    options_.partition = state_.config();
    received_.name = "incremental";
    received_.schema = std::move(schema);
    options_.metric.validate(received_.schema);
    if (source_) {
      if (source_->schema != received_.schema)
        throw ValidationError("incremental: source schema differs from session schema");
      source_order_.resize(source_->row_count());
      for (std::size_t i = 0; i < source_order_.size(); ++i) source_order_[i] = i;
      if (order == SourceOrder::random) {
        CounterRng rng(options_.partition.seed, stream::kPartialSample);
        shuffle(std::span<RowId>(source_order_), rng);
      }
    }
  }

  const Schema& schema() const { return received_.schema; }
  std::size_t arrivals() const { return state_.arrivals_seen(); }
  bool closed() const { return closed_; }
  void close() { closed_ = true; }
  const Options& options() const { return options_; }
  std::size_t source_remaining() const {
    return source_ ? source_order_.size() - source_cursor_ : 0;
  }

  void add(std::vector<Cell> values) {
    if (closed_) throw ValidationError("session is closed");
    if (values.size() != received_.schema.size())
      throw ValidationError("incremental: record has " + std::to_string(values.size()) +
                            " values, schema has " + std::to_string(received_.schema.size()));
    const RowId id = received_.rows.size();
    received_.rows.push_back({id, std::move(values)});
    state_.add(id);
  }

  /// Pulls up to `count` records from the bound source; returns how many came.
  std::size_t pull(std::size_t count) {
    if (!source_) throw ValidationError("incremental: session has no source to pull from");
    std::size_t n = 0;
    for (; n < count && source_cursor_ < source_order_.size(); ++n)
      add(source_->row(source_order_[source_cursor_++]).values);
    return n;
  }

  FoldSet folds() const { return state_.snapshot(); }

  AnalysisResponse snapshot() const {
    AnalysisResponse resp;
    const FoldSet fs = state_.snapshot();
    if (arrivals() == 0)
      resp.warnings.push_back("no records received yet; all " + std::to_string(fs.folds.size()) +
                              " folds are empty");
    resp.measures.push_back(
        merge_folds(received_, fs, options_.metric, options_.aggregation, {}));
    for (const auto& m : resp.measures) detail::measure_warnings(m, resp.warnings);

    AnalysisRequest req;
    req.metrics = {options_.metric};
    req.chart_kind = options_.chart_kind;
    req.statistic = options_.statistic;
    // non-owning handle; the view does not outlive this call
    auto ptr = std::shared_ptr<const Dataset>(std::shared_ptr<const Dataset>{}, &received_);
    resp.chart = detail::build_chart(req, resp.measures, full_view(ptr));
    resp.chart.query.dataset = "incremental";
    return resp;
  }

 private:
  static PartitionConfig as_incremental(PartitionConfig c) {
    c.mode = PartitionMode::incremental;
    return c;
  }

  Options options_;
  IncrementalPartitionState state_;
  Dataset received_;
  DatasetPtr source_;
  std::vector<RowId> source_order_;
  std::size_t source_cursor_ = 0;
  bool closed_ = false;
};

}  // namespace ir
