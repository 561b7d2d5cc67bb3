#pragma once

// JSON wire formats. Objects serialize with sorted keys (nlohmann::json's
// default std::map storage), so equal values always dump to equal bytes.

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ir/aggregate.hpp"
#include "ir/chartspec.hpp"
#include "ir/dataset.hpp"
#include "ir/error.hpp"
#include "ir/metrics.hpp"
#include "ir/partition.hpp"
#include "ir/synth.hpp"

namespace ir {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// helpers

namespace detail {

inline const json& require(const json& j, const char* key, const char* where) {
  if (!j.is_object() || !j.contains(key))
    throw ValidationError(std::string(where) + ": missing field '" + key + "'");
  return j.at(key);
}

inline std::string require_string(const json& j, const char* key, const char* where) {
  const json& v = require(j, key, where);
  if (!v.is_string()) throw ValidationError(std::string(where) + ": '" + key + "' must be a string");
  return v.get<std::string>();
}

template <typename T>
T get_or(const json& j, const char* key, T fallback, const char* where) {
  if (!j.is_object() || !j.contains(key) || j.at(key).is_null()) return fallback;
  const json& v = j.at(key);
  if constexpr (std::is_same_v<T, bool>) {
    if (!v.is_boolean()) throw ValidationError(std::string(where) + ": '" + key + "' must be a boolean");
  } else if constexpr (std::is_integral_v<T>) {
    if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0))
      throw ValidationError(std::string(where) + ": '" + key + "' must be a non-negative integer");
  } else if constexpr (std::is_floating_point_v<T>) {
    if (!v.is_number()) throw ValidationError(std::string(where) + ": '" + key + "' must be a number");
  } else {
    if (!v.is_string()) throw ValidationError(std::string(where) + ": '" + key + "' must be a string");
  }
  return v.get<T>();
}

}  // namespace detail

// ---------------------------------------------------------------------------
// cells and schemas

inline json cell_to_json(const Cell& c) {
  return std::visit(
      [](const auto& v) -> json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::monostate>) return nullptr;
        else return v;
      },
      c);
}

/// Reads a JSON scalar as a cell of `kind`; null is the missing marker.
inline Cell cell_from_json(const json& j, ColumnKind kind, std::string_view column) {
  auto fail = [&]() -> Cell {
    throw ValidationError("value " + j.dump() + " does not fit column '" + std::string(column) +
                          "' of kind " + std::string(to_string(kind)));
  };
  if (j.is_null()) return Cell{};
  switch (kind) {
    case ColumnKind::number:
      if (j.is_number()) return Cell{j.get<double>()};
      if (j.is_string())
        if (auto v = detail::parse_double(j.get<std::string>())) return Cell{*v};
      return fail();
    case ColumnKind::integer:
      if (j.is_number_integer()) return Cell{j.get<std::int64_t>()};
      return fail();
    case ColumnKind::timestamp:
      if (j.is_number_integer()) return Cell{j.get<std::int64_t>()};
      if (j.is_string())
        if (auto v = detail::parse_timestamp(j.get<std::string>())) return Cell{*v};
      return fail();
    case ColumnKind::category:
      if (j.is_string()) return Cell{j.get<std::string>()};
      return fail();
    case ColumnKind::boolean:
      if (j.is_boolean()) return Cell{j.get<bool>()};
      return fail();
  }
  return fail();
}

inline json schema_to_json(const Schema& schema) {
  json out = json::array();
  for (const auto& c : schema) out.push_back({{"name", c.name}, {"kind", to_string(c.kind)}});
  return out;
}

/// Accepts either {"column": "kind", ...} or [{"name": .., "kind": ..}, ...].
inline SchemaHint schema_hint_from_json(const json& j) {
  SchemaHint hint;
  auto add = [&](const std::string& name, const json& kind) {
    if (!kind.is_string()) throw ValidationError("schema: kind of '" + name + "' must be a string");
    auto k = column_kind_from_string(kind.get<std::string>());
    if (!k) throw ValidationError("schema: unknown kind '" + kind.get<std::string>() + "'");
    hint[name] = *k;
  };
  if (j.is_object()) {
    for (auto it = j.begin(); it != j.end(); ++it) add(it.key(), it.value());
  } else if (j.is_array()) {
    for (const auto& c : j) add(detail::require_string(c, "name", "schema"), detail::require(c, "kind", "schema"));
  } else if (!j.is_null()) {
    throw ValidationError("schema: expected an object mapping column to kind");
  }
  return hint;
}

inline Schema schema_from_json(const json& j) {
  Schema schema;
  if (j.is_array()) {
    for (const auto& c : j) {
      auto kind = column_kind_from_string(detail::require_string(c, "kind", "schema"));
      if (!kind) throw ValidationError("schema: unknown column kind");
      schema.push_back({detail::require_string(c, "name", "schema"), *kind});
    }
  } else {
    for (const auto& [name, kind] : schema_hint_from_json(j)) schema.push_back({name, kind});
  }
  if (schema.empty()) throw ValidationError("schema: no columns");
  return schema;
}

inline json dataset_summary(const Dataset& ds) {
  return {{"name", ds.name}, {"rows", ds.row_count()}, {"schema", schema_to_json(ds.schema)}};
}

// ---------------------------------------------------------------------------
// filters

inline json to_json(const FilterPredicate& p) {
  json j = {{"column", p.column}, {"op", to_string(p.op)}};
  if (p.operands.size() == 1 && p.op != FilterOp::in_set) {
    j["value"] = cell_to_json(p.operands.front());
  } else {
    json vs = json::array();
    for (const auto& v : p.operands) vs.push_back(cell_to_json(v));
    j["values"] = vs;
  }
  return j;
}

inline FilterPredicate predicate_from_json(const json& j, const Schema& schema) {
  FilterPredicate p;
  p.column = detail::require_string(j, "column", "filter");
  auto op = filter_op_from_string(detail::require_string(j, "op", "filter"));
  if (!op) throw ValidationError("filter: unknown op '" + j.at("op").get<std::string>() + "'");
  p.op = *op;
  const Column* col = nullptr;
  for (const auto& c : schema)
    if (c.name == p.column) col = &c;
  if (!col) throw ValidationError("filter on unknown column '" + p.column + "'");
  auto read = [&](const json& v) {
    Cell c = cell_from_json(v, col->kind, p.column);
    if (is_missing(c)) throw ValidationError("filter on '" + p.column + "': operand is null");
    p.operands.push_back(std::move(c));
  };
  if (j.contains("values")) {
    if (!j.at("values").is_array()) throw ValidationError("filter: 'values' must be an array");
    for (const auto& v : j.at("values")) read(v);
  } else {
    read(detail::require(j, "value", "filter"));
  }
  validate_predicate(schema, p);
  return p;
}

inline std::vector<FilterPredicate> predicates_from_json(const json& j, const Schema& schema) {
  std::vector<FilterPredicate> out;
  if (j.is_null()) return out;
  if (!j.is_array()) throw ValidationError("filters must be an array");
  for (const auto& f : j) out.push_back(predicate_from_json(f, schema));
  return out;
}

// ---------------------------------------------------------------------------
// partitions

inline json to_json(const PartitionConfig& c) {
  json j = {{"n", c.n_requested},
            {"min_fold_size", c.min_fold_size},
            {"mode", to_string(c.mode)},
            {"seed", c.seed}};
  if (c.mode == PartitionMode::partial) j["fraction"] = c.fraction;
  if (c.mode == PartitionMode::with_replacement) j["fold_size"] = c.fold_size;
  return j;
}

inline PartitionConfig partition_config_from_json(const json& j) {
  constexpr const char* where = "partition";
  PartitionConfig c;
  if (j.is_null()) return c;
  if (!j.is_object()) throw ValidationError("partition must be an object");
  c.n_requested = detail::get_or<std::size_t>(j, "n", c.n_requested, where);
  c.min_fold_size = detail::get_or<std::size_t>(j, "min_fold_size", c.min_fold_size, where);
  auto mode = detail::get_or<std::string>(j, "mode", "disjoint", where);
  if (auto m = partition_mode_from_string(mode)) c.mode = *m;
  else throw ValidationError("partition: unknown mode '" + mode + "'");
  c.fraction = detail::get_or<double>(j, "fraction", c.fraction, where);
  c.fold_size = detail::get_or<std::size_t>(j, "fold_size", c.fold_size, where);
  c.seed = detail::get_or<std::uint64_t>(j, "seed", c.seed, where);
  c.validate();
  return c;
}

/// {n_effective, mode, seed, folds: [[row_id, ...], ...]}
inline json to_json(const FoldSet& fs) {
  json folds = json::array();
  for (const auto& f : fs.folds) folds.push_back(f.members);
  return {{"n_effective", fs.n_effective},
          {"mode", to_string(fs.config.mode)},
          {"seed", fs.config.seed},
          {"folds", folds}};
}

// ---------------------------------------------------------------------------
// metrics

inline json stat_to_json(const StatValue& v) {
  return std::visit(
      [](const auto& x) -> json {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, std::monostate>) return nullptr;
        else return x;
      },
      v);
}

inline StatValue stat_from_json(const json& j) {
  if (j.is_null()) return std::monostate{};
  if (j.is_boolean()) return j.get<bool>();
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) return j.get<std::string>();
  throw ValidationError("statistic value must be null, boolean, number or string");
}

inline json to_json(const MetricSpec& s) {
  json j = {{"kind", to_string(s.kind)}};
  switch (s.kind) {
    case MetricKind::count: break;
    case MetricKind::proportion:
      j["column"] = s.column;
      j["target"] = cell_to_json(s.target);
      break;
    case MetricKind::mean: j["column"] = s.column; break;
    case MetricKind::linear_regression:
      j["x"] = s.x;
      j["y"] = s.y;
      break;
    case MetricKind::binary_association:
      j["feature"] = s.feature;
      j["outcome"] = s.outcome;
      j["alpha"] = s.alpha;
      break;
  }
  return j;
}

/// Parses a metric and expands binary_association over its features:
/// "feature" may be a column name, an array of names, or "*" for every
/// boolean column other than the outcome.
inline std::vector<MetricSpec> metric_specs_from_json(const json& j, const Schema& schema) {
  constexpr const char* where = "metric";
  if (!j.is_object()) throw ValidationError("metric must be an object");
  auto kind = metric_kind_from_string(detail::require_string(j, "kind", where));
  if (!kind) throw ValidationError("metric: unknown kind '" + j.at("kind").get<std::string>() + "'");
  MetricSpec s;
  s.kind = *kind;
  std::vector<MetricSpec> out;
  switch (s.kind) {
    case MetricKind::count: out.push_back(s); break;
    case MetricKind::proportion: {
      s.column = detail::require_string(j, "column", where);
      ColumnKind ck = ColumnKind::category;
      bool found = false;
      for (const auto& c : schema)
        if (c.name == s.column) ck = c.kind, found = true;
      if (!found) throw ValidationError("proportion: target column '" + s.column + "' does not exist");
      s.target = cell_from_json(detail::require(j, "target", where), ck, s.column);
      out.push_back(s);
      break;
    }
    case MetricKind::mean:
      s.column = detail::require_string(j, "column", where);
      out.push_back(s);
      break;
    case MetricKind::linear_regression:
      s.x = detail::require_string(j, "x", where);
      s.y = detail::require_string(j, "y", where);
      out.push_back(s);
      break;
    case MetricKind::binary_association: {
      s.outcome = detail::require_string(j, "outcome", where);
      s.alpha = detail::get_or<double>(j, "alpha", kDefaultAlpha, where);
      const json& f = detail::require(j, "feature", where);
      std::vector<std::string> features;
      if (f.is_string() && f.get<std::string>() == "*") {
        for (const auto& c : schema)
          if (c.kind == ColumnKind::boolean && c.name != s.outcome) features.push_back(c.name);
      } else if (f.is_string()) {
        features.push_back(f.get<std::string>());
      } else if (f.is_array()) {
        for (const auto& name : f) {
          if (!name.is_string()) throw ValidationError("metric: feature names must be strings");
          features.push_back(name.get<std::string>());
        }
      } else {
        throw ValidationError("metric: 'feature' must be a column name, an array or \"*\"");
      }
      if (features.empty()) throw ValidationError("metric: no feature columns");
      for (auto& name : features) {
        MetricSpec one = s;
        one.feature = std::move(name);
        out.push_back(std::move(one));
      }
      break;
    }
  }
  for (const auto& spec : out) spec.validate(schema);
  return out;
}

inline json to_json(const FoldStats& s) {
  json values = json::object();
  for (const auto& [k, v] : s.values) values[k] = stat_to_json(v);
  return {{"fold", s.fold_index},
          {"values", values},
          {"support_n", s.support_n},
          {"dropped_missing", s.dropped_missing},
          {"reasons", s.reasons},
          {"flags", s.flags}};
}

// ---------------------------------------------------------------------------
// aggregation

inline json to_json(const AggregationSpec& a) {
  json strategies = json::object();
  for (const auto& [k, v] : a.strategies) strategies[k] = to_string(v);
  json labels = json::object();
  for (const auto& [k, v] : a.default_labels) labels[k] = stat_to_json(v);
  return {{"strategies", strategies}, {"default_labels", labels}};
}

/// "defaults", null, or {"strategies": {stat: strategy}, "default_labels": {stat: label}}.
inline AggregationSpec aggregation_spec_from_json(const json& j) {
  AggregationSpec a;
  if (j.is_null() || (j.is_string() && j.get<std::string>() == "defaults")) return a;
  if (!j.is_object()) throw ValidationError("aggregation must be \"defaults\" or an object");
  if (j.contains("strategies")) {
    for (auto it = j.at("strategies").begin(); it != j.at("strategies").end(); ++it) {
      if (!it.value().is_string()) throw ValidationError("aggregation: strategy must be a string");
      auto s = strategy_from_string(it.value().get<std::string>());
      if (!s) throw ValidationError("aggregation: unknown strategy '" + it.value().get<std::string>() + "'");
      a.strategies[it.key()] = *s;
    }
  }
  if (j.contains("default_labels"))
    for (auto it = j.at("default_labels").begin(); it != j.at("default_labels").end(); ++it)
      a.default_labels[it.key()] = stat_from_json(it.value());
  return a;
}

inline json to_json(const VoteDetail& v) {
  json j = {{"counts", v.counts}, {"defined", v.defined}, {"n_effective", v.n_effective}};
  if (v.boolean) {
    j["unanimous"] = v.unanimous;
    j["majority"] = v.majority;
    j["at_least_one"] = v.at_least_one;
  }
  return j;
}

inline json group_key_to_json(const GroupKey& key) {
  json out = json::array();
  for (const auto& [col, v] : key) out.push_back({{"column", col}, {"value", cell_to_json(v)}});
  return out;
}

inline json to_json(const Provenance& p) {
  return {{"partition", to_json(p.partition)},
          {"metric", to_json(p.metric)},
          {"aggregation", to_json(p.aggregation)}};
}

/// {group_key, aggregates, folds, vote_detail, provenance, ...}
inline json to_json(const MergedMeasure& m) {
  json aggregates = json::object();
  for (const auto& [k, v] : m.aggregates) aggregates[k] = stat_to_json(v);
  json folds = json::array();
  for (const auto& f : m.fold_stats) folds.push_back(to_json(f));
  json votes = json::object();
  for (const auto& [k, v] : m.vote_detail) votes[k] = to_json(v);
  return {{"group_key", group_key_to_json(m.group_key)},
          {"aggregates", aggregates},
          {"reasons", m.reasons},
          {"folds", folds},
          {"n_effective", m.n_effective},
          {"vote_detail", votes},
          {"provenance", to_json(m.provenance)}};
}

// ---------------------------------------------------------------------------
// charts

inline json point_to_json(const Point2& p) { return json::array({p.x, p.y}); }

inline json channels_to_json(const Channels& c) {
  json j = json::object();
  for (const auto& [k, v] : c) j[k] = stat_to_json(v);
  return j;
}

inline json to_json(const AggregateMark& m) {
  json folds = json::array();
  for (const auto& f : m.fold_marks)
    folds.push_back({{"fold", f.fold}, {"channels", channels_to_json(f.channels)}, {"undefined", f.undefined}});
  json region = nullptr;
  if (m.unfold_region) {
    region = json::array();
    for (const auto& p : *m.unfold_region) region.push_back(point_to_json(p));
  }
  json j = {{"id", m.id},
            {"label", m.label},
            {"channels", channels_to_json(m.channels)},
            {"undefined", m.undefined},
            {"significant", m.significant},
            {"fold_marks", folds},
            {"unfold_region", region},
            {"measure", to_json(m.measure)}};
  if (m.undefined) j["reason"] = m.reason;
  return j;
}

inline json to_json(const QueryProvenance& q) {
  json filters = json::array();
  for (const auto& f : q.filters) filters.push_back(to_json(f));
  return {{"dataset", q.dataset}, {"filters", filters}, {"group_by", q.group_by}};
}

inline json to_json(const ChartSpec& c) {
  json marks = json::array();
  for (const auto& m : c.marks) marks.push_back(to_json(m));
  json j = {{"schema", kChartSchema},
            {"chart_kind", to_string(c.kind)},
            {"axes", c.axes},
            {"marks", marks},
            {"metadata", {{"omitted", c.omitted}, {"diagnostics", c.diagnostics}}},
            {"provenance", to_json(c.query)}};
  if (c.kind == ChartKind::scatter_regression) {
    json pts = json::array();
    for (const auto& p : c.points) pts.push_back(point_to_json(p));
    j["points"] = pts;
    j["x_extent"] = c.x_extent ? json::array({c.x_extent->first, c.x_extent->second}) : json(nullptr);
  }
  return j;
}

// ---------------------------------------------------------------------------
// generators

inline GeneratorSpec generator_spec_from_json(const json& j) {
  constexpr const char* where = "synth";
  GeneratorSpec s;
  auto kind = generator_kind_from_string(detail::require_string(j, "kind", where));
  if (!kind) throw ValidationError("synth: unknown kind '" + j.at("kind").get<std::string>() + "'");
  s.kind = *kind;
  s.size = detail::get_or<std::size_t>(j, "size", s.size, where);
  s.size = detail::get_or<std::size_t>(j, "rows", s.size, where);
  s.p = detail::get_or<double>(j, "p", s.p, where);
  s.slope = detail::get_or<double>(j, "slope", s.slope, where);
  s.intercept = detail::get_or<double>(j, "intercept", s.intercept, where);
  s.noise_sd = detail::get_or<double>(j, "noise_sd", s.noise_sd, where);
  if (j.contains("x_range")) {
    const json& r = j.at("x_range");
    if (!r.is_array() || r.size() != 2 || !r[0].is_number() || !r[1].is_number())
      throw ValidationError("synth: x_range must be [min, max]");
    s.x_min = r[0].get<double>();
    s.x_max = r[1].get<double>();
  }
  s.features = detail::get_or<std::size_t>(j, "features", s.features, where);
  s.outcome_p = detail::get_or<double>(j, "outcome_p", s.outcome_p, where);
  s.feature_p = detail::get_or<double>(j, "feature_p", s.feature_p, where);
  s.seed = detail::get_or<std::uint64_t>(j, "seed", s.seed, where);
  s.validate();
  return s;
}

}  // namespace ir
