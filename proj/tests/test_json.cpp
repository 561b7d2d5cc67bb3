#include <gtest/gtest.h>

#include "ir/json.hpp"

using namespace ir;

namespace {
Schema schema() {
  return {{"x", ColumnKind::number}, {"g", ColumnKind::category}, {"b", ColumnKind::boolean},
          {"c", ColumnKind::boolean}, {"k", ColumnKind::integer}};
}
}  // namespace

TEST(Json, FoldSetShape) {
  FoldSet fs;
  fs.config.seed = 9;
  fs.n_effective = 2;
  fs.folds = {{0, {3, 1}}, {1, {2}}};
  json j = to_json(fs);
  EXPECT_EQ(j.dump(), R"({"folds":[[3,1],[2]],"mode":"disjoint","n_effective":2,"seed":9})");
}

TEST(Json, FoldStatsExplicitNullAndReasons) {
  FoldStats s;
  s.values["slope"] = 2.0;
  s.set_undefined("r2", "insufficient points");
  json j = to_json(s);
  EXPECT_TRUE(j.at("values").at("r2").is_null());
  EXPECT_EQ(j.at("values").at("slope"), 2.0);
  EXPECT_EQ(j.at("reasons").at("r2"), "insufficient points");
}

TEST(Json, MergedMeasureKeys) {
  MergedMeasure m;
  m.group_key = {{"g", Cell{std::string("a")}}};
  m.aggregates["significant"] = true;
  m.vote_detail["significant"].boolean = true;
  m.vote_detail["significant"].majority = true;
  json j = to_json(m);
  for (auto k : {"group_key", "aggregates", "folds", "vote_detail", "provenance"}) EXPECT_TRUE(j.contains(k)) << k;
  EXPECT_EQ(j.at("group_key")[0].at("value"), "a");
  EXPECT_EQ(j.at("vote_detail").at("significant").at("majority"), true);
}

TEST(Json, PartitionConfigRoundTrip) {
  json in = {{"n", 7}, {"min_fold_size", 2}, {"mode", "partial"}, {"fraction", 0.5}, {"seed", 11}};
  auto c = partition_config_from_json(in);
  EXPECT_EQ(c.n_requested, 7u);
  EXPECT_EQ(c.mode, PartitionMode::partial);
  EXPECT_EQ(partition_config_from_json(to_json(c)), c);
  EXPECT_EQ(partition_config_from_json(json()).n_requested, kDefaultFolds);
  EXPECT_THROW(partition_config_from_json({{"mode", "zigzag"}}), ValidationError);
  EXPECT_THROW(partition_config_from_json({{"n", -1}}), ValidationError);
  EXPECT_THROW(partition_config_from_json({{"n", "five"}}), ValidationError);
}

TEST(Json, FiltersParseAndValidate) {
  auto f = predicates_from_json(json::parse(R"([{"column":"x","op":"between","values":[1,2]},
                                               {"column":"g","op":"in","values":["a","b"]},
                                               {"column":"b","op":"eq","value":true}])"),
                                schema());
  ASSERT_EQ(f.size(), 3u);
  EXPECT_EQ(f[0].op, FilterOp::between);
  EXPECT_EQ(to_json(f[1]).at("values").size(), 2u);
  EXPECT_THROW(predicates_from_json(json::parse(R"([{"column":"zz","op":"eq","value":1}])"), schema()),
               ValidationError);
  EXPECT_THROW(predicates_from_json(json::parse(R"([{"column":"x","op":"eq","value":"a"}])"), schema()),
               ValidationError);
  EXPECT_THROW(predicates_from_json(json::parse(R"([{"column":"x","op":"like","value":1}])"), schema()),
               ValidationError);
}

TEST(Json, MetricSpecs) {
  auto m = metric_specs_from_json(json::parse(R"({"kind":"proportion","column":"g","target":"a"})"), schema());
  ASSERT_EQ(m.size(), 1u);
  EXPECT_EQ(m[0].target, Cell{std::string("a")});
  auto star = metric_specs_from_json(json::parse(R"({"kind":"binary_association","feature":"*","outcome":"c"})"),
                                     schema());
  ASSERT_EQ(star.size(), 1u);
  EXPECT_EQ(star[0].feature, "b");
  auto arr = metric_specs_from_json(
      json::parse(R"({"kind":"binary_association","feature":["b","k"],"outcome":"c","alpha":0.01})"), schema());
  EXPECT_EQ(arr.size(), 2u);
  EXPECT_EQ(arr[1].alpha, 0.01);
  EXPECT_THROW(metric_specs_from_json(json::parse(R"({"kind":"median","column":"x"})"), schema()),
               ValidationError);
  EXPECT_THROW(metric_specs_from_json(json::parse(R"({"kind":"mean","column":"g"})"), schema()), ValidationError);
  EXPECT_THROW(metric_specs_from_json(json::parse(R"({"kind":"mean"})"), schema()), ValidationError);
}

TEST(Json, AggregationSpec) {
  auto a = aggregation_spec_from_json(
      json::parse(R"({"strategies":{"proportion":"mean"},"default_labels":{"significant":true}})"));
  EXPECT_EQ(a.strategy_for("proportion"), Strategy::mean);
  EXPECT_EQ(a.default_labels.at("significant"), StatValue{true});
  EXPECT_EQ(aggregation_spec_from_json("defaults"), AggregationSpec{});
  EXPECT_EQ(aggregation_spec_from_json(to_json(a)), a);
  EXPECT_THROW(aggregation_spec_from_json(json::parse(R"({"strategies":{"x":"median"}})")), ValidationError);
}

TEST(Json, SchemaForms) {
  auto h = schema_hint_from_json(json::parse(R"({"a":"integer","b":"timestamp"})"));
  EXPECT_EQ(h.at("a"), ColumnKind::integer);
  auto s = schema_from_json(json::parse(R"([{"name":"y","kind":"number"},{"name":"x","kind":"number"}])"));
  EXPECT_EQ(s[0].name, "y");
  EXPECT_THROW(schema_hint_from_json(json::parse(R"({"a":"float"})")), ValidationError);
  EXPECT_THROW(schema_from_json(json::array()), ValidationError);
}

TEST(Json, CellsByKind) {
  EXPECT_EQ(cell_from_json(3, ColumnKind::number, "x"), Cell{3.0});
  EXPECT_EQ(cell_from_json(3, ColumnKind::integer, "x"), Cell{std::int64_t{3}});
  EXPECT_EQ(cell_from_json("1970-01-02", ColumnKind::timestamp, "t"), Cell{std::int64_t{86400}});
  EXPECT_TRUE(is_missing(cell_from_json(nullptr, ColumnKind::boolean, "b")));
  EXPECT_THROW(cell_from_json("yes", ColumnKind::boolean, "b"), ValidationError);
  EXPECT_THROW(cell_from_json(1.5, ColumnKind::integer, "k"), ValidationError);
}

TEST(Json, GeneratorSpec) {
  auto g = generator_spec_from_json(json::parse(R"({"kind":"noisy_linear","rows":50,"x_range":[1,3],"seed":4})"));
  EXPECT_EQ(g.size, 50u);
  EXPECT_EQ(g.x_min, 1);
  EXPECT_EQ(g.x_max, 3);
  EXPECT_THROW(generator_spec_from_json(json::parse(R"({"kind":"gaussian"})")), ValidationError);
}

TEST(Json, SortedKeysMakeEqualValuesEqualBytes) {
  json a = {{"b", 1}, {"a", 2}};
  json b = {{"a", 2}, {"b", 1}};
  EXPECT_EQ(a.dump(), b.dump());
  EXPECT_EQ(a.dump(), R"({"a":2,"b":1})");
}
