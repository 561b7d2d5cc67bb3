// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails.

#include <spawn.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

#include "ir/server.hpp"
#include "oracles.hpp"
#include "partition_props.hpp"

extern char** environ;

using namespace ir;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) {
  return std::chrono::duration<double>(Clock::now() - t).count();
}

std::string fmt(double v, int prec = 4) {
  std::ostringstream o;
  o.precision(prec);
  o << v;
  return o.str();
}

// -- 1 ----------------------------------------------------------------------

std::string mixed_csv(CounterRng& rng, std::size_t rows) {
  std::string s = "g,h,k,x,y,f,o\n";
  const char* gs[] = {"red", "green", "blue"};
  for (std::size_t i = 0; i < rows; ++i) {
    auto maybe = [&](const std::string& v) { return rng.bernoulli(0.03) ? std::string() : v; };
    const double x = 10 * rng.uniform01();
    s += maybe(gs[rng.uniform_below(3)]) + ",";
    s += maybe(rng.bernoulli(0.5) ? "true" : "false") + ",";
    s += maybe(std::to_string(rng.uniform_below(4))) + ",";
    s += maybe(fmt(x, 17)) + ",";
    s += maybe(fmt(3 * x - 2 + rng.normal(), 17)) + ",";
    s += maybe(rng.bernoulli(0.4) ? "true" : "false") + ",";
    s += maybe(rng.bernoulli(0.5) ? "true" : "false") + "\n";
  }
  return s;
}

Outcome identity_criterion() {
  const auto start = Clock::now();
  CounterRng rng(1, 1);
  Service service;
  const char* metrics[] = {
      R"({"kind":"count"})",
      R"({"kind":"proportion","column":"g","target":"red"})",
      R"({"kind":"mean","column":"y"})",
      R"({"kind":"linear_regression","x":"x","y":"y"})",
      R"({"kind":"binary_association","feature":"f","outcome":"o"})"};
  const std::vector<std::vector<std::string>> groupings = {{}, {"g"}, {"h"}, {"g", "k"}, {"k"}};
  std::size_t mismatches = 0, compared = 0, requests = 0;
  std::string first_problem;

  for (int d = 0; d < 10; ++d) {
    const std::string name = "ds" + std::to_string(d);
    const std::string csv = mixed_csv(rng, 20 + rng.uniform_below(400));
    SchemaHint hint{{"k", ColumnKind::integer}};
    service.add_dataset(ingest_csv_text(name, csv, hint));
    auto ds = service.find_dataset(name);
    for (int q = 0; q < 10; ++q, ++requests) {
      json req = {{"dataset", name},
                  {"metric", json::parse(metrics[rng.uniform_below(5)])},
                  {"group_by", groupings[rng.uniform_below(groupings.size())]},
                  {"partition", {{"n", 1}, {"min_fold_size", 1 + rng.uniform_below(30)}, {"seed", rng.next()}}}};
      if (rng.bernoulli(0.5)) req["filters"] = json::array({{{"column", "x"}, {"op", "gt"}, {"value", 3 * rng.uniform01()}}});
      auto res = service.analyze(req.dump());

      auto parsed = analysis_request_from_json(req, ds->schema);
      auto view = apply_filter(ds, parsed.filters);
      auto subsets = group_measures(view, parsed.group_by);
      std::vector<json> direct;
      bool all_undefined = true;
      for (const auto& s : subsets) {
        auto stats = compute_metric(*ds, s.member_row_ids, parsed.metrics[0]);
        json values = json::object();
        for (const auto& [k, v] : stats.values) {
          values[k] = stat_to_json(v);
          all_undefined &= !is_defined(v);
        }
        direct.push_back(values);
      }
      if (res.status == 422 && all_undefined && !subsets.empty()) {
        ++compared;
        continue;
      }
      if (res.status != 200) {
        ++mismatches;
        if (first_problem.empty()) first_problem = "status " + std::to_string(res.status) + ": " + res.body;
        continue;
      }
      auto measures = json::parse(res.body).at("measures");
      if (measures.size() != direct.size()) {
        ++mismatches;
        if (first_problem.empty()) first_problem = "measure count differs";
        continue;
      }
      for (std::size_t i = 0; i < direct.size(); ++i, ++compared) {
        if (measures[i].at("aggregates") != direct[i]) {
          ++mismatches;
          if (first_problem.empty())
            first_problem = measures[i].at("aggregates").dump() + " vs " + direct[i].dump();
        }
      }
    }
  }
  const double secs = seconds_since(start);
  const bool pass = mismatches == 0 && requests >= 100 && secs < 10;
  return {pass, std::to_string(requests) + " requests, " + std::to_string(compared) + " measures, " +
                    std::to_string(mismatches) + " mismatches, " + fmt(secs, 3) + " s (limit 10 s)" +
                    (first_problem.empty() ? "" : "; first: " + first_problem)};
}

// -- 2 ----------------------------------------------------------------------

Outcome partition_criterion() {
  const auto start = Clock::now();
  CounterRng rng(2, 2);
  std::size_t cases = 0, failures = 0;
  std::string first;
  for (; cases < 2000; ++cases) {
    PartitionConfig c;
    c.n_requested = 1 + rng.uniform_below(12);
    c.min_fold_size = 1 + rng.uniform_below(40);
    c.mode = static_cast<PartitionMode>(rng.uniform_below(4));
    c.fraction = rng.bernoulli(0.1) ? 1.0 : 0.01 + 0.99 * rng.uniform01();
    c.fold_size = c.min_fold_size + rng.uniform_below(50);
    c.seed = rng.next();
    const std::size_t size = rng.uniform_below(600) + (c.mode == PartitionMode::with_replacement ? 1 : 0);
    std::vector<RowId> members(size);
    for (auto& m : members) m = rng.uniform_below(1'000'000);  // arbitrary ids; duplicates allowed
    auto fs = partition(members, c);
    auto problem = oracle::check_foldset(members, c, fs);
    if (problem.empty() && !(partition(members, c) == fs)) problem = "not deterministic";
    if (problem.empty() && c.mode == PartitionMode::incremental) {
      IncrementalPartitionState st(c);
      for (std::size_t i = 0; i < members.size() && problem.empty(); ++i) {
        st.add(members[i]);
        auto sz = st.fold_sizes();
        auto [lo, hi] = std::minmax_element(sz.begin(), sz.end());
        if (*hi - *lo > 1) problem = "incremental imbalance at arrival " + std::to_string(i);
      }
    }
    if (problem.empty() && c.n_requested == 1 && c.mode == PartitionMode::disjoint && fs.folds[0].members != members)
      problem = "n=1 not identity";
    if (!problem.empty()) {
      ++failures;
      if (first.empty()) first = "case " + std::to_string(cases) + ": " + problem;
    }
  }
  const double secs = seconds_since(start);
  return {failures == 0 && cases >= 1000 && secs < 30,
          std::to_string(cases) + " cases, " + std::to_string(failures) + " failures, " + fmt(secs, 3) +
              " s (limit 30 s)" + (first.empty() ? "" : "; first: " + first)};
}

// -- 3 ----------------------------------------------------------------------

Outcome statistics_criterion() {
  const auto start = Clock::now();
  CounterRng rng(3, 3);
  std::size_t within = 0, tables = 0;
  double worst = 0;
  std::string worst_table;
  while (tables < 50) {
    const std::uint64_t total = 20 + rng.uniform_below(21);
    std::uint64_t cells[4] = {0, 0, 0, 0};
    for (std::uint64_t i = 0; i < total; ++i) ++cells[rng.uniform_below(4)];
    ContingencyTable t;
    t.a = cells[0], t.b = cells[1], t.c = cells[2], t.d = cells[3];
    if (t.min_expected() < 5) continue;
    ++tables;
    FoldStats s;
    association_from_table(t, 0.05, s);
    const double p = *as_number(s.values.at("p_value"));
    const double oracle_p = oracle::permutation_pvalue(t.a, t.b, t.c, t.d, 100000, rng.next());
    const double dev = std::abs(p - oracle_p);
    if (dev <= 0.01) ++within;
    if (dev > worst) {
      worst = dev;
      worst_table = std::to_string(t.a) + "," + std::to_string(t.b) + "," + std::to_string(t.c) + "," +
                    std::to_string(t.d) + " (chi2 p " + fmt(p) + ", permutation p " + fmt(oracle_p) + ")";
    }
  }

  // OLS: residual orthogonality on noisy data, exact recovery on noiseless integer lines
  double worst_orth = 0;
  std::size_t exact = 0, lines = 0;
  for (int t = 0; t < 200; ++t) {
    std::vector<std::pair<double, double>> pts;
    const std::size_t n = 2 + rng.uniform_below(500);
    for (std::size_t i = 0; i < n; ++i) {
      const double x = 10 * rng.uniform01();
      pts.emplace_back(x, 2 * x + 1 + rng.normal());
    }
    auto fit = ols_fit(pts).fit;
    if (!fit) continue;
    long double sr = 0, sxr = 0;
    for (auto [x, y] : pts) {
      const long double r = y - (fit->intercept + (long double)fit->slope * x);
      sr += r;
      sxr += x * r;
    }
    worst_orth = std::max({worst_orth, double(std::abs(sr)), double(std::abs(sxr))});

    const double slope = double(std::int64_t(rng.uniform_below(41)) - 20);
    const double intercept = double(std::int64_t(rng.uniform_below(201)) - 100);
    std::vector<std::pair<double, double>> line;
    const std::size_t m = 2 + rng.uniform_below(100);
    for (std::size_t i = 0; i < m; ++i) {
      const double x = double(std::int64_t(rng.uniform_below(2001)) - 1000);
      line.emplace_back(x, slope * x + intercept);
    }
    line.emplace_back(line.front().first + 1, slope * (line.front().first + 1) + intercept);
    auto lf = ols_fit(line).fit;
    ++lines;
    if (lf && lf->slope == slope && lf->intercept == intercept) ++exact;
  }

  const double secs = seconds_since(start);
  const bool chi_ok = within == tables;
  const bool ols_ok = worst_orth <= 1e-9 && exact == lines;
  return {chi_ok && ols_ok,
          "chi-square " + std::to_string(within) + "/" + std::to_string(tables) +
              " tables within ±0.01 of a 100000-draw permutation oracle (worst deviation " + fmt(worst) + " at " +
              worst_table + "); OLS max |Σr|, |Σxr| = " + fmt(worst_orth, 3) + " (limit 1e-9), exact recovery " +
              std::to_string(exact) + "/" + std::to_string(lines) + "; " + fmt(secs, 3) + " s"};
}

// -- 4 ----------------------------------------------------------------------

Outcome type1_criterion() {
  const auto start = Clock::now();
  GeneratorSpec g;
  g.kind = GeneratorKind::null_association_table;
  g.features = 1000;
  g.size = 5000;
  g.seed = 0;
  auto ds = std::make_shared<const Dataset>(generate(g));

  auto run = [&](std::size_t n) {
    AnalysisRequest req = analysis_request_from_json(
        {{"metric", {{"kind", "binary_association"}, {"feature", "*"}, {"outcome", "outcome"}, {"alpha", 0.05}}},
         {"partition", {{"n", n}, {"seed", 0}}}},
        ds->schema);
    return run_analysis(ds, req);
  };
  auto flagged = [](const AnalysisResponse& r) {
    std::size_t k = 0;
    for (const auto& m : r.measures) k += m.aggregates.at("significant") == StatValue{true};
    return k;
  };
  auto one = run(1);
  auto five = run(5);
  const double f1 = flagged(one) / 1000.0, f5 = flagged(five) / 1000.0;

  std::size_t unanimous = 0, majority = 0, any = 0, nesting_violations = 0;
  for (const auto& m : five.measures) {
    const auto& v = m.vote_detail.at("significant");
    unanimous += v.unanimous;
    majority += v.majority;
    any += v.at_least_one;
    if ((v.unanimous && !v.majority) || (v.majority && !v.at_least_one)) ++nesting_violations;
    if (v.majority != (m.aggregates.at("significant") == StatValue{true})) ++nesting_violations;
  }
  const double secs = seconds_since(start);
  const bool pass = f1 >= 0.03 && f1 <= 0.07 && f5 <= 0.01 && nesting_violations == 0 &&
                    five.measures.size() == 1000 && five.measures[0].n_effective == 5 && secs < 120;
  return {pass, "n=1 flagged " + fmt(f1) + " (want [0.03, 0.07]); n=5 majority flagged " + fmt(f5) +
                    " (want ≤ 0.01); n=5 unanimous/majority/at-least-one = " + std::to_string(unanimous) + "/" +
                    std::to_string(majority) + "/" + std::to_string(any) + ", nesting violations " +
                    std::to_string(nesting_violations) + "; " + fmt(secs, 3) + " s (limit 120 s)"};
}

// -- 5 ----------------------------------------------------------------------

double fold_slope_sd(const AnalysisResponse& r) {
  std::vector<double> s;
  for (const auto& f : r.measures.at(0).fold_stats)
    if (auto v = as_number(f.values.at("slope"))) s.push_back(*v);
  double mean = 0;
  for (double v : s) mean += v;
  mean /= double(s.size());
  double ss = 0;
  for (double v : s) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / double(s.size() - 1));
}

Outcome spread_criterion() {
  const auto start = Clock::now();
  int decreased = 0;
  std::string detail;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    GeneratorSpec g;
    g.kind = GeneratorKind::noisy_linear;
    g.slope = 2;
    g.intercept = 1;
    g.noise_sd = 1;
    g.size = 2500;
    g.seed = seed;
    auto source = std::make_shared<const Dataset>(generate(g));
    IncrementalSession::Options o;
    o.metric = MetricSpec::linear_regression("x", "y");
    o.partition.n_requested = 5;
    o.partition.seed = seed;
    o.chart_kind = ChartKind::scatter_regression;
    IncrementalSession session(source->schema, o, source);
    session.pull(500);
    const double sd500 = fold_slope_sd(session.snapshot());
    session.pull(2000);
    const double sd2500 = fold_slope_sd(session.snapshot());
    decreased += sd2500 < sd500;
    if (!(sd2500 < sd500)) detail += " seed " + std::to_string(seed) + " (" + fmt(sd500) + " -> " + fmt(sd2500) + ")";
  }
  const double secs = seconds_since(start);
  return {decreased >= 18 && secs < 60,
          std::to_string(decreased) + "/20 seeded runs (seeds 0-19) with smaller fold-slope sd at 2500 than at 500"
              " (want ≥ 18)" + (detail.empty() ? "" : "; not decreased:" + detail) + "; " + fmt(secs, 3) +
              " s (limit 60 s)"};
}

// -- 6 ----------------------------------------------------------------------

Outcome hull_criterion() {
  CounterRng rng(6, 6);
  std::size_t failures = 0;
  std::string first;
  for (int t = 0; t < 1000; ++t) {
    const std::size_t n = 1 + rng.uniform_below(10);
    std::vector<Point2> pts;
    const auto style = rng.uniform_below(3);
    for (std::size_t i = 0; i < n; ++i) {
      if (!pts.empty() && rng.bernoulli(0.2)) {
        pts.push_back(pts[rng.uniform_below(pts.size())]);  // duplicate
      } else if (style == 0) {
        pts.push_back({rng.uniform01(), rng.uniform01()});
      } else if (style == 1) {  // small grid: many collinear triples
        pts.push_back({double(rng.uniform_below(4)), double(rng.uniform_below(4))});
      } else {  // all on one line
        const double s = double(rng.uniform_below(9));
        pts.push_back({s, 2 * s - 3});
      }
    }
    auto hull = convex_hull(pts);
    std::set<std::pair<double, double>> got;
    for (auto& p : hull) got.insert({p.x, p.y});
    std::string problem;
    if (got.size() != hull.size()) problem = "repeated vertex";
    else if (got != oracle::brute_hull_vertices(pts)) problem = "vertex set differs from brute force";
    for (auto& p : pts)
      if (problem.empty() && !oracle::brute_contains(hull, p, 1e-12)) problem = "point outside hull";
    if (problem.empty() && hull.size() >= 3)
      for (std::size_t i = 0; i < hull.size(); ++i)
        if (cross(hull[i], hull[(i + 1) % hull.size()], hull[(i + 2) % hull.size()]) <= 0)
          problem = "not strictly convex counterclockwise";
    if (!problem.empty()) {
      ++failures;
      if (first.empty()) first = "case " + std::to_string(t) + ": " + problem;
    }
  }
  return {failures == 0, "1000 random sets of 1-10 points, " + std::to_string(failures) + " failures" +
                             (first.empty() ? "" : "; first: " + first)};
}

// -- 7 ----------------------------------------------------------------------

struct ServerProcess {
  pid_t pid = -1;
  int port = 0;

  ServerProcess() {
    int fds[2];
    if (pipe(fds) != 0) return;
    posix_spawn_file_actions_t actions;
    posix_spawn_file_actions_init(&actions);
    posix_spawn_file_actions_adddup2(&actions, fds[1], STDOUT_FILENO);
    posix_spawn_file_actions_addclose(&actions, fds[0]);
    char* argv[] = {const_cast<char*>(IR_SERVER_PATH), const_cast<char*>("--listen"),
                    const_cast<char*>("127.0.0.1:0"), nullptr};
    if (posix_spawn(&pid, IR_SERVER_PATH, &actions, nullptr, argv, environ) != 0) pid = -1;
    posix_spawn_file_actions_destroy(&actions);
    close(fds[1]);
    std::string line;
    char ch;
    while (read(fds[0], &ch, 1) == 1 && ch != '\n') line += ch;
    close(fds[0]);
    auto colon = line.rfind(':');
    if (colon != std::string::npos) port = std::atoi(line.c_str() + colon + 1);
  }
  ~ServerProcess() {
    if (pid > 0) {
      kill(pid, SIGTERM);
      waitpid(pid, nullptr, 0);
    }
  }
};

Outcome restart_criterion() {
  GeneratorSpec g;
  g.kind = GeneratorKind::null_association_table;
  g.features = 20;
  g.size = 800;
  g.seed = 5;
  std::ostringstream csv;
  write_csv(csv, generate(g));
  const std::string requests[] = {
      R"({"dataset":"null","metric":{"kind":"binary_association","feature":"*","outcome":"outcome"},
          "partition":{"n":5,"seed":17}})",
      R"({"dataset":"null","group_by":["f0003"],"metric":{"kind":"proportion","column":"outcome","target":true},
          "partition":{"n":7,"min_fold_size":10,"mode":"partial","fraction":0.8,"seed":3}})"};

  std::vector<std::vector<std::string>> bodies;
  for (int instance = 0; instance < 3; ++instance) {
    ServerProcess server;
    if (server.port <= 0) return {false, "could not start ir-server (instance " + std::to_string(instance) + ")"};
    httplib::Client cli("127.0.0.1", server.port);
    cli.set_read_timeout(30, 0);
    auto up = cli.Post("/datasets?name=null", csv.str(), "text/csv");
    if (!up || up->status != 201) return {false, "upload failed on instance " + std::to_string(instance)};
    std::vector<std::string> got;
    for (const auto& r : requests) {
      auto res = cli.Post("/analyze", r, "application/json");
      if (!res || res->status != 200) return {false, "analyze failed on instance " + std::to_string(instance)};
      got.push_back(res->body);
    }
    bodies.push_back(std::move(got));
  }
  bool same = bodies[1] == bodies[0] && bodies[2] == bodies[0];
  std::size_t bytes = 0;
  for (auto& b : bodies[0]) bytes += b.size();
  return {same, std::to_string(std::size(requests)) + " /analyze requests against 3 separately started ir-server "
                "processes: bodies " + (same ? "byte-identical" : "DIFFER") + " (" + std::to_string(bytes) +
                " bytes per instance)"};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Outcome()> run;
  };
  const Criterion criteria[] = {
      {"1 n=1 identity", identity_criterion},
      {"2 partition properties", partition_criterion},
      {"3 statistical oracle", statistics_criterion},
      {"4 type-1 error reduction", type1_criterion},
      {"5 fold-spread decrease", spread_criterion},
      {"6 convex hull", hull_criterion},
      {"7 restart determinism", restart_criterion},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  [" << c.name << "] " << o.detail << std::endl;
  }
  std::cout << (std::size(criteria) - failed) << "/" << std::size(criteria) << " criteria passed" << std::endl;
  return failed ? 1 : 0;
}
