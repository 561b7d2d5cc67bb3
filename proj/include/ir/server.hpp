#pragma once

// HTTP JSON service. `Service` holds the named datasets and incremental
// sessions and answers requests as (status, body) pairs; `bind_routes`
// attaches it to a cpp-httplib server.
//
//   POST /datasets?name=N            CSV body (or JSON {"name","csv","schema"})
//   GET  /datasets
//   GET  /datasets/{name}/schema
//   POST /analyze                    AnalysisRequest JSON
//   POST /analyze/incremental/start  {"metric","partition","aggregation","chart_kind",
//                                     "schema" | "dataset" [, "order"] | "synth"}
//   POST /analyze/incremental/feed   {"session", "records": [...]} or {"session", "count"}
//   POST /analyze/incremental/snapshot {"session"}
//   POST /analyze/incremental/close  {"session"}

#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string>

#include "httplib.h"

#include "ir/json.hpp"
#include "ir/pipeline.hpp"
#include "ir/synth.hpp"

namespace ir {

struct HttpResult {
  int status = 200;
  std::string body;
  double elapsed_ms = 0;
};

struct ServiceConfig {
  std::filesystem::path dataset_dir;  // empty: in-memory only
  std::chrono::seconds session_ttl{3600};
};

class NotFound : public Error {
 public:
  using Error::Error;
};

class Conflict : public Error {
 public:
  using Error::Error;
};

class Service {
 public:
  using Clock = std::chrono::steady_clock;

  explicit Service(ServiceConfig config = {}) : config_(std::move(config)) {
    if (!config_.dataset_dir.empty()) load_dataset_dir();
  }

  // -- datasets ------------------------------------------------------------

  /// Registers a dataset; fails with Conflict if the name is taken.
  DatasetPtr add_dataset(Dataset ds) {
    std::unique_lock lock(datasets_mutex_);
    if (datasets_.count(ds.name)) throw Conflict("dataset '" + ds.name + "' already exists");
    auto ptr = std::make_shared<const Dataset>(std::move(ds));
    datasets_.emplace(ptr->name, ptr);
    return ptr;
  }

  DatasetPtr find_dataset(const std::string& name) const {
    std::shared_lock lock(datasets_mutex_);
    auto it = datasets_.find(name);
    if (it == datasets_.end()) throw NotFound("no dataset named '" + name + "'");
    return it->second;
  }

  HttpResult upload_dataset(const std::string& name_param, const std::string& body,
                            const std::string& content_type) {
    return guarded([&] {
      std::string name = name_param, csv = body;
      SchemaHint hint;
      if (content_type.starts_with("application/json")) {
        json j = parse_body(body);
        name = detail::get_or<std::string>(j, "name", name, "upload");
        csv = detail::require_string(j, "csv", "upload");
        if (j.contains("schema")) hint = schema_hint_from_json(j.at("schema"));
      }
      if (name.empty()) throw ValidationError("upload: dataset name required (?name=...)");
      if (name.find_first_of("/\\") != std::string::npos || name.starts_with("."))
        throw ValidationError("upload: invalid dataset name '" + name + "'");
      {
        std::shared_lock lock(datasets_mutex_);
        if (datasets_.count(name)) throw Conflict("dataset '" + name + "' already exists");
      }
      auto ptr = add_dataset(ingest_csv_text(name, csv, hint));
      if (!config_.dataset_dir.empty()) {
        std::ofstream out(config_.dataset_dir / (name + ".csv"), std::ios::binary);
        out << csv;
        if (!hint.empty()) {
          json h = json::object();
          for (const auto& [col, kind] : hint) h[col] = to_string(kind);
          std::ofstream(config_.dataset_dir / (name + ".schema.json")) << h.dump(2);
        }
      }
      return HttpResult{201, dataset_summary(*ptr).dump()};
    });
  }

  HttpResult list_datasets() const {
    return guarded([&] {
      json out = json::array();
      std::shared_lock lock(datasets_mutex_);
      for (const auto& [name, ds] : datasets_)
        out.push_back({{"name", name}, {"rows", ds->row_count()}});
      return HttpResult{200, out.dump()};
    });
  }

  HttpResult dataset_schema(const std::string& name) const {
    return guarded([&] { return HttpResult{200, dataset_summary(*find_dataset(name)).dump()}; });
  }

  // -- analysis --------------------------------------------------------------

  HttpResult analyze(const std::string& body) const {
    return guarded([&] {
      json j = parse_body(body);
      auto ds = find_dataset(detail::require_string(j, "dataset", "request"));
      auto req = analysis_request_from_json(j, ds->schema);
      auto resp = run_analysis(ds, req);
      return HttpResult{200, to_json(resp, to_json(req)).dump()};
    });
  }

  // -- incremental sessions --------------------------------------------------

  HttpResult incremental_start(const std::string& body) {
    return guarded([&] {
      json j = parse_body(body);
      DatasetPtr source;
      Schema schema;
      SourceOrder order = SourceOrder::ordered;
      if (j.contains("synth")) {
        Dataset generated = generate(generator_spec_from_json(j.at("synth")));
        source = std::make_shared<const Dataset>(std::move(generated));
        schema = source->schema;
      } else if (j.contains("dataset")) {
        source = find_dataset(detail::require_string(j, "dataset", "start"));
        schema = source->schema;
      } else {
        schema = schema_from_json(detail::require(j, "schema", "start"));
      }
      auto order_name = detail::get_or<std::string>(j, "order", "ordered", "start");
      if (order_name == "random") order = SourceOrder::random;
      else if (order_name != "ordered") throw ValidationError("start: order must be ordered or random");

      auto metrics = metric_specs_from_json(detail::require(j, "metric", "start"), schema);
      if (metrics.size() != 1)
        throw ValidationError("start: an incremental session takes exactly one metric");
      IncrementalSession::Options opts;
      opts.metric = metrics.front();
      opts.partition = partition_config_from_json(j.contains("partition") ? j.at("partition") : json());
      opts.aggregation = aggregation_spec_from_json(j.contains("aggregation") ? j.at("aggregation") : json());
      opts.chart_kind = default_chart_kind(opts.metric.kind);
      if (j.contains("chart_kind")) {
        auto k = chart_kind_from_string(detail::require_string(j, "chart_kind", "start"));
        if (!k) throw ValidationError("start: unknown chart_kind");
        opts.chart_kind = *k;
      }
      opts.statistic = detail::get_or<std::string>(j, "statistic", "", "start");

      auto entry = std::make_shared<SessionEntry>(
          IncrementalSession(std::move(schema), std::move(opts), std::move(source), order));
      std::string id;
      {
        std::lock_guard lock(sessions_mutex_);
        expire_sessions_locked();
        id = "s" + std::to_string(++session_counter_);
        entry->last_used = Clock::now();
        sessions_.emplace(id, entry);
      }
      return HttpResult{201, json{{"session", id},
                                  {"partition", to_json(entry->session.options().partition)},
                                  {"schema", schema_to_json(entry->session.schema())}}
                                 .dump()};
    });
  }

  HttpResult incremental_feed(const std::string& body) {
    return guarded([&] {
      json j = parse_body(body);
      auto entry = session(detail::require_string(j, "session", "feed"));
      std::lock_guard lock(entry->mutex);
      if (entry->session.closed()) throw Conflict("session is closed");
      std::size_t added = 0;
      if (j.contains("records")) {
        const json& recs = j.at("records");
        if (!recs.is_array()) throw ValidationError("feed: records must be an array");
        const Schema& schema = entry->session.schema();
        std::vector<std::vector<Cell>> rows;
        for (const auto& r : recs) rows.push_back(record_from_json(r, schema));
        for (auto& r : rows) entry->session.add(std::move(r));
        added = rows.size();
      } else {
        added = entry->session.pull(detail::get_or<std::size_t>(j, "count", 0, "feed"));
      }
      return HttpResult{200, json{{"added", added},
                                  {"arrivals", entry->session.arrivals()},
                                  {"source_remaining", entry->session.source_remaining()}}
                                 .dump()};
    });
  }

  HttpResult incremental_snapshot(const std::string& body) {
    return guarded([&] {
      json j = parse_body(body);
      auto entry = session(detail::require_string(j, "session", "snapshot"));
      std::lock_guard lock(entry->mutex);
      auto resp = entry->session.snapshot();
      json provenance = {{"partition", to_json(entry->session.options().partition)},
                         {"metric", to_json(entry->session.options().metric)},
                         {"aggregation", to_json(entry->session.options().aggregation)},
                         {"arrivals", entry->session.arrivals()}};
      return HttpResult{200, to_json(resp, provenance).dump()};
    });
  }

  HttpResult incremental_close(const std::string& body) {
    return guarded([&] {
      json j = parse_body(body);
      auto entry = session(detail::require_string(j, "session", "close"));
      std::lock_guard lock(entry->mutex);
      entry->session.close();
      return HttpResult{200, json{{"closed", true}, {"arrivals", entry->session.arrivals()}}.dump()};
    });
  }

  std::size_t session_count() const {
    std::lock_guard lock(sessions_mutex_);
    return sessions_.size();
  }

  /// Drops sessions idle for longer than the TTL, measured against `now`.
  void expire_sessions(Clock::time_point now = Clock::now()) {
    std::lock_guard lock(sessions_mutex_);
    expire_sessions_locked(now);
  }

 private:
  struct SessionEntry {
    explicit SessionEntry(IncrementalSession s) : session(std::move(s)) {}
    std::mutex mutex;
    IncrementalSession session;
    Clock::time_point last_used;
  };

  static json parse_body(const std::string& body) {
    try {
      return json::parse(body);
    } catch (const json::parse_error& e) {
      throw ValidationError(std::string("malformed JSON body: ") + e.what());
    }
  }

  static std::vector<Cell> record_from_json(const json& r, const Schema& schema) {
    std::vector<Cell> values;
    values.reserve(schema.size());
    if (r.is_array()) {
      if (r.size() != schema.size())
        throw ValidationError("feed: record array length does not match the schema");
      for (std::size_t c = 0; c < schema.size(); ++c)
        values.push_back(cell_from_json(r[c], schema[c].kind, schema[c].name));
    } else if (r.is_object()) {
      for (const auto& col : schema)
        values.push_back(cell_from_json(r.contains(col.name) ? r.at(col.name) : json(nullptr),
                                        col.kind, col.name));
    } else {
      throw ValidationError("feed: each record must be an array or an object");
    }
    return values;
  }

  std::shared_ptr<SessionEntry> session(const std::string& id) {
    std::lock_guard lock(sessions_mutex_);
    expire_sessions_locked();
    auto it = sessions_.find(id);
    if (it == sessions_.end()) throw NotFound("no session '" + id + "'");
    it->second->last_used = Clock::now();
    return it->second;
  }

  void expire_sessions_locked(Clock::time_point now = Clock::now()) {
    for (auto it = sessions_.begin(); it != sessions_.end();) {
      if (now - it->second->last_used > config_.session_ttl) it = sessions_.erase(it);
      else ++it;
    }
  }

  void load_dataset_dir() {
    namespace fs = std::filesystem;
    fs::create_directories(config_.dataset_dir);
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(config_.dataset_dir))
      if (e.is_regular_file() && e.path().extension() == ".csv") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& path : files) {
      SchemaHint hint;
      auto hint_path = path;
      hint_path.replace_extension(".schema.json");
      if (fs::exists(hint_path)) {
        std::ifstream in(hint_path);
        hint = schema_hint_from_json(json::parse(in));
      }
      add_dataset(ingest_csv(path.string(), hint, path.stem().string()));
    }
  }

  template <typename F>
  static HttpResult guarded(F&& f) {
    const auto start = Clock::now();
    HttpResult r;
    auto error = [&](int status, const std::string& msg, json extra = json::object()) {
      extra["error"] = msg;
      r = {status, extra.dump()};
    };
    try {
      r = f();
    } catch (const IngestError& e) {
      json extra = json::object();
      if (e.line()) extra["line"] = e.line();
      if (!e.column().empty()) extra["column"] = e.column();
      error(400, e.what(), extra);
    } catch (const ValidationError& e) {
      error(400, e.what());
    } catch (const NotFound& e) {
      error(404, e.what());
    } catch (const Conflict& e) {
      error(409, e.what());
    } catch (const AllUndefinedError& e) {
      error(422, e.what());
    } catch (const json::exception& e) {
      error(400, e.what());
    } catch (const std::exception& e) {
      error(500, e.what());
    }
    r.elapsed_ms = std::chrono::duration<double, std::milli>(Clock::now() - start).count();
    return r;
  }

  ServiceConfig config_;
  mutable std::shared_mutex datasets_mutex_;
  std::map<std::string, DatasetPtr> datasets_;
  mutable std::mutex sessions_mutex_;
  std::map<std::string, std::shared_ptr<SessionEntry>> sessions_;
  std::uint64_t session_counter_ = 0;
};

inline void bind_routes(httplib::Server& server, Service& service) {
  auto reply = [](httplib::Response& res, const HttpResult& r) {
    res.status = r.status;
    res.set_header("X-IR-Elapsed-Ms", std::to_string(r.elapsed_ms));
    res.set_content(r.body, "application/json");
  };
  server.Post("/datasets", [&service, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, service.upload_dataset(req.get_param_value("name"), req.body,
                                      req.get_header_value("Content-Type")));
  });
  server.Get("/datasets", [&service, reply](const httplib::Request&, httplib::Response& res) {
    reply(res, service.list_datasets());
  });
  server.Get(R"(/datasets/([^/]+)/schema)",
             [&service, reply](const httplib::Request& req, httplib::Response& res) {
               reply(res, service.dataset_schema(req.matches[1]));
             });
  server.Post("/analyze", [&service, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, service.analyze(req.body));
  });
  server.Post("/analyze/incremental/start",
              [&service, reply](const httplib::Request& req, httplib::Response& res) {
                reply(res, service.incremental_start(req.body));
              });
  server.Post("/analyze/incremental/feed",
              [&service, reply](const httplib::Request& req, httplib::Response& res) {
                reply(res, service.incremental_feed(req.body));
              });
  server.Post("/analyze/incremental/snapshot",
              [&service, reply](const httplib::Request& req, httplib::Response& res) {
                reply(res, service.incremental_snapshot(req.body));
              });
  server.Post("/analyze/incremental/close",
              [&service, reply](const httplib::Request& req, httplib::Response& res) {
                reply(res, service.incremental_close(req.body));
              });
}

}  // namespace ir
