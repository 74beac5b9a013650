/**
 * @file service.hpp
 * @brief Live elicitation sessions over HTTP.
 *
 * Endpoints (JSON bodies):
 *
 *     POST /sessions                  {"instance": {...} | "instance_path": "...", "config": {...}}
 *     GET  /sessions/{id}/query       pending query, "computing", or the recommendation
 *     POST /sessions/{id}/answer      {"query_index": k, "answer": 0|1}
 *     GET  /sessions/{id}/trace       per-query history
 *     GET  /sessions/{id}/diagnostics posterior mean and MMER trend (only when enabled)
 *     GET  /healthz
 *
 * MMER computations run on a background thread per session. A request
 * waits up to ServiceOptions::sync_wait for the result and otherwise
 * answers with status "computing"; clients poll the query endpoint.
 *
 * Each session is persisted as an append-only JSON-lines event log
 * (created, query_issued, answered, finished, failed) in the data
 * directory. Events carry the full posterior, so a restarted service
 * resumes every session without re-solving anything already solved.
 */

#ifndef PREFEL_SERVICE_HPP
#define PREFEL_SERVICE_HPP

#include <chrono>
#include <condition_variable>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "json.hpp"
#include "prefel/elicitation.hpp"
#include "prefel/instance_io.hpp"
#include "prefel/milp/factory.hpp"

// After Eigen: httplib pulls in <resolv.h>, whose _res macro breaks Eigen.
#include "httplib.h"

namespace prefel {

using nlohmann::json;

struct ServiceOptions {
  std::filesystem::path data_dir = "sessions";
  std::string backend = "bnb";
  double time_limit_seconds = 60.0;
  std::chrono::milliseconds sync_wait{5000};
  bool diagnostics = false;
};

struct Reply {
  int status = 200;
  json body;
};

inline json config_to_json(const SessionConfig& c) {
  return {{"sample_size", c.sample_size},
          {"cluster_count", c.cluster_count},
          {"max_queries", c.max_queries},
          {"stop_fraction", c.stop_fraction},
          {"sigma_model", c.sigma_model},
          {"seed", c.seed},
          {"prior_mean", c.prior_mean},
          {"prior_variance", c.prior_variance},
          {"update_draws", c.update.draws},
          {"time_limit_seconds", c.mmer.time_limit_seconds}};
}

/// Missing keys keep their defaults; wrong types throw json::exception.
inline SessionConfig config_from_json(const json& j, SessionConfig base = {}) {
  if (!j.is_object()) throw ContractError("config must be an object");
  auto read = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  read("sample_size", base.sample_size);
  read("cluster_count", base.cluster_count);
  read("max_queries", base.max_queries);
  read("stop_fraction", base.stop_fraction);
  read("sigma_model", base.sigma_model);
  read("seed", base.seed);
  read("prior_mean", base.prior_mean);
  read("prior_variance", base.prior_variance);
  read("update_draws", base.update.draws);
  read("time_limit_seconds", base.mmer.time_limit_seconds);
  base.validate();
  return base;
}

class SessionService {
 public:
  explicit SessionService(ServiceOptions options) : opt_(std::move(options)) {
    std::filesystem::create_directories(opt_.data_dir);
    for (const auto& entry : std::filesystem::directory_iterator(opt_.data_dir)) {
      if (entry.path().extension() != ".jsonl") continue;
      try {
        restore(entry.path());
      } catch (const std::exception& e) {
        skipped_.push_back(entry.path().filename().string() + ": " + e.what());
      }
    }
  }

  SessionService(const SessionService&) = delete;
  SessionService& operator=(const SessionService&) = delete;

  ~SessionService() {
    std::vector<std::shared_ptr<Live>> all;
    {
      std::lock_guard lock(registry_mutex_);
      for (auto& [id, s] : sessions_) all.push_back(s);
    }
    for (auto& s : all) {
      if (s->worker.joinable()) s->worker.join();
    }
  }

  Reply create(const json& body) {
    if (!body.is_object()) return error(400, "body must be a JSON object");
    std::optional<ProblemInstance> instance;
    SessionConfig config;
    try {
      if (body.contains("instance")) {
        instance = instance_from_json(body.at("instance"));
      } else if (body.contains("instance_path")) {
        instance = load_instance(body.at("instance_path").get<std::string>());
      } else {
        return error(400, "need 'instance' or 'instance_path'");
      }
      SessionConfig base;
      base.mmer.time_limit_seconds = opt_.time_limit_seconds;
      config = config_from_json(body.value("config", json::object()), base);
    } catch (const std::exception& e) {
      return error(400, e.what());
    }

    auto s = std::make_shared<Live>(new_id(), std::move(*instance), config);
    s->log_path = opt_.data_dir / (s->id + ".jsonl");
    s->state = SessionState::initial(s->instance.criteria(), config);
    append(*s, {{"event", "created"},
                {"instance", instance_to_json(s->instance)},
                {"config", config_to_json(config)}});
    {
      std::lock_guard lock(registry_mutex_);
      sessions_.emplace(s->id, s);
    }
    std::unique_lock lock(s->mutex);
    start_computation(s, lock);
    wait_for_result(*s, lock);
    Reply r = query_payload(*s);
    if (r.status == 200) r.status = s->computing ? 202 : 201;
    return r;
  }

  Reply query(const std::string& id) {
    auto s = find(id);
    if (!s) return error(404, "unknown session " + id);
    std::unique_lock lock(s->mutex);
    return query_payload(*s);
  }

  Reply answer(const std::string& id, const json& body) {
    auto s = find(id);
    if (!s) return error(404, "unknown session " + id);
    if (!body.is_object() || !body.contains("answer") || !body.at("answer").is_number_integer()) {
      return error(400, "body needs an integer 'answer'");
    }
    const auto a = body.at("answer").get<long long>();
    if (a != 0 && a != 1) return error(400, "answer must be 0 or 1");
    std::unique_lock lock(s->mutex);
    if (s->state.finished) return error(409, "session already finished");
    if (s->computing || !s->state.pending) return error(409, "no query is awaiting an answer; fetch the query again");
    const int expected = s->state.pending->query_index;
    if (body.contains("query_index") &&
        (!body.at("query_index").is_number_integer() || body.at("query_index").get<int>() != expected)) {
      return error(409, "query " + std::to_string(expected) + " is the one awaiting an answer");
    }
    try {
      incorporate_answer(s->state, static_cast<int>(a), s->instance, s->config);
    } catch (const std::exception& e) {
      return error(500, std::string("belief update failed: ") + e.what());
    }
    append(*s, {{"event", "answered"},
                {"query_index", expected},
                {"answer", a},
                {"posterior_mean", s->state.posterior.mean_vector()},
                {"posterior_covariance", s->state.posterior.covariance_vector()}});
    start_computation(s, lock);
    wait_for_result(*s, lock);
    Reply r = query_payload(*s);
    if (r.status == 200 && s->computing) r.status = 202;
    return r;
  }

  Reply trace(const std::string& id) {
    auto s = find(id);
    if (!s) return error(404, "unknown session " + id);
    std::unique_lock lock(s->mutex);
    json j = trace_json(s->state);
    j["session_id"] = s->id;
    j["status"] = status_of(*s);
    return {200, j};
  }

  Reply diagnostics(const std::string& id) {
    if (!opt_.diagnostics) return error(404, "diagnostics are disabled");
    auto s = find(id);
    if (!s) return error(404, "unknown session " + id);
    std::unique_lock lock(s->mutex);
    json mmer = json::array();
    for (const auto& r : s->state.reports) mmer.push_back(r.value);
    return {200,
            {{"session_id", s->id},
             {"posterior_mean", s->state.posterior.mean_vector()},
             {"normalized_mean", normalized_mean(s->state)},
             {"mmer", mmer},
             {"query_count", s->state.query_count}}};
  }

  /// Blocks until the session has no computation in flight.
  void wait_idle(const std::string& id) {
    auto s = find(id);
    if (!s) return;
    std::unique_lock lock(s->mutex);
    s->done.wait(lock, [&] { return !s->computing; });
  }

  [[nodiscard]] std::vector<std::string> session_ids() const {
    std::lock_guard lock(registry_mutex_);
    std::vector<std::string> ids;
    for (const auto& [id, s] : sessions_) ids.push_back(id);
    return ids;
  }

  /// Event logs that could not be restored, with the reason.
  [[nodiscard]] const std::vector<std::string>& skipped_logs() const { return skipped_; }

  /// Posterior parameters, for persistence checks.
  [[nodiscard]] std::optional<GaussianState> posterior(const std::string& id) {
    auto s = find(id);
    if (!s) return std::nullopt;
    std::unique_lock lock(s->mutex);
    return s->state.posterior;
  }

 private:
  struct Live {
    Live(std::string id_, ProblemInstance inst, SessionConfig cfg)
        : id(std::move(id_)), instance(std::move(inst)), config(cfg) {}
    std::string id;
    ProblemInstance instance;
    SessionConfig config;
    SessionState state{GaussianState::isotropic(1, 0.0, 1.0)};
    std::filesystem::path log_path;
    std::mutex mutex;
    std::condition_variable done;
    bool computing = false;
    std::optional<std::string> failure;
    std::thread worker;
  };

  static Reply error(int status, const std::string& message) { return {status, {{"error", message}}}; }

  static std::string status_of(const Live& s) {
    if (s.failure) return "failed";
    if (s.computing) return "computing";
    return s.state.finished ? "finished" : "ready";
  }

  static json normalized_mean(const SessionState& st) {
    const auto w = WeightVector::project(st.posterior.mean_vector());
    return w ? json(w->components()) : json(nullptr);
  }

  Reply query_payload(const Live& s) const {
    json j{{"session_id", s.id},
           {"status", status_of(s)},
           {"finished", s.state.finished},
           {"query_count", s.state.query_count},
           {"criteria_names", s.instance.criteria_names()}};
    if (s.failure) {
      j["error"] = *s.failure;
      return {500, j};
    }
    if (s.state.pending) {
      const auto& q = *s.state.pending;
      j["query_index"] = q.query_index;
      j["mmer"] = q.mmer;
      j["x"] = {{"performance", q.x.performance()}};
      j["y"] = {{"performance", q.y.performance()}};
    }
    if (s.state.finished) {
      j["mmer"] = s.state.reports.back().value;
      j["recommendation"] = solution_json(*s.state.recommendation);
    }
    return {200, j};
  }

  std::shared_ptr<Live> find(const std::string& id) const {
    std::lock_guard lock(registry_mutex_);
    auto it = sessions_.find(id);
    return it == sessions_.end() ? nullptr : it->second;
  }

  std::string new_id() {
    std::lock_guard lock(registry_mutex_);
    std::uniform_int_distribution<std::uint64_t> d;
    while (true) {
      char buf[17];
      std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(d(id_rng_)));
      if (!sessions_.contains(buf)) return buf;
    }
  }

  static void append(const Live& s, const json& event) {
    std::ofstream f(s.log_path, std::ios::app);
    f << event.dump() << '\n';
    f.flush();
    if (!f) throw std::ios_base::failure("cannot append to " + s.log_path.string());
  }

  // Caller holds the session lock.
  void start_computation(const std::shared_ptr<Live>& s, std::unique_lock<std::mutex>&) {
    if (s->worker.joinable()) s->worker.join();  // previous run has already signalled completion
    s->computing = true;
    s->failure.reset();
    const std::string backend_name = opt_.backend;
    s->worker = std::thread([s, backend_name] {
      std::unique_lock lock(s->mutex);
      SessionState work = s->state;
      lock.unlock();
      std::optional<std::string> failure;
      try {
        auto backend = milp::make_backend(backend_name);
        select_query(work, s->instance, s->config, *backend);
      } catch (const std::exception& e) {
        failure = e.what();
      }
      lock.lock();
      try {
        if (failure) {
          s->failure = failure;
          append(*s, {{"event", "failed"}, {"error", *failure}});
        } else {
          s->state = std::move(work);
          const RegretReport& r = s->state.reports.back();
          if (s->state.finished) {
            append(*s, {{"event", "finished"},
                        {"mmer", r.value},
                        {"x", r.argmin_solution.decision()},
                        {"y", r.best_challenger.decision()}});
          } else {
            append(*s, {{"event", "query_issued"},
                        {"query_index", s->state.pending->query_index},
                        {"mmer", r.value},
                        {"x", r.argmin_solution.decision()},
                        {"y", r.best_challenger.decision()}});
          }
        }
      } catch (const std::exception& e) {
        s->failure = std::string("persistence failed: ") + e.what();
      }
      s->computing = false;
      s->done.notify_all();
    });
  }

  void wait_for_result(Live& s, std::unique_lock<std::mutex>& lock) const {
    s.done.wait_for(lock, opt_.sync_wait, [&] { return !s.computing; });
  }

  // Rebuilds a session from its event log.
  void restore(const std::filesystem::path& path) {
    std::ifstream f(path);
    std::string line;
    std::shared_ptr<Live> s;
    bool awaiting_computation = false;
    while (std::getline(f, line)) {
      if (line.empty()) continue;
      const json e = json::parse(line);
      const std::string kind = e.at("event");
      if (kind == "created") {
        s = std::make_shared<Live>(path.stem().string(), instance_from_json(e.at("instance")),
                                   config_from_json(e.at("config")));
        s->log_path = path;
        s->state = SessionState::initial(s->instance.criteria(), s->config);
        awaiting_computation = true;
        continue;
      }
      if (!s) throw InstanceFormatError("event log " + path.string() + " does not start with 'created'");
      auto& st = s->state;
      if (kind == "query_issued" || kind == "finished") {
        RegretReport r{e.at("mmer").get<double>(), s->instance.make_solution(e.at("x").get<std::vector<std::uint8_t>>()),
                       s->instance.make_solution(e.at("y").get<std::vector<std::uint8_t>>())};
        st.reports.push_back(r);
        st.current = r;
        ++st.iteration;
        if (!st.initial_mmer) st.initial_mmer = r.value;
        if (kind == "finished") {
          st.finished = true;
          st.recommendation = r.argmin_solution;
        } else {
          st.pending = QueryRecord{e.at("query_index").get<int>(), r.argmin_solution, r.best_challenger, r.value, -1,
                                   {}};
        }
        s->failure.reset();
        awaiting_computation = false;
      } else if (kind == "answered") {
        QueryRecord q = st.pending.value();
        q.answer = e.at("answer").get<int>();
        st.posterior = GaussianState::from_vectors(e.at("posterior_mean"), e.at("posterior_covariance"));
        q.posterior_mean = st.posterior.mean_vector();
        st.history.push_back(std::move(q));
        st.pending.reset();
        ++st.query_count;
        awaiting_computation = true;
      } else if (kind == "failed") {
        s->failure = e.at("error").get<std::string>();
        awaiting_computation = false;
      }
    }
    if (!s) return;
    {
      std::lock_guard lock(registry_mutex_);
      sessions_.emplace(s->id, s);
    }
    if (awaiting_computation) {  // the service stopped mid-computation
      std::unique_lock lock(s->mutex);
      start_computation(s, lock);
    }
  }

  ServiceOptions opt_;
  mutable std::mutex registry_mutex_;
  std::map<std::string, std::shared_ptr<Live>> sessions_;
  std::vector<std::string> skipped_;
  std::mt19937_64 id_rng_{std::random_device{}()};
};

/// Routes the REST API onto an httplib server.
inline void mount(httplib::Server& server, SessionService& service) {
  auto send = [](httplib::Response& res, const Reply& r) {
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
  };
  auto parse = [](const httplib::Request& req) -> std::optional<json> {
    try {
      return json::parse(req.body.empty() ? "{}" : req.body);
    } catch (const json::parse_error&) {
      return std::nullopt;
    }
  };
  server.Get("/healthz", [send](const httplib::Request&, httplib::Response& res) { send(res, {200, {{"status", "ok"}}}); });
  server.Post("/sessions", [&service, send, parse](const httplib::Request& req, httplib::Response& res) {
    auto body = parse(req);
    send(res, body ? service.create(*body) : Reply{400, {{"error", "malformed JSON"}}});
  });
  server.Get(R"(/sessions/([0-9a-f]+)/query)", [&service, send](const httplib::Request& req, httplib::Response& res) {
    send(res, service.query(req.matches[1]));
  });
  server.Post(R"(/sessions/([0-9a-f]+)/answer)",
              [&service, send, parse](const httplib::Request& req, httplib::Response& res) {
                auto body = parse(req);
                send(res, body ? service.answer(req.matches[1], *body) : Reply{400, {{"error", "malformed JSON"}}});
              });
  server.Get(R"(/sessions/([0-9a-f]+)/trace)", [&service, send](const httplib::Request& req, httplib::Response& res) {
    send(res, service.trace(req.matches[1]));
  });
  server.Get(R"(/sessions/([0-9a-f]+)/diagnostics)",
             [&service, send](const httplib::Request& req, httplib::Response& res) {
               send(res, service.diagnostics(req.matches[1]));
             });
  server.set_exception_handler([send](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    std::string what = "internal error";
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      what = e.what();
    } catch (...) {
    }
    send(res, {500, {{"error", what}}});
  });
}

}  // namespace prefel

#endif  // PREFEL_SERVICE_HPP
