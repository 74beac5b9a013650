#include <gtest/gtest.h>

#include <atomic>
#include <filesystem>
#include <thread>

#include "prefel/service.hpp"

using namespace prefel;

namespace {

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("prefel_service_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  [[nodiscard]] const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

ServiceOptions options(const TempDir& dir) {
  ServiceOptions o;
  o.data_dir = dir.path();
  o.sync_wait = std::chrono::seconds(60);
  return o;
}

json small_request(std::uint64_t instance_seed = 3, std::uint64_t session_seed = 1) {
  const ProblemInstance inst(generate_knapsack(2, 10, instance_seed));
  return {{"instance", instance_to_json(inst)},
          {"config", {{"sample_size", 40}, {"cluster_count", 6}, {"seed", session_seed}, {"max_queries", 6}}}};
}

// Answers like a decision maker with weight w, in utility space.
int planted_answer(const json& q, const std::vector<double>& w) {
  double ux = 0.0, uy = 0.0;
  for (std::size_t k = 0; k < w.size(); ++k) {
    ux += w[k] * q["x"]["performance"][k].get<double>();
    uy += w[k] * q["y"]["performance"][k].get<double>();
  }
  return ux >= uy ? 1 : 0;
}

// Plays a session to the end and returns the final query payload.
json play(SessionService& svc, const std::string& id, json reply, const std::vector<double>& w) {
  for (int guard = 0; reply["status"] == "ready" && guard < 50; ++guard) {
    const Reply r = svc.answer(id, {{"query_index", reply["query_index"]}, {"answer", planted_answer(reply, w)}});
    EXPECT_EQ(r.status, 200) << r.body.dump();
    reply = r.body;
  }
  return reply;
}

}  // namespace

TEST(Service, CreateReturnsAQueryWithPerformanceVectorsOnly) {
  TempDir dir;
  SessionService svc(options(dir));
  const Reply r = svc.create(small_request());
  ASSERT_EQ(r.status, 201) << r.body.dump();
  const json& b = r.body;
  ASSERT_EQ(b["status"], "ready");
  EXPECT_EQ(b["query_index"], 0);
  EXPECT_EQ(b["x"]["performance"].size(), 2u);
  EXPECT_EQ(b["y"]["performance"].size(), 2u);
  EXPECT_FALSE(b["x"].contains("decision"));
  EXPECT_GT(b["mmer"].get<double>(), 0.0);
  EXPECT_TRUE(std::filesystem::exists(dir.path() / (b["session_id"].get<std::string>() + ".jsonl")));
}

TEST(Service, QueryIsIdempotent) {
  TempDir dir;
  SessionService svc(options(dir));
  const std::string id = svc.create(small_request()).body["session_id"];
  const Reply a = svc.query(id);
  const Reply b = svc.query(id);
  EXPECT_EQ(a.status, 200);
  EXPECT_EQ(a.body, b.body);
}

TEST(Service, PlantedPolicyRunsToARecommendation) {
  TempDir dir;
  SessionService svc(options(dir));
  const std::vector<double> w{0.7, 0.3};
  const Reply created = svc.create(small_request());
  const std::string id = created.body["session_id"];
  const json last = play(svc, id, created.body, w);
  ASSERT_EQ(last["status"], "finished") << last.dump();
  EXPECT_TRUE(last["finished"].get<bool>());
  EXPECT_LE(last["query_count"].get<int>(), 6);
  ASSERT_TRUE(last.contains("recommendation"));
  EXPECT_EQ(last["recommendation"]["performance"].size(), 2u);
  EXPECT_FALSE(last["recommendation"]["decision"].empty());

  const Reply t = svc.trace(id);
  ASSERT_EQ(t.status, 200);
  EXPECT_EQ(t.body["queries"].size(), last["query_count"].get<std::size_t>());
  for (const auto& q : t.body["queries"]) {
    EXPECT_EQ(q["answer"], planted_answer(q, w));
  }
}

TEST(Service, RejectsBadAnswers) {
  TempDir dir;
  SessionService svc(options(dir));
  const std::string id = svc.create(small_request()).body["session_id"];
  EXPECT_EQ(svc.answer(id, {{"query_index", 0}, {"answer", 2}}).status, 400);
  EXPECT_EQ(svc.answer(id, {{"query_index", 0}, {"answer", "yes"}}).status, 400);
  EXPECT_EQ(svc.answer(id, {{"query_index", 0}}).status, 400);
  EXPECT_EQ(svc.answer(id, {{"query_index", 5}, {"answer", 1}}).status, 409);
  EXPECT_EQ(svc.answer("0123456789abcdef", {{"answer", 1}}).status, 404);
  EXPECT_EQ(svc.query("0123456789abcdef").status, 404);
  EXPECT_EQ(svc.trace("0123456789abcdef").status, 404);
}

TEST(Service, DoubleAnswerConflicts) {
  TempDir dir;
  SessionService svc(options(dir));
  const std::string id = svc.create(small_request()).body["session_id"];
  const Reply first = svc.answer(id, {{"query_index", 0}, {"answer", 1}});
  ASSERT_EQ(first.status, 200);
  EXPECT_EQ(svc.answer(id, {{"query_index", 0}, {"answer", 1}}).status, 409);
}

TEST(Service, AnswerAfterFinishConflicts) {
  TempDir dir;
  SessionService svc(options(dir));
  const Reply created = svc.create(small_request());
  const std::string id = created.body["session_id"];
  const json last = play(svc, id, created.body, {0.5, 0.5});
  ASSERT_EQ(last["status"], "finished");
  EXPECT_EQ(svc.answer(id, {{"answer", 1}}).status, 409);
}

TEST(Service, BadCreateRequests) {
  TempDir dir;
  SessionService svc(options(dir));
  EXPECT_EQ(svc.create(json::array()).status, 400);
  EXPECT_EQ(svc.create({{"config", json::object()}}).status, 400);
  EXPECT_EQ(svc.create({{"instance", {{"type", "nope"}}}}).status, 400);
  EXPECT_EQ(svc.create({{"instance_path", (dir.path() / "missing.json").string()}}).status, 400);
  json bad_config = small_request();
  bad_config["config"]["cluster_count"] = 500;  // more clusters than sample points
  EXPECT_EQ(svc.create(bad_config).status, 400);
  bad_config = small_request();
  bad_config["config"]["sigma_model"] = "wide";
  EXPECT_EQ(svc.create(bad_config).status, 400);
}

TEST(Service, InstancePathIsAccepted) {
  TempDir dir;
  const auto path = dir.path() / "inst.json";
  save_instance(ProblemInstance(generate_allocation(2, 4, 2, 2, 5)), path.string());
  SessionService svc(options(dir));
  const Reply r = svc.create({{"instance_path", path.string()}, {"config", {{"sample_size", 30}, {"cluster_count", 5}}}});
  EXPECT_TRUE(r.status == 201) << r.body.dump();
}

TEST(Service, SingleSolutionInstanceFinishesImmediately) {
  TempDir dir;
  SessionService svc(options(dir));
  KnapsackInstance k;
  k.n = 2;
  k.p = 3;
  k.utilities = {{0.1, 0.2, 0.3}, {0.3, 0.2, 0.1}};
  k.item_weights = {5, 6, 7};
  k.capacity = 4;  // nothing fits
  const Reply r = svc.create({{"instance", instance_to_json(ProblemInstance(k))}});
  ASSERT_EQ(r.status, 201) << r.body.dump();
  EXPECT_EQ(r.body["status"], "finished");
  EXPECT_EQ(r.body["mmer"].get<double>(), 0.0);
  EXPECT_EQ(r.body["query_count"], 0);
}

TEST(Service, SlowComputationReportsComputing) {
  TempDir dir;
  ServiceOptions o = options(dir);
  o.sync_wait = std::chrono::milliseconds(0);
  SessionService svc(o);
  const Reply r = svc.create(small_request());
  const std::string id = r.body["session_id"];
  if (r.status == 202) {
    EXPECT_EQ(r.body["status"], "computing");
    EXPECT_FALSE(r.body.contains("query_index"));
    const Reply early = svc.answer(id, {{"answer", 1}});
    // Either still computing (409) or the query landed in between.
    EXPECT_TRUE(early.status == 409 || early.status == 200 || early.status == 202);
  }
  svc.wait_idle(id);
  EXPECT_EQ(svc.query(id).body["status"], "ready");
}

TEST(Service, SolverFailureIsReported) {
  TempDir dir;
  ServiceOptions o = options(dir);
  o.backend = "no-such-backend";
  SessionService svc(o);
  const Reply r = svc.create(small_request());
  EXPECT_EQ(r.status, 500);
  EXPECT_EQ(r.body["status"], "failed");
  const std::string id = r.body["session_id"];
  EXPECT_EQ(svc.query(id).status, 500);
  EXPECT_EQ(svc.answer(id, {{"answer", 1}}).status, 409);
}

TEST(Service, DiagnosticsAreFlagGated) {
  TempDir dir;
  {
    SessionService svc(options(dir));
    const std::string id = svc.create(small_request()).body["session_id"];
    EXPECT_EQ(svc.diagnostics(id).status, 404);
  }
  ServiceOptions o = options(dir);
  o.diagnostics = true;
  SessionService svc(o);
  const std::string id = svc.create(small_request()).body["session_id"];
  const Reply d = svc.diagnostics(id);
  ASSERT_EQ(d.status, 200);
  EXPECT_EQ(d.body["posterior_mean"], json({10.0, 10.0}));
  EXPECT_NEAR(d.body["normalized_mean"][0].get<double>(), 0.5, 1e-12);
}

TEST(Service, ReloadRestoresPosteriorAndPendingQuery) {
  TempDir dir;
  std::string id;
  GaussianState before = GaussianState::isotropic(2, 0.0, 1.0);
  json pending;
  {
    SessionService svc(options(dir));
    const Reply created = svc.create(small_request());
    id = created.body["session_id"];
    Reply r = svc.answer(id, {{"query_index", 0}, {"answer", 1}});
    ASSERT_EQ(r.status, 200);
    if (r.body["status"] == "ready") r = svc.answer(id, {{"query_index", 1}, {"answer", 0}});
    ASSERT_EQ(r.status, 200);
    before = *svc.posterior(id);
    pending = svc.query(id).body;
  }
  SessionService reloaded(options(dir));
  ASSERT_EQ(reloaded.session_ids(), std::vector<std::string>{id});
  const GaussianState after = *reloaded.posterior(id);
  EXPECT_EQ(after.mean_vector(), before.mean_vector());
  EXPECT_EQ(after.covariance_vector(), before.covariance_vector());
  EXPECT_EQ(reloaded.query(id).body, pending);
  EXPECT_EQ(reloaded.trace(id).body["queries"].size(), pending["query_count"].get<std::size_t>());
}

TEST(Service, ReloadedSessionContinuesLikeAnUninterruptedOne) {
  TempDir a, b;
  const std::vector<double> w{0.2, 0.8};
  // Uninterrupted.
  SessionService straight(options(a));
  const Reply s0 = straight.create(small_request(7, 4));
  const json straight_last = play(straight, s0.body["session_id"], s0.body, w);
  // Interrupted after the first answer.
  std::string id;
  {
    SessionService first(options(b));
    const Reply c = first.create(small_request(7, 4));
    id = c.body["session_id"];
    ASSERT_EQ(c.body["status"], "ready");
    first.answer(id, {{"query_index", 0}, {"answer", planted_answer(c.body, w)}});
  }
  SessionService second(options(b));
  const json resumed_last = play(second, id, second.query(id).body, w);
  EXPECT_EQ(resumed_last["query_count"], straight_last["query_count"]);
  EXPECT_EQ(resumed_last["recommendation"], straight_last["recommendation"]);
  EXPECT_EQ(resumed_last["mmer"], straight_last["mmer"]);
}

TEST(Service, UnreadableLogsAreSkipped) {
  TempDir dir;
  std::string id;
  {
    SessionService svc(options(dir));
    id = svc.create(small_request()).body["session_id"];
  }
  std::ofstream(dir.path() / "0000000000000bad.jsonl") << "{not json\n";
  std::ofstream(dir.path() / "0000000000000bee.jsonl") << R"({"event": "answered", "answer": 1})" << '\n';
  SessionService reloaded(options(dir));
  EXPECT_EQ(reloaded.session_ids(), std::vector<std::string>{id});
  EXPECT_EQ(reloaded.skipped_logs().size(), 2u);
  EXPECT_EQ(reloaded.query(id).status, 200);
}

TEST(Service, ConcurrentSessionsAreIndependent) {
  TempDir dir;
  SessionService svc(options(dir));
  constexpr int kSessions = 4;
  std::vector<json> results(kSessions);
  std::vector<std::thread> threads;
  for (int i = 0; i < kSessions; ++i) {
    threads.emplace_back([&, i] {
      const Reply c = svc.create(small_request(11, static_cast<std::uint64_t>(i % 2)));
      results[static_cast<std::size_t>(i)] = play(svc, c.body["session_id"], c.body, {0.6, 0.4});
    });
  }
  for (auto& t : threads) t.join();
  for (const auto& r : results) EXPECT_EQ(r["status"], "finished") << r.dump();
  // Same seed, same answers: same outcome regardless of interleaving.
  EXPECT_EQ(results[0]["recommendation"], results[2]["recommendation"]);
  EXPECT_EQ(results[1]["recommendation"], results[3]["recommendation"]);
  EXPECT_EQ(svc.session_ids().size(), static_cast<std::size_t>(kSessions));
}

TEST(ServiceHttp, EndToEndOverTheWire) {
  TempDir dir;
  SessionService svc(options(dir));
  httplib::Server server;
  mount(server, svc);
  const int port = server.bind_to_any_port("127.0.0.1");
  ASSERT_GT(port, 0);
  std::thread listener([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  httplib::Client client("127.0.0.1", port);
  client.set_read_timeout(120, 0);
  auto health = client.Get("/healthz");
  ASSERT_TRUE(health);
  EXPECT_EQ(health->status, 200);

  auto created = client.Post("/sessions", small_request().dump(), "application/json");
  ASSERT_TRUE(created);
  ASSERT_EQ(created->status, 201) << created->body;
  json q = json::parse(created->body);
  const std::string id = q["session_id"];

  auto again = client.Get("/sessions/" + id + "/query");
  ASSERT_TRUE(again);
  EXPECT_EQ(json::parse(again->body), q);

  auto bad = client.Post("/sessions/" + id + "/answer", R"({"answer": 7})", "application/json");
  EXPECT_EQ(bad->status, 400);
  auto garbage = client.Post("/sessions/" + id + "/answer", "{not json", "application/json");
  EXPECT_EQ(garbage->status, 400);
  auto unknown = client.Get("/sessions/ffffffffffffffff/query");
  EXPECT_EQ(unknown->status, 404);

  while (q["status"] == "ready") {
    auto r = client.Post("/sessions/" + id + "/answer",
                         json{{"query_index", q["query_index"]}, {"answer", planted_answer(q, {0.4, 0.6})}}.dump(),
                         "application/json");
    ASSERT_TRUE(r);
    ASSERT_EQ(r->status, 200) << r->body;
    q = json::parse(r->body);
  }
  EXPECT_EQ(q["status"], "finished");
  auto trace = client.Get("/sessions/" + id + "/trace");
  ASSERT_TRUE(trace);
  EXPECT_EQ(trace->status, 200);
  EXPECT_EQ(json::parse(trace->body)["finished"], true);
  EXPECT_EQ(client.Get("/sessions/" + id + "/diagnostics")->status, 404);

  server.stop();
  listener.join();
}
