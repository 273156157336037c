#include "doctest.h"

#include "fixtures.hpp"

#include "longic/error.hpp"
#include "longic_app/service.hpp"

#include "httplib.h"

#include <future>
#include <thread>

using namespace longic;
using namespace longic::app;
using nlohmann::json;

namespace {

Service& shared_service() {
  static Service s(fixture::small_cohort(), fixture::small_models());
  return s;
}

// Serves the shared instance on an ephemeral port for the whole process.
int shared_port() {
  static const int port = [] {
    auto& s = shared_service();
    const int p = s.bind("127.0.0.1", 0);
    REQUIRE(p > 0);
    std::thread([&s] { s.listen(); }).detach();
    for (int k = 0; k < 200 && !s.running(); ++k) {
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    return p;
  }();
  return port;
}

httplib::Client client() {
  httplib::Client c("127.0.0.1", shared_port());
  c.set_read_timeout(120, 0);
  return c;
}

json post(const std::string& path, const json& body, int expect) {
  auto c = client();
  const auto res = c.Post(path, body.dump(), "application/json");
  REQUIRE(res);
  CHECK(res->status == expect);
  return json::parse(res->body);
}

json get(const std::string& path, int expect) {
  auto c = client();
  const auto res = c.Get(path);
  REQUIRE(res);
  CHECK(res->status == expect);
  return json::parse(res->body);
}

const std::string& some_id() { return fixture::small_cohort().visit(3).ids.front(); }

}  // namespace

TEST_CASE("bind address parsing") {
  CHECK(parse_bind("0.0.0.0:9000") == std::pair<std::string, int>{"0.0.0.0", 9000});
  CHECK(parse_bind("8081") == std::pair<std::string, int>{"127.0.0.1", 8081});
  CHECK_THROWS_AS(parse_bind("host:"), ConfigError);
  CHECK_THROWS_AS(parse_bind("host:70000"), ConfigError);
  CHECK_THROWS_AS(parse_bind("host:abc"), ConfigError);
}

TEST_CASE("health and patient listing") {
  const auto h = get("/health", 200);
  CHECK(h.at("status") == "ok");
  CHECK(h.at("patients") == fixture::small_cohort().visit(1).rows());

  const auto all = get("/patients", 200);
  CHECK(all.at("total") == 600);
  CHECK(all.at("patients").size() == 600);
  const auto page = get("/patients?offset=10&limit=5", 200);
  REQUIRE(page.at("patients").size() == 5);
  CHECK(page.at("patients")[0] == all.at("patients")[10]);
  CHECK(page.at("offset") == 10);
  const auto past = get("/patients?offset=10000", 200);
  CHECK(past.at("patients").empty());
  get("/patients?limit=-3", 400);
  get("/patients?offset=x", 400);
}

TEST_CASE("patient detail lists visits, estimated features and risk history") {
  const auto p = get("/patient/" + some_id(), 200);
  CHECK(p.at("id") == some_id());
  REQUIRE(p.at("visits").size() == 3);
  const auto& v1 = p.at("visits")[0];
  CHECK(v1.at("estimated").empty());
  CHECK(v1.at("risk_history").empty());
  const auto& v3 = p.at("visits")[2];
  CHECK(v3.at("estimated").size() == 10);
  CHECK(v3.at("risk_history").contains("risk_from_v1"));
  CHECK(v3.at("risk_history").contains("risk_from_v2"));
  CHECK(v3.at("features").at("direct").size() == 8);
  const double r = v3.at("risk").get<double>();
  CHECK(r >= 0.0);
  CHECK(r <= 1.0);
  CHECK(get("/patient/nobody", 404).contains("error"));
  CHECK(get("/no/such/route", 404).contains("error"));
}

TEST_CASE("recommend over HTTP") {
  const auto zero = post("/recommend", {{"id", some_id()}, {"budget", 0.0}}, 200);
  for (const auto& f : zero.at("features")) CHECK(f.at("delta_std").get<double>() == 0.0);
  CHECK(zero.at("cost_spent") == 0.0);

  const auto locked =
      post("/recommend", {{"id", some_id()}, {"budget", 4.0}, {"costs", {{"exercise_hours", "locked"}}}},
           200);
  CHECK(locked.at("cost_spent").get<double>() <= 4.0 + 1e-9);
  for (const auto& f : locked.at("features")) {
    if (f.at("name") == "exercise_hours") CHECK(f.at("delta_std").get<double>() == 0.0);
  }
  CHECK(locked.at("after_probability").get<double>() <=
        locked.at("before_probability").get<double>());

  post("/recommend", {{"id", "nobody"}}, 404);
  post("/recommend", {{"id", some_id()}, {"budget", -1.0}}, 400);
  post("/recommend", {{"budget", 1.0}}, 400);
  post("/recommend", {{"id", some_id()}, {"costs", {{"bmi", 1.0}}}}, 400);
  auto c = client();
  const auto bad = c.Post("/recommend", "{not json", "application/json");
  REQUIRE(bad);
  CHECK(bad->status == 400);
}

TEST_CASE("identical concurrent requests get identical bodies") {
  const json body = {{"id", some_id()}, {"budget", 2.0}};
  std::vector<std::future<std::string>> calls;
  for (int k = 0; k < 4; ++k) {
    calls.push_back(std::async(std::launch::async, [&body] {
      auto c = client();
      const auto res = c.Post("/recommend", body.dump(), "application/json");
      return res ? res->body : std::string();
    }));
  }
  std::vector<std::string> bodies;
  for (auto& f : calls) bodies.push_back(f.get());
  REQUIRE(!bodies[0].empty());
  for (const auto& b : bodies) CHECK(b == bodies[0]);
}

TEST_CASE("sweep returns non-increasing probabilities") {
  const auto s = post("/sweep", {{"id", some_id()}, {"budgets", {0.0, 1.0, 2.0, 4.0}}}, 200);
  const auto& results = s.at("results");
  REQUIRE(results.size() == 4);
  for (std::size_t k = 1; k < results.size(); ++k) {
    CHECK(results[k].at("after_probability").get<double>() <=
          results[k - 1].at("after_probability").get<double>() + 1e-12);
  }
  const auto dflt = post("/sweep", {{"id", some_id()}}, 200);
  CHECK(dflt.at("budgets") == json{0.0, 1.0, 2.0, 4.0});
  post("/sweep", {{"id", some_id()}, {"budgets", "many"}}, 400);
  post("/sweep", {{"id", some_id()}, {"budgets", {1.0, -2.0}}}, 400);
}

TEST_CASE("in-process handlers match their HTTP counterparts") {
  const auto& s = shared_service();
  CHECK(s.patients(0, 3).body.at("patients").size() == 3);
  CHECK(s.patient("nobody").status == 404);
  CHECK(s.recommend("[]").status == 400);
}

TEST_CASE("a second server cannot bind a port in use") {
  const int port = shared_port();
  Service other(fixture::small_cohort(), fixture::small_models());
  CHECK(other.bind("127.0.0.1", port) == -1);
  CHECK_THROWS(other.listen());
}
