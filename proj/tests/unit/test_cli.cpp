#include "doctest.h"

#include "fixtures.hpp"

#include "longic/error.hpp"
#include "longic_app/app.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

using namespace longic;
using namespace longic::app;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string slurp(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_file(const fs::path& file, const json& j) {
  std::ofstream out(file);
  out << j.dump(2);
}

struct Outcome {
  int status = -1;
  std::string out;
  std::string err;
};

Outcome run_binary(const std::string& args, const fs::path& dir, const std::string& env = {}) {
  const auto out = dir / "stdout.txt";
  const auto err = dir / "stderr.txt";
  const std::string cmd = env + (env.empty() ? "" : " ") + std::string(LONGIC_BIN) + " " + args +
                          " > " + out.string() + " 2> " + err.string();
  const int raw = std::system(cmd.c_str());
  Outcome o;
  o.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  o.out = slurp(out);
  o.err = slurp(err);
  return o;
}

// Small, fast run: two experiments-worth of models on a few hundred patients.
json small_run_config(const fs::path& out) {
  return {{"generator", {{"n", 400}, {"seed", 3}}},
          {"seed", 3},
          {"out", out.string()},
          {"experiments", {1, 3}},
          {"experiment1", {{"estimators", {"ridge", "knn"}}}},
          {"experiment2", {{"repeats", 1}}}};
}

std::vector<fs::path> subdirs(const fs::path& dir) {
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_directory()) out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST_CASE("flag parsers") {
  auto [name, cost] = parse_cost_flag("alcohol=3:4");
  CHECK(name == "alcohol");
  CHECK(cost == json{{"up", 3.0}, {"down", 4.0}});
  CHECK(parse_cost_flag("sodium=locked:2").second == json{{"up", "locked"}, {"down", 2.0}});
  CHECK(parse_cost_flag("fiber=5").second == json(5.0));
  CHECK(parse_cost_flag("fiber=locked").second == json("locked"));
  CHECK_THROWS_AS(parse_cost_flag("fiber"), ConfigError);
  CHECK_THROWS_AS(parse_cost_flag("fiber=x:1"), ConfigError);
  CHECK_THROWS_AS(parse_cost_flag("=1"), ConfigError);

  auto [bname, bound] = parse_bound_flag("bmi=18.5:30");
  CHECK(bname == "bmi");
  CHECK(bound == json{18.5, 30.0});
  CHECK_THROWS_AS(parse_bound_flag("bmi=30"), ConfigError);
  CHECK_THROWS_AS(parse_bound_flag("bmi=a:b"), ConfigError);

  CHECK(parse_experiments("1,3") == std::vector<int>{1, 3});
  CHECK_THROWS_AS(parse_experiments("1,4"), ConfigError);
  CHECK_THROWS_AS(parse_experiments(""), ConfigError);
}

TEST_CASE("cost and bound overrides") {
  const auto& c = fixture::small_cohort();
  const auto alcohol = static_cast<Eigen::Index>(
      std::find(c.partition.direct.begin(), c.partition.direct.end(), c.schema.index_of("alcohol")) -
      c.partition.direct.begin());
  const auto costs = apply_cost_overrides(c, c.cost_model, json{{"alcohol", {{"up", "locked"}, {"down", 1.5}}}});
  CHECK(costs[static_cast<std::size_t>(alcohol)].up == kLockedCost);
  CHECK(costs[static_cast<std::size_t>(alcohol)].down == 1.5);
  CHECK_THROWS_AS(apply_cost_overrides(c, c.cost_model, json{{"bmi", 1.0}}), ConfigError);
  CHECK_THROWS_AS(apply_cost_overrides(c, c.cost_model, json{{"nope", 1.0}}), ConfigError);
  CHECK_THROWS_AS(apply_cost_overrides(c, c.cost_model, json{{"alcohol", -1.0}}), ConfigError);
  const auto bounds = apply_bound_overrides(c, c.raw_bounds, json{{"alcohol", {nullptr, 5.0}}});
  CHECK(bounds.lower[alcohol] == c.raw_bounds.lower[alcohol]);
  CHECK(bounds.upper[alcohol] == 5.0);
  CHECK_THROWS_AS(apply_bound_overrides(c, c.raw_bounds, json{{"alcohol", {6.0, 5.0}}}),
                  ConfigError);
}

TEST_CASE("run config parsing") {
  const auto cfg = parse_run_config(json{{"cohort", "data"}, {"budget", 1.0}}, "/base");
  REQUIRE(cfg.cohort_dir);
  CHECK(*cfg.cohort_dir == fs::path("/base/data"));
  CHECK(cfg.budget == 1.0);
  CHECK_THROWS_AS(parse_run_config(json{{"cohort", "a"}, {"generator", json::object()}}),
                  ConfigError);
  CHECK_THROWS_AS(parse_run_config(json{{"bogus", 1}}), ConfigError);
  CHECK_THROWS_AS(parse_run_config(json{{"generator", json::object()}, {"experiments", {5}}}),
                  ConfigError);
  const auto round = parse_run_config(to_json(parse_run_config(small_run_config("/tmp/x"))));
  CHECK(to_json(round).dump() == to_json(parse_run_config(small_run_config("/tmp/x"))).dump());
}

TEST_CASE("exception mapping to exit codes") {
  std::ostringstream err;
  CHECK(report_failure(TrainingError("t"), err) == kTrainingFailure);
  CHECK(report_failure(ConfigError("c"), err) == kConfigError);
  CHECK(report_failure(DataError("d"), err) == kConfigError);
  CHECK(report_failure(UnknownIdError("u"), err) == kUnknownId);
  CHECK(guarded([] { return 0; }, err) == kOk);
  CHECK(guarded([]() -> int { throw UnknownIdError("x"); }, err) == kUnknownId);
  CHECK(err.str().find("x") != std::string::npos);
}

TEST_CASE("output directory precedence: flag, then environment, then config") {
  RunConfig cfg;
  cfg.out = "from_config";
  ::unsetenv(kOutEnv);
  CHECK(resolve_out(cfg, std::nullopt) == fs::path("from_config"));
  ::setenv(kOutEnv, "from_env", 1);
  CHECK(resolve_out(cfg, std::nullopt) == fs::path("from_env"));
  CHECK(resolve_out(cfg, fs::path("from_flag")) == fs::path("from_flag"));
  ::unsetenv(kOutEnv);
  CHECK(run_directory_name(7).size() > 6);
  CHECK(run_directory_name(7).find("seed7") != std::string::npos);
}

TEST_CASE("generate is byte-identical across invocations") {
  const auto dir = fixture::scratch_dir("cli_gen");
  write_file(dir / "spec.json", json{{"n", 150}});
  const auto a = run_binary("generate --config " + (dir / "spec.json").string() + " --out " +
                                (dir / "a").string() + " --seed 4",
                            dir);
  REQUIRE(a.status == kOk);
  CHECK(a.out.find("visit 1: 150 patients") != std::string::npos);
  const auto b = run_binary("generate --config " + (dir / "spec.json").string() + " --out " +
                                (dir / "b").string() + " --seed 4",
                            dir);
  REQUIRE(b.status == kOk);
  for (const auto& name : {"cohort.json", "generator.json", "visit1.csv", "visit2.csv", "visit3.csv"}) {
    CHECK(slurp(dir / "a" / name) == slurp(dir / "b" / name));
  }
  CHECK_NOTHROW(load_cohort(dir / "a"));
  fs::remove_all(dir);
}

TEST_CASE("config errors exit 2 and name the problem") {
  const auto dir = fixture::scratch_dir("cli_err");
  auto spec = to_json(default_generator_spec());
  spec["missing"][0].push_back("sodium");  // missing at v2, measured at v3
  write_file(dir / "spec.json", spec);
  const auto nested =
      run_binary("generate --config " + (dir / "spec.json").string() + " --out " + (dir / "o").string(), dir);
  CHECK(nested.status == kConfigError);
  CHECK(nested.err.find("sodium") != std::string::npos);

  CHECK(run_binary("run --config " + (dir / "absent.json").string(), dir).status == kConfigError);
  CHECK(run_binary("frobnicate", dir).status == kConfigError);
  CHECK(run_binary("--help", dir).status == kOk);

  write_file(dir / "run.json", small_run_config(dir / "runs"));
  CHECK(run_binary("run --config " + (dir / "run.json").string() + " --experiments 7", dir).status ==
        kConfigError);
  fs::remove_all(dir);
}

TEST_CASE("a cohort without events fails training with exit 1") {
  const auto dir = fixture::scratch_dir("cli_train");
  write_file(dir / "run.json", json{{"generator", {{"n", 120}, {"intercept", -40.0}}},
                                    {"out", (dir / "runs").string()},
                                    {"experiments", {3}}});
  const auto o = run_binary("run --config " + (dir / "run.json").string(), dir);
  CHECK(o.status == kTrainingFailure);
  CHECK(!o.err.empty());
  fs::remove_all(dir);
}

TEST_CASE("run writes one directory per experiment and reruns reproduce the reports") {
  const auto dir = fixture::scratch_dir("cli_run");
  write_file(dir / "run.json", small_run_config(dir / "runs"));
  std::ostringstream out1, err1, out2, err2;
  RunOverrides o;
  o.experiments = std::vector<int>{1, 2, 3};
  REQUIRE(cmd_run(dir / "run.json", o, out1, err1) == kOk);
  REQUIRE(cmd_run(dir / "run.json", o, out2, err2) == kOk);
  const auto runs = subdirs(dir / "runs");
  REQUIRE(runs.size() == 2);
  for (const auto& run : runs) {
    CHECK(fs::exists(run / "config.json"));
    for (const auto& e : {"experiment1", "experiment2", "experiment3"}) {
      CHECK(fs::exists(run / e / "report.json"));
      CHECK(fs::exists(run / e / "series.csv"));
      CHECK(fs::exists(run / e / "timing.json"));
    }
  }
  for (const auto& e : {"experiment1", "experiment2", "experiment3"}) {
    for (const auto& entry : fs::directory_iterator(runs[0] / e)) {
      const auto name = entry.path().filename();
      if (name == "timing.json") continue;
      INFO(e << "/" << name.string());
      CHECK(slurp(entry.path()) == slurp(runs[1] / e / name));
    }
  }
  fs::remove_all(dir);
}

TEST_CASE("LONGIC_OUT redirects output unless --out is given") {
  const auto dir = fixture::scratch_dir("cli_env");
  auto cfg = small_run_config(dir / "cfg_out");
  cfg["experiments"] = {3};
  write_file(dir / "run.json", cfg);
  const auto env = std::string(kOutEnv) + "=" + (dir / "env_out").string();
  const auto a = run_binary("run --config " + (dir / "run.json").string(), dir, env);
  REQUIRE(a.status == kOk);
  CHECK(fs::exists(dir / "env_out"));
  CHECK(!fs::exists(dir / "cfg_out"));
  const auto b = run_binary(
      "run --config " + (dir / "run.json").string() + " --out " + (dir / "flag_out").string(), dir, env);
  REQUIRE(b.status == kOk);
  CHECK(fs::exists(dir / "flag_out"));
  CHECK(b.out.find((dir / "flag_out").string()) == 0);
  fs::remove_all(dir);
}

TEST_CASE("recommend prints a feasible plan and maps unknown ids to exit 3") {
  const auto dir = fixture::scratch_dir("cli_rec");
  write_file(dir / "run.json", small_run_config(dir / "runs"));
  const auto cohort = materialize(load_run_config(dir / "run.json"));
  const auto id = cohort.visit(1).ids.front();
  const auto cfg = (dir / "run.json").string();

  const auto zero = run_binary("recommend --config " + cfg + " --patient " + id + " --budget 0", dir);
  REQUIRE(zero.status == kOk);
  const auto z = json::parse(zero.out);
  for (const auto& f : z.at("features")) CHECK(f.at("delta_std").get<double>() == 0.0);

  const auto two = run_binary("recommend --config " + cfg + " --patient " + id +
                                  " --budget 2 --cost alcohol=locked --bound exercise_hours=0:5",
                              dir);
  REQUIRE(two.status == kOk);
  const auto t = json::parse(two.out);
  CHECK(t.at("cost_spent").get<double>() <= 2.0 + 1e-9);
  for (const auto& f : t.at("features")) {
    if (f.at("name") == "alcohol") CHECK(f.at("delta_std").get<double>() == 0.0);
    if (f.at("name") == "exercise_hours") {
      CHECK(f.at("after_raw").get<double>() <= 5.0 + 1e-9);
    }
  }

  CHECK(run_binary("recommend --config " + cfg + " --patient nobody", dir).status == kUnknownId);
  CHECK(run_binary("recommend --config " + cfg + " --patient " + id + " --budget -1", dir).status ==
        kConfigError);
  CHECK(run_binary("recommend --config " + cfg + " --patient " + id + " --cost bmi=1", dir).status ==
        kConfigError);
  fs::remove_all(dir);
}

TEST_CASE("serve exits 4 when the address is taken") {
  const auto dir = fixture::scratch_dir("cli_bind");
  write_file(dir / "run.json", small_run_config(dir / "runs"));
  CHECK(run_binary("serve --config " + (dir / "run.json").string() + " --bind 127.0.0.1:notaport", dir)
            .status == kConfigError);
  // a port held open by this process cannot be bound again
  int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  REQUIRE(fd >= 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = 0;
  REQUIRE(::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) == 0);
  REQUIRE(::listen(fd, 1) == 0);
  socklen_t len = sizeof addr;
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
  const int port = ntohs(addr.sin_port);
  const auto o = run_binary("serve --config " + (dir / "run.json").string() + " --bind 127.0.0.1:" +
                                std::to_string(port),
                            dir);
  ::close(fd);
  CHECK(o.status == kBindFailure);
  fs::remove_all(dir);
}
