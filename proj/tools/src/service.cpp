#include "longic_app/service.hpp"

#include "longic_app/app.hpp"

#include "longic/error.hpp"

#include <httplib.h>

#include <algorithm>
#include <atomic>

namespace longic::app {

using nlohmann::json;

struct Service::Http {
  httplib::Server server;
  std::atomic<bool> bound{false};
};

namespace {

json parse_body(const std::string& body) {
  try {
    json j = json::parse(body);
    if (!j.is_object()) throw ConfigError("request body must be a JSON object");
    return j;
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed JSON body: ") + e.what());
  }
}

std::string required_id(const json& j) {
  if (!j.contains("id") || !j.at("id").is_string()) {
    throw ConfigError("request needs a string 'id'");
  }
  return j.at("id").get<std::string>();
}

double budget_of(const json& v) {
  if (!v.is_number()) throw ConfigError("budget must be a number");
  const double b = v.get<double>();
  if (!(b >= 0.0) || !std::isfinite(b)) throw ConfigError("budget must be finite and non-negative");
  return b;
}

}  // namespace

std::pair<std::string, int> parse_bind(const std::string& text) {
  const auto colon = text.rfind(':');
  const std::string host = colon == std::string::npos ? "127.0.0.1" : text.substr(0, colon);
  const std::string port = colon == std::string::npos ? text : text.substr(colon + 1);
  try {
    std::size_t used = 0;
    const int p = std::stoi(port, &used);
    if (used != port.size() || p < 0 || p > 65535 || host.empty()) throw std::invalid_argument(text);
    return {host, p};
  } catch (const std::exception&) {
    throw ConfigError("--bind expects host:port, got '" + text + "'");
  }
}

Service::Service(Cohort cohort, TrainedModels models, SolverOptions solver, ServiceDefaults defaults)
    : cohort_(std::move(cohort)),
      models_(std::move(models)),
      solver_(solver),
      defaults_(std::move(defaults)),
      http_(std::make_unique<Http>()) {
  auto send = [](httplib::Response& res, const Reply& reply) {
    res.status = reply.status;
    res.set_content(reply.body.dump(), "application/json");
  };
  auto& s = http_->server;
  // No SO_REUSEPORT: a port already in use must fail to bind.
  s.set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof(yes));
  });
  s.Get("/health", [this, send](const httplib::Request&, httplib::Response& res) {
    send(res, health());
  });
  s.Get("/patients", [this, send](const httplib::Request& req, httplib::Response& res) {
    send(res, guarded([&] {
           auto number = [&](const char* key) -> std::size_t {
             if (!req.has_param(key)) return 0;
             const auto text = req.get_param_value(key);
             try {
               std::size_t used = 0;
               const long long v = std::stoll(text, &used);
               if (used != text.size() || v < 0) throw std::invalid_argument(text);
               return static_cast<std::size_t>(v);
             } catch (const std::exception&) {
               throw ConfigError(std::string("query parameter '") + key + "' must be a count");
             }
           };
           return patients(number("offset"), number("limit"));
         }));
  });
  s.Get(R"(/patient/([^/]+))", [this, send](const httplib::Request& req, httplib::Response& res) {
    send(res, patient(req.matches[1].str()));
  });
  s.Post("/recommend", [this, send](const httplib::Request& req, httplib::Response& res) {
    send(res, recommend(req.body));
  });
  s.Post("/sweep", [this, send](const httplib::Request& req, httplib::Response& res) {
    send(res, sweep(req.body));
  });
  s.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (res.body.empty()) {
      res.set_content(json{{"error", "not found"}}.dump(), "application/json");
    }
  });
}

Service::~Service() { stop(); }

Service::Reply Service::guarded(const std::function<Reply()>& body) const {
  try {
    return body();
  } catch (const UnknownIdError& e) {
    return {404, {{"error", e.what()}}};
  } catch (const ConfigError& e) {
    return {400, {{"error", e.what()}}};
  } catch (const DataError& e) {
    return {400, {{"error", e.what()}}};
  } catch (const DimensionError& e) {
    return {400, {{"error", e.what()}}};
  } catch (const std::exception& e) {
    return {500, {{"error", e.what()}}};
  }
}

Service::Reply Service::health() const {
  return {200,
          {{"status", "ok"},
           {"patients", cohort_.visit(1).rows()},
           {"visits", cohort_.num_visits()}}};
}

Service::Reply Service::patients(std::size_t offset, std::size_t limit) const {
  const auto& ids = cohort_.visit(1).ids;
  const std::size_t begin = std::min(offset, ids.size());
  const std::size_t end = limit == 0 ? ids.size() : std::min(ids.size(), begin + limit);
  json list = json::array();
  for (std::size_t k = begin; k < end; ++k) {
    int visits = 0;
    for (int v = 1; v <= cohort_.num_visits(); ++v) {
      if (models_.at(v).rows.count(ids[k])) visits = v;
    }
    list.push_back({{"id", ids[k]},
                    {"visits", visits},
                    {"split", models_.split.test.count(ids[k]) ? "test" : "train"}});
  }
  return {200, {{"total", ids.size()}, {"offset", begin}, {"patients", list}}};
}

json Service::visit_view(const std::string& id, int v) const {
  const auto& vm = models_.at(v);
  const auto row = static_cast<Eigen::Index>(vm.rows.at(id));
  const Eigen::VectorXd x = vm.design.X.row(row).transpose();
  const auto& data = cohort_.visit(v);
  json groups = {{"unchangeable", json::object()},
                 {"indirect", json::object()},
                 {"direct", json::object()}};
  auto fill = [&](const std::vector<std::size_t>& idx, const char* key) {
    for (auto f : idx) groups[key][cohort_.schema.features[f].name] = x[static_cast<Eigen::Index>(f)];
  };
  fill(cohort_.partition.unchangeable, "unchangeable");
  fill(cohort_.partition.indirect, "indirect");
  fill(cohort_.partition.direct, "direct");
  json estimated = json::array();
  for (std::size_t f = 0; f < cohort_.schema.size(); ++f) {
    if (!data.column_of(f)) estimated.push_back(cohort_.schema.features[f].name);
  }
  json history = json::object();
  const auto p1 = static_cast<Eigen::Index>(cohort_.schema.size());
  for (int k = 1; k < v; ++k) history[risk_column_name(k)] = x[p1 + k - 1];
  return {{"visit", v},
          {"features", groups},
          {"estimated", estimated},
          {"risk_history", history},
          {"risk", vm.classifier->predict_proba(x)}};
}

Service::Reply Service::patient(const std::string& id) const {
  return guarded([&]() -> Reply {
    if (!models_.at(1).rows.count(id)) throw UnknownIdError("unknown patient id '" + id + "'");
    json visits = json::array();
    for (int v = 1; v <= cohort_.num_visits(); ++v) {
      if (models_.at(v).rows.count(id)) visits.push_back(visit_view(id, v));
    }
    return {200,
            {{"id", id},
             {"split", models_.split.test.count(id) ? "test" : "train"},
             {"visits", visits}}};
  });
}

Service::Reply Service::recommend(const std::string& body) const {
  return guarded([&]() -> Reply {
    const json j = parse_body(body);
    const auto id = required_id(j);
    const double budget = budget_of(j.value("budget", json(defaults_.budget)));
    const auto costs = apply_cost_overrides(cohort_, cohort_.cost_model, j.value("costs", json()));
    const auto bounds =
        apply_bound_overrides(cohort_, cohort_.raw_bounds, j.value("bounds", json()));
    if (!models_.at(1).rows.count(id)) throw UnknownIdError("unknown patient id '" + id + "'");
    const auto rec = longic::recommend(cohort_, models_, id, costs, bounds, budget, solver_);
    return {200, recommendation_to_json(cohort_, rec, id, budget)};
  });
}

Service::Reply Service::sweep(const std::string& body) const {
  return guarded([&]() -> Reply {
    const json j = parse_body(body);
    const auto id = required_id(j);
    std::vector<double> budgets = defaults_.budgets;
    if (j.contains("budgets")) {
      if (!j.at("budgets").is_array()) throw ConfigError("'budgets' must be an array");
      budgets.clear();
      for (const auto& b : j.at("budgets")) budgets.push_back(budget_of(b));
    }
    const auto costs = apply_cost_overrides(cohort_, cohort_.cost_model, j.value("costs", json()));
    const auto bounds =
        apply_bound_overrides(cohort_, cohort_.raw_bounds, j.value("bounds", json()));
    if (!models_.at(1).rows.count(id)) throw UnknownIdError("unknown patient id '" + id + "'");
    json results = json::array();
    if (!budgets.empty()) {
      const auto recs = recommend_sweep(cohort_, models_, id, costs, bounds, budgets, solver_);
      for (std::size_t k = 0; k < recs.size(); ++k) {
        results.push_back(recommendation_to_json(cohort_, recs[k], id, budgets[k]));
      }
    }
    return {200, {{"id", id}, {"budgets", budgets}, {"results", results}}};
  });
}

int Service::bind(const std::string& host, int port) {
  int bound = -1;
  if (port == 0) {
    bound = http_->server.bind_to_any_port(host);
  } else if (http_->server.bind_to_port(host, port)) {
    bound = port;
  }
  http_->bound = bound > 0;
  return bound > 0 ? bound : -1;
}

void Service::listen() {
  if (!http_->bound) throw ConfigError("service: bind() must succeed before listen()");
  http_->server.listen_after_bind();
}

void Service::stop() {
  if (http_) http_->server.stop();
}

bool Service::running() const { return http_->server.is_running(); }

}  // namespace longic::app
