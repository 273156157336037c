#pragma once

#include "longic/pipeline.hpp"

#include <nlohmann/json.hpp>

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace longic::app {

/// Used when a request omits "budget" or "budgets".
struct ServiceDefaults {
  double budget = 2.0;
  std::vector<double> budgets = {0.0, 1.0, 2.0, 4.0};
};

/// HTTP API over one cohort and its trained models. Handlers are pure
/// functions of the request; models are shared read-only across threads.
class Service {
 public:
  struct Reply {
    int status = 200;
    nlohmann::json body;
  };

  Service(Cohort cohort, TrainedModels models, SolverOptions solver = {}, ServiceDefaults defaults = {});
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  Reply health() const;
  /// Paginated id list; `limit` 0 means all.
  Reply patients(std::size_t offset, std::size_t limit) const;
  Reply patient(const std::string& id) const;
  Reply recommend(const std::string& body) const;
  Reply sweep(const std::string& body) const;

  /// Binds without serving. Port 0 picks a free port. Returns the bound
  /// port or -1 on failure.
  int bind(const std::string& host, int port);
  /// Serves until stop(); call after a successful bind().
  void listen();
  void stop();
  bool running() const;

 private:
  Reply guarded(const std::function<Reply()>& body) const;
  nlohmann::json visit_view(const std::string& id, int v) const;

  Cohort cohort_;
  TrainedModels models_;
  SolverOptions solver_;
  ServiceDefaults defaults_;
  struct Http;
  std::unique_ptr<Http> http_;
};

/// Splits "host:port"; a bare port binds 127.0.0.1. Throws ConfigError.
std::pair<std::string, int> parse_bind(const std::string& text);

}  // namespace longic::app
