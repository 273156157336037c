#include "longic_app/app.hpp"
#include "longic_app/service.hpp"

#include "longic/error.hpp"

#include <csignal>
#include <fstream>
#include <ostream>
#include <pthread.h>
#include <thread>

namespace longic::app {

using nlohmann::json;

namespace {

void write_json(const json& j, const std::filesystem::path& file) {
  std::ofstream out(file);
  if (!out) throw DataError("cannot write '" + file.string() + "'");
  out << j.dump(2) << "\n";
}

std::filesystem::path fresh_run_dir(const std::filesystem::path& root, std::uint64_t seed) {
  const auto base = run_directory_name(seed);
  auto dir = root / base;
  for (int k = 2; std::filesystem::exists(dir); ++k) dir = root / (base + "_" + std::to_string(k));
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

int cmd_generate(const std::filesystem::path& spec_file, const std::filesystem::path& out,
                 std::optional<std::uint64_t> seed, std::ostream& stdout_, std::ostream& stderr_) {
  return guarded(
      [&] {
        json j = json::object();
        if (!spec_file.empty()) {
          std::ifstream in(spec_file);
          if (!in) throw ConfigError("cannot open spec file '" + spec_file.string() + "'");
          try {
            in >> j;
          } catch (const json::exception& e) {
            throw ConfigError("spec file '" + spec_file.string() + "': " + e.what());
          }
        }
        if (seed) j["seed"] = *seed;
        const auto spec = generator_spec_from_json(j);
        const auto synthetic = generate(spec);
        std::filesystem::create_directories(out);
        save_cohort(synthetic.cohort, out);
        json meta = longic::to_json(spec);
        meta["intercepts"] = synthetic.intercepts;
        write_json(meta, out / "generator.json");
        for (int v = 1; v <= synthetic.cohort.num_visits(); ++v) {
          const auto& data = synthetic.cohort.visit(v);
          int positives = 0;
          for (int y : data.y_next) positives += y;
          stdout_ << "visit " << v << ": " << data.rows() << " patients, " << positives
                  << " events, " << data.present.size() << " features\n";
        }
        return static_cast<int>(kOk);
      },
      stderr_);
}

int cmd_run(const std::filesystem::path& config_file, const RunOverrides& overrides,
            std::ostream& stdout_, std::ostream& stderr_) {
  return guarded(
      [&] {
        auto config = load_run_config(config_file);
        if (overrides.seed) {
          config.seed = *overrides.seed;
          if (config.generator) config.generator->seed = *overrides.seed;
        }
        if (overrides.experiments) config.experiments = *overrides.experiments;
        const auto cohort = materialize(config);
        const auto costs = apply_cost_overrides(cohort, cohort.cost_model, config.costs);
        const auto bounds = apply_bound_overrides(cohort, cohort.raw_bounds, config.bounds);
        const auto models = train_all(cohort, config.models, config.seed);

        const auto dir = fresh_run_dir(resolve_out(config, overrides.out), config.seed);
        write_json(to_json(config), dir / "config.json");
        for (int id : config.experiments) {
          ExperimentReport report;
          if (id == 1) {
            report = experiment1(cohort, models.split, config.experiment1, config.models,
                                 config.seed);
          } else if (id == 2) {
            report = experiment2(cohort, models, config.models, config.seed, config.experiment2);
          } else {
            Cohort bounded = cohort;
            bounded.raw_bounds = bounds;
            report = experiment3(bounded, models, costs, config.experiment3, config.seed);
          }
          write_report(report, dir / ("experiment" + std::to_string(id)));
          stderr_ << "experiment " << id << " done in " << report.wall_seconds << " s\n";
        }
        stdout_ << dir.string() << "\n";
        return static_cast<int>(kOk);
      },
      stderr_);
}

int cmd_recommend(const std::filesystem::path& config_file, const RecommendRequest& request,
                  std::ostream& stdout_, std::ostream& stderr_) {
  return guarded(
      [&] {
        auto config = load_run_config(config_file);
        if (request.seed) {
          config.seed = *request.seed;
          if (config.generator) config.generator->seed = *request.seed;
        }
        json cost_json = config.costs;
        for (const auto& flag : request.cost_flags) {
          auto [name, value] = parse_cost_flag(flag);
          cost_json[name] = value;
        }
        json bound_json = config.bounds;
        for (const auto& flag : request.bound_flags) {
          auto [name, value] = parse_bound_flag(flag);
          bound_json[name] = value;
        }
        const double budget = request.budget.value_or(config.budget);
        if (!(budget >= 0.0)) throw ConfigError("budget must be non-negative");
        const auto cohort = materialize(config);
        const auto costs = apply_cost_overrides(cohort, cohort.cost_model, cost_json);
        const auto bounds = apply_bound_overrides(cohort, cohort.raw_bounds, bound_json);
        if (!index_ids(cohort.visit(1).ids).count(request.patient)) {
          throw UnknownIdError("unknown patient id '" + request.patient + "'");
        }
        const auto models = train_all(cohort, config.models, config.seed);
        const auto rec = recommend(cohort, models, request.patient, costs, bounds, budget,
                                   config.experiment3.solver);
        stdout_ << recommendation_to_json(cohort, rec, request.patient, budget).dump(2) << "\n";
        return static_cast<int>(kOk);
      },
      stderr_);
}

int cmd_serve(const std::filesystem::path& config_file, const std::string& bind,
              std::optional<std::uint64_t> seed, std::ostream& stdout_, std::ostream& stderr_) {
  return guarded(
      [&] {
        auto config = load_run_config(config_file);
        if (seed) {
          config.seed = *seed;
          if (config.generator) config.generator->seed = *seed;
        }
        const auto [host, port] = parse_bind(bind);
        auto cohort = materialize(config);
        cohort.cost_model = apply_cost_overrides(cohort, cohort.cost_model, config.costs);
        cohort.raw_bounds = apply_bound_overrides(cohort, cohort.raw_bounds, config.bounds);
        auto models = train_all(cohort, config.models, config.seed);
        Service service(std::move(cohort), std::move(models), config.experiment3.solver,
                        {config.budget, config.budgets});

        const int bound = service.bind(host, port);
        if (bound < 0) {
          stderr_ << "error: cannot bind " << host << ":" << port << "\n";
          return static_cast<int>(kBindFailure);
        }
        stdout_ << "listening on http://" << host << ":" << bound << "\n" << std::flush;

        // Signals go to a dedicated waiter thread that stops the server.
        sigset_t signals;
        sigemptyset(&signals);
        sigaddset(&signals, SIGINT);
        sigaddset(&signals, SIGTERM);
        pthread_sigmask(SIG_BLOCK, &signals, nullptr);
        std::thread waiter([&] {
          int received = 0;
          sigwait(&signals, &received);
          service.stop();
        });
        service.listen();
        pthread_kill(waiter.native_handle(), SIGTERM);
        waiter.join();
        return static_cast<int>(kOk);
      },
      stderr_);
}

}  // namespace longic::app
