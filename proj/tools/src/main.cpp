#include "longic_app/app.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace app = longic::app;

int main(int argc, char** argv) {
  CLI::App cli{"Longitudinal inverse classification"};
  cli.require_subcommand(1);

  std::string config;
  std::string out;
  std::string experiments;
  std::string patient;
  std::string bind = "127.0.0.1:8080";
  std::uint64_t seed = 0;
  double budget = 0.0;
  std::vector<std::string> cost_flags;
  std::vector<std::string> bound_flags;

  auto* gen = cli.add_subcommand("generate", "Write a synthetic cohort");
  gen->add_option("--config", config, "Generator spec JSON (defaults when omitted)");
  gen->add_option("--out", out, "Output directory")->required();
  auto* gen_seed = gen->add_option("--seed", seed, "Generator seed");

  auto* run = cli.add_subcommand("run", "Train and run experiments");
  run->add_option("--config", config, "Run config JSON")->required();
  auto* run_seed = run->add_option("--seed", seed, "Seed override");
  auto* run_out = run->add_option("--out", out, "Output root (overrides $LONGIC_OUT)");
  auto* run_exp = run->add_option("--experiments", experiments, "Comma-separated ids, e.g. 1,2,3");

  auto* rec = cli.add_subcommand("recommend", "Recommend lifestyle changes for one patient");
  rec->add_option("--config", config, "Run config JSON")->required();
  rec->add_option("--patient", patient, "Patient id")->required();
  auto* rec_budget = rec->add_option("--budget", budget, "Budget B");
  auto* rec_seed = rec->add_option("--seed", seed, "Seed override");
  rec->add_option("--cost", cost_flags, "name=up:down, 'locked' forbids a direction");
  rec->add_option("--bound", bound_flags, "name=lower:upper");

  auto* serve = cli.add_subcommand("serve", "Serve the HTTP API");
  serve->add_option("--config", config, "Run config JSON")->required();
  serve->add_option("--bind", bind, "host:port (port 0 picks a free port)");
  auto* serve_seed = serve->add_option("--seed", seed, "Seed override");

  try {
    cli.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return cli.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return cli.exit(e);
  } catch (const CLI::ParseError& e) {
    cli.exit(e);
    return app::kConfigError;
  }

  auto opt_seed = [&](CLI::Option* o) {
    return o->count() ? std::optional<std::uint64_t>(seed) : std::nullopt;
  };

  if (gen->parsed()) {
    return app::cmd_generate(config, out, opt_seed(gen_seed), std::cout, std::cerr);
  }
  if (run->parsed()) {
    app::RunOverrides o;
    o.seed = opt_seed(run_seed);
    if (run_out->count()) o.out = out;
    if (run_exp->count()) {
      const int status = app::guarded(
          [&] {
            o.experiments = app::parse_experiments(experiments);
            return 0;
          },
          std::cerr);
      if (status != 0) return status;
    }
    return app::cmd_run(config, o, std::cout, std::cerr);
  }
  if (rec->parsed()) {
    app::RecommendRequest r;
    r.patient = patient;
    if (rec_budget->count()) r.budget = budget;
    r.seed = opt_seed(rec_seed);
    r.cost_flags = cost_flags;
    r.bound_flags = bound_flags;
    return app::cmd_recommend(config, r, std::cout, std::cerr);
  }
  return app::cmd_serve(config, bind, opt_seed(serve_seed), std::cout, std::cerr);
}
