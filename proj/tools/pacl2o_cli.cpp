#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "pacl2o/harness.hpp"

namespace fs = std::filesystem;
using namespace pacl2o;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConstraint = 2;
constexpr int kExitStage = 3;

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out = "pacl2o_out";
};

// Explicit --config wins, then the config persisted in --out, then defaults.
ExperimentConfig resolve_config(const Globals& g) {
  ExperimentConfig cfg;
  const fs::path out(g.out);
  if (!g.config_path.empty()) {
    cfg = config_from_json(read_json_file(g.config_path));
  } else if (fs::exists(out / files::config)) {
    cfg = config_from_json(read_json_file(out / files::config));
  }
  if (g.seed) cfg.seed = *g.seed;
  cfg.validate();
  write_json_file(out / files::config, config_to_json(cfg));
  return cfg;
}

void print_certificate(const PacCertificate& c) {
  std::cout << "lambda*        " << c.lambda_star << '\n'
            << "bound          " << c.bound << '\n'
            << "kl             " << c.kl << '\n'
            << "emp risk (Q)   " << c.emp_risk << '\n'
            << "emp risk (pt)  " << c.point_emp_risk << '\n'
            << "point estimate " << c.point_estimate << '\n'
            << "support size   " << c.posterior.size() << '\n';
}

void print_report(const Json& r) {
  std::cout << "bound                 " << r.at("bound").get<double>() << '\n'
            << "test risk (posterior) " << r.at("test_risk_posterior").get<double>() << '\n'
            << "test risk (point)     " << r.at("test_risk_point").get<double>() << '\n'
            << "test sublevel rate    " << r.at("test_hit_rate").get<double>() << '\n'
            << "median learned/base   " << r.at("learned_median_at_train").get<double>() << " / "
            << r.at("baseline_median_at_train").get<double>() << '\n';
}

int run_command(const std::string& cmd, const Globals& g) {
  const fs::path out(g.out);
  const ExperimentConfig cfg = resolve_config(g);

  if (cmd == "run") {
    PipelineResult res = run_pipeline(cfg, {out, true});
    print_certificate(res.posterior.certificate);
    print_report(report_summary(*res.report));
    return kExitOk;
  }
  if (cmd == "gen-data") {
    Dataset d = generate_dataset(cfg);
    save_dataset(out, d);
    const SplitSizes s = d.split.sizes();
    std::cout << "instances: prior " << s.prior << ", train " << s.train << ", val " << s.val << ", test " << s.test
              << '\n';
    return kExitOk;
  }

  const Dataset data = load_dataset(out, cfg);
  if (cmd == "init") {
    InitResult r = stage_init(cfg, data);
    save_init(out, r);
    std::cout << "imitation " << (r.converged ? "converged" : "hit the iteration cap") << " after " << r.iterations
              << " iterations, window mean " << r.final_mean << '\n';
    return kExitOk;
  }
  if (cmd == "locate-prior") {
    PriorLocation loc = stage_locate(cfg, data, load_init(out).alpha);
    save_location(out, loc);
    std::cout << "constraint found, estimate " << loc.estimate.point << " (" << loc.checks << " checks, "
              << loc.rollbacks << " rollbacks)\n";
    return kExitOk;
  }
  if (cmd == "sample-prior") {
    SampleSet s = stage_sample(cfg, data, load_location(out));
    save_samples(out, s);
    std::cout << s.points.size() << " samples, " << s.accepted << " of " << s.proposals << " proposals accepted\n";
    return kExitOk;
  }
  if (cmd == "posterior") {
    PosteriorResult p = stage_posterior(cfg, data, load_samples(out));
    save_posterior(out, p, config_hash(cfg));
    print_certificate(p.certificate);
    return kExitOk;
  }
  if (cmd == "evaluate") {
    EvaluationReport r = evaluate(cfg, data, load_samples(out), load_posterior(out));
    write_json_file(out / files::report, report_summary(r));
    emit_plot_data(r, cfg.sublevel, out);
    print_report(report_summary(r));
    return kExitOk;
  }
  if (cmd == "report") {
    print_certificate(load_posterior(out).certificate);
    if (fs::exists(out / files::report)) print_report(read_json_file(out / files::report));
    return kExitOk;
  }
  throw std::logic_error("unhandled command " + cmd);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"PAC-Bayesian learning-to-optimize pipeline"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  std::uint64_t seed = 0;
  app.add_option("--config", g.config_path, "Experiment config (JSON)")->check(CLI::ExistingFile);
  auto* seed_opt = app.add_option("--seed", seed, "Master seed (overrides the config)");
  app.add_option("--out", g.out, "Output directory for stage files")->capture_default_str();

  const char* commands[][2] = {
      {"gen-data", "Generate and split the problem instances"},
      {"init", "Imitation initialization of the learned rule"},
      {"locate-prior", "Constrained search for a point inside the probability band"},
      {"sample-prior", "Constrained Langevin sampling of prior support points"},
      {"posterior", "Prior weights, Gibbs posterior and bound certificate"},
      {"evaluate", "Compare the point estimate against the baseline on the test split"},
      {"report", "Print the stored certificate and evaluation summary"},
      {"run", "All stages in order"},
  };
  for (const auto& c : commands) app.add_subcommand(c[0], c[1]);

  CLI11_PARSE(app, argc, argv);
  if (seed_opt->count() > 0) g.seed = seed;
  const std::string cmd = app.get_subcommands().front()->get_name();

  try {
    return run_command(cmd, g);
  } catch (const ConstraintNotFound& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConstraint;
  } catch (const StageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitStage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << cmd << ": " << e.what() << '\n';
    return kExitStage;
  }
}
