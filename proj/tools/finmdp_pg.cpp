#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "finmdp/experiment.hpp"

namespace {

struct RunArgs {
  std::string model, scheme, mode, out, checkpoint;
  double eps = 0.0, delta = 0.1, eta = finmdp::kNaN;
  double early_stop = finmdp::kNaN, c_estimate = finmdp::kNaN, budget = 1e7;
  std::uint64_t seed = 0, steps = 0, batch = 0, log_every = 1;
  int threads = 1;
  bool theorem_scale = false, coupling = false, mu_visitation = false;
  bool allow_varying_states = false;
};

int do_run(const RunArgs& a) {
  finmdp::ExperimentSpec spec;
  spec.model_source = a.model;
  spec.dynamic_scheme = a.scheme == "dyn";
  spec.stochastic_mode = a.mode == "stoch";
  spec.eps = a.eps;
  spec.delta = a.delta;
  spec.seed = a.seed;
  spec.eta = a.eta;
  spec.steps = a.steps;
  spec.batch = a.batch;
  spec.theorem_scale = a.theorem_scale;
  spec.early_stop = a.early_stop;
  spec.coupling = a.coupling;
  spec.mu_visitation = a.mu_visitation;
  spec.allow_varying_states = a.allow_varying_states;
  spec.c_estimate = a.c_estimate;
  spec.threads = a.threads;
  spec.log_every = a.log_every;
  spec.budget = a.budget;
  spec.out_dir = a.out;
  spec.checkpoint_in = a.checkpoint;
  const finmdp::ExperimentResult res = finmdp::run_experiment(spec);
  std::cout << res.summary.dump(2) << "\n";
  return res.budget_exhausted ? 3 : 0;
}

int do_rate(const std::string& log_path, double optimal) {
  std::ifstream in(log_path);
  if (!in) throw finmdp::validation_error("cannot open " + log_path);
  const finmdp::TrainLog log = finmdp::read_csv(in);
  const finmdp::RateEstimate est = finmdp::estimate_rate(log, optimal);
  finmdp::ordered_json j;
  j["slope"] = est.slope;
  j["intercept"] = est.intercept;
  j["r2"] = est.r2;
  j["window_begin"] = est.window_begin;
  j["window_end"] = est.window_end;
  j["n_points"] = est.n_points;
  std::cout << j.dump(2) << "\n";
  return 0;
}

int do_compare(const std::string& model, const std::vector<double>& eps,
               const std::string& out, double budget, double eta) {
  const finmdp::CompareResult res =
      finmdp::compare_schemes(model, eps, out, budget, eta);
  std::cout << res.json.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exact and stochastic policy-gradient training for "
               "finite-horizon tabular MDPs"};
  app.require_subcommand(1);

  RunArgs ra;
  CLI::App* run = app.add_subcommand("run", "Train one scheme on one model");
  run->add_option("--model", ra.model,
                  "model JSON path or builtin \"dice:H=<n>\"")
      ->required();
  run->add_option("--scheme", ra.scheme, "sim (all epochs) or dyn (backward)")
      ->required()
      ->check(CLI::IsMember({"sim", "dyn"}));
  run->add_option("--mode", ra.mode, "exact or stoch gradients")
      ->required()
      ->check(CLI::IsMember({"exact", "stoch"}));
  run->add_option("--eps", ra.eps, "target suboptimality")->required();
  run->add_option("--delta", ra.delta, "failure probability (stoch)");
  run->add_option("--seed", ra.seed, "sampling seed (stoch)");
  run->add_option("--eta", ra.eta, "step size override");
  run->add_option("--steps", ra.steps, "step count override (per epoch for dyn)");
  run->add_option("--batch", ra.batch, "trajectories per stochastic update");
  run->add_flag("--theorem-scale", ra.theorem_scale,
                "use the guarantee-sized stochastic schedule");
  run->add_option("--early-stop", ra.early_stop,
                  "stop when suboptimality reaches this value (sim exact)");
  run->add_option("--c", ra.c_estimate,
                  "override the optimal-action probability constant");
  run->add_option("--threads", ra.threads, "worker threads for batch sampling")
      ->check(CLI::PositiveNumber);
  run->add_option("--log-every", ra.log_every, "log stride in gradient evals")
      ->check(CLI::PositiveNumber);
  run->add_option("--budget", ra.budget,
                  "max gradient evals (exact) or trajectories (stoch)");
  run->add_flag("--coupling", ra.coupling,
                "track distance to an exact-gradient twin (stoch)");
  run->add_flag("--mu-visitation", ra.mu_visitation,
                "epoch start distributions from uniform-policy visitation");
  run->add_flag("--allow-varying-states", ra.allow_varying_states,
                "accept models whose state count changes across epochs");
  run->add_option("--checkpoint", ra.checkpoint, "initial parameters JSON");
  run->add_option("--out", ra.out, "output directory")->required();

  std::string rate_log;
  double rate_optimal = 0.0;
  CLI::App* rate = app.add_subcommand(
      "rate", "Fit the log-log convergence slope of a training log");
  rate->add_option("--log", rate_log, "training log CSV")->required();
  rate->add_option("--optimal", rate_optimal, "optimal start value")->required();

  std::string cmp_model, cmp_out;
  std::vector<double> cmp_eps;
  double cmp_budget = 1e7, cmp_eta = finmdp::kNaN;
  CLI::App* cmp = app.add_subcommand(
      "compare", "Gradient evaluations per scheme to reach each target");
  cmp->add_option("--model", cmp_model,
                  "model JSON path or builtin \"dice:H=<n>\"")
      ->required();
  cmp->add_option("--eps", cmp_eps, "comma-separated target suboptimalities")
      ->required()
      ->delimiter(',');
  cmp->add_option("--out", cmp_out, "output directory")->required();
  cmp->add_option("--budget", cmp_budget, "max gradient evals per cell");
  cmp->add_option("--eta", cmp_eta, "all-epochs step size override");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (run->parsed()) return do_run(ra);
    if (rate->parsed()) return do_rate(rate_log, rate_optimal);
    return do_compare(cmp_model, cmp_eps, cmp_out, cmp_budget, cmp_eta);
  } catch (const finmdp::budget_error& e) {
    std::cerr << "budget exhausted: " << e.what() << "\n";
    return 3;
  } catch (const finmdp::validation_error& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
