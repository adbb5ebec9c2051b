#pragma once
#include <algorithm>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "finmdp/dice.hpp"
#include "finmdp/io.hpp"
#include "finmdp/rate.hpp"
#include "finmdp/stochastic.hpp"

namespace finmdp {

/// Everything the CLI can ask for in one run. eta/steps/batch/early_stop are
/// overrides; NaN or 0 means "use the schedule default". budget caps the work
/// a run may perform: gradient evaluations when exact, sampled trajectories
/// when stochastic.
struct ExperimentSpec {
  std::string model_source;  ///< file path or "dice:H=<n>"
  bool dynamic_scheme = true;
  bool stochastic_mode = false;
  double eps = 1.0;
  double delta = 0.1;
  std::uint64_t seed = 0;
  double eta = kNaN;
  std::uint64_t steps = 0;
  std::uint64_t batch = 0;
  bool theorem_scale = false;
  double early_stop = kNaN;
  bool coupling = false;
  bool mu_visitation = false;
  bool allow_varying_states = false;
  double c_estimate = kNaN;
  int threads = 1;
  std::uint64_t log_every = 1;
  double budget = 1e7;
  std::string out_dir;
  std::string checkpoint_in;
};

inline bool is_dice_source(const std::string& src) {
  return src.rfind("dice:H=", 0) == 0;
}

inline FiniteMdp model_from_source(const std::string& src) {
  if (is_dice_source(src)) {
    const std::string num = src.substr(7);
    std::size_t used = 0;
    int h = 0;
    try {
      h = std::stoi(num, &used);
    } catch (const std::exception&) {
      throw validation_error("bad model source: " + src);
    }
    if (used != num.size() || h < 1)
      throw validation_error("bad model source: " + src);
    return build_dice(h);
  }
  return load_model(src);
}

/// Start distribution of the run objective: the dice model starts uniformly on
/// the six faces; file models default to uniform over the first-epoch states.
inline std::vector<double> model_start_mu(const FiniteMdp& m,
                                          const std::string& src) {
  if (is_dice_source(src)) return dice_start_mu();
  return uniform_over(m.num_states(0));
}

/// Extra per-step hooks, composed with the run's own CSV stream.
struct ExperimentHooks {
  std::function<void(const TrainRow&)> sink;
  std::function<void(const ParamTensor&, const GradTensor&)> observer;
};

struct ExperimentResult {
  ParamTensor theta;
  TrainLog log;  ///< thinned; the CSV on disk is the full record
  std::uint64_t grad_evals = 0;
  double final_subopt = kNaN;
  bool early_stopped = false;
  bool budget_exhausted = false;
  ordered_json summary;
};

namespace detail {

/// Streams rows to the log file as they arrive, honouring the thinning stride
/// and always emitting the last row seen.
class CsvStream {
 public:
  CsvStream(const std::filesystem::path& path, bool stochastic,
            std::uint64_t log_every)
      : every_(log_every < 1 ? 1 : log_every), stochastic_(stochastic) {
    out_.open(path, std::ios::binary);
    if (!out_) throw validation_error("cannot open " + path.string());
    out_ << csv_header(stochastic_) << '\n';
  }
  void operator()(const TrainRow& r) {
    have_last_ = true;
    last_ = r;
    if (every_ <= 1 || (r.grad_evals - 1) % every_ == 0) write(r);
  }
  void finish() {
    if (have_last_ && last_.grad_evals != last_written_) write(last_);
    out_.flush();
    if (!out_) throw std::runtime_error("log write failed");
  }

 private:
  void write(const TrainRow& r) {
    out_ << csv_row(r, stochastic_) << '\n';
    last_written_ = r.grad_evals;
  }
  std::ofstream out_;
  std::uint64_t every_;
  bool stochastic_;
  bool have_last_ = false;
  std::uint64_t last_written_ = 0;
  TrainRow last_;
};

inline std::function<void(const TrainRow&)> compose_sinks(
    const std::function<void(const TrainRow&)>& a,
    const std::function<void(const TrainRow&)>& b) {
  if (!a) return b;
  if (!b) return a;
  return [a, b](const TrainRow& r) {
    a(r);
    b(r);
  };
}

/// Caps the in-memory log at about a million rows; the CSV stream is not
/// affected.
inline std::uint64_t memory_stride(std::uint64_t requested, double planned) {
  const double per = planned / 1e6;
  if (per <= static_cast<double>(requested)) return requested;
  return static_cast<std::uint64_t>(per) + 1;
}

inline ordered_json eta_list_json(const std::vector<double>& v) {
  ordered_json a = ordered_json::array();
  for (double x : v) a.push_back(x);
  return a;
}

}  // namespace detail

/// Runs one training experiment and writes log.csv, summary.json and
/// theta.json under spec.out_dir. Throws validation_error for unusable specs
/// and budget_error when the requested schedule cannot fit the budget at all;
/// a run that finishes without reaching a requested early-stop target is
/// reported via budget_exhausted instead.
inline ExperimentResult run_experiment(const ExperimentSpec& spec,
                                       const ExperimentHooks& hooks = {}) {
  if (!(spec.eps > 0.0)) throw validation_error("eps must be > 0");
  if (spec.stochastic_mode && !(spec.delta > 0.0 && spec.delta < 1.0))
    throw validation_error("delta must lie in (0, 1)");
  if (spec.out_dir.empty()) throw validation_error("output directory required");
  if (!(spec.budget > 0.0)) throw validation_error("budget must be > 0");

  const FiniteMdp m = model_from_source(spec.model_source);
  const std::vector<double> global_mu = model_start_mu(m, spec.model_source);
  const std::vector<std::vector<double>> mu_list =
      spec.mu_visitation ? visitation_mu_list(m, global_mu) : uniform_mu_list(m);

  ParamTensor theta0 = ParamTensor::zeros(m);
  const bool uniform_init = spec.checkpoint_in.empty();
  if (!uniform_init) theta0 = load_checkpoint(m, spec.checkpoint_in);

  const OptimalSolution opt = backward_induction_optimal(m);
  const double j_star = start_value(global_mu, opt.tables.v[0]);
  double c0 = spec.c_estimate;
  if (!std::isfinite(c0))
    c0 = min_optimal_prob(policy_of(theta0), opt.best_action);

  std::filesystem::create_directories(spec.out_dir);
  const std::filesystem::path out(spec.out_dir);

  ExperimentResult res;
  ordered_json sched_json;
  sched_json["scheme"] = spec.dynamic_scheme ? "dyn" : "sim";
  sched_json["mode"] = spec.stochastic_mode ? "stoch" : "exact";

  detail::CsvStream csv(out / "log.csv", spec.stochastic_mode, spec.log_every);
  auto csv_fn = [&csv](const TrainRow& r) { csv(r); };

  if (!spec.stochastic_mode && !spec.dynamic_scheme) {
    SimultaneousSchedule sc;
    sc.epsilon = spec.eps;
    sc.c_estimate = c0;
    sc.eta = std::isfinite(spec.eta) ? spec.eta
                                     : 1.0 / (5.0 * m.horizon * m.horizon *
                                              static_cast<double>(m.r_star));
    bool capped = false;
    if (spec.steps > 0) {
      sc.n_steps = spec.steps;
    } else {
      try {
        SimultaneousSchedule full = schedule_simultaneous(
            m, global_mu, spec.eps, c0, spec.allow_varying_states);
        sc.n_steps = full.n_steps;
        sc.d_star_over_mu_inf = full.d_star_over_mu_inf;
      } catch (const validation_error&) {
        capped = true;  // mismatch unbounded: fall back to early stopping
      } catch (const budget_error&) {
        capped = true;
      }
      if (!capped && static_cast<double>(sc.n_steps) > spec.budget) capped = true;
      if (capped) sc.n_steps = static_cast<std::uint64_t>(spec.budget);
    }
    TrainOptions opts;
    opts.log_every = detail::memory_stride(spec.log_every,
                                           static_cast<double>(sc.n_steps));
    opts.sink = detail::compose_sinks(csv_fn, hooks.sink);
    opts.observer = hooks.observer;
    if (std::isfinite(spec.early_stop))
      opts.early_stop_subopt = spec.early_stop;
    else if (capped)
      opts.early_stop_subopt = spec.eps;
    TrainResult tr = train_simultaneous(m, theta0, global_mu, sc, opts);
    res.theta = std::move(tr.theta);
    res.log = std::move(tr.log);
    res.grad_evals = tr.grad_evals;
    res.early_stopped = tr.early_stopped;
    if (opts.early_stop_subopt && !tr.early_stopped) res.budget_exhausted = true;
    sched_json["eta"] = sc.eta;
    sched_json["n_steps"] = sc.n_steps;
    sched_json["c_estimate"] = c0;
    sched_json["step_count_capped"] = capped;
    if (opts.early_stop_subopt)
      sched_json["early_stop"] = *opts.early_stop_subopt;
  } else if (!spec.stochastic_mode) {
    DynamicSchedule sc = schedule_dynamic(
        m, mu_list, spec.eps, uniform_init && !std::isfinite(spec.c_estimate),
        std::isfinite(spec.c_estimate) ? spec.c_estimate : c0);
    if (std::isfinite(spec.eta))
      for (double& e : sc.eta) e = spec.eta;
    if (spec.steps > 0)
      for (auto& n : sc.n_steps) n = spec.steps;
    if (static_cast<double>(sc.total_steps()) > spec.budget)
      throw budget_error("dynamic schedule needs " +
                         std::to_string(sc.total_steps()) +
                         " gradient evaluations; budget is " +
                         format_double(spec.budget));
    TrainOptions opts;
    opts.log_every = detail::memory_stride(
        spec.log_every, static_cast<double>(sc.total_steps()));
    opts.sink = detail::compose_sinks(csv_fn, hooks.sink);
    opts.observer = hooks.observer;
    TrainResult tr = train_dynamic(m, theta0, mu_list, global_mu, sc, opts);
    res.theta = std::move(tr.theta);
    res.log = std::move(tr.log);
    res.grad_evals = tr.grad_evals;
    sched_json["eta_h"] = detail::eta_list_json(sc.eta);
    ordered_json nh = ordered_json::array();
    for (auto n : sc.n_steps) nh.push_back(n);
    sched_json["n_h"] = nh;
    sched_json["c_h"] = sc.c_h;
  } else {
    StochasticSchedule sc;
    if (spec.theorem_scale) {
      sc = spec.dynamic_scheme
               ? theorem_stochastic_dynamic(
                     m, mu_list, spec.eps, spec.delta,
                     uniform_init && !std::isfinite(spec.c_estimate),
                     std::isfinite(spec.c_estimate) ? spec.c_estimate : c0)
               : theorem_stochastic_simultaneous(m, global_mu, spec.eps,
                                                 spec.delta, c0,
                                                 spec.allow_varying_states);
    } else {
      const std::uint64_t n = spec.steps > 0 ? spec.steps : 500;
      const std::uint64_t k = spec.batch > 0 ? spec.batch : 64;
      const double eta = std::isfinite(spec.eta) ? spec.eta : 0.0;
      sc = spec.dynamic_scheme ? user_stochastic_dynamic(m, n, k, eta)
                               : user_stochastic_simultaneous(m, n, k, eta);
    }
    sc.epsilon = spec.eps;
    sc.delta = spec.delta;
    if (sc.total_trajectories() > spec.budget)
      throw budget_error("schedule needs " +
                         format_double(sc.total_trajectories()) +
                         " sampled trajectories; budget is " +
                         format_double(spec.budget));
    StochTrainOptions opts;
    const double planned =
        spec.dynamic_scheme
            ? [&] {
                double t = 0.0;
                for (double x : sc.n_h) t += x;
                return t;
              }()
            : sc.n;
    opts.log_every = detail::memory_stride(spec.log_every, planned);
    opts.sink = detail::compose_sinks(csv_fn, hooks.sink);
    opts.batch.threads = spec.threads;
    opts.coupling = spec.coupling;
    StochTrainResult tr =
        spec.dynamic_scheme
            ? train_stochastic_dynamic(m, theta0, mu_list, global_mu, sc,
                                       spec.seed, opts)
            : train_stochastic_simultaneous(m, theta0, global_mu, sc, spec.seed,
                                            opts);
    res.theta = std::move(tr.theta);
    res.log = std::move(tr.log);
    res.grad_evals = tr.grad_evals;
    if (spec.dynamic_scheme) {
      sched_json["n_h"] = detail::eta_list_json(sc.n_h);
      sched_json["k_h"] = detail::eta_list_json(sc.k_h);
      sched_json["eta_h"] = detail::eta_list_json(sc.eta_h);
    } else {
      sched_json["n"] = sc.n;
      sched_json["k"] = sc.k;
      sched_json["eta"] = sc.eta;
    }
    if (tr.trace.first_crossing)
      sched_json["coupling_first_crossing"] = *tr.trace.first_crossing;
  }
  csv.finish();

  const double j_final =
      start_value(global_mu, evaluate_policy(m, policy_of(res.theta)).v[0]);
  res.final_subopt = j_star - j_final;

  res.summary["model"] = spec.model_source;
  res.summary["epsilon"] = spec.eps;
  if (spec.stochastic_mode) res.summary["delta"] = spec.delta;
  res.summary["seed"] = spec.seed;
  res.summary["final_subopt"] = res.final_subopt;
  res.summary["grad_evals_total"] = res.grad_evals;
  res.summary["early_stopped"] = res.early_stopped;
  res.summary["budget_exhausted"] = res.budget_exhausted;
  res.summary["schedule_used"] = sched_json;
  detail::write_json_file(out / "summary.json", res.summary);
  detail::write_json_file(out / "theta.json", checkpoint_to_json(m, res.theta));
  return res;
}

/// One target accuracy in a scheme comparison. Evaluation counts are the
/// number of exact gradient computations needed before an iterate first
/// reaches suboptimality <= eps.
struct CompareCell {
  double eps = 0.0;
  std::uint64_t evals_dynamic = 0;
  std::uint64_t evals_simultaneous = 0;
  double dyn_schedule_eps = kNaN;  ///< schedule target of the achieving run
  double final_subopt_dynamic = kNaN;
  double final_subopt_simultaneous = kNaN;
  std::string status_dynamic = "ok";
  std::string status_simultaneous = "ok";
};

struct CompareResult {
  std::vector<CompareCell> cells;
  ordered_json json;
};

namespace detail {

struct CrossingWatch {
  double target;
  std::uint64_t first = 0;  // grad evals consumed before the qualifying iterate
  bool found = false;
  void operator()(const TrainRow& r) {
    if (!found && r.subopt <= target) {
      first = r.grad_evals - 1;
      found = true;
    }
  }
};

}  // namespace detail

/// Exact-gradient head-to-head of the two schemes over a list of target
/// accuracies. Per cell, each side is charged the gradient evaluations spent
/// before an iterate first reaches suboptimality <= eps. The backward scheme's
/// prescribed schedule for a target overshoots it by a model-dependent
/// constant, so its side sweeps schedule targets downward on a geometric grid
/// (factor 2^(1/4), from 256 eps) and reports the first run that crosses; the
/// guarantee at target eps bounds the sweep. The all-epochs side runs once at
/// its prescribed step size with early stopping, capped by the budget. A
/// single-epoch model degenerates to one identical algorithm, so both sides
/// then share the backward scheme's step size and the counts coincide. Budget
/// overruns mark the cell instead of failing the comparison.
inline CompareResult compare_schemes(const std::string& model_source,
                                     const std::vector<double>& eps_list,
                                     const std::string& out_dir,
                                     double budget = 1e7,
                                     double sim_eta_override = kNaN) {
  if (eps_list.empty()) throw validation_error("need at least one eps");
  for (double e : eps_list)
    if (!(e > 0.0)) throw validation_error("eps values must be > 0");
  const FiniteMdp m = model_from_source(model_source);
  const std::vector<double> global_mu = model_start_mu(m, model_source);
  const auto mu_list = uniform_mu_list(m);
  const ParamTensor theta0 = ParamTensor::zeros(m);
  const OptimalSolution opt = backward_induction_optimal(m);
  const double j_star = start_value(global_mu, opt.tables.v[0]);

  CompareResult out;
  for (double eps : eps_list) {
    CompareCell cell;
    cell.eps = eps;
    bool dyn_done = false;
    double spent = 0.0;
    double dyn_eta0 = kNaN;
    for (int k = 32; k >= 0 && !dyn_done; --k) {
      const double target = eps * std::pow(2.0, k / 4.0);
      DynamicSchedule sc;
      try {
        sc = schedule_dynamic(m, mu_list, target, true);
      } catch (const budget_error&) {
        continue;  // too many steps even for this coarse target
      }
      dyn_eta0 = sc.eta[0];
      spent += static_cast<double>(sc.total_steps());
      if (spent > budget) {
        cell.status_dynamic = "budget_exhausted";
        break;
      }
      detail::CrossingWatch watch{eps};
      TrainOptions opts;
      opts.log_every = sc.total_steps() + 1;
      opts.sink = [&watch](const TrainRow& r) { watch(r); };
      TrainResult tr = train_dynamic(m, theta0, mu_list, global_mu, sc, opts);
      const double fin =
          j_star - start_value(global_mu,
                               evaluate_policy(m, policy_of(tr.theta)).v[0]);
      if (watch.found || fin <= eps) {
        cell.evals_dynamic = watch.found ? watch.first : tr.grad_evals;
        cell.dyn_schedule_eps = target;
        cell.final_subopt_dynamic = fin;
        dyn_done = true;
      }
    }
    if (!dyn_done && cell.status_dynamic == "ok")
      cell.status_dynamic = "budget_exhausted";

    SimultaneousSchedule sim_sc;
    sim_sc.epsilon = eps;
    if (m.horizon == 1 && std::isfinite(dyn_eta0)) {
      sim_sc.eta = dyn_eta0;
      sim_sc.n_steps = static_cast<std::uint64_t>(budget);
    } else {
      sim_sc.eta = std::isfinite(sim_eta_override)
                       ? sim_eta_override
                       : 1.0 / (5.0 * m.horizon * m.horizon *
                                static_cast<double>(m.r_star));
      sim_sc.n_steps = static_cast<std::uint64_t>(budget);
    }
    {
      detail::CrossingWatch watch{eps};
      TrainOptions opts;
      opts.log_every = sim_sc.n_steps + 1;
      opts.sink = [&watch](const TrainRow& r) { watch(r); };
      opts.early_stop_subopt = eps;
      TrainResult tr = train_simultaneous(m, theta0, global_mu, sim_sc, opts);
      cell.final_subopt_simultaneous =
          j_star - start_value(global_mu,
                               evaluate_policy(m, policy_of(tr.theta)).v[0]);
      if (watch.found)
        cell.evals_simultaneous = watch.first;
      else if (tr.early_stopped || cell.final_subopt_simultaneous <= eps)
        cell.evals_simultaneous = tr.grad_evals;
      else
        cell.status_simultaneous = "budget_exhausted";
    }
    out.cells.push_back(cell);
  }

  out.json["model"] = model_source;
  ordered_json cells = ordered_json::array();
  for (const CompareCell& c : out.cells) {
    ordered_json j;
    j["eps"] = c.eps;
    j["evals_dynamic"] = c.evals_dynamic;
    j["evals_simultaneous"] = c.evals_simultaneous;
    j["dyn_schedule_eps"] = c.dyn_schedule_eps;
    j["final_subopt_dynamic"] = c.final_subopt_dynamic;
    j["final_subopt_simultaneous"] = c.final_subopt_simultaneous;
    j["status_dynamic"] = c.status_dynamic;
    j["status_simultaneous"] = c.status_simultaneous;
    cells.push_back(j);
  }
  out.json["cells"] = cells;
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    detail::write_json_file(std::filesystem::path(out_dir) / "comparison.json",
                            out.json);
  }
  return out;
}

}  // namespace finmdp
