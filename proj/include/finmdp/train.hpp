#pragma once
#include <cstdio>
#include <cstring>
#include <functional>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "finmdp/schedule.hpp"

namespace finmdp {

/// One record per gradient computation. phase is the epoch being trained, or
/// -1 when all epochs train at once. j is the objective the step ascends (the
/// epoch objective during a phase), subopt the gap of the current full policy
/// to the optimal start value. The last three fields are used by stochastic
/// logs only.
struct TrainRow {
  std::uint64_t grad_evals = 0;
  int phase = -1;
  double j = 0.0;
  double grad_norm = 0.0;
  double min_opt_prob = 0.0;
  double pl_lhs = 0.0;
  double pl_rhs = 0.0;
  double subopt = 0.0;
  std::uint64_t batch_size = 0;
  double coupling_dist = kNaN;
  int crossed = 0;
};

struct TrainLog {
  bool stochastic_columns = false;
  std::vector<TrainRow> rows;
};

/// Lossless double formatting; parses back to the identical bit pattern.
inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::string csv_header(bool stochastic_columns) {
  std::string h = "grad_evals,phase,J,grad_norm,min_opt_prob,pl_lhs,pl_rhs,subopt";
  if (stochastic_columns) h += ",batch_size,coupling_dist,crossed";
  return h;
}

inline std::string csv_row(const TrainRow& r, bool stochastic_columns) {
  std::string line = std::to_string(r.grad_evals) + ',';
  line += r.phase < 0 ? "all" : std::to_string(r.phase);
  for (double v : {r.j, r.grad_norm, r.min_opt_prob, r.pl_lhs, r.pl_rhs, r.subopt})
    line += ',' + format_double(v);
  if (stochastic_columns)
    line += ',' + std::to_string(r.batch_size) + ',' +
            format_double(r.coupling_dist) + ',' + std::to_string(r.crossed);
  return line;
}

inline void write_csv(const TrainLog& log, std::ostream& os) {
  os << csv_header(log.stochastic_columns) << "\n";
  for (const auto& r : log.rows) os << csv_row(r, log.stochastic_columns) << "\n";
}

inline std::string to_csv(const TrainLog& log) {
  std::ostringstream ss;
  write_csv(log, ss);
  return ss.str();
}

inline TrainLog read_csv(std::istream& is) {
  TrainLog log;
  std::string line;
  if (!std::getline(is, line)) throw validation_error("empty log file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const std::string base = csv_header(false);
  if (line == csv_header(true))
    log.stochastic_columns = true;
  else if (line != base)
    throw validation_error("unrecognized log header: " + line);
  const std::size_t ncols = log.stochastic_columns ? 11 : 8;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::size_t pos = 0;
    while (true) {
      const std::size_t comma = line.find(',', pos);
      f.push_back(line.substr(pos, comma == std::string::npos ? comma : comma - pos));
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    if (f.size() != ncols)
      throw validation_error("bad log row (expected " + std::to_string(ncols) +
                             " fields): " + line);
    TrainRow r;
    r.grad_evals = std::stoull(f[0]);
    r.phase = f[1] == "all" ? -1 : std::stoi(f[1]);
    r.j = std::strtod(f[2].c_str(), nullptr);
    r.grad_norm = std::strtod(f[3].c_str(), nullptr);
    r.min_opt_prob = std::strtod(f[4].c_str(), nullptr);
    r.pl_lhs = std::strtod(f[5].c_str(), nullptr);
    r.pl_rhs = std::strtod(f[6].c_str(), nullptr);
    r.subopt = std::strtod(f[7].c_str(), nullptr);
    if (log.stochastic_columns) {
      r.batch_size = std::stoull(f[8]);
      r.coupling_dist = std::strtod(f[9].c_str(), nullptr);
      r.crossed = std::stoi(f[10]);
    }
    log.rows.push_back(r);
  }
  return log;
}

/// Hooks around the training loops. sink sees every step regardless of the
/// thinning applied to the returned log; observer sees (theta, gradient) just
/// before each update.
struct TrainOptions {
  std::uint64_t log_every = 1;
  std::optional<double> early_stop_subopt;
  std::function<void(const TrainRow&)> sink;
  std::function<void(const ParamTensor&, const GradTensor&)> observer;
};

struct TrainResult {
  ParamTensor theta;
  TrainLog log;
  std::uint64_t grad_evals = 0;
  bool early_stopped = false;
};

namespace detail {
inline void push_row(TrainLog& log, std::uint64_t log_every,
                     const std::function<void(const TrainRow&)>& sink,
                     const TrainRow& row, bool force) {
  if (sink) sink(row);
  if (force || log_every <= 1 || (row.grad_evals - 1) % log_every == 0)
    log.rows.push_back(row);
}

/// Start value of the policy that follows prefix rows before epoch h and has
/// the given epoch-h state values; the tail beyond h never matters.
inline double value_through_prefix(const FiniteMdp& m, const TabularPolicy& prefix,
                                   const std::vector<double>& v_h, int h,
                                   const std::vector<double>& mu0) {
  std::vector<double> v = v_h;
  for (int k = h - 1; k >= 0; --k) {
    std::vector<double> vk(m.num_states(k), 0.0);
    for (int s = 0; s < m.num_states(k); ++s) {
      double vs = 0.0;
      for (int a = 0; a < m.num_actions(k, s); ++a) {
        double q = m.reward[k][s][a];
        const auto& row = m.transition[k][s][a];
        for (std::size_t sp = 0; sp < row.size(); ++sp) q += row[sp] * v[sp];
        vs += prefix.prob[k][s][a] * q;
      }
      vk[s] = vs;
    }
    v = std::move(vk);
  }
  double j = 0.0;
  for (std::size_t s = 0; s < v.size(); ++s) j += mu0[s] * v[s];
  return j;
}
}  // namespace detail

/// Gradient ascent on all parameter blocks at once: theta <- theta + eta grad.
/// Each step logs the objective, gradient norm and certificate fields at the
/// pre-update point. With early stopping the loop exits before computing a
/// gradient once subopt <= the target.
inline TrainResult train_simultaneous(const FiniteMdp& m, const ParamTensor& theta0,
                                      const std::vector<double>& mu,
                                      const SimultaneousSchedule& sched,
                                      const TrainOptions& opts = {}) {
  validate_distribution(m, 0, mu);
  if (!(sched.eta > 0.0)) throw validation_error("step size must be > 0");
  const SimContext ctx = make_sim_context(m, mu);
  TrainResult res;
  res.theta = theta0;
  for (std::uint64_t n = 0; n < sched.n_steps; ++n) {
    const TabularPolicy pi = policy_of(res.theta);
    const ValueTables vt = evaluate_policy(m, pi);
    const auto vis = state_visitation(m, pi, mu);
    const double j = start_value(mu, vt.v[0]);
    if (opts.early_stop_subopt && ctx.j_star - j <= *opts.early_stop_subopt) {
      res.early_stopped = true;
      break;
    }
    GradTensor g = GradTensor::zeros(m);
    for (int h = 0; h < m.horizon; ++h)
      for (int s = 0; s < m.num_states(h); ++s)
        for (int a = 0; a < m.num_actions(h, s); ++a)
          g.value[h][s][a] = vis.rho[h][s] * pi.prob[h][s][a] * vt.adv[h][s][a];
    const double gn = g.norm();
    if (!std::isfinite(gn))
      throw std::runtime_error("non-finite gradient at step " + std::to_string(n));
    const PlCertificate cert = detail::sim_certificate(ctx, pi, j, gn, vis.d);
    TrainRow row;
    row.grad_evals = ++res.grad_evals;
    row.phase = -1;
    row.j = j;
    row.grad_norm = gn;
    row.min_opt_prob = cert.min_opt_prob;
    row.pl_lhs = cert.lhs;
    row.pl_rhs = cert.rhs;
    row.subopt = cert.suboptimality;
    detail::push_row(res.log, opts.log_every, opts.sink, row,
                     n + 1 == sched.n_steps);
    if (opts.observer) opts.observer(res.theta, g);
    axpy(res.theta, sched.eta, g);
  }
  return res;
}

///// Backward-in-time training: epochs are trained from the last to the first,
/// each phase running gradient ascent on its own block against the already
/// trained later blocks. Blocks outside the active phase are never touched.
/// global_mu weights the logged start-value gap of the full current policy.
inline TrainResult train_dynamic(const FiniteMdp& m, const ParamTensor& theta0,
                                 const std::vector<std::vector<double>>& mu_list,
                                 const std::vector<double>& global_mu,
                                 const DynamicSchedule& sched,
                                 const TrainOptions& opts = {}) {
  if (static_cast<int>(mu_list.size()) != m.horizon)
    throw validation_error("need one start distribution per epoch");
  validate_distribution(m, 0, global_mu);
  const OptimalSolution opt = backward_induction_optimal(m);
  const double j_star_global = start_value(global_mu, opt.tables.v[0]);
  TrainResult res;
  res.theta = theta0;
  TabularPolicy comp = policy_of(res.theta);
  for (int h = m.horizon - 1; h >= 0; --h) {
    validate_distribution(m, h, mu_list[h]);
    const DynPhase ph = make_dyn_phase(m, comp, mu_list[h], h);
    const double eta = sched.eta[h];
    if (!(eta > 0.0)) throw validation_error("step size must be > 0");
    for (std::uint64_t n = 0; n < sched.n_steps[h]; ++n) {
      DynStep st = dyn_step(ph, res.theta.value[h], mu_list[h]);
      if (!std::isfinite(st.grad_norm))
        throw std::runtime_error("non-finite gradient in phase " + std::to_string(h) +
                                 " at step " + std::to_string(n));
      std::vector<double> v_h(ph.q.size(), 0.0);
      for (std::size_t s = 0; s < ph.q.size(); ++s) {
        double vs = 0.0;
        for (std::size_t a = 0; a < ph.q[s].size(); ++a)
          vs += st.pi_rows[s][a] * ph.q[s][a];
        v_h[s] = vs;
      }
      const double j_global = detail::value_through_prefix(m, comp, v_h, h, global_mu);
      TrainRow row;
      row.grad_evals = ++res.grad_evals;
      row.phase = h;
      row.j = st.j;
      row.grad_norm = st.grad_norm;
      row.min_opt_prob = st.min_opt;
      row.pl_lhs = st.grad_norm;
      row.pl_rhs = st.min_opt * (ph.j_star - st.j) /
                   std::sqrt(static_cast<double>(m.num_states(h)));
      row.subopt = j_star_global - j_global;
      detail::push_row(res.log, opts.log_every, opts.sink, row,
                       h == 0 && n + 1 == sched.n_steps[h]);
      if (opts.observer) {
        GradTensor g = GradTensor::zeros(m);
        g.value[h] = st.grad;
        opts.observer(res.theta, g);
      }
      for (std::size_t s = 0; s < st.grad.size(); ++s)
        for (std::size_t a = 0; a < st.grad[s].size(); ++a)
          res.theta.value[h][s][a] += eta * st.grad[s][a];
    }
    for (std::size_t s = 0; s < comp.prob[h].size(); ++s)
      comp.prob[h][s] = softmax_row(res.theta.value[h][s]);
  }
  return res;
}

}  // namespace finmdp
