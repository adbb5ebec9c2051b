#pragma once
#include <atomic>
#include <cstdint>
#include <optional>
#include <thread>
#include <vector>

#include "finmdp/train.hpp"

namespace finmdp {

/// Batch evaluation knobs. Trajectory i of update step n always draws from
/// substream (seed, n, i), and per-trajectory terms are accumulated into
/// fixed-size chunks that are reduced in index order, so results are
/// bit-identical for every thread count.
struct BatchOptions {
  int threads = 1;
  std::uint64_t chunk = 64;
};

namespace detail {
template <typename PerChunk>
inline void run_chunks(std::uint64_t n_chunks, int threads, PerChunk&& body) {
  if (threads <= 1 || n_chunks <= 1) {
    for (std::uint64_t c = 0; c < n_chunks; ++c) body(c);
    return;
  }
  std::atomic<std::uint64_t> next{0};
  auto worker = [&] {
    while (true) {
      const std::uint64_t c = next.fetch_add(1);
      if (c >= n_chunks) return;
      body(c);
    }
  };
  const int nt = static_cast<int>(
      std::min<std::uint64_t>(static_cast<std::uint64_t>(threads), n_chunks));
  std::vector<std::thread> pool;
  pool.reserve(nt);
  for (int t = 0; t < nt; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
}
}  // namespace detail

/// Monte-Carlo gradient of the all-epochs objective: the average over K
/// sampled trajectories of sum_h grad log pi(a_h|s_h) * reward-to-go from h.
inline GradTensor estimate_grad_simultaneous(const FiniteMdp& m,
                                             const ParamTensor& theta,
                                             const std::vector<double>& mu,
                                             std::uint64_t K, std::uint64_t seed,
                                             std::uint64_t step = 0,
                                             const BatchOptions& opts = {}) {
  if (K < 1) throw validation_error("batch size must be >= 1");
  const TabularPolicy pi = policy_of(theta);
  const std::uint64_t chunk = opts.chunk < 1 ? 1 : opts.chunk;
  const std::uint64_t n_chunks = (K + chunk - 1) / chunk;
  std::vector<GradTensor> partial(n_chunks, GradTensor::zeros(m));
  detail::run_chunks(n_chunks, opts.threads, [&](std::uint64_t c) {
    GradTensor& acc = partial[c];
    const std::uint64_t lo = c * chunk, hi = std::min(K, lo + chunk);
    for (std::uint64_t i = lo; i < hi; ++i) {
      CounterRng rng = CounterRng::substream(seed, step, i);
      const Trajectory tr = sample_trajectory(m, pi, mu, 0, rng);
      for (int k = 0; k < m.horizon; ++k) {
        const int s = tr.state[k];
        const int a = tr.action[k];
        const double w = tr.reward_to_go[k];
        auto& row = acc.value[k][s];
        const auto& pr = pi.prob[k][s];
        for (std::size_t ap = 0; ap < row.size(); ++ap)
          row[ap] += w * ((static_cast<int>(ap) == a ? 1.0 : 0.0) - pr[ap]);
      }
    }
  });
  GradTensor g = GradTensor::zeros(m);
  for (std::uint64_t c = 0; c < n_chunks; ++c)
    for (std::size_t h = 0; h < g.value.size(); ++h)
      for (std::size_t s = 0; s < g.value[h].size(); ++s)
        for (std::size_t a = 0; a < g.value[h][s].size(); ++a)
          g.value[h][s][a] += partial[c].value[h][s][a];
  const double inv = 1.0 / static_cast<double>(K);
  for (auto& hb : g.value)
    for (auto& row : hb)
      for (double& x : row) x *= inv;
  return g;
}

/// Monte-Carlo gradient of the epoch-h objective: trajectories start at h from
/// mu_h, take the first action under softmax(theta_h) and later actions under
/// the frozen tail policy; only the (h, s_h) row receives mass.
inline GradTensor estimate_grad_dynamic(const FiniteMdp& m, const Block& theta_h,
                                        const TabularPolicy& tilde_pi,
                                        const std::vector<double>& mu_h, int h,
                                        std::uint64_t K, std::uint64_t seed,
                                        std::uint64_t step = 0,
                                        const BatchOptions& opts = {}) {
  if (K < 1) throw validation_error("batch size must be >= 1");
  TabularPolicy comp = tilde_pi;
  comp.prob[h].resize(theta_h.size());
  for (std::size_t s = 0; s < theta_h.size(); ++s)
    comp.prob[h][s] = softmax_row(theta_h[s]);
  const std::uint64_t chunk = opts.chunk < 1 ? 1 : opts.chunk;
  const std::uint64_t n_chunks = (K + chunk - 1) / chunk;
  std::vector<Block> partial(n_chunks);
  for (auto& b : partial) {
    b.resize(theta_h.size());
    for (std::size_t s = 0; s < theta_h.size(); ++s)
      b[s].assign(theta_h[s].size(), 0.0);
  }
  detail::run_chunks(n_chunks, opts.threads, [&](std::uint64_t c) {
    Block& acc = partial[c];
    const std::uint64_t lo = c * chunk, hi = std::min(K, lo + chunk);
    for (std::uint64_t i = lo; i < hi; ++i) {
      CounterRng rng = CounterRng::substream(seed, step, i);
      const Trajectory tr = sample_trajectory(m, comp, mu_h, h, rng);
      const int s = tr.state[0];
      const int a = tr.action[0];
      const double w = tr.reward_to_go[0];
      const auto& pr = comp.prob[h][s];
      for (std::size_t ap = 0; ap < acc[s].size(); ++ap)
        acc[s][ap] += w * ((static_cast<int>(ap) == a ? 1.0 : 0.0) - pr[ap]);
    }
  });
  GradTensor g = GradTensor::zeros(m);
  const double inv = 1.0 / static_cast<double>(K);
  for (std::uint64_t c = 0; c < n_chunks; ++c)
    for (std::size_t s = 0; s < theta_h.size(); ++s)
      for (std::size_t a = 0; a < theta_h[s].size(); ++a)
        g.value[h][s][a] += partial[c][s][a];
  for (std::size_t s = 0; s < theta_h.size(); ++s)
    for (std::size_t a = 0; a < theta_h[s].size(); ++a) g.value[h][s][a] *= inv;
  return g;
}

/// Distance of the stochastic parameter trajectory to an exact-gradient twin
/// started from the same point with the same step sizes, plus the first step
/// (1-based) at which it reached the c/4 drift threshold, if any.
struct CouplingTrace {
  std::vector<double> distance;
  std::vector<double> threshold;
  std::optional<std::uint64_t> first_crossing;
};

struct StochTrainOptions {
  std::uint64_t log_every = 1;
  std::function<void(const TrainRow&)> sink;
  BatchOptions batch;
  bool coupling = false;
};

struct StochTrainResult {
  ParamTensor theta;
  TrainLog log;
  CouplingTrace trace;
  std::uint64_t grad_evals = 0;
};

/// Stochastic ascent on all blocks at once. Objective, gradient-norm and
/// certificate columns are exact diagnostics evaluated at the current iterate;
/// only the update direction is estimated. With coupling enabled an exact twin
/// runs in lockstep and the drift threshold is the running empirical minimum
/// optimal-action probability along the twin, divided by four.
inline StochTrainResult train_stochastic_simultaneous(
    const FiniteMdp& m, const ParamTensor& theta0, const std::vector<double>& mu,
    const StochasticSchedule& sched, std::uint64_t seed,
    const StochTrainOptions& opts = {}) {
  if (sched.dynamic_scheme) throw validation_error("schedule is for the dynamic scheme");
  if (!(sched.n >= 1.0) || !(sched.k >= 1.0) || !(sched.eta > 0.0))
    throw validation_error("stochastic schedule must have positive N, K, eta");
  if (sched.n > 1e9 || sched.k > 1e9)
    throw budget_error("stochastic schedule too large to run directly");
  const auto N = static_cast<std::uint64_t>(sched.n);
  const auto K = static_cast<std::uint64_t>(sched.k);
  validate_distribution(m, 0, mu);
  const SimContext ctx = make_sim_context(m, mu);
  StochTrainResult res;
  res.theta = theta0;
  res.log.stochastic_columns = true;
  ParamTensor twin = theta0;
  double c_hat = 1.0;
  for (std::uint64_t n = 0; n < N; ++n) {
    const TabularPolicy pi = policy_of(res.theta);
    const ValueTables vt = evaluate_policy(m, pi);
    const auto vis = state_visitation(m, pi, mu);
    const double j = start_value(mu, vt.v[0]);
    GradTensor exact = GradTensor::zeros(m);
    for (int h = 0; h < m.horizon; ++h)
      for (int s = 0; s < m.num_states(h); ++s)
        for (int a = 0; a < m.num_actions(h, s); ++a)
          exact.value[h][s][a] = vis.rho[h][s] * pi.prob[h][s][a] * vt.adv[h][s][a];
    const double gn = exact.norm();
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
    row.batch_size = K;
    if (opts.coupling) {
      const TabularPolicy twin_pi = policy_of(twin);
      c_hat = std::min(c_hat, min_optimal_prob(twin_pi, ctx.opt.best_action));
      const double dist = param_distance(res.theta, twin);
      const double thr = c_hat / 4.0;
      res.trace.distance.push_back(dist);
      res.trace.threshold.push_back(thr);
      if (!res.trace.first_crossing && dist >= thr)
        res.trace.first_crossing = n + 1;
      row.coupling_dist = dist;
      row.crossed = res.trace.first_crossing ? 1 : 0;
      GradTensor twin_g = grad_simultaneous(m, twin, mu);
      axpy(twin, sched.eta, twin_g);
    }
    detail::push_row(res.log, opts.log_every, opts.sink, row, n + 1 == N);
    GradTensor est = estimate_grad_simultaneous(m, res.theta, mu, K, seed, n, opts.batch);
    if (!std::isfinite(est.norm()))
      throw std::runtime_error("non-finite update at step " + std::to_string(n));
    axpy(res.theta, sched.eta, est);
  }
  return res;
}

/// Stochastic backward-in-time training: per phase, batched updates of one
/// block against the already (stochastically) trained tail. The coupling twin
/// restarts each phase from the same block start, shares the run's own tail,
/// and uses threshold 1/(4 |A|), the uniform-initialisation constant.
inline StochTrainResult train_stochastic_dynamic(
    const FiniteMdp& m, const ParamTensor& theta0,
    const std::vector<std::vector<double>>& mu_list,
    const std::vector<double>& global_mu, const StochasticSchedule& sched,
    std::uint64_t seed, const StochTrainOptions& opts = {}) {
  if (!sched.dynamic_scheme)
    throw validation_error("schedule is for the all-epochs scheme");
  if (static_cast<int>(mu_list.size()) != m.horizon)
    throw validation_error("need one start distribution per epoch");
  validate_distribution(m, 0, global_mu);
  const OptimalSolution opt = backward_induction_optimal(m);
  const double j_star_global = start_value(global_mu, opt.tables.v[0]);
  StochTrainResult res;
  res.theta = theta0;
  res.log.stochastic_columns = true;
  TabularPolicy comp = policy_of(res.theta);
  const double c_h = 1.0 / m.max_actions();
  for (int h = m.horizon - 1; h >= 0; --h) {
    validate_distribution(m, h, mu_list[h]);
    if (!(sched.n_h[h] >= 1.0) || !(sched.k_h[h] >= 1.0) || !(sched.eta_h[h] > 0.0))
      throw validation_error("stochastic schedule must have positive N, K, eta");
    if (sched.n_h[h] > 1e9 || sched.k_h[h] > 1e9)
      throw budget_error("stochastic schedule too large to run directly");
    const auto N = static_cast<std::uint64_t>(sched.n_h[h]);
    const auto K = static_cast<std::uint64_t>(sched.k_h[h]);
    const double eta = sched.eta_h[h];
    const DynPhase ph = make_dyn_phase(m, comp, mu_list[h], h);
    Block twin = theta0.value[h];
    for (std::uint64_t n = 0; n < N; ++n) {
      const DynStep st = dyn_step(ph, res.theta.value[h], mu_list[h]);
      std::vector<double> v_h(ph.q.size(), 0.0);
      for (std::size_t s = 0; s < ph.q.size(); ++s) {
        double vs = 0.0;
        for (std::size_t a = 0; a < ph.q[s].size(); ++a)
          vs += st.pi_rows[s][a] * ph.q[s][a];
        v_h[s] = vs;
      }
      const double j_global =
          detail::value_through_prefix(m, comp, v_h, h, global_mu);
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
      row.batch_size = K;
      if (opts.coupling) {
        double sq = 0.0;
        for (std::size_t s = 0; s < twin.size(); ++s)
          for (std::size_t a = 0; a < twin[s].size(); ++a) {
            const double d = res.theta.value[h][s][a] - twin[s][a];
            sq += d * d;
          }
        const double dist = std::sqrt(sq);
        const double thr = c_h / 4.0;
        res.trace.distance.push_back(dist);
        res.trace.threshold.push_back(thr);
        if (!res.trace.first_crossing && dist >= thr)
          res.trace.first_crossing = res.grad_evals;
        row.coupling_dist = dist;
        row.crossed = res.trace.first_crossing ? 1 : 0;
        const DynStep tw = dyn_step(ph, twin, mu_list[h]);
        for (std::size_t s = 0; s < twin.size(); ++s)
          for (std::size_t a = 0; a < twin[s].size(); ++a)
            twin[s][a] += eta * tw.grad[s][a];
      }
      detail::push_row(res.log, opts.log_every, opts.sink, row,
                       h == 0 && n + 1 == N);
      GradTensor est =
          estimate_grad_dynamic(m, res.theta.value[h], comp, mu_list[h], h, K, seed,
                                res.grad_evals - 1, opts.batch);
      if (!std::isfinite(est.norm()))
        throw std::runtime_error("non-finite update in phase " + std::to_string(h));
      for (std::size_t s = 0; s < res.theta.value[h].size(); ++s)
        for (std::size_t a = 0; a < res.theta.value[h][s].size(); ++a)
          res.theta.value[h][s][a] += eta * est.value[h][s][a];
    }
    for (std::size_t s = 0; s < comp.prob[h].size(); ++s)
      comp.prob[h][s] = softmax_row(res.theta.value[h][s]);
  }
  return res;
}

/// Lockstep exact-vs-stochastic drift record for the all-epochs scheme.
inline CouplingTrace coupling_trace_simultaneous(const FiniteMdp& m,
                                                const ParamTensor& theta0,
                                                const std::vector<double>& mu,
                                                double eta, std::uint64_t K,
                                                std::uint64_t n_steps,
                                                std::uint64_t seed,
                                                const BatchOptions& batch = {}) {
  StochasticSchedule sc;
  sc.dynamic_scheme = false;
  sc.n = static_cast<double>(n_steps);
  sc.k = static_cast<double>(K);
  sc.eta = eta;
  StochTrainOptions opts;
  opts.batch = batch;
  opts.coupling = true;
  opts.log_every = n_steps + 1;  // trace only
  return train_stochastic_simultaneous(m, theta0, mu, sc, seed, opts).trace;
}

/// Lockstep drift record for the backward-in-time scheme.
inline CouplingTrace coupling_trace_dynamic(
    const FiniteMdp& m, const ParamTensor& theta0,
    const std::vector<std::vector<double>>& mu_list,
    const std::vector<double>& global_mu, const std::vector<double>& eta_h,
    std::uint64_t K, std::uint64_t n_steps_per_epoch, std::uint64_t seed,
    const BatchOptions& batch = {}) {
  StochasticSchedule sc;
  sc.dynamic_scheme = true;
  sc.n_h.assign(m.horizon, static_cast<double>(n_steps_per_epoch));
  sc.k_h.assign(m.horizon, static_cast<double>(K));
  sc.eta_h = eta_h;
  StochTrainOptions opts;
  opts.batch = batch;
  opts.coupling = true;
  opts.log_every = n_steps_per_epoch * m.horizon + 1;
  return train_stochastic_dynamic(m, theta0, mu_list, global_mu, sc, seed, opts).trace;
}

}  // namespace finmdp
