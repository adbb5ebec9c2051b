#pragma once
#include <cmath>
#include <cstdint>
#include <vector>

#include "finmdp/exact_gradient.hpp"

namespace finmdp {

namespace detail {
inline std::uint64_t ceil_steps(double n_real, const char* what) {
  if (!(n_real > 0.0)) throw validation_error(std::string(what) + " must be positive");
  if (n_real > 1e15)
    throw budget_error(std::string(what) + " exceeds the representable step budget (" +
                       std::to_string(n_real) + ")");
  const double c = std::ceil(n_real);
  return c < 1.0 ? 1 : static_cast<std::uint64_t>(c);
}

/// max_s d*(s) / mu(s); infinite when mu misses a state the optimal policy
/// visits.
inline double d_star_over_mu(const FiniteMdp& m, const std::vector<double>& mu,
                             const std::map<std::string, double>& d_star) {
  double r = 0.0;
  for (int s = 0; s < m.num_states(0); ++s) {
    const double ds = d_star.at(m.state_ids[0][s]);
    if (ds == 0.0) continue;
    if (mu[s] == 0.0) return std::numeric_limits<double>::infinity();
    r = std::max(r, ds / mu[s]);
  }
  return r;
}
}  // namespace detail

/// Fixed step size and step count for all-epochs training at accuracy epsilon.
struct SimultaneousSchedule {
  double eta = 0.0;
  std::uint64_t n_steps = 0;
  double epsilon = 0.0;
  double c_estimate = 0.0;
  double d_star_over_mu_inf = 0.0;
};

/// eta = 1 / (5 H^2 R*); N = ceil(10 H^5 R* |S| ||d*/mu||_inf^2 / (c^2 eps)).
/// The step count is meaningful under a constant state space; pass
/// allow_varying_states to size a run anyway (|S| is then the tagged total).
inline SimultaneousSchedule schedule_simultaneous(const FiniteMdp& m,
                                                  const std::vector<double>& mu,
                                                  double epsilon, double c_estimate,
                                                  bool allow_varying_states = false) {
  if (!(epsilon > 0.0)) throw validation_error("epsilon must be > 0");
  if (!(c_estimate > 0.0) || c_estimate > 1.0)
    throw validation_error("c estimate must lie in (0, 1]");
  if (!m.constant_state_space() && !allow_varying_states)
    throw validation_error(
        "state space varies across epochs; pass the explicit override to size an "
        "all-epochs schedule anyway");
  validate_distribution(m, 0, mu);
  SimultaneousSchedule sc;
  const double H = m.horizon;
  sc.eta = 1.0 / (5.0 * H * H * m.r_star);
  sc.epsilon = epsilon;
  sc.c_estimate = c_estimate;
  const auto opt = backward_induction_optimal(m);
  const auto d_star = state_visitation(m, opt.policy, mu).d;
  sc.d_star_over_mu_inf = detail::d_star_over_mu(m, mu, d_star);
  if (!std::isfinite(sc.d_star_over_mu_inf))
    throw validation_error(
        "start distribution must be strictly positive on states the optimal "
        "policy visits; the step count is unbounded otherwise");
  const double S = m.constant_state_space() ? m.num_states(0) : m.total_states();
  const double n_real = 10.0 * std::pow(H, 5) * m.r_star * S *
                        sc.d_star_over_mu_inf * sc.d_star_over_mu_inf /
                        (c_estimate * c_estimate * epsilon);
  sc.n_steps = detail::ceil_steps(n_real, "step count");
  return sc;
}

/// Per-epoch step sizes and counts for backward-in-time training.
struct DynamicSchedule {
  std::vector<double> eta;             // eta[h] = 1 / (2 (H - h) R*)
  std::vector<std::uint64_t> n_steps;  // decreasing in h
  double c_h = 0.0;
  double epsilon = 0.0;

  std::uint64_t total_steps() const {
    std::uint64_t t = 0;
    for (auto n : n_steps) t += n;
    return t;
  }
};

/// eta_h = 1 / (2 (H - h) R*); N_h = ceil(4 (H - h) H R* ||1/mu_h||_inf /
/// (c_h^2 eps)); c_h = 1/|A| under uniform initialisation.
inline DynamicSchedule schedule_dynamic(const FiniteMdp& m,
                                        const std::vector<std::vector<double>>& mu_list,
                                        double epsilon, bool uniform_init,
                                        double c_user = kNaN) {
  if (!(epsilon > 0.0)) throw validation_error("epsilon must be > 0");
  if (static_cast<int>(mu_list.size()) != m.horizon)
    throw validation_error("need one start distribution per epoch");
  DynamicSchedule sc;
  sc.epsilon = epsilon;
  sc.c_h = uniform_init ? 1.0 / m.max_actions() : c_user;
  if (!(sc.c_h > 0.0) || sc.c_h > 1.0)
    throw validation_error("c_h must lie in (0, 1]");
  sc.eta.resize(m.horizon);
  sc.n_steps.resize(m.horizon);
  const double H = m.horizon;
  for (int h = 0; h < m.horizon; ++h) {
    validate_distribution(m, h, mu_list[h]);
    double inv_mu = 0.0;
    for (double p : mu_list[h]) {
      if (p == 0.0)
        throw validation_error("mu_" + std::to_string(h) +
                               " must be strictly positive");
      inv_mu = std::max(inv_mu, 1.0 / p);
    }
    sc.eta[h] = 1.0 / (2.0 * (H - h) * m.r_star);
    const double n_real = 4.0 * (H - h) * H * m.r_star * inv_mu /
                          (sc.c_h * sc.c_h * epsilon);
    sc.n_steps[h] = detail::ceil_steps(n_real, "step count");
  }
  return sc;
}

/// Update count, step size and batch size for stochastic training. Theorem-
/// sized counts overflow 64-bit integers at realistic targets, so they are kept
/// real-valued; runnable schedules must fit the caller's budget.
struct StochasticSchedule {
  bool dynamic_scheme = false;
  double epsilon = 0.0;
  double delta = 0.0;
  // all-epochs fields
  double n = 0.0;
  double k = 0.0;
  double eta = 0.0;
  // per-epoch fields
  std::vector<double> n_h, k_h, eta_h;

  double total_trajectories() const {
    if (!dynamic_scheme) return n * k;
    double t = 0.0;
    for (std::size_t h = 0; h < n_h.size(); ++h) t += n_h[h] * k_h[h];
    return t;
  }
};

/// N = (21 |S| H^5 R* / (eps delta c^2))^2 ||d*/mu||_inf^4;
/// eta = 1 / (5 H^2 R* sqrt(N)); K = 10 max(R*,1)^2 N^3 / (c^2 delta^2).
inline StochasticSchedule theorem_stochastic_simultaneous(
    const FiniteMdp& m, const std::vector<double>& mu, double epsilon, double delta,
    double c_estimate, bool allow_varying_states = false) {
  if (!(epsilon > 0.0)) throw validation_error("epsilon must be > 0");
  if (!(delta > 0.0) || delta >= 1.0)
    throw validation_error("delta must lie in (0, 1)");
  if (!(c_estimate > 0.0) || c_estimate > 1.0)
    throw validation_error("c estimate must lie in (0, 1]");
  if (!m.constant_state_space() && !allow_varying_states)
    throw validation_error(
        "state space varies across epochs; pass the explicit override to size an "
        "all-epochs schedule anyway");
  validate_distribution(m, 0, mu);
  const auto opt = backward_induction_optimal(m);
  const auto d_star = state_visitation(m, opt.policy, mu).d;
  const double mismatch = detail::d_star_over_mu(m, mu, d_star);
  if (!std::isfinite(mismatch))
    throw validation_error(
        "start distribution must be strictly positive on states the optimal "
        "policy visits");
  StochasticSchedule sc;
  sc.dynamic_scheme = false;
  sc.epsilon = epsilon;
  sc.delta = delta;
  const double H = m.horizon;
  const double S = m.constant_state_space() ? m.num_states(0) : m.total_states();
  const double base =
      21.0 * S * std::pow(H, 5) * m.r_star / (epsilon * delta * c_estimate * c_estimate);
  sc.n = base * base * std::pow(mismatch, 4);
  sc.eta = 1.0 / (5.0 * H * H * m.r_star * std::sqrt(sc.n));
  const double rmax = std::max(m.r_star, 1.0);
  sc.k = 10.0 * rmax * rmax * std::pow(sc.n, 3) /
         (c_estimate * c_estimate * delta * delta);
  return sc;
}

/// N_h = (12 (H - h) R* H^2 ||1/mu_h||_inf / (delta c_h^2 eps))^2;
/// eta_h = 1 / (2 (H - h) R* sqrt(N_h)); K_h = 5 N_h^3 H^2 / (c_h^2 delta^2).
inline StochasticSchedule theorem_stochastic_dynamic(
    const FiniteMdp& m, const std::vector<std::vector<double>>& mu_list,
    double epsilon, double delta, bool uniform_init, double c_user = kNaN) {
  if (!(epsilon > 0.0)) throw validation_error("epsilon must be > 0");
  if (!(delta > 0.0) || delta >= 1.0)
    throw validation_error("delta must lie in (0, 1)");
  if (static_cast<int>(mu_list.size()) != m.horizon)
    throw validation_error("need one start distribution per epoch");
  StochasticSchedule sc;
  sc.dynamic_scheme = true;
  sc.epsilon = epsilon;
  sc.delta = delta;
  const double c_h = uniform_init ? 1.0 / m.max_actions() : c_user;
  if (!(c_h > 0.0) || c_h > 1.0) throw validation_error("c_h must lie in (0, 1]");
  const double H = m.horizon;
  sc.n_h.resize(m.horizon);
  sc.k_h.resize(m.horizon);
  sc.eta_h.resize(m.horizon);
  for (int h = 0; h < m.horizon; ++h) {
    validate_distribution(m, h, mu_list[h]);
    double inv_mu = 0.0;
    for (double p : mu_list[h]) {
      if (p == 0.0)
        throw validation_error("mu_" + std::to_string(h) +
                               " must be strictly positive");
      inv_mu = std::max(inv_mu, 1.0 / p);
    }
    const double base =
        12.0 * (H - h) * m.r_star * H * H * inv_mu / (delta * c_h * c_h * epsilon);
    sc.n_h[h] = base * base;
    sc.eta_h[h] = 1.0 / (2.0 * (H - h) * m.r_star * std::sqrt(sc.n_h[h]));
    sc.k_h[h] = 5.0 * std::pow(sc.n_h[h], 3) * H * H / (c_h * c_h * delta * delta);
  }
  return sc;
}

/// User-sized schedule; when eta is not given it takes the theorem form at the
/// given N.
inline StochasticSchedule user_stochastic_simultaneous(const FiniteMdp& m,
                                                       std::uint64_t n_steps,
                                                       std::uint64_t batch,
                                                       double eta = 0.0) {
  if (n_steps < 1 || batch < 1)
    throw validation_error("step count and batch size must be >= 1");
  StochasticSchedule sc;
  sc.dynamic_scheme = false;
  sc.n = static_cast<double>(n_steps);
  sc.k = static_cast<double>(batch);
  const double H = m.horizon;
  sc.eta = eta > 0.0 ? eta : 1.0 / (5.0 * H * H * m.r_star * std::sqrt(sc.n));
  return sc;
}

inline StochasticSchedule user_stochastic_dynamic(const FiniteMdp& m,
                                                  std::uint64_t n_steps_per_epoch,
                                                  std::uint64_t batch,
                                                  double eta = 0.0) {
  if (n_steps_per_epoch < 1 || batch < 1)
    throw validation_error("step count and batch size must be >= 1");
  StochasticSchedule sc;
  sc.dynamic_scheme = true;
  sc.epsilon = 0.0;
  const double H = m.horizon;
  sc.n_h.assign(m.horizon, static_cast<double>(n_steps_per_epoch));
  sc.k_h.assign(m.horizon, static_cast<double>(batch));
  sc.eta_h.resize(m.horizon);
  for (int h = 0; h < m.horizon; ++h)
    sc.eta_h[h] = eta > 0.0
                      ? eta
                      : 1.0 / (2.0 * (H - h) * m.r_star * std::sqrt(sc.n_h[h]));
  return sc;
}

}  // namespace finmdp
