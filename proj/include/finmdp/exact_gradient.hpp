#pragma once
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <vector>

#include "finmdp/softmax.hpp"
#include "finmdp/value.hpp"

namespace finmdp {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// One per-state parameter block theta_h, rows indexed by state.
using Block = std::vector<std::vector<double>>;

/// Smoothness constant of the all-epochs objective, H^2 R* (2 - 1/|A|); with
/// per-state action counts the largest |A_s| gives a valid uniform bound.
inline double beta_simultaneous(const FiniteMdp& m) {
  return static_cast<double>(m.horizon) * m.horizon * m.r_star *
         (2.0 - 1.0 / m.max_actions());
}

/// Smoothness constant of the epoch-h objective, 2 (H - h) R*.
inline double beta_dynamic(const FiniteMdp& m, int h) {
  return 2.0 * (m.horizon - h) * m.r_star;
}

/// Exact all-epochs gradient: entry (h, s, a) equals
/// rho(s_h) * pi(a|s_h) * adv_h(s_h, a) under pi = softmax(theta).
inline GradTensor grad_simultaneous(const FiniteMdp& m, const ParamTensor& theta,
                                    const std::vector<double>& mu) {
  const TabularPolicy pi = policy_of(theta);
  const ValueTables vt = evaluate_policy(m, pi);
  const auto rho = visitation_from(m, pi, mu, 0);
  GradTensor g = GradTensor::zeros(m);
  for (int h = 0; h < m.horizon; ++h)
    for (int s = 0; s < m.num_states(h); ++s)
      for (int a = 0; a < m.num_actions(h, s); ++a)
        g.value[h][s][a] = rho[h][s] * pi.prob[h][s][a] * vt.adv[h][s][a];
  return g;
}

/// Quantities fixed for a whole phase of backward-in-time training: the tail
/// policy beyond epoch h is frozen, so the epoch-h action values, the greedy
/// action per state and the phase optimum are all constant.
struct DynPhase {
  int h = 0;
  std::vector<std::vector<double>> q;  // [s][a]
  std::vector<int> best_action;        // argmax_a q, smallest index on ties
  double j_star = 0.0;                 // sum_s mu_h(s) max_a q(s, a)
};

inline DynPhase make_dyn_phase(const FiniteMdp& m, const TabularPolicy& tilde_pi,
                               const std::vector<double>& mu_h, int h) {
  DynPhase ph;
  ph.h = h;
  const int ns = m.num_states(h);
  ph.q.resize(ns);
  ph.best_action.assign(ns, 0);
  ValueTables tail;
  if (h + 1 < m.horizon) tail = detail::evaluate_tail(m, tilde_pi, h + 1);
  for (int s = 0; s < ns; ++s) {
    const int na = m.num_actions(h, s);
    ph.q[s].resize(na);
    for (int a = 0; a < na; ++a) {
      double q = m.reward[h][s][a];
      if (h + 1 < m.horizon) {
        const auto& row = m.transition[h][s][a];
        for (std::size_t sp = 0; sp < row.size(); ++sp)
          q += row[sp] * tail.v[h + 1][sp];
      }
      ph.q[s][a] = q;
      if (q > ph.q[s][ph.best_action[s]]) ph.best_action[s] = a;
    }
    ph.j_star += mu_h[s] * ph.q[s][ph.best_action[s]];
  }
  return ph;
}

/// Per-iterate quantities of one phase evaluation at a block theta_h.
struct DynStep {
  std::vector<std::vector<double>> pi_rows;  // [s][a]
  Block grad;                                // [s][a]
  double j = 0.0;
  double grad_norm = 0.0;
  double min_opt = 1.0;
};

inline DynStep dyn_step(const DynPhase& ph, const Block& theta_h,
                        const std::vector<double>& mu_h) {
  DynStep st;
  const std::size_t ns = ph.q.size();
  st.pi_rows.resize(ns);
  st.grad.resize(ns);
  double sq = 0.0;
  for (std::size_t s = 0; s < ns; ++s) {
    st.pi_rows[s] = softmax_row(theta_h[s]);
    const auto& pi = st.pi_rows[s];
    const auto& q = ph.q[s];
    double vs = 0.0;
    for (std::size_t a = 0; a < q.size(); ++a) vs += pi[a] * q[a];
    st.j += mu_h[s] * vs;
    st.grad[s].resize(q.size());
    for (std::size_t a = 0; a < q.size(); ++a) {
      const double g = mu_h[s] * pi[a] * (q[a] - vs);
      st.grad[s][a] = g;
      sq += g * g;
    }
    st.min_opt = std::min(st.min_opt, pi[ph.best_action[s]]);
  }
  st.grad_norm = std::sqrt(sq);
  return st;
}

/// Exact epoch-h gradient against a frozen tail policy: entry (s, a) equals
/// mu_h(s) * pi(a|s) * adv_h(s, a). Depends only on the epoch-h block.
inline GradTensor grad_dynamic(const FiniteMdp& m, const Block& theta_h,
                               const TabularPolicy& tilde_pi,
                               const std::vector<double>& mu_h, int h) {
  const DynPhase ph = make_dyn_phase(m, tilde_pi, mu_h, h);
  const DynStep st = dyn_step(ph, theta_h, mu_h);
  GradTensor g = GradTensor::zeros(m);
  g.value[h] = st.grad;
  return g;
}

/// Visitation-distribution mismatch between an optimal policy and the current
/// one: max over states of d*(s) / d(s), plus the uniform bound
/// H * max_s d*(s) / mu(s). Requires a constant state space across epochs.
struct MismatchBounds {
  double max_ratio = 1.0;
  double uniform_bound = 1.0;
};

inline MismatchBounds distribution_mismatch(const FiniteMdp& m,
                                            const std::vector<double>& mu,
                                            const TabularPolicy& pi_star,
                                            const TabularPolicy& pi_theta) {
  if (!m.constant_state_space())
    throw validation_error(
        "distribution mismatch requires a constant state space across epochs");
  const auto d_star = state_visitation(m, pi_star, mu).d;
  const auto d_theta = state_visitation(m, pi_theta, mu).d;
  MismatchBounds out;
  out.max_ratio = 0.0;
  out.uniform_bound = 0.0;
  for (int s = 0; s < m.num_states(0); ++s) {
    const std::string& sid = m.state_ids[0][s];
    const double ds = d_star.at(sid);
    if (ds == 0.0) continue;
    const double dt = d_theta.at(sid);
    if (dt == 0.0)
      throw validation_error("mismatch denominator zero at state \"" + sid + "\"");
    out.max_ratio = std::max(out.max_ratio, ds / dt);
    out.uniform_bound =
        std::max(out.uniform_bound,
                 mu[s] > 0.0 ? m.horizon * ds / mu[s]
                             : std::numeric_limits<double>::infinity());
  }
  return out;
}

/// Gradient-domination diagnostic: lhs is the gradient norm, rhs the certified
/// lower bound, and lhs >= rhs - 1e-10 whenever the bound applies. mismatch is
/// meaningful for the all-epochs objective only and NaN when the constant-
/// state-space requirement fails (the bound is then not applicable).
struct PlCertificate {
  double lhs = 0.0;
  double rhs = 0.0;
  double suboptimality = 0.0;
  double min_opt_prob = 1.0;
  double mismatch = kNaN;
};

/// Context fixed along one simultaneous run: the optimal solution, its start
/// value and its visitation aggregate.
struct SimContext {
  OptimalSolution opt;
  double j_star = 0.0;
  std::map<std::string, double> d_star;
  bool constant_space = false;
  double sqrt_total_states = 1.0;
};

inline SimContext make_sim_context(const FiniteMdp& m, const std::vector<double>& mu) {
  SimContext ctx;
  ctx.opt = backward_induction_optimal(m);
  ctx.j_star = start_value(mu, ctx.opt.tables.v[0]);
  ctx.d_star = state_visitation(m, ctx.opt.policy, mu).d;
  ctx.constant_space = m.constant_state_space();
  ctx.sqrt_total_states = std::sqrt(static_cast<double>(m.total_states()));
  return ctx;
}

namespace detail {
inline PlCertificate sim_certificate(const SimContext& ctx,
                                     const TabularPolicy& pi, double j,
                                     double grad_norm,
                                     const std::map<std::string, double>& d_theta) {
  PlCertificate cert;
  cert.lhs = grad_norm;
  cert.suboptimality = ctx.j_star - j;
  cert.min_opt_prob = min_optimal_prob(pi, ctx.opt.best_action);
  if (ctx.constant_space) {
    double ratio = 0.0;
    for (const auto& [sid, ds] : ctx.d_star) {
      if (ds == 0.0) continue;
      const double dt = d_theta.at(sid);
      if (dt == 0.0)
        throw validation_error("mismatch denominator zero at state \"" + sid + "\"");
      ratio = std::max(ratio, ds / dt);
    }
    cert.mismatch = ratio;
    cert.rhs = cert.min_opt_prob / (ctx.sqrt_total_states * ratio) *
               cert.suboptimality;
  } else {
    cert.mismatch = kNaN;
    cert.rhs = kNaN;
  }
  return cert;
}
}  // namespace detail

/// Certificate for the all-epochs objective:
/// ||grad|| >= min_opt / (sqrt(|tagged states|) * mismatch) * (J* - J).
inline PlCertificate pl_certificate_simultaneous(const FiniteMdp& m,
                                                const ParamTensor& theta,
                                                const std::vector<double>& mu) {
  const SimContext ctx = make_sim_context(m, mu);
  const TabularPolicy pi = policy_of(theta);
  const ValueTables vt = evaluate_policy(m, pi);
  const auto vis = state_visitation(m, pi, mu);
  GradTensor g = GradTensor::zeros(m);
  for (int h = 0; h < m.horizon; ++h)
    for (int s = 0; s < m.num_states(h); ++s)
      for (int a = 0; a < m.num_actions(h, s); ++a)
        g.value[h][s][a] = vis.rho[h][s] * pi.prob[h][s][a] * vt.adv[h][s][a];
  return detail::sim_certificate(ctx, pi, start_value(mu, vt.v[0]), g.norm(),
                                 vis.d);
}

/// Certificate for the epoch-h objective against a frozen tail:
/// ||grad_h|| >= min_s pi(a_h*(s)|s) / sqrt(|S_h|) * (J_h* - J_h).
inline PlCertificate pl_certificate_dynamic(const FiniteMdp& m, const Block& theta_h,
                                            const TabularPolicy& tilde_pi,
                                            const std::vector<double>& mu_h, int h) {
  const DynPhase ph = make_dyn_phase(m, tilde_pi, mu_h, h);
  const DynStep st = dyn_step(ph, theta_h, mu_h);
  PlCertificate cert;
  cert.lhs = st.grad_norm;
  cert.suboptimality = ph.j_star - st.j;
  cert.min_opt_prob = st.min_opt;
  cert.rhs = st.min_opt * cert.suboptimality /
             std::sqrt(static_cast<double>(m.num_states(h)));
  cert.mismatch = kNaN;
  return cert;
}

/// Gradient-gap versus smoothness-bound pair; grad_gap <= bound.
struct SmoothnessWitness {
  double grad_gap = 0.0;
  double bound = 0.0;
};

inline SmoothnessWitness smoothness_witness_simultaneous(
    const FiniteMdp& m, const ParamTensor& ta, const ParamTensor& tb,
    const std::vector<double>& mu) {
  GradTensor ga = grad_simultaneous(m, ta, mu);
  const GradTensor gb = grad_simultaneous(m, tb, mu);
  double sq = 0.0;
  for (std::size_t h = 0; h < ga.value.size(); ++h)
    for (std::size_t s = 0; s < ga.value[h].size(); ++s)
      for (std::size_t a = 0; a < ga.value[h][s].size(); ++a) {
        const double d = ga.value[h][s][a] - gb.value[h][s][a];
        sq += d * d;
      }
  return {std::sqrt(sq), beta_simultaneous(m) * param_distance(ta, tb)};
}

inline SmoothnessWitness smoothness_witness_dynamic(const FiniteMdp& m,
                                                    const Block& block_a,
                                                    const Block& block_b,
                                                    const TabularPolicy& tilde_pi,
                                                    const std::vector<double>& mu_h,
                                                    int h) {
  const DynPhase ph = make_dyn_phase(m, tilde_pi, mu_h, h);
  const DynStep sa = dyn_step(ph, block_a, mu_h);
  const DynStep sb = dyn_step(ph, block_b, mu_h);
  double gsq = 0.0, dsq = 0.0;
  for (std::size_t s = 0; s < block_a.size(); ++s)
    for (std::size_t a = 0; a < block_a[s].size(); ++a) {
      const double dg = sa.grad[s][a] - sb.grad[s][a];
      const double dt = block_a[s][a] - block_b[s][a];
      gsq += dg * dg;
      dsq += dt * dt;
    }
  return {std::sqrt(gsq), beta_dynamic(m, h) * std::sqrt(dsq)};
}

}  // namespace finmdp
