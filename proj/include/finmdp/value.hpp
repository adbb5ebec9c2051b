#pragma once
#include <map>
#include <string>
#include <vector>

#include "finmdp/mdp.hpp"

namespace finmdp {

/// State values v, state-action values q and advantages adv = q - v for one
/// policy, all epochs. Terminal values beyond the horizon are zero, so at the
/// last epoch q equals the reward table exactly.
struct ValueTables {
  std::vector<std::vector<double>> v;               // [h][s]
  std::vector<std::vector<std::vector<double>>> q;  // [h][s][a]
  std::vector<std::vector<std::vector<double>>> adv;
};

namespace detail {
/// Backward recursion over epochs h0..H-1. Rows below h0 are left empty.
inline ValueTables evaluate_tail(const FiniteMdp& m, const TabularPolicy& pi,
                                 int h0) {
  ValueTables t;
  t.v.resize(m.horizon);
  t.q.resize(m.horizon);
  t.adv.resize(m.horizon);
  for (int h = m.horizon - 1; h >= h0; --h) {
    const int ns = m.num_states(h);
    t.v[h].assign(ns, 0.0);
    t.q[h].resize(ns);
    t.adv[h].resize(ns);
    for (int s = 0; s < ns; ++s) {
      const int na = m.num_actions(h, s);
      t.q[h][s].resize(na);
      t.adv[h][s].resize(na);
      double vs = 0.0;
      for (int a = 0; a < na; ++a) {
        double q = m.reward[h][s][a];
        if (h < m.horizon - 1) {
          const auto& row = m.transition[h][s][a];
          const auto& vnext = t.v[h + 1];
          for (std::size_t sp = 0; sp < row.size(); ++sp) q += row[sp] * vnext[sp];
        }
        t.q[h][s][a] = q;
        vs += pi.prob[h][s][a] * q;
      }
      t.v[h][s] = vs;
      for (int a = 0; a < na; ++a) t.adv[h][s][a] = t.q[h][s][a] - vs;
    }
  }
  return t;
}
}  // namespace detail

inline ValueTables evaluate_policy(const FiniteMdp& m, const TabularPolicy& pi) {
  return detail::evaluate_tail(m, pi, 0);
}

/// Optimal tables plus a deterministic optimal policy; argmax ties are broken
/// by the smallest action index.
struct OptimalSolution {
  ValueTables tables;
  TabularPolicy policy;
  std::vector<std::vector<int>> best_action;  // [h][s]
};

inline OptimalSolution backward_induction_optimal(const FiniteMdp& m) {
  OptimalSolution out;
  auto& t = out.tables;
  t.v.resize(m.horizon);
  t.q.resize(m.horizon);
  t.adv.resize(m.horizon);
  out.policy.prob.resize(m.horizon);
  out.best_action.resize(m.horizon);
  for (int h = m.horizon - 1; h >= 0; --h) {
    const int ns = m.num_states(h);
    t.v[h].assign(ns, 0.0);
    t.q[h].resize(ns);
    t.adv[h].resize(ns);
    out.policy.prob[h].resize(ns);
    out.best_action[h].assign(ns, 0);
    for (int s = 0; s < ns; ++s) {
      const int na = m.num_actions(h, s);
      t.q[h][s].resize(na);
      int best = 0;
      for (int a = 0; a < na; ++a) {
        double q = m.reward[h][s][a];
        if (h < m.horizon - 1) {
          const auto& row = m.transition[h][s][a];
          const auto& vnext = t.v[h + 1];
          for (std::size_t sp = 0; sp < row.size(); ++sp) q += row[sp] * vnext[sp];
        }
        t.q[h][s][a] = q;
        if (q > t.q[h][s][best]) best = a;
      }
      out.best_action[h][s] = best;
      t.v[h][s] = t.q[h][s][best];
      t.adv[h][s].resize(na);
      for (int a = 0; a < na; ++a) t.adv[h][s][a] = t.q[h][s][a] - t.v[h][s];
      out.policy.prob[h][s].assign(na, 0.0);
      out.policy.prob[h][s][best] = 1.0;
    }
  }
  return out;
}

/// Expected start value sum_s mu(s) v_h0(s).
inline double start_value(const std::vector<double>& mu,
                          const std::vector<double>& v_row) {
  double j = 0.0;
  for (std::size_t s = 0; s < mu.size(); ++s) j += mu[s] * v_row[s];
  return j;
}

/// Occupancy of each epoch-tagged state, rho[h][s] = P(S_h = s_h), by forward
/// recursion from mu at epoch h0. Rows before h0 are empty.
inline std::vector<std::vector<double>> visitation_from(const FiniteMdp& m,
                                                        const TabularPolicy& pi,
                                                        const std::vector<double>& mu,
                                                        int h0) {
  std::vector<std::vector<double>> rho(m.horizon);
  rho[h0] = mu;
  for (int h = h0; h < m.horizon - 1; ++h) {
    rho[h + 1].assign(m.num_states(h + 1), 0.0);
    for (int s = 0; s < m.num_states(h); ++s) {
      const double mass = rho[h][s];
      if (mass == 0.0) continue;
      for (int a = 0; a < m.num_actions(h, s); ++a) {
        const double w = mass * pi.prob[h][s][a];
        if (w == 0.0) continue;
        const auto& row = m.transition[h][s][a];
        for (std::size_t sp = 0; sp < row.size(); ++sp) rho[h + 1][sp] += w * row[sp];
      }
    }
  }
  return rho;
}

/// Visitation on the epoch-tagged state space (each epoch row sums to one, so
/// the total mass is the horizon) plus the per-identifier aggregate d, the sum
/// of rho over epochs divided by the horizon.
struct VisitationMeasures {
  std::vector<std::vector<double>> rho;  // [h][s]
  std::map<std::string, double> d;       // by state identifier
};

inline VisitationMeasures state_visitation(const FiniteMdp& m,
                                           const TabularPolicy& pi,
                                           const std::vector<double>& mu) {
  VisitationMeasures out;
  out.rho = visitation_from(m, pi, mu, 0);
  for (int h = 0; h < m.horizon; ++h)
    for (int s = 0; s < m.num_states(h); ++s)
      out.d[m.state_ids[h][s]] += out.rho[h][s] / m.horizon;
  return out;
}

/// Both sides of the performance-difference identity between pi and pi_prime at
/// (h, s): value gap on the left, pi-visitation-weighted advantage sum of
/// pi_prime on the right. The two sides are computed along independent routes
/// and agree to accumulation tolerance.
inline std::pair<double, double> performance_difference(const FiniteMdp& m,
                                                        const TabularPolicy& pi,
                                                        const TabularPolicy& pi_prime,
                                                        int h, int s) {
  const ValueTables va = detail::evaluate_tail(m, pi, h);
  const ValueTables vb = detail::evaluate_tail(m, pi_prime, h);
  const double lhs = va.v[h][s] - vb.v[h][s];
  std::vector<double> delta(m.num_states(h), 0.0);
  delta[s] = 1.0;
  const auto rho = visitation_from(m, pi, delta, h);
  double rhs = 0.0;
  for (int k = h; k < m.horizon; ++k)
    for (int sk = 0; sk < m.num_states(k); ++sk) {
      if (rho[k][sk] == 0.0) continue;
      double inner = 0.0;
      for (int a = 0; a < m.num_actions(k, sk); ++a)
        inner += pi.prob[k][sk][a] * vb.adv[k][sk][a];
      rhs += rho[k][sk] * inner;
    }
  return {lhs, rhs};
}

/// Uniform start distribution for every epoch (the schedule default).
inline std::vector<std::vector<double>> uniform_mu_list(const FiniteMdp& m) {
  std::vector<std::vector<double>> mus(m.horizon);
  for (int h = 0; h < m.horizon; ++h) mus[h] = uniform_over(m.num_states(h));
  return mus;
}

/// Start distributions produced by running the uniform policy from mu: the
/// epoch-h row of its visitation.
inline std::vector<std::vector<double>> visitation_mu_list(
    const FiniteMdp& m, const std::vector<double>& mu) {
  validate_distribution(m, 0, mu);
  const auto rho = visitation_from(m, uniform_policy(m), mu, 0);
  return rho;
}

}  // namespace finmdp
