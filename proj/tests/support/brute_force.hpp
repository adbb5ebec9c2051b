#pragma once
// Reference objectives computed along routes independent of the library's
// backward value recursion: a forward pass propagating the state distribution
// and accumulating expected instantaneous rewards, and a literal enumeration
// of all trajectories for the smallest models. Central finite differences of
// the forward objective serve as the gradient oracle.
#include <algorithm>
#include <cmath>
#include <vector>

#include "finmdp/mdp.hpp"
#include "finmdp/softmax.hpp"

namespace testsup {

/// Expected total reward from epoch h0 with S_{h0} ~ mu, by forward
/// distribution propagation: J = sum_h sum_{s,a} P(S_h=s) pi(a|s) r_h(s,a).
inline double forward_value(const finmdp::FiniteMdp& m,
                            const finmdp::TabularPolicy& pi,
                            const std::vector<double>& mu, int h0 = 0) {
  std::vector<double> dist = mu;
  double j = 0.0;
  for (int h = h0; h < m.horizon; ++h) {
    for (int s = 0; s < m.num_states(h); ++s)
      for (int a = 0; a < m.num_actions(h, s); ++a)
        j += dist[s] * pi.prob[h][s][a] * m.reward[h][s][a];
    if (h + 1 < m.horizon) {
      std::vector<double> next(m.num_states(h + 1), 0.0);
      for (int s = 0; s < m.num_states(h); ++s)
        for (int a = 0; a < m.num_actions(h, s); ++a) {
          const double w = dist[s] * pi.prob[h][s][a];
          const auto& row = m.transition[h][s][a];
          for (std::size_t sp = 0; sp < row.size(); ++sp) next[sp] += w * row[sp];
        }
      dist = std::move(next);
    }
  }
  return j;
}

namespace detail {
inline void walk_paths(const finmdp::FiniteMdp& m, const finmdp::TabularPolicy& pi,
                       int h, int s, double prob, double reward, double& total) {
  if (prob == 0.0) return;
  if (h == m.horizon) {
    total += prob * reward;
    return;
  }
  for (int a = 0; a < m.num_actions(h, s); ++a) {
    const double pa = prob * pi.prob[h][s][a];
    const double r = reward + m.reward[h][s][a];
    if (h + 1 == m.horizon) {
      total += pa * r;
      continue;
    }
    const auto& row = m.transition[h][s][a];
    for (std::size_t sp = 0; sp < row.size(); ++sp)
      walk_paths(m, pi, h + 1, static_cast<int>(sp), pa * row[sp], r, total);
  }
}
}  // namespace detail

/// Same objective by exhaustive trajectory enumeration; exponential, only for
/// tiny models. Cross-checks forward_value itself.
inline double path_value(const finmdp::FiniteMdp& m, const finmdp::TabularPolicy& pi,
                         const std::vector<double>& mu, int h0 = 0) {
  double total = 0.0;
  for (int s = 0; s < m.num_states(h0); ++s)
    detail::walk_paths(m, pi, h0, s, mu[s], 0.0, total);
  return total;
}

/// Central finite differences of theta -> forward_value(softmax(theta)).
inline finmdp::GradTensor fd_grad_simultaneous(const finmdp::FiniteMdp& m,
                                               const finmdp::ParamTensor& theta,
                                               const std::vector<double>& mu,
                                               double step = 1e-6) {
  finmdp::GradTensor g = finmdp::GradTensor::zeros(m);
  finmdp::ParamTensor t = theta;
  for (int h = 0; h < m.horizon; ++h)
    for (int s = 0; s < m.num_states(h); ++s)
      for (int a = 0; a < m.num_actions(h, s); ++a) {
        const double saved = t.value[h][s][a];
        t.value[h][s][a] = saved + step;
        const double up = forward_value(m, finmdp::policy_of(t), mu);
        t.value[h][s][a] = saved - step;
        const double dn = forward_value(m, finmdp::policy_of(t), mu);
        t.value[h][s][a] = saved;
        g.value[h][s][a] = (up - dn) / (2.0 * step);
      }
  return g;
}

/// Central finite differences of the epoch-h objective: the composite policy
/// follows softmax(theta_h) at h and tilde_pi beyond, started from mu_h at h.
/// Only the epoch-h block of the result is populated.
inline finmdp::GradTensor fd_grad_dynamic(const finmdp::FiniteMdp& m,
                                          const std::vector<std::vector<double>>& theta_h,
                                          const finmdp::TabularPolicy& tilde_pi,
                                          const std::vector<double>& mu_h, int h,
                                          double step = 1e-6) {
  finmdp::GradTensor g = finmdp::GradTensor::zeros(m);
  std::vector<std::vector<double>> t = theta_h;
  auto objective = [&](const std::vector<std::vector<double>>& block) {
    finmdp::TabularPolicy comp = tilde_pi;
    for (std::size_t s = 0; s < block.size(); ++s)
      comp.prob[h][s] = finmdp::softmax_row(block[s]);
    return forward_value(m, comp, mu_h, h);
  };
  for (std::size_t s = 0; s < t.size(); ++s)
    for (std::size_t a = 0; a < t[s].size(); ++a) {
      const double saved = t[s][a];
      t[s][a] = saved + step;
      const double up = objective(t);
      t[s][a] = saved - step;
      const double dn = objective(t);
      t[s][a] = saved;
      g.value[h][s][a] = (up - dn) / (2.0 * step);
    }
  return g;
}

inline double max_abs_diff(const finmdp::GradTensor& a, const finmdp::GradTensor& b) {
  double mx = 0.0;
  for (std::size_t h = 0; h < a.value.size(); ++h)
    for (std::size_t s = 0; s < a.value[h].size(); ++s)
      for (std::size_t i = 0; i < a.value[h][s].size(); ++i)
        mx = std::max(mx, std::abs(a.value[h][s][i] - b.value[h][s][i]));
  return mx;
}

}  // namespace testsup
