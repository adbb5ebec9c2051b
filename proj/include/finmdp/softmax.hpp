#pragma once
#include <algorithm>
#include <cmath>
#include <vector>

#include "finmdp/mdp.hpp"

namespace finmdp {

namespace detail {
inline std::vector<std::vector<std::vector<double>>> zero_blocks(const FiniteMdp& m) {
  std::vector<std::vector<std::vector<double>>> b(m.horizon);
  for (int h = 0; h < m.horizon; ++h) {
    b[h].resize(m.num_states(h));
    for (int s = 0; s < m.num_states(h); ++s)
      b[h][s].assign(m.num_actions(h, s), 0.0);
  }
  return b;
}
}  // namespace detail

/// Softmax parameters, one real per (epoch, state, action). The per-epoch
/// blocks theta_h are the rows value[h].
struct ParamTensor {
  std::vector<std::vector<std::vector<double>>> value;  // [h][s][a]

  static ParamTensor zeros(const FiniteMdp& m) { return {detail::zero_blocks(m)}; }
};

/// Gradient with the same ragged shape as ParamTensor.
struct GradTensor {
  std::vector<std::vector<std::vector<double>>> value;  // [h][s][a]

  static GradTensor zeros(const FiniteMdp& m) { return {detail::zero_blocks(m)}; }

  double norm() const {
    double sq = 0.0;
    for (const auto& hb : value)
      for (const auto& row : hb)
        for (double g : row) sq += g * g;
    return std::sqrt(sq);
  }
};

/// theta += eta * grad.
inline void axpy(ParamTensor& theta, double eta, const GradTensor& g) {
  for (std::size_t h = 0; h < theta.value.size(); ++h)
    for (std::size_t s = 0; s < theta.value[h].size(); ++s)
      for (std::size_t a = 0; a < theta.value[h][s].size(); ++a)
        theta.value[h][s][a] += eta * g.value[h][s][a];
}

inline double param_distance(const ParamTensor& a, const ParamTensor& b) {
  double sq = 0.0;
  for (std::size_t h = 0; h < a.value.size(); ++h)
    for (std::size_t s = 0; s < a.value[h].size(); ++s)
      for (std::size_t i = 0; i < a.value[h][s].size(); ++i) {
        const double d = a.value[h][s][i] - b.value[h][s][i];
        sq += d * d;
      }
  return std::sqrt(sq);
}

/// Softmax of one parameter row, computed against the row maximum so that
/// entries of magnitude up to ~700 cannot overflow.
inline std::vector<double> softmax_row(const std::vector<double>& row) {
  double mx = row[0];
  for (double x : row) mx = std::max(mx, x);
  std::vector<double> out(row.size());
  double z = 0.0;
  for (std::size_t a = 0; a < row.size(); ++a) {
    out[a] = std::exp(row[a] - mx);
    z += out[a];
  }
  for (double& p : out) p /= z;
  return out;
}

/// The tabular softmax policy of theta; rows sum to one.
inline TabularPolicy policy_of(const ParamTensor& theta) {
  TabularPolicy pi;
  pi.prob.resize(theta.value.size());
  for (std::size_t h = 0; h < theta.value.size(); ++h) {
    pi.prob[h].resize(theta.value[h].size());
    for (std::size_t s = 0; s < theta.value[h].size(); ++s)
      pi.prob[h][s] = softmax_row(theta.value[h][s]);
  }
  return pi;
}

/// Gradient of log pi^theta(a|s) at epoch h: supported on the (h, s) row where
/// it equals indicator(a) - pi^theta(.|s), zero elsewhere.
inline GradTensor log_policy_grad(const FiniteMdp& m, const ParamTensor& theta,
                                  int h, int s, int a) {
  GradTensor g = GradTensor::zeros(m);
  const auto row = softmax_row(theta.value[h][s]);
  for (std::size_t ap = 0; ap < row.size(); ++ap)
    g.value[h][s][ap] = (static_cast<int>(ap) == a ? 1.0 : 0.0) - row[ap];
  return g;
}

/// Largest pointwise policy change between two parameter tensors together with
/// their parameter distance; the policy map is sqrt(2)-Lipschitz, so
/// max_policy_gap <= sqrt(2) * param_distance.
struct LipschitzGap {
  double max_policy_gap = 0.0;
  double param_distance = 0.0;
};

inline LipschitzGap lipschitz_gap(const ParamTensor& t1, const ParamTensor& t2) {
  LipschitzGap out;
  out.param_distance = param_distance(t1, t2);
  for (std::size_t h = 0; h < t1.value.size(); ++h)
    for (std::size_t s = 0; s < t1.value[h].size(); ++s) {
      const auto p1 = softmax_row(t1.value[h][s]);
      const auto p2 = softmax_row(t2.value[h][s]);
      for (std::size_t a = 0; a < p1.size(); ++a)
        out.max_policy_gap = std::max(out.max_policy_gap, std::abs(p1[a] - p2[a]));
    }
  return out;
}

/// min over all (h, s) of pi(best_action[h][s] | s).
inline double min_optimal_prob(const TabularPolicy& pi,
                               const std::vector<std::vector<int>>& best_action) {
  double mn = 1.0;
  for (std::size_t h = 0; h < pi.prob.size(); ++h)
    for (std::size_t s = 0; s < pi.prob[h].size(); ++s)
      mn = std::min(mn, pi.prob[h][s][best_action[h][s]]);
  return mn;
}

}  // namespace finmdp
