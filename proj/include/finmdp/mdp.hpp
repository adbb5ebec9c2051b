#pragma once
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "finmdp/rng.hpp"

namespace finmdp {

/// Tolerance for stochasticity of user-supplied probability vectors.
inline constexpr double kStochasticTol = 1e-12;
/// Tolerance for identities derived by accumulation (value recursions etc).
inline constexpr double kIdentityTol = 1e-10;

/// Raised on malformed models, policies, distributions or schedules.
class validation_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a run would exceed its step/trajectory budget.
class budget_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Finite-time-horizon MDP with epoch-indexed state spaces. Decision epochs are
/// 0..horizon-1; states live in per-epoch lists (the same identifier appearing
/// at two epochs names two distinct tagged states). Rewards lie in [0, r_star].
/// Transitions are defined for epochs before the last and target the next
/// epoch's state list.
struct FiniteMdp {
  int horizon = 0;
  std::vector<std::vector<std::string>> state_ids;                   // [h][s]
  std::vector<std::vector<std::vector<std::string>>> action_ids;     // [h][s][a]
  std::vector<std::vector<std::vector<double>>> reward;              // [h][s][a]
  std::vector<std::vector<std::vector<std::vector<double>>>> transition;  // [h][s][a][s']
  double r_star = 0.0;

  int num_states(int h) const { return static_cast<int>(state_ids[h].size()); }
  int num_actions(int h, int s) const {
    return static_cast<int>(action_ids[h][s].size());
  }

  /// Number of epoch-tagged states, sum over epochs of |S_h|.
  int total_states() const {
    int n = 0;
    for (const auto& sh : state_ids) n += static_cast<int>(sh.size());
    return n;
  }

  int max_actions() const {
    int m = 1;
    for (int h = 0; h < horizon; ++h)
      for (int s = 0; s < num_states(h); ++s) m = std::max(m, num_actions(h, s));
    return m;
  }

  /// True when every epoch carries the same state identifier list.
  bool constant_state_space() const {
    for (int h = 1; h < horizon; ++h)
      if (state_ids[h] != state_ids[0]) return false;
    return true;
  }

  int state_index(int h, const std::string& id) const {
    const auto& v = state_ids[h];
    for (std::size_t i = 0; i < v.size(); ++i)
      if (v[i] == id) return static_cast<int>(i);
    return -1;
  }

  int action_index(int h, int s, const std::string& id) const {
    const auto& v = action_ids[h][s];
    for (std::size_t i = 0; i < v.size(); ++i)
      if (v[i] == id) return static_cast<int>(i);
    return -1;
  }
};

/// Per-(epoch, state) distribution over the state's actions.
struct TabularPolicy {
  std::vector<std::vector<std::vector<double>>> prob;  // [h][s][a]
};

namespace detail {
inline std::string loc(const FiniteMdp& m, int h, int s, int a = -1) {
  std::string out = "(h=" + std::to_string(h) + ", s=\"" + m.state_ids[h][s] + "\"";
  if (a >= 0) out += ", a=\"" + m.action_ids[h][s][a] + "\"";
  return out + ")";
}
}  // namespace detail

/// Checks all structural invariants; throws validation_error naming the first
/// violation and its (h, s, a) location.
inline void validate(const FiniteMdp& m) {
  if (m.horizon < 1) throw validation_error("horizon must be >= 1");
  if (!(m.r_star > 0.0)) throw validation_error("r_star must be > 0");
  const auto H = static_cast<std::size_t>(m.horizon);
  if (m.state_ids.size() != H || m.action_ids.size() != H || m.reward.size() != H)
    throw validation_error("per-epoch field sizes must equal the horizon");
  if (m.transition.size() != (H > 1 ? H - 1 : 0) && !(H == 1 && m.transition.empty()))
    throw validation_error("transitions must cover exactly epochs 0..H-2");
  for (int h = 0; h < m.horizon; ++h) {
    const int ns = m.num_states(h);
    if (ns < 1) throw validation_error("empty state list at epoch " + std::to_string(h));
    for (int s = 0; s < ns; ++s)
      for (int t = s + 1; t < ns; ++t)
        if (m.state_ids[h][s] == m.state_ids[h][t])
          throw validation_error("duplicate state id \"" + m.state_ids[h][s] +
                                 "\" at epoch " + std::to_string(h));
    if (static_cast<int>(m.action_ids[h].size()) != ns ||
        static_cast<int>(m.reward[h].size()) != ns)
      throw validation_error("state-indexed field size mismatch at epoch " +
                             std::to_string(h));
    for (int s = 0; s < ns; ++s) {
      const int na = m.num_actions(h, s);
      if (na < 1)
        throw validation_error("empty action set at " + detail::loc(m, h, s));
      if (static_cast<int>(m.reward[h][s].size()) != na)
        throw validation_error("reward row size mismatch at " + detail::loc(m, h, s));
      for (int a = 0; a < na; ++a) {
        const double r = m.reward[h][s][a];
        if (!std::isfinite(r) || r < 0.0 || r > m.r_star)
          throw validation_error("reward out of bounds at " + detail::loc(m, h, s, a) +
                                 ": " + std::to_string(r));
      }
      if (h < m.horizon - 1) {
        if (static_cast<int>(m.transition[h].size()) != ns ||
            static_cast<int>(m.transition[h][s].size()) != na)
          throw validation_error("transition table shape mismatch at " +
                                 detail::loc(m, h, s));
        const int next = m.num_states(h + 1);
        for (int a = 0; a < na; ++a) {
          const auto& row = m.transition[h][s][a];
          if (static_cast<int>(row.size()) != next)
            throw validation_error("transition row targets wrong epoch at " +
                                   detail::loc(m, h, s, a));
          double sum = 0.0;
          for (double p : row) {
            if (!std::isfinite(p) || p < 0.0)
              throw validation_error("negative transition probability at " +
                                     detail::loc(m, h, s, a));
            sum += p;
          }
          if (std::abs(sum - 1.0) > kStochasticTol)
            throw validation_error("transition not stochastic at " +
                                   detail::loc(m, h, s, a) +
                                   ": sum=" + std::to_string(sum));
        }
      }
    }
  }
}

inline void validate_policy(const FiniteMdp& m, const TabularPolicy& pi) {
  if (static_cast<int>(pi.prob.size()) != m.horizon)
    throw validation_error("policy epoch count mismatch");
  for (int h = 0; h < m.horizon; ++h) {
    if (static_cast<int>(pi.prob[h].size()) != m.num_states(h))
      throw validation_error("policy state count mismatch at epoch " +
                             std::to_string(h));
    for (int s = 0; s < m.num_states(h); ++s) {
      const auto& row = pi.prob[h][s];
      if (static_cast<int>(row.size()) != m.num_actions(h, s))
        throw validation_error("policy row size mismatch at " + detail::loc(m, h, s));
      double sum = 0.0;
      for (double p : row) {
        if (!std::isfinite(p) || p < 0.0)
          throw validation_error("negative policy probability at " +
                                 detail::loc(m, h, s));
        sum += p;
      }
      if (std::abs(sum - 1.0) > kStochasticTol)
        throw validation_error("policy row not stochastic at " + detail::loc(m, h, s));
    }
  }
}

inline std::vector<double> uniform_over(int n) {
  return std::vector<double>(static_cast<std::size_t>(n), 1.0 / n);
}

inline TabularPolicy uniform_policy(const FiniteMdp& m) {
  TabularPolicy pi;
  pi.prob.resize(m.horizon);
  for (int h = 0; h < m.horizon; ++h) {
    pi.prob[h].resize(m.num_states(h));
    for (int s = 0; s < m.num_states(h); ++s)
      pi.prob[h][s] = uniform_over(m.num_actions(h, s));
  }
  return pi;
}

inline void validate_distribution(const FiniteMdp& m, int h,
                                  const std::vector<double>& mu) {
  if (static_cast<int>(mu.size()) != m.num_states(h))
    throw validation_error("start distribution size mismatch at epoch " +
                           std::to_string(h));
  double sum = 0.0;
  for (double p : mu) {
    if (!std::isfinite(p) || p < 0.0)
      throw validation_error("negative start probability at epoch " +
                             std::to_string(h));
    sum += p;
  }
  if (std::abs(sum - 1.0) > kStochasticTol)
    throw validation_error("start distribution not stochastic at epoch " +
                           std::to_string(h));
}

/// One sampled path from a start epoch to the end of the horizon, with exact
/// suffix reward sums.
struct Trajectory {
  int start_epoch = 0;
  std::vector<int> state;          // length horizon - start_epoch
  std::vector<int> action;
  std::vector<double> reward;
  std::vector<double> reward_to_go;  // reward_to_go[k] = sum of reward[k..]
};

/// Samples S_{h0} ~ mu, A_k ~ pi_k(.|S_k), S_{k+1} ~ p(.|S_k, A_k). The result
/// is a pure function of the stream's key.
inline Trajectory sample_trajectory(const FiniteMdp& m, const TabularPolicy& pi,
                                    const std::vector<double>& mu, int h0,
                                    CounterRng& rng) {
  Trajectory tr;
  tr.start_epoch = h0;
  const int len = m.horizon - h0;
  tr.state.reserve(len);
  tr.action.reserve(len);
  tr.reward.reserve(len);
  int s = rng.categorical(mu);
  for (int k = h0; k < m.horizon; ++k) {
    const int a = rng.categorical(pi.prob[k][s]);
    tr.state.push_back(s);
    tr.action.push_back(a);
    tr.reward.push_back(m.reward[k][s][a]);
    if (k < m.horizon - 1) s = rng.categorical(m.transition[k][s][a]);
  }
  tr.reward_to_go.assign(tr.reward.size(), 0.0);
  double acc = 0.0;
  for (int k = static_cast<int>(tr.reward.size()) - 1; k >= 0; --k) {
    acc += tr.reward[k];
    tr.reward_to_go[k] = acc;
  }
  return tr;
}

}  // namespace finmdp
