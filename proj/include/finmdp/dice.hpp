#pragma once
#include <string>
#include <vector>

#include "finmdp/mdp.hpp"

namespace finmdp {

/// Optimal-stopping dice model over a given horizon. Every epoch has states
/// "1".."6" plus the absorbing state "delta" and actions "0" (roll again,
/// uniform over faces) and "1" (bank the face value, move to "delta"). The
/// absorbing state pays nothing under both actions and stays put.
inline FiniteMdp build_dice(int horizon) {
  if (horizon < 1) throw validation_error("dice horizon must be >= 1");
  FiniteMdp m;
  m.horizon = horizon;
  m.r_star = 6.0;
  const std::vector<std::string> states = {"1", "2", "3", "4", "5", "6", "delta"};
  const std::vector<std::string> actions = {"0", "1"};
  m.state_ids.assign(horizon, states);
  m.action_ids.assign(horizon,
                      std::vector<std::vector<std::string>>(states.size(), actions));
  m.reward.resize(horizon);
  for (int h = 0; h < horizon; ++h) {
    m.reward[h].resize(states.size());
    for (int s = 0; s < 7; ++s) {
      const double stop_pay = s < 6 ? static_cast<double>(s + 1) : 0.0;
      m.reward[h][s] = {0.0, stop_pay};
    }
  }
  if (horizon > 1) {
    std::vector<double> roll(7, 1.0 / 6.0);
    roll[6] = 0.0;
    std::vector<double> absorb(7, 0.0);
    absorb[6] = 1.0;
    m.transition.resize(horizon - 1);
    for (int h = 0; h + 1 < horizon; ++h) {
      m.transition[h].resize(7);
      for (int s = 0; s < 6; ++s) m.transition[h][s] = {roll, absorb};
      m.transition[h][6] = {absorb, absorb};
    }
  }
  return m;
}

/// The model's start distribution: uniform over the six faces.
inline std::vector<double> dice_start_mu() {
  std::vector<double> mu(7, 1.0 / 6.0);
  mu[6] = 0.0;
  return mu;
}

}  // namespace finmdp
