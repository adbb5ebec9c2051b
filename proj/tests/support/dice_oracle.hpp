#pragma once
// Self-contained reference results for the dice stopping model: six faces plus an
// absorbing state, action "0" rolls again (uniform over faces), action "1" banks
// the shown face value and moves to the absorbing state. Everything here is
// computed independently of the library under test.
#include <algorithm>
#include <array>
#include <cstdint>
#include <vector>

namespace dice_oracle {

// Value of the optimal rule with k throws left, from a fresh uniform throw:
// w(k+1) = E[max(face, w(k))], w(0) = 0.
inline double continuation_value(int k) {
  double w = 0.0;
  for (int i = 0; i < k; ++i) {
    double s = 0.0;
    for (int f = 1; f <= 6; ++f) s += std::max<double>(f, w);
    w = s / 6.0;
  }
  return w;
}

// Frozen closed forms for 1..5 throws.
inline constexpr double kOptimal1 = 3.5;
inline constexpr double kOptimal2 = 17.0 / 4.0;
inline constexpr double kOptimal3 = 14.0 / 3.0;
inline constexpr double kOptimal4 = 89.0 / 18.0;
inline constexpr double kOptimal5 = 277.0 / 54.0;

// Start value of the stop/continue coin-flip policy, uniform start distribution.
inline double uniform_policy_value(int horizon) {
  std::array<double, 7> vnext{};  // index 1..6 faces; index 0 absorbing
  std::array<double, 7> v{};
  for (int h = horizon - 1; h >= 0; --h) {
    double mean = 0.0;
    for (int f = 1; f <= 6; ++f) mean += vnext[f];
    mean /= 6.0;
    for (int f = 1; f <= 6; ++f) v[f] = 0.5 * f + 0.5 * mean;
    v[0] = 0.0;
    vnext = v;
  }
  double out = 0.0;
  for (int f = 1; f <= 6; ++f) out += v[f];
  return out / 6.0;
}

// Exhaustive search over deterministic policies at horizon 3. Choices at the
// absorbing state never affect values (it pays nothing either way) and only the
// six faces are reachable at epoch 0, so 18 binary choices remain out of 7*3.
inline double exhaustive_best_value_h3() {
  double best = -1.0;
  for (std::uint32_t bits = 0; bits < (1u << 18); ++bits) {
    auto stop = [&](int h, int f) -> bool { return (bits >> (6 * h + f - 1)) & 1u; };
    std::array<double, 7> v2{}, v1{}, v0{};
    double ev2 = 0.0;
    for (int f = 1; f <= 6; ++f) v2[f] = stop(2, f) ? f : 0.0;
    for (int f = 1; f <= 6; ++f) ev2 += v2[f] / 6.0;
    for (int f = 1; f <= 6; ++f) v1[f] = stop(1, f) ? f : ev2;
    double ev1 = 0.0;
    for (int f = 1; f <= 6; ++f) ev1 += v1[f] / 6.0;
    for (int f = 1; f <= 6; ++f) v0[f] = stop(0, f) ? f : ev1;
    double val = 0.0;
    for (int f = 1; f <= 6; ++f) val += v0[f] / 6.0;
    best = std::max(best, val);
  }
  return best;
}

}  // namespace dice_oracle
