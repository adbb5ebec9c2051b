#pragma once
#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "finmdp/train.hpp"

namespace finmdp {

/// Least-squares fit of log(suboptimality) against log(gradient evaluations).
/// slope/intercept are in natural-log space: subopt ~ exp(intercept) * x^slope.
struct RateEstimate {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  std::uint64_t window_begin = 0;  ///< grad_evals of the first fitted row
  std::uint64_t window_end = 0;    ///< grad_evals of the last fitted row
  std::size_t n_points = 0;
  /// (target epsilon, final error) pairs when produced by a scheme comparison.
  std::vector<std::pair<double, double>> per_eps_final_error;
};

/// Fits the convergence rate over the trailing half of the run.
///
/// Single-phase logs use all rows with x = grad_evals and y = oracle_value - J
/// (or the logged suboptimality when no finite oracle value is given). Staged
/// logs are piecewise by phase: the global gap plateaus at the residual of the
/// already-trained later epochs, so the fit uses final-phase (phase 0) rows
/// only, with x restarted at 1 at the phase boundary and y the phase-local
/// optimality gap, recovered from the certificate columns as
/// pl_rhs / min_opt_prob. Rows with nonpositive or non-finite y are dropped.
inline RateEstimate estimate_rate(const TrainLog& log, double oracle_value) {
  bool staged = false;
  for (const TrainRow& r : log.rows)
    if (r.phase >= 0) staged = true;

  std::vector<double> xs, ys;
  std::vector<std::uint64_t> ge;
  double max_subopt = 0.0;
  std::uint64_t first_phase0 = 0;
  if (staged) {
    for (const TrainRow& r : log.rows)
      if (r.phase == 0) {
        first_phase0 = r.grad_evals;
        break;
      }
  }
  for (const TrainRow& r : log.rows) {
    double x, y;
    if (staged) {
      if (r.phase != 0) continue;
      x = static_cast<double>(r.grad_evals - first_phase0 + 1);
      y = r.min_opt_prob > 0.0 ? r.pl_rhs / r.min_opt_prob : kNaN;
    } else {
      x = static_cast<double>(r.grad_evals);
      y = std::isfinite(oracle_value) ? oracle_value - r.j : r.subopt;
    }
    if (std::isfinite(y)) max_subopt = std::max(max_subopt, y);
    if (!(y > 0.0) || !std::isfinite(y)) continue;
    xs.push_back(x);
    ys.push_back(y);
    ge.push_back(r.grad_evals);
  }
  if (max_subopt < 1e-14)
    throw validation_error("rate undefined: run converged exactly");
  if (xs.size() < 50)
    throw validation_error("need at least 50 rows with positive suboptimality");

  const std::size_t begin = xs.size() / 2;
  const std::size_t n = xs.size() - begin;
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = begin; i < xs.size(); ++i) {
    const double lx = std::log(xs[i]), ly = std::log(ys[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double nd = static_cast<double>(n);
  const double denom = nd * sxx - sx * sx;
  if (!(denom > 0.0))
    throw validation_error("fit window has no spread in grad_evals");
  RateEstimate est;
  est.slope = (nd * sxy - sx * sy) / denom;
  est.intercept = (sy - est.slope * sx) / nd;
  double ss_res = 0.0, ss_tot = 0.0;
  const double mean_y = sy / nd;
  for (std::size_t i = begin; i < xs.size(); ++i) {
    const double ly = std::log(ys[i]);
    const double fit = est.intercept + est.slope * std::log(xs[i]);
    ss_res += (ly - fit) * (ly - fit);
    ss_tot += (ly - mean_y) * (ly - mean_y);
  }
  est.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  est.window_begin = ge[begin];
  est.window_end = ge.back();
  est.n_points = n;
  if (!std::isfinite(est.slope))
    throw validation_error("fitted slope is not finite");
  return est;
}

}  // namespace finmdp
