#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

#include "stableqp/kkt.hpp"

namespace stableqp {

struct NeighborhoodReport {
  double tau = 0;
  double eq_residual = 0;    // ||(r1, r2)||
  double comp_residual = 0;  // ||(r3, r4)||
  double interior_margin = 0;
  bool in_N = false;
  bool in_Nh = false;
  bool in_F = false;
};

// eq_slack = 0 tests exact membership; a positive value widens both the
// equality and the complementarity tests by that amount.
inline NeighborhoodReport classify(const BoxQP& p, const MethodParams& mp, const Iterate& z,
                                   double tau, double eq_slack = 0.0) {
  const Residual r = eval_F(p, mp, z, tau);
  NeighborhoodReport rep;
  rep.tau = tau;
  rep.eq_residual = r.eq_norm();
  rep.comp_residual = r.comp_norm();
  rep.interior_margin = z.interior_margin();
  const bool interior = rep.interior_margin > 0;
  const bool eq_ok = rep.eq_residual <= eq_slack;
  rep.in_N = interior && eq_ok && rep.comp_residual <= mp.theta * tau + eq_slack;
  rep.in_Nh = interior && eq_ok && rep.comp_residual <= 0.5 * mp.theta * tau + eq_slack;
  rep.in_F = rep.interior_margin >= mp.c_gap;
  return rep;
}

inline double complementarity_gap(const Iterate& z) {
  return z.mu_L.dot(z.slack_L) + z.mu_R.dot(z.slack_R);
}

inline double min_comp_product(const Iterate& z) {
  if (z.n() == 0) return std::numeric_limits<double>::infinity();
  return std::min(z.mu_L.cwiseProduct(z.slack_L).minCoeff(),
                  z.mu_R.cwiseProduct(z.slack_R).minCoeff());
}

}  // namespace stableqp
