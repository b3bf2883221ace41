#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>

#include "stableqp/errors.hpp"
#include "stableqp/linalg.hpp"
#include "stableqp/params.hpp"
#include "stableqp/problem.hpp"

namespace stableqp {

// Primal-dual point z = (x, lambda, mu_L, mu_R).
//
// The bound slacks 1+x and 1-x are carried alongside x and updated with the
// same increments. Near the end of a run the true slacks are far below the
// spacing of doubles around +-1, so recomputing them from x would lose them
// entirely.
struct Iterate {
  DenseVector x, lambda, mu_L, mu_R;
  DenseVector slack_L, slack_R;

  Iterate() = default;
  Iterate(DenseVector x_, DenseVector lambda_, DenseVector mu_L_, DenseVector mu_R_)
      : x(std::move(x_)), lambda(std::move(lambda_)), mu_L(std::move(mu_L_)), mu_R(std::move(mu_R_)) {
    slack_L = DenseVector::Ones(x.size()) + x;
    slack_R = DenseVector::Ones(x.size()) - x;
  }

  Eigen::Index n() const { return x.size(); }
  Eigen::Index m() const { return lambda.size(); }
  Eigen::Index dim() const { return 3 * n() + m(); }

  DenseVector flat() const {
    DenseVector z(dim());
    z << x, lambda, mu_L, mu_R;
    return z;
  }

  // min over 1-|x| (via the carried slacks), mu_L and mu_R.
  double interior_margin() const {
    double v = std::numeric_limits<double>::infinity();
    if (n() > 0) {
      v = std::min({v, slack_L.minCoeff(), slack_R.minCoeff(), mu_L.minCoeff(), mu_R.minCoeff()});
    }
    return v;
  }

  bool interior() const { return interior_margin() > 0; }

  // z + dz, keeping x strictly inside the box whenever the slack says so.
  Iterate advanced(const DenseVector& dz) const {
    const auto nn = n(), mm = m();
    if (dz.size() != dim()) throw DimensionMismatch("step has wrong dimension");
    Iterate r;
    const auto dx = dz.segment(0, nn);
    r.x = x + dx;
    r.lambda = lambda + dz.segment(nn, mm);
    r.mu_L = mu_L + dz.segment(nn + mm, nn);
    r.mu_R = mu_R + dz.segment(2 * nn + mm, nn);
    r.slack_L = slack_L + dx;
    r.slack_R = slack_R - dx;
    for (Eigen::Index j = 0; j < nn; ++j) {
      if (r.slack_L[j] > 0 && r.x[j] <= -1.0) r.x[j] = std::nextafter(-1.0, 0.0);
      if (r.slack_R[j] > 0 && r.x[j] >= 1.0) r.x[j] = std::nextafter(1.0, 0.0);
    }
    return r;
  }
};

struct Residual {
  DenseVector r1, r2, r3, r4;

  double eq_norm() const { return std::hypot(r1.norm(), r2.norm()); }
  double comp_norm() const { return std::hypot(r3.norm(), r4.norm()); }
  double norm() const { return std::hypot(eq_norm(), comp_norm()); }

  DenseVector flat() const {
    DenseVector v(r1.size() + r2.size() + r3.size() + r4.size());
    v << r1, r2, r3, r4;
    return v;
  }
};

namespace detail {

inline void check_domain(const BoxQP& p, const DenseVector& x) {
  check_dim(p, x);
  const double edge = 1.0 - 4 * eps_mach;
  for (Eigen::Index j = 0; j < x.size(); ++j)
    if (!(std::abs(x[j]) < edge))
      throw OutOfDomain("x[" + std::to_string(j) + "] = " + std::to_string(x[j]) +
                        " outside the open box");
}

inline void check_iterate(const BoxQP& p, const Iterate& z) {
  if (z.x.size() != p.n() || z.lambda.size() != p.m() || z.mu_L.size() != p.n() ||
      z.mu_R.size() != p.n() || z.slack_L.size() != p.n() || z.slack_R.size() != p.n())
    throw DimensionMismatch("iterate dimensions do not match the problem");
}

inline double barrier(const DenseVector& x) {
  double s = 0;
  for (Eigen::Index j = 0; j < x.size(); ++j) s += std::log1p(x[j]) + std::log1p(-x[j]);
  return s;
}

}  // namespace detail

inline double eval_f(const BoxQP& p, const MethodParams& mp, const DenseVector& x) {
  detail::check_domain(p, x);
  const double om = mp.omega;
  const double r = (p.A() * x - p.b()).squaredNorm();
  return (eval_q(p, x) + 0.5 * om * x.squaredNorm() + r / (2 * om)) / mp.tau_A -
         detail::barrier(x);
}

inline DenseVector eval_grad_f(const BoxQP& p, const MethodParams& mp, const DenseVector& x) {
  detail::check_domain(p, x);
  const double om = mp.omega;
  DenseVector g = (p.Q() * x + om * x + p.c() + p.A().transpose() * (p.A() * x - p.b()) / om) /
                  mp.tau_A;
  for (Eigen::Index j = 0; j < x.size(); ++j) g[j] -= 1 / (1 + x[j]) - 1 / (1 - x[j]);
  return g;
}

inline DenseMatrix eval_hess_f(const BoxQP& p, const MethodParams& mp, const DenseVector& x) {
  detail::check_domain(p, x);
  const double om = mp.omega;
  DenseMatrix AtA = p.A().transpose() * p.A();
  DenseMatrix H = (p.Q() + om * DenseMatrix::Identity(p.n(), p.n()) + AtA / om) / mp.tau_A;
  H = 0.5 * (H + H.transpose()).eval();
  for (Eigen::Index j = 0; j < x.size(); ++j)
    H(j, j) += 1 / ((1 + x[j]) * (1 + x[j])) + 1 / ((1 - x[j]) * (1 - x[j]));
  return H;
}

inline Residual eval_F(const BoxQP& p, const MethodParams& mp, const Iterate& z, double tau) {
  detail::check_iterate(p, z);
  const double om = mp.omega;
  Residual r;
  r.r1 = p.Q() * z.x + om * z.x + p.c() - p.A().transpose() * z.lambda - z.mu_L + z.mu_R;
  r.r2 = p.A() * z.x - p.b() + om * z.lambda;
  r.r3 = z.mu_L.cwiseProduct(z.slack_L).array() - tau;
  r.r4 = z.mu_R.cwiseProduct(z.slack_R).array() - tau;
  return r;
}

inline DenseMatrix eval_DF(const BoxQP& p, const MethodParams& mp, const Iterate& z) {
  detail::check_iterate(p, z);
  const auto n = p.n(), m = p.m();
  const double om = mp.omega;
  DenseMatrix G = DenseMatrix::Zero(3 * n + m, 3 * n + m);
  const DenseMatrix I = DenseMatrix::Identity(n, n);
  G.block(0, 0, n, n) = p.Q() + om * I;
  G.block(0, n, n, m) = -p.A().transpose();
  G.block(0, n + m, n, n) = -I;
  G.block(0, 2 * n + m, n, n) = I;
  G.block(n, 0, m, n) = p.A();
  G.block(n, n, m, m) = om * DenseMatrix::Identity(m, m);
  G.block(n + m, 0, n, n) = z.mu_L.asDiagonal();
  G.block(n + m, n + m, n, n) = z.slack_L.asDiagonal();
  G.block(2 * n + m, 0, n, n) = -z.mu_R.asDiagonal().toDenseMatrix();
  G.block(2 * n + m, 2 * n + m, n, n) = z.slack_R.asDiagonal();
  return G;
}

// Solves DF(z) dz = g by eliminating dmu_L and dmu_R, which leaves the
// symmetric quasi-definite system in (dx, y = -dlambda)
//   [ H   A'        ] [dx]   [g1 + g3/s_L - g4/s_R]
//   [ A   -omega I  ] [y ] = [g2                  ],
// with H = Q + omega I + diag(mu_L/s_L + mu_R/s_R). Near the box boundary the
// slacks fall far below the resolution of x, and a dense solve of DF then
// loses dx entirely in rounding. Here the large diagonal of H carries those
// coordinates, and A is never squared.
inline DenseVector solve_DF(const BoxQP& p, const MethodParams& mp, const Iterate& z,
                            const DenseVector& g) {
  detail::check_iterate(p, z);
  const auto n = p.n(), m = p.m();
  if (g.size() != 3 * n + m) throw DimensionMismatch("solve_DF: right-hand side has wrong size");
  if (!g.allFinite()) throw SingularSystem("solve_DF: non-finite right-hand side");
  const double om = mp.omega;
  const auto g1 = g.segment(0, n), g2 = g.segment(n, m), g3 = g.segment(n + m, n),
             g4 = g.segment(2 * n + m, n);
  const auto& sL = z.slack_L;
  const auto& sR = z.slack_R;

  DenseMatrix K(n + m, n + m);
  K.topLeftCorner(n, n) = p.Q();
  K.topLeftCorner(n, n).diagonal().array() +=
      om + z.mu_L.array() / sL.array() + z.mu_R.array() / sR.array();
  K.topRightCorner(n, m) = p.A().transpose();
  K.bottomLeftCorner(m, n) = p.A();
  K.bottomRightCorner(m, m) = -om * DenseMatrix::Identity(m, m);
  DenseVector rhs(n + m);
  rhs.head(n) = g1;
  rhs.head(n).array() += g3.array() / sL.array() - g4.array() / sR.array();
  rhs.tail(m) = g2;
  if (!K.allFinite() || !rhs.allFinite()) throw SingularSystem("solve_DF: non-finite reduced system");

  // Symmetric scaling by the row maxima keeps the symmetry and the graded diagonal.
  DenseVector d(n + m);
  for (Eigen::Index i = 0; i < n + m; ++i) {
    const double r = K.row(i).cwiseAbs().maxCoeff();
    if (!(r > 0)) throw SingularSystem("solve_DF: zero row " + std::to_string(i));
    d[i] = 1.0 / std::sqrt(r);
  }
  const DenseMatrix Ks = d.asDiagonal() * K * d.asDiagonal();
  Eigen::ColPivHouseholderQR<DenseMatrix> qr(Ks);
  const double rmax = std::abs(qr.matrixQR()(0, 0));
  const double rmin = std::abs(qr.matrixQR()(n + m - 1, n + m - 1));
  if (!(rmin > (n + m) * eps_mach * rmax))
    throw SingularSystem("solve_DF: reduced system numerically singular");
  const DenseVector y = d.asDiagonal() * qr.solve(DenseVector(d.asDiagonal() * rhs));
  const DenseVector dx = y.head(n);

  DenseVector dz(3 * n + m);
  dz.segment(0, n) = dx;
  dz.segment(n, m) = -y.tail(m);
  dz.segment(n + m, n) = (g3.array() - z.mu_L.array() * dx.array()) / sL.array();
  dz.segment(2 * n + m, n) = (g4.array() + z.mu_R.array() * dx.array()) / sR.array();
  if (!dz.allFinite()) throw SingularSystem("solve_DF: non-finite step");
  return dz;
}

// Penalty-barrier function at barrier weight tau.
inline double eval_phi(const BoxQP& p, const MethodParams& mp, const DenseVector& x, double tau) {
  if (!(tau > 0)) throw InvalidProblem("tau must be > 0");
  detail::check_domain(p, x);
  const double om = mp.omega;
  const double r = (p.A() * x - p.b()).squaredNorm();
  return eval_q(p, x) + 0.5 * om * x.squaredNorm() + r / (2 * om) - tau * detail::barrier(x);
}

}  // namespace stableqp
