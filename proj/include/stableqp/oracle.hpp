#pragma once

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "stableqp/errors.hpp"
#include "stableqp/linalg.hpp"
#include "stableqp/problem.hpp"

// Brute-force reference minimizers over the closed box, for tiny instances.

namespace stableqp {

enum class Bound { lower, free, upper };

struct OracleSolution {
  DenseVector x;
  double objective = 0;
  std::vector<Bound> active_pattern;
  double lower_bound = 0;  // certified lower bound on the optimum (oracle_solve_boxqp)
  double residual = 0;     // ||Ax - b|| (oracle_solve_boxqp)
};

inline constexpr int oracle_max_n = 10;

namespace detail {

inline DenseVector pinv_solve(const DenseMatrix& M, const DenseVector& rhs) {
  if (M.rows() == 0 || M.cols() == 0) return DenseVector::Zero(M.cols());
  Eigen::JacobiSVD<DenseMatrix> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const double smax = svd.singularValues()(0);
  svd.setThreshold(1e-13 * std::max<double>(M.rows(), M.cols()));
  if (smax == 0) return DenseVector::Zero(M.cols());
  return svd.solve(rhs);
}

inline std::vector<int> free_set(const std::vector<Bound>& pat) {
  std::vector<int> F;
  for (int i = 0; i < static_cast<int>(pat.size()); ++i)
    if (pat[i] == Bound::free) F.push_back(i);
  return F;
}

inline DenseVector fixed_part(const std::vector<Bound>& pat) {
  DenseVector x = DenseVector::Zero(static_cast<Eigen::Index>(pat.size()));
  for (std::size_t i = 0; i < pat.size(); ++i)
    x[i] = pat[i] == Bound::lower ? -1.0 : pat[i] == Bound::upper ? 1.0 : 0.0;
  return x;
}

}  // namespace detail

// Minimizes 1/2 x'Hx + g'x over ||x||_inf <= 1 by trying every
// lower/free/upper pattern in lexicographic order (first coordinate most
// significant, lower < free < upper) and keeping the best KKT point.
inline OracleSolution oracle_min_box(const DenseMatrix& H, const DenseVector& g,
                                     bool strictly_convex = false) {
  const int n = static_cast<int>(g.size());
  if (n > oracle_max_n) throw TooLarge("oracle enumeration limited to n <= 10");
  if (H.rows() != n || H.cols() != n) throw DimensionMismatch("oracle: H and g disagree");
  const double scale = 1.0 + H.norm() + g.norm();
  const double kkt_tol = 1e-9 * scale;

  std::vector<Bound> pat(n, Bound::lower);
  OracleSolution best;
  bool found = false;
  long total = 1;
  for (int i = 0; i < n; ++i) total *= 3;
  for (long code = 0; code < total; ++code) {
    long c = code;
    for (int i = n - 1; i >= 0; --i, c /= 3) pat[i] = static_cast<Bound>(c % 3);
    DenseVector x = detail::fixed_part(pat);
    const std::vector<int> F = detail::free_set(pat);
    if (!F.empty()) {
      const int nf = static_cast<int>(F.size());
      DenseMatrix HF(nf, nf);
      DenseVector rhs(nf);
      for (int a = 0; a < nf; ++a) {
        rhs[a] = -g[F[a]] - H.row(F[a]).dot(x);
        for (int b = 0; b < nf; ++b) HF(a, b) = H(F[a], F[b]);
      }
      DenseVector xf;
      if (strictly_convex) {
        Eigen::LLT<DenseMatrix> llt(HF);
        if (llt.info() != Eigen::Success) continue;
        xf = llt.solve(rhs);
      } else {
        xf = detail::pinv_solve(HF, rhs);
      }
      if ((HF * xf - rhs).norm() > 1e-9 * (scale + rhs.norm())) continue;  // inconsistent
      bool inside = true;
      for (int a = 0; a < nf; ++a) {
        if (std::abs(xf[a]) > 1 + 1e-12) inside = false;
        x[F[a]] = std::clamp(xf[a], -1.0, 1.0);
      }
      if (!inside) continue;
    }
    const DenseVector grad = H * x + g;
    bool kkt = true;
    for (int i = 0; i < n && kkt; ++i) {
      if (pat[i] == Bound::lower) kkt = grad[i] >= -kkt_tol;
      else if (pat[i] == Bound::upper) kkt = grad[i] <= kkt_tol;
    }
    if (!kkt) continue;
    const double val = 0.5 * x.dot(H * x) + g.dot(x);
    if (!found || val < best.objective - 1e-14 * (1 + std::abs(best.objective))) {
      best.x = x;
      best.objective = val;
      best.active_pattern = pat;
      found = true;
    }
  }
  if (!found) throw BracketFailed("oracle_min_box: no KKT pattern found");
  return best;
}

// min ||A xi - b|| over the closed box.
inline OracleSolution oracle_least_squares(const BoxQP& p) {
  const DenseMatrix H = p.A().transpose() * p.A();
  const DenseVector g = -p.A().transpose() * p.b();
  OracleSolution s = oracle_min_box(H, g);
  s.residual = (p.A() * s.x - p.b()).norm();
  return s;
}

inline double oracle_boRes(const BoxQP& p) { return oracle_least_squares(p).residual; }

namespace detail {

// Minimizes q over the face given by `pat` intersected with {A x = y}.
// Returns false if that set is empty or the minimizer leaves the box.
inline bool polish_on_face(const BoxQP& p, const std::vector<Bound>& pat, const DenseVector& y,
                           DenseVector& out) {
  DenseVector x = fixed_part(pat);
  const std::vector<int> F = free_set(pat);
  const int nf = static_cast<int>(F.size());
  const auto m = p.m();
  DenseMatrix AF(m, nf), QF(nf, nf);
  DenseVector cF(nf);
  for (int a = 0; a < nf; ++a) {
    AF.col(a) = p.A().col(F[a]);
    cF[a] = p.c()[F[a]] + p.Q().row(F[a]).dot(x);
    for (int b = 0; b < nf; ++b) QF(a, b) = p.Q()(F[a], F[b]);
  }
  const DenseVector h = y - p.A() * x;
  if (nf == 0) {
    if (h.norm() > 1e-9 * (1 + y.norm() + p.A().norm())) return false;
    out = x;
    return true;
  }
  DenseVector xp;
  DenseMatrix Z;
  if (m > 0) {
    Eigen::JacobiSVD<DenseMatrix> svd(AF, Eigen::ComputeFullV | Eigen::ComputeThinU);
    svd.setThreshold(1e-12 * std::max<double>(m, nf));
    const int r = static_cast<int>(svd.rank());
    xp = r > 0 ? DenseVector(svd.solve(h)) : DenseVector(DenseVector::Zero(nf));
    if ((AF * xp - h).norm() > 1e-9 * (1 + h.norm() + AF.norm())) return false;
    Z = svd.matrixV().rightCols(nf - r);
  } else {
    xp = DenseVector::Zero(nf);
    Z = DenseMatrix::Identity(nf, nf);
  }
  DenseVector xf = xp;
  if (Z.cols() > 0) {
    const DenseMatrix R = Z.transpose() * QF * Z;
    const DenseVector s = -Z.transpose() * (QF * xp + cF);
    const DenseVector w = pinv_solve(R, s);
    if ((R * w - s).norm() > 1e-9 * (1 + s.norm() + R.norm())) return false;  // unbounded face
    xf += Z * w;
  }
  for (int a = 0; a < nf; ++a) {
    if (std::abs(xf[a]) > 1 + 1e-12) return false;
    x[F[a]] = std::clamp(xf[a], -1.0, 1.0);
  }
  out = x;
  return true;
}

}  // namespace detail

// Reference minimizer of q over the box points with minimal ||Ax - b||.
//
// Lower bounds come from penalty minimizers x_w of q + ||Ax-b||^2/(2w): since
// ||A x_w - b|| >= boRes, q(x_w) <= q(x*). Upper bounds come from feasible
// points obtained by minimizing q on the active face of x_w restricted to
// {A x = A x_ls}, the set on which the residual is minimal.
inline OracleSolution oracle_solve_boxqp(const BoxQP& p) {
  if (p.n() > oracle_max_n) throw TooLarge("oracle enumeration limited to n <= 10");
  const OracleSolution ls = oracle_least_squares(p);
  const DenseVector y = p.A() * ls.x;
  // Penalty weights are relative to |A|^2; otherwise a large A swamps Q in
  // the penalized Hessian and the lower bound is lost in rounding.
  const double sA = p.A().norm() > 0 ? p.A().norm() : 1.0;
  const DenseMatrix As = p.A() / sA;
  const DenseMatrix AtA = As.transpose() * As;
  const DenseVector Atb = As.transpose() * (p.b() / sA);

  OracleSolution best;
  best.x = ls.x;
  best.objective = eval_q(p, ls.x);
  best.active_pattern = ls.active_pattern;
  best.residual = ls.residual;
  auto offer = [&](const DenseVector& x, const std::vector<Bound>& pat) {
    const double v = eval_q(p, x);
    if (v < best.objective) {
      best.x = x;
      best.objective = v;
      best.active_pattern = pat;
      best.residual = (p.A() * x - p.b()).norm();
    }
  };
  DenseVector xp;
  if (detail::polish_on_face(p, ls.active_pattern, y, xp)) offer(xp, ls.active_pattern);

  const double target = p.tol() / 10;
  double lower = -std::numeric_limits<double>::infinity();
  for (int k = 1; k <= 12; ++k) {
    const double w = std::pow(10.0, -k);
    const OracleSolution pen = oracle_min_box(p.Q() + AtA / w, p.c() - Atb / w);
    lower = std::max(lower, eval_q(p, pen.x));
    if (detail::polish_on_face(p, pen.active_pattern, y, xp)) offer(xp, pen.active_pattern);
    if (best.objective - lower <= target) {
      best.lower_bound = lower;
      return best;
    }
  }
  throw BracketFailed("oracle_solve_boxqp: bracket [" + std::to_string(lower) + ", " +
                      std::to_string(best.objective) + "] did not close to tol/10");
}

}  // namespace stableqp
