#pragma once

#include <Eigen/Eigenvalues>

#include <cmath>
#include <string>
#include <utility>

#include "stableqp/errors.hpp"
#include "stableqp/linalg.hpp"

namespace stableqp {

namespace detail {

inline void require_finite(const DenseMatrix& M, const char* name) {
  if (!M.allFinite()) throw InvalidProblem(std::string(name) + " has a non-finite entry");
}

// Returns the symmetrized copy of Q after checking symmetry and PSD.
inline DenseMatrix certify_psd(const DenseMatrix& Q, const char* name) {
  const double scale = Q.norm();
  if ((Q - Q.transpose()).norm() > 1e-12 * scale)
    throw InvalidProblem(std::string(name) + " is not symmetric");
  DenseMatrix S = 0.5 * (Q + Q.transpose());
  if (S.rows() > 0 && scale > 0) {
    Eigen::SelfAdjointEigenSolver<DenseMatrix> es(S, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success)
      throw InvalidProblem(std::string(name) + ": eigenvalue computation failed");
    double lmin = es.eigenvalues().minCoeff();
    if (lmin < -1e-10 * scale)
      throw InvalidProblem(std::string(name) + " is not positive semidefinite (eigenvalue " +
                           std::to_string(lmin) + ")");
  }
  return S;
}

inline void check_shapes(const DenseMatrix& Q, const DenseVector& c, const DenseMatrix& A,
                         const DenseVector& b) {
  const auto n = c.size();
  if (n < 1) throw DimensionMismatch("problem needs n >= 1 variables");
  if (Q.rows() != n || Q.cols() != n)
    throw DimensionMismatch("Q must be " + std::to_string(n) + "x" + std::to_string(n));
  if (A.cols() != n || A.rows() != b.size())
    throw DimensionMismatch("A must be " + std::to_string(b.size()) + "x" + std::to_string(n));
}

}  // namespace detail

// min 1/2 x'Qx + c'x  s.t.  ||Ax - b|| minimal over the box, ||x||_inf <= 1.
class BoxQP {
 public:
  BoxQP(DenseMatrix Q, DenseVector c, DenseMatrix A, DenseVector b, double tol)
      : c_(std::move(c)), A_(std::move(A)), b_(std::move(b)), tol_(tol) {
    detail::check_shapes(Q, c_, A_, b_);
    detail::require_finite(Q, "Q");
    detail::require_finite(c_, "c");
    detail::require_finite(A_, "A");
    detail::require_finite(b_, "b");
    if (!(tol_ > 0) || !std::isfinite(tol_)) throw InvalidProblem("tol must be finite and > 0");
    Q_ = detail::certify_psd(Q, "Q");
  }

  const DenseMatrix& Q() const { return Q_; }
  const DenseVector& c() const { return c_; }
  const DenseMatrix& A() const { return A_; }
  const DenseVector& b() const { return b_; }
  double tol() const { return tol_; }
  Eigen::Index n() const { return c_.size(); }
  Eigen::Index m() const { return b_.size(); }

 private:
  DenseMatrix Q_;
  DenseVector c_;
  DenseMatrix A_;
  DenseVector b_;
  double tol_;
};

// min 1/2 x'Qt x + ct'x  s.t.  At x = bt, x >= 0.
class StandardQP {
 public:
  StandardQP(DenseMatrix Qt, DenseVector ct, DenseMatrix At, DenseVector bt)
      : ct_(std::move(ct)), At_(std::move(At)), bt_(std::move(bt)) {
    detail::check_shapes(Qt, ct_, At_, bt_);
    detail::require_finite(Qt, "Qt");
    detail::require_finite(ct_, "ct");
    detail::require_finite(At_, "At");
    detail::require_finite(bt_, "bt");
    Qt_ = detail::certify_psd(Qt, "Qt");
  }

  const DenseMatrix& Qt() const { return Qt_; }
  const DenseVector& ct() const { return ct_; }
  const DenseMatrix& At() const { return At_; }
  const DenseVector& bt() const { return bt_; }
  Eigen::Index n() const { return ct_.size(); }
  Eigen::Index m() const { return bt_.size(); }

 private:
  DenseMatrix Qt_;
  DenseVector ct_;
  DenseMatrix At_;
  DenseVector bt_;
};

struct Solution {
  DenseVector x;
  double objective = 0.0;
  double feas_residual = 0.0;
  int iterations_primal = 0;
  int iterations_pd = 0;
};

inline void check_dim(const BoxQP& p, const DenseVector& x) {
  if (x.size() != p.n())
    throw DimensionMismatch("x has dimension " + std::to_string(x.size()) + ", expected " +
                            std::to_string(p.n()));
}

inline double eval_q(const BoxQP& p, const DenseVector& x) {
  check_dim(p, x);
  return 0.5 * x.dot(p.Q() * x) + p.c().dot(x);
}

inline double eval_residual(const BoxQP& p, const DenseVector& x) {
  check_dim(p, x);
  return (p.A() * x - p.b()).norm();
}

inline double eval_q_omega(const BoxQP& p, double omega, const DenseVector& x) {
  if (!(omega > 0)) throw InvalidProblem("omega must be > 0");
  check_dim(p, x);
  const double r = (p.A() * x - p.b()).squaredNorm();
  return 0.5 * omega * x.squaredNorm() + eval_q(p, x) + r / (2 * omega);
}

inline double eval_q_standard(const StandardQP& sp, const DenseVector& xt) {
  return 0.5 * xt.dot(sp.Qt() * xt) + sp.ct().dot(xt);
}

// Box problem for a trial value pi plus the map back to standard coordinates.
struct StandardTransform {
  BoxQP box;
  double pi;

  DenseVector back_map(const DenseVector& x) const {
    return 0.5 * pi * (x + DenseVector::Ones(x.size()));
  }
};

inline StandardTransform transform_standard(const StandardQP& sp, double pi, double tol) {
  if (!(pi > 0) || !std::isfinite(pi)) throw InvalidProblem("pi must be finite and > 0");
  const auto n = sp.n();
  const DenseVector e = DenseVector::Ones(n);
  DenseMatrix A = (pi / 2) * sp.At();
  DenseVector b = sp.bt() - (pi / 2) * (sp.At() * e);
  DenseMatrix Q = (0.25 * pi * pi) * sp.Qt();
  DenseVector c = (0.5 * pi) * sp.ct() + (0.25 * pi * pi) * (sp.Qt() * e);
  return StandardTransform{BoxQP(std::move(Q), std::move(c), std::move(A), std::move(b), tol), pi};
}

// L = log(1 + |Q| + |c| + |A| + |b|) + log(n + m) - log(tol), natural log.
inline double problem_factor(const BoxQP& p) {
  const double data = norm2_matrix(p.Q()) + p.c().norm() + norm2_matrix(p.A()) + p.b().norm();
  return std::log1p(data) + std::log(static_cast<double>(p.n() + p.m())) - std::log(p.tol());
}

// Trial values start * 2^k for the standard-form driver.
class PiSchedule {
 public:
  explicit PiSchedule(double start, double cap = 1e100) : next_(start), cap_(cap) {
    if (!(start > 0) || !std::isfinite(start)) throw InvalidProblem("pi start must be > 0");
  }

  double next() {
    if (next_ > cap_)
      throw PiCapExceeded("pi schedule exceeded cap " + std::to_string(cap_));
    double v = next_;
    next_ *= 2;
    return v;
  }

 private:
  double next_;
  double cap_;
};

}  // namespace stableqp
