#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "stableqp/errors.hpp"

namespace stableqp {

using DenseMatrix = Eigen::MatrixXd;
using DenseVector = Eigen::VectorXd;

// Unit roundoff of binary64.
inline constexpr double eps_mach = std::numeric_limits<double>::epsilon() / 2;

inline bool all_finite(const DenseMatrix& G) { return G.allFinite(); }

inline double norm_inf(const DenseMatrix& G) {
  if (G.size() == 0) return 0.0;
  return G.cwiseAbs().rowwise().sum().maxCoeff();
}

// Upper bound on the spectral norm (Frobenius).
inline double norm2_matrix(const DenseMatrix& G) {
  if (G.size() == 0) return 0.0;
  return G.norm();
}

// Column-pivoted Householder QR of a row-equilibrated square matrix.
// Rows are scaled by 1/max|row| first so that the pivot test sees a matrix
// whose rows have unit size; this keeps the complementarity rows of the KKT
// matrix, whose entries can span many orders of magnitude, from masking the
// rest of the system.
class Factorization {
 public:
  explicit Factorization(const DenseMatrix& G) : dim_(G.rows()) {
    if (G.rows() != G.cols())
      throw DimensionMismatch("solve_linear: matrix is " + std::to_string(G.rows()) + "x" +
                              std::to_string(G.cols()) + ", not square");
    if (!G.allFinite()) throw SingularSystem("solve_linear: non-finite matrix entry");
    if (dim_ == 0) return;
    scale_.resize(dim_);
    for (Eigen::Index i = 0; i < dim_; ++i) {
      double r = G.row(i).cwiseAbs().maxCoeff();
      if (r == 0.0) throw SingularSystem("solve_linear: zero row " + std::to_string(i));
      scale_[i] = 1.0 / r;
    }
    DenseMatrix Ge = scale_.asDiagonal() * G;
    qr_.compute(Ge);
    const double threshold = static_cast<double>(dim_) * eps_mach * norm_inf(Ge);
    const auto& R = qr_.matrixQR();
    for (Eigen::Index k = 0; k < dim_; ++k) {
      if (!(std::abs(R(k, k)) >= threshold))
        throw SingularSystem("solve_linear: pivot " + std::to_string(k) + " of magnitude " +
                             std::to_string(std::abs(R(k, k))) + " below threshold");
    }
  }

  Eigen::Index dim() const { return dim_; }

  DenseVector solve(const DenseVector& v) const {
    check(v);
    if (dim_ == 0) return DenseVector(0);
    return qr_.solve(scale_.cwiseProduct(v));
  }

  // Solves G^T u = v. With S G P = Q R we have G^T = P R^T Q^T S^{-1}.
  DenseVector solve_transpose(const DenseVector& v) const {
    check(v);
    if (dim_ == 0) return DenseVector(0);
    DenseVector y = qr_.colsPermutation().transpose() * v;
    qr_.matrixQR().triangularView<Eigen::Upper>().transpose().solveInPlace(y);
    DenseVector w = qr_.householderQ() * y;
    return scale_.cwiseProduct(w);
  }

 private:
  void check(const DenseVector& v) const {
    if (v.size() != dim_)
      throw DimensionMismatch("solve_linear: right-hand side has dimension " +
                              std::to_string(v.size()) + ", expected " + std::to_string(dim_));
  }

  Eigen::Index dim_;
  DenseVector scale_;
  Eigen::ColPivHouseholderQR<DenseMatrix> qr_;
};

inline DenseVector solve_linear(const DenseMatrix& G, const DenseVector& v) {
  return Factorization(G).solve(v);
}

namespace detail {

// Fixed start vector; avoids being orthogonal to a coordinate-aligned singular vector.
inline DenseVector probe_vector(Eigen::Index n) {
  DenseVector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = 1.0 + 0.618033988749895 * std::sin(1.0 + 3.7 * i);
  return v / v.norm();
}

template <class Apply>
double power_iteration(Eigen::Index n, Apply&& apply, int max_iter = 200) {
  DenseVector v = probe_vector(n);
  double est = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    DenseVector w = apply(v);
    double nw = w.norm();
    if (nw == 0.0 || !std::isfinite(nw)) return nw;
    v = w / nw;
    if (it > 4 && std::abs(nw - est) <= 1e-4 * nw) return nw;
    est = nw;
  }
  return est;
}

}  // namespace detail

// Estimate of the 2-norm condition number from power iteration on G^T G and
// on its inverse.
inline double cond_estimate(const DenseMatrix& G) {
  Factorization f(G);
  const Eigen::Index n = G.rows();
  if (n == 0) return 1.0;
  double smax2 = detail::power_iteration(n, [&](const DenseVector& v) -> DenseVector {
    return G.transpose() * (G * v);
  });
  double sinv2 = detail::power_iteration(n, [&](const DenseVector& v) -> DenseVector {
    return f.solve(f.solve_transpose(v));
  });
  return std::sqrt(smax2) * std::sqrt(sinv2);
}

}  // namespace stableqp
