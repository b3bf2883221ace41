#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "stableqp/stableqp.hpp"

namespace testing_support {

using stableqp::BoxQP;
using stableqp::DenseMatrix;
using stableqp::DenseVector;

inline DenseMatrix gaussian(std::mt19937_64& rng, int r, int c, double s = 1.0) {
  std::normal_distribution<double> N(0.0, s);
  DenseMatrix M(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) M(i, j) = N(rng);
  return M;
}

inline DenseVector uniform_vec(std::mt19937_64& rng, int n, double lo, double hi) {
  std::uniform_real_distribution<double> U(lo, hi);
  DenseVector v(n);
  for (int i = 0; i < n; ++i) v[i] = U(rng);
  return v;
}

// Random PSD matrix; rank-deficient with probability 0.3.
inline DenseMatrix random_psd(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> U(0.0, 1.0);
  DenseMatrix R = gaussian(rng, n, n);
  if (U(rng) < 0.3) {
    DenseMatrix r1 = R.col(0);
    return r1 * r1.transpose();
  }
  DenseMatrix Q = R * R.transpose() * U(rng);
  return 0.5 * (Q + Q.transpose());
}

// Random box instance. Feasible instances have b = A x0 with x0 well inside
// the box; infeasible ones add a large perturbation.
inline BoxQP random_instance(std::mt19937_64& rng, int n, int m, double tol, bool feasible) {
  DenseMatrix Q = random_psd(rng, n);
  DenseVector c = gaussian(rng, n, 1);
  DenseMatrix A = gaussian(rng, m, n);
  DenseVector b = A * uniform_vec(rng, n, -0.8, 0.8);
  if (!feasible) b += 5.0 * DenseVector(gaussian(rng, m, 1));
  return BoxQP(Q, c, A, b, tol);
}

// Central differences of a scalar function.
template <class F>
DenseVector fd_gradient(F&& f, const DenseVector& x, double h) {
  DenseVector g(x.size());
  for (int i = 0; i < x.size(); ++i) {
    DenseVector xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    g[i] = (f(xp) - f(xm)) / (2 * h);
  }
  return g;
}

inline double rel_err(const DenseMatrix& a, const DenseMatrix& b) {
  return (a - b).norm() / std::max(1.0, b.norm());
}

}  // namespace testing_support
