#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "stableqp/oracle.hpp"
#include "stableqp/params.hpp"
#include "support.hpp"

using namespace stableqp;
using testing_support::gaussian;
using testing_support::random_instance;
using testing_support::uniform_vec;

namespace {

double box_objective(const DenseMatrix& H, const DenseVector& g, const DenseVector& x) {
  return 0.5 * x.dot(H * x) + g.dot(x);
}

double projected_gradient(const DenseMatrix& H, const DenseVector& g, const DenseVector& x) {
  DenseVector pg = H * x + g;
  for (int i = 0; i < x.size(); ++i) {
    if (x[i] <= -1 && pg[i] > 0) pg[i] = 0;
    if (x[i] >= 1 && pg[i] < 0) pg[i] = 0;
  }
  return pg.norm();
}

}  // namespace

TEST(OracleMinBox, Examples) {
  OracleSolution a = oracle_min_box(DenseMatrix::Constant(1, 1, 2), DenseVector::Constant(1, -3), true);
  EXPECT_EQ(a.x[0], 1.0);
  EXPECT_EQ(a.active_pattern[0], Bound::upper);
  EXPECT_DOUBLE_EQ(a.objective, -2.0);

  OracleSolution b = oracle_min_box(DenseMatrix::Identity(2, 2), DenseVector::Zero(2), true);
  EXPECT_EQ(b.x.norm(), 0.0);
  EXPECT_EQ(b.objective, 0.0);

  OracleSolution c = oracle_min_box(DenseMatrix::Zero(1, 1), DenseVector::Ones(1));
  EXPECT_EQ(c.x[0], -1.0);
  EXPECT_EQ(c.active_pattern[0], Bound::lower);
}

TEST(OracleMinBox, TiesResolveLexicographically) {
  OracleSolution s = oracle_min_box(DenseMatrix::Zero(2, 2), DenseVector::Zero(2));
  EXPECT_EQ(s.active_pattern[0], Bound::lower);
  EXPECT_EQ(s.active_pattern[1], Bound::lower);
  EXPECT_EQ(s.x, DenseVector::Constant(2, -1.0));
}

TEST(OracleMinBox, TooLarge) {
  EXPECT_THROW(oracle_min_box(DenseMatrix::Identity(11, 11), DenseVector::Zero(11)), TooLarge);
  BoxQP p(DenseMatrix::Identity(11, 11), DenseVector::Zero(11), DenseMatrix::Zero(1, 11),
          DenseVector::Zero(1), 1e-2);
  EXPECT_THROW(oracle_boRes(p), TooLarge);
  EXPECT_THROW(oracle_solve_boxqp(p), TooLarge);
}

TEST(OracleMinBox, FirstOrderOptimality) {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 100; ++t) {
    const int n = 1 + t % 7;
    DenseMatrix H = testing_support::random_psd(rng, n);
    DenseVector g = gaussian(rng, n, 1, 2.0);
    OracleSolution s = oracle_min_box(H, g);
    EXPECT_LE(s.x.cwiseAbs().maxCoeff(), 1.0);
    EXPECT_LE(projected_gradient(H, g, s.x), 1e-9 * (1 + g.norm()) * (1 + H.norm()));
  }
}

TEST(OracleMinBox, StrictlyConvexLocalOptimality) {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 30; ++t) {
    const int n = 1 + t % 6;
    DenseMatrix R = gaussian(rng, n, n);
    DenseMatrix H = R * R.transpose() + 0.1 * DenseMatrix::Identity(n, n);
    DenseVector g = gaussian(rng, n, 1, 3.0);
    OracleSolution s = oracle_min_box(H, g, true);
    for (int k = 0; k < 100; ++k) {
      DenseVector y = s.x + 1e-3 * uniform_vec(rng, n, -1, 1);
      y = y.cwiseMax(-1.0).cwiseMin(1.0);
      if ((y - s.x).norm() == 0) continue;
      EXPECT_GE(box_objective(H, g, y), s.objective - 1e-12);
    }
  }
}

TEST(OracleBoRes, Examples) {
  BoxQP zero_b(DenseMatrix::Identity(2, 2), DenseVector::Zero(2), DenseMatrix::Ones(1, 2),
               DenseVector::Zero(1), 1e-2);
  EXPECT_EQ(oracle_boRes(zero_b), 0.0);
  BoxQP far(DenseMatrix::Zero(1, 1), DenseVector::Zero(1), DenseMatrix::Ones(1, 1),
            DenseVector::Constant(1, 2.0), 1e-2);
  EXPECT_DOUBLE_EQ(oracle_boRes(far), 1.0);
  BoxQP near(DenseMatrix::Zero(1, 1), DenseVector::Zero(1), DenseMatrix::Ones(1, 1),
             DenseVector::Constant(1, 0.5), 1e-2);
  EXPECT_NEAR(oracle_boRes(near), 0.0, 1e-15);
}

TEST(OracleBoRes, LowerBoundsEveryBoxPoint) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 40; ++t) {
    BoxQP p = random_instance(rng, 1 + t % 5, 1 + t % 3, 1e-2, t % 2);
    const double r = oracle_boRes(p);
    for (int k = 0; k < 50; ++k) {
      DenseVector x = uniform_vec(rng, p.n(), -1, 1);
      EXPECT_LE(r, (p.A() * x - p.b()).norm() + 1e-12);
    }
  }
}

TEST(OracleSolveBoxQP, Examples) {
  BoxQP flat(DenseMatrix::Zero(2, 2), DenseVector::Zero(2), DenseMatrix::Ones(1, 2),
             DenseVector::Constant(1, 5.0), 1e-3);
  OracleSolution a = oracle_solve_boxqp(flat);
  EXPECT_EQ(a.objective, 0.0);
  EXPECT_NEAR(a.residual, oracle_boRes(flat), 1e-12);

  BoxQP proj(2 * DenseMatrix::Identity(2, 2), DenseVector::Zero(2), DenseMatrix::Ones(1, 2),
             DenseVector::Ones(1), 1e-3);
  OracleSolution b = oracle_solve_boxqp(proj);
  EXPECT_NEAR(b.x[0], 0.5, 1e-9);
  EXPECT_NEAR(b.x[1], 0.5, 1e-9);

  BoxQP inf(DenseMatrix::Constant(1, 1, 2.0), DenseVector::Zero(1), DenseMatrix::Ones(1, 1),
            DenseVector::Constant(1, 2.0), 1e-3);
  OracleSolution c = oracle_solve_boxqp(inf);
  EXPECT_NEAR(c.x[0], 1.0, 1e-12);
  EXPECT_NEAR(c.objective, 1.0, 1e-12);
}

TEST(OracleSolveBoxQP, BracketAndFeasibility) {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 40; ++t) {
    BoxQP p = random_instance(rng, 1 + t % 6, 1 + t % 3, t % 2 ? 1e-2 : 1e-3, t % 2);
    OracleSolution s = oracle_solve_boxqp(p);
    EXPECT_LE(s.x.cwiseAbs().maxCoeff(), 1.0);
    EXPECT_LE(s.objective - s.lower_bound, p.tol() / 10);
    EXPECT_LE(s.residual, oracle_boRes(p) + p.tol() / 10);
    // No random box point with minimal residual beats the certified lower bound.
    for (int k = 0; k < 30; ++k) {
      DenseVector x = uniform_vec(rng, p.n(), -1, 1);
      if ((p.A() * x - p.b()).norm() <= oracle_boRes(p) + 1e-12) {
        EXPECT_GE(eval_q(p, x), s.lower_bound - 1e-9);
      }
    }
  }
}

TEST(OracleSolveBoxQP, InvariantUnderScalingOfConstraints) {
  // Scaling (A, b) leaves the residual-minimal set, hence the answer, unchanged.
  std::mt19937_64 rng(9);
  for (int t = 0; t < 10; ++t) {
    BoxQP p = random_instance(rng, 3, 2, 1e-2, t % 2 == 0);
    for (double s : {1e-4, 1e4, 1e8}) {
      BoxQP ps(p.Q(), p.c(), s * p.A(), s * p.b(), p.tol());
      EXPECT_NEAR(oracle_solve_boxqp(ps).objective, oracle_solve_boxqp(p).objective, p.tol() / 5)
          << "t = " << t << ", scale " << s;
    }
  }
}

// The regularized minimizer is within tol / 2 of the constrained problem.
TEST(OracleSolveBoxQP, RegularizedMinimizerIsTolAccurate) {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 20; ++t) {
    BoxQP p = random_instance(rng, 1 + t % 5, 1 + t % 3, 1e-2, t % 2);
    MethodParams mp = compute_params_practical(p);
    const double om = mp.omega;
    DenseMatrix H = p.Q() + om * DenseMatrix::Identity(p.n(), p.n()) +
                    p.A().transpose() * p.A() / om;
    DenseVector g = p.c() - p.A().transpose() * p.b() / om;
    OracleSolution xw = oracle_min_box(H, g, true);
    OracleSolution ref = oracle_solve_boxqp(p);
    EXPECT_LE(eval_q(p, xw.x), ref.objective + p.tol() / 2);
    EXPECT_LE(eval_residual(p, xw.x), oracle_boRes(p) + p.tol() / 2);
  }
}
