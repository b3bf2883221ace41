// Solve a small box QP and compare against the brute-force oracle.
#include <iostream>

#include "stableqp/stableqp.hpp"

int main() {
  using namespace stableqp;
  DenseMatrix Q(2, 2);
  Q << 2, 0, 0, 2;
  DenseVector c(2);
  c << -3, 0.5;
  DenseMatrix A(1, 2);
  A << 1, 1;
  DenseVector b(1);
  b << 0.5;
  const BoxQP p(Q, c, A, b, 1e-3);

  const SolveReport rep = solve(p);
  const OracleSolution ref = oracle_solve_boxqp(p);
  std::cout << "x = " << rep.x.transpose() << "\n"
            << "q(x) = " << rep.objective << "  (oracle " << ref.objective << ")\n"
            << "|Ax-b| = " << rep.feas_residual << "\n"
            << "K = " << rep.iterations_primal << ", cycles = " << rep.cycles << "\n";
}
