// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "stableqp/stableqp.hpp"
#include "support.hpp"

using namespace stableqp;
using testing_support::gaussian;
using testing_support::random_instance;
using testing_support::random_psd;
using testing_support::uniform_vec;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

int failures = 0;

void report(const char* id, const char* title, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!o.pass) ++failures;
  std::printf("[%s] %s %s: %s (%.1fs)\n", o.pass ? "PASS" : "FAIL", id, title, o.detail.c_str(), secs);
  std::fflush(stdout);
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

struct Instance {
  BoxQP p;
  bool feasible;
};

std::vector<Instance> mixed_instances(std::mt19937_64& rng, int count) {
  std::vector<Instance> out;
  std::uniform_int_distribution<int> N(1, 6), M(1, 3);
  for (int i = 0; i < count; ++i) {
    const bool feasible = i % 2 == 0;
    out.push_back({random_instance(rng, N(rng), M(rng), i % 4 < 2 ? 1e-2 : 1e-3, feasible), feasible});
  }
  return out;
}

// Per-step trace checks shared by several criteria.
struct TraceStats {
  int path = 0, centrality = 0, reset = 0, iterates = 0;
  int path_bad = 0, cent_bad = 0, reset_bad = 0, cond_bad = 0, znorm_bad = 0, gap_bad = 0,
      sp_bad = 0, interior_bad = 0;
  double worst_path = 0, worst_cent = 0, worst_reset = 0, worst_cond = 0, worst_gap = 0,
         worst_sp = 0;
};

TraceStats collect(const std::vector<BoxQP>& problems) {
  TraceStats st;
  for (const BoxQP& p : problems) {
    SolverOptions opt;
    opt.track_conditioning = true;
    SolveReport r = solve(p, opt);
    const MethodParams& mp = r.params;
    const double n = static_cast<double>(p.n());
    for (const TraceEntry& e : r.trace) {
      if (e.step_kind == StepKind::primal) continue;
      ++st.iterates;
      if (!(e.interior_margin > 0)) ++st.interior_bad;
      if (e.cond_DF > mp.kappa_DF) ++st.cond_bad;
      st.worst_cond = std::max(st.worst_cond, e.cond_DF / mp.kappa_DF);
      if (e.z_norm > mp.C_z) ++st.znorm_bad;
      const double gap_bound = 2 * n * (1 + mp.theta) * e.tau;
      if (e.comp_gap > gap_bound * (1 + 1e-6)) ++st.gap_bad;
      st.worst_gap = std::max(st.worst_gap, e.comp_gap / gap_bound);
      switch (e.step_kind) {
        case StepKind::path: {
          ++st.path;
          const double slack = mp.C_dF * mp.nu_1;
          if (e.residual_comp > mp.theta * e.tau * (1 + 1e-6) + slack) ++st.path_bad;
          st.worst_path = std::max(st.worst_path, e.residual_comp / (mp.theta * e.tau));
          if (e.scalar_product < -1e-10 * e.step_norm * e.step_norm) ++st.sp_bad;
          if (e.step_norm > 0)
            st.worst_sp = std::min(st.worst_sp, e.scalar_product / (e.step_norm * e.step_norm));
          break;
        }
        case StepKind::centrality: {
          ++st.centrality;
          const double slack = mp.C_dF * mp.nu_2;
          if (e.residual_comp > 0.5 * mp.theta * e.tau + slack) ++st.cent_bad;
          st.worst_cent = std::max(st.worst_cent, e.residual_comp / (0.5 * mp.theta * e.tau));
          break;
        }
        case StepKind::error_reset: {
          ++st.reset;
          const double bound = error_reset_bound(mp);
          if (e.residual_eq > bound) ++st.reset_bad;
          st.worst_reset = std::max(st.worst_reset, e.residual_eq / bound);
          break;
        }
        default:
          break;
      }
    }
  }
  return st;
}

// Replays the stable loop and splits each path step's scalar product as
//   dx'(dmu_L - dmu_R) = dx'(Q + omega I + A'A/omega) dx + dx'(r1 + A'r2/omega),
// with (r1, r2) the equality residual at the start of the step. Counts the
// negative products and how many of them are explained by that residual term
// being no larger than its binary64 rounding floor.
struct ScalarProductSplit {
  int negative = 0, within_floor = 0;
};

ScalarProductSplit split_scalar_products(const std::vector<BoxQP>& problems) {
  ScalarProductSplit out;
  for (const BoxQP& p : problems) {
    const MethodParams mp = compute_params_practical(p);
    StepPolicy pol;
    pol.enveloped = true;
    pol.throw_on_violation = false;
    const auto n = p.n(), m = p.m();
    const double om = mp.omega, nA = p.A().norm(), u = eps_mach;
    const DenseMatrix Mq = p.Q() + om * DenseMatrix::Identity(n, n) + p.A().transpose() * p.A() / om;
    Iterate z = lift(p, mp, primal_init(p, mp));
    double tau = mp.tau_A;
    z = error_reset_step(p, mp, z, tau, pol).z;
    for (int k = 0; k < mp.M; ++k) {
      const StepResult s = path_step(p, mp, z, tau, pol);
      const DenseVector dx = s.dz.head(n);
      const DenseVector dmu = s.dz.segment(n + m, n) - s.dz.segment(2 * n + m, n);
      const double sp = dx.dot(dmu);
      if (sp < -1e-10 * s.dz.squaredNorm()) {
        ++out.negative;
        const double f1 = u * ((p.Q().norm() + om) * z.x.norm() + p.c().norm() +
                               nA * z.lambda.norm() + z.mu_L.norm() + z.mu_R.norm());
        const double f2 = u * (nA * z.x.norm() + p.b().norm() + om * z.lambda.norm());
        const double quad = dx.dot(Mq * dx);
        if (sp - quad >= -dx.norm() * (f1 + nA * f2 / om)) ++out.within_floor;
      }
      z = s.z;
      tau = s.tau;
      z = centrality_step(p, mp, z, tau, pol).z;
      z = error_reset_step(p, mp, z, tau, pol).z;
      if (tau <= mp.tau_E) break;
    }
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance suite"};
  std::uint64_t seed = 20261015;
  app.add_option("--seed", seed, "instance generator seed");
  CLI11_PARSE(app, argc, argv);
  std::printf("acceptance suite, seed %llu\n", static_cast<unsigned long long>(seed));

  std::mt19937_64 rng(seed);
  const std::vector<Instance> batch = mixed_instances(rng, 50);

  report("AC1", "solution conditions vs oracle", [&]() -> Outcome {
    int ok = 0;
    std::string first;
    double worst_q = -1e300, worst_r = -1e300;
    for (std::size_t i = 0; i < batch.size(); ++i) {
      const BoxQP& p = batch[i].p;
      SolveReport r = solve(p);
      const OracleSolution ref = oracle_solve_boxqp(p);
      const double boRes = oracle_boRes(p);
      const bool interior = r.x.cwiseAbs().maxCoeff() < 1;
      const double dq = r.objective - ref.objective, dr = r.feas_residual - boRes;
      worst_q = std::max(worst_q, dq / p.tol());
      worst_r = std::max(worst_r, dr / p.tol());
      if (interior && dq <= p.tol() && dr <= p.tol()) ++ok;
      else if (first.empty()) first = ", first failure #" + std::to_string(i);
    }
    return {ok == 50, std::to_string(ok) + "/50 (max (q-q*)/tol " + fmt(worst_q) +
                          ", max (res-boRes)/tol " + fmt(worst_r) + ")" + first};
  });

  report("AC2", "iteration-count closed forms", [&]() -> Outcome {
    int ok = 0;
    int maxK = 0;
    for (int i = 0; i < 20; ++i) {
      const BoxQP& p = batch[i].p;
      const MethodParams mp = compute_params_practical(p);
      const int K = static_cast<int>(std::ceil(std::log2(1 + std::log2(mp.C_Hf / mp.rho))));
      const int M = static_cast<int>(
          std::ceil((std::log(mp.tau_E) - std::log(mp.tau_A)) / std::log(mp.sigma)));
      const bool typical = mp.C_Hf / mp.rho <= std::ldexp(1.0, 1023);
      if (mp.K == K && mp.M == M && (!typical || mp.K <= 10)) ++ok;
      maxK = std::max(maxK, mp.K);
    }
    return {ok == 20, std::to_string(ok) + "/20 exact, max K = " + std::to_string(maxK)};
  });

  report("AC3", "primal initialization guarantee", [&]() -> Outcome {
    int ok = 0;
    double worst_g = 0, worst_x = 0;
    for (const Instance& in : batch) {
      const MethodParams mp = compute_params_practical(in.p);
      const DenseVector x = primal_init(in.p, mp);
      const double g = eval_grad_f(in.p, mp, x).norm();
      worst_g = std::max(worst_g, g / mp.rho);
      worst_x = std::max(worst_x, x.norm());
      if (g <= mp.rho && x.norm() <= 0.41 + 3 * mp.rho) ++ok;
    }
    return {ok == 50, std::to_string(ok) + "/50 (max |grad f|/rho " + fmt(worst_g) +
                          ", max |x_K| " + fmt(worst_x) + ")"};
  });

  std::vector<BoxQP> traced;
  for (int i = 0; i < 5; ++i) traced.push_back(batch[i].p);
  TraceStats ts;
  std::string trace_error;
  try {
    ts = collect(traced);
  } catch (const std::exception& e) {
    trace_error = e.what();
  }
  auto traced_outcome = [&](bool ok, const std::string& d) -> Outcome {
    if (!trace_error.empty()) return {false, "trace failed: " + trace_error};
    return {ok, d};
  };

  report("AC4", "path-step contraction", [&] {
    return traced_outcome(ts.path_bad == 0 && ts.interior_bad == 0,
                          std::to_string(ts.path - ts.path_bad) + "/" + std::to_string(ts.path) +
                              " steps, max comp/(theta tau) " + fmt(ts.worst_path) +
                              ", interiority lost " + std::to_string(ts.interior_bad));
  });
  report("AC5", "centrality halving", [&] {
    return traced_outcome(ts.cent_bad == 0,
                          std::to_string(ts.centrality - ts.cent_bad) + "/" +
                              std::to_string(ts.centrality) + " steps, max comp/(theta tau/2) " +
                              fmt(ts.worst_cent));
  });
  report("AC6", "error-reset linearity", [&] {
    return traced_outcome(ts.reset_bad == 0,
                          std::to_string(ts.reset - ts.reset_bad) + "/" + std::to_string(ts.reset) +
                              " steps, max eq/bound " + fmt(ts.worst_reset));
  });
  report("AC7", "conditioning and boundedness", [&] {
    return traced_outcome(ts.cond_bad == 0 && ts.znorm_bad == 0,
                          std::to_string(ts.iterates) + " iterates, max cond/kappa " +
                              fmt(ts.worst_cond) + ", |z| > C_z: " + std::to_string(ts.znorm_bad));
  });
  report("AC8", "duality-gap envelope", [&] {
    return traced_outcome(ts.gap_bad == 0, std::to_string(ts.iterates - ts.gap_bad) + "/" +
                                               std::to_string(ts.iterates) +
                                               " iterates, max gap/bound " + fmt(ts.worst_gap));
  });

  report("AC9", "derivative consistency", [&]() -> Outcome {
    int ok = 0;
    double wg = 0, wh = 0, wd = 0;
    for (int i = 0; i < 100; ++i) {
      const BoxQP& p = batch[i % 50].p;
      const MethodParams mp = compute_params_practical(p);
      const int n = static_cast<int>(p.n()), m = static_cast<int>(p.m());
      const DenseVector x = uniform_vec(rng, n, -0.5, 0.5);
      auto f = [&](const DenseVector& y) { return eval_f(p, mp, y); };
      const double eg = testing_support::rel_err(testing_support::fd_gradient(f, x, 1e-5),
                                                 eval_grad_f(p, mp, x));
      DenseMatrix Hfd(n, n);
      for (int j = 0; j < n; ++j) {
        DenseVector xp = x, xm = x;
        xp[j] += 1e-6;
        xm[j] -= 1e-6;
        Hfd.col(j) = (eval_grad_f(p, mp, xp) - eval_grad_f(p, mp, xm)) / 2e-6;
      }
      const double eh = testing_support::rel_err(Hfd, eval_hess_f(p, mp, x));
      const Iterate z(x, uniform_vec(rng, m, -2, 2), uniform_vec(rng, n, 0.1, 2),
                      uniform_vec(rng, n, 0.1, 2));
      const DenseVector v = gaussian(rng, 3 * n + m, 1);
      const double h = 1e-6, tau = 0.5;
      const DenseVector fd = (eval_F(p, mp, z.advanced(h * v), tau).flat() -
                              eval_F(p, mp, z.advanced(-h * v), tau).flat()) / (2 * h);
      const double ed = testing_support::rel_err(fd, eval_DF(p, mp, z) * v);
      wg = std::max(wg, eg);
      wh = std::max(wh, eh);
      wd = std::max(wd, ed);
      if (eg <= 1e-6 && eh <= 1e-5 && ed <= 1e-6) ++ok;
    }
    return {ok == 100, std::to_string(ok) + "/100 points (max rel err grad " + fmt(wg) +
                           ", hess " + fmt(wh) + ", DF " + fmt(wd) + ")"};
  });

  report("AC10", "scalar-product sign", [&] {
    std::string d = std::to_string(ts.path - ts.sp_bad) + "/" + std::to_string(ts.path) +
                    " path steps, min dx'(dmuL-dmuR)/|dz|^2 " + fmt(ts.worst_sp);
    if (ts.sp_bad > 0) {
      const ScalarProductSplit sp = split_scalar_products(traced);
      d += "; " + std::to_string(sp.within_floor) + "/" + std::to_string(sp.negative) +
           " shortfalls lie within the rounding floor of dx'(r1 + A'r2/omega)";
    }
    return traced_outcome(ts.sp_bad == 0, d);
  });

  report("AC11", "standard-form round trip", [&]() -> Outcome {
    // Reference: the box oracle at pi = 8. When its back-mapped solution stays
    // below 1.9 the artificial upper bound is inactive, so by convexity it
    // solves the standard-form problem itself.
    int ok = 0, made = 0, attempts = 0;
    double worst = -1e300;
    const double tol = 1e-2;
    while (made < 10 && attempts < 500) {
      ++attempts;
      std::uniform_int_distribution<int> N(2, 5), M(1, 2);
      const int n = N(rng), m = std::min(M(rng), n - 1);
      const DenseMatrix At = gaussian(rng, m, n);
      const DenseVector x0 = uniform_vec(rng, n, 0.1, 1.5);
      const StandardQP sp(random_psd(rng, n), gaussian(rng, n, 1), At, At * x0);
      const StandardTransform wide = transform_standard(sp, 8.0, tol);
      const OracleSolution o = oracle_solve_boxqp(wide.box);
      const DenseVector xt_ref = wide.back_map(o.x);
      if (!((xt_ref.array() < 1.9).all())) continue;
      ++made;
      const double q_ref = eval_q_standard(sp, xt_ref);
      const StandardReport r = solve_standard(sp, 2.0, tol);
      const double dq = r.objective - q_ref;
      worst = std::max(worst, dq / tol);
      if ((r.x.array() >= 0).all() && dq <= tol && r.feas_residual <= tol) ++ok;
    }
    const double eps = 1e-3;
    DenseMatrix Ae(1, 2);
    Ae << eps, 1;
    const StandardQP patho(DenseMatrix::Zero(2, 2), (DenseVector(2) << -1, 0).finished(), Ae,
                           DenseVector::Ones(1));
    const StandardReport ra = solve_standard(patho, std::nullopt, tol);
    const int budget = static_cast<int>(std::ceil(std::log2(1000.0))) + 2;
    const bool auto_ok = ra.trials <= budget;
    return {ok == 10 && made == 10 && auto_ok,
            std::to_string(ok) + "/" + std::to_string(made) + " pi=2 instances (max (q-q*)/tol " +
                fmt(worst) + "); auto pi accepted pi=" + fmt(ra.pi) + " after " +
                std::to_string(ra.trials) + " trials (budget " + std::to_string(budget) +
                "), x~1 = " + fmt(ra.x[0])};
  });

  report("AC12", "fast vs stable mode", [&]() -> Outcome {
    int ok = 0;
    double worst = 0;
    for (int i = 0; i < 10; ++i) {
      const BoxQP p = random_instance(rng, 2 + i % 4, 1 + i % 2, 1e-2, true);
      SolverOptions st, fa;
      fa.mode = SolverMode::fast;
      const SolveReport a = solve(p, st), b = solve(p, fa);
      const double d = std::abs(a.objective - b.objective);
      worst = std::max(worst, d / p.tol());
      if (d <= 10 * p.tol() && a.loop_linear_solves == 3 * a.cycles &&
          b.loop_linear_solves == b.cycles)
        ++ok;
    }
    return {ok == 10, std::to_string(ok) + "/10 (max |dq|/tol " + fmt(worst) +
                          "; solves per cycle 3 stable, 1 fast)"};
  });

  report("AC13", "ill-scaled instance (|A| ~ 1e8)", [&]() -> Outcome {
    std::mt19937_64 local(seed + 1);
    const BoxQP base = random_instance(local, 3, 2, 1e-2, true);
    const DenseMatrix A = base.A() * (1e8 / base.A().norm());
    const BoxQP p(base.Q(), base.c(), A, A * uniform_vec(local, 3, -0.5, 0.5), 1e-2);
    std::string strict;
    bool strict_ok = false;
    try {
      const MethodParams mp = compute_params(p);
      strict_ok = validate_params(p, mp).empty();
      strict = strict_ok ? "strict emitted a valid cascade" : "strict emitted an invalid cascade";
    } catch (const ParamOverflow& e) {
      strict_ok = true;
      strict = "strict raised ParamOverflow";
    }
    const SolveReport r = solve(p);
    const bool interior = r.x.cwiseAbs().maxCoeff() < 1;
    const OracleSolution ref = oracle_solve_boxqp(p);
    const double dq = r.objective - ref.objective;
    const double dr = r.feas_residual - oracle_boRes(p);
    return {strict_ok && interior && r.x.allFinite(),
            strict + "; practical solved in " + std::to_string(r.cycles) + " cycles, (q-q*)/tol " +
                fmt(dq / p.tol()) + ", (res-boRes)/tol " + fmt(dr / p.tol())};
  });

  std::printf("%s: %d criteria failed\n", failures ? "FAILED" : "ALL PASSED", failures);
  return failures ? 1 : 0;
}
