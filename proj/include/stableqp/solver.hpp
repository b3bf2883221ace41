#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "stableqp/errors.hpp"
#include "stableqp/kkt.hpp"
#include "stableqp/linalg.hpp"
#include "stableqp/neighborhoods.hpp"
#include "stableqp/params.hpp"
#include "stableqp/problem.hpp"

namespace stableqp {

enum class SolverMode { stable, fast };
enum class ParamsMode { strict, practical };
enum class StepKind { primal, lift, path, centrality, error_reset };

inline const char* to_string(SolverMode m) { return m == SolverMode::stable ? "stable" : "fast"; }
inline const char* to_string(ParamsMode m) { return m == ParamsMode::strict ? "strict" : "practical"; }
inline const char* to_string(StepKind k) {
  switch (k) {
    case StepKind::primal: return "primal";
    case StepKind::lift: return "lift";
    case StepKind::path: return "path";
    case StepKind::centrality: return "centrality";
    case StepKind::error_reset: return "error_reset";
  }
  return "?";
}

// One row of the solver trace. For primal steps residual_eq holds
// ||grad f(x_k)|| and the primal-dual fields are zero. cond_DF is NaN unless
// conditioning is tracked.
struct TraceEntry {
  int k = 0;
  double tau = 0;
  StepKind step_kind = StepKind::primal;
  double residual_comp = 0;
  double residual_eq = 0;
  double cond_DF = std::numeric_limits<double>::quiet_NaN();
  double step_norm = 0;
  double z_norm = 0;
  double comp_gap = 0;
  double min_comp_product = 0;
  double interior_margin = 0;
  double scalar_product = 0;  // dx'(dmu_L - dmu_R)
};

// How the per-step post-checks behave.
struct StepPolicy {
  bool enveloped = false;  // widen checks by C_dF * nu of the step's envelope level
  bool throw_on_violation = true;
  std::vector<std::string>* violations = nullptr;
  bool track_conditioning = false;
};

struct StepResult {
  Iterate z;
  double tau = 0;
  DenseVector dz;
  double cond_DF = std::numeric_limits<double>::quiet_NaN();
};

namespace detail {

inline void report(const StepPolicy& pol, bool ok, const std::string& msg) {
  if (ok) return;
  if (pol.throw_on_violation) throw StepRejected(msg);
  if (pol.violations) pol.violations->push_back(msg);
}

inline void require_interior(const Iterate& z, const char* step) {
  if (!(z.interior_margin() > 0) || !z.flat().allFinite())
    throw StepRejected(std::string(step) + ": iterate left the interior (margin " +
                       std::to_string(z.interior_margin()) + ")");
}

// Newton step DF(z) dz = rhs.
inline StepResult newton(const BoxQP& p, const MethodParams& mp, const Iterate& z,
                         const DenseVector& rhs, const StepPolicy& pol) {
  StepResult r;
  r.dz = solve_DF(p, mp, z, rhs);
  r.z = z.advanced(r.dz);
  if (pol.track_conditioning) {
    try {
      r.cond_DF = cond_estimate(eval_DF(p, mp, z));
    } catch (const SingularSystem&) {
      r.cond_DF = std::numeric_limits<double>::infinity();
    }
  }
  return r;
}

}  // namespace detail

// Bound on ||(r1, r2)|| after an error-reset step.
inline double error_reset_bound(const MethodParams& mp) {
  return 100.0 * mp.N * eps_mach * mp.C_DF * mp.C_z;
}

// K undamped Newton steps on f from x = 0.
inline DenseVector primal_init(const BoxQP& p, const MethodParams& mp,
                               const std::function<void(const TraceEntry&)>& on_step = {}) {
  DenseVector x = DenseVector::Zero(p.n());
  for (int k = 1; k <= mp.K; ++k) {
    const DenseVector g = eval_grad_f(p, mp, x);
    const DenseVector dx = solve_linear(eval_hess_f(p, mp, x), -g);
    x += dx;
    if (on_step) {
      TraceEntry e;
      e.k = k;
      e.tau = mp.tau_A;
      e.step_kind = StepKind::primal;
      e.residual_eq = eval_grad_f(p, mp, x).norm();
      e.step_norm = dx.norm();
      e.z_norm = x.norm();
      on_step(e);
    }
  }
  const double gn = eval_grad_f(p, mp, x).norm();
  if (!(gn <= mp.rho))
    throw PrimalInitFailed("after K = " + std::to_string(mp.K) + " Newton steps ||grad f|| = " +
                           format_real(gn) + " exceeds rho = " + format_real(mp.rho));
  return x;
}

inline Iterate lift(const BoxQP& p, const MethodParams& mp, const DenseVector& xK) {
  check_dim(p, xK);
  const DenseVector e = DenseVector::Ones(p.n());
  DenseVector lambda = -(p.A() * xK - p.b()) / mp.omega;
  DenseVector mu_L = mp.tau_A * (e + xK).cwiseInverse();
  DenseVector mu_R = mp.tau_A * (e - xK).cwiseInverse();
  return Iterate(xK, std::move(lambda), std::move(mu_L), std::move(mu_R));
}

// Newton step that cancels only the equality blocks of F_tau.
inline StepResult error_reset_step(const BoxQP& p, const MethodParams& mp, const Iterate& z,
                                   double tau, const StepPolicy& pol = {}) {
  detail::require_interior(z, "error_reset_step");
  Residual r = eval_F(p, mp, z, tau);
  r.r3.setZero();
  r.r4.setZero();
  StepResult s = detail::newton(p, mp, z, -r.flat(), pol);
  s.tau = tau;
  detail::require_interior(s.z, "error_reset_step");
  const double eq = eval_F(p, mp, s.z, tau).eq_norm();
  detail::report(pol, eq <= error_reset_bound(mp),
                 "error_reset_step: equality residual " + format_real(eq) + " above bound " +
                     format_real(error_reset_bound(mp)));
  return s;
}

// Newton step towards the central point at sigma * tau.
inline StepResult path_step(const BoxQP& p, const MethodParams& mp, const Iterate& z, double tau,
                            const StepPolicy& pol = {}) {
  detail::require_interior(z, "path_step");
  const double tau_hat = mp.sigma * tau;
  StepResult s = detail::newton(p, mp, z, -eval_F(p, mp, z, tau_hat).flat(), pol);
  s.tau = tau_hat;
  detail::require_interior(s.z, "path_step");
  const double slack = pol.enveloped ? mp.C_dF * mp.nu_1 : 0.0;
  const double comp = eval_F(p, mp, s.z, tau_hat).comp_norm();
  detail::report(pol, comp <= mp.theta * tau_hat + slack,
                 "path_step: complementarity residual " + format_real(comp) +
                     " above theta * tau = " + format_real(mp.theta * tau_hat));
  return s;
}

// Newton step at unchanged tau.
inline StepResult centrality_step(const BoxQP& p, const MethodParams& mp, const Iterate& z,
                                  double tau, const StepPolicy& pol = {}) {
  detail::require_interior(z, "centrality_step");
  StepResult s = detail::newton(p, mp, z, -eval_F(p, mp, z, tau).flat(), pol);
  s.tau = tau;
  detail::require_interior(s.z, "centrality_step");
  const double slack = pol.enveloped ? mp.C_dF * mp.nu_2 : 0.0;
  const double comp = eval_F(p, mp, s.z, tau).comp_norm();
  detail::report(pol, comp <= 0.5 * mp.theta * tau + slack,
                 "centrality_step: complementarity residual " + format_real(comp) +
                     " above theta * tau / 2 = " + format_real(0.5 * mp.theta * tau));
  return s;
}

struct SolverOptions {
  SolverMode mode = SolverMode::stable;
  ParamsMode params = ParamsMode::practical;
  PracticalFloors floors{};
  bool track_conditioning = false;
  bool keep_trace = true;
  std::function<void(const TraceEntry&)> on_step;
};

struct SolveReport {
  DenseVector x;
  double objective = 0;
  double feas_residual = 0;
  double tau_final = 0;
  int iterations_primal = 0;
  int cycles = 0;
  int loop_linear_solves = 0;
  SolverMode mode = SolverMode::stable;
  ParamsMode params_mode = ParamsMode::practical;
  MethodParams params;
  Iterate z;
  std::vector<TraceEntry> trace;
  std::vector<std::string> violations;

  Solution solution() const { return {x, objective, feas_residual, iterations_primal, cycles}; }
};

inline MethodParams params_for(const BoxQP& p, const SolverOptions& opt) {
  return opt.params == ParamsMode::strict ? compute_params(p)
                                          : compute_params_practical(p, opt.floors);
}

inline SolveReport solve(const BoxQP& p, const MethodParams& mp, const SolverOptions& opt) {
  SolveReport rep;
  rep.mode = opt.mode;
  rep.params_mode = opt.params;
  rep.params = mp;

  auto emit = [&](const TraceEntry& e) {
    if (opt.keep_trace) rep.trace.push_back(e);
    if (opt.on_step) opt.on_step(e);
  };
  auto record = [&](int k, StepKind kind, const Iterate& z, double tau, const DenseVector* dz,
                    double cond) {
    if (!opt.keep_trace && !opt.on_step) return;
    const Residual r = eval_F(p, mp, z, tau);
    TraceEntry e;
    e.k = k;
    e.tau = tau;
    e.step_kind = kind;
    e.residual_comp = r.comp_norm();
    e.residual_eq = r.eq_norm();
    e.cond_DF = cond;
    e.z_norm = z.flat().norm();
    e.comp_gap = complementarity_gap(z);
    e.min_comp_product = min_comp_product(z);
    e.interior_margin = z.interior_margin();
    if (dz) {
      const auto n = p.n(), m = p.m();
      e.step_norm = dz->norm();
      e.scalar_product = dz->segment(0, n).dot(dz->segment(n + m, n) - dz->segment(2 * n + m, n));
    }
    emit(e);
  };

  StepPolicy pol;
  pol.enveloped = !(opt.mode == SolverMode::fast && opt.params == ParamsMode::strict);
  pol.throw_on_violation = opt.params == ParamsMode::strict;
  pol.violations = &rep.violations;
  pol.track_conditioning = opt.track_conditioning;

  const DenseVector xK =
      primal_init(p, mp, opt.keep_trace || opt.on_step ? std::function<void(const TraceEntry&)>(emit)
                                                       : std::function<void(const TraceEntry&)>());
  rep.iterations_primal = mp.K;
  Iterate z = lift(p, mp, xK);
  double tau = mp.tau_A;
  record(0, StepKind::lift, z, tau, nullptr,
         opt.track_conditioning ? cond_estimate(eval_DF(p, mp, z))
                                : std::numeric_limits<double>::quiet_NaN());
  StepResult s = error_reset_step(p, mp, z, tau, pol);
  z = s.z;
  record(0, StepKind::error_reset, z, tau, &s.dz, s.cond_DF);

  bool done = false;
  for (int k = 1; k <= mp.M; ++k) {
    s = path_step(p, mp, z, tau, pol);
    z = s.z;
    const double tau_hat = s.tau;
    ++rep.loop_linear_solves;
    record(k, StepKind::path, z, tau_hat, &s.dz, s.cond_DF);
    if (opt.mode == SolverMode::stable) {
      s = centrality_step(p, mp, z, tau_hat, pol);
      z = s.z;
      ++rep.loop_linear_solves;
      record(k, StepKind::centrality, z, tau_hat, &s.dz, s.cond_DF);
      s = error_reset_step(p, mp, z, tau_hat, pol);
      z = s.z;
      ++rep.loop_linear_solves;
      record(k, StepKind::error_reset, z, tau_hat, &s.dz, s.cond_DF);
    }
    tau = tau_hat;
    rep.cycles = k;
    if (tau_hat <= mp.tau_E) {
      done = true;
      break;
    }
  }
  if (!done)
    throw IterationBudgetExceeded("M = " + std::to_string(mp.M) + " cycles ended at tau = " +
                                  format_real(tau) + " > tau_E = " + format_real(mp.tau_E));

  rep.z = z;
  rep.x = z.x;
  rep.tau_final = tau;
  rep.objective = eval_q(p, rep.x);
  rep.feas_residual = eval_residual(p, rep.x);
  return rep;
}

inline SolveReport solve(const BoxQP& p, const SolverOptions& opt = {}) {
  return solve(p, params_for(p, opt), opt);
}

inline SolveReport solve(const BoxQP& p, SolverMode mode) {
  SolverOptions opt;
  opt.mode = mode;
  return solve(p, opt);
}

struct StandardReport {
  DenseVector x;  // standard-form coordinates
  double objective = 0;
  double feas_residual = 0;
  double pi = 0;
  int trials = 0;
  std::vector<double> tried;
  SolveReport box;
};

// Accept a box solution when every component stays below 0.9, i.e. the
// standard-form solution stays clear of the artificial upper bound pi.
inline bool pi_accepts(const DenseVector& x) { return (x.array() < 0.9).all(); }

// pi > 0 solves once; std::nullopt runs the doubling schedule from 1.
inline StandardReport solve_standard(const StandardQP& sp, std::optional<double> pi, double tol,
                                     const SolverOptions& opt = {}, double pi_cap = 1e100) {
  StandardReport out;
  auto attempt = [&](double trial) {
    const StandardTransform t = transform_standard(sp, trial, tol);
    out.box = solve(t.box, opt);
    out.x = t.back_map(out.box.x);
    out.pi = trial;
    out.tried.push_back(trial);
    ++out.trials;
  };
  if (pi) {
    attempt(*pi);
  } else {
    PiSchedule sched(1.0, pi_cap);
    do {
      attempt(sched.next());
    } while (!pi_accepts(out.box.x));
  }
  out.objective = eval_q_standard(sp, out.x);
  out.feas_residual = (sp.At() * out.x - sp.bt()).norm();
  return out;
}

}  // namespace stableqp
