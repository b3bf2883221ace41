#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "stableqp/errors.hpp"
#include "stableqp/linalg.hpp"
#include "stableqp/problem.hpp"

namespace stableqp {

// Lower limits for the practical variant of the cascade. All zero reproduces
// the theoretical cascade.
struct PracticalFloors {
  double nu_rel = 1e-13;  // nu_0, nu_1, nu_2 >= nu_rel * C_z
  double tau_E = 1e-12;
  double c_gap = 1e-14;

  static PracticalFloors none() { return {0.0, 0.0, 0.0}; }
};

struct MethodParams {
  double theta = 0, beta = 0, sigma = 0;
  int N = 0;
  double C_Hf = 0, C_q = 0, omega = 0, C_lambda = 0, C_dmu = 0, tau_A = 0, tau_E = 0;
  double C_mu = 0, C_z = 0, c_gap = 0, C_DF = 0, C_DFinv = 0, kappa_DF = 0;
  double C_dF = 0, C_dDF = 0, C_ddz = 0, C_nu = 0, nu_2 = 0, nu_1 = 0, nu_0 = 0, rho = 0;
  int K = 0, M = 0;
  double C_Df = 0, C_F = 0, C_x = 0, C_dz = 0;

  // Data norms the cascade was evaluated with.
  double norm_Q = 0, norm_A = 0, norm_c = 0, norm_b = 0;
  bool practical = false;
  PracticalFloors floors = PracticalFloors::none();
};

namespace detail {

inline double up(double v) { return std::nextafter(v, std::numeric_limits<double>::infinity()); }
inline double dn(double v) { return std::nextafter(v, -std::numeric_limits<double>::infinity()); }

// max{||A||, C_q}; returns +inf for the reciprocal when it vanishes so that
// the corresponding bound drops out of a min{}.
inline double inv_or_inf(double num, double den) {
  return den > 0 ? num / den : std::numeric_limits<double>::infinity();
}

inline int iter_K(double C_Hf, double rho) {
  return std::max(1, static_cast<int>(std::ceil(std::log2(1 + std::log2(C_Hf / rho)))));
}

inline int iter_M(double tau_A, double tau_E, double sigma) {
  return std::max(1, static_cast<int>(std::ceil((std::log(tau_E) - std::log(tau_A)) / std::log(sigma))));
}

inline MethodParams cascade(const BoxQP& p, const PracticalFloors& fl, bool practical) {
  const double n = static_cast<double>(p.n());
  const double sn = std::sqrt(n);
  const double tol = p.tol();
  MethodParams r;
  r.practical = practical;
  r.floors = fl;
  r.norm_Q = norm2_matrix(p.Q());
  r.norm_A = norm2_matrix(p.A());
  r.norm_c = p.c().norm();
  r.norm_b = p.b().norm();
  const double nQ = r.norm_Q, nA = r.norm_A, nc = r.norm_c, nb = r.norm_b;

  r.theta = 0.3;
  r.beta = r.theta;
  r.sigma = up(1 - r.beta / std::sqrt(2 * n));
  r.N = static_cast<int>(3 * p.n() + p.m());
  r.C_Hf = 10.0;
  r.C_q = up(nQ * n + nc * sn);
  r.omega = dn(std::min({tol / (2 * n), tol * tol / (4 * r.C_q + n) / 16, 1.0}));
  const double om = r.omega;
  r.C_lambda = up((nA * sn + nb) / om);
  r.C_dmu = up((om + nQ) * sn + nc + nA * r.C_lambda);

  const DenseMatrix H = p.Q() + om * DenseMatrix::Identity(p.n(), p.n()) +
                        p.A().transpose() * p.A() / om;
  const DenseVector g = p.c() - p.A().transpose() * p.b() / om;
  r.tau_A = up(std::max(norm2_matrix(H) / 4, 4 * g.norm()));

  const double den = std::max(nA, r.C_q);
  double tE = std::min(inv_or_inf(tol * tol * om, 48 * n * den), r.sigma * r.tau_A);
  r.tau_E = std::min(std::max(dn(tE), fl.tau_E), dn(r.sigma * r.tau_A));

  r.C_mu = up(std::sqrt(2 * n) * (r.C_dmu + (1 + r.theta) * r.tau_A));
  r.C_z = up(std::sqrt(n + r.C_lambda * r.C_lambda + r.C_mu * r.C_mu) + 0.1);
  r.c_gap = std::max(dn((1 - r.theta) / (1 + r.C_z) * r.sigma * r.tau_E / 2), fl.c_gap);
  r.C_DF = up(nQ + 2 * om + 2 * nA + 4 + 4 * r.C_z);
  r.C_DFinv = up(1 / r.c_gap * std::max(1 / om, r.C_z / r.c_gap));
  r.kappa_DF = up(r.C_DF * r.C_DFinv);
  r.C_dF = r.C_DF;
  r.C_dDF = 2.0;
  r.C_ddz = up(2 * r.kappa_DF);
  r.C_nu = up(std::max(2 * r.C_ddz * (r.C_dF * r.C_DFinv + (2 / om) * r.C_dDF * r.C_z),
                       1 + r.C_DFinv * r.C_dF));

  const double nu_floor = fl.nu_rel * r.C_z;
  r.nu_2 = std::max(dn(std::min({0.1, r.c_gap / r.C_nu, om / (2 * r.C_dDF * r.kappa_DF),
                                 r.theta * r.sigma * r.tau_E / (2 * r.C_nu * r.C_dF)})),
                    nu_floor);
  r.nu_1 = std::max(dn(r.nu_2 / r.C_nu), nu_floor);
  r.nu_0 = std::max(dn(std::min(r.nu_1 / r.C_nu, inv_or_inf(tol, 2 * den))), nu_floor);
  r.rho = dn(r.nu_2 / (4 * std::sqrt(static_cast<double>(r.N)) * (nA / om + 1 + 8 * r.tau_A)));
  r.K = iter_K(r.C_Hf, r.rho);
  r.M = iter_M(r.tau_A, r.tau_E, r.sigma);

  r.C_Df = up((1 / r.tau_A) * (om + nQ + (1 / om) * (nA * nA + nb)) + 4 * sn);
  r.C_F = up(r.C_DF * r.C_z + nc + nb + 2 * sn * r.tau_A);
  r.C_x = up(sn);
  r.C_dz = up(r.C_DFinv * r.C_F);
  return r;
}

}  // namespace detail

// Name/value view of every scalar, in cascade order.
inline std::vector<std::pair<std::string, double>> param_list(const MethodParams& r) {
  return {{"theta", r.theta},       {"beta", r.beta},       {"sigma", r.sigma},
          {"N", r.N},               {"C_Hf", r.C_Hf},       {"C_q", r.C_q},
          {"omega", r.omega},       {"C_lambda", r.C_lambda}, {"C_dmu", r.C_dmu},
          {"tau_A", r.tau_A},       {"tau_E", r.tau_E},     {"C_mu", r.C_mu},
          {"C_z", r.C_z},           {"c_gap", r.c_gap},     {"C_DF", r.C_DF},
          {"C_DFinv", r.C_DFinv},   {"kappa_DF", r.kappa_DF}, {"C_dF", r.C_dF},
          {"C_dDF", r.C_dDF},       {"C_ddz", r.C_ddz},     {"C_nu", r.C_nu},
          {"nu_2", r.nu_2},         {"nu_1", r.nu_1},       {"nu_0", r.nu_0},
          {"rho", r.rho},           {"K", r.K},             {"M", r.M},
          {"C_Df", r.C_Df},         {"C_F", r.C_F},         {"C_x", r.C_x},
          {"C_dz", r.C_dz}};
}

namespace detail {

inline void check_representable(const MethodParams& r) {
  for (const auto& [name, v] : param_list(r)) {
    if (!std::isfinite(v))
      throw ParamOverflow("parameter " + name + " is not representable in binary64");
    if (!(v > 0))
      throw ParamOverflow("parameter " + name + " underflows to zero");
  }
}

}  // namespace detail

// Theoretical cascade. Throws ParamOverflow if any value leaves binary64.
inline MethodParams compute_params(const BoxQP& p) {
  MethodParams r = detail::cascade(p, PracticalFloors::none(), false);
  detail::check_representable(r);
  return r;
}

// Same cascade with the floors of `fl` applied as each quantity is produced,
// so dependents (rho, K, M, kappa) follow the floored values.
inline MethodParams compute_params_practical(const BoxQP& p, const PracticalFloors& fl = {}) {
  MethodParams r = detail::cascade(p, fl, true);
  detail::check_representable(r);
  return r;
}

// Re-evaluates every inequality of the cascade on an emitted record and
// returns a description of each violated one.
inline std::vector<std::string> validate_params(const BoxQP& p, const MethodParams& r) {
  std::vector<std::string> bad;
  auto le = [&](const char* name, double v, double rhs) {
    if (!(v <= rhs)) bad.push_back(std::string(name) + " <= bound violated");
  };
  auto ge = [&](const char* name, double v, double rhs) {
    if (!(v >= rhs)) bad.push_back(std::string(name) + " >= bound violated");
  };
  const double n = static_cast<double>(p.n());
  const double sn = std::sqrt(n);
  const double tol = p.tol();
  const double nQ = norm2_matrix(p.Q()), nA = norm2_matrix(p.A());
  const double nc = p.c().norm(), nb = p.b().norm();
  const PracticalFloors& fl = r.floors;
  const double om = r.omega;

  le("theta", r.theta, 0.3);
  le("beta", r.beta, r.theta);
  ge("sigma", r.sigma, 1 - r.beta / std::sqrt(2 * n));
  if (!(r.sigma > 0 && r.sigma < 1)) bad.push_back("sigma in (0,1) violated");
  le("path-step contraction", 0.36 * (r.beta + r.theta) * (r.beta + r.theta) / (1 - r.theta),
     r.theta * r.sigma);
  le("complementarity refinement", r.theta * r.theta / (1 - r.theta), 0.5 * r.theta);
  if (r.N != 3 * p.n() + p.m()) bad.push_back("N = 3n+m violated");
  ge("C_Hf", r.C_Hf, 10.0);
  ge("C_q", r.C_q, nQ * n + nc * sn);
  le("omega", om, std::min({tol / (2 * n), tol * tol / (4 * r.C_q + n) / 16, 1.0}));
  if (!(om > 0)) bad.push_back("omega > 0 violated");
  ge("C_lambda", r.C_lambda, (nA * sn + nb) / om);
  ge("C_dmu", r.C_dmu, (om + nQ) * sn + nc + nA * r.C_lambda);
  const DenseMatrix H = p.Q() + om * DenseMatrix::Identity(p.n(), p.n()) +
                        p.A().transpose() * p.A() / om;
  const DenseVector g = p.c() - p.A().transpose() * p.b() / om;
  ge("tau_A", r.tau_A, std::max(norm2_matrix(H) / 4, 4 * g.norm()));
  const double den = std::max(nA, r.C_q);
  const double tE = den > 0 ? tol * tol * om / (48 * n * den) : r.tau_A;
  le("tau_E", r.tau_E, std::max(std::min(tE, r.sigma * r.tau_A), fl.tau_E));
  if (!(r.tau_E < r.tau_A)) bad.push_back("tau_E < tau_A violated");
  ge("C_mu", r.C_mu, std::sqrt(2 * n) * (r.C_dmu + (1 + r.theta) * r.tau_A));
  ge("C_z", r.C_z, std::sqrt(n + r.C_lambda * r.C_lambda + r.C_mu * r.C_mu) + 0.1);
  le("c_gap", r.c_gap, std::max((1 - r.theta) / (1 + r.C_z) * r.sigma * r.tau_E / 2, fl.c_gap));
  if (!(r.c_gap > 0)) bad.push_back("c_gap > 0 violated");
  ge("C_DF", r.C_DF, nQ + 2 * om + 2 * nA + 4 + 4 * r.C_z);
  ge("C_DFinv", r.C_DFinv, 1 / r.c_gap * std::max(1 / om, r.C_z / r.c_gap));
  ge("kappa_DF", r.kappa_DF, r.C_DF * r.C_DFinv);
  ge("C_dF", r.C_dF, r.C_DF);
  ge("C_dDF", r.C_dDF, 2.0);
  ge("C_ddz", r.C_ddz, 2 * r.kappa_DF);
  ge("C_nu", r.C_nu,
     std::max(2 * r.C_ddz * (r.C_dF * r.C_DFinv + (2 / om) * r.C_dDF * r.C_z),
              1 + r.C_DFinv * r.C_dF));
  const double nu_floor = fl.nu_rel * r.C_z;
  le("nu_2", r.nu_2,
     std::max(std::min({0.1, r.c_gap / r.C_nu, om / (2 * r.C_dDF * r.kappa_DF),
                        r.theta * r.sigma * r.tau_E / (2 * r.C_nu * r.C_dF)}),
              nu_floor));
  le("nu_1", r.nu_1, std::max(r.nu_2 / r.C_nu, nu_floor));
  le("nu_0", r.nu_0,
     std::max(std::min(r.nu_1 / r.C_nu, den > 0 ? tol / (2 * den) : r.nu_1), nu_floor));
  le("rho", r.rho,
     r.nu_2 / (4 * std::sqrt(static_cast<double>(r.N)) * (nA / om + 1 + 8 * r.tau_A)));
  if (r.K != std::max(1, static_cast<int>(std::ceil(std::log2(1 + std::log2(r.C_Hf / r.rho))))))
    bad.push_back("K closed form violated");
  if (r.M != std::max(1, static_cast<int>(std::ceil((std::log(r.tau_E) - std::log(r.tau_A)) /
                                                    std::log(r.sigma)))))
    bad.push_back("M closed form violated");
  ge("C_Df", r.C_Df, (1 / r.tau_A) * (om + nQ + (1 / om) * (nA * nA + nb)) + 4 * sn);
  ge("C_F", r.C_F, r.C_DF * r.C_z + nc + nb + 2 * sn * r.tau_A);
  ge("C_x", r.C_x, sn);
  ge("C_dz", r.C_dz, r.C_DFinv * r.C_F);
  for (const auto& [name, v] : param_list(r))
    if (!std::isfinite(v) || !(v > 0)) bad.push_back(name + " not finite and positive");
  return bad;
}

// Shortest round-trip decimal form.
inline std::string format_real(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

// One "name = value" line per parameter.
inline std::string dump_params(const MethodParams& r) {
  std::string out;
  for (const auto& [name, v] : param_list(r)) out += name + " = " + format_real(v) + "\n";
  return out;
}

// FNV-1a over the dump, as 16 hex digits.
inline std::string params_digest(const MethodParams& r) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : dump_params(r)) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  static const char* hex = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, h >>= 4) s[i] = hex[h & 0xf];
  return s;
}

}  // namespace stableqp
