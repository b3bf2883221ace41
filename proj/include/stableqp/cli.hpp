#pragma once

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "stableqp/errors.hpp"
#include "stableqp/oracle.hpp"
#include "stableqp/params.hpp"
#include "stableqp/problem.hpp"
#include "stableqp/solver.hpp"

namespace stableqp {

enum class ProblemKind { box, standard };

// Problem file, format version 1:
//
//   # comment
//   format_version: 1
//   kind: box            (or standard)
//   n: 2
//   m: 1
//   tol: 1e-3
//   pi: auto             (standard only; a positive real or auto)
//   Q: [2 0
//       0 2]
//   c: [0 0]
//   A: [1 1]
//   b: [1]
//
// Arrays are row-major, whitespace separated and may span lines.
struct ProblemFile {
  int format_version = 1;
  ProblemKind kind = ProblemKind::box;
  int n = 0, m = 0;
  DenseMatrix Q;
  DenseVector c;
  DenseMatrix A;
  DenseVector b;
  double tol = 0;
  std::optional<double> pi;
  bool pi_auto = false;
};

namespace detail {

struct Cursor {
  std::string_view text;
  std::size_t pos = 0, line = 1, col = 1;

  bool eof() const { return pos >= text.size(); }
  char peek() const { return text[pos]; }
  void advance() {
    if (text[pos] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
    ++pos;
  }
  [[noreturn]] void fail(const std::string& what) const { throw ParseError(what, line, col); }

  // Skips blanks and comments; stops at newline unless `lines` is set.
  void skip(bool lines) {
    while (!eof()) {
      char ch = peek();
      if (ch == '#') {
        while (!eof() && peek() != '\n') advance();
      } else if (ch == ' ' || ch == '\t' || ch == '\r' || (lines && ch == '\n')) {
        advance();
      } else {
        break;
      }
    }
  }

  std::string word() {
    std::size_t start = pos;
    while (!eof()) {
      char ch = peek();
      if (std::isspace(static_cast<unsigned char>(ch)) || ch == '#' || ch == ']' || ch == '[') break;
      advance();
    }
    return std::string(text.substr(start, pos - start));
  }
};

inline double parse_real(const std::string& tok, const Cursor& at) {
  double v = 0;
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  if (!tok.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (tok.empty() || ec != std::errc() || ptr != last) at.fail("invalid number '" + tok + "'");
  if (!std::isfinite(v)) at.fail("non-finite number '" + tok + "'");
  return v;
}

inline long parse_count(const std::string& tok, const Cursor& at) {
  long v = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (tok.empty() || ec != std::errc() || ptr != tok.data() + tok.size() || v < 0)
    at.fail("expected a non-negative integer, got '" + tok + "'");
  return v;
}

}  // namespace detail

inline ProblemFile parse_problem(std::string_view text) {
  detail::Cursor cur{text};
  std::map<std::string, std::string> scalars;
  std::map<std::string, std::vector<double>> arrays;
  std::map<std::string, std::pair<std::size_t, std::size_t>> where;
  static const std::vector<std::string> scalar_keys{"format_version", "kind", "n", "m", "tol", "pi"};
  static const std::vector<std::string> array_keys{"Q", "c", "A", "b"};
  auto is = [](const std::vector<std::string>& v, const std::string& k) {
    return std::find(v.begin(), v.end(), k) != v.end();
  };

  while (true) {
    cur.skip(true);
    if (cur.eof()) break;
    const std::size_t kl = cur.line, kc = cur.col;
    std::string key;
    while (!cur.eof() && (std::isalnum(static_cast<unsigned char>(cur.peek())) || cur.peek() == '_')) {
      key += cur.peek();
      cur.advance();
    }
    if (key.empty()) cur.fail("expected a key");
    if (cur.eof() || cur.peek() != ':') cur.fail("expected ':' after key '" + key + "'");
    cur.advance();
    if (!is(scalar_keys, key) && !is(array_keys, key))
      throw ParseError("unknown key '" + key + "'", kl, kc);
    if (where.count(key)) throw ParseError("duplicate key '" + key + "'", kl, kc);
    where[key] = {kl, kc};
    cur.skip(false);
    if (is(array_keys, key)) {
      if (cur.eof() || cur.peek() != '[') cur.fail("expected '[' to open array " + key);
      cur.advance();
      std::vector<double> vals;
      while (true) {
        cur.skip(true);
        if (cur.eof()) cur.fail("unterminated array " + key);
        if (cur.peek() == ']') {
          cur.advance();
          break;
        }
        detail::Cursor at = cur;
        std::string tok = cur.word();
        if (tok.empty()) cur.fail("unexpected character in array " + key);
        vals.push_back(detail::parse_real(tok, at));
      }
      arrays[key] = std::move(vals);
    } else {
      std::string tok = cur.word();
      if (tok.empty()) cur.fail("missing value for " + key);
      scalars[key] = tok;
    }
    cur.skip(false);
    if (!cur.eof() && cur.peek() != '\n') cur.fail("trailing characters after " + key);
  }

  auto end_pos = [&]() { return std::make_pair(cur.line, cur.col); };
  for (const auto& k : {"format_version", "kind", "n", "m", "tol", "Q", "c", "A", "b"}) {
    if (!where.count(k)) {
      auto [l, c] = end_pos();
      throw ParseError(std::string("missing key '") + k + "'", l, c);
    }
  }
  auto at = [&](const std::string& k) {
    detail::Cursor c{text};
    c.line = where[k].first;
    c.col = where[k].second;
    return c;
  };

  ProblemFile pf;
  pf.format_version = static_cast<int>(detail::parse_count(scalars["format_version"], at("format_version")));
  if (pf.format_version != 1) at("format_version").fail("unsupported format_version");
  const std::string& kind = scalars["kind"];
  if (kind == "box") pf.kind = ProblemKind::box;
  else if (kind == "standard") pf.kind = ProblemKind::standard;
  else at("kind").fail("kind must be box or standard");
  const long n = detail::parse_count(scalars["n"], at("n"));
  const long m = detail::parse_count(scalars["m"], at("m"));
  if (n < 1) at("n").fail("n must be >= 1");
  if (n > 100000 || m > 100000) at("n").fail("dimension too large");
  pf.n = static_cast<int>(n);
  pf.m = static_cast<int>(m);
  pf.tol = detail::parse_real(scalars["tol"], at("tol"));
  if (!(pf.tol > 0)) at("tol").fail("tol must be > 0");
  if (scalars.count("pi")) {
    if (pf.kind != ProblemKind::standard) at("pi").fail("pi is only allowed for kind standard");
    if (scalars["pi"] == "auto") {
      pf.pi_auto = true;
    } else {
      pf.pi = detail::parse_real(scalars["pi"], at("pi"));
      if (!(*pf.pi > 0)) at("pi").fail("pi must be > 0");
    }
  }

  auto expect = [&](const char* k, std::size_t len) {
    if (arrays[k].size() != len)
      throw DimensionError(std::string(k) + " has " + std::to_string(arrays[k].size()) +
                           " entries, expected " + std::to_string(len));
  };
  expect("Q", static_cast<std::size_t>(n * n));
  expect("c", static_cast<std::size_t>(n));
  expect("A", static_cast<std::size_t>(m * n));
  expect("b", static_cast<std::size_t>(m));
  pf.Q = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      arrays["Q"].data(), n, n);
  pf.c = Eigen::Map<const DenseVector>(arrays["c"].data(), n);
  pf.A = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      arrays["A"].data(), m, n);
  pf.b = Eigen::Map<const DenseVector>(arrays["b"].data(), m);
  return pf;
}

inline std::string serialize_problem(const ProblemFile& pf) {
  std::string s;
  s += "format_version: " + std::to_string(pf.format_version) + "\n";
  s += std::string("kind: ") + (pf.kind == ProblemKind::box ? "box" : "standard") + "\n";
  s += "n: " + std::to_string(pf.n) + "\n";
  s += "m: " + std::to_string(pf.m) + "\n";
  s += "tol: " + format_real(pf.tol) + "\n";
  if (pf.pi_auto) s += "pi: auto\n";
  else if (pf.pi) s += "pi: " + format_real(*pf.pi) + "\n";
  auto matrix = [&](const char* key, const DenseMatrix& M) {
    s += std::string(key) + ": [";
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
      if (i > 0) s += "\n    ";
      for (Eigen::Index j = 0; j < M.cols(); ++j) s += (j ? " " : "") + format_real(M(i, j));
    }
    s += "]\n";
  };
  auto vector = [&](const char* key, const DenseVector& v) {
    s += std::string(key) + ": [";
    for (Eigen::Index i = 0; i < v.size(); ++i) s += (i ? " " : "") + format_real(v[i]);
    s += "]\n";
  };
  matrix("Q", pf.Q);
  vector("c", pf.c);
  matrix("A", pf.A);
  vector("b", pf.b);
  return s;
}

inline BoxQP to_box(const ProblemFile& pf) { return BoxQP(pf.Q, pf.c, pf.A, pf.b, pf.tol); }
inline StandardQP to_standard(const ProblemFile& pf) { return StandardQP(pf.Q, pf.c, pf.A, pf.b); }

namespace detail {

inline std::string trace_header() {
  return "k,tau,step_kind,residual_comp,residual_eq,cond_DF,step_norm,z_norm,comp_gap,"
         "min_comp_product,interior_margin,scalar_product";
}

inline std::string trace_row(const TraceEntry& e) {
  std::string s = std::to_string(e.k) + "," + format_real(e.tau) + "," + to_string(e.step_kind);
  for (double v : {e.residual_comp, e.residual_eq, e.cond_DF, e.step_norm, e.z_norm, e.comp_gap,
                   e.min_comp_product, e.interior_margin, e.scalar_product})
    s += "," + (std::isnan(v) ? std::string("nan") : format_real(v));
  return s;
}

inline nlohmann::json to_json(const DenseVector& v) {
  return nlohmann::json(std::vector<double>(v.data(), v.data() + v.size()));
}

// Checks a box-form result against the oracle; returns the comparison block.
inline nlohmann::json oracle_check(const BoxQP& p, const DenseVector& x, bool& ok) {
  const OracleSolution ref = oracle_solve_boxqp(p);
  const double boRes = oracle_boRes(p);
  const double q = eval_q(p, x), res = eval_residual(p, x);
  const bool interior = (x.array().abs() < 1.0).all();
  const bool obj_ok = q <= ref.objective + p.tol();
  const bool res_ok = res <= boRes + p.tol();
  ok = interior && obj_ok && res_ok;
  return {{"objective", ref.objective}, {"boRes", boRes},
          {"objective_gap", q - ref.objective}, {"residual_gap", res - boRes},
          {"interior", interior}, {"objective_ok", obj_ok}, {"residual_ok", res_ok},
          {"pass", ok}};
}

}  // namespace detail

// Command-line driver. `args` excludes the program name.
inline int run(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Short-step interior-point solver for box-constrained convex QPs", "stableqp_cli"};
  app.require_subcommand(1);
  std::string file, mode = "stable", pmode = "practical", trace_path, pi_arg;
  std::optional<double> tol;
  bool check_oracle = false;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("file", file, "problem file")->required();
    sub->add_option("--tol", tol, "override the accuracy from the file");
    sub->add_option("--params", pmode, "parameter cascade")->check(CLI::IsMember({"strict", "practical"}));
  };
  auto add_solve = [&](CLI::App* sub) {
    add_common(sub);
    sub->add_option("--mode", mode, "loop variant")->check(CLI::IsMember({"stable", "fast"}));
    sub->add_option("--trace", trace_path, "write the step trace as CSV");
    sub->add_flag("--check-oracle", check_oracle, "compare against the brute-force oracle");
  };
  CLI::App* solve_cmd = app.add_subcommand("solve", "solve a box problem");
  add_solve(solve_cmd);
  CLI::App* std_cmd = app.add_subcommand("solve-standard", "solve a standard-form problem");
  add_solve(std_cmd);
  std_cmd->add_option("--pi", pi_arg, "box scaling: a positive real or auto");
  CLI::App* params_cmd = app.add_subcommand("params", "print the method parameters");
  add_common(params_cmd);
  params_cmd->add_option("--pi", pi_arg, "box scaling for standard-form files");
  CLI::App* oracle_cmd = app.add_subcommand("oracle", "brute-force reference solution");
  add_common(oracle_cmd);
  oracle_cmd->add_option("--pi", pi_arg, "box scaling for standard-form files");
  CLI::App* factor_cmd = app.add_subcommand("factor", "print the problem factor L");
  add_common(factor_cmd);
  factor_cmd->add_option("--pi", pi_arg, "box scaling for standard-form files");

  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return 0;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return 2;
  }

  ProblemFile pf;
  std::optional<double> pi;
  bool pi_auto = false;
  try {
    std::ifstream in(file, std::ios::binary);
    if (!in) {
      err << "error: cannot read " << file << "\n";
      return 2;
    }
    std::stringstream buf;
    buf << in.rdbuf();
    pf = parse_problem(buf.str());
    if (tol) {
      if (!(*tol > 0) || !std::isfinite(*tol)) throw InvalidProblem("--tol must be > 0");
      pf.tol = *tol;
    }
    pi = pf.pi;
    pi_auto = pf.pi_auto;
    if (!pi_arg.empty()) {
      if (pi_arg == "auto") {
        pi_auto = true;
        pi.reset();
      } else {
        std::size_t used = 0;
        double v = std::stod(pi_arg, &used);
        if (used != pi_arg.size() || !(v > 0) || !std::isfinite(v))
          throw InvalidProblem("--pi must be a positive real or auto");
        pi = v;
        pi_auto = false;
      }
    }
    const bool wants_standard = std_cmd->parsed();
    if (solve_cmd->parsed() && pf.kind != ProblemKind::box)
      throw InvalidProblem("solve expects kind box; use solve-standard");
    if (wants_standard && pf.kind != ProblemKind::standard)
      throw InvalidProblem("solve-standard expects kind standard");
  } catch (const std::invalid_argument&) {
    err << "error: --pi must be a positive real or auto\n";
    return 2;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }

  // Box problem the non-solve subcommands act on.
  auto box_of = [&]() -> BoxQP {
    if (pf.kind == ProblemKind::box) return to_box(pf);
    if (!pi) throw InvalidProblem("standard-form file needs a numeric pi for this subcommand");
    return transform_standard(to_standard(pf), *pi, pf.tol).box;
  };

  SolverOptions opt;
  opt.mode = mode == "fast" ? SolverMode::fast : SolverMode::stable;
  opt.params = pmode == "strict" ? ParamsMode::strict : ParamsMode::practical;
  std::ofstream trace;
  if (!trace_path.empty()) {
    trace.open(trace_path, std::ios::binary);
    if (!trace) {
      err << "error: cannot write " << trace_path << "\n";
      return 2;
    }
    trace << detail::trace_header() << "\n";
    opt.on_step = [&](const TraceEntry& e) { trace << detail::trace_row(e) << "\n"; };
    opt.track_conditioning = true;
  }

  // Input validation happens while building problems, so separate it from
  // solver failures.
  std::optional<BoxQP> box;
  std::optional<StandardQP> sp;
  try {
    if (std_cmd->parsed()) sp = to_standard(pf);
    else box = box_of();
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (factor_cmd->parsed()) {
      out << format_real(problem_factor(*box)) << "\n";
      return 0;
    }
    if (params_cmd->parsed()) {
      out << dump_params(params_for(*box, opt));
      return 0;
    }
    if (oracle_cmd->parsed()) {
      if (box->n() > oracle_max_n) {
        err << "error: oracle limited to n <= " << oracle_max_n << "\n";
        return 2;
      }
      const OracleSolution s = oracle_solve_boxqp(*box);
      nlohmann::json j{{"x", detail::to_json(s.x)},
                       {"objective", s.objective},
                       {"feas_residual", s.residual},
                       {"lower_bound", s.lower_bound},
                       {"boRes", oracle_boRes(*box)}};
      if (pf.kind == ProblemKind::standard) {
        const DenseVector xt = 0.5 * *pi * (s.x + DenseVector::Ones(s.x.size()));
        j["x_standard"] = detail::to_json(xt);
        j["objective_standard"] = eval_q_standard(to_standard(pf), xt);
      }
      out << j.dump(2) << "\n";
      return 0;
    }

    if (check_oracle) {
      const auto n = box ? box->n() : sp->n();
      if (n > oracle_max_n) {
        err << "error: --check-oracle limited to n <= " << oracle_max_n << "\n";
        return 2;
      }
    }

    nlohmann::json j;
    bool ok = true;
    const SolveReport* rep = nullptr;
    SolveReport box_rep;
    StandardReport std_rep;
    if (box) {
      box_rep = solve(*box, opt);
      rep = &box_rep;
      j["x"] = detail::to_json(rep->x);
      j["objective"] = rep->objective;
      j["feas_residual"] = rep->feas_residual;
    } else {
      if (!pi && !pi_auto) throw InvalidProblem("solve-standard needs --pi or a pi entry");
      std_rep = solve_standard(*sp, pi_auto ? std::nullopt : pi, pf.tol, opt);
      rep = &std_rep.box;
      j["x"] = detail::to_json(std_rep.x);
      j["objective"] = std_rep.objective;
      j["feas_residual"] = std_rep.feas_residual;
      j["pi"] = std_rep.pi;
      j["pi_trials"] = std_rep.trials;
    }
    j["tau_final"] = rep->tau_final;
    j["iterations"] = {{"primal", rep->iterations_primal},
                       {"cycles", rep->cycles},
                       {"linear_solves", rep->loop_linear_solves}};
    j["mode"] = to_string(rep->mode);
    j["params"] = to_string(rep->params_mode);
    j["params_digest"] = params_digest(rep->params);
    if (!rep->violations.empty()) j["violations"] = rep->violations;
    if (check_oracle) {
      const BoxQP checked = box ? *box : transform_standard(*sp, std_rep.pi, pf.tol).box;
      j["oracle"] = detail::oracle_check(checked, rep->x, ok);
    }
    out << j.dump(2) << "\n";
    return ok ? 0 : 1;
  } catch (const InvalidProblem& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    err << "solver error: " << e.what() << "\n";
    return 1;
  }
}

inline int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
  return run(std::vector<std::string>(argv + 1, argv + argc), out, err);
}

}  // namespace stableqp
