#pragma once

// Command implementations behind the mmlindley tool. Each command returns an
// exit code: 0 success, 1 config error, 2 instability, 3 solver failure,
// 4 oracle-comparison failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "mmlindley/config.hpp"
#include "mmlindley/model1.hpp"
#include "mmlindley/model2.hpp"
#include "mmlindley/simulate.hpp"

namespace mmlindley::cli {

enum ExitCode : int { ok = 0, config_error = 1, unstable = 2, solver_failure = 3, comparison_failure = 4 };

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<double> tol;
  std::string out_dir = ".";
  std::vector<double> u_grid{1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 4.5, 5.0};
  std::vector<double> p_grid{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  std::optional<std::uint64_t> n_steps;
  std::optional<int> replications;
  bool corrupt_c = false;  // test hook: perturb the solved coefficients before reporting
};

/// %.10g formatting used for every float written to CSV.
inline std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

inline std::vector<double> to_vec(const RVector& v) { return {v.data(), v.data() + v.size()}; }

inline json complex_json(cplx z) { return json::array({z.real(), z.imag()}); }

struct Check {
  std::string name;
  double value;
  double tolerance;
  bool pass() const { return value <= tolerance; }
};

/// Solved instance, reduced to what reports and comparisons need.
struct Analytic {
  ModelKind model{};
  RVector pi;
  RVector mean;
  std::function<CVector(double)> phi;
  json stability;
  json solution;
  json extra;  // model-specific outputs (moments, decay profile)
  std::vector<Check> checks;
  std::vector<std::string> warnings;
};

namespace detail {

inline json stability_json(const StabilityReport& st) {
  json j{{"stable", st.stable}, {"message", st.message}};
  if (std::isfinite(st.rho)) j["rho"] = st.rho;
  if (st.probe_frequency) j["probe_frequency"] = *st.probe_frequency;
  if (st.closed_form) j["closed_form_P_Y_le_0"] = *st.closed_form;
  return j;
}

inline json zeros_json(const ZeroSet& z) {
  json arr = json::array();
  for (std::size_t k = 0; k < z.zeros.size(); ++k)
    arr.push_back({{"root", complex_json(z.zeros[k])}, {"residual", z.residuals[k]}});
  return arr;
}

inline double max_abs_diff(const CVector& a, const RVector& b) { return (a - b.cast<cplx>()).cwiseAbs().maxCoeff(); }

inline Analytic solve_model1_instance(const InstanceConfig& cfg, const Options& opt) {
  const Model1Spec spec = cfg.model1_spec();
  const StabilityReport st = check_stability_model1(spec);
  if (!st.stable) throw UnstableError(st.message);
  Model1Options mo;
  mo.search_bound = cfg.solver.search_bound;
  auto sol = std::make_shared<Model1Solution>(assemble_and_solve_coefficients(spec, mo));
  if (opt.corrupt_c)
    for (auto& c : sol->c) c.tail(c.size() - 1) *= 1.5;
  const double tol = opt.tol.value_or(cfg.solver.tol);

  Analytic out;
  out.model = ModelKind::model1;
  out.pi = spec.chain.pi();
  out.stability = stability_json(st);
  json c = json::array();
  for (const auto& cj : sol->c) c.push_back(to_vec(cj));
  out.solution = {{"delta_roots", zeros_json(sol->delta_roots)},
                  {"coefficients", c},
                  {"condition", sol->condition},
                  {"functional_residual", sol->b0_residual},
                  {"assembly_tolerance", sol->truncation_tolerance},
                  {"evaluation_tolerance", tol}};
  const MeanWorkload mw = mean_workload(*sol);
  out.mean = mw.mean;
  out.phi = [sol, tol](double s) { return sol->phi(s, tol); };
  out.extra = {{"mean_numerical", to_vec(mw.numerical)}};
  out.checks.push_back({"phi(0) = pi", max_abs_diff(sol->phi(0.0, 1e-11), out.pi), 1e-8});
  out.checks.push_back({"functional-equation residual on the verification grid", sol->b0_residual, 1e-6});
  out.checks.push_back({"mean vs central difference (relative)", mw.relative_gap, 1e-4});
  out.warnings = sol->warnings;
  return out;
}

inline Analytic solve_model1_special_instance(const InstanceConfig& cfg, const Options& opt) {
  auto sol = std::make_shared<Model1SpecialSolution>(solve_model1_special(cfg.model1_special_spec()));
  if (opt.corrupt_c)
    for (auto& c : sol->c) c.tail(c.size() - 1) *= 1.5;
  Analytic out;
  out.model = ModelKind::model1_special;
  out.pi = sol->spec.chain.pi();
  out.stability = {{"stable", true}, {"message", "P(S < A) > 0 observed by probe"}};
  if (sol->probe_frequency) out.stability["probe_frequency"] = *sol->probe_frequency;
  json c = json::array();
  for (const auto& cj : sol->c) c.push_back(to_vec(cj));
  out.solution = {{"coefficients", c}, {"condition", sol->condition}};
  out.mean = sol->mean();
  out.phi = [sol](double s) { return sol->phi(s); };
  out.checks.push_back({"phi(0) = pi", max_abs_diff(sol->phi(0.0), out.pi), 1e-10});
  out.warnings = sol->warnings;
  return out;
}

inline Analytic solve_model2_instance(const InstanceConfig& cfg, const Options& opt) {
  const Model2Spec spec = cfg.model2_spec();
  const StabilityReport st = check_stability_model2(spec);
  if (!st.stable) throw UnstableError(st.message);
  Model2Options mo;
  mo.search_bound = cfg.solver.search_bound;
  auto sol = std::make_shared<Model2Solution>(assemble_unknowns(spec, mo));
  if (opt.corrupt_c) {
    sol->k1 *= 1.5;
    sol->k2 *= 1.5;
  }
  Analytic out;
  out.model = ModelKind::model2;
  out.pi = spec.chain.pi();
  out.stability = stability_json(st);
  out.solution = {{"path", to_string(sol->path)},
                  {"roots", zeros_json(sol->roots)},
                  {"phi_at_lambda", json::array()},
                  {"phi_at_mu", json::array()},
                  {"k1", to_vec(sol->k1)},
                  {"k2", to_vec(sol->k2)},
                  {"condition", sol->condition}};
  for (Eigen::Index i = 0; i < sol->phi_at_lambda.rows(); ++i) {
    out.solution["phi_at_lambda"].push_back(to_vec(sol->phi_at_lambda.row(i).transpose()));
    out.solution["phi_at_mu"].push_back(to_vec(sol->phi_at_mu.row(i).transpose()));
  }
  const Model2Moments mm = moments(*sol, cfg.solver.r_max);
  out.mean = mm.m.size() > 1 ? mm.m[1] : RVector::Zero(out.pi.size());
  out.phi = [sol](double s) { return sol->phi(s); };
  json mj = json::array();
  for (const auto& v : mm.m) mj.push_back(to_vec(v));
  out.extra = {{"moments", mj}, {"moments_nonnegative", mm.nonnegative}, {"jensen", mm.jensen}};

  // Functional-equation residual on the same 20-point grid as model I.
  double res = 0.0;
  for (cplx s : model1_verification_grid()) res = std::max(res, sol->functional_residual(s));
  out.checks.push_back({"phi(0) = pi", max_abs_diff(sol->phi(0.0), out.pi), 1e-10});
  out.checks.push_back({"functional-equation residual on the verification grid", res, 1e-8});
  if (spec.p > 0.0) {
    try {
      const DecayProfile dp = decay_profile(*sol, cfg.solver.search_bound);
      json C = json::array();
      for (Eigen::Index j = 0; j < dp.C.size(); ++j) C.push_back(complex_json(dp.C(j)));
      out.extra["decay"] = {{"R", dp.R}, {"C", C}, {"oscillatory", dp.oscillatory}, {"warnings", dp.warnings}};
    } catch (const Error& e) {
      out.extra["decay"] = {{"error", e.what()}};
    }
  }
  out.warnings = sol->warnings;
  return out;
}

}  // namespace detail

inline Analytic solve_instance(const InstanceConfig& cfg, const Options& opt) {
  switch (cfg.model) {
    case ModelKind::model1: return detail::solve_model1_instance(cfg, opt);
    case ModelKind::model1_special: return detail::solve_model1_special_instance(cfg, opt);
    case ModelKind::model2: return detail::solve_model2_instance(cfg, opt);
  }
  throw InvalidArgument("unknown model");
}

inline SimEstimate simulate_instance(const InstanceConfig& cfg, const Options& opt) {
  SimConfig sc = cfg.sim;
  if (opt.seed) sc.seed = *opt.seed;
  if (opt.n_steps) sc.n_steps = *opt.n_steps;
  if (opt.replications) sc.replications = *opt.replications;
  if (sc.burn_in >= sc.n_steps) sc.burn_in = sc.n_steps / 10;
  switch (cfg.model) {
    case ModelKind::model1: return simulate_model1(cfg.model1_spec(), sc);
    case ModelKind::model1_special: return simulate_model1_special(cfg.model1_special_spec(), sc);
    case ModelKind::model2: return simulate_model2(cfg.model2_spec(), sc);
  }
  throw InvalidArgument("unknown model");
}

inline json analytic_report(const InstanceConfig& cfg, const Analytic& a) {
  json r;
  r["model"] = to_string(cfg.model);
  r["label"] = cfg.label;
  r["states"] = cfg.size();
  r["stability"] = a.stability;
  r["solution"] = a.solution;
  json outputs;
  outputs["pi"] = to_vec(a.pi);
  outputs["mean"] = to_vec(a.mean);
  outputs["mean_total"] = a.mean.sum();
  json tr = json::object();
  for (double s : cfg.sim.probes) tr[fmt(s)] = to_vec(a.phi(s).real());
  outputs["transform"] = tr;
  for (auto it = a.extra.begin(); it != a.extra.end(); ++it) outputs[it.key()] = it.value();
  r["outputs"] = outputs;
  json checks = json::array();
  for (const auto& c : a.checks)
    checks.push_back({{"name", c.name}, {"value", c.value}, {"tolerance", c.tolerance}, {"pass", c.pass()}});
  r["checks"] = checks;
  r["warnings"] = a.warnings;
  return r;
}

/// Indented plain-text rendering of a report document.
inline void render_text(const json& j, std::ostream& os, int indent = 0) {
  const std::string pad(static_cast<std::size_t>(indent), ' ');
  for (auto it = j.begin(); it != j.end(); ++it) {
    const json& v = it.value();
    const std::string key = j.is_object() ? it.key() : "-";
    const bool flat_array = v.is_array() && std::all_of(v.begin(), v.end(), [](const json& e) { return e.is_primitive(); });
    if (v.is_primitive() || flat_array) {
      os << pad << key << ": " << (v.is_string() ? v.get<std::string>() : v.dump()) << "\n";
    } else {
      os << pad << key << ":\n";
      render_text(v, os, indent + 2);
    }
  }
}

inline void write_file(const std::filesystem::path& p, const std::string& content) {
  std::filesystem::create_directories(p.parent_path().empty() ? std::filesystem::path(".") : p.parent_path());
  std::ofstream f(p, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + p.string());
  f << content;
}

/// Runs `body`, translating library exceptions into exit codes.
inline int guarded(std::ostream& err, const std::function<int()>& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return config_error;
  } catch (const UnstableError& e) {
    err << "unstable: " << e.what() << "\n";
    return unstable;
  } catch (const InvalidArgument& e) {
    err << "invalid instance: " << e.what() << "\n";
    return config_error;
  } catch (const std::exception& e) {
    err << "solver failure: " << e.what() << "\n";
    return solver_failure;
  }
}

inline int cmd_solve(const Options& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const InstanceConfig cfg = load_config(opt.config);
    const Analytic a = solve_instance(cfg, opt);
    const json report = analytic_report(cfg, a);
    std::ostringstream text;
    render_text(report, text);
    const std::filesystem::path dir(opt.out_dir);
    write_file(dir / "report.json", report.dump(2) + "\n");
    write_file(dir / "report.txt", text.str());
    out << text.str();
    bool all = true;
    for (const auto& c : a.checks) all = all && c.pass();
    if (!all) err << "one or more solution checks failed\n";
    return all ? ok : solver_failure;
  });
}

struct ComparisonRow {
  std::string quantity;
  std::size_t state;
  double analytic, simulated, stderr_, z;
  bool pass;
};

inline std::vector<ComparisonRow> compare_rows(const Analytic& a, const SimEstimate& e) {
  std::vector<ComparisonRow> rows;
  auto add = [&rows](const std::string& q, std::size_t i, double an, double sim, double se) {
    const double diff = sim - an;
    const double z = se > 0.0 ? diff / se : (diff == 0.0 ? 0.0 : std::copysign(INFINITY, diff));
    rows.push_back({q, i + 1, an, sim, se, z, std::abs(z) <= 3.0});
  };
  for (Eigen::Index i = 0; i < a.mean.size(); ++i)
    add("mean", static_cast<std::size_t>(i), a.mean(i), e.mean_by_state.value(i), e.mean_by_state.stderr_(i));
  for (const auto& [s, est] : e.transform_by_state) {
    const CVector ph = a.phi(s);
    for (Eigen::Index i = 0; i < ph.size(); ++i)
      add("phi@" + fmt(s), static_cast<std::size_t>(i), ph(i).real(), est.value(i), est.stderr_(i));
  }
  return rows;
}

inline std::string comparison_csv(const std::vector<ComparisonRow>& rows) {
  std::ostringstream os;
  os << "quantity,state,analytic,simulated,stderr,z_score,pass\n";
  for (const auto& r : rows)
    os << r.quantity << ',' << r.state << ',' << fmt(r.analytic) << ',' << fmt(r.simulated) << ',' << fmt(r.stderr_) << ','
       << fmt(r.z) << ',' << (r.pass ? "true" : "false") << '\n';
  return os.str();
}

inline int cmd_compare(const Options& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const InstanceConfig cfg = load_config(opt.config);
    const Analytic a = solve_instance(cfg, opt);
    const SimEstimate e = simulate_instance(cfg, opt);
    const auto rows = compare_rows(a, e);
    const std::string csv = comparison_csv(rows);
    write_file(std::filesystem::path(opt.out_dir) / "compare.csv", csv);
    out << csv;
    const bool all = std::all_of(rows.begin(), rows.end(), [](const ComparisonRow& r) { return r.pass; });
    if (!all) err << "oracle comparison failed (|z| > 3 on at least one row)\n";
    return all ? ok : comparison_failure;
  });
}

inline int cmd_simulate(const Options& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const InstanceConfig cfg = load_config(opt.config);
    const SimEstimate e = simulate_instance(cfg, opt);
    json r;
    r["model"] = to_string(cfg.model);
    r["label"] = cfg.label;
    r["samples_per_replication"] = e.samples_per_replication;
    r["replications"] = opt.replications.value_or(cfg.sim.replications);
    r["seed"] = opt.seed.value_or(cfg.sim.seed);
    r["visit_frequencies"] = {{"value", to_vec(e.visit_frequencies.value)}, {"stderr", to_vec(e.visit_frequencies.stderr_)}};
    r["mean_by_state"] = {{"value", to_vec(e.mean_by_state.value)}, {"stderr", to_vec(e.mean_by_state.stderr_)}};
    json tr = json::object();
    for (const auto& [s, est] : e.transform_by_state) tr[fmt(s)] = {{"value", to_vec(est.value)}, {"stderr", to_vec(est.stderr_)}};
    r["transform_by_state"] = tr;
    std::ostringstream text;
    render_text(r, text);
    write_file(std::filesystem::path(opt.out_dir) / "simulate.json", r.dump(2) + "\n");
    out << text.str();
    return ok;
  });
}

namespace detail {

// Evaluates cells concurrently; results come back in cell order.
template <class Fn>
std::vector<std::optional<double>> parallel_cells(std::size_t count, Fn&& fn, std::vector<std::string>& errors) {
  std::vector<std::optional<double>> values(count);
  errors.assign(count, {});
  const std::size_t threads = std::max<std::size_t>(1, std::min<std::size_t>(count, std::thread::hardware_concurrency()));
  auto worker = [&](std::size_t first) {
    for (std::size_t k = first; k < count; k += threads) {
      try {
        values[k] = fn(k);
      } catch (const std::exception& e) {
        errors[k] = e.what();
      }
    }
  };
  if (threads == 1) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker, t);
    for (auto& t : pool) t.join();
  }
  return values;
}

inline std::string cell(const std::optional<double>& v) { return v ? fmt(*v) : "nan"; }

}  // namespace detail

/// P with every state moving to the next one, and P with independent uniform rows.
inline RMatrix cyclic_shift(std::size_t n) {
  RMatrix P = RMatrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) P(i, (i + 1) % n) = 1.0;
  return P;
}
inline RMatrix uniform_rows(std::size_t n) {
  return RMatrix::Constant(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n), 1.0 / static_cast<double>(n));
}

inline double model1_total_mean(InstanceConfig cfg, const RMatrix& P, double u) {
  cfg.P = P;
  for (auto& d : cfg.service) d = d.scaled(u);
  const Model1Spec spec = cfg.model1_spec();
  const StabilityReport st = check_stability_model1(spec);
  if (!st.stable) throw UnstableError(st.message);
  Model1Options mo;
  mo.search_bound = cfg.solver.search_bound;
  return mean_workload(assemble_and_solve_coefficients(spec, mo)).mean.sum();
}

inline double model2_total_mean(InstanceConfig cfg, double p, double u) {
  cfg.p = p;
  for (auto& d : cfg.service) d = d.scaled(u);
  for (auto& d : cfg.alt_service) d = d.scaled(u);
  Model2Options mo;
  mo.search_bound = cfg.solver.search_bound;
  const Model2Solution sol = solve_model2(cfg.model2_spec(), mo);
  return moments(sol, 1).m[1].sum();
}

inline int cmd_sweep_model1(const Options& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const InstanceConfig cfg = load_config(opt.config);
    if (cfg.model != ModelKind::model1) throw ConfigError("model", "sweep-model1 needs a model1 config");
    for (double u : opt.u_grid)
      if (!(u > 0.0)) throw ConfigError("--u", "grid values must be positive");
    const std::size_t n = cfg.size();
    const RMatrix autoP = cyclic_shift(n), indepP = uniform_rows(n);
    std::vector<std::string> errors;
    const auto vals = detail::parallel_cells(
        2 * opt.u_grid.size(),
        [&](std::size_t k) { return model1_total_mean(cfg, k % 2 == 0 ? autoP : indepP, opt.u_grid[k / 2]); }, errors);
    std::ostringstream os;
    os << "u,mean_auto,mean_indep\n";
    bool failed = false;
    for (std::size_t r = 0; r < opt.u_grid.size(); ++r) {
      os << fmt(opt.u_grid[r]) << ',' << detail::cell(vals[2 * r]) << ',' << detail::cell(vals[2 * r + 1]) << '\n';
      for (std::size_t c = 0; c < 2; ++c)
        if (!errors[2 * r + c].empty()) {
          failed = true;
          err << "u=" << fmt(opt.u_grid[r]) << (c == 0 ? " (auto)" : " (indep)") << ": " << errors[2 * r + c] << "\n";
        }
    }
    write_file(std::filesystem::path(opt.out_dir) / "sweep_model1.csv", os.str());
    out << os.str();
    return failed ? solver_failure : ok;
  });
}

inline int cmd_sweep_model2(const Options& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const InstanceConfig cfg = load_config(opt.config);
    if (cfg.model != ModelKind::model2) throw ConfigError("model", "sweep-model2 needs a model2 config");
    for (double p : opt.p_grid)
      if (!(p > 0.0 && p < 1.0)) throw ConfigError("--p", "grid values must lie in (0, 1)");
    for (double u : opt.u_grid)
      if (!(u > 0.0)) throw ConfigError("--u", "grid values must be positive");
    const std::size_t nu = opt.u_grid.size();
    std::vector<std::string> errors;
    const auto vals = detail::parallel_cells(
        opt.p_grid.size() * nu, [&](std::size_t k) { return model2_total_mean(cfg, opt.p_grid[k / nu], opt.u_grid[k % nu]); },
        errors);
    std::ostringstream os;
    os << "p,u,mean_wait\n";
    bool failed = false;
    for (std::size_t k = 0; k < vals.size(); ++k) {
      os << fmt(opt.p_grid[k / nu]) << ',' << fmt(opt.u_grid[k % nu]) << ',' << detail::cell(vals[k]) << '\n';
      if (!errors[k].empty()) {
        failed = true;
        err << "p=" << fmt(opt.p_grid[k / nu]) << " u=" << fmt(opt.u_grid[k % nu]) << ": " << errors[k] << "\n";
      }
    }
    write_file(std::filesystem::path(opt.out_dir) / "sweep_model2.csv", os.str());
    out << os.str();
    return failed ? solver_failure : ok;
  });
}

}  // namespace mmlindley::cli
