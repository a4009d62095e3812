#pragma once

// JSON instance configs. Every schema error names the offending path, e.g.
// "service[1].rate: expected a positive number".

#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mmlindley/model1.hpp"
#include "mmlindley/model2.hpp"
#include "mmlindley/simulate.hpp"

namespace mmlindley {

using json = nlohmann::json;

class ConfigError : public InvalidArgument {
 public:
  ConfigError(const std::string& path, const std::string& what)
      : InvalidArgument(path.empty() ? what : path + ": " + what), path_(path) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

enum class ModelKind { model1, model1_special, model2 };

inline const char* to_string(ModelKind k) {
  switch (k) {
    case ModelKind::model1: return "model1";
    case ModelKind::model1_special: return "model1_special";
    case ModelKind::model2: return "model2";
  }
  return "?";
}

struct SolverConfig {
  double tol = 1e-7;          // series truncation for evaluation (model I)
  double search_bound = 0.0;  // 0: derived from the rates
  int r_max = 4;
};

/// A per-state distribution as written in the config.
struct DistributionConfig {
  std::string kind;
  PhaseMixture mixture{{{1.0, 0, 1.0}}};
  std::optional<double> point;  // point_mass location

  bool is_exponential() const { return kind == "exponential"; }
  double rate() const { return mixture.terms().front().rate; }

  /// Same law with durations multiplied by `factor`.
  DistributionConfig scaled(double factor) const {
    DistributionConfig d = *this;
    d.mixture = mixture.scaled(factor);
    if (point) d.point = *point * factor;
    return d;
  }

  RationalLst rational(const std::string& path) const {
    if (point && *point != 0.0) throw ConfigError(path, "a point mass away from 0 has no rational transform");
    return to_rational(mixture);
  }
  GeneralLst general(int r_max) const {
    if (point) return GeneralLst::deterministic(*point, r_max);
    return GeneralLst::from_mixture(mixture, r_max);
  }
};

struct InstanceConfig {
  ModelKind model = ModelKind::model2;
  std::string label;
  RMatrix P;
  std::vector<DistributionConfig> service, interarrival, alt_service, alt_interarrival;
  double p1 = 0.0, p2 = 0.0, p3 = 1.0, a = 0.5;
  std::vector<NegativeMultiplierLaw::Atom> atoms{{-1.0, 1.0}};
  double p = 0.5;
  SolverConfig solver;
  SimConfig sim;

  std::size_t size() const { return static_cast<std::size_t>(P.rows()); }

  Model1Spec model1_spec() const {
    std::vector<RationalLst> s, a2;
    for (std::size_t i = 0; i < service.size(); ++i) s.push_back(service[i].rational("service[" + std::to_string(i) + "]"));
    for (std::size_t i = 0; i < interarrival.size(); ++i)
      a2.push_back(interarrival[i].rational("interarrival[" + std::to_string(i) + "]"));
    return Model1Spec{ModulationChain(P), std::move(s), std::move(a2), p1, p2, p3, a, NegativeMultiplierLaw(atoms)};
  }

  Model1SpecialSpec model1_special_spec() const {
    std::vector<RationalLst> s;
    std::vector<GeneralLst> a2;
    for (std::size_t i = 0; i < service.size(); ++i) s.push_back(service[i].rational("service[" + std::to_string(i) + "]"));
    for (const auto& d : interarrival) a2.push_back(d.general(12));
    return Model1SpecialSpec{ModulationChain(P), std::move(s), std::move(a2), NegativeMultiplierLaw(atoms)};
  }

  Model2Spec model2_spec() const {
    const int moments = std::max(12, solver.r_max + 2);
    std::vector<double> lam, mu;
    std::vector<GeneralLst> beta, cst;
    for (const auto& d : interarrival) lam.push_back(d.rate());
    for (const auto& d : alt_service) mu.push_back(d.rate());
    for (const auto& d : service) beta.push_back(d.general(moments));
    for (const auto& d : alt_interarrival) cst.push_back(d.general(moments));
    return Model2Spec{ModulationChain(P), std::move(lam), std::move(mu), std::move(beta), std::move(cst), p};
  }
};

namespace detail {

inline std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }
inline std::string at_index(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

inline double get_number(const json& j, const std::string& path) {
  if (!j.is_number()) throw ConfigError(path, "expected a number");
  return j.get<double>();
}

inline double get_positive(const json& j, const std::string& path) {
  const double v = get_number(j, path);
  if (!(v > 0.0)) throw ConfigError(path, "expected a positive number");
  return v;
}

inline const json& require(const json& obj, const std::string& key, const std::string& path) {
  if (!obj.is_object()) throw ConfigError(path, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw ConfigError(join(path, key), "missing required key");
  return *it;
}

inline std::vector<double> get_number_array(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) throw ConfigError(path, "expected a nonempty array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(get_number(j[i], at_index(path, i)));
  return out;
}

inline std::uint64_t get_count(const json& j, const std::string& path) {
  if (!j.is_number_integer() || j.get<long long>() < 0) throw ConfigError(path, "expected a nonnegative integer");
  return j.get<std::uint64_t>();
}

inline DistributionConfig parse_distribution(const json& j, const std::string& path) {
  DistributionConfig d;
  const json& kind = require(j, "kind", path);
  if (!kind.is_string()) throw ConfigError(join(path, "kind"), "expected a string");
  d.kind = kind.get<std::string>();
  try {
    if (d.kind == "exponential") {
      const double rate = get_positive(require(j, "rate", path), join(path, "rate"));
      d.mixture = PhaseMixture({{1.0, 1, rate}});
    } else if (d.kind == "erlang_mixture") {
      const double rate = get_positive(require(j, "rate", path), join(path, "rate"));
      const auto w = get_number_array(require(j, "weights", path), join(path, "weights"));
      std::vector<ErlangTerm> terms;
      for (std::size_t k = 0; k < w.size(); ++k)
        if (w[k] != 0.0) terms.push_back({w[k], static_cast<int>(k) + 1, rate});
      d.mixture = PhaseMixture(std::move(terms));
    } else if (d.kind == "hyperexponential") {
      const auto w = get_number_array(require(j, "weights", path), join(path, "weights"));
      const auto r = get_number_array(require(j, "rates", path), join(path, "rates"));
      if (w.size() != r.size()) throw ConfigError(join(path, "rates"), "length differs from weights");
      std::vector<ErlangTerm> terms;
      for (std::size_t k = 0; k < w.size(); ++k) terms.push_back({w[k], 1, r[k]});
      d.mixture = PhaseMixture(std::move(terms));
    } else if (d.kind == "point_mass") {
      const double v = j.contains("value") ? get_number(j["value"], join(path, "value")) : 0.0;
      if (v < 0.0) throw ConfigError(join(path, "value"), "expected a nonnegative number");
      d.point = v;
      d.mixture = PhaseMixture({{1.0, 0, 1.0}});
    } else {
      throw ConfigError(join(path, "kind"),
                        "unknown distribution kind '" + d.kind +
                            "' (expected exponential, erlang_mixture, hyperexponential or point_mass)");
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const InvalidArgument& e) {
    throw ConfigError(path, e.what());
  }
  return d;
}

inline std::vector<DistributionConfig> parse_distributions(const json& root, const std::string& key, std::size_t n) {
  const json& arr = require(root, key, "");
  if (!arr.is_array()) throw ConfigError(key, "expected an array with one distribution per state");
  if (arr.size() != n)
    throw ConfigError(key, "expected " + std::to_string(n) + " entries (one per chain state), got " + std::to_string(arr.size()));
  std::vector<DistributionConfig> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(parse_distribution(arr[i], at_index(key, i)));
  return out;
}

}  // namespace detail

inline InstanceConfig parse_config(const json& root) {
  using namespace detail;
  if (!root.is_object()) throw ConfigError("", "top level must be an object");
  InstanceConfig cfg;
  const json& model = require(root, "model", "");
  const std::string m = model.is_string() ? model.get<std::string>() : "";
  if (m == "model1")
    cfg.model = ModelKind::model1;
  else if (m == "model1_special")
    cfg.model = ModelKind::model1_special;
  else if (m == "model2")
    cfg.model = ModelKind::model2;
  else
    throw ConfigError("model", "expected one of model1, model1_special, model2");
  if (root.contains("label") && root["label"].is_string()) cfg.label = root["label"].get<std::string>();

  const json& P = require(require(root, "chain", ""), "P", "chain");
  if (!P.is_array() || P.empty()) throw ConfigError("chain.P", "expected a square matrix (array of rows)");
  const auto n = static_cast<Eigen::Index>(P.size());
  cfg.P.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const std::string rp = at_index("chain.P", static_cast<std::size_t>(i));
    if (!P[i].is_array() || static_cast<Eigen::Index>(P[i].size()) != n) throw ConfigError(rp, "row length differs from the number of rows");
    for (Eigen::Index j = 0; j < n; ++j) cfg.P(i, j) = get_number(P[i][j], at_index(rp, static_cast<std::size_t>(j)));
  }
  try {
    ModulationChain chain(cfg.P);
  } catch (const InvalidArgument& e) {
    throw ConfigError("chain.P", e.what());
  }

  const std::size_t N = cfg.size();
  cfg.service = parse_distributions(root, "service", N);
  cfg.interarrival = parse_distributions(root, "interarrival", N);
  const json* vlaw = root.contains("v_law") ? &root["v_law"] : nullptr;

  if (cfg.model == ModelKind::model2) {
    for (std::size_t i = 0; i < N; ++i)
      if (!cfg.interarrival[i].is_exponential()) throw ConfigError(at_index("interarrival", i), "model2 needs exponential interarrival times");
    cfg.alt_service = parse_distributions(root, "alt_service", N);
    for (std::size_t i = 0; i < N; ++i)
      if (!cfg.alt_service[i].is_exponential()) throw ConfigError(at_index("alt_service", i), "model2 needs exponential D");
    cfg.alt_interarrival = parse_distributions(root, "alt_interarrival", N);
    if (!vlaw) throw ConfigError("v_law", "missing required key");
    cfg.p = get_number(require(*vlaw, "p", "v_law"), "v_law.p");
    if (!(cfg.p >= 0.0 && cfg.p <= 1.0)) throw ConfigError("v_law.p", "expected a value in [0, 1]");
  } else {
    if (cfg.model == ModelKind::model1) {
      if (!vlaw) throw ConfigError("v_law", "missing required key");
      cfg.p1 = get_number(require(*vlaw, "p1", "v_law"), "v_law.p1");
      cfg.p2 = get_number(require(*vlaw, "p2", "v_law"), "v_law.p2");
      cfg.p3 = get_number(require(*vlaw, "p3", "v_law"), "v_law.p3");
      cfg.a = get_number(require(*vlaw, "a", "v_law"), "v_law.a");
      for (const char* k : {"p1", "p2", "p3"}) {
        const double v = get_number((*vlaw)[k], join("v_law", k));
        if (!(v >= 0.0 && v <= 1.0)) throw ConfigError(join("v_law", k), "expected a probability in [0, 1]");
      }
      if (std::abs(cfg.p1 + cfg.p2 + cfg.p3 - 1.0) > 1e-12) throw ConfigError("v_law", "p1 + p2 + p3 must equal 1");
      if (!(cfg.a > 0.0 && cfg.a < 1.0)) throw ConfigError("v_law.a", "expected a value in (0, 1)");
    } else {
      cfg.p1 = cfg.p2 = 0.0;
      cfg.p3 = 1.0;
    }
    if (vlaw && vlaw->contains("atoms")) {
      const json& atoms = (*vlaw)["atoms"];
      if (!atoms.is_array() || atoms.empty()) throw ConfigError("v_law.atoms", "expected a nonempty array");
      cfg.atoms.clear();
      for (std::size_t i = 0; i < atoms.size(); ++i) {
        const std::string ap = at_index("v_law.atoms", i);
        const double v = get_number(require(atoms[i], "value", ap), join(ap, "value"));
        const double w = get_number(require(atoms[i], "weight", ap), join(ap, "weight"));
        if (!(v < 0.0)) throw ConfigError(join(ap, "value"), "atom values must be negative");
        cfg.atoms.push_back({v, w});
      }
      try {
        NegativeMultiplierLaw check(cfg.atoms);
      } catch (const InvalidArgument& e) {
        throw ConfigError("v_law.atoms", e.what());
      }
    }
  }

  if (root.contains("solver")) {
    const json& s = root["solver"];
    if (!s.is_object()) throw ConfigError("solver", "expected an object");
    if (s.contains("tol")) cfg.solver.tol = get_positive(s["tol"], "solver.tol");
    if (s.contains("search_bound")) cfg.solver.search_bound = get_number(s["search_bound"], "solver.search_bound");
    if (s.contains("r_max")) cfg.solver.r_max = static_cast<int>(get_count(s["r_max"], "solver.r_max"));
  }
  if (root.contains("sim")) {
    const json& s = root["sim"];
    if (!s.is_object()) throw ConfigError("sim", "expected an object");
    if (s.contains("n_steps")) cfg.sim.n_steps = get_count(s["n_steps"], "sim.n_steps");
    if (s.contains("burn_in")) cfg.sim.burn_in = get_count(s["burn_in"], "sim.burn_in");
    if (s.contains("seed")) cfg.sim.seed = get_count(s["seed"], "sim.seed");
    if (s.contains("replications")) cfg.sim.replications = static_cast<int>(get_count(s["replications"], "sim.replications"));
    if (s.contains("probes")) cfg.sim.probes = get_number_array(s["probes"], "sim.probes");
    if (s.contains("threads")) cfg.sim.threads = static_cast<int>(get_count(s["threads"], "sim.threads"));
    try {
      cfg.sim.validate();
    } catch (const InvalidArgument& e) {
      throw ConfigError("sim", e.what());
    }
  }
  return cfg;
}

inline InstanceConfig load_config(const std::string& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("", "cannot open config file '" + file + "'");
  json root;
  try {
    root = json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ConfigError("", std::string("malformed JSON: ") + e.what());
  }
  return parse_config(root);
}

}  // namespace mmlindley
