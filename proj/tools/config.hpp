#pragma once

// Run configuration: a sectioned INI file with typed values. Every key is consumed by exactly one
// reader; keys left over after parsing are reported as errors so that typos never pass silently.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "bohmion/bohmion.hpp"

namespace bohmion::cli {

enum class ScenarioType { Bohmion, EF, MeanField, Schrodinger };

inline std::string to_string(ScenarioType t) {
  switch (t) {
    case ScenarioType::Bohmion: return "bohmion";
    case ScenarioType::EF: return "ef";
    case ScenarioType::MeanField: return "meanfield";
    case ScenarioType::Schrodinger: return "schrodinger";
  }
  return "unknown";
}

struct KernelSpec {
  KernelFamily family = KernelFamily::Gaussian;
  double alpha = 1.0;
  QuadratureOptions quad;

  SmoothingKernel kernel() const { return {family, alpha}; }
};

struct IntegratorSpec {
  double dt = 1e-3;
  long steps = 1000;
  long stride = 1;
  double tol = 1e-13;
  int max_iter = 100;
  int rho_substeps = 1;

  EvolveOptions options() const {
    EvolveOptions o;
    o.dt = dt;
    o.steps = steps;
    o.stride = stride;
    o.midpoint.tol = tol;
    o.midpoint.max_iter = max_iter;
    return o;
  }
};

struct PotentialSpec {
  std::string family = "zero";
  double omega = 1.0;
  double barrier = 1.0;
  double x0 = 1.0;
  std::vector<double> coeffs;

  Potential build(double mass) const {
    if (family == "zero") return Potential::zero();
    if (family == "harmonic") return Potential::harmonic(mass, omega);
    if (family == "double_well") return Potential::double_well(barrier, x0);
    return Potential::polynomial(coeffs);
  }
};

/// Initial electronic data of one Bohmion: a state vector or a unit-trace density matrix.
struct ElectronicInit {
  std::optional<Eigen::VectorXcd> vector;
  std::optional<Eigen::MatrixXcd> matrix;
};

struct ElectronicSpec {
  std::string model = "linear_vibronic";
  int d = 2;
  double kappa = 1.0;
  double delta = 0.5;
  std::vector<Eigen::MatrixXcd> coeffs;
  EFVariant variant = EFVariant::Hamiltonian;
  std::vector<ElectronicInit> init;  // one per Bohmion (or one for mean field)

  ElectronicModel build() const {
    if (model == "linear_vibronic") return ElectronicModel::linear_vibronic(kappa, delta);
    if (model == "constant") return ElectronicModel::constant(coeffs.front());
    return ElectronicModel::polynomial(coeffs);
  }
};

struct WavefunctionSpec {
  double length = 40.0;
  long n = 1024;
  double x0 = 0.0;
  double sigma = 1.0;
  double k0 = 0.0;
  int seeds = 9;
};

struct RunConfig {
  std::string source;
  std::string name = "run";
  ScenarioType type = ScenarioType::Bohmion;
  std::uint64_t seed = 1;
  PhysicalConstants consts;
  KernelSpec kernel;
  IntegratorSpec integrator;
  PotentialSpec potential;
  Regularization mode = Regularization::Hamiltonian;
  Eigen::VectorXd q, p, w;
  ElectronicSpec electronic;
  WavefunctionSpec wavefunction;
  std::map<std::string, double> tolerances;
  std::string output_dir = "output";
  std::vector<std::string> warnings;

  BohmionEnsemble ensemble() const { return {q, p, w}; }

  RqhdModel rqhd_model() const {
    RqhdModel m{potential.build(consts.M), kernel.kernel(), consts, {}};
    m.grid.quad = kernel.quad;
    return m;
  }

  EFModel ef_model() const {
    EFModel m{electronic.build(), kernel.kernel(), consts, {}, electronic.variant};
    m.grid.quad = kernel.quad;
    return m;
  }
};

namespace detail {

/// Key lookup with file positions for diagnostics and bookkeeping of consumed keys.
class IniReader {
 public:
  IniReader(const std::string& text, std::string source) : source_(std::move(source)) {
    std::istringstream in(text);
    try {
      boost::property_tree::ini_parser::read_ini(in, tree_);
    } catch (const boost::property_tree::ini_parser_error& e) {
      throw ConfigError(source_ + ":" + std::to_string(e.line()) + ": " + e.message());
    }
    index_lines(text);
    for (const auto& [section, body] : tree_) {
      if (body.empty() && !body.data().empty()) {
        throw ConfigError(where(section) + "key '" + section + "' must belong to a section");
      }
      for (const auto& kv : body) unused_.insert(section + "." + kv.first);
    }
  }

  bool has(const std::string& key) const { return tree_.get_optional<std::string>(path(key)).has_value(); }

  bool has_section(const std::string& section) const { return tree_.find(section) != tree_.not_found(); }

  std::optional<std::string> raw(const std::string& key) {
    auto v = tree_.get_optional<std::string>(path(key));
    if (!v) return std::nullopt;
    unused_.erase(key);
    return boost::algorithm::trim_copy(*v);
  }

  std::string text(const std::string& key, const std::string& fallback) { return raw(key).value_or(fallback); }

  double number(const std::string& key, double fallback) {
    const auto v = raw(key);
    return v ? parse_number(key, *v) : fallback;
  }

  long integer(const std::string& key, long fallback) {
    const auto v = raw(key);
    if (!v) return fallback;
    std::size_t used = 0;
    long out = 0;
    try {
      out = std::stol(*v, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != v->size()) fail(key, "expected an integer, got '" + *v + "'");
    return out;
  }

  std::vector<double> list(const std::string& key) {
    const auto v = raw(key);
    if (!v) return {};
    std::vector<std::string> parts;
    boost::algorithm::split(parts, *v, boost::is_any_of(","));
    std::vector<double> out;
    for (auto& s : parts) {
      boost::algorithm::trim(s);
      if (s.empty()) fail(key, "empty list entry");
      out.push_back(parse_number(key, s));
    }
    return out;
  }

  [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
    throw ConfigError(where(key) + key + ": " + msg);
  }

  void reject_unused() const {
    if (unused_.empty()) return;
    const std::string& key = *unused_.begin();
    throw ConfigError(where(key) + "unknown key '" + key + "'");
  }

 private:
  static boost::property_tree::ptree::path_type path(const std::string& key) { return {key, '.'}; }

  double parse_number(const std::string& key, const std::string& v) const {
    std::size_t used = 0;
    double out = 0.0;
    try {
      out = std::stod(v, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != v.size()) fail(key, "expected a number, got '" + v + "'");
    if (!std::isfinite(out)) fail(key, "value must be finite");
    return out;
  }

  std::string where(const std::string& key) const {
    const auto it = lines_.find(key);
    return source_ + (it == lines_.end() ? std::string() : ":" + std::to_string(it->second)) + ": ";
  }

  void index_lines(const std::string& text) {
    std::istringstream in(text);
    std::string line, section;
    for (int no = 1; std::getline(in, line); ++no) {
      boost::algorithm::trim(line);
      if (line.empty() || line[0] == ';' || line[0] == '#') continue;
      if (line.front() == '[' && line.back() == ']') {
        section = line.substr(1, line.size() - 2);
        lines_.emplace(section, no);
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = boost::algorithm::trim_copy(line.substr(0, eq));
      lines_.emplace(section.empty() ? key : section + "." + key, no);
    }
  }

  std::string source_;
  boost::property_tree::ptree tree_;
  std::map<std::string, int> lines_;
  std::set<std::string> unused_;
};

inline Eigen::VectorXcd complex_vector(IniReader& in, const std::string& key, const std::vector<double>& v, int d) {
  Eigen::VectorXcd out(d);
  if (static_cast<int>(v.size()) == d) {
    for (int i = 0; i < d; ++i) out[i] = v[static_cast<std::size_t>(i)];
  } else if (static_cast<int>(v.size()) == 2 * d) {
    for (int i = 0; i < d; ++i) out[i] = cplx(v[2 * static_cast<std::size_t>(i)], v[2 * static_cast<std::size_t>(i) + 1]);
  } else {
    in.fail(key, "expected " + std::to_string(d) + " real or " + std::to_string(2 * d) + " interleaved re,im entries");
  }
  return out;
}

inline Eigen::MatrixXcd complex_matrix(IniReader& in, const std::string& key, const std::vector<double>& v, int d) {
  const auto flat = complex_vector(in, key, v, d * d);
  Eigen::MatrixXcd out(d, d);
  for (int r = 0; r < d; ++r) {
    for (int c = 0; c < d; ++c) out(r, c) = flat[r * d + c];
  }
  return out;
}

}  // namespace detail

/// Parses configuration text. `source` labels diagnostics (normally the file path).
inline RunConfig parse_config(const std::string& text, const std::string& source = "<config>") {
  detail::IniReader in(text, source);
  RunConfig cfg;
  cfg.source = source;

  cfg.name = in.text("scenario.name", "run");
  if (cfg.name.empty() || cfg.name.find_first_of("/\\") != std::string::npos) {
    in.fail("scenario.name", "must be a non-empty file stem");
  }
  const std::string type = in.text("scenario.type", "bohmion");
  if (type == "bohmion") cfg.type = ScenarioType::Bohmion;
  else if (type == "ef") cfg.type = ScenarioType::EF;
  else if (type == "meanfield") cfg.type = ScenarioType::MeanField;
  else if (type == "schrodinger") cfg.type = ScenarioType::Schrodinger;
  else in.fail("scenario.type", "unknown scenario type '" + type + "'");
  const long seed = in.integer("scenario.seed", 1);
  if (seed < 0) in.fail("scenario.seed", "must be non-negative");
  cfg.seed = static_cast<std::uint64_t>(seed);

  cfg.consts.hbar = in.number("physics.hbar", 1.0);
  cfg.consts.M = in.number("physics.M", 1.0);
  cfg.consts.m = in.number("physics.m", 1.0);

  const std::string family = in.text("kernel.family", "gaussian");
  if (family == "gaussian") cfg.kernel.family = KernelFamily::Gaussian;
  else if (family == "helmholtz") cfg.kernel.family = KernelFamily::HelmholtzGreen;
  else in.fail("kernel.family", "unknown kernel family '" + family + "'");
  cfg.kernel.alpha = in.number("kernel.alpha", 1.0);
  if (!(cfg.kernel.alpha > 0.0)) in.fail("kernel.alpha", "must be positive");
  cfg.kernel.quad.spacing_fraction = in.number("kernel.spacing_fraction", cfg.kernel.quad.spacing_fraction);
  if (!(cfg.kernel.quad.spacing_fraction > 0.0) || cfg.kernel.quad.spacing_fraction > 0.125) {
    in.fail("kernel.spacing_fraction", "must lie in (0, 1/8]");
  }
  cfg.kernel.quad.margin = in.number("kernel.margin", 0.0);
  if (cfg.kernel.quad.margin < 0.0) in.fail("kernel.margin", "must be non-negative");
  const std::string rule = in.text("kernel.rule", "automatic");
  if (rule == "automatic") cfg.kernel.quad.rule = QuadratureRule::Automatic;
  else if (rule == "trapezoid") cfg.kernel.quad.rule = QuadratureRule::Trapezoid;
  else if (rule == "kink_aligned") cfg.kernel.quad.rule = QuadratureRule::KinkAligned;
  else in.fail("kernel.rule", "unknown quadrature rule '" + rule + "'");

  auto& ig = cfg.integrator;
  ig.dt = in.number("integrator.dt", ig.dt);
  if (!(ig.dt > 0.0)) throw ConfigError("integrator.dt must be positive");
  ig.steps = in.integer("integrator.steps", ig.steps);
  if (ig.steps < 0) throw ConfigError("integrator.steps must be non-negative");
  ig.stride = in.integer("integrator.stride", ig.stride);
  if (ig.stride < 1) throw ConfigError("integrator.stride must be >= 1");
  ig.tol = in.number("integrator.tol", ig.tol);
  ig.max_iter = static_cast<int>(in.integer("integrator.max_iter", ig.max_iter));
  ig.rho_substeps = static_cast<int>(in.integer("integrator.rho_substeps", ig.rho_substeps));
  if (ig.rho_substeps < 1) throw ConfigError("integrator.rho_substeps must be >= 1");
  const std::string method = in.text("integrator.method", cfg.type == ScenarioType::Schrodinger ? "split_step" : "midpoint");
  if (method != (cfg.type == ScenarioType::Schrodinger ? "split_step" : "midpoint")) {
    in.fail("integrator.method", "'" + method + "' is not available for " + to_string(cfg.type) + " scenarios");
  }

  auto& pot = cfg.potential;
  pot.family = in.text("potential.family", "zero");
  if (pot.family == "harmonic") {
    pot.omega = in.number("potential.omega", 1.0);
  } else if (pot.family == "double_well") {
    pot.barrier = in.number("potential.barrier", 1.0);
    pot.x0 = in.number("potential.x0", 1.0);
    if (!(pot.x0 > 0.0)) in.fail("potential.x0", "must be positive");
  } else if (pot.family == "polynomial") {
    pot.coeffs = in.list("potential.coeffs");
    if (pot.coeffs.empty()) in.fail("potential.coeffs", "polynomial potential needs coefficients");
  } else if (pot.family != "zero") {
    in.fail("potential.family", "unknown potential family '" + pot.family + "'");
  }

  const bool particles = cfg.type == ScenarioType::Bohmion || cfg.type == ScenarioType::EF;
  if (particles) {
    const std::string mode = in.text("bohmions.mode", "hamiltonian");
    if (mode == "hamiltonian") cfg.mode = Regularization::Hamiltonian;
    else if (mode == "lagrangian") cfg.mode = Regularization::Lagrangian;
    else if (mode == "classical") cfg.mode = Regularization::Classical;
    else in.fail("bohmions.mode", "unknown regularization '" + mode + "'");
    if (cfg.type == ScenarioType::EF && in.has("bohmions.mode")) {
      in.fail("bohmions.mode", "EF scenarios select electronic.variant instead");
    }

    const auto q = in.list("bohmions.q");
    if (q.empty()) in.fail("bohmions.q", "at least one Bohmion position is required");
    const long n = in.integer("bohmions.n", static_cast<long>(q.size()));
    if (n != static_cast<long>(q.size())) in.fail("bohmions.n", "does not match the length of bohmions.q");
    auto p = in.list("bohmions.p");
    if (p.empty()) p.assign(q.size(), 0.0);
    if (p.size() != q.size()) in.fail("bohmions.p", "length differs from bohmions.q");
    auto w = in.list("bohmions.w");
    if (w.empty()) w.assign(q.size(), 1.0 / static_cast<double>(q.size()));
    if (w.size() != q.size()) in.fail("bohmions.w", "length differs from bohmions.q");
    double sum = 0.0;
    for (double x : w) {
      if (!(x > 0.0)) in.fail("bohmions.w", "weights must be positive");
      sum += x;
    }
    cfg.q = Eigen::Map<const Eigen::VectorXd>(q.data(), n);
    cfg.p = Eigen::Map<const Eigen::VectorXd>(p.data(), n);
    cfg.w = Eigen::Map<const Eigen::VectorXd>(w.data(), n);
    if (std::abs(sum - 1.0) > 1e-14) {
      cfg.w /= sum;
      std::ostringstream msg;
      msg.precision(17);
      msg << "bohmions.w sums to " << sum << "; weights normalized to 1";
      cfg.warnings.push_back(msg.str());
    }
  }

  if (cfg.type == ScenarioType::MeanField) {
    cfg.q = Eigen::VectorXd::Constant(1, in.number("nucleus.q", 0.0));
    cfg.p = Eigen::VectorXd::Constant(1, in.number("nucleus.p", 0.0));
    cfg.w = Eigen::VectorXd::Ones(1);
  }

  if (cfg.type == ScenarioType::EF || cfg.type == ScenarioType::MeanField) {
    auto& el = cfg.electronic;
    el.model = in.text("electronic.model", "linear_vibronic");
    if (el.model == "linear_vibronic") {
      el.d = static_cast<int>(in.integer("electronic.d", 2));
      if (el.d != 2) in.fail("electronic.d", "linear_vibronic is two-dimensional");
      el.kappa = in.number("electronic.kappa", 1.0);
      el.delta = in.number("electronic.delta", 0.5);
    } else if (el.model == "constant" || el.model == "polynomial") {
      el.d = static_cast<int>(in.integer("electronic.d", 2));
      if (el.d < 2 || el.d > ElectronicModel::max_dimension) in.fail("electronic.d", "must lie in [2, 16]");
      for (int k = 0; in.has("electronic.c" + std::to_string(k)); ++k) {
        const std::string key = "electronic.c" + std::to_string(k);
        el.coeffs.push_back(detail::complex_matrix(in, key, in.list(key), el.d));
      }
      if (el.coeffs.empty()) in.fail("electronic.c0", "coefficient matrix c0 is required");
      if (el.model == "constant" && el.coeffs.size() > 1) in.fail("electronic.c1", "constant model takes only c0");
    } else {
      in.fail("electronic.model", "unknown electronic model '" + el.model + "'");
    }
    if (cfg.type == ScenarioType::EF) {
      const std::string variant = in.text("electronic.variant", "hamiltonian");
      if (variant == "hamiltonian") el.variant = EFVariant::Hamiltonian;
      else if (variant == "lagrangian") el.variant = EFVariant::Lagrangian;
      else in.fail("electronic.variant", "unknown EF variant '" + variant + "'");
    }
    const auto count = cfg.q.size();
    for (Eigen::Index a = 1; a <= count; ++a) {
      const std::string suffix = cfg.type == ScenarioType::MeanField ? "" : std::to_string(a);
      const std::string vkey = "electronic.psi" + suffix, mkey = "electronic.rho" + suffix;
      ElectronicInit init;
      if (in.has(vkey)) {
        init.vector = detail::complex_vector(in, vkey, in.list(vkey), el.d);
        if (!(init.vector->norm() > 0.0)) in.fail(vkey, "state vector is zero");
        *init.vector /= init.vector->norm();
      }
      if (in.has(mkey)) {
        if (init.vector) in.fail(mkey, "give either " + vkey + " or " + mkey + ", not both");
        if (cfg.type == ScenarioType::MeanField) in.fail(mkey, "mean-field runs take a state vector");
        init.matrix = detail::complex_matrix(in, mkey, in.list(mkey), el.d);
      }
      if (!init.vector && !init.matrix) {
        init.vector = Eigen::VectorXcd::Unit(el.d, 0);
      }
      el.init.push_back(std::move(init));
    }
  }

  if (cfg.type == ScenarioType::Schrodinger) {
    auto& wf = cfg.wavefunction;
    wf.length = in.number("wavefunction.length", wf.length);
    wf.n = in.integer("wavefunction.n", wf.n);
    wf.x0 = in.number("wavefunction.x0", wf.x0);
    wf.sigma = in.number("wavefunction.sigma", wf.sigma);
    if (!(wf.sigma > 0.0)) in.fail("wavefunction.sigma", "must be positive");
    wf.k0 = in.number("wavefunction.k0", wf.k0);
    wf.seeds = static_cast<int>(in.integer("wavefunction.seeds", wf.seeds));
    if (wf.seeds < 1) in.fail("wavefunction.seeds", "must be >= 1");
  }

  for (const char* key : {"energy_drift", "momentum_drift", "force_drift", "trace_drift", "spectrum_drift",
                          "purity_drift", "total_trace_drift", "norm_drift", "ordering_violations"}) {
    const std::string full = std::string("tolerances.") + key;
    if (in.has(full)) {
      const double v = in.number(full, 0.0);
      if (v < 0.0) in.fail(full, "must be non-negative");
      cfg.tolerances[key] = v;
    }
  }

  cfg.output_dir = in.text("output.dir", cfg.output_dir);
  if (cfg.output_dir.empty()) in.fail("output.dir", "must not be empty");

  in.reject_unused();
  return cfg;
}

inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read config file '" + path.string() + "'");
  std::ostringstream text;
  text << f.rdbuf();
  return parse_config(text.str(), path.string());
}

}  // namespace bohmion::cli
