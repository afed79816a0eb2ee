#pragma once

// `bohmion converge`: reruns a scenario across refinement levels and reports observed orders from
// Richardson ratios. Non-monotone error sequences are flagged, not fatal.

#include <cmath>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bohmion/bohmion.hpp"
#include "config.hpp"
#include "scenarios.hpp"

namespace bohmion::cli {

enum class ConvergeParam { Dt, GridSpacing, Alpha };

inline ConvergeParam parse_converge_param(const std::string& s) {
  if (s == "dt") return ConvergeParam::Dt;
  if (s == "grid_spacing") return ConvergeParam::GridSpacing;
  if (s == "alpha") return ConvergeParam::Alpha;
  throw ConfigError("--param must be one of dt, grid_spacing, alpha; got '" + s + "'");
}

inline std::string to_string(ConvergeParam p) {
  switch (p) {
    case ConvergeParam::Dt: return "dt";
    case ConvergeParam::GridSpacing: return "grid_spacing";
    case ConvergeParam::Alpha: return "alpha";
  }
  return "unknown";
}

struct OrderReport {
  std::string scenario;
  std::string param;
  std::string quantity;
  std::vector<double> values;  // parameter value per level, halved each level
  std::vector<double> errors;  // successive differences, or distance to the known limit
  std::vector<double> orders;  // log2 of consecutive error ratios
  bool monotone = true;

  nlohmann::ordered_json json() const {
    nlohmann::ordered_json j;
    j["scenario"] = scenario;
    j["param"] = param;
    j["quantity"] = quantity;
    j["values"] = values;
    j["errors"] = errors;
    j["orders"] = orders;
    j["monotone"] = monotone;
    return j;
  }
};

namespace detail {

/// Final (q, p) (or psi for Schrodinger) of a run over the configured time span.
inline Eigen::VectorXd final_state(const RunConfig& cfg) {
  const auto cat = [](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    Eigen::VectorXd out(a.size() + b.size());
    out << a, b;
    return out;
  };
  switch (cfg.type) {
    case ScenarioType::Bohmion: {
      const auto tr = evolve(cfg.ensemble(), cfg.rqhd_model(), cfg.mode, cfg.integrator.options());
      return cat(tr.states.back().q, tr.states.back().p);
    }
    case ScenarioType::EF: {
      EFEvolveOptions opt;
      opt.base = cfg.integrator.options();
      opt.rho_substeps = cfg.integrator.rho_substeps;
      const auto tr = ef_evolve(ef_initial_state(cfg), cfg.ef_model(), opt);
      return cat(tr.states.back().ens.q, tr.states.back().ens.p);
    }
    case ScenarioType::MeanField: {
      const MeanFieldState s0{cfg.q[0], cfg.p[0], *cfg.electronic.init.front().vector};
      const auto tr = meanfield_evolve(s0, cfg.potential.build(cfg.consts.M), cfg.electronic.build(), cfg.consts,
                                       cfg.integrator.options());
      Eigen::VectorXd out(2);
      out << tr.states.back().q, tr.states.back().p;
      return out;
    }
    case ScenarioType::Schrodinger: {
      const auto& spec = cfg.wavefunction;
      const PeriodicGrid grid = PeriodicGrid::centered(spec.length, spec.n);
      const WavefunctionGrid wf{grid, gaussian_packet(grid, spec.x0, spec.sigma, spec.k0),
                                sample_potential(cfg.potential.build(cfg.consts.m), grid), cfg.consts};
      const auto run = split_step_propagate(wf, cfg.integrator.dt, cfg.integrator.steps, cfg.integrator.steps);
      const Eigen::VectorXcd& psi = run.frames.back();
      return cat(psi.real(), psi.imag());
    }
  }
  return {};
}

inline double initial_energy(const RunConfig& cfg) {
  const BohmionEnsemble e = cfg.ensemble();
  const RqhdModel m = cfg.rqhd_model();
  if (cfg.mode == Regularization::Lagrangian) {
    return lagrangian_energy(e, m.V, m.kernel, m.grid.grid_for(m.kernel, e.q), m.consts, m.grid.quad);
  }
  return rqhd_hamiltonian(e, m);
}

/// sum_a w_a [(K*V)(q_a) - V(q_a)], which vanishes as alpha -> 0.
inline double smoothed_potential_offset(const RunConfig& cfg) {
  const Potential V = cfg.potential.build(cfg.consts.M);
  const Potential kv = V.smoothed(cfg.kernel.kernel());
  double acc = 0.0;
  for (Eigen::Index a = 0; a < cfg.q.size(); ++a) acc += cfg.w[a] * (kv.value(cfg.q[a]) - V.value(cfg.q[a]));
  return acc;
}

}  // namespace detail

inline OrderReport converge(const RunConfig& base, ConvergeParam param, int levels) {
  if (levels < 3) throw ConfigError("--levels must be at least 3");
  if (levels > 12) throw ConfigError("--levels must be at most 12");
  if (param != ConvergeParam::Dt && base.type != ScenarioType::Bohmion) {
    throw ConfigError("--param " + to_string(param) + " applies to bohmion scenarios only");
  }
  if (param == ConvergeParam::GridSpacing && base.mode == Regularization::Classical) {
    throw ConfigError("the classical closure has no quadrature grid");
  }
  OrderReport r;
  r.scenario = base.name;
  r.param = to_string(param);

  std::vector<Eigen::VectorXd> states;
  std::vector<double> scalars;
  for (int j = 0; j < levels; ++j) {
    RunConfig cfg = base;
    const double f = std::ldexp(1.0, -j);
    switch (param) {
      case ConvergeParam::Dt:
        cfg.integrator.dt *= f;
        cfg.integrator.steps <<= j;
        r.values.push_back(cfg.integrator.dt);
        states.push_back(detail::final_state(cfg));
        break;
      case ConvergeParam::GridSpacing:
        cfg.kernel.quad.spacing_fraction *= f;
        r.values.push_back(cfg.kernel.quad.spacing_fraction * cfg.kernel.alpha);
        scalars.push_back(detail::initial_energy(cfg));
        break;
      case ConvergeParam::Alpha:
        cfg.kernel.alpha *= f;
        r.values.push_back(cfg.kernel.alpha);
        scalars.push_back(detail::smoothed_potential_offset(cfg));
        break;
    }
  }

  switch (param) {
    case ConvergeParam::Dt:
      r.quantity = "final state, max-norm difference between successive levels";
      for (int j = 0; j + 1 < levels; ++j) r.errors.push_back((states[j] - states[j + 1]).cwiseAbs().maxCoeff());
      break;
    case ConvergeParam::GridSpacing:
      r.quantity = "initial energy, difference between successive levels";
      for (int j = 0; j + 1 < levels; ++j) r.errors.push_back(std::abs(scalars[j] - scalars[j + 1]));
      break;
    case ConvergeParam::Alpha:
      r.quantity = "smoothed-potential offset sum_a w_a ((K*V)(q_a) - V(q_a)), limit 0";
      for (double s : scalars) r.errors.push_back(std::abs(s));
      break;
  }
  for (std::size_t j = 0; j + 1 < r.errors.size(); ++j) {
    r.orders.push_back(std::log2(r.errors[j] / r.errors[j + 1]));
    if (!(r.errors[j + 1] < r.errors[j])) r.monotone = false;
  }
  return r;
}

}  // namespace bohmion::cli
