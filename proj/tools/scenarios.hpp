#pragma once

// Scenario dispatch: builds the models named in a RunConfig, runs them, and measures the
// invariants of the active module.

#include <chrono>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "bohmion/bohmion.hpp"
#include "config.hpp"
#include "report.hpp"

namespace bohmion::cli {

inline const std::map<std::string, double>& default_tolerances() {
  static const std::map<std::string, double> t{
      {"energy_drift", 1e-6},     {"momentum_drift", 1e-10},    {"force_drift", 1e-10},
      {"trace_drift", 1e-11},     {"spectrum_drift", 1e-10},    {"purity_drift", 1e-10},
      {"total_trace_drift", 1e-11}, {"norm_drift", 1e-10},      {"ordering_violations", 0.0},
  };
  return t;
}

namespace detail {

inline double relative_drift(const std::vector<double>& e) {
  const double scale = std::abs(e.front()) > 0.0 ? std::abs(e.front()) : 1.0;
  double out = 0.0;
  for (double x : e) out = std::max(out, std::abs(x - e.front()) / scale);
  return out;
}

class InvariantSet {
 public:
  explicit InvariantSet(const RunConfig& cfg) : cfg_(cfg) {}

  void add(const std::string& name, double drift) {
    const auto it = cfg_.tolerances.find(name);
    const double tol = it != cfg_.tolerances.end() ? it->second : default_tolerances().at(name);
    out_.push_back({name, drift, tol});
  }

  std::vector<Invariant> finish(std::vector<std::string>& warnings) const {
    for (const auto& [name, tol] : cfg_.tolerances) {
      bool used = false;
      for (const auto& i : out_) used = used || i.name == name;
      if (!used) warnings.push_back("tolerances." + name + " does not apply to this scenario");
    }
    return out_;
  }

 private:
  const RunConfig& cfg_;
  std::vector<Invariant> out_;
};

inline std::vector<std::string> indexed(const std::string& stem, Eigen::Index n) {
  std::vector<std::string> out;
  for (Eigen::Index a = 1; a <= n; ++a) out.push_back(stem + std::to_string(a));
  return out;
}

inline std::vector<std::string> concat(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

/// Net force sum_a dh/dq_a of the active Bohmion mode.
inline double net_force(const BohmionEnsemble& e, const RqhdModel& m, Regularization mode) {
  switch (mode) {
    case Regularization::Hamiltonian: return rqhd_grad(e, m).dq.sum();
    case Regularization::Lagrangian:
      return lagrangian_grad(e, m.V, m.kernel, m.grid.grid_for(m.kernel, e.q), m.consts, m.grid.quad).dq.sum();
    case Regularization::Classical: {
      double f = 0.0;
      for (Eigen::Index a = 0; a < e.size(); ++a) f += e.w[a] * m.V.gradient(e.q[a]);
      return f;
    }
  }
  return 0.0;
}

inline void run_bohmion(const RunConfig& cfg, RunReport& r) {
  const RqhdModel m = cfg.rqhd_model();
  const BohmionEnsemble ens0 = cfg.ensemble();
  r.variant = to_string(cfg.mode);
  if (cfg.mode != Regularization::Classical && m.kernel.family() == KernelFamily::HelmholtzGreen &&
      m.grid.quad.rule == QuadratureRule::Trapezoid && cfg.integrator.steps > 0) {
    r.warnings.push_back("the trapezoid rule is not smooth in q for the exponential kernel; use kink_aligned for dynamics");
  }
  const BohmionTrajectory traj = evolve(ens0, m, cfg.mode, cfg.integrator.options());
  const auto n = ens0.size();

  Table t{cfg.name + ".csv", concat(concat({"t", "energy"}, indexed("q", n)), indexed("p", n)), {}};
  for (std::size_t j = 0; j < traj.t.size(); ++j) {
    std::vector<double> row{traj.t[j], traj.energy[j]};
    for (Eigen::Index a = 0; a < n; ++a) row.push_back(traj.states[j].q[a]);
    for (Eigen::Index a = 0; a < n; ++a) row.push_back(traj.states[j].p[a]);
    t.add(std::move(row));
  }
  r.tables.push_back(std::move(t));
  r.initial_energy = traj.energy.front();
  r.final_energy = traj.energy.back();

  InvariantSet inv(cfg);
  inv.add("energy_drift", relative_drift(traj.energy));
  if (m.V.is_zero()) {
    double dp = 0.0, df = 0.0;
    const double p0 = ens0.p.sum(), f0 = net_force(ens0, m, cfg.mode);
    for (const auto& s : traj.states) {
      dp = std::max(dp, std::abs(s.p.sum() - p0));
      df = std::max(df, std::abs(net_force(s, m, cfg.mode) - f0));
    }
    inv.add("momentum_drift", dp);
    inv.add("force_drift", df);
  }
  r.invariants = inv.finish(r.warnings);
}

inline EFBohmionState ef_initial_state(const RunConfig& cfg) {
  EFBohmionState s{cfg.ensemble(), {}};
  const int d = cfg.electronic.d;
  for (std::size_t a = 0; a < cfg.electronic.init.size(); ++a) {
    const auto& init = cfg.electronic.init[a];
    const double w = s.ens.w[static_cast<Eigen::Index>(a)];
    if (init.vector) {
      s.rho.push_back(pure_density(*init.vector, w));
      continue;
    }
    Eigen::MatrixXcd m = *init.matrix;
    if (m.rows() != d) throw DimensionError("electronic.rho" + std::to_string(a + 1) + " has the wrong dimension");
    const double tr = m.trace().real();
    if (!(tr > 0.0)) throw ConfigError("electronic.rho" + std::to_string(a + 1) + " must have positive trace");
    s.rho.push_back(w / tr * m);
  }
  s.validate();
  return s;
}

inline void run_ef(const RunConfig& cfg, RunReport& r) {
  const EFModel m = cfg.ef_model();
  const EFBohmionState s0 = ef_initial_state(cfg);
  r.variant = to_string(m.variant);
  EFEvolveOptions opt;
  opt.base = cfg.integrator.options();
  opt.rho_substeps = cfg.integrator.rho_substeps;
  const EFTrajectory traj = ef_evolve(s0, m, opt);
  const auto n = s0.ens.size();
  const int d = s0.dimension();

  Table t{cfg.name + ".csv",
          concat(concat(concat({"t", "energy"}, indexed("q", n)), indexed("p", n)), indexed("purity", n)), {}};
  std::vector<std::string> rho_cols{"t", "a"};
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      rho_cols.push_back("re_" + std::to_string(i) + "_" + std::to_string(j));
      rho_cols.push_back("im_" + std::to_string(i) + "_" + std::to_string(j));
    }
  }
  Table rho{cfg.name + "_rho.csv", rho_cols, {}};
  for (std::size_t j = 0; j < traj.t.size(); ++j) {
    const auto& s = traj.states[j];
    std::vector<double> row{traj.t[j], traj.energy[j]};
    for (Eigen::Index a = 0; a < n; ++a) row.push_back(s.ens.q[a]);
    for (Eigen::Index a = 0; a < n; ++a) row.push_back(s.ens.p[a]);
    for (const auto& x : s.rho) row.push_back(purity(x));
    t.add(std::move(row));
    for (std::size_t a = 0; a < s.rho.size(); ++a) {
      std::vector<double> rr{traj.t[j], static_cast<double>(a + 1)};
      for (int i = 0; i < d; ++i) {
        for (int k = 0; k < d; ++k) {
          rr.push_back(s.rho[a](i, k).real());
          rr.push_back(s.rho[a](i, k).imag());
        }
      }
      rho.add(std::move(rr));
    }
  }
  r.tables.push_back(std::move(t));
  r.tables.push_back(std::move(rho));
  r.initial_energy = traj.energy.front();
  r.final_energy = traj.energy.back();

  InvariantSet inv(cfg);
  inv.add("energy_drift", relative_drift(traj.energy));
  inv.add("trace_drift", traj.max_trace_drift);
  inv.add("spectrum_drift", traj.max_spectrum_drift);
  inv.add("purity_drift", traj.max_purity_drift);
  inv.add("total_trace_drift", traj.max_total_trace_drift);
  if (m.He.is_constant()) {
    double dp = 0.0;
    for (const auto& s : traj.states) dp = std::max(dp, std::abs(s.ens.p.sum() - s0.ens.p.sum()));
    inv.add("momentum_drift", dp);
  }
  r.invariants = inv.finish(r.warnings);
}

inline void run_meanfield(const RunConfig& cfg, RunReport& r) {
  const Potential Vn = cfg.potential.build(cfg.consts.M);
  const ElectronicModel He = cfg.electronic.build();
  const MeanFieldState s0{cfg.q[0], cfg.p[0], *cfg.electronic.init.front().vector};
  const MeanFieldTrajectory traj = meanfield_evolve(s0, Vn, He, cfg.consts, cfg.integrator.options());
  const int d = He.dimension();

  std::vector<std::string> cols{"t", "energy", "q", "p"};
  for (int i = 0; i < d; ++i) {
    cols.push_back("re_psi" + std::to_string(i));
    cols.push_back("im_psi" + std::to_string(i));
  }
  Table t{cfg.name + ".csv", cols, {}};
  for (std::size_t j = 0; j < traj.t.size(); ++j) {
    const auto& s = traj.states[j];
    std::vector<double> row{traj.t[j], traj.energy[j], s.q, s.p};
    for (int i = 0; i < d; ++i) {
      row.push_back(s.psi[i].real());
      row.push_back(s.psi[i].imag());
    }
    t.add(std::move(row));
  }
  r.tables.push_back(std::move(t));
  r.initial_energy = traj.energy.front();
  r.final_energy = traj.energy.back();

  InvariantSet inv(cfg);
  inv.add("energy_drift", relative_drift(traj.energy));
  inv.add("norm_drift", traj.max_norm_drift);
  r.invariants = inv.finish(r.warnings);
}

inline void run_schrodinger(const RunConfig& cfg, RunReport& r) {
  const auto& spec = cfg.wavefunction;
  const PeriodicGrid grid = PeriodicGrid::centered(spec.length, spec.n);
  const Potential V = cfg.potential.build(cfg.consts.m);
  WavefunctionGrid wf{grid, gaussian_packet(grid, spec.x0, spec.sigma, spec.k0), sample_potential(V, grid), cfg.consts};
  const SchrodingerRun run = split_step_propagate(wf, cfg.integrator.dt, cfg.integrator.steps, cfg.integrator.stride);
  r.warnings.insert(r.warnings.end(), run.warnings.begin(), run.warnings.end());
  const FieldHistory history = field_history(run, wf);
  const TrajectorySet traj = trace_bohmian(history, quantile_seeds(history.frames.front().D, grid, spec.seeds));

  const SpectralOps ops(grid);
  Table t{cfg.name + ".csv", {"t", "norm", "energy"}, {}};
  std::vector<double> energy;
  double norm_drift = 0.0;
  for (std::size_t j = 0; j < run.frames.size(); ++j) {
    wf.psi = run.frames[j];
    energy.push_back(dirac_energy(wf, ops));
    const double norm = wf.norm2();
    norm_drift = std::max(norm_drift, std::abs(norm - 1.0));
    t.add({static_cast<double>(j) * run.frame_dt, norm, energy.back()});
  }
  Table x{cfg.name + "_trajectories.csv", concat({"t"}, indexed("x", static_cast<Eigen::Index>(traj.seeds.size()))), {}};
  long violations = 0;
  for (std::size_t j = 0; j < traj.t.size(); ++j) {
    const Eigen::VectorXd& q = traj.q[j];
    for (Eigen::Index k = 0; k + 1 < q.size(); ++k) violations += q[k] < q[k + 1] ? 0 : 1;
    std::vector<double> row{traj.t[j]};
    for (Eigen::Index k = 0; k < q.size(); ++k) row.push_back(q[k]);
    x.add(std::move(row));
  }
  for (std::size_t k = 0; k < traj.truncated.size(); ++k) {
    if (traj.truncated[k]) r.warnings.push_back("trajectory x" + std::to_string(k + 1) + " left the support and was truncated");
  }
  r.tables.push_back(std::move(t));
  r.tables.push_back(std::move(x));
  r.initial_energy = energy.front();
  r.final_energy = energy.back();

  InvariantSet inv(cfg);
  inv.add("energy_drift", relative_drift(energy));
  inv.add("norm_drift", norm_drift);
  inv.add("ordering_violations", static_cast<double>(violations));
  r.invariants = inv.finish(r.warnings);
}

}  // namespace detail

inline RunReport run_scenario(const RunConfig& cfg) {
  RunReport r;
  r.scenario = cfg.name;
  r.type = to_string(cfg.type);
  r.seed = cfg.seed;
  r.dt = cfg.integrator.dt;
  r.steps = cfg.integrator.steps;
  r.warnings = cfg.warnings;
  const auto start = std::chrono::steady_clock::now();
  switch (cfg.type) {
    case ScenarioType::Bohmion: detail::run_bohmion(cfg, r); break;
    case ScenarioType::EF: detail::run_ef(cfg, r); break;
    case ScenarioType::MeanField: detail::run_meanfield(cfg, r); break;
    case ScenarioType::Schrodinger: detail::run_schrodinger(cfg, r); break;
  }
  r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

}  // namespace bohmion::cli
