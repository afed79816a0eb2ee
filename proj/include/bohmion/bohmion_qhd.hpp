#pragma once

// Single-surface Bohmion dynamics: the Hamiltonian regularization (smoothed mu and D), the
// Lagrangian regularization (only the hbar^2 term smoothed), and the cold-fluid closure.
//
// Momentum convention shared by all three modes: an isolated Bohmion moves with
// q'_a = p_a / (M w_a), i.e. p_a is the momentum carried by the fluid parcel a.

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bohmion/ensemble.hpp"
#include "bohmion/errors.hpp"
#include "bohmion/integrators.hpp"
#include "bohmion/kernels.hpp"
#include "bohmion/pair_integrals.hpp"
#include "bohmion/potential.hpp"

namespace bohmion {

enum class Regularization { Hamiltonian, Lagrangian, Classical };

inline std::string to_string(Regularization r) {
  switch (r) {
    case Regularization::Hamiltonian: return "hamiltonian";
    case Regularization::Lagrangian: return "lagrangian";
    case Regularization::Classical: return "classical";
  }
  return "unknown";
}

/// How quadrature grids are chosen: a fixed grid, or a lattice-aligned grid rebuilt around the
/// current positions at every evaluation.
struct GridPolicy {
  QuadratureOptions quad;
  std::optional<QuadratureGrid> fixed;

  QuadratureGrid grid_for(const SmoothingKernel& k, const Eigen::VectorXd& q) const {
    if (fixed) return *fixed;
    return covering_grid(k, {q.data(), static_cast<std::size_t>(q.size())}, quad);
  }
};

struct RqhdModel {
  Potential V = Potential::zero();
  SmoothingKernel kernel = SmoothingKernel::gaussian(1.0);
  PhysicalConstants consts;
  GridPolicy grid;
};

struct RqhdTerms {
  double kinetic = 0.0;    // (1/2M) sum p_a p_b I^KK_ab
  double quantum = 0.0;    // (hbar^2/8M) sum w_a w_b I^dKdK_ab
  double potential = 0.0;  // sum w_a (K*V)(q_a)
  double total() const { return kinetic + quantum + potential; }
};

inline RqhdTerms rqhd_terms(const BohmionEnsemble& ens, const Potential& V, const SmoothingKernel& k,
                            const QuadratureGrid& grid, const PhysicalConstants& c,
                            const QuadratureOptions& opt = {}) {
  ens.validate();
  const PairIntegrals I = pair_integrals(ens, k, grid, opt);
  const Potential kv = V.smoothed(k);
  RqhdTerms t;
  t.kinetic = ens.p.dot(I.kk * ens.p) / (2.0 * c.M);
  t.quantum = c.hbar * c.hbar / (8.0 * c.M) * ens.w.dot(I.dd * ens.w);
  for (Eigen::Index a = 0; a < ens.size(); ++a) t.potential += ens.w[a] * kv.value(ens.q[a]);
  return t;
}

inline double rqhd_hamiltonian(const BohmionEnsemble& ens, const Potential& V, const SmoothingKernel& k,
                               const QuadratureGrid& grid, const PhysicalConstants& c,
                               const QuadratureOptions& opt = {}) {
  return rqhd_terms(ens, V, k, grid, c, opt).total();
}

inline double rqhd_hamiltonian(const BohmionEnsemble& ens, const RqhdModel& m) {
  return rqhd_hamiltonian(ens, m.V, m.kernel, m.grid.grid_for(m.kernel, ens.q), m.consts, m.grid.quad);
}

/// dh/dq split by origin.
struct RqhdForceTerms {
  Eigen::VectorXd kinetic;
  Eigen::VectorXd quantum;
  Eigen::VectorXd potential;
  Eigen::VectorXd dp;  // dh/dp = I^KK p / M
};

inline RqhdForceTerms rqhd_grad_terms(const BohmionEnsemble& ens, const Potential& V, const SmoothingKernel& k,
                                      const QuadratureGrid& grid, const PhysicalConstants& c,
                                      const QuadratureOptions& opt = {}) {
  ens.validate();
  const auto n = ens.size();
  const Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(n, n);
  PairIntegrals I;
  RqhdForceTerms f;
  f.kinetic = pair_sum_gradient(ens, k, grid, ens.p * ens.p.transpose() / (2.0 * c.M), zero, opt, &I);
  f.quantum = pair_sum_gradient(ens, k, grid, zero, c.hbar * c.hbar / (8.0 * c.M) * ens.w * ens.w.transpose(), opt);
  const Potential kv = V.smoothed(k);
  f.potential.resize(n);
  for (Eigen::Index a = 0; a < n; ++a) f.potential[a] = ens.w[a] * kv.gradient(ens.q[a]);
  f.dp = I.kk * ens.p / c.M;
  return f;
}

inline CanonicalGradient rqhd_grad(const BohmionEnsemble& ens, const Potential& V, const SmoothingKernel& k,
                                   const QuadratureGrid& grid, const PhysicalConstants& c,
                                   const QuadratureOptions& opt = {}) {
  ens.validate();
  PairIntegrals I;
  Eigen::VectorXd dq = pair_sum_gradient(ens, k, grid, ens.p * ens.p.transpose() / (2.0 * c.M),
                                         c.hbar * c.hbar / (8.0 * c.M) * ens.w * ens.w.transpose(), opt, &I);
  const Potential kv = V.smoothed(k);
  for (Eigen::Index a = 0; a < ens.size(); ++a) dq[a] += ens.w[a] * kv.gradient(ens.q[a]);
  return {std::move(dq), I.kk * ens.p / c.M};
}

inline CanonicalGradient rqhd_grad(const BohmionEnsemble& ens, const RqhdModel& m) {
  return rqhd_grad(ens, m.V, m.kernel, m.grid.grid_for(m.kernel, ens.q), m.consts, m.grid.quad);
}

// ---- Lagrangian regularization ----------------------------------------------------------------
//
// L = sum_a (M w_a / 2) q'_a^2 - sum_a w_a V(q_a) - (hbar^2 / 8M) sum_ab w_a w_b I^dKdK_ab,
// evolved canonically with p_a = M w_a q'_a:
//   h_L = sum_a p_a^2 / (2 M w_a) + sum_a w_a V(q_a) + (hbar^2 / 8M) w^T I^dKdK w.

inline double lagrangian_energy(const BohmionEnsemble& ens, const Potential& V, const SmoothingKernel& k,
                                const QuadratureGrid& grid, const PhysicalConstants& c,
                                const QuadratureOptions& opt = {}) {
  ens.validate();
  double h = 0.0;
  for (Eigen::Index a = 0; a < ens.size(); ++a) {
    h += ens.p[a] * ens.p[a] / (2.0 * c.M * ens.w[a]) + ens.w[a] * V.value(ens.q[a]);
  }
  if (c.hbar != 0.0) h += c.hbar * c.hbar / (8.0 * c.M) * ens.w.dot(pair_integral_dKdK(ens, k, grid, opt) * ens.w);
  return h;
}

/// d/dq_a of (hbar^2 / 8M) w^T I^dKdK w.
inline Eigen::VectorXd lagrangian_quantum_gradient(const BohmionEnsemble& ens, const SmoothingKernel& k,
                                                   const QuadratureGrid& grid, const PhysicalConstants& c,
                                                   const QuadratureOptions& opt = {}) {
  const auto n = ens.size();
  if (c.hbar == 0.0) return Eigen::VectorXd::Zero(n);
  return pair_sum_gradient(ens, k, grid, Eigen::MatrixXd::Zero(n, n),
                           c.hbar * c.hbar / (8.0 * c.M) * ens.w * ens.w.transpose(), opt);
}

inline CanonicalGradient lagrangian_grad(const BohmionEnsemble& ens, const Potential& V, const SmoothingKernel& k,
                                         const QuadratureGrid& grid, const PhysicalConstants& c,
                                         const QuadratureOptions& opt = {}) {
  ens.validate();
  Eigen::VectorXd dq = lagrangian_quantum_gradient(ens, k, grid, c, opt);
  Eigen::VectorXd dp(ens.size());
  for (Eigen::Index a = 0; a < ens.size(); ++a) {
    dq[a] += ens.w[a] * V.gradient(ens.q[a]);
    dp[a] = ens.p[a] / (c.M * ens.w[a]);
  }
  return {std::move(dq), std::move(dp)};
}

/// q''_a = -V'(q_a) / M - (1 / (M w_a)) d/dq_a [(hbar^2 / 8M) w^T I^dKdK w]. V is not smoothed.
inline Eigen::VectorXd lagrangian_reg_accel(const BohmionEnsemble& ens, const Potential& V, const SmoothingKernel& k,
                                            const QuadratureGrid& grid, const PhysicalConstants& c,
                                            const QuadratureOptions& opt = {}) {
  ens.validate();
  const Eigen::VectorXd g = lagrangian_quantum_gradient(ens, k, grid, c, opt);
  Eigen::VectorXd acc(ens.size());
  for (Eigen::Index a = 0; a < ens.size(); ++a) acc[a] = -V.gradient(ens.q[a]) / c.M - g[a] / (c.M * ens.w[a]);
  return acc;
}

// ---- time evolution ---------------------------------------------------------------------------

struct EvolveOptions {
  double dt = 1e-3;
  long steps = 0;
  long stride = 1;
  MidpointOptions midpoint;

  void validate() const {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("integrator.dt must be positive");
    if (steps < 0) throw ConfigError("integrator.steps must be non-negative");
    if (stride < 1) throw ConfigError("integrator.stride must be >= 1");
  }
};

struct BohmionTrajectory {
  std::vector<double> t;
  std::vector<BohmionEnsemble> states;
  std::vector<double> energy;
};

namespace detail {

/// Midpoint loop shared by the Bohmion modes; grad and energy take a full ensemble.
template <class Grad, class Energy>
BohmionTrajectory evolve_canonical(const BohmionEnsemble& ens0, const EvolveOptions& opt, Grad&& grad,
                                   Energy&& energy) {
  opt.validate();
  ens0.validate();
  BohmionTrajectory out;
  BohmionEnsemble ens = ens0;
  out.t.push_back(0.0);
  out.states.push_back(ens);
  out.energy.push_back(energy(ens));
  BohmionEnsemble probe = ens0;
  const auto g = [&](const Eigen::VectorXd& q, const Eigen::VectorXd& p) {
    probe.q = q;
    probe.p = p;
    return grad(probe);
  };
  for (long s = 1; s <= opt.steps; ++s) {
    const CanonicalState next = implicit_midpoint_step(g, CanonicalState{ens.q, ens.p}, opt.dt, opt.midpoint);
    ens.q = next.q;
    ens.p = next.p;
    if (s % opt.stride == 0 || s == opt.steps) {
      out.t.push_back(static_cast<double>(s) * opt.dt);
      out.states.push_back(ens);
      out.energy.push_back(energy(ens));
    }
  }
  return out;
}

}  // namespace detail

/// Implicit-midpoint flow of the Hamiltonian-regularized Bohmion system.
inline BohmionTrajectory evolve_rqhd(const BohmionEnsemble& ens0, const RqhdModel& m, const EvolveOptions& opt) {
  m.consts.validate(true);
  return detail::evolve_canonical(
      ens0, opt, [&](const BohmionEnsemble& e) { return rqhd_grad(e, m); },
      [&](const BohmionEnsemble& e) { return rqhd_hamiltonian(e, m); });
}

/// Implicit-midpoint flow of the Lagrangian-regularized system in canonical form.
inline BohmionTrajectory evolve_lagrangian(const BohmionEnsemble& ens0, const RqhdModel& m, const EvolveOptions& opt) {
  m.consts.validate(true);
  return detail::evolve_canonical(
      ens0, opt,
      [&](const BohmionEnsemble& e) {
        return lagrangian_grad(e, m.V, m.kernel, m.grid.grid_for(m.kernel, e.q), m.consts, m.grid.quad);
      },
      [&](const BohmionEnsemble& e) {
        return lagrangian_energy(e, m.V, m.kernel, m.grid.grid_for(m.kernel, e.q), m.consts, m.grid.quad);
      });
}

/// Cold-fluid closure: N uncoupled Newtonian particles M w_a q''_a = -w_a V'(q_a).
/// Each particle is advanced by its own one-dimensional midpoint solve, so a joint run is
/// bitwise identical to running the particles one at a time.
inline BohmionTrajectory classical_closure_evolve(const BohmionEnsemble& ens0, const Potential& V,
                                                  const PhysicalConstants& c, const EvolveOptions& opt) {
  opt.validate();
  c.validate(true);
  ens0.validate();
  const auto energy = [&](const BohmionEnsemble& e) {
    double h = 0.0;
    for (Eigen::Index a = 0; a < e.size(); ++a) h += e.p[a] * e.p[a] / (2.0 * c.M * e.w[a]) + e.w[a] * V.value(e.q[a]);
    return h;
  };
  BohmionTrajectory out;
  BohmionEnsemble ens = ens0;
  out.t.push_back(0.0);
  out.states.push_back(ens);
  out.energy.push_back(energy(ens));
  for (long s = 1; s <= opt.steps; ++s) {
    for (Eigen::Index a = 0; a < ens.size(); ++a) {
      const double w = ens.w[a];
      const auto g = [&](const Eigen::VectorXd& q, const Eigen::VectorXd& p) {
        return CanonicalGradient{Eigen::VectorXd::Constant(1, w * V.gradient(q[0])),
                                 Eigen::VectorXd::Constant(1, p[0] / (c.M * w))};
      };
      const CanonicalState next = implicit_midpoint_step(
          g, CanonicalState{Eigen::VectorXd::Constant(1, ens.q[a]), Eigen::VectorXd::Constant(1, ens.p[a])}, opt.dt,
          opt.midpoint);
      ens.q[a] = next.q[0];
      ens.p[a] = next.p[0];
    }
    if (s % opt.stride == 0 || s == opt.steps) {
      out.t.push_back(static_cast<double>(s) * opt.dt);
      out.states.push_back(ens);
      out.energy.push_back(energy(ens));
    }
  }
  return out;
}

inline BohmionTrajectory evolve(const BohmionEnsemble& ens0, const RqhdModel& m, Regularization mode,
                                const EvolveOptions& opt) {
  switch (mode) {
    case Regularization::Hamiltonian: return evolve_rqhd(ens0, m, opt);
    case Regularization::Lagrangian: return evolve_lagrangian(ens0, m, opt);
    case Regularization::Classical: return classical_closure_evolve(ens0, m.V, m.consts, opt);
  }
  throw ConfigError("unknown regularization mode");
}

struct SmoothedFields {
  Eigen::VectorXd x;
  Eigen::VectorXd mu;  // sum_a p_a K(x - q_a)
  Eigen::VectorXd D;   // sum_a w_a K(x - q_a)
};

inline SmoothedFields reconstruct_fields(const BohmionEnsemble& ens, const SmoothingKernel& k,
                                         const QuadratureGrid& grid) {
  ens.validate();
  const auto n = static_cast<Eigen::Index>(grid.size());
  SmoothedFields f{Eigen::VectorXd(n), Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    const double x = grid.node(static_cast<std::size_t>(i));
    f.x[i] = x;
    for (Eigen::Index a = 0; a < ens.size(); ++a) {
      const double kv = k.value(x - ens.q[a]);
      f.mu[i] += ens.p[a] * kv;
      f.D[i] += ens.w[a] * kv;
    }
  }
  return f;
}

/// Trapezoid integral of a field sampled on the grid nodes.
inline double integrate(const Eigen::VectorXd& f, const QuadratureGrid& grid) {
  double acc = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) acc += grid.weight(i) * f[static_cast<Eigen::Index>(i)];
  return acc;
}

}  // namespace bohmion
