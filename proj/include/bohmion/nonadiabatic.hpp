#pragma once

// Coupled nuclear-electronic dynamics: the mean-field model and exact-factorization Bohmions
// carrying one electronic density matrix each.
//
// Trace convention: Tr rho_a = w_a, so sum_a Tr rho_a = 1.

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "bohmion/bohmion_qhd.hpp"
#include "bohmion/electronic_model.hpp"
#include "bohmion/ensemble.hpp"
#include "bohmion/errors.hpp"
#include "bohmion/integrators.hpp"
#include "bohmion/kernels.hpp"
#include "bohmion/pair_integrals.hpp"
#include "bohmion/potential.hpp"

namespace bohmion {

// ---- mean field ---------------------------------------------------------------------------------

struct MeanFieldState {
  double q = 0.0;
  double p = 0.0;
  Eigen::VectorXcd psi;

  void validate(double tol = 1e-10) const {
    if (!std::isfinite(q) || !std::isfinite(p)) throw NumericalError("non-finite nuclear phase point");
    if (std::abs(psi.norm() - 1.0) > tol) {
      throw NormalizationError("electronic state has norm " + std::to_string(psi.norm()));
    }
  }
};

/// E = p^2 / 2M + V_n(q) + <psi, H_e(q) psi>
inline double meanfield_energy(const MeanFieldState& s, const Potential& Vn, const ElectronicModel& He,
                               const PhysicalConstants& c) {
  return s.p * s.p / (2.0 * c.M) + Vn.value(s.q) + s.psi.dot(He.H(s.q) * s.psi).real();
}

struct MeanFieldTrajectory {
  std::vector<double> t;
  std::vector<MeanFieldState> states;
  std::vector<double> energy;
  double max_norm_drift = 0.0;
};

/// Strang split: half unitary step of psi under H_e(q), midpoint step of (q, p) with psi frozen,
/// half unitary step under H_e(q').
inline MeanFieldTrajectory meanfield_evolve(const MeanFieldState& s0, const Potential& Vn, const ElectronicModel& He,
                                            const PhysicalConstants& c, const EvolveOptions& opt) {
  opt.validate();
  c.validate();
  s0.validate();
  if (s0.psi.size() != He.dimension()) throw DimensionError("electronic state and model differ in dimension");
  MeanFieldTrajectory out;
  MeanFieldState s = s0;
  const auto record = [&](double t) {
    out.t.push_back(t);
    out.states.push_back(s);
    out.energy.push_back(meanfield_energy(s, Vn, He, c));
  };
  record(0.0);
  for (long step = 1; step <= opt.steps; ++step) {
    detail::apply(s.psi, detail::propagator_ext(He.H(s.q), 0.5 * opt.dt, c.hbar));
    const Eigen::VectorXcd psi = s.psi;
    const auto grad = [&](const Eigen::VectorXd& q, const Eigen::VectorXd& p) {
      const double f = Vn.gradient(q[0]) + psi.dot(He.dH(q[0]) * psi).real();
      return CanonicalGradient{Eigen::VectorXd::Constant(1, f), Eigen::VectorXd::Constant(1, p[0] / c.M)};
    };
    const CanonicalState next = implicit_midpoint_step(
        grad, CanonicalState{Eigen::VectorXd::Constant(1, s.q), Eigen::VectorXd::Constant(1, s.p)}, opt.dt,
        opt.midpoint);
    s.q = next.q[0];
    s.p = next.p[0];
    detail::apply(s.psi, detail::propagator_ext(He.H(s.q), 0.5 * opt.dt, c.hbar));
    out.max_norm_drift = std::max(out.max_norm_drift, std::abs(s.psi.norm() - 1.0));
    if (step % opt.stride == 0 || step == opt.steps) record(static_cast<double>(step) * opt.dt);
  }
  return out;
}

// ---- smoothed electronic Hamiltonian --------------------------------------------------------------

/// \bar H_e(q) = \int H_e(r) K(r - q) dr through the kernel moments.
inline Eigen::MatrixXcd smoothed_He(const ElectronicModel& He, const SmoothingKernel& k, double q) {
  return He.smoothed(k).H(q);
}

/// Same integral by trapezoid quadrature on the grid.
inline Eigen::MatrixXcd smoothed_He(const ElectronicModel& He, const SmoothingKernel& k, const QuadratureGrid& grid,
                                    double q) {
  const int d = He.dimension();
  Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(d, d);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double x = grid.node(i);
    acc += grid.weight(i) * k.value(x - q) * He.H(x);
  }
  return 0.5 * (acc + acc.adjoint());
}

// ---- exact-factorization Bohmions ---------------------------------------------------------------

enum class EFVariant { Hamiltonian, Lagrangian };

inline std::string to_string(EFVariant v) { return v == EFVariant::Hamiltonian ? "hamiltonian" : "lagrangian"; }

struct EFBohmionState {
  BohmionEnsemble ens;
  std::vector<Eigen::MatrixXcd> rho;

  /// rho_a = w_a v_a v_a^dagger with v_a normalized here.
  static EFBohmionState pure(BohmionEnsemble ens, const std::vector<Eigen::VectorXcd>& v) {
    if (static_cast<Eigen::Index>(v.size()) != ens.size()) throw DimensionError("one electronic vector per Bohmion");
    EFBohmionState s{std::move(ens), {}};
    for (std::size_t a = 0; a < v.size(); ++a) s.rho.push_back(pure_density(v[a], s.ens.w[static_cast<Eigen::Index>(a)]));
    return s;
  }

  int dimension() const { return rho.empty() ? 0 : static_cast<int>(rho.front().rows()); }

  void validate(double tol = 1e-10) const {
    ens.validate();
    if (static_cast<Eigen::Index>(rho.size()) != ens.size()) throw DimensionError("one density matrix per Bohmion");
    double total = 0.0;
    for (std::size_t a = 0; a < rho.size(); ++a) {
      if (rho[a].rows() != dimension() || rho[a].cols() != dimension()) {
        throw DimensionError("density matrices differ in dimension");
      }
      validate_density(rho[a], ens.w[static_cast<Eigen::Index>(a)], tol);
      total += rho[a].trace().real();
    }
    if (std::abs(total - 1.0) > tol) throw StructureError("density-matrix traces sum to " + std::to_string(total));
  }
};

/// Surface the electrons see at q_a: \bar H_e in the Hamiltonian variant, H_e itself in the Lagrangian.
inline ElectronicModel electronic_surface(const ElectronicModel& He, const SmoothingKernel& k, EFVariant v) {
  return v == EFVariant::Hamiltonian ? He.smoothed(k) : He;
}

/// G_ab = <rho_a | rho_b> = Tr(rho_a rho_b).
inline Eigen::MatrixXd density_overlaps(const std::vector<Eigen::MatrixXcd>& rho) {
  const auto n = static_cast<Eigen::Index>(rho.size());
  Eigen::MatrixXd g(n, n);
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = a; b < n; ++b) {
      const auto ua = static_cast<std::size_t>(a), ub = static_cast<std::size_t>(b);
      g(a, b) = g(b, a) = (rho[ua].conjugate().cwiseProduct(rho[ub])).sum().real();
    }
  }
  return g;
}

/// Coefficients of I^dKdK in the EF energy: (hbar^2 / 4M)(<rho_a|rho_b> - w_a w_b).
inline Eigen::MatrixXd ef_quantum_coefficients(const EFBohmionState& s, const PhysicalConstants& c) {
  Eigen::MatrixXd g = density_overlaps(s.rho) - s.ens.w * s.ens.w.transpose();
  // pure states give exact zeros on the diagonal
  for (Eigen::Index a = 0; a < g.rows(); ++a) {
    const double w = s.ens.w[a];
    if (std::abs(g(a, a)) <= 1e-14 * w * w) g(a, a) = 0.0;
  }
  return c.hbar * c.hbar / (4.0 * c.M) * g;
}

struct EFTerms {
  double kinetic = 0.0;
  double quantum = 0.0;
  double electronic = 0.0;
  double total() const { return kinetic + quantum + electronic; }
};

/// Hamiltonian variant:
///   h = (1/2M) p^T I^KK p + (hbar^2/4M) sum_ab (<rho_a|rho_b> - w_a w_b) I^dKdK_ab + sum_a <rho_a|\bar H_e(q_a)>
/// Lagrangian variant: kinetic sum_a p_a^2 / (2 M w_a) and H_e(q_a) unfiltered.
inline EFTerms ef_terms(const EFBohmionState& s, const ElectronicModel& He, const SmoothingKernel& k,
                        const QuadratureGrid& grid, const PhysicalConstants& c, EFVariant variant,
                        const QuadratureOptions& opt = {}) {
  s.validate();
  if (s.dimension() != He.dimension()) throw DimensionError("density matrices and electronic model differ in dimension");
  const PairIntegrals I = pair_integrals(s.ens, k, grid, opt);
  const ElectronicModel surf = electronic_surface(He, k, variant);
  EFTerms t;
  if (variant == EFVariant::Hamiltonian) {
    t.kinetic = s.ens.p.dot(I.kk * s.ens.p) / (2.0 * c.M);
  } else {
    for (Eigen::Index a = 0; a < s.ens.size(); ++a) t.kinetic += s.ens.p[a] * s.ens.p[a] / (2.0 * c.M * s.ens.w[a]);
  }
  t.quantum = ef_quantum_coefficients(s, c).cwiseProduct(I.dd).sum();
  for (Eigen::Index a = 0; a < s.ens.size(); ++a) {
    t.electronic += (s.rho[static_cast<std::size_t>(a)] * surf.H(s.ens.q[a])).trace().real();
  }
  return t;
}

inline double ef_hamiltonian(const EFBohmionState& s, const ElectronicModel& He, const SmoothingKernel& k,
                             const QuadratureGrid& grid, const PhysicalConstants& c, EFVariant variant,
                             const QuadratureOptions& opt = {}) {
  return ef_terms(s, He, k, grid, c, variant, opt).total();
}

inline double ef_reg_hamiltonian(const EFBohmionState& s, const ElectronicModel& He, const SmoothingKernel& k,
                                 const QuadratureGrid& grid, const PhysicalConstants& c,
                                 const QuadratureOptions& opt = {}) {
  return ef_hamiltonian(s, He, k, grid, c, EFVariant::Hamiltonian, opt);
}

inline CanonicalGradient ef_grad(const EFBohmionState& s, const ElectronicModel& He, const SmoothingKernel& k,
                                 const QuadratureGrid& grid, const PhysicalConstants& c, EFVariant variant,
                                 const QuadratureOptions& opt = {}) {
  const auto n = s.ens.size();
  const Eigen::MatrixXd ckk = variant == EFVariant::Hamiltonian ? Eigen::MatrixXd(s.ens.p * s.ens.p.transpose() / (2.0 * c.M))
                                                                : Eigen::MatrixXd::Zero(n, n);
  PairIntegrals I;
  Eigen::VectorXd dq = pair_sum_gradient(s.ens, k, grid, ckk, ef_quantum_coefficients(s, c), opt, &I);
  const ElectronicModel surf = electronic_surface(He, k, variant);
  Eigen::VectorXd dp(n);
  for (Eigen::Index a = 0; a < n; ++a) {
    dq[a] += (s.rho[static_cast<std::size_t>(a)] * surf.dH(s.ens.q[a])).trace().real();
    if (variant == EFVariant::Lagrangian) dp[a] = s.ens.p[a] / (c.M * s.ens.w[a]);
  }
  if (variant == EFVariant::Hamiltonian) dp = I.kk * s.ens.p / c.M;
  return {std::move(dq), std::move(dp)};
}

namespace detail {

inline Eigen::MatrixXcd effective_He(const std::vector<Eigen::MatrixXcd>& rho, Eigen::Index a,
                                     const Eigen::MatrixXcd& surface_a, const Eigen::MatrixXd& dd,
                                     const PhysicalConstants& c) {
  Eigen::MatrixXcd h = surface_a;
  const double pref = c.hbar * c.hbar / (2.0 * c.M);
  for (Eigen::Index b = 0; b < dd.rows(); ++b) h += pref * dd(a, b) * rho[static_cast<std::size_t>(b)];
  return 0.5 * (h + h.adjoint());
}

}  // namespace detail

/// Heff_a = (\bar H_e or H_e)(q_a) + (hbar^2 / 2M) sum_b I^dKdK_ab rho_b
inline Eigen::MatrixXcd ef_effective_He(const EFBohmionState& s, Eigen::Index a, const ElectronicModel& He,
                                        const SmoothingKernel& k, const QuadratureGrid& grid,
                                        const PhysicalConstants& c, EFVariant variant,
                                        const QuadratureOptions& opt = {}) {
  s.validate();
  if (a < 0 || a >= s.ens.size()) throw DimensionError("Bohmion index out of range");
  const Eigen::MatrixXd dd = c.hbar == 0.0 ? Eigen::MatrixXd::Zero(s.ens.size(), s.ens.size())
                                           : pair_integral_dKdK(s.ens, k, grid, opt);
  return detail::effective_He(s.rho, a, electronic_surface(He, k, variant).H(s.ens.q[a]), dd, c);
}

struct EFModel {
  ElectronicModel He = ElectronicModel::constant(pauli_z());
  SmoothingKernel kernel = SmoothingKernel::gaussian(1.0);
  PhysicalConstants consts;
  GridPolicy grid;
  EFVariant variant = EFVariant::Hamiltonian;
};

struct EFEvolveOptions {
  EvolveOptions base;
  int rho_substeps = 1;  // symmetric sub-splitting of the density-matrix flow

  void validate() const {
    base.validate();
    if (rho_substeps < 1) throw ConfigError("integrator.rho_substeps must be >= 1");
  }
};

struct EFTrajectory {
  std::vector<double> t;
  std::vector<EFBohmionState> states;
  std::vector<double> energy;
  double max_trace_drift = 0.0;
  double max_spectrum_drift = 0.0;
  double max_purity_drift = 0.0;
  double max_total_trace_drift = 0.0;
};

namespace detail {

/// Density-matrix flow with q frozen: i hbar rho_a' = [Heff_a, rho_a]. Each sub-step is the
/// symmetric composition of the exact one-body flows under the surface and the exact pair flows
/// of c_ab <rho_a|rho_b>, which conserve rho_a + rho_b and so are conjugations by
/// exp(-i c_ab (rho_a + rho_b) t / hbar).
inline void rho_flow(std::vector<Eigen::MatrixXcd>& rho, const std::vector<Eigen::MatrixXcd>& surface,
                     const Eigen::MatrixXd& dd, const PhysicalConstants& c, double tau, int substeps) {
  const auto n = static_cast<Eigen::Index>(rho.size());
  const double h = tau / substeps;
  const double pref = c.hbar * c.hbar / (2.0 * c.M);
  std::vector<std::pair<Eigen::Index, Eigen::Index>> pairs;
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = a + 1; b < n; ++b) {
      if (pref * dd(a, b) != 0.0) pairs.emplace_back(a, b);
    }
  }
  std::vector<MatrixXcx> half(rho.size()), full(rho.size());
  for (std::size_t a = 0; a < rho.size(); ++a) {
    half[a] = propagator_ext(surface[a], 0.5 * h, c.hbar);
    full[a] = propagator_ext(surface[a], h, c.hbar);
  }
  const auto pair = [&](std::size_t j, double t) {
    const auto [a, b] = pairs[j];
    const auto ua = static_cast<std::size_t>(a), ub = static_cast<std::size_t>(b);
    const MatrixXcx u = propagator_ext(pref * dd(a, b) * (rho[ua] + rho[ub]), t, c.hbar);
    conjugate(rho[ua], u);
    conjugate(rho[ub], u);
  };
  // E(h/2) P_1(h/2) .. P_k(h) .. P_1(h/2) E(h/2), with adjacent one-body half steps fused
  for (int s = 0; s < substeps; ++s) {
    const auto& first = s == 0 ? half : full;
    for (std::size_t a = 0; a < rho.size(); ++a) conjugate(rho[a], first[a]);
    const std::size_t k = pairs.size();
    for (std::size_t j = 0; j < k; ++j) pair(j, j + 1 == k ? h : 0.5 * h);
    for (std::size_t j = k > 0 ? k - 1 : 0; j-- > 0;) pair(j, 0.5 * h);
  }
  for (std::size_t a = 0; a < rho.size(); ++a) conjugate(rho[a], half[a]);
}

}  // namespace detail

/// Strang composite: rho flow (dt/2), midpoint on (q, p) with rho frozen (dt), rho flow (dt/2).
inline EFTrajectory ef_evolve(const EFBohmionState& s0, const EFModel& m, const EFEvolveOptions& opt) {
  opt.validate();
  m.consts.validate(true);
  s0.validate();
  if (s0.dimension() != m.He.dimension()) throw DimensionError("density matrices and electronic model differ in dimension");
  const PhysicalConstants& c = m.consts;
  const ElectronicModel surf = electronic_surface(m.He, m.kernel, m.variant);
  const auto n = s0.ens.size();

  std::vector<double> trace0, purity0;
  std::vector<Eigen::VectorXd> spec0;
  for (const auto& r : s0.rho) {
    trace0.push_back(r.trace().real());
    purity0.push_back(purity(r));
    spec0.push_back(density_spectrum(r));
  }

  EFTrajectory out;
  EFBohmionState s = s0;
  const auto energy = [&](const EFBohmionState& x) {
    return ef_hamiltonian(x, m.He, m.kernel, m.grid.grid_for(m.kernel, x.ens.q), c, m.variant, m.grid.quad);
  };
  const auto record = [&](double t) {
    out.t.push_back(t);
    out.states.push_back(s);
    out.energy.push_back(energy(s));
  };
  const auto half_flow = [&]() {
    std::vector<Eigen::MatrixXcd> surface(static_cast<std::size_t>(n));
    for (Eigen::Index a = 0; a < n; ++a) surface[static_cast<std::size_t>(a)] = surf.H(s.ens.q[a]);
    const Eigen::MatrixXd dd = c.hbar == 0.0 || n == 1
                                   ? Eigen::MatrixXd::Zero(n, n)
                                   : pair_integral_dKdK(s.ens, m.kernel, m.grid.grid_for(m.kernel, s.ens.q), m.grid.quad);
    detail::rho_flow(s.rho, surface, dd, c, 0.5 * opt.base.dt, n == 1 ? 1 : opt.rho_substeps);
  };

  record(0.0);
  for (long step = 1; step <= opt.base.steps; ++step) {
    half_flow();
    EFBohmionState probe = s;
    const auto grad = [&](const Eigen::VectorXd& q, const Eigen::VectorXd& p) {
      probe.ens.q = q;
      probe.ens.p = p;
      return ef_grad(probe, m.He, m.kernel, m.grid.grid_for(m.kernel, q), c, m.variant, m.grid.quad);
    };
    const CanonicalState next =
        implicit_midpoint_step(grad, CanonicalState{s.ens.q, s.ens.p}, opt.base.dt, opt.base.midpoint);
    s.ens.q = next.q;
    s.ens.p = next.p;
    half_flow();

    double total = 0.0;
    for (std::size_t a = 0; a < s.rho.size(); ++a) {
      const double tr = s.rho[a].trace().real();
      total += tr;
      out.max_trace_drift = std::max(out.max_trace_drift, std::abs(tr - trace0[a]));
      out.max_purity_drift = std::max(out.max_purity_drift, std::abs(purity(s.rho[a]) - purity0[a]));
      out.max_spectrum_drift =
          std::max(out.max_spectrum_drift, (density_spectrum(s.rho[a]) - spec0[a]).cwiseAbs().maxCoeff());
    }
    out.max_total_trace_drift = std::max(out.max_total_trace_drift, std::abs(total - 1.0));
    if (step % opt.base.stride == 0 || step == opt.base.steps) record(static_cast<double>(step) * opt.base.dt);
  }
  return out;
}

}  // namespace bohmion
