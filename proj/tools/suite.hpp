#pragma once

// `bohmion check`: the invariant and property suites of every module at fixed seeds, plus a
// mutation self-test showing that the energy invariant catches a sign error in the quantum force.

#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <boost/math/quadrature/exp_sinh.hpp>

#include "bohmion/bohmion.hpp"

namespace bohmion::cli {

struct CheckResult {
  std::string module;
  std::string name;
  double value = 0.0;
  double bound = 0.0;
  bool at_least = false;  // value >= bound instead of value <= bound

  bool pass() const { return std::isfinite(value) && (at_least ? value >= bound : value <= bound); }
};

// ---- mutation fixture -------------------------------------------------------------------------

/// Hamiltonian-mode evolution assembled from rqhd_grad_terms with the quantum force scaled by
/// `quantum_sign`. +1 reproduces evolve_rqhd; -1 is the injected sign error.
inline BohmionTrajectory evolve_rqhd_mutated(const BohmionEnsemble& ens0, const RqhdModel& m, const EvolveOptions& opt,
                                             double quantum_sign) {
  return bohmion::detail::evolve_canonical(
      ens0, opt,
      [&](const BohmionEnsemble& e) {
        const RqhdForceTerms f = rqhd_grad_terms(e, m.V, m.kernel, m.grid.grid_for(m.kernel, e.q), m.consts, m.grid.quad);
        return CanonicalGradient{f.kinetic + quantum_sign * f.quantum + f.potential, f.dp};
      },
      [&](const BohmionEnsemble& e) { return rqhd_hamiltonian(e, m); });
}

inline double max_relative_drift(const std::vector<double>& e) {
  double out = 0.0;
  for (double x : e) out = std::max(out, std::abs(x - e.front()) / std::abs(e.front()));
  return out;
}

namespace detail {

inline Eigen::VectorXcd random_smooth_state(std::mt19937_64& rng, const PeriodicGrid& g) {
  std::normal_distribution<double> n;
  const int modes = 6;
  std::vector<cplx> c(2 * modes + 1);
  for (auto& z : c) z = 0.3 * cplx(n(rng), n(rng));
  Eigen::VectorXcd psi(g.size());
  const double k = 2.0 * std::numbers::pi / g.length();
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    cplx e = 0.0;
    for (int m = -modes; m <= modes; ++m) e += c[static_cast<std::size_t>(m + modes)] * std::exp(cplx(0.0, k * m * g.x(i)));
    psi[i] = std::exp(e);
  }
  return psi / std::sqrt(psi.squaredNorm() * g.spacing());
}

/// Periodic normalized C^d field dominated by a constant vector, with a few smooth harmonics.
inline ElectronicField random_field(std::mt19937_64& rng, int d, double length, int n) {
  std::normal_distribution<double> g;
  const int modes = 3;
  std::vector<Eigen::VectorXcd> c;
  for (int m = -modes; m <= modes; ++m) {
    Eigen::VectorXcd v(d);
    for (int i = 0; i < d; ++i) v[i] = cplx(g(rng), g(rng));
    c.push_back(m == 0 ? Eigen::VectorXcd(2.0 * v.normalized()) : Eigen::VectorXcd(0.25 / (1.0 + std::abs(m)) * v));
  }
  const double k = 2.0 * std::numbers::pi / length;
  return ElectronicField::sample(
      [&](double r) {
        Eigen::VectorXcd v = Eigen::VectorXcd::Zero(d);
        for (int m = -modes; m <= modes; ++m) v += c[static_cast<std::size_t>(m + modes)] * std::exp(cplx(0.0, k * m * r));
        return Eigen::VectorXcd(v.normalized());
      },
      0.0, length / n, n, true);
}

inline BohmionEnsemble ensemble(std::vector<double> q, std::vector<double> p, std::vector<double> w) {
  const auto n = static_cast<Eigen::Index>(q.size());
  return {Eigen::Map<Eigen::VectorXd>(q.data(), n), Eigen::Map<Eigen::VectorXd>(p.data(), n),
          Eigen::Map<Eigen::VectorXd>(w.data(), n)};
}

inline double fd_gradient_error(const BohmionEnsemble& e, const std::function<double(const BohmionEnsemble&)>& h,
                                const CanonicalGradient& g) {
  double err = 0.0;
  const double eps = 1e-5;
  for (Eigen::Index a = 0; a < e.size(); ++a) {
    for (int which = 0; which < 2; ++which) {
      BohmionEnsemble plus = e, minus = e;
      (which == 0 ? plus.q : plus.p)[a] += eps;
      (which == 0 ? minus.q : minus.p)[a] -= eps;
      const double fd = (h(plus) - h(minus)) / (2.0 * eps);
      const double an = which == 0 ? g.dq[a] : g.dp[a];
      err = std::max(err, std::abs(fd - an) / std::max(1.0, std::abs(an)));
    }
  }
  return err;
}

}  // namespace detail

inline std::vector<CheckResult> run_checks(std::uint64_t seed) {
  std::vector<CheckResult> out;
  std::mt19937_64 rng(seed);
  const auto le = [&](const char* module, const char* name, double v, double bound) {
    out.push_back({module, name, v, bound, false});
  };
  const auto ge = [&](const char* module, const char* name, double v, double bound) {
    out.push_back({module, name, v, bound, true});
  };

  // kernels
  {
    boost::math::quadrature::exp_sinh<double> integrator;
    double err = 0.0;
    for (const SmoothingKernel k : {SmoothingKernel::gaussian(0.7), SmoothingKernel::helmholtz(0.7)}) {
      const double mass = 2.0 * integrator.integrate([&](double x) { return k.value(x); }, 0.0,
                                                     std::numeric_limits<double>::infinity());
      err = std::max(err, std::abs(mass - 1.0));
    }
    le("kernels", "normalization", err, 1e-10);
  }

  // pair integrals: density-weighted self overlaps of one Bohmion, I^KK = 1/w and I^dKdK = 1/alpha^2
  {
    double err = 0.0;
    const BohmionEnsemble one = detail::ensemble({0.3}, {0.0}, {1.0});
    const double a = 0.8;
    for (const SmoothingKernel k : {SmoothingKernel::gaussian(a), SmoothingKernel::helmholtz(a)}) {
      const auto I = pair_integrals(one, k, covering_grid(k, one.positions()));
      err = std::max({err, std::abs(I.kk(0, 0) - 1.0), std::abs(I.dd(0, 0) * a * a - 1.0)});
    }
    le("pair_integrals", "self_overlaps", err, 1e-8);
  }

  // integrators
  {
    CanonicalState s{Eigen::VectorXd::Constant(1, 1.0), Eigen::VectorXd::Constant(1, 0.0)};
    const auto grad = [](const Eigen::VectorXd& q, const Eigen::VectorXd& p) { return CanonicalGradient{q, p}; };
    double drift = 0.0;
    for (int i = 0; i < 10000; ++i) {
      s = implicit_midpoint_step(grad, s, 1e-2);
      drift = std::max(drift, std::abs(0.5 * (s.q[0] * s.q[0] + s.p[0] * s.p[0]) - 0.5));
    }
    le("integrators", "midpoint_quadratic_energy", drift, 1e-12);

    std::normal_distribution<double> n;
    Eigen::MatrixXcd h(4, 4), v(4, 4);
    for (int i = 0; i < 4; ++i) {
      for (int j = 0; j < 4; ++j) {
        h(i, j) = cplx(n(rng), n(rng));
        v(i, j) = cplx(n(rng), n(rng));
      }
    }
    h = 0.5 * (h + h.adjoint()).eval();
    Eigen::MatrixXcd rho = v * v.adjoint();
    rho /= rho.trace().real();
    const Eigen::VectorXd spec0 = density_spectrum(rho);
    for (int i = 0; i < 1000; ++i) rho = unitary_step(rho, h, 1e-2);
    le("integrators", "unitary_trace", std::abs(rho.trace().real() - 1.0), 1e-11);
    le("integrators", "unitary_spectrum", (density_spectrum(rho) - spec0).cwiseAbs().maxCoeff(), 1e-11);
  }

  // qhd_reference
  {
    const PeriodicGrid g = PeriodicGrid::centered(20.0, 512);
    const SpectralOps ops(g);
    const Eigen::VectorXd V = sample_potential(Potential::harmonic(1.0, 0.3), g);
    double err = 0.0;
    for (int i = 0; i < 10; ++i) {
      const WavefunctionGrid wf{g, detail::random_smooth_state(rng, g), V, {}};
      const double e = dirac_energy(wf, ops);
      err = std::max(err, std::abs(e - collective_energy(madelung_fields(wf, ops), V, wf.consts, ops)) / std::abs(e));
    }
    le("qhd_reference", "collectivization_identity", err, 1e-8);

    const PeriodicGrid gw = PeriodicGrid::centered(40.0, 1024);
    const WavefunctionGrid packet{gw, gaussian_packet(gw, 0.0, 1.0), Eigen::VectorXd::Zero(gw.size()), {}};
    const SchrodingerRun run = split_step_propagate(packet, 1e-3, 1000, 10);
    le("qhd_reference", "unitarity_per_1000_steps", run.max_norm_drift, 1e-12);
    const FieldHistory hist = field_history(run, packet);
    const TrajectorySet tr = trace_bohmian(hist, quantile_seeds(hist.frames.front().D, gw, 15));
    double crossings = 0.0;
    for (const auto& q : tr.q) {
      for (Eigen::Index k = 0; k + 1 < q.size(); ++k) crossings += q[k] < q[k + 1] ? 0.0 : 1.0;
    }
    le("qhd_reference", "non_crossing", crossings, 0.0);
  }

  // bohmion_qhd
  {
    RqhdModel m;
    m.V = Potential::harmonic(1.0, 1.0);
    m.kernel = SmoothingKernel::gaussian(0.5);
    const BohmionEnsemble e0 = detail::ensemble({-0.6, 0.1, 0.7}, {0.3, -0.2, 0.1}, {0.3, 0.3, 0.4});
    EvolveOptions opt;
    opt.dt = 1e-3;
    opt.steps = 2000;
    opt.stride = 50;
    le("bohmion_qhd", "energy_drift", max_relative_drift(evolve_rqhd(e0, m, opt).energy), 1e-8);
    ge("bohmion_qhd", "mutation_detected", max_relative_drift(evolve_rqhd_mutated(e0, m, opt, -1.0).energy), 1e-6);

    RqhdModel free = m;
    free.V = Potential::zero();
    double dp = 0.0;
    for (Regularization mode : {Regularization::Hamiltonian, Regularization::Lagrangian}) {
      const BohmionTrajectory tr = evolve(e0, free, mode, opt);
      for (const auto& s : tr.states) dp = std::max(dp, std::abs(s.p.sum() - e0.p.sum()));
    }
    le("bohmion_qhd", "momentum_drift", dp, 1e-11);

    std::uniform_real_distribution<double> u(-1.0, 1.0), uw(0.2, 1.0);
    double err = 0.0;
    for (int i = 0; i < 5; ++i) {
      BohmionEnsemble e = detail::ensemble({u(rng), u(rng), u(rng)}, {u(rng), u(rng), u(rng)},
                                           {uw(rng), uw(rng), uw(rng)});
      e.normalize_weights();
      const auto h = [&](const BohmionEnsemble& x) {
        return rqhd_hamiltonian(x, m.V, m.kernel, m.grid.grid_for(m.kernel, e.q), m.consts);
      };
      err = std::max(err, detail::fd_gradient_error(e, h, rqhd_grad(e, m.V, m.kernel, m.grid.grid_for(m.kernel, e.q), m.consts)));
    }
    le("bohmion_qhd", "gradient_oracle", err, 1e-6);

    // hbar -> 0 against the cold-fluid closure
    RqhdModel lag = m;
    const BohmionEnsemble e2 = detail::ensemble({-0.4, 0.5}, {0.1, 0.0}, {0.5, 0.5});
    EvolveOptions o2;
    o2.dt = 1e-2;
    o2.steps = 500;
    o2.stride = 10;
    const BohmionTrajectory cl = classical_closure_evolve(e2, lag.V, lag.consts, o2);
    std::vector<double> gaps;
    for (double hbar : {0.3, 0.1, 0.03, 0.0}) {
      lag.consts.hbar = hbar;
      const BohmionTrajectory tr = evolve_lagrangian(e2, lag, o2);
      double gap = 0.0;
      for (std::size_t j = 0; j < tr.states.size(); ++j) {
        gap = std::max(gap, (tr.states[j].q - cl.states[j].q).cwiseAbs().maxCoeff());
      }
      gaps.push_back(gap);
    }
    double worst = 0.0;
    for (std::size_t j = 0; j + 1 < gaps.size(); ++j) worst = std::max(worst, gaps[j + 1] / gaps[j]);
    le("bohmion_qhd", "hbar_sweep_monotone_ratio", worst, 1.0 - 1e-3);
    le("bohmion_qhd", "hbar0_matches_closure", gaps.back(), 1e-12);
  }

  // nonadiabatic
  {
    EFModel m;
    m.He = ElectronicModel::linear_vibronic(1.0, 0.5);
    const Eigen::VectorXcd v1 = Eigen::VectorXcd::Unit(2, 0);
    Eigen::VectorXcd v2(2);
    v2 << 0.6, cplx(0.0, 0.8);
    const EFBohmionState s0 = EFBohmionState::pure(detail::ensemble({-0.5, 0.5}, {0.2, -0.1}, {0.5, 0.5}), {v1, v2});
    EFEvolveOptions opt;
    opt.base.dt = 1e-3;
    opt.base.steps = 2000;
    opt.base.stride = 100;
    double purity = 0.0;
    for (EFVariant variant : {EFVariant::Hamiltonian, EFVariant::Lagrangian}) {
      m.variant = variant;
      const EFTrajectory tr = ef_evolve(s0, m, opt);
      if (variant == EFVariant::Hamiltonian) {
        le("nonadiabatic", "ef_energy_drift", max_relative_drift(tr.energy), 1e-7);
        le("nonadiabatic", "ef_trace_drift", tr.max_trace_drift, 1e-12);
        le("nonadiabatic", "ef_spectrum_drift", tr.max_spectrum_drift, 1e-11);
      }
      purity = std::max(purity, tr.max_purity_drift);
    }
    le("nonadiabatic", "ef_purity_drift", purity, 1e-11);

    m.variant = EFVariant::Hamiltonian;
    m.kernel = SmoothingKernel::gaussian(0.6);
    const EFBohmionState one = EFBohmionState::pure(detail::ensemble({0.2}, {0.1}, {1.0}), {v2});
    opt.base.dt = 1e-2;
    opt.base.steps = 200;
    opt.base.stride = 20;
    const EFTrajectory ef = ef_evolve(one, m, opt);
    const MeanFieldTrajectory mf = meanfield_evolve({0.2, 0.1, v2}, Potential::zero(), m.He.smoothed(m.kernel), {}, opt.base);
    double gap = 0.0;
    for (std::size_t j = 0; j < ef.t.size(); ++j) {
      gap = std::max({gap, std::abs(ef.states[j].ens.q[0] - mf.states[j].q), std::abs(ef.states[j].ens.p[0] - mf.states[j].p)});
    }
    le("nonadiabatic", "single_bohmion_is_mean_field", gap, 1e-12);
  }

  // geometry
  {
    const PhysicalConstants c;
    double tmin = INFINITY, gauge = 0.0;
    for (int i = 0; i < 5; ++i) {
      const ElectronicField f = detail::random_field(rng, 3, 2.0 * std::numbers::pi, 1024);
      const QGTData q = qgt(f, c);
      tmin = std::min(tmin, q.T.minCoeff());
      ElectronicField shifted = f;
      for (std::size_t j = 0; j < f.size(); ++j) shifted.psi[j] *= std::exp(cplx(0.0, 0.7 * std::sin(f.r(j))));
      gauge = std::max(gauge, (qgt(shifted, c).T - q.T).cwiseAbs().maxCoeff());
    }
    ge("geometry", "qgt_positivity", tmin, -1e-12);
    le("geometry", "qgt_gauge_invariance", gauge, 1e-6);

    const double length = 3.0;
    const Eigen::VectorXcd phi0 = Eigen::VectorXcd::Unit(2, 1);
    const ElectronicField wind = ElectronicField::sample(
        [&](double r) { return Eigen::VectorXcd(std::exp(cplx(0.0, 2.0 * std::numbers::pi * r / length)) * phi0); }, 0.0,
        length / 256, 256, true);
    le("geometry", "berry_winding", std::abs(berry_loop_phase(wind, c).phase - 2.0 * std::numbers::pi), 1e-9);
  }
  return out;
}

}  // namespace bohmion::cli
