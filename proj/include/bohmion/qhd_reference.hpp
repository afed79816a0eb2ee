#pragma once

// Grid Schrodinger reference layer: split-step propagation, Madelung fields (D, mu, u),
// the collective energy, the quantum potential and Bohmian trajectories through a stored flow.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bohmion/errors.hpp"
#include "bohmion/integrators.hpp"
#include "bohmion/potential.hpp"
#include "bohmion/spectral.hpp"

namespace bohmion {

/// psi sampled on a periodic grid together with the potential it evolves in.
struct WavefunctionGrid {
  PeriodicGrid grid;
  Eigen::VectorXcd psi;
  Eigen::VectorXd V;
  PhysicalConstants consts;

  double norm2() const { return psi.squaredNorm() * grid.spacing(); }

  void validate(double tol = 1e-10) const {
    if (psi.size() != grid.size() || V.size() != grid.size()) {
      throw DimensionError("wavefunction and potential must be sampled on the grid");
    }
    consts.validate();
    if (std::abs(norm2() - 1.0) > tol) {
      throw NormalizationError("wavefunction norm^2 is " + std::to_string(norm2()) + ", expected 1");
    }
  }

  void normalize() { psi /= std::sqrt(norm2()); }
};

inline Eigen::VectorXd sample_potential(const Potential& v, const PeriodicGrid& grid) {
  Eigen::VectorXd out(grid.size());
  for (Eigen::Index i = 0; i < grid.size(); ++i) out[i] = v.value(grid.x(i));
  return out;
}

/// Normalized Gaussian packet exp(-(x - x0)^2 / 4 sigma^2 + i k0 x), so |psi|^2 has width sigma.
inline Eigen::VectorXcd gaussian_packet(const PeriodicGrid& grid, double x0, double sigma, double k0 = 0.0) {
  if (!(sigma > 0.0)) throw ConfigError("packet width must be positive");
  Eigen::VectorXcd psi(grid.size());
  for (Eigen::Index i = 0; i < grid.size(); ++i) {
    const double y = grid.x(i) - x0;
    psi[i] = std::exp(std::complex<double>(-y * y / (4.0 * sigma * sigma), k0 * grid.x(i)));
  }
  return psi / std::sqrt(psi.squaredNorm() * grid.spacing());
}

struct HydroFields {
  PeriodicGrid grid;
  Eigen::VectorXd D;   // |psi|^2
  Eigen::VectorXd mu;  // hbar Im(psi* psi')
  Eigen::VectorXd u;   // mu / (m D), NaN where D < 1e-14 max D
};

inline constexpr double kVelocityMaskFloor = 1e-14;

inline HydroFields madelung_fields(const WavefunctionGrid& wf, const SpectralOps& ops) {
  const Eigen::Index n = wf.grid.size();
  const Eigen::VectorXcd dpsi = ops.d1(wf.psi);
  HydroFields f{wf.grid, Eigen::VectorXd(n), Eigen::VectorXd(n), Eigen::VectorXd(n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    f.D[i] = std::norm(wf.psi[i]);
    f.mu[i] = wf.consts.hbar * (std::conj(wf.psi[i]) * dpsi[i]).imag();
  }
  const double floor = kVelocityMaskFloor * f.D.maxCoeff();
  for (Eigen::Index i = 0; i < n; ++i) {
    f.u[i] = f.D[i] >= floor && f.D[i] > 0.0 ? f.mu[i] / (wf.consts.m * f.D[i])
                                             : std::numeric_limits<double>::quiet_NaN();
  }
  return f;
}

inline HydroFields madelung_fields(const WavefunctionGrid& wf) { return madelung_fields(wf, SpectralOps(wf.grid)); }

/// <psi|H psi> with H = -hbar^2/2m d^2 + V, spectral second derivative.
inline double dirac_energy(const WavefunctionGrid& wf, const SpectralOps& ops) {
  const Eigen::VectorXcd d2 = ops.d2(wf.psi);
  const double c = wf.consts.hbar * wf.consts.hbar / (2.0 * wf.consts.m);
  std::complex<double> acc = 0.0;
  for (Eigen::Index i = 0; i < wf.psi.size(); ++i) {
    acc += std::conj(wf.psi[i]) * (-c * d2[i] + wf.V[i] * wf.psi[i]);
  }
  return acc.real() * wf.grid.spacing();
}

inline double dirac_energy(const WavefunctionGrid& wf) { return dirac_energy(wf, SpectralOps(wf.grid)); }

inline constexpr double kCollectiveDensityFloor = 1e-14;

/// \int mu^2/(2 m D) + hbar^2 D'^2 / (8 m D) + D V dx, dropping points with D < 1e-14.
inline double collective_energy(const HydroFields& f, const Eigen::VectorXd& V, const PhysicalConstants& c,
                                const SpectralOps& ops) {
  const Eigen::Index n = f.grid.size();
  if (f.D.size() != n || f.mu.size() != n || V.size() != n) {
    throw DimensionError("collective_energy: fields and potential must share the grid");
  }
  if (f.D.minCoeff() < -1e-14) throw StructureError("density has negative values");
  const Eigen::VectorXd dD = ops.d1(f.D);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double d = f.D[i];
    if (d < kCollectiveDensityFloor) continue;
    acc += f.mu[i] * f.mu[i] / (2.0 * c.m * d) + c.hbar * c.hbar * dD[i] * dD[i] / (8.0 * c.m * d) + d * V[i];
  }
  return acc * f.grid.spacing();
}

inline double collective_energy(const HydroFields& f, const Eigen::VectorXd& V, const PhysicalConstants& c) {
  return collective_energy(f, V, c, SpectralOps(f.grid));
}

/// V_Q = -(hbar^2 / 2m) (sqrt D)'' / sqrt D, NaN where D < 1e-14 max D.
inline Eigen::VectorXd quantum_potential(const Eigen::VectorXd& D, const PeriodicGrid& grid, const PhysicalConstants& c) {
  if (D.size() != grid.size()) throw DimensionError("quantum_potential: density must be sampled on the grid");
  const Eigen::VectorXd r = D.cwiseMax(0.0).cwiseSqrt();
  const Eigen::VectorXd lap = SpectralOps(grid).d2(r);
  const double floor = kVelocityMaskFloor * D.maxCoeff();
  Eigen::VectorXd out(D.size());
  for (Eigen::Index i = 0; i < D.size(); ++i) {
    out[i] = D[i] >= floor && D[i] > 0.0 ? -c.hbar * c.hbar / (2.0 * c.m) * lap[i] / r[i]
                                         : std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

struct SchrodingerRun {
  double frame_dt = 0.0;                // time between stored frames
  std::vector<Eigen::VectorXcd> frames;  // frames[0] is the initial state
  std::vector<std::string> warnings;
  double max_norm_drift = 0.0;
};

/// Strang-split spectral propagation: half potential kick, exact free flow, half potential kick.
inline SchrodingerRun split_step_propagate(const WavefunctionGrid& wf0, double dt, long steps, long stride = 1) {
  wf0.validate();
  if (!(dt > 0.0)) throw ConfigError("integrator.dt must be positive");
  if (steps < 0) throw ConfigError("integrator.steps must be non-negative");
  if (stride < 1) throw ConfigError("output stride must be >= 1");

  const PhysicalConstants& c = wf0.consts;
  SchrodingerRun run;
  run.frame_dt = dt * static_cast<double>(stride);
  if (dt * wf0.V.cwiseAbs().maxCoeff() / c.hbar > 0.5) {
    run.warnings.push_back("dt * max|V| / hbar exceeds 0.5; potential phase is under-resolved");
  }

  const SpectralOps ops(wf0.grid);
  const Eigen::Index n = wf0.grid.size();
  Eigen::VectorXcd kick(n), drift(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    kick[i] = std::exp(std::complex<double>(0.0, -0.5 * dt * wf0.V[i] / c.hbar));
    const double k = wf0.grid.wavenumber(i);
    drift[i] = std::exp(std::complex<double>(0.0, -c.hbar * k * k * dt / (2.0 * c.m)));
  }

  Eigen::VectorXcd psi = wf0.psi;
  const double n0 = wf0.norm2();
  run.frames.push_back(psi);
  for (long s = 1; s <= steps; ++s) {
    psi = psi.cwiseProduct(kick);
    psi = ops.inverse(ops.forward(psi).cwiseProduct(drift));
    psi = psi.cwiseProduct(kick);
    if (s % stride == 0) {
      run.frames.push_back(psi);
      run.max_norm_drift = std::max(run.max_norm_drift, std::abs(psi.squaredNorm() * wf0.grid.spacing() - n0));
    }
  }
  if (!psi.allFinite()) throw NumericalError("split-step propagation produced non-finite values");
  return run;
}

struct FieldHistory {
  double dt = 0.0;
  std::vector<HydroFields> frames;
};

inline FieldHistory field_history(const SchrodingerRun& run, const WavefunctionGrid& wf0) {
  FieldHistory h;
  h.dt = run.frame_dt;
  const SpectralOps ops(wf0.grid);
  WavefunctionGrid wf = wf0;
  h.frames.reserve(run.frames.size());
  for (const auto& psi : run.frames) {
    wf.psi = psi;
    h.frames.push_back(madelung_fields(wf, ops));
  }
  return h;
}

struct TrajectorySet {
  std::vector<double> seeds;
  std::vector<double> t;
  std::vector<Eigen::VectorXd> q;  // q[j][k]: seed k at time t[j]
  std::vector<bool> truncated;     // seed left the region D >= 1e-12
};

inline constexpr double kTrajectoryDensityFloor = 1e-12;

namespace detail {

/// 4-point Lagrange (cubic) interpolation of a periodic field. Returns NaN when any stencil value is NaN.
inline double periodic_cubic(const Eigen::VectorXd& f, const PeriodicGrid& g, double x) {
  const double h = g.spacing();
  const double s = (x - g.lo()) / h;
  const double fl = std::floor(s);
  const double t = s - fl;
  const Eigen::Index n = g.size();
  auto at = [&](long off) {
    long i = static_cast<long>(fl) + off;
    i %= static_cast<long>(n);
    if (i < 0) i += static_cast<long>(n);
    return f[static_cast<Eigen::Index>(i)];
  };
  const double fm1 = at(-1), f0 = at(0), f1 = at(1), f2 = at(2);
  return fm1 * (-t * (t - 1.0) * (t - 2.0) / 6.0) + f0 * ((t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0) +
         f1 * (-(t + 1.0) * t * (t - 2.0) / 2.0) + f2 * ((t + 1.0) * t * (t - 1.0) / 6.0);
}

}  // namespace detail

/// Integrates q' = u(q, t) through the stored frames. RK4 steps span two frame intervals so the
/// stage at the half step samples a stored frame; a trailing single interval uses the time average.
inline TrajectorySet trace_bohmian(const FieldHistory& history, const std::vector<double>& seeds) {
  if (history.frames.empty()) throw ConfigError("trace_bohmian: empty field history");
  if (!(history.dt > 0.0)) throw ConfigError("trace_bohmian: history time step must be positive");
  const auto ns = static_cast<Eigen::Index>(seeds.size());
  TrajectorySet out;
  out.seeds = seeds;
  out.truncated.assign(seeds.size(), false);
  Eigen::VectorXd q = Eigen::Map<const Eigen::VectorXd>(seeds.data(), ns);

  const auto velocity = [&](const HydroFields& f, Eigen::Index k, double x) {
    const double d = detail::periodic_cubic(f.D, f.grid, x);
    const double v = detail::periodic_cubic(f.u, f.grid, x);
    if (!(d >= kTrajectoryDensityFloor) || !std::isfinite(v)) {
      out.truncated[static_cast<std::size_t>(k)] = true;
      return 0.0;
    }
    return v;
  };
  const auto velocity_avg = [&](const HydroFields& a, const HydroFields& b, Eigen::Index k, double x) {
    return 0.5 * (velocity(a, k, x) + velocity(b, k, x));
  };

  for (Eigen::Index k = 0; k < ns; ++k) velocity(history.frames[0], k, q[k]);
  out.t.push_back(0.0);
  out.q.push_back(q);

  const std::size_t last = history.frames.size() - 1;
  std::size_t j = 0;
  while (j < last) {
    const bool pair = j + 2 <= last;
    const double step = (pair ? 2.0 : 1.0) * history.dt;
    const double half = 0.5 * step;
    for (Eigen::Index k = 0; k < ns; ++k) {
      if (out.truncated[static_cast<std::size_t>(k)]) continue;
      const HydroFields& f0 = history.frames[j];
      const HydroFields& f2 = history.frames[pair ? j + 2 : j + 1];
      auto mid = [&](double x) {
        return pair ? velocity(history.frames[j + 1], k, x) : velocity_avg(f0, f2, k, x);
      };
      const double x = q[k];
      const double k1 = velocity(f0, k, x);
      const double k2 = mid(x + half * k1);
      const double k3 = mid(x + half * k2);
      const double k4 = velocity(f2, k, x + step * k3);
      if (out.truncated[static_cast<std::size_t>(k)]) continue;
      q[k] = x + step / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    j += pair ? 2 : 1;
    out.t.push_back(static_cast<double>(j) * history.dt);
    out.q.push_back(q);
  }
  return out;
}

/// Cumulative distribution of a density on the grid nodes, trapezoid rule, normalized to end at 1.
inline Eigen::VectorXd cumulative_density(const Eigen::VectorXd& D, const PeriodicGrid& grid) {
  Eigen::VectorXd cdf(D.size());
  cdf[0] = 0.0;
  for (Eigen::Index i = 1; i < D.size(); ++i) cdf[i] = cdf[i - 1] + 0.5 * (D[i - 1] + D[i]) * grid.spacing();
  return cdf / cdf[D.size() - 1];
}

/// Positions x_k with CDF(x_k) = (k + 1/2) / count: an equi-probability seed set.
inline std::vector<double> quantile_seeds(const Eigen::VectorXd& D, const PeriodicGrid& grid, int count) {
  if (count < 1) throw ConfigError("seed count must be positive");
  const Eigen::VectorXd cdf = cumulative_density(D, grid);
  std::vector<double> seeds;
  seeds.reserve(static_cast<std::size_t>(count));
  Eigen::Index i = 1;
  for (int k = 0; k < count; ++k) {
    const double target = (k + 0.5) / count;
    while (i < cdf.size() - 1 && cdf[i] < target) ++i;
    const double span = cdf[i] - cdf[i - 1];
    const double t = span > 0.0 ? (target - cdf[i - 1]) / span : 0.0;
    seeds.push_back(grid.x(i - 1) + t * grid.spacing());
  }
  return seeds;
}

enum class NewtonIntegrator { Midpoint, RK4 };

struct NewtonTrajectory {
  std::vector<double> t;
  std::vector<double> q;
  std::vector<double> p;
};

/// M q'' = -V'(q) from (q0, p0) over [0, T].
inline NewtonTrajectory newtonian_limit_check(const Potential& V, double q0, double p0, double T, double dt,
                                              const PhysicalConstants& c = {},
                                              NewtonIntegrator integrator = NewtonIntegrator::Midpoint) {
  c.validate();
  if (!(dt > 0.0)) throw ConfigError("integrator.dt must be positive");
  if (!(T >= 0.0)) throw ConfigError("final time must be non-negative");
  const auto steps = static_cast<long>(std::llround(T / dt));
  NewtonTrajectory out;
  out.t.push_back(0.0);
  out.q.push_back(q0);
  out.p.push_back(p0);
  CanonicalState s{Eigen::VectorXd::Constant(1, q0), Eigen::VectorXd::Constant(1, p0)};
  const auto grad = [&](const Eigen::VectorXd& q, const Eigen::VectorXd& p) {
    return CanonicalGradient{Eigen::VectorXd::Constant(1, V.gradient(q[0])), p / c.M};
  };
  const auto rhs = [&](const Eigen::VectorXd& z) {
    Eigen::VectorXd d(2);
    d << z[1] / c.M, -V.gradient(z[0]);
    return d;
  };
  for (long k = 1; k <= steps; ++k) {
    if (integrator == NewtonIntegrator::Midpoint) {
      s = implicit_midpoint_step(grad, s, dt);
    } else {
      Eigen::VectorXd z(2);
      z << s.q[0], s.p[0];
      z = rk4_step(rhs, z, dt);
      s.q[0] = z[0];
      s.p[0] = z[1];
    }
    out.t.push_back(static_cast<double>(k) * dt);
    out.q.push_back(s.q[0]);
    out.p.push_back(s.p[0]);
  }
  return out;
}

}  // namespace bohmion
