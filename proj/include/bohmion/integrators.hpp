#pragma once

// Time steppers: implicit midpoint for canonical (q, p), classical RK4, and exactly unitary
// conjugation for density matrices.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <complex>
#include <limits>
#include <string>

#include <Eigen/Dense>

#include "bohmion/errors.hpp"

namespace bohmion {

using cplx = std::complex<double>;

struct PhysicalConstants {
  double hbar = 1.0;
  double M = 1.0;  // nuclear mass
  double m = 1.0;  // electronic mass, reference Schrodinger layer only

  /// Particle models accept hbar = 0 (the classical limit); wave propagation does not.
  void validate(bool allow_zero_hbar = false) const {
    if (allow_zero_hbar ? !(hbar >= 0.0) : !(hbar > 0.0)) {
      throw ConfigError(allow_zero_hbar ? "physics.hbar must be non-negative" : "physics.hbar must be positive");
    }
    if (!std::isfinite(hbar)) throw ConfigError("physics.hbar must be finite");
    if (!(M > 0.0) || !std::isfinite(M)) throw ConfigError("physics.M must be positive");
    if (!(m > 0.0) || !std::isfinite(m)) throw ConfigError("physics.m must be positive");
  }
};

struct CanonicalState {
  Eigen::VectorXd q;
  Eigen::VectorXd p;

  void validate() const {
    if (q.size() != p.size()) throw DimensionError("canonical state: q and p differ in length");
    if (!q.allFinite() || !p.allFinite()) throw NumericalError("canonical state has non-finite entries");
  }
};

/// (dH/dq, dH/dp) at one phase point.
struct CanonicalGradient {
  Eigen::VectorXd dq;
  Eigen::VectorXd dp;
};

struct MidpointOptions {
  double tol = 1e-13;
  int max_iter = 100;
};

/// One implicit midpoint step z1 = z0 + dt J grad H((z0 + z1) / 2), solved by fixed-point iteration.
/// `grad(q, p)` returns a CanonicalGradient.
template <class Grad>
CanonicalState implicit_midpoint_step(Grad&& grad, const CanonicalState& s, double dt,
                                      const MidpointOptions& opt = {}) {
  s.validate();
  if (!std::isfinite(dt)) throw ConfigError("time step must be finite");
  // Iterate on the increments (dq, dp) rather than the end point, so they carry full relative
  // precision and the state is rounded once per step.
  const auto eval = [&](const Eigen::VectorXd& dq, const Eigen::VectorXd& dp) {
    const CanonicalGradient g = grad((s.q + 0.5 * dq).eval(), (s.p + 0.5 * dp).eval());
    if (g.dq.size() != s.q.size() || g.dp.size() != s.p.size()) {
      throw DimensionError("gradient callable returned the wrong length");
    }
    return CanonicalState{dt * g.dp, -dt * g.dq};
  };
  const auto diff = [](const CanonicalState& a, const CanonicalState& b) {
    return std::max((a.q - b.q).lpNorm<Eigen::Infinity>(), (a.p - b.p).lpNorm<Eigen::Infinity>());
  };
  const double scale = 1.0 + std::max(s.q.lpNorm<Eigen::Infinity>(), s.p.lpNorm<Eigen::Infinity>());

  CanonicalState d = eval(Eigen::VectorXd::Zero(s.q.size()), Eigen::VectorXd::Zero(s.p.size()));
  double residual = std::numeric_limits<double>::infinity();
  for (int it = 1; it <= opt.max_iter; ++it) {
    CanonicalState next = eval(d.q, d.p);
    if (!next.q.allFinite() || !next.p.allFinite()) {
      throw NumericalError("implicit midpoint produced non-finite values");
    }
    residual = diff(next, d);
    d = std::move(next);
    if (residual <= opt.tol * scale) {
      // Keep iterating while the map still contracts: stopping at tol leaves an error of fixed
      // sign every step, which accumulates into a secular energy drift over long runs.
      double prev = residual;
      for (int extra = 0; extra < 10 && prev > 0.0; ++extra) {
        CanonicalState polish = eval(d.q, d.p);
        const double r = diff(polish, d);
        if (r >= prev) break;
        d = std::move(polish);
        prev = r;
      }
      return {s.q + d.q, s.p + d.p};
    }
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", residual);
  throw StepFailure("implicit midpoint did not converge in " + std::to_string(opt.max_iter) + " iterations (residual " +
                        buf + ")",
                    residual, opt.max_iter);
}

/// Classical fourth-order Runge-Kutta step for s' = rhs(s).
template <class Rhs>
Eigen::VectorXd rk4_step(Rhs&& rhs, const Eigen::VectorXd& s, double dt) {
  const Eigen::VectorXd k1 = rhs(s);
  const Eigen::VectorXd k2 = rhs((s + 0.5 * dt * k1).eval());
  const Eigen::VectorXd k3 = rhs((s + 0.5 * dt * k2).eval());
  const Eigen::VectorXd k4 = rhs((s + dt * k3).eval());
  Eigen::VectorXd out = s + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  if (!out.allFinite()) throw NumericalError("rk4 produced non-finite values");
  return out;
}

// ---- density matrices -------------------------------------------------------------------------

inline double hermiticity_defect(const Eigen::MatrixXcd& h) {
  return (h - h.adjoint()).cwiseAbs().maxCoeff();
}

inline void require_hermitian(const Eigen::MatrixXcd& h, double tol, const char* what) {
  if (h.rows() != h.cols()) throw DimensionError(std::string(what) + " must be square");
  const double scale = std::max(1.0, h.cwiseAbs().maxCoeff());
  if (hermiticity_defect(h) > tol * scale) {
    throw StructureError(std::string(what) + " is not Hermitian (defect " +
                         std::to_string(hermiticity_defect(h)) + ")");
  }
}

namespace detail {

// Propagators are built and applied in extended precision. A double-rounded U has a fixed
// unitarity defect of a few ulp, which repeated conjugation by the same U compounds linearly.
using cplx_ext = std::complex<long double>;
using MatrixXcx = Eigen::Matrix<cplx_ext, Eigen::Dynamic, Eigen::Dynamic>;

inline MatrixXcx propagator_ext(const Eigen::MatrixXcd& h, double t, double hbar) {
  require_hermitian(h, 1e-10, "effective Hamiltonian");
  const MatrixXcx hx = h.cast<cplx_ext>();
  Eigen::SelfAdjointEigenSolver<MatrixXcx> es(0.5L * (hx + hx.adjoint()));
  if (es.info() != Eigen::Success) throw NumericalError("eigendecomposition failed");
  Eigen::Matrix<cplx_ext, Eigen::Dynamic, 1> phase(h.rows());
  const long double s = -static_cast<long double>(t) / static_cast<long double>(hbar);
  for (Eigen::Index i = 0; i < phase.size(); ++i) phase[i] = std::exp(cplx_ext(0.0L, s * es.eigenvalues()[i]));
  return es.eigenvectors() * phase.asDiagonal() * es.eigenvectors().adjoint();
}

/// rho <- U rho U^dagger, Hermitian by construction.
inline void conjugate(Eigen::MatrixXcd& rho, const MatrixXcx& u) {
  const MatrixXcx r = u * rho.cast<cplx_ext>() * u.adjoint();
  rho = (0.5L * (r + r.adjoint())).cast<cplx>();
}

inline void apply(Eigen::VectorXcd& psi, const MatrixXcx& u) {
  psi = (u * psi.cast<cplx_ext>()).cast<cplx>();
}

}  // namespace detail

/// exp(-i H t / hbar) by eigendecomposition of the Hermitian part of H.
inline Eigen::MatrixXcd unitary_propagator(const Eigen::MatrixXcd& h, double t, double hbar = 1.0) {
  return detail::propagator_ext(h, t, hbar).cast<cplx>();
}

/// U rho U^dagger with U = exp(-i Heff dt / hbar).
inline Eigen::MatrixXcd unitary_step(const Eigen::MatrixXcd& rho, const Eigen::MatrixXcd& heff, double dt,
                                     double hbar = 1.0) {
  if (rho.rows() != heff.rows() || rho.cols() != heff.cols()) {
    throw DimensionError("unitary_step: density matrix and Hamiltonian differ in size");
  }
  Eigen::MatrixXcd out = rho;
  detail::conjugate(out, detail::propagator_ext(heff, dt, hbar));
  return out;
}

inline double purity(const Eigen::MatrixXcd& rho) { return (rho * rho).trace().real(); }

/// Ascending eigenvalues of the Hermitian part.
inline Eigen::VectorXd density_spectrum(const Eigen::MatrixXcd& rho) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (rho + rho.adjoint()), Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

/// w |v><v| / <v|v>.
inline Eigen::MatrixXcd pure_density(const Eigen::VectorXcd& v, double weight) {
  const double n2 = v.squaredNorm();
  if (!(n2 > 0.0)) throw StructureError("pure-state vector must be non-zero");
  return weight * (v * v.adjoint()) / n2;
}

/// Checks Hermiticity, trace = weight and positive semidefiniteness.
inline void validate_density(const Eigen::MatrixXcd& rho, double weight, double tol = 1e-10) {
  require_hermitian(rho, 1e-12, "density matrix");
  if (std::abs(rho.trace().real() - weight) > tol || std::abs(rho.trace().imag()) > tol) {
    throw StructureError("density matrix trace " + std::to_string(rho.trace().real()) +
                         " does not match its weight " + std::to_string(weight));
  }
  if (density_spectrum(rho).minCoeff() < -tol) throw StructureError("density matrix is not positive semidefinite");
}

}  // namespace bohmion
