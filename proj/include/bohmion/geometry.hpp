#pragma once

// Geometric diagnostics of an electronic field psi(r) over a 1D nuclear grid: Berry connection,
// quantum geometric tensor, the effective electronic potential, and loop phases.

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bohmion/electronic_model.hpp"
#include "bohmion/errors.hpp"
#include "bohmion/integrators.hpp"

namespace bohmion {

/// psi(r_i) on r_i = r0 + i h. A periodic field has period n h.
struct ElectronicField {
  double r0 = 0.0;
  double h = 1.0;
  bool periodic = true;
  std::vector<Eigen::VectorXcd> psi;

  static ElectronicField sample(const std::function<Eigen::VectorXcd(double)>& f, double r0, double h, int n,
                                bool periodic) {
    ElectronicField out{r0, h, periodic, {}};
    out.psi.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) out.psi.push_back(f(r0 + i * h));
    return out;
  }

  std::size_t size() const noexcept { return psi.size(); }
  int dimension() const { return psi.empty() ? 0 : static_cast<int>(psi.front().size()); }
  double r(std::size_t i) const noexcept { return r0 + static_cast<double>(i) * h; }

  void validate(double tol = 1e-10) const {
    if (psi.size() < 5) throw DimensionError("electronic field needs at least 5 grid points");
    if (!(h > 0.0)) throw ConfigError("electronic field spacing must be positive");
    for (std::size_t i = 0; i < psi.size(); ++i) {
      if (psi[i].size() != dimension()) throw DimensionError("electronic field changes dimension");
      if (std::abs(psi[i].norm() - 1.0) > tol) {
        throw StructureError("electronic field not normalized at r[" + std::to_string(i) + "]");
      }
    }
  }
};

namespace detail {

/// Fourth-order central differences; one-sided second order at the two points nearest each end
/// of a non-periodic grid.
template <class T>
std::vector<T> derivative4(const std::vector<T>& f, double h, bool periodic) {
  const auto n = static_cast<long>(f.size());
  std::vector<T> d(f.size());
  const auto at = [&](long i) -> const T& { return f[static_cast<std::size_t>(((i % n) + n) % n)]; };
  for (long i = 0; i < n; ++i) {
    if (periodic || (i >= 2 && i < n - 2)) {
      d[static_cast<std::size_t>(i)] = (at(i - 2) - 8.0 * at(i - 1) + 8.0 * at(i + 1) - at(i + 2)) / (12.0 * h);
    } else if (i < 2) {
      d[static_cast<std::size_t>(i)] = (-3.0 * at(i) + 4.0 * at(i + 1) - at(i + 2)) / (2.0 * h);
    } else {
      d[static_cast<std::size_t>(i)] = (3.0 * at(i) - 4.0 * at(i - 1) + at(i - 2)) / (2.0 * h);
    }
  }
  return d;
}

/// Second-order central differences; one-sided second order at the ends of a non-periodic grid.
template <class T>
std::vector<T> derivative2(const std::vector<T>& f, double h, bool periodic) {
  const auto n = static_cast<long>(f.size());
  std::vector<T> d(f.size());
  const auto at = [&](long i) -> const T& { return f[static_cast<std::size_t>(((i % n) + n) % n)]; };
  for (long i = 0; i < n; ++i) {
    if (periodic || (i >= 1 && i < n - 1)) {
      d[static_cast<std::size_t>(i)] = (at(i + 1) - at(i - 1)) / (2.0 * h);
    } else if (i == 0) {
      d[static_cast<std::size_t>(i)] = (-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2.0 * h);
    } else {
      d[static_cast<std::size_t>(i)] = (3.0 * at(i) - 4.0 * at(i - 1) + at(i - 2)) / (2.0 * h);
    }
  }
  return d;
}

}  // namespace detail

struct BerryConnection {
  Eigen::VectorXd A;
  double imaginary_residue = 0.0;  // max |hbar Re <psi|d psi>|, zero for exact derivatives
};

/// A(r) = <psi | -i hbar d_r psi> = hbar Im <psi | d_r psi>.
inline BerryConnection berry_connection(const ElectronicField& f, const PhysicalConstants& c) {
  f.validate();
  const auto d = detail::derivative4(f.psi, f.h, f.periodic);
  BerryConnection out{Eigen::VectorXd(static_cast<Eigen::Index>(f.size())), 0.0};
  for (std::size_t i = 0; i < f.size(); ++i) {
    const cplx z = f.psi[i].dot(d[i]);
    out.A[static_cast<Eigen::Index>(i)] = c.hbar * z.imag();
    out.imaginary_residue = std::max(out.imaginary_residue, std::abs(c.hbar * z.real()));
  }
  return out;
}

struct QGTData {
  Eigen::VectorXcd Q;  // <d psi | (1 - psi psi^dagger) | d psi>
  Eigen::VectorXd T;   // Re Q
  Eigen::VectorXd A;   // Berry connection, the gauge data
};

inline QGTData qgt(const ElectronicField& f, const PhysicalConstants& c) {
  f.validate();
  const auto d = detail::derivative4(f.psi, f.h, f.periodic);
  const auto n = static_cast<Eigen::Index>(f.size());
  QGTData out{Eigen::VectorXcd(n), Eigen::VectorXd(n), Eigen::VectorXd(n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& psi = f.psi[static_cast<std::size_t>(i)];
    const auto& dpsi = d[static_cast<std::size_t>(i)];
    const Eigen::VectorXcd proj = dpsi - psi * psi.dot(dpsi);
    const cplx q = dpsi.dot(proj);
    if (std::abs(q.imag()) > 1e-10 * std::max(1.0, std::abs(q))) {
      throw StructureError("quantum geometric tensor has an imaginary part on a 1D grid");
    }
    out.Q[i] = q;
    out.T[i] = q.real();
    out.A[i] = c.hbar * psi.dot(dpsi).imag();
  }
  return out;
}

struct EpsilonField {
  Eigen::VectorXd connection_form;  // <psi|H_e psi> + hbar^2 |d psi|^2 / 2M - A^2 / 2M
  Eigen::VectorXd density_form;     // <rho|H_e> + hbar^2 |d rho|^2 / 4M
  Eigen::VectorXd grad_rho_sq;      // Tr(d rho d rho), second-order differences of rho
  Eigen::VectorXd two_trace_T;      // 2 T, fourth-order differences of psi
  std::size_t first = 0;            // comparison window [first, last)
  std::size_t last = 0;
  double max_route_gap = 0.0;       // max |connection_form - density_form| over the window
  double max_identity_gap = 0.0;    // max |grad_rho_sq - two_trace_T| over the window
};

/// Effective electronic potential by both routes. Non-periodic fields drop two points at each end
/// from the comparison window.
inline EpsilonField epsilon_field(const ElectronicField& f, const ElectronicModel& He, const PhysicalConstants& c) {
  f.validate();
  if (f.dimension() != He.dimension()) throw DimensionError("electronic field and model differ in dimension");
  const auto n = static_cast<Eigen::Index>(f.size());
  const auto dpsi = detail::derivative4(f.psi, f.h, f.periodic);
  std::vector<Eigen::MatrixXcd> rho(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) rho[i] = f.psi[i] * f.psi[i].adjoint();
  const auto drho = detail::derivative2(rho, f.h, f.periodic);

  EpsilonField out{Eigen::VectorXd(n), Eigen::VectorXd(n), Eigen::VectorXd(n), Eigen::VectorXd(n)};
  out.first = f.periodic ? 0 : 2;
  out.last = f.periodic ? f.size() : f.size() - 2;
  const double k2 = c.hbar * c.hbar / (2.0 * c.M);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    const Eigen::MatrixXcd h = He.H(f.r(ui));
    const double A = c.hbar * f.psi[ui].dot(dpsi[ui]).imag();
    const double e_psi = f.psi[ui].dot(h * f.psi[ui]).real();
    out.connection_form[i] = e_psi + k2 * dpsi[ui].squaredNorm() - A * A / (2.0 * c.M);
    const Eigen::VectorXcd proj = dpsi[ui] - f.psi[ui] * f.psi[ui].dot(dpsi[ui]);
    out.two_trace_T[i] = 2.0 * dpsi[ui].dot(proj).real();
    out.grad_rho_sq[i] = (drho[ui] * drho[ui]).trace().real();
    out.density_form[i] = (rho[ui] * h).trace().real() + 0.5 * k2 * out.grad_rho_sq[i];
    if (ui >= out.first && ui < out.last) {
      out.max_route_gap = std::max(out.max_route_gap, std::abs(out.connection_form[i] - out.density_form[i]));
      out.max_identity_gap = std::max(out.max_identity_gap, std::abs(out.grad_rho_sq[i] - out.two_trace_T[i]));
    }
  }
  return out;
}

struct LoopPhase {
  double phase = 0.0;      // hbar sum_i arg <psi_i | psi_{i+1}>, exact for any smooth gauge
  double trapezoid = 0.0;  // periodic trapezoid of the finite-difference connection
};

/// Discrete loop integral of A around a periodic grid.
inline LoopPhase berry_loop_phase(const ElectronicField& f, const PhysicalConstants& c) {
  f.validate();
  if (!f.periodic) throw StructureError("berry_loop_phase needs a periodic field");
  LoopPhase out;
  for (std::size_t i = 0; i < f.size(); ++i) {
    out.phase += std::arg(f.psi[i].dot(f.psi[(i + 1) % f.size()]));
  }
  out.phase *= c.hbar;
  out.trapezoid = berry_connection(f, c).A.sum() * f.h;
  return out;
}

}  // namespace bohmion
