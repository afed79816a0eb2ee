#pragma once

// Smoothing kernels and the quadrature grids they are integrated on.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bohmion/errors.hpp"

namespace bohmion {

enum class KernelFamily { Gaussian, HelmholtzGreen };

inline std::string to_string(KernelFamily f) {
  return f == KernelFamily::Gaussian ? "gaussian" : "helmholtz";
}

/// Value and first derivative of a kernel at one point.
struct KernelSample {
  double value;
  double derivative;
};

/// Positive, symmetric, unit-mass mollifier K(x) with length scale alpha.
///
/// Gaussian:        K(x) = exp(-x^2 / 2a^2) / (a sqrt(2 pi))
/// HelmholtzGreen:  K(x) = exp(-|x| / a) / 2a, the 1D Green's function of (1 - a^2 d^2/dx^2).
class SmoothingKernel {
 public:
  SmoothingKernel(KernelFamily family, double alpha) : family_(family), alpha_(alpha) {
    if (!(alpha > 0.0) || !std::isfinite(alpha)) {
      throw ConfigError("kernel.alpha must be positive, got " + std::to_string(alpha));
    }
  }

  static SmoothingKernel gaussian(double alpha) { return {KernelFamily::Gaussian, alpha}; }
  static SmoothingKernel helmholtz(double alpha) { return {KernelFamily::HelmholtzGreen, alpha}; }

  KernelFamily family() const noexcept { return family_; }
  double alpha() const noexcept { return alpha_; }

  double log_value(double x) const noexcept {
    if (family_ == KernelFamily::Gaussian) {
      return -0.5 * (x * x) / (alpha_ * alpha_) - std::log(alpha_ * std::sqrt(2.0 * std::numbers::pi));
    }
    return -std::abs(x) / alpha_ - std::log(2.0 * alpha_);
  }

  double value(double x) const noexcept { return std::exp(log_value(x)); }

  /// K'(x) / K(x). For HelmholtzGreen the ratio at x = 0 is the symmetric limit 0.
  double slope_ratio(double x) const noexcept {
    if (family_ == KernelFamily::Gaussian) return -x / (alpha_ * alpha_);
    if (x == 0.0) return 0.0;
    return (x > 0.0 ? -1.0 : 1.0) / alpha_;
  }

  /// K''(x) / K(x), away from the HelmholtzGreen cusp.
  double curvature_ratio(double x) const noexcept {
    const double a2 = alpha_ * alpha_;
    if (family_ == KernelFamily::Gaussian) return (x * x) / (a2 * a2) - 1.0 / a2;
    return 1.0 / a2;
  }

  double derivative(double x) const noexcept { return slope_ratio(x) * value(x); }

  /// Raw moment \int x^n K(x) dx. Odd moments vanish by symmetry.
  double moment(int n) const {
    if (n < 0) throw ConfigError("kernel moment order must be non-negative");
    if (n % 2 == 1) return 0.0;
    double m = 1.0;
    if (family_ == KernelFamily::Gaussian) {
      // a^n (n-1)!!
      for (int k = n - 1; k > 0; k -= 2) m *= k;
    } else {
      // a^n n!
      for (int k = 2; k <= n; ++k) m *= k;
    }
    return m * std::pow(alpha_, n);
  }

  /// Distance beyond which K(x) / K(0) < rel.
  double tail_radius(double rel) const {
    const double l = -std::log(rel);
    if (family_ == KernelFamily::Gaussian) return alpha_ * std::sqrt(2.0 * l);
    return alpha_ * l;
  }

  /// Default quadrature margin around the outermost particle, in absolute length.
  double default_margin() const { return alpha_ * (family_ == KernelFamily::Gaussian ? 12.0 : 40.0); }

  /// Smallest margin accepted by the pair-integral routines.
  double required_margin() const { return tail_radius(1e-14); }

 private:
  KernelFamily family_;
  double alpha_;
};

inline KernelSample kernel_eval(const SmoothingKernel& k, double x) {
  const double v = k.value(x);
  return {v, k.slope_ratio(x) * v};
}

/// Uniform grid on [lo, hi] with n intervals (n + 1 nodes) and composite trapezoid weights.
class QuadratureGrid {
 public:
  QuadratureGrid(double lo, double hi, std::size_t n) : lo_(lo), hi_(hi), n_(n) {
    if (n < 16) throw ConfigError("quadrature grid needs at least 16 intervals");
    if (!(hi > lo) || !std::isfinite(lo) || !std::isfinite(hi)) {
      throw ConfigError("quadrature grid bounds must satisfy lo < hi");
    }
  }

  double lo() const noexcept { return lo_; }
  double hi() const noexcept { return hi_; }
  std::size_t intervals() const noexcept { return n_; }
  std::size_t size() const noexcept { return n_ + 1; }
  double spacing() const noexcept { return (hi_ - lo_) / static_cast<double>(n_); }
  double node(std::size_t i) const noexcept {
    return i == n_ ? hi_ : lo_ + static_cast<double>(i) * spacing();
  }
  double weight(std::size_t i) const noexcept {
    return (i == 0 || i == n_) ? 0.5 * spacing() : spacing();
  }

  std::vector<double> nodes() const {
    std::vector<double> x(size());
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = node(i);
    return x;
  }

  bool covers(double a, double b) const noexcept { return lo_ <= a && b <= hi_; }

  /// Throws unless the spacing resolves the kernel (h <= alpha / 8).
  void require_resolves(const SmoothingKernel& k) const {
    if (spacing() > k.alpha() / 8.0 * (1.0 + 1e-12)) {
      throw ConfigError("quadrature spacing " + std::to_string(spacing()) +
                        " exceeds alpha/8 = " + std::to_string(k.alpha() / 8.0));
    }
  }

 private:
  double lo_;
  double hi_;
  std::size_t n_;
};

enum class QuadratureRule {
  Automatic,    // trapezoid for Gaussian, kink-aligned panels for HelmholtzGreen
  Trapezoid,
  KinkAligned,  // Gauss-Legendre panels split at every particle position
};

struct QuadratureOptions {
  double spacing_fraction = 1.0 / 16.0;  // grid spacing in units of alpha
  double margin = 0.0;                   // absolute margin; 0 selects the kernel default
  double tail_cutoff = 1e-30;            // drop nodes where Dbar < cutoff * max Dbar
  QuadratureRule rule = QuadratureRule::Automatic;
};

inline QuadratureRule resolve_rule(const SmoothingKernel& k, QuadratureRule r) {
  if (r != QuadratureRule::Automatic) return r;
  return k.family() == KernelFamily::Gaussian ? QuadratureRule::Trapezoid : QuadratureRule::KinkAligned;
}

/// Grid covering [min q - margin, max q + margin] whose nodes lie on the lattice h * Z.
/// Lattice alignment keeps the node set fixed (up to tail nodes) while particles move.
inline QuadratureGrid covering_grid(const SmoothingKernel& k, std::span<const double> q,
                                    const QuadratureOptions& opt = {}) {
  if (q.empty()) throw DegenerateEnsembleError("cannot build a quadrature grid for zero particles");
  const auto [mn, mx] = std::minmax_element(q.begin(), q.end());
  const double margin = opt.margin > 0.0 ? opt.margin : k.default_margin();
  const double h = k.alpha() * opt.spacing_fraction;
  const double lo = std::floor((*mn - margin) / h) * h;
  const double hi = std::ceil((*mx + margin) / h) * h;
  auto n = static_cast<std::size_t>(std::llround((hi - lo) / h));
  n = std::max<std::size_t>(n, 16);
  return {lo, lo + static_cast<double>(n) * h, n};
}

/// Exact lattice sum  h * sum_j K(j h), the trapezoid estimate of \int K on an infinite grid.
inline double lattice_mass(const SmoothingKernel& k, double h) {
  if (k.family() == KernelFamily::HelmholtzGreen) {
    const double r = h / (2.0 * k.alpha());
    return r / std::tanh(r);
  }
  double s = k.value(0.0);
  for (int j = 1;; ++j) {
    const double t = k.value(j * h);
    s += 2.0 * t;
    if (t < 1e-300 || t < 1e-18 * s) break;
  }
  return s * h;
}

/// (K * f)(x_i) = sum_j K(x_i - x_j) f_j w_j with trapezoid weights.
/// Each row is divided by the infinite-lattice mass of K, which removes the leading
/// error of the HelmholtzGreen cusp sitting on a node (and is 1 to round-off for Gaussians).
inline Eigen::VectorXd convolve(const SmoothingKernel& k, std::span<const double> f,
                                const QuadratureGrid& grid) {
  if (f.size() != grid.size()) {
    throw DimensionError("convolve: field has " + std::to_string(f.size()) + " samples, grid has " +
                         std::to_string(grid.size()));
  }
  const double scale = 1.0 / lattice_mass(k, grid.spacing());
  const std::size_t n = grid.size();
  Eigen::VectorXd out(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const double xi = grid.node(i);
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) acc += k.value(xi - grid.node(j)) * f[j] * grid.weight(j);
    out[static_cast<Eigen::Index>(i)] = acc * scale;
  }
  return out;
}

}  // namespace bohmion
