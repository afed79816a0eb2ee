#pragma once

// Periodic uniform grids and FFT-based derivatives.

#include <cmath>
#include <complex>
#include <numbers>
#include <string>

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include "bohmion/errors.hpp"

namespace bohmion {

/// x_i = lo + i h, i = 0..n-1, on a circle of length L = n h. n must be a power of two.
class PeriodicGrid {
 public:
  PeriodicGrid(double lo, double length, Eigen::Index n) : lo_(lo), length_(length), n_(n) {
    if (n < 16 || (n & (n - 1)) != 0) {
      throw ConfigError("periodic grid size must be a power of two >= 16, got " + std::to_string(n));
    }
    if (!(length > 0.0) || !std::isfinite(length) || !std::isfinite(lo)) {
      throw ConfigError("periodic grid length must be positive");
    }
  }

  /// Grid centred on zero: [-L/2, L/2).
  static PeriodicGrid centered(double length, Eigen::Index n) { return {-0.5 * length, length, n}; }

  double lo() const noexcept { return lo_; }
  double length() const noexcept { return length_; }
  Eigen::Index size() const noexcept { return n_; }
  double spacing() const noexcept { return length_ / static_cast<double>(n_); }
  double x(Eigen::Index i) const noexcept { return lo_ + static_cast<double>(i) * spacing(); }

  Eigen::VectorXd points() const {
    Eigen::VectorXd out(n_);
    for (Eigen::Index i = 0; i < n_; ++i) out[i] = x(i);
    return out;
  }

  /// Angular wavenumber of FFT bin j; the Nyquist bin carries -pi/h.
  double wavenumber(Eigen::Index j) const noexcept {
    const Eigen::Index s = j < n_ / 2 ? j : j - n_;
    return 2.0 * std::numbers::pi * static_cast<double>(s) / length_;
  }

 private:
  double lo_;
  double length_;
  Eigen::Index n_;
};

/// FFT derivatives on one grid. Holds the transform plan, so reuse one instance per grid.
class SpectralOps {
 public:
  explicit SpectralOps(PeriodicGrid grid) : grid_(grid) {}

  const PeriodicGrid& grid() const noexcept { return grid_; }

  Eigen::VectorXcd forward(const Eigen::VectorXcd& f) const {
    check(f.size());
    Eigen::VectorXcd out(f.size());
    fft_.fwd(out, f);
    return out;
  }

  Eigen::VectorXcd inverse(const Eigen::VectorXcd& fk) const {
    check(fk.size());
    Eigen::VectorXcd out(fk.size());
    fft_.inv(out, fk);
    return out;
  }

  /// First derivative; the Nyquist mode is dropped so real fields stay real.
  Eigen::VectorXcd d1(const Eigen::VectorXcd& f) const {
    Eigen::VectorXcd fk = forward(f);
    const Eigen::Index n = grid_.size();
    for (Eigen::Index j = 0; j < n; ++j) {
      fk[j] *= (j == n / 2) ? std::complex<double>(0.0) : std::complex<double>(0.0, grid_.wavenumber(j));
    }
    return inverse(fk);
  }

  /// Second derivative, -k^2 in every bin including Nyquist.
  Eigen::VectorXcd d2(const Eigen::VectorXcd& f) const {
    Eigen::VectorXcd fk = forward(f);
    for (Eigen::Index j = 0; j < grid_.size(); ++j) {
      const double k = grid_.wavenumber(j);
      fk[j] *= -k * k;
    }
    return inverse(fk);
  }

  Eigen::VectorXd d1(const Eigen::VectorXd& f) const { return d1(Eigen::VectorXcd(f.cast<std::complex<double>>())).real(); }
  Eigen::VectorXd d2(const Eigen::VectorXd& f) const { return d2(Eigen::VectorXcd(f.cast<std::complex<double>>())).real(); }

 private:
  void check(Eigen::Index n) const {
    if (n != grid_.size()) {
      throw DimensionError("field has " + std::to_string(n) + " samples, grid has " + std::to_string(grid_.size()));
    }
  }

  PeriodicGrid grid_;
  mutable Eigen::FFT<double> fft_;
};

}  // namespace bohmion
