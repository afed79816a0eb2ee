#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "bohmion/errors.hpp"
#include "bohmion/kernels.hpp"

namespace bohmion {

/// Real polynomial sum_k c_k x^k.
class Polynomial {
 public:
  Polynomial() = default;
  explicit Polynomial(std::vector<double> coeffs) : c_(std::move(coeffs)) {
    for (double v : c_) {
      if (!std::isfinite(v)) throw ConfigError("polynomial coefficients must be finite");
    }
  }

  const std::vector<double>& coefficients() const noexcept { return c_; }
  int degree() const noexcept { return static_cast<int>(c_.size()) - 1; }

  double operator()(double x) const noexcept {
    double acc = 0.0;
    for (auto it = c_.rbegin(); it != c_.rend(); ++it) acc = acc * x + *it;
    return acc;
  }

  Polynomial derivative() const {
    if (c_.size() <= 1) return Polynomial{};
    std::vector<double> d(c_.size() - 1);
    for (std::size_t k = 1; k < c_.size(); ++k) d[k - 1] = static_cast<double>(k) * c_[k];
    return Polynomial{std::move(d)};
  }

  /// (K * P)(q) = \int K(s - q) P(s) ds, exact through the kernel moments.
  Polynomial smoothed(const SmoothingKernel& k) const {
    std::vector<double> out(c_.size(), 0.0);
    for (std::size_t deg = 0; deg < c_.size(); ++deg) {
      if (c_[deg] == 0.0) continue;
      // (q + y)^deg = sum_j C(deg, j) q^(deg - j) y^j
      double binom = 1.0;
      for (std::size_t j = 0; j <= deg; ++j) {
        if (j > 0) binom = binom * static_cast<double>(deg - j + 1) / static_cast<double>(j);
        out[deg - j] += c_[deg] * binom * k.moment(static_cast<int>(j));
      }
    }
    return Polynomial{std::move(out)};
  }

 private:
  std::vector<double> c_;
};

/// Classical potential V(x) on the nuclear coordinate. All built-in families are polynomials.
class Potential {
 public:
  static Potential zero() { return Potential("zero", Polynomial{}); }

  /// (1/2) M omega^2 x^2
  static Potential harmonic(double mass, double omega) {
    return Potential("harmonic", Polynomial({0.0, 0.0, 0.5 * mass * omega * omega}));
  }

  /// barrier * (x^2 / x0^2 - 1)^2, minima at +-x0.
  static Potential double_well(double barrier, double x0) {
    if (!(x0 > 0.0)) throw ConfigError("potential.x0 must be positive");
    const double a = 1.0 / (x0 * x0);
    return Potential("double_well", Polynomial({barrier, 0.0, -2.0 * barrier * a, 0.0, barrier * a * a}));
  }

  static Potential polynomial(std::vector<double> coeffs) {
    return Potential("polynomial", Polynomial(std::move(coeffs)));
  }

  const std::string& family() const noexcept { return family_; }
  const Polynomial& poly() const noexcept { return v_; }
  bool is_zero() const noexcept {
    for (double c : v_.coefficients()) {
      if (c != 0.0) return false;
    }
    return true;
  }

  double value(double x) const noexcept { return v_(x); }
  double gradient(double x) const noexcept { return dv_(x); }

  /// K * V, again a potential of the same degree.
  Potential smoothed(const SmoothingKernel& k) const {
    return Potential(family_ + "_smoothed", v_.smoothed(k));
  }

 private:
  Potential(std::string family, Polynomial v)
      : family_(std::move(family)), v_(std::move(v)), dv_(v_.derivative()) {}

  std::string family_;
  Polynomial v_;
  Polynomial dv_;
};

}  // namespace bohmion
