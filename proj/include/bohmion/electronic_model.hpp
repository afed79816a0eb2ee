#pragma once

// Finite-dimensional electronic Hamiltonians H_e(q) as Hermitian matrix polynomials in the
// nuclear coordinate.

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "bohmion/errors.hpp"
#include "bohmion/integrators.hpp"
#include "bohmion/kernels.hpp"

namespace bohmion {

inline Eigen::MatrixXcd pauli_x() {
  Eigen::MatrixXcd s(2, 2);
  s << 0.0, 1.0, 1.0, 0.0;
  return s;
}

inline Eigen::MatrixXcd pauli_y() {
  Eigen::MatrixXcd s(2, 2);
  s << 0.0, cplx(0.0, -1.0), cplx(0.0, 1.0), 0.0;
  return s;
}

inline Eigen::MatrixXcd pauli_z() {
  Eigen::MatrixXcd s(2, 2);
  s << 1.0, 0.0, 0.0, -1.0;
  return s;
}

/// H_e(q) = sum_k C_k q^k with Hermitian d x d coefficients, 2 <= d <= 16.
class ElectronicModel {
 public:
  static constexpr int max_dimension = 16;
  static constexpr double hermitian_tol = 1e-12;

  static ElectronicModel constant(Eigen::MatrixXcd h) { return {"constant", {std::move(h)}}; }

  /// sigma_z kappa q + sigma_x delta
  static ElectronicModel linear_vibronic(double kappa, double delta) {
    return {"linear_vibronic", {delta * pauli_x(), kappa * pauli_z()}};
  }

  static ElectronicModel polynomial(std::vector<Eigen::MatrixXcd> coeffs) {
    return {"polynomial", std::move(coeffs)};
  }

  const std::string& family() const noexcept { return family_; }
  int dimension() const noexcept { return static_cast<int>(c_.front().rows()); }
  const std::vector<Eigen::MatrixXcd>& coefficients() const noexcept { return c_; }

  bool is_constant() const {
    for (std::size_t k = 1; k < c_.size(); ++k) {
      if (c_[k].cwiseAbs().maxCoeff() != 0.0) return false;
    }
    return true;
  }

  Eigen::MatrixXcd H(double q) const {
    Eigen::MatrixXcd acc = c_.back();
    for (auto it = c_.rbegin() + 1; it != c_.rend(); ++it) acc = (acc * q + *it).eval();
    return acc;
  }

  Eigen::MatrixXcd dH(double q) const {
    const int d = dimension();
    Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(d, d);
    for (std::size_t k = c_.size() - 1; k >= 1; --k) acc = (acc * q + static_cast<double>(k) * c_[k]).eval();
    return acc;
  }

  /// Entrywise K * H_e, exact through the kernel moments.
  ElectronicModel smoothed(const SmoothingKernel& k) const {
    const int d = dimension();
    std::vector<Eigen::MatrixXcd> out(c_.size(), Eigen::MatrixXcd::Zero(d, d));
    for (std::size_t deg = 0; deg < c_.size(); ++deg) {
      double binom = 1.0;
      for (std::size_t j = 0; j <= deg; ++j) {
        if (j > 0) binom = binom * static_cast<double>(deg - j + 1) / static_cast<double>(j);
        const double m = k.moment(static_cast<int>(j));
        if (m != 0.0) out[deg - j] += binom * m * c_[deg];
      }
    }
    return {family_ + "_smoothed", std::move(out)};
  }

 private:
  ElectronicModel(std::string family, std::vector<Eigen::MatrixXcd> coeffs)
      : family_(std::move(family)), c_(std::move(coeffs)) {
    if (c_.empty()) throw ConfigError("electronic model needs at least one coefficient");
    const auto d = c_.front().rows();
    if (d < 2 || d > max_dimension) {
      throw DimensionError("electronic dimension must lie in [2, 16], got " + std::to_string(d));
    }
    for (std::size_t k = 0; k < c_.size(); ++k) {
      if (c_[k].rows() != d || c_[k].cols() != d) throw DimensionError("electronic coefficients differ in shape");
      if (!c_[k].allFinite()) throw ConfigError("electronic coefficients must be finite");
      if (hermiticity_defect(c_[k]) > hermitian_tol) {
        throw StructureError("electronic coefficient C_" + std::to_string(k) + " is not Hermitian");
      }
      c_[k] = 0.5 * (c_[k] + c_[k].adjoint()).eval();
    }
  }

  std::string family_;
  std::vector<Eigen::MatrixXcd> c_;
};

}  // namespace bohmion
