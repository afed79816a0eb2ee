#pragma once

#include <cmath>
#include <span>
#include <string>

#include <Eigen/Dense>

#include "bohmion/errors.hpp"

namespace bohmion {

/// Bohmion labels a = 1..N: positions q_a, momenta p_a and constant weights w_a.
struct BohmionEnsemble {
  Eigen::VectorXd q;
  Eigen::VectorXd p;
  Eigen::VectorXd w;

  Eigen::Index size() const noexcept { return q.size(); }

  std::span<const double> positions() const noexcept {
    return {q.data(), static_cast<std::size_t>(q.size())};
  }

  static BohmionEnsemble uniform(Eigen::VectorXd q, Eigen::VectorXd p) {
    const auto n = q.size();
    return {std::move(q), std::move(p), Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n))};
  }

  /// Checks the weight invariants only (positive, unit sum).
  void validate_weights(double sum_tol = 1e-10) const {
    if (w.size() == 0) throw DegenerateEnsembleError("ensemble has no Bohmions");
    if (w.size() != q.size()) throw DimensionError("weights and positions differ in length");
    for (Eigen::Index a = 0; a < w.size(); ++a) {
      if (!(w[a] > 0.0) || !std::isfinite(w[a])) {
        throw DegenerateEnsembleError("weight w[" + std::to_string(a) + "] must be positive");
      }
    }
    if (std::abs(w.sum() - 1.0) > sum_tol) {
      throw DegenerateEnsembleError("weights sum to " + std::to_string(w.sum()) + ", expected 1");
    }
  }

  void validate(double sum_tol = 1e-10) const {
    if (p.size() != q.size()) throw DimensionError("positions and momenta differ in length");
    validate_weights(sum_tol);
    if (!q.allFinite() || !p.allFinite()) throw NumericalError("non-finite Bohmion phase point");
  }

  /// Rescales w to unit sum. Returns false when the weights were already normalized.
  bool normalize_weights() {
    const double s = w.sum();
    if (!(s > 0.0)) throw DegenerateEnsembleError("weights sum to zero");
    if (std::abs(s - 1.0) <= 1e-14) return false;
    w /= s;
    return true;
  }
};

}  // namespace bohmion
