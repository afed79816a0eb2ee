#pragma once

// Pairwise kernel quadratures shared by every regularized Hamiltonian:
//
//   I^KK_ab   = \int K(s - q_a) K(s - q_b) / Dbar(s) ds
//   I^dKdK_ab = \int K'(s - q_a) K'(s - q_b) / Dbar(s) ds,     Dbar(s) = sum_c w_c K(s - q_c)
//
// Integrands are evaluated through phi_a = K_a / sqrt(Dbar) built from log K, so the
// quotient never forms 0/0 in the tails.

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>
#include <Eigen/Dense>

#include "bohmion/ensemble.hpp"
#include "bohmion/errors.hpp"
#include "bohmion/kernels.hpp"

namespace bohmion {

struct PairIntegrals {
  Eigen::MatrixXd kk;
  Eigen::MatrixXd dd;
};

/// d I_ab / d q_c, indexed as kk[c](a, b).
struct PairIntegralGradients {
  std::vector<Eigen::MatrixXd> kk;
  std::vector<Eigen::MatrixXd> dd;
};

struct QuadratureNodes {
  std::vector<double> s;
  std::vector<double> weight;
};

/// Nodes and weights for integrating pair integrands of particles at q.
inline QuadratureNodes quadrature_nodes(const SmoothingKernel& k, const QuadratureGrid& grid,
                                        std::span<const double> q, QuadratureRule rule) {
  QuadratureNodes out;
  if (resolve_rule(k, rule) == QuadratureRule::Trapezoid) {
    out.s = grid.nodes();
    out.weight.resize(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) out.weight[i] = grid.weight(i);
    return out;
  }
  // Panels never straddle a particle, so every panel integrand is analytic.
  std::vector<double> breaks{grid.lo(), grid.hi()};
  for (double x : q) {
    if (x > grid.lo() && x < grid.hi()) breaks.push_back(x);
  }
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());

  using Gauss = boost::math::quadrature::gauss<double, 8>;
  const auto& xs = Gauss::abscissa();
  const auto& ws = Gauss::weights();
  const double panel = 8.0 * grid.spacing();
  for (std::size_t seg = 0; seg + 1 < breaks.size(); ++seg) {
    const double a = breaks[seg];
    const double b = breaks[seg + 1];
    const auto m = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil((b - a) / panel)));
    const double len = (b - a) / static_cast<double>(m);
    for (std::size_t j = 0; j < m; ++j) {
      const double mid = a + (static_cast<double>(j) + 0.5) * len;
      const double half = 0.5 * len;
      for (std::size_t i = 0; i < xs.size(); ++i) {
        out.s.push_back(mid + half * xs[i]);
        out.weight.push_back(half * ws[i]);
        if (xs[i] != 0.0) {
          out.s.push_back(mid - half * xs[i]);
          out.weight.push_back(half * ws[i]);
        }
      }
    }
  }
  return out;
}

namespace detail {

inline void mirror_upper(Eigen::MatrixXd& m) {
  for (Eigen::Index a = 0; a < m.rows(); ++a) {
    for (Eigen::Index b = 0; b < a; ++b) m(a, b) = m(b, a);
  }
}

inline void check_pair_inputs(std::span<const double> q, std::span<const double> w,
                              const SmoothingKernel& k, const QuadratureGrid& grid) {
  if (q.empty()) throw DegenerateEnsembleError("ensemble has no Bohmions");
  if (q.size() != w.size()) throw DimensionError("positions and weights differ in length");
  double sum = 0.0;
  for (double x : w) {
    if (!(x > 0.0)) throw DegenerateEnsembleError("Bohmion weights must be positive");
    sum += x;
  }
  if (std::abs(sum - 1.0) > 1e-10) throw DegenerateEnsembleError("Bohmion weights must sum to 1");
  grid.require_resolves(k);
  const auto [mn, mx] = std::minmax_element(q.begin(), q.end());
  const double m = k.required_margin();
  if (!grid.covers(*mn - m, *mx + m)) {
    throw DomainError("quadrature grid [" + std::to_string(grid.lo()) + ", " + std::to_string(grid.hi()) +
                      "] does not cover the kernel support of particles in [" + std::to_string(*mn) +
                      ", " + std::to_string(*mx) + "]");
  }
}

/// Per-node data handed to visitors: phi_a = K_a / sqrt(Dbar), share_a = K_a / Dbar (bounded by
/// 1 / w_a), slope_a = K'_a / K_a, curv_a = K''_a / K_a.
struct NodeData {
  double s = 0.0;
  double weight = 0.0;
  std::vector<double> phi;
  std::vector<double> share;
  std::vector<double> slope;
  std::vector<double> curv;
};

template <class Visit>
void visit_nodes(std::span<const double> q, std::span<const double> w, const SmoothingKernel& k,
                 const QuadratureGrid& grid, const QuadratureOptions& opt, Visit&& visit) {
  const std::size_t n = q.size();
  const QuadratureNodes nodes = quadrature_nodes(k, grid, q, opt.rule);
  const std::size_t m = nodes.s.size();

  std::vector<double> logw(n);
  for (std::size_t a = 0; a < n; ++a) logw[a] = std::log(w[a]);

  // log Dbar at every node, by log-sum-exp.
  std::vector<double> logd(m);
  std::vector<double> logk(m * n);
  double logd_max = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < m; ++j) {
    double* lk = &logk[j * n];
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < n; ++a) {
      lk[a] = k.log_value(nodes.s[j] - q[a]);
      top = std::max(top, logw[a] + lk[a]);
    }
    double acc = 0.0;
    for (std::size_t a = 0; a < n; ++a) acc += std::exp(logw[a] + lk[a] - top);
    logd[j] = top + std::log(acc);
    logd_max = std::max(logd_max, logd[j]);
  }
  const double log_floor = opt.tail_cutoff > 0.0 ? logd_max + std::log(opt.tail_cutoff)
                                                 : -std::numeric_limits<double>::infinity();

  NodeData d;
  d.phi.resize(n);
  d.share.resize(n);
  d.slope.resize(n);
  d.curv.resize(n);
  for (std::size_t j = 0; j < m; ++j) {
    if (logd[j] < log_floor) continue;
    d.s = nodes.s[j];
    d.weight = nodes.weight[j];
    for (std::size_t a = 0; a < n; ++a) {
      const double x = d.s - q[a];
      d.phi[a] = std::exp(logk[j * n + a] - 0.5 * logd[j]);
      d.share[a] = std::exp(logk[j * n + a] - logd[j]);
      d.slope[a] = k.slope_ratio(x);
      d.curv[a] = k.curvature_ratio(x);
    }
    visit(d);
  }
}

/// slope_a * slope_b, with the cusp convention for HelmholtzGreen: a node sitting exactly on a
/// particle takes the average of the one-sided limits of the product.
inline double slope_product(const SmoothingKernel& k, std::span<const double> q, const NodeData& d,
                            std::size_t a, std::size_t b) {
  if (k.family() == KernelFamily::HelmholtzGreen && (a == b || q[a] == q[b])) {
    return 1.0 / (k.alpha() * k.alpha());
  }
  return d.slope[a] * d.slope[b];
}

inline PairIntegrals pair_integrals(std::span<const double> q, std::span<const double> w,
                                    const SmoothingKernel& k, const QuadratureGrid& grid,
                                    const QuadratureOptions& opt) {
  check_pair_inputs(q, w, k, grid);
  const auto n = static_cast<Eigen::Index>(q.size());
  PairIntegrals out{Eigen::MatrixXd::Zero(n, n), Eigen::MatrixXd::Zero(n, n)};
  visit_nodes(q, w, k, grid, opt, [&](const NodeData& d) {
    for (Eigen::Index a = 0; a < n; ++a) {
      for (Eigen::Index b = a; b < n; ++b) {
        const auto ua = static_cast<std::size_t>(a);
        const auto ub = static_cast<std::size_t>(b);
        const double pp = d.weight * d.phi[ua] * d.phi[ub];
        out.kk(a, b) += pp;
        out.dd(a, b) += pp * slope_product(k, q, d, ua, ub);
      }
    }
  });
  mirror_upper(out.kk);
  mirror_upper(out.dd);
  return out;
}

}  // namespace detail

inline PairIntegrals pair_integrals(const BohmionEnsemble& ens, const SmoothingKernel& k,
                                    const QuadratureGrid& grid, const QuadratureOptions& opt = {}) {
  return detail::pair_integrals({ens.q.data(), static_cast<std::size_t>(ens.q.size())},
                                {ens.w.data(), static_cast<std::size_t>(ens.w.size())}, k, grid, opt);
}

inline Eigen::MatrixXd pair_integral_KK(const BohmionEnsemble& ens, const SmoothingKernel& k,
                                        const QuadratureGrid& grid, const QuadratureOptions& opt = {}) {
  return pair_integrals(ens, k, grid, opt).kk;
}

inline Eigen::MatrixXd pair_integral_dKdK(const BohmionEnsemble& ens, const SmoothingKernel& k,
                                          const QuadratureGrid& grid, const QuadratureOptions& opt = {}) {
  return pair_integrals(ens, k, grid, opt).dd;
}

/// Finite-difference step used for HelmholtzGreen gradients, whose K'' carries a delta at 0.
inline double fd_step(const SmoothingKernel& k) { return 1e-5 * k.alpha(); }

/// Full gradient tensors dI_ab/dq_c. Gaussian: differentiated integrands; HelmholtzGreen:
/// central differences of the integrals.
inline PairIntegralGradients pair_integral_grads(const BohmionEnsemble& ens, const SmoothingKernel& k,
                                                 const QuadratureGrid& grid,
                                                 const QuadratureOptions& opt = {}) {
  const auto n = ens.size();
  PairIntegralGradients out;
  out.kk.assign(static_cast<std::size_t>(n), Eigen::MatrixXd::Zero(n, n));
  out.dd.assign(static_cast<std::size_t>(n), Eigen::MatrixXd::Zero(n, n));

  if (k.family() == KernelFamily::HelmholtzGreen) {
    const double eps = fd_step(k);
    for (Eigen::Index c = 0; c < n; ++c) {
      BohmionEnsemble plus = ens, minus = ens;
      plus.q[c] += eps;
      minus.q[c] -= eps;
      const PairIntegrals ip = pair_integrals(plus, k, grid, opt);
      const PairIntegrals im = pair_integrals(minus, k, grid, opt);
      out.kk[static_cast<std::size_t>(c)] = (ip.kk - im.kk) / (2.0 * eps);
      out.dd[static_cast<std::size_t>(c)] = (ip.dd - im.dd) / (2.0 * eps);
    }
    return out;
  }

  std::span<const double> q{ens.q.data(), static_cast<std::size_t>(n)};
  std::span<const double> w{ens.w.data(), static_cast<std::size_t>(n)};
  detail::check_pair_inputs(q, w, k, grid);
  detail::visit_nodes(q, w, k, grid, opt, [&](const detail::NodeData& d) {
    for (Eigen::Index c = 0; c < n; ++c) {
      const auto uc = static_cast<std::size_t>(c);
      // d(1/Dbar)/dq_c contribution, common to every (a, b)
      const double denom = w[uc] * d.slope[uc] * d.share[uc];
      auto& gk = out.kk[uc];
      auto& gd = out.dd[uc];
      for (Eigen::Index a = 0; a < n; ++a) {
        const auto ua = static_cast<std::size_t>(a);
        for (Eigen::Index b = a; b < n; ++b) {
          const auto ub = static_cast<std::size_t>(b);
          const double pp = d.weight * d.phi[ua] * d.phi[ub];
          double tk = denom;
          double td = d.slope[ua] * d.slope[ub] * denom;
          if (a == c) {
            tk -= d.slope[ua];
            td -= d.curv[ua] * d.slope[ub];
          }
          if (b == c) {
            tk -= d.slope[ub];
            td -= d.slope[ua] * d.curv[ub];
          }
          gk(a, b) += pp * tk;
          gd(a, b) += pp * td;
        }
      }
    }
  });
  for (Eigen::Index c = 0; c < n; ++c) {
    auto& gk = out.kk[static_cast<std::size_t>(c)];
    auto& gd = out.dd[static_cast<std::size_t>(c)];
    detail::mirror_upper(gk);
    detail::mirror_upper(gd);
  }
  return out;
}

/// Gradient with respect to q_c of  sum_ab ckk_ab I^KK_ab + sum_ab cdd_ab I^dKdK_ab
/// for symmetric coefficient matrices. O(N^2) per node for Gaussians instead of the O(N^3)
/// full tensor. When `integrals` is non-null the pair integrals at ens are stored there as well,
/// sharing the node pass.
inline Eigen::VectorXd pair_sum_gradient(const BohmionEnsemble& ens, const SmoothingKernel& k,
                                         const QuadratureGrid& grid, const Eigen::MatrixXd& ckk,
                                         const Eigen::MatrixXd& cdd, const QuadratureOptions& opt = {},
                                         PairIntegrals* integrals = nullptr) {
  const auto n = ens.size();
  if (ckk.rows() != n || ckk.cols() != n || cdd.rows() != n || cdd.cols() != n) {
    throw DimensionError("pair_sum_gradient: coefficient matrices must be N x N");
  }
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(n);
  // a lone Bohmion's self integrals do not depend on its position
  if (n == 1) {
    if (integrals != nullptr) *integrals = pair_integrals(ens, k, grid, opt);
    return grad;
  }

  if (k.family() == KernelFamily::HelmholtzGreen) {
    const double eps = fd_step(k);
    for (Eigen::Index c = 0; c < n; ++c) {
      BohmionEnsemble plus = ens, minus = ens;
      plus.q[c] += eps;
      minus.q[c] -= eps;
      const PairIntegrals ip = pair_integrals(plus, k, grid, opt);
      const PairIntegrals im = pair_integrals(minus, k, grid, opt);
      const double fp = ckk.cwiseProduct(ip.kk).sum() + cdd.cwiseProduct(ip.dd).sum();
      const double fm = ckk.cwiseProduct(im.kk).sum() + cdd.cwiseProduct(im.dd).sum();
      grad[c] = (fp - fm) / (2.0 * eps);
    }
    if (integrals != nullptr) *integrals = pair_integrals(ens, k, grid, opt);
    return grad;
  }

  std::span<const double> q{ens.q.data(), static_cast<std::size_t>(n)};
  std::span<const double> w{ens.w.data(), static_cast<std::size_t>(n)};
  detail::check_pair_inputs(q, w, k, grid);
  Eigen::VectorXd phi(n), psi(n);
  if (integrals != nullptr) *integrals = {Eigen::MatrixXd::Zero(n, n), Eigen::MatrixXd::Zero(n, n)};
  detail::visit_nodes(q, w, k, grid, opt, [&](const detail::NodeData& d) {
    for (Eigen::Index a = 0; a < n; ++a) {
      phi[a] = d.phi[static_cast<std::size_t>(a)];
      psi[a] = d.slope[static_cast<std::size_t>(a)] * phi[a];
    }
    if (integrals != nullptr) {
      for (Eigen::Index a = 0; a < n; ++a) {
        for (Eigen::Index b = a; b < n; ++b) {
          integrals->kk(a, b) += d.weight * phi[a] * phi[b];
          integrals->dd(a, b) += d.weight * psi[a] * psi[b];
        }
      }
    }
    const Eigen::VectorXd cphi = ckk * phi;
    const Eigen::VectorXd cpsi = cdd * psi;
    const double skk = phi.dot(cphi);
    const double sdd = psi.dot(cpsi);
    for (Eigen::Index c = 0; c < n; ++c) {
      const auto uc = static_cast<std::size_t>(c);
      const double denom = w[uc] * d.slope[uc] * d.share[uc];
      const double gkk = -2.0 * d.slope[uc] * phi[c] * cphi[c] + skk * denom;
      const double gdd = -2.0 * d.curv[uc] * phi[c] * cpsi[c] + sdd * denom;
      grad[c] += d.weight * (gkk + gdd);
    }
  });
  if (integrals != nullptr) {
    detail::mirror_upper(integrals->kk);
    detail::mirror_upper(integrals->dd);
  }
  return grad;
}

}  // namespace bohmion
