#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "catch_amalgamated.hpp"

#include "bohmion/pair_integrals.hpp"

using namespace bohmion;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

BohmionEnsemble make(std::vector<double> q, std::vector<double> w) {
  BohmionEnsemble e;
  e.q = Eigen::Map<Eigen::VectorXd>(q.data(), static_cast<Eigen::Index>(q.size()));
  e.w = Eigen::Map<Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
  e.p = Eigen::VectorXd::Zero(e.q.size());
  return e;
}

QuadratureGrid grid_for(const SmoothingKernel& k, const BohmionEnsemble& e) {
  return covering_grid(k, e.positions());
}

// Adaptive Gauss-Kronrod on the plain quotient, split at every particle.
Eigen::MatrixXd oracle(const BohmionEnsemble& e, const SmoothingKernel& k, bool deriv) {
  const auto n = e.size();
  std::vector<double> br(e.q.data(), e.q.data() + n);
  const double reach = k.family() == KernelFamily::Gaussian ? 14.0 * k.alpha() : 45.0 * k.alpha();
  br.push_back(*std::min_element(br.begin(), br.end()) - reach);
  br.push_back(*std::max_element(br.begin(), br.end() - 1) + reach);
  std::sort(br.begin(), br.end());
  Eigen::MatrixXd out(n, n);
  boost::math::quadrature::gauss_kronrod<double, 31> gk;
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = 0; b < n; ++b) {
      const auto f = [&](double s) {
        double d = 0.0;
        for (Eigen::Index c = 0; c < n; ++c) d += e.w[c] * k.value(s - e.q[c]);
        if (d == 0.0) return 0.0;
        const double fa = deriv ? k.derivative(s - e.q[a]) : k.value(s - e.q[a]);
        const double fb = deriv ? k.derivative(s - e.q[b]) : k.value(s - e.q[b]);
        return fa * fb / d;
      };
      double acc = 0.0;
      for (std::size_t i = 0; i + 1 < br.size(); ++i) {
        if (br[i + 1] > br[i]) acc += gk.integrate(f, br[i], br[i + 1], 10, 1e-12);
      }
      out(a, b) = acc;
    }
  }
  return out;
}

BohmionEnsemble random_ensemble(std::mt19937_64& rng, int n, double spread) {
  std::uniform_real_distribution<double> uq(-spread, spread), uw(0.2, 1.0);
  std::vector<double> q(static_cast<std::size_t>(n)), w(static_cast<std::size_t>(n));
  double s = 0.0;
  for (int i = 0; i < n; ++i) {
    q[static_cast<std::size_t>(i)] = uq(rng);
    w[static_cast<std::size_t>(i)] = uw(rng);
    s += w[static_cast<std::size_t>(i)];
  }
  for (double& x : w) x /= s;
  return make(q, w);
}

}  // namespace

TEST_CASE("single-particle integrals", "[pair]") {
  for (auto k : {SmoothingKernel::gaussian(1.0), SmoothingKernel::helmholtz(1.0), SmoothingKernel::gaussian(0.3),
                 SmoothingKernel::helmholtz(0.5)}) {
    const BohmionEnsemble e = make({0.37}, {1.0});
    const PairIntegrals I = pair_integrals(e, k, grid_for(k, e));
    CHECK_THAT(I.kk(0, 0), WithinRel(1.0, 1e-10));
    CHECK_THAT(I.dd(0, 0), WithinRel(1.0 / (k.alpha() * k.alpha()), 1e-10));
  }
  const SmoothingKernel h = SmoothingKernel::helmholtz(0.5);
  const BohmionEnsemble e = make({0.0}, {1.0});
  CHECK_THAT(pair_integral_dKdK(e, h, grid_for(h, e))(0, 0), WithinRel(4.0, 1e-10));
}

TEST_CASE("coincident particles behave as one", "[pair]") {
  for (auto k : {SmoothingKernel::gaussian(0.7), SmoothingKernel::helmholtz(0.7)}) {
    const BohmionEnsemble e = make({0.2, 0.2}, {0.5, 0.5});
    const PairIntegrals I = pair_integrals(e, k, grid_for(k, e));
    CHECK_THAT((I.kk - Eigen::MatrixXd::Ones(2, 2)).cwiseAbs().maxCoeff(), WithinAbs(0.0, 1e-10));
    CHECK_THAT((I.dd - Eigen::MatrixXd::Constant(2, 2, 1.0 / 0.49)).cwiseAbs().maxCoeff(), WithinAbs(0.0, 1e-9));
  }
}

TEST_CASE("far-separated cross integrals vanish", "[pair]") {
  const SmoothingKernel k = SmoothingKernel::gaussian(0.5);
  const BohmionEnsemble e = make({-5.0, 5.0}, {0.5, 0.5});
  const PairIntegrals I = pair_integrals(e, k, grid_for(k, e));
  CHECK(std::abs(I.kk(0, 1)) < 1e-8);
  CHECK(std::abs(I.dd(0, 1)) < 1e-8);
  // each particle then sees only its own weight: I_aa = 1 / w_a
  CHECK_THAT(I.kk(0, 0), WithinRel(2.0, 1e-9));
}

TEST_CASE("pair integrals match adaptive quadrature", "[pair]") {
  std::mt19937_64 rng(20240611);
  for (int trial = 0; trial < 2; ++trial) {
    for (auto k : {SmoothingKernel::gaussian(0.6), SmoothingKernel::helmholtz(0.6)}) {
      const BohmionEnsemble e = random_ensemble(rng, 3, 1.2);
      const PairIntegrals I = pair_integrals(e, k, grid_for(k, e));
      const Eigen::MatrixXd kk = oracle(e, k, false);
      const Eigen::MatrixXd dd = oracle(e, k, true);
      CHECK((I.kk - kk).cwiseAbs().maxCoeff() <= 1e-9 * kk.cwiseAbs().maxCoeff());
      CHECK((I.dd - dd).cwiseAbs().maxCoeff() <= 1e-9 * dd.cwiseAbs().maxCoeff());
    }
  }
}

TEST_CASE("pair integral invariants", "[pair]") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 5; ++trial) {
    for (auto k : {SmoothingKernel::gaussian(0.4), SmoothingKernel::helmholtz(0.4)}) {
      const BohmionEnsemble e = random_ensemble(rng, 4, 1.5);
      const PairIntegrals I = pair_integrals(e, k, grid_for(k, e));
      CHECK((I.kk - I.kk.transpose()).cwiseAbs().maxCoeff() == 0.0);
      CHECK((I.dd - I.dd.transpose()).cwiseAbs().maxCoeff() == 0.0);
      CHECK(I.kk.minCoeff() > 0.0);
      CHECK(I.kk.maxCoeff() <= 1.0 / e.w.minCoeff() * (1.0 + 1e-12));
      CHECK(I.dd.diagonal().minCoeff() > 0.0);

      BohmionEnsemble shifted = e;
      shifted.q.array() += 3.71;
      const PairIntegrals J = pair_integrals(shifted, k, grid_for(k, shifted));
      CHECK((I.kk - J.kk).cwiseAbs().maxCoeff() <= 1e-9);
      CHECK((I.dd - J.dd).cwiseAbs().maxCoeff() <= 1e-9 * I.dd.cwiseAbs().maxCoeff());
    }
  }
}

TEST_CASE("input validation", "[pair]") {
  const SmoothingKernel k = SmoothingKernel::gaussian(0.5);
  BohmionEnsemble e = make({0.0, 1.0}, {0.0, 0.0});
  const QuadratureGrid g = covering_grid(k, e.positions());
  CHECK_THROWS_AS(pair_integral_KK(e, k, g), DegenerateEnsembleError);
  e.w << 0.6, 0.6;
  CHECK_THROWS_AS(pair_integral_KK(e, k, g), DegenerateEnsembleError);
  e.w << 0.5, 0.5;
  e.q << 0.0, 30.0;
  CHECK_THROWS_AS(pair_integral_KK(e, k, g), DomainError);
  const QuadratureGrid coarse(-10.0, 10.0, 64);
  e.q << 0.0, 1.0;
  CHECK_THROWS_AS(pair_integral_KK(e, k, coarse), ConfigError);
}

TEST_CASE("single-particle gradients vanish", "[pair][grad]") {
  for (auto k : {SmoothingKernel::gaussian(0.8), SmoothingKernel::helmholtz(0.8)}) {
    const BohmionEnsemble e = make({-0.41}, {1.0});
    const QuadratureGrid g = grid_for(k, e);
    const PairIntegralGradients G = pair_integral_grads(e, k, g);
    CHECK(std::abs(G.kk[0](0, 0)) < 1e-9);
    CHECK(std::abs(G.dd[0](0, 0)) < 1e-8);
  }
}

TEST_CASE("reflection-symmetric pair has opposite gradients", "[pair][grad]") {
  for (auto k : {SmoothingKernel::gaussian(0.5), SmoothingKernel::helmholtz(0.5)}) {
    const BohmionEnsemble e = make({-0.3, 0.3}, {0.5, 0.5});
    const QuadratureGrid g = grid_for(k, e);
    const PairIntegralGradients G = pair_integral_grads(e, k, g);
    CHECK_THAT(G.kk[0](0, 1), WithinAbs(-G.kk[1](0, 1), 1e-9));
    CHECK_THAT(G.dd[0](0, 1), WithinAbs(-G.dd[1](0, 1), 1e-8));
  }
}

TEST_CASE("gradients match finite differences of the integrals", "[pair][grad]") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 4; ++trial) {
    for (auto k : {SmoothingKernel::gaussian(0.5), SmoothingKernel::helmholtz(0.5)}) {
      const BohmionEnsemble e = random_ensemble(rng, 3, 1.0);
      // a common grid wide enough for every perturbed configuration
      const QuadratureGrid g = covering_grid(k, e.positions(), {.margin = k.default_margin() + 1.0});
      const PairIntegralGradients G = pair_integral_grads(e, k, g);
      const double eps = 1e-4 * k.alpha();
      for (Eigen::Index c = 0; c < 3; ++c) {
        BohmionEnsemble plus = e, minus = e;
        plus.q[c] += eps;
        minus.q[c] -= eps;
        const PairIntegrals ip = pair_integrals(plus, k, g), im = pair_integrals(minus, k, g);
        const Eigen::MatrixXd fk = (ip.kk - im.kk) / (2.0 * eps);
        const Eigen::MatrixXd fdd = (ip.dd - im.dd) / (2.0 * eps);
        const auto uc = static_cast<std::size_t>(c);
        CHECK((G.kk[uc] - fk).cwiseAbs().maxCoeff() <= 1e-6 * fk.cwiseAbs().maxCoeff());
        CHECK((G.dd[uc] - fdd).cwiseAbs().maxCoeff() <= 1e-6 * fdd.cwiseAbs().maxCoeff());
      }
    }
  }
}

TEST_CASE("contracted gradient equals the contracted tensor", "[pair][grad]") {
  std::mt19937_64 rng(3);
  for (auto k : {SmoothingKernel::gaussian(0.5), SmoothingKernel::helmholtz(0.5)}) {
    const BohmionEnsemble e = random_ensemble(rng, 4, 1.0);
    const QuadratureGrid g = grid_for(k, e);
    Eigen::MatrixXd ckk = Eigen::MatrixXd::Random(4, 4), cdd = Eigen::MatrixXd::Random(4, 4);
    ckk = (ckk + ckk.transpose()).eval();
    cdd = (cdd + cdd.transpose()).eval();
    PairIntegrals I;
    const Eigen::VectorXd grad = pair_sum_gradient(e, k, g, ckk, cdd, {}, &I);
    const PairIntegralGradients G = pair_integral_grads(e, k, g);
    const PairIntegrals ref = pair_integrals(e, k, g);
    CHECK((I.kk - ref.kk).cwiseAbs().maxCoeff() < 1e-13);
    CHECK((I.dd - ref.dd).cwiseAbs().maxCoeff() < 1e-12);
    for (Eigen::Index c = 0; c < 4; ++c) {
      const auto uc = static_cast<std::size_t>(c);
      const double expect = ckk.cwiseProduct(G.kk[uc]).sum() + cdd.cwiseProduct(G.dd[uc]).sum();
      CHECK_THAT(grad[c], WithinAbs(expect, 1e-9 * (1.0 + std::abs(expect))));
    }
  }
}

TEST_CASE("trapezoid rule converges at second order for the exponential kernel", "[pair][convergence]") {
  // Bohmions on nodes of the coarsest lattice keep the cusps on nodes at every level.
  const SmoothingKernel k = SmoothingKernel::helmholtz(1.0);
  const double h0 = 80.0 / 640.0;
  const BohmionEnsemble e = make({-4.0 * h0, 0.0, 6.0 * h0}, {0.3, 0.3, 0.4});
  QuadratureOptions opt;
  opt.rule = QuadratureRule::Trapezoid;
  std::vector<double> v;
  for (int level = 0; level < 4; ++level) {
    const auto n = static_cast<std::size_t>(640) << level;
    const QuadratureGrid g(-40.0, 40.0, n);
    v.push_back(pair_integral_dKdK(e, k, g, opt)(0, 2));
  }
  for (int i = 0; i + 2 < static_cast<int>(v.size()); ++i) {
    const double ratio = (v[i] - v[i + 1]) / (v[i + 1] - v[i + 2]);
    CHECK_THAT(std::log2(ratio), WithinAbs(2.0, 0.3));
  }
}
