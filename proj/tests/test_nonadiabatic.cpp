#include <cmath>
#include <random>

#include <unsupported/Eigen/MatrixFunctions>

#include "catch_amalgamated.hpp"

#include "bohmion/nonadiabatic.hpp"
#include "generators.hpp"

using namespace bohmion;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

BohmionEnsemble make(std::vector<double> q, std::vector<double> p, std::vector<double> w) {
  const auto n = static_cast<Eigen::Index>(q.size());
  return {Eigen::Map<Eigen::VectorXd>(q.data(), n), Eigen::Map<Eigen::VectorXd>(p.data(), n),
          Eigen::Map<Eigen::VectorXd>(w.data(), n)};
}

Eigen::VectorXcd basis(int d, int i) {
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(d);
  v[i] = 1.0;
  return v;
}

QuadratureGrid grid_for(const SmoothingKernel& k, const BohmionEnsemble& e) {
  return covering_grid(k, std::vector<double>(e.q.begin(), e.q.end()));
}

double max_diff(const std::vector<Eigen::MatrixXcd>& a, const std::vector<Eigen::MatrixXcd>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, (a[i] - b[i]).cwiseAbs().maxCoeff());
  return m;
}

}  // namespace

TEST_CASE("smoothed electronic Hamiltonian", "[nonadiabatic][smoothing]") {
  const SmoothingKernel g = SmoothingKernel::gaussian(0.5);
  const QuadratureGrid grid(-15.0, 15.0, 4800);
  const ElectronicModel c = ElectronicModel::constant(pauli_x() + 0.3 * pauli_z());
  CHECK((smoothed_He(c, g, 0.7) - c.H(0.0)).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((smoothed_He(c, g, grid, 0.7) - c.H(0.0)).cwiseAbs().maxCoeff() < 1e-12);

  const ElectronicModel lin = ElectronicModel::polynomial({Eigen::MatrixXcd::Zero(2, 2), pauli_z()});
  CHECK((smoothed_He(lin, g, grid, -1.2) + 1.2 * pauli_z()).cwiseAbs().maxCoeff() < 1e-12);

  const ElectronicModel quad =
      ElectronicModel::polynomial({Eigen::MatrixXcd::Zero(2, 2), Eigen::MatrixXcd::Zero(2, 2), 0.5 * pauli_z()});
  const Eigen::MatrixXcd expect = (0.5 * 0.81 + 0.5 * 0.25) * pauli_z();
  CHECK((smoothed_He(quad, g, 0.9) - expect).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((smoothed_He(quad, g, grid, 0.9) - expect).cwiseAbs().maxCoeff() < 1e-11);

  std::mt19937_64 rng(4);
  const ElectronicModel r = ElectronicModel::polynomial({gen::hermitian(rng, 3), gen::hermitian(rng, 3),
                                                         gen::hermitian(rng, 3), 0.2 * gen::hermitian(rng, 3)});
  const Eigen::MatrixXcd quadrature = smoothed_He(r, g, grid, 0.4);
  CHECK(hermiticity_defect(quadrature) == 0.0);
  CHECK((quadrature - smoothed_He(r, g, 0.4)).cwiseAbs().maxCoeff() < 1e-11);
}

TEST_CASE("mean field decouples for a constant electronic Hamiltonian", "[nonadiabatic][meanfield]") {
  const ElectronicModel He = ElectronicModel::constant(pauli_z());
  EvolveOptions opt;
  opt.dt = 1e-2;
  opt.steps = 300;
  opt.stride = 100;
  MeanFieldState s0{0.5, 1.0, (basis(2, 0) + basis(2, 1)) / std::sqrt(2.0)};
  const MeanFieldTrajectory tr = meanfield_evolve(s0, Potential::zero(), He, {}, opt);
  for (std::size_t j = 0; j < tr.t.size(); ++j) {
    CHECK_THAT(tr.states[j].q, WithinAbs(0.5 + tr.t[j], 1e-12));
    const Eigen::MatrixXcd u = (cplx(0.0, -tr.t[j]) * pauli_z()).exp();
    CHECK((tr.states[j].psi - u * s0.psi).norm() < 1e-12);
  }
}

TEST_CASE("mean field with a frozen heavy nucleus", "[nonadiabatic][meanfield]") {
  const ElectronicModel He = ElectronicModel::linear_vibronic(0.7, 0.4);
  EvolveOptions opt;
  opt.dt = 1e-3;
  opt.steps = 1000;
  opt.stride = 250;
  const MeanFieldState s0{0.3, 0.0, basis(2, 0)};
  const MeanFieldTrajectory tr = meanfield_evolve(s0, Potential::zero(), He, {1.0, 1e8, 1.0}, opt);
  for (std::size_t j = 0; j < tr.t.size(); ++j) {
    const Eigen::MatrixXcd u = (cplx(0.0, -tr.t[j]) * He.H(0.3)).exp();
    CHECK((tr.states[j].psi - u * s0.psi).norm() < 1e-6);
  }
}

TEST_CASE("mean field conservation", "[nonadiabatic][meanfield]") {
  const ElectronicModel He = ElectronicModel::linear_vibronic(0.5, 0.3);
  EvolveOptions opt;
  opt.dt = 1e-3;
  opt.steps = 10000;
  opt.stride = 100;
  const MeanFieldState s0{0.8, -0.2, (basis(2, 0) + cplx(0.0, 1.0) * basis(2, 1)) / std::sqrt(2.0)};
  const MeanFieldTrajectory tr = meanfield_evolve(s0, Potential::harmonic(1.0, 1.0), He, {}, opt);
  CHECK(tr.max_norm_drift <= 1e-12);
  for (double e : tr.energy) CHECK(std::abs(e - tr.energy[0]) <= 1e-8 * std::abs(tr.energy[0]));
  CHECK_THROWS_AS(meanfield_evolve({0.0, 0.0, 2.0 * basis(2, 0)}, Potential::zero(), He, {}, opt), NormalizationError);
}

TEST_CASE("EF energy examples", "[nonadiabatic][ef]") {
  const SmoothingKernel k = SmoothingKernel::gaussian(1.0);
  const ElectronicModel sz = ElectronicModel::constant(pauli_z());
  const EFBohmionState one = EFBohmionState::pure(make({0.2}, {1.0}, {1.0}), {basis(2, 0)});
  const EFTerms t = ef_terms(one, sz, k, grid_for(k, one.ens), {}, EFVariant::Hamiltonian);
  CHECK_THAT(t.kinetic, WithinAbs(0.5, 1e-12));
  CHECK(t.quantum == 0.0);
  CHECK_THAT(t.electronic, WithinAbs(1.0, 1e-15));
  CHECK_THAT(ef_reg_hamiltonian(one, sz, k, grid_for(k, one.ens), {}), WithinAbs(1.5, 1e-12));

  // maximally mixed: (hbar^2/4M)(w^2/2 - w^2) / (w alpha^2)
  for (double alpha : {1.0, 0.6}) {
    const SmoothingKernel ka = SmoothingKernel::gaussian(alpha);
    EFBohmionState mixed{make({0.0}, {0.0}, {1.0}), {0.5 * Eigen::MatrixXcd::Identity(2, 2)}};
    const PhysicalConstants c{0.8, 1.5, 1.0};
    const EFTerms tm = ef_terms(mixed, sz, ka, grid_for(ka, mixed.ens), c, EFVariant::Hamiltonian);
    CHECK_THAT(tm.quantum, WithinRel(-c.hbar * c.hbar / (8.0 * c.M * alpha * alpha), 1e-10));
  }

  // orthogonal pure states far apart: the cross coupling dies off
  double prev = INFINITY;
  for (double sep : {4.0, 8.0, 12.0}) {
    const EFBohmionState two =
        EFBohmionState::pure(make({-0.5 * sep, 0.5 * sep}, {0.0, 0.0}, {0.5, 0.5}), {basis(2, 0), basis(2, 1)});
    const double q = std::abs(ef_terms(two, sz, k, grid_for(k, two.ens), {}, EFVariant::Hamiltonian).quantum);
    CHECK(q < prev);
    prev = q;
  }
  CHECK(prev < 1e-7);

  EFBohmionState bad = one;
  bad.rho[0] *= 0.9;
  CHECK_THROWS_AS(ef_reg_hamiltonian(bad, sz, k, grid_for(k, one.ens), {}), StructureError);
}

TEST_CASE("EF gradient", "[nonadiabatic][ef]") {
  const SmoothingKernel k = SmoothingKernel::gaussian(0.8);
  const EFBohmionState one = EFBohmionState::pure(make({0.2}, {0.4}, {1.0}), {(basis(2, 0) + 2.0 * basis(2, 1)).normalized()});
  const CanonicalGradient gc =
      ef_grad(one, ElectronicModel::constant(pauli_x()), k, grid_for(k, one.ens), {}, EFVariant::Hamiltonian);
  CHECK(std::abs(gc.dq[0]) < 1e-12);
  const ElectronicModel lin = ElectronicModel::polynomial({Eigen::MatrixXcd::Zero(2, 2), pauli_z()});
  const CanonicalGradient gl = ef_grad(one, lin, k, grid_for(k, one.ens), {}, EFVariant::Hamiltonian);
  CHECK_THAT(gl.dq[0], WithinAbs((one.rho[0] * pauli_z()).trace().real(), 1e-12));

  std::mt19937_64 rng(77);
  const ElectronicModel He = ElectronicModel::polynomial({gen::hermitian(rng, 3), gen::hermitian(rng, 3),
                                                          0.2 * gen::hermitian(rng, 3)});
  for (int trial = 0; trial < 12; ++trial) {
    const EFVariant v = trial % 2 == 0 ? EFVariant::Hamiltonian : EFVariant::Lagrangian;
    BohmionEnsemble e = gen::ensemble(rng, 3, 1.0);
    EFBohmionState s = EFBohmionState::pure(e, {gen::unit_vector(rng, 3), gen::unit_vector(rng, 3), gen::unit_vector(rng, 3)});
    if (trial % 3 == 2) s.rho[1] = 0.5 * s.rho[1] + s.ens.w[1] / 6.0 * Eigen::MatrixXcd::Identity(3, 3);
    const PhysicalConstants c{0.9, 1.3, 1.0};
    const CanonicalGradient g = ef_grad(s, He, k, grid_for(k, s.ens), c, v);
    const double h = 1e-5;
    for (Eigen::Index a = 0; a < 3; ++a) {
      EFBohmionState up = s, dn = s;
      up.ens.q[a] += h;
      dn.ens.q[a] -= h;
      const double fq =
          (ef_hamiltonian(up, He, k, grid_for(k, up.ens), c, v) - ef_hamiltonian(dn, He, k, grid_for(k, dn.ens), c, v)) / (2 * h);
      CHECK_THAT(g.dq[a], WithinRel(fq, 1e-6) || WithinAbs(fq, 1e-9));
      up = s;
      dn = s;
      up.ens.p[a] += h;
      dn.ens.p[a] -= h;
      const double fp =
          (ef_hamiltonian(up, He, k, grid_for(k, up.ens), c, v) - ef_hamiltonian(dn, He, k, grid_for(k, dn.ens), c, v)) / (2 * h);
      CHECK_THAT(g.dp[a], WithinRel(fp, 1e-6) || WithinAbs(fp, 1e-9));
    }
  }
}

TEST_CASE("EF effective electronic Hamiltonian", "[nonadiabatic][ef]") {
  const SmoothingKernel k = SmoothingKernel::gaussian(0.5);
  const ElectronicModel He = ElectronicModel::polynomial(
      {pauli_x(), Eigen::MatrixXcd::Zero(2, 2), 0.5 * pauli_z()});
  const EFBohmionState one = EFBohmionState::pure(make({0.3}, {0.0}, {1.0}), {basis(2, 0)});
  const QuadratureGrid g1 = grid_for(k, one.ens);
  const Eigen::MatrixXcd h1 = ef_effective_He(one, 0, He, k, g1, {}, EFVariant::Hamiltonian);
  // self term (hbar^2 / 2M alpha^2) rho
  CHECK((h1 - smoothed_He(He, k, 0.3) - 2.0 * one.rho[0]).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((h1 * one.rho[0] - one.rho[0] * h1 - (smoothed_He(He, k, 0.3) * one.rho[0] - one.rho[0] * smoothed_He(He, k, 0.3)))
            .cwiseAbs()
            .maxCoeff() < 1e-12);

  const EFBohmionState two = EFBohmionState::pure(make({-0.2, 0.4}, {0.0, 0.0}, {0.4, 0.6}),
                                                  {basis(2, 0), (basis(2, 0) + basis(2, 1)).normalized()});
  const QuadratureGrid g2 = grid_for(k, two.ens);
  const PhysicalConstants classical{0.0, 1.0, 1.0};
  CHECK((ef_effective_He(two, 1, He, k, g2, classical, EFVariant::Hamiltonian) - smoothed_He(He, k, 0.4))
            .cwiseAbs()
            .maxCoeff() < 1e-15);
  CHECK((ef_effective_He(two, 1, He, k, g2, classical, EFVariant::Lagrangian) - He.H(0.4)).cwiseAbs().maxCoeff() < 1e-15);
  CHECK_THROWS_AS(ef_effective_He(two, 2, He, k, g2, {}, EFVariant::Hamiltonian), DimensionError);
}

TEST_CASE("EF precession and ballistic motion", "[nonadiabatic][ef][evolve]") {
  EFModel m;
  m.He = ElectronicModel::constant(pauli_z());
  EFEvolveOptions opt;
  opt.base.dt = 1e-2;
  opt.base.steps = 500;
  opt.base.stride = 50;
  for (double hbar : {1.0, 0.5}) {
    m.consts = {hbar, 1.0, 1.0};
    const EFBohmionState s0 = EFBohmionState::pure(make({0.1}, {0.6}, {1.0}), {(basis(2, 0) + basis(2, 1)).normalized()});
    const EFTrajectory tr = ef_evolve(s0, m, opt);
    for (std::size_t j = 0; j < tr.t.size(); ++j) {
      const double t = tr.t[j];
      const Eigen::MatrixXcd& r = tr.states[j].rho[0];
      CHECK_THAT((r * pauli_x()).trace().real(), WithinAbs(std::cos(2.0 * t / hbar), 1e-11));
      CHECK_THAT((r * pauli_y()).trace().real(), WithinAbs(std::sin(2.0 * t / hbar), 1e-11));
      CHECK_THAT(tr.states[j].ens.q[0], WithinAbs(0.1 + 0.6 * t, 1e-12));
    }
    CHECK(tr.max_purity_drift <= 1e-12);
  }
}

TEST_CASE("EF conservation along a linear vibronic run", "[nonadiabatic][ef][evolve]") {
  EFModel m;
  m.He = ElectronicModel::linear_vibronic(1.0, 0.5);
  m.kernel = SmoothingKernel::gaussian(1.0);
  EFEvolveOptions opt;
  opt.base.dt = 1e-3;
  opt.base.steps = 2000;
  opt.base.stride = 100;
  const EFBohmionState s0 = EFBohmionState::pure(make({-0.5, 0.5}, {0.2, -0.1}, {0.5, 0.5}),
                                                 {basis(2, 0), (0.6 * basis(2, 0) + cplx(0.0, 0.8) * basis(2, 1))});
  for (EFVariant v : {EFVariant::Hamiltonian, EFVariant::Lagrangian}) {
    m.variant = v;
    const EFTrajectory tr = ef_evolve(s0, m, opt);
    for (double e : tr.energy) CHECK(std::abs(e - tr.energy[0]) <= 1e-7 * std::abs(tr.energy[0]));
    CHECK(tr.max_trace_drift <= 1e-12);
    CHECK(tr.max_spectrum_drift <= 1e-11);
    CHECK(tr.max_total_trace_drift <= 1e-12);
    for (const auto& s : tr.states) {
      for (Eigen::Index a = 0; a < 2; ++a) {
        CHECK_THAT(purity(s.rho[static_cast<std::size_t>(a)]), WithinAbs(s0.ens.w[a] * s0.ens.w[a], 1e-12));
      }
    }
  }
}

TEST_CASE("EF translation invariance with a constant surface", "[nonadiabatic][ef][evolve]") {
  EFModel m;
  m.He = ElectronicModel::constant(pauli_x() + 0.5 * pauli_z());
  m.kernel = SmoothingKernel::gaussian(0.7);
  EFEvolveOptions opt;
  opt.base.dt = 2e-3;
  opt.base.steps = 500;
  opt.base.stride = 100;
  const EFBohmionState s0 = EFBohmionState::pure(make({-0.3, 0.4}, {0.3, -0.1}, {0.45, 0.55}),
                                                 {basis(2, 0), (basis(2, 0) - cplx(0.0, 1.0) * basis(2, 1)).normalized()});
  EFBohmionState shifted = s0;
  shifted.ens.q.array() += 3.7;
  const EFTrajectory a = ef_evolve(s0, m, opt);
  const EFTrajectory b = ef_evolve(shifted, m, opt);
  for (std::size_t j = 0; j < a.t.size(); ++j) {
    CHECK_THAT(a.states[j].ens.p.sum(), WithinAbs(s0.ens.p.sum(), 1e-11));
    CHECK(max_diff(a.states[j].rho, b.states[j].rho) < 1e-10);
  }

  // identity-proportional partner commutes with everything
  EFBohmionState mix = s0;
  mix.rho[1] = 0.5 * s0.ens.w[1] * Eigen::MatrixXcd::Identity(2, 2);
  const EFTrajectory c = ef_evolve(mix, m, opt);
  for (std::size_t j = 0; j < c.t.size(); ++j) {
    const Eigen::MatrixXcd u = (cplx(0.0, -c.t[j]) * m.He.H(0.0)).exp();
    CHECK((c.states[j].rho[0] - u * s0.rho[0] * u.adjoint()).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("variants coincide for a constant surface with one Bohmion", "[nonadiabatic][ef][evolve]") {
  EFModel m;
  m.He = ElectronicModel::constant(pauli_z() + 0.3 * pauli_x());
  EFEvolveOptions opt;
  opt.base.dt = 1e-2;
  opt.base.steps = 300;
  opt.base.stride = 30;
  const EFBohmionState s0 = EFBohmionState::pure(make({0.0}, {0.5}, {1.0}), {(basis(2, 0) + basis(2, 1)).normalized()});
  m.variant = EFVariant::Hamiltonian;
  const EFTrajectory h = ef_evolve(s0, m, opt);
  m.variant = EFVariant::Lagrangian;
  const EFTrajectory l = ef_evolve(s0, m, opt);
  for (std::size_t j = 0; j < h.t.size(); ++j) {
    CHECK(std::abs(h.states[j].ens.q[0] - l.states[j].ens.q[0]) <= 1e-10);
    CHECK(max_diff(h.states[j].rho, l.states[j].rho) <= 1e-10);
  }
}

TEST_CASE("single pure Bohmion follows mean field on the smoothed surface", "[nonadiabatic][ef][evolve]") {
  EFModel m;
  m.He = ElectronicModel::polynomial({0.4 * pauli_x(), 0.6 * pauli_z(), 0.3 * Eigen::MatrixXcd::Identity(2, 2)});
  m.kernel = SmoothingKernel::gaussian(0.6);
  EFEvolveOptions opt;
  opt.base.dt = 1e-2;
  opt.base.steps = 400;
  opt.base.stride = 40;
  const Eigen::VectorXcd v = (basis(2, 0) + cplx(0.0, 0.5) * basis(2, 1)).normalized();
  const EFBohmionState s0 = EFBohmionState::pure(make({0.2}, {0.1}, {1.0}), {v});
  const EFTrajectory ef = ef_evolve(s0, m, opt);
  const MeanFieldTrajectory mf =
      meanfield_evolve({0.2, 0.1, v}, Potential::zero(), m.He.smoothed(m.kernel), {}, opt.base);
  CHECK(ef_terms(s0, m.He, m.kernel, grid_for(m.kernel, s0.ens), {}, EFVariant::Hamiltonian).quantum == 0.0);
  for (std::size_t j = 0; j < ef.t.size(); ++j) {
    CHECK_THAT(ef.states[j].ens.q[0], WithinAbs(mf.states[j].q, 1e-12));
    CHECK_THAT(ef.states[j].ens.p[0], WithinAbs(mf.states[j].p, 1e-12));
    const Eigen::MatrixXcd r = mf.states[j].psi * mf.states[j].psi.adjoint();
    CHECK((ef.states[j].rho[0] - r).cwiseAbs().maxCoeff() < 1e-12);
  }
}
