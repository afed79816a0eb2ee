#include <cmath>
#include <random>

#include <unsupported/Eigen/MatrixFunctions>

#include "catch_amalgamated.hpp"

#include "bohmion/bohmion.hpp"
#include "generators.hpp"

using namespace bohmion;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

Eigen::MatrixXcd random_density(std::mt19937_64& rng, int d, double weight) {
  const Eigen::MatrixXcd a = gen::hermitian(rng, d);
  Eigen::MatrixXcd rho = a * a.adjoint();
  return weight * rho / rho.trace().real();
}

ElectronicModel random_surface(std::mt19937_64& rng, int d) {
  return ElectronicModel::polynomial({gen::hermitian(rng, d), 0.4 * gen::hermitian(rng, d), 0.1 * gen::hermitian(rng, d)});
}

EFBohmionState random_ef_state(std::mt19937_64& rng, int n, int d) {
  EFBohmionState s{gen::ensemble(rng, n, 1.2, 0.5), {}};
  for (Eigen::Index a = 0; a < n; ++a) s.rho.push_back(random_density(rng, d, s.ens.w[a]));
  return s;
}

}  // namespace

TEST_CASE("unitary steps preserve trace, spectrum and compose", "[properties][integrators]") {
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> ut(0.01, 2.0);
  for (int trial = 0; trial < 200; ++trial) {
    const int d = 2 + trial % 4;
    const Eigen::MatrixXcd h = gen::hermitian(rng, d);
    const Eigen::MatrixXcd rho = random_density(rng, d, 1.0);
    const double t1 = ut(rng), t2 = ut(rng);
    const Eigen::MatrixXcd out = unitary_step(rho, h, t1);
    CHECK_THAT(out.trace().real(), WithinAbs(1.0, 1e-14));
    CHECK((density_spectrum(out) - density_spectrum(rho)).cwiseAbs().maxCoeff() < 1e-13);
    CHECK(hermiticity_defect(out) == 0.0);
    CHECK((unitary_step(out, h, t2) - unitary_step(rho, h, t1 + t2)).cwiseAbs().maxCoeff() < 1e-13);
    const Eigen::MatrixXcd u = (std::complex<double>(0.0, -t1) * h).exp();
    CHECK((unitary_propagator(h, t1) - u).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("self overlaps are a partition of the kernel mass", "[properties][pair]") {
  // sum_b w_b K_b / Dbar = 1, hence sum_b w_b I^KK_ab = int K_a = 1; I^KK is a Gram matrix
  std::mt19937_64 rng(202);
  for (int trial = 0; trial < 30; ++trial) {
    const BohmionEnsemble e = gen::ensemble(rng, 2 + trial % 5, 2.0);
    const SmoothingKernel k = trial % 2 == 0 ? SmoothingKernel::gaussian(0.6) : SmoothingKernel::helmholtz(0.6);
    const PairIntegrals I = pair_integrals(e, k, GridPolicy{}.grid_for(k, e.q));
    CHECK((I.kk * e.w - Eigen::VectorXd::Ones(e.size())).cwiseAbs().maxCoeff() < 1e-8);
    CHECK((I.kk - I.kk.transpose()).cwiseAbs().maxCoeff() == 0.0);
    CHECK((I.dd - I.dd.transpose()).cwiseAbs().maxCoeff() == 0.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(I.kk);
    CHECK(es.eigenvalues().minCoeff() > -1e-12);
    es.compute(I.dd);
    CHECK(es.eigenvalues().minCoeff() > -1e-12);
  }
}

TEST_CASE("Bohmion flows are time reversible", "[properties][rqhd]") {
  std::mt19937_64 rng(303);
  RqhdModel m;
  m.V = Potential::double_well(1.0, 1.0);
  m.kernel = SmoothingKernel::gaussian(0.5);
  EvolveOptions opt;
  opt.dt = 5e-3;
  opt.steps = 200;
  opt.stride = 200;
  for (Regularization mode : {Regularization::Hamiltonian, Regularization::Lagrangian, Regularization::Classical}) {
    for (int trial = 0; trial < 3; ++trial) {
      const BohmionEnsemble e0 = gen::ensemble(rng, 3, 1.0, 0.5);
      BohmionEnsemble back = evolve(e0, m, mode, opt).states.back();
      back.p = -back.p;
      const BohmionEnsemble home = evolve(back, m, mode, opt).states.back();
      CHECK((home.q - e0.q).cwiseAbs().maxCoeff() < 1e-9);
      CHECK((home.p + e0.p).cwiseAbs().maxCoeff() < 1e-9);
    }
  }
}

TEST_CASE("free Bohmion energies are translation and Galilean covariant", "[properties][rqhd]") {
  std::mt19937_64 rng(404);
  RqhdModel m;
  m.kernel = SmoothingKernel::gaussian(0.7);
  for (int trial = 0; trial < 20; ++trial) {
    const BohmionEnsemble e = gen::ensemble(rng, 2 + trial % 4, 1.5);
    BohmionEnsemble shifted = e;
    shifted.q.array() += 0.37;
    CHECK_THAT(rqhd_hamiltonian(shifted, m), WithinRel(rqhd_hamiltonian(e, m), 1e-10));
    const CanonicalGradient g = rqhd_grad(e, m);
    CHECK(std::abs(g.dq.sum()) < 1e-10);
  }
}

TEST_CASE("EF dynamics conserve every density-matrix spectrum", "[properties][ef]") {
  std::mt19937_64 rng(505);
  EFEvolveOptions opt;
  opt.base.dt = 2e-3;
  opt.base.steps = 300;
  opt.base.stride = 30;
  for (int trial = 0; trial < 6; ++trial) {
    EFModel m;
    const int d = 2 + trial % 2;
    m.He = random_surface(rng, d);
    m.kernel = SmoothingKernel::gaussian(0.8);
    m.variant = trial % 2 == 0 ? EFVariant::Hamiltonian : EFVariant::Lagrangian;
    const EFBohmionState s0 = random_ef_state(rng, 2 + trial % 3, d);
    const EFTrajectory tr = ef_evolve(s0, m, opt);
    CHECK(tr.max_trace_drift <= 1e-13);
    CHECK(tr.max_spectrum_drift <= 1e-13);
    CHECK(tr.max_purity_drift <= 1e-13);
    CHECK(tr.max_total_trace_drift <= 1e-13);
    for (double e : tr.energy) CHECK(std::abs(e - tr.energy.front()) <= 1e-5 * std::abs(tr.energy.front()));
  }
}

TEST_CASE("EF energy error shrinks at second order in dt", "[properties][ef]") {
  std::mt19937_64 rng(606);
  EFModel m;
  m.He = random_surface(rng, 2);
  m.kernel = SmoothingKernel::gaussian(0.8);
  const EFBohmionState s0 = random_ef_state(rng, 3, 2);
  std::vector<double> err;
  for (double dt : {2e-2, 1e-2, 5e-3}) {
    EFEvolveOptions opt;
    opt.base.dt = dt;
    opt.base.steps = std::lround(1.0 / dt);
    opt.base.stride = opt.base.steps;
    const EFTrajectory tr = ef_evolve(s0, m, opt);
    err.push_back(std::abs(tr.energy.back() - tr.energy.front()));
  }
  CHECK_THAT(std::log2(err[0] / err[1]), WithinAbs(2.0, 0.3));
  CHECK_THAT(std::log2(err[1] / err[2]), WithinAbs(2.0, 0.3));
}

TEST_CASE("single pure EF Bohmion is mean-field dynamics on random surfaces", "[properties][ef][meanfield]") {
  std::mt19937_64 rng(707);
  EvolveOptions base;
  base.dt = 1e-2;
  base.steps = 150;
  base.stride = 15;
  for (int trial = 0; trial < 5; ++trial) {
    EFModel m;
    m.He = random_surface(rng, 2 + trial % 2);
    m.kernel = SmoothingKernel::gaussian(0.5 + 0.1 * trial);
    const Eigen::VectorXcd v = gen::unit_vector(rng, m.He.dimension());
    BohmionEnsemble one{Eigen::VectorXd::Constant(1, 0.2), Eigen::VectorXd::Constant(1, -0.3), Eigen::VectorXd::Ones(1)};
    EFEvolveOptions opt;
    opt.base = base;
    const EFTrajectory ef = ef_evolve(EFBohmionState::pure(one, {v}), m, opt);
    const MeanFieldTrajectory mf = meanfield_evolve({0.2, -0.3, v}, Potential::zero(), m.He.smoothed(m.kernel), {}, base);
    for (std::size_t j = 0; j < ef.t.size(); ++j) {
      CHECK_THAT(ef.states[j].ens.q[0], WithinAbs(mf.states[j].q, 1e-11));
      CHECK_THAT(ef.states[j].ens.p[0], WithinAbs(mf.states[j].p, 1e-11));
    }
  }
}

TEST_CASE("collective and Dirac energies agree on random states and potentials", "[properties][qhd]") {
  std::mt19937_64 rng(808);
  std::uniform_real_distribution<double> u(-0.2, 0.2);
  const PeriodicGrid g = PeriodicGrid::centered(24.0, 256);
  const SpectralOps ops(g);
  for (int trial = 0; trial < 50; ++trial) {
    const Potential V = Potential::polynomial({u(rng), u(rng), 0.05 + std::abs(u(rng)), 0.0, 0.01});
    const PhysicalConstants c{0.5 + 0.01 * trial, 1.0, 0.8 + 0.02 * trial};
    const WavefunctionGrid wf{g, gen::smooth_state(rng, g), sample_potential(V, g), c};
    const double e = dirac_energy(wf, ops);
    CHECK_THAT(collective_energy(madelung_fields(wf, ops), wf.V, c, ops), WithinRel(e, 1e-8));
  }
}
