#include "doctest.h"

#include <cmath>

#include "dgtau/conforming.hpp"
#include "dgtau/error.hpp"
#include "dgtau/spectral.hpp"
#include "support.hpp"

using namespace dgtau;

namespace {

/// K(tau) = [[-tau s1, a], [-a, -tau s2]] with mass m * I on a single degree-1 element.
DGOperator manufactured(double a, double s1, double s2, double m, double tau) {
  OperatorConfig cfg;
  cfg.mesh = testing::mesh_1d(1, BoundaryKind::Periodic);
  cfg.ref = testing::ref(1, 1);
  cfg.system = make_advection_1d();
  cfg.flux = make_flux(FluxKind::Penalty, tau);
  Eigen::Matrix2d central, penalty;
  central << 0, a, -a, 0;
  penalty << -s1, 0, 0, -s2;
  const Eigen::MatrixXd mass = m * Eigen::MatrixXd::Identity(2, 2);
  return DGOperator(cfg, DofMap{1, 2, 1}, central, penalty, mass, {mass});
}

/// Eigenvalues of the 1D periodic advection symbol (beta = 1) built from the
/// reference element alone, over the K discrete wavenumbers.
Eigen::VectorXcd fourier_spectrum(int k, int degree, double length, double tau) {
  const auto r = testing::ref(1, degree);
  const int np = r->num_nodes();
  const double h = length / k;
  Eigen::MatrixXd ends(2, 1);
  ends << -1.0, 1.0;
  const Eigen::MatrixXd e = r->interpolation_matrix(ends);  // row 0 left, row 1 right
  const Eigen::VectorXd el = e.row(0).transpose(), er = e.row(1).transpose();
  const double p = 0.5 * tau;
  const Eigen::MatrixXd self = r->diff_matrices[0].transpose() * r->mass - 0.5 * er * er.transpose() -
                               p * er * er.transpose() + 0.5 * el * el.transpose() - p * el * el.transpose();
  const Eigen::MatrixXd right = (-0.5 + p) * er * el.transpose();
  const Eigen::MatrixXd left = (0.5 + p) * el * er.transpose();
  const Eigen::MatrixXcd minv = ((h / 2) * r->mass).inverse().cast<Complex>();
  Eigen::VectorXcd all(k * np);
  for (int j = 0; j < k; ++j) {
    const Complex z = std::polar(1.0, 2.0 * M_PI * j / k);
    const Eigen::MatrixXcd sym = self.cast<Complex>() + z * right.cast<Complex>() + std::conj(z) * left.cast<Complex>();
    all.segment(j * np, np) = Eigen::ComplexEigenSolver<Eigen::MatrixXcd>(minv * sym).eigenvalues();
  }
  return all;
}

}  // namespace

TEST_CASE("closed-form 2x2 spectrum") {
  const double a = 3.0, s1 = 1.0, s2 = 4.0;
  for (double tau : {0.0, 0.5, 1.5, 10.0})
    for (double m : {1.0, 2.0}) {
      const Spectrum s = compute_spectrum(manufactured(a, s1, s2, m, tau));
      const Complex mean = -tau * (s1 + s2) / 2.0;
      const Complex disc = std::sqrt(Complex(tau * tau * (s1 - s2) * (s1 - s2) / 4.0 - a * a));
      Eigen::VectorXcd want(2);
      want << (mean + disc) / m, (mean - disc) / m;
      CHECK(testing::multiset_distance(s.eigenvalues, want) <= 1e-12);
      CHECK(s.eigenvectors.cols() == 2);
      for (int j = 0; j < 2; ++j)
        CHECK(std::abs(s.eigenvectors.col(j).dot(m * s.eigenvectors.col(j)) - 1.0) <= 1e-12);
    }
}

TEST_CASE("1D advection spectrum equals the Fourier symbol spectrum") {
  for (double tau : {0.0, 1.0, 3.0})
    for (int degree : {1, 3}) {
      const DGOperator op = testing::advection_1d(8, degree, FluxKind::Penalty, tau);
      const Spectrum s = compute_spectrum(op, SpectrumOptions{false});
      CHECK(testing::multiset_distance(s.eigenvalues, fourier_spectrum(8, degree, 2.0, tau)) <= 1e-10);
    }
}

TEST_CASE("well-resolved modes propagate at the advection speed") {
  const Spectrum s = compute_spectrum(testing::advection_1d(8, 3, FluxKind::Central, 0.0), SpectrumOptions{false});
  // u = exp(i pi m x) on [-1, 1] gives lambda = -i pi m.
  for (int m = -2; m <= 2; ++m) {
    double best = INFINITY;
    for (int i = 0; i < s.size(); ++i) best = std::min(best, std::abs(s.eigenvalues(i) - Complex(0.0, -M_PI * m)));
    CHECK(best <= 1e-4);
  }
}

TEST_CASE("central flux spectra are purely imaginary and penalty spectra are stable") {
  for (const DGOperator& op : {testing::advection_1d(5, 4), testing::acoustics_1d(4, 3),
                               testing::acoustics_2d(2, 2, 3), testing::advection_2d(2, 2, 2)}) {
    const double rho = compute_spectrum(op.at_tau(0.0), SpectrumOptions{false}).eigenvalues.cwiseAbs().maxCoeff();
    CHECK(compute_spectrum(op.at_tau(0.0), SpectrumOptions{false}).eigenvalues.real().cwiseAbs().maxCoeff() <=
          1e-10);
    for (double tau : {0.3, 1.0, 10.0, 1e3})
      CHECK(compute_spectrum(op.at_tau(tau), SpectrumOptions{false}).eigenvalues.real().maxCoeff() <=
            1e-10 * std::max(1.0, rho));
  }
}

TEST_CASE("spectra do not depend on the node set") {
  for (int dim : {1, 2}) {
    const int degree = dim == 1 ? 4 : 3;
    const auto mesh = dim == 1 ? testing::mesh_1d(4, BoundaryKind::Wall) : testing::mesh_2d(2, 2, BoundaryKind::Wall);
    const HyperbolicSystem sys = dim == 1 ? make_acoustics_1d() : make_acoustics_2d();
    const FluxConfig flux = make_flux(FluxKind::Penalty, 2.0);
    const auto a = compute_spectrum(assemble(mesh, testing::ref(dim, degree), sys, flux), SpectrumOptions{false});
    const auto b = compute_spectrum(assemble(mesh, testing::ref(dim, degree, NodeSet::Equispaced), sys, flux),
                                    SpectrumOptions{false});
    CHECK(testing::multiset_distance(a.eigenvalues, b.eigenvalues) <= 1e-8);
  }
}

TEST_CASE("eigenpairs satisfy K v = lambda M v") {
  const DGOperator op = testing::acoustics_2d(2, 2, 2, FluxKind::Penalty, 4.0);
  const Spectrum s = compute_spectrum(op);
  const Eigen::MatrixXcd k = op.k_matrix().cast<Complex>(), m = op.m_matrix().cast<Complex>();
  for (int j = 0; j < s.size(); ++j) {
    const Eigen::VectorXcd v = s.eigenvectors.col(j);
    CHECK((k * v - s.eigenvalues(j) * (m * v)).norm() <= 1e-9 * op.congruence(op.k_matrix()).norm());
    CHECK(std::abs(v.dot(m * v) - 1.0) <= 1e-10);
  }
  CHECK(s.max_residual <= 1e-9);
}

TEST_CASE("spectrum ordering") {
  Eigen::VectorXcd v(5);
  v << Complex(-1, 2), Complex(0, -3), Complex(-1, -2), Complex(1e-12, 1), Complex(-5, 0);
  const auto o = spectrum_order(v, 1e-9);
  CHECK(o == std::vector<int>{1, 3, 2, 0, 4});
  const Spectrum s = compute_spectrum(testing::advection_1d(4, 3, FluxKind::Penalty, 2.0), SpectrumOptions{false});
  for (int i = 1; i < s.size(); ++i) CHECK(s.eigenvalues(i).real() <= s.eigenvalues(i - 1).real() + 1e-9 * 10);
}

TEST_CASE("Gerschgorin discs contain the spectrum and have tau-independent radii") {
  for (const DGOperator& op : {testing::advection_1d(8, 3), testing::acoustics_1d(8, 3), testing::acoustics_2d(2, 2, 2)}) {
    const ConformingSplit split = build_conforming_split(op);
    const BlockDecomposition blocks = block_decompose(op, split);
    const GerschgorinBasis basis = gerschgorin_basis(blocks);
    CHECK(basis.u_condition <= 1.0 + 1e-6);
    CHECK(basis.s_eigenvalues.maxCoeff() < 0.0);
    const GerschgorinStructure ref = gerschgorin_structure(basis, 1.0);
    for (double tau : {0.0, 0.5, 10.0, 1e3, 1e4}) {
      const GerschgorinStructure g = gerschgorin_structure(basis, tau);
      for (std::size_t i = 0; i < g.nonconforming_discs.size(); ++i)
        CHECK(g.nonconforming_discs[i].radius == ref.nonconforming_discs[i].radius);
      const Spectrum s = compute_spectrum(op.at_tau(tau), SpectrumOptions{false});
      const double slack = 1e-9 * std::max(1.0, s.eigenvalues.cwiseAbs().maxCoeff());
      for (int i = 0; i < s.size(); ++i) CHECK(g.in_union(s.eigenvalues(i), slack));
    }
    const double tau_star = minimal_disjoint_tau(basis);
    CHECK(tau_star > 0.0);
    CHECK(gerschgorin_structure(basis, tau_star * 1.01).disjoint);
    CHECK_FALSE(gerschgorin_structure(basis, tau_star * 0.99).disjoint);
    const double tau_far = std::max(1e4, 10 * tau_star);
    const GerschgorinStructure far = gerschgorin_structure(basis, tau_far);
    REQUIRE(far.disjoint);
    const Spectrum s = compute_spectrum(op.at_tau(tau_far), SpectrumOptions{false});
    CHECK(count_in_conforming_union(far, s.eigenvalues) == split.n_conforming());
  }
}

TEST_CASE("disc disjointness geometry") {
  const std::vector<Disc> a = {{Complex(0, 0), 1.0}};
  CHECK(discs_disjoint(a, {{Complex(3, 0), 1.5}}));
  CHECK_FALSE(discs_disjoint(a, {{Complex(2, 0), 1.0}}));
  // Real intervals overlap but the discs do not.
  CHECK(discs_disjoint(a, {{Complex(0.5, 5), 1.0}}));
  CHECK(discs_disjoint({}, a));
}

TEST_CASE("eigenvector partition norms are a Pythagorean split") {
  const DGOperator op = testing::acoustics_1d(4, 3, FluxKind::Penalty, 100.0);
  const ConformingSplit split = build_conforming_split(op);
  const Spectrum s = compute_spectrum(op);
  const auto parts = eigenvector_partition(s, split, op.m_matrix());
  REQUIRE(parts.size() == static_cast<std::size_t>(s.size()));
  int mostly_conforming = 0;
  for (const auto& p : parts) {
    CHECK(p.wc * p.wc + p.wnc * p.wnc == doctest::Approx(1.0).epsilon(1e-10));
    if (p.wc > 0.9) ++mostly_conforming;
  }
  CHECK(mostly_conforming == split.n_conforming());
  CHECK_THROWS_AS(eigenvector_partition(compute_spectrum(op, SpectrumOptions{false}), split, op.m_matrix()),
                  InvalidInput);
}
