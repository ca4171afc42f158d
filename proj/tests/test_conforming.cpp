#include "doctest.h"

#include "dgtau/conforming.hpp"
#include "dgtau/error.hpp"
#include "dgtau/spectral.hpp"
#include "support.hpp"

using namespace dgtau;

namespace {

/// C0 P^N plus BDM_N (zero normal flux on walls) on an nx x ny bisected grid, counted directly.
int acoustics_2d_dimension(int nx, int ny, int n, bool wall) {
  const int cells = 2 * nx * ny;
  const int vertices = wall ? (nx + 1) * (ny + 1) : nx * ny;
  const int edges = wall ? 3 * nx * ny + nx + ny : 3 * nx * ny;
  const int interior_edges = wall ? edges - 2 * (nx + ny) : edges;
  const int c0 = vertices + edges * (n - 1) + cells * (n - 1) * (n - 2) / 2;
  const int bdm = interior_edges * (n + 1) + cells * (n * n - 1);
  return c0 + bdm;
}

double mass_orthonormality_defect(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const Eigen::MatrixXd& m,
                                  bool same) {
  Eigen::MatrixXd g = a.transpose() * m * b;
  if (same) g -= Eigen::MatrixXd::Identity(g.rows(), g.cols());
  return g.size() ? g.cwiseAbs().maxCoeff() : 0.0;
}

}  // namespace

TEST_CASE("conforming dimensions match closed-form counts") {
  SUBCASE("1D advection, periodic") {
    for (int k : {3, 8})
      for (int n : {1, 3, 5}) {
        const DGOperator op = testing::advection_1d(k, n);
        CHECK(build_conforming_split(op).n_conforming() == k * n);
        CHECK(expected_conforming_dimension(op.config().system, *op.config().mesh, n) == k * n);
      }
  }
  SUBCASE("1D acoustics") {
    for (BoundaryKind bc : {BoundaryKind::Wall, BoundaryKind::Periodic}) {
      const DGOperator op = testing::acoustics_1d(6, 3, FluxKind::Penalty, 1.0, bc);
      // Periodic: both fields continuous. Wall: additionally u = 0 at both ends.
      const int want = bc == BoundaryKind::Periodic ? 2 * 6 * 3 : 2 * (6 * 3 + 1) - 2;
      CHECK(build_conforming_split(op).n_conforming() == want);
      CHECK(expected_conforming_dimension(op.config().system, *op.config().mesh, 3) == want);
    }
  }
  SUBCASE("2D acoustics") {
    struct Case {
      int nx, ny, n;
      bool wall;
    };
    for (const Case c : {Case{2, 2, 1, true}, Case{2, 2, 2, true}, Case{3, 2, 3, true}, Case{4, 4, 3, true},
                         Case{3, 3, 2, false}, Case{2, 2, 3, false}}) {
      CAPTURE(c.nx);
      CAPTURE(c.n);
      CAPTURE(c.wall);
      const DGOperator op = testing::acoustics_2d(c.nx, c.ny, c.n, FluxKind::Penalty, 1.0,
                                                  c.wall ? BoundaryKind::Wall : BoundaryKind::Periodic);
      const int want = acoustics_2d_dimension(c.nx, c.ny, c.n, c.wall);
      CHECK(build_conforming_split(op).n_conforming() == want);
      CHECK(expected_conforming_dimension(op.config().system, *op.config().mesh, c.n) == want);
    }
    CHECK(acoustics_2d_dimension(4, 4, 3, true) == 169 + 416);
  }
  CHECK_THROWS_AS(expected_conforming_dimension(make_advection_2d(), *testing::mesh_2d(2, 2, BoundaryKind::Periodic), 2),
                  InvalidInput);
  CHECK_THROWS_AS(expected_conforming_dimension(make_advection_1d(), *testing::mesh_1d(3, BoundaryKind::Wall), 2),
                  InvalidInput);
}

TEST_CASE("component-wise Lax-Friedrichs over-constrains the conforming space") {
  const DGOperator a2 = testing::acoustics_2d(3, 3, 3);
  CHECK(build_conforming_split(a2, FluxKind::LaxFriedrichs).n_conforming() <
        build_conforming_split(a2, FluxKind::Penalty).n_conforming());
  // In 1D A_n is invertible on every face, so nothing changes.
  const DGOperator a1 = testing::acoustics_1d(5, 3);
  CHECK(build_conforming_split(a1, FluxKind::LaxFriedrichs).n_conforming() ==
        build_conforming_split(a1, FluxKind::Penalty).n_conforming());
  const DGOperator ad = testing::advection_1d(5, 3);
  CHECK(build_conforming_split(ad, FluxKind::LaxFriedrichs).n_conforming() ==
        build_conforming_split(ad, FluxKind::Penalty).n_conforming());
}

TEST_CASE("split bases are M-orthonormal, complementary and satisfy the constraints") {
  for (const DGOperator& op : {testing::advection_1d(6, 3), testing::acoustics_1d(5, 2),
                               testing::acoustics_2d(2, 2, 3), testing::advection_2d(2, 2, 2)}) {
    const ConformingSplit s = build_conforming_split(op);
    const Eigen::MatrixXd& m = op.m_matrix();
    CHECK(s.n_conforming() + s.n_nonconforming() == op.size());
    CHECK(s.rank == s.n_nonconforming());
    CHECK(mass_orthonormality_defect(s.basis_c, s.basis_c, m, true) <= 1e-10);
    CHECK(mass_orthonormality_defect(s.basis_nc, s.basis_nc, m, true) <= 1e-10);
    CHECK(mass_orthonormality_defect(s.basis_c, s.basis_nc, m, false) <= 1e-10);
    CHECK((s.constraint_matrix * s.basis_c).cwiseAbs().maxCoeff() <= 1e-10 * s.constraint_matrix.norm());
    // Penalization vanishes on the conforming space.
    CHECK((op.penalty_part() * s.basis_c).cwiseAbs().maxCoeff() <= 1e-10 * op.penalty_part().norm());
  }
}

TEST_CASE("penalty- and upwind-induced conforming spaces coincide") {
  for (const DGOperator& op : {testing::advection_1d(6, 3), testing::acoustics_1d(5, 3),
                               testing::acoustics_2d(2, 2, 3), testing::acoustics_2d(2, 3, 2, FluxKind::Penalty, 1.0,
                                                                                      BoundaryKind::Periodic)}) {
    const ConformingSplit p = build_conforming_split(op, FluxKind::Penalty);
    const ConformingSplit u = build_conforming_split(op, FluxKind::Upwind);
    REQUIRE(p.n_conforming() == u.n_conforming());
    const Eigen::MatrixXd& m = op.m_matrix();
    // Mutual M-orthogonal projection residuals.
    const Eigen::MatrixXd rp = p.basis_c - u.basis_c * (u.basis_c.transpose() * m * p.basis_c);
    const Eigen::MatrixXd ru = u.basis_c - p.basis_c * (p.basis_c.transpose() * m * u.basis_c);
    CHECK(rp.cwiseAbs().maxCoeff() <= 1e-10);
    CHECK(ru.cwiseAbs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("2D acoustic conforming vectors: continuous pressure and normal velocity only") {
  const DGOperator op = testing::acoustics_2d(2, 2, 3);
  const ConformingSplit s = build_conforming_split(op);
  const DofMap& d = op.dofs();
  const auto traces = face_traces(*op.config().mesh, *op.config().ref);
  double worst_p = 0.0, worst_un = 0.0, largest_ut = 0.0;
  for (int c = 0; c < s.n_conforming(); ++c) {
    const Eigen::VectorXd x = s.basis_c.col(c);
    for (const auto& t : traces) {
      if (t.boundary) continue;
      Eigen::MatrixXd jump(t.interp_minus.rows(), 3);
      for (int f = 0; f < 3; ++f)
        jump.col(f) = t.interp_plus * x.segment(d.block(t.elem_plus, f), d.n_nodes) -
                      t.interp_minus * x.segment(d.block(t.elem_minus, f), d.n_nodes);
      worst_p = std::max(worst_p, jump.col(0).cwiseAbs().maxCoeff());
      worst_un = std::max(worst_un, (jump.col(1) * t.normal(0) + jump.col(2) * t.normal(1)).cwiseAbs().maxCoeff());
      largest_ut = std::max(largest_ut, (-jump.col(1) * t.normal(1) + jump.col(2) * t.normal(0)).cwiseAbs().maxCoeff());
    }
  }
  CHECK(worst_p <= 1e-10);
  CHECK(worst_un <= 1e-10);
  CHECK(largest_ut > 1e-3);
}

TEST_CASE("constraint rows from A_n and from A_n^T A_n have the same null space") {
  const DGOperator op = testing::acoustics_2d(2, 2, 2);
  const auto& cfg = op.config();
  const Eigen::MatrixXd g = build_constraint_matrix(*cfg.mesh, *cfg.ref, cfg.system, FluxKind::Penalty);
  const Eigen::MatrixXd gram = g.transpose() * g;
  const ConformingSplit s = build_conforming_split(op);
  CHECK((gram * s.basis_c).cwiseAbs().maxCoeff() <= 1e-10 * gram.norm());
  // The unit-tau penalty part is the A_n^T A_n quadratic form: its null space is the same.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(op.congruence(-op.penalty_part()));
  int null_dim = 0;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
    if (es.eigenvalues()(i) <= 1e-10 * es.eigenvalues().cwiseAbs().maxCoeff()) ++null_dim;
  CHECK(null_dim == s.n_conforming());
}

TEST_CASE("block decomposition structure") {
  for (const DGOperator& op : {testing::advection_1d(6, 3, FluxKind::Penalty, 2.0), testing::acoustics_1d(5, 3),
                               testing::acoustics_2d(2, 2, 2, FluxKind::Penalty, 5.0)}) {
    const ConformingSplit s = build_conforming_split(op);
    const BlockDecomposition b = block_decompose(op, s);
    const double scale = op.congruence(op.k_matrix()).norm();
    CHECK((b.a_block + b.a_block.transpose()).cwiseAbs().maxCoeff() <= 1e-10 * scale);
    CHECK((b.c_block + b.c_block.transpose()).cwiseAbs().maxCoeff() <= 1e-10 * scale);
    CHECK((b.s_block - b.s_block.transpose()).cwiseAbs().maxCoeff() <= 1e-10 * scale);
    CHECK((b.lower_left + b.b_block.transpose()).cwiseAbs().maxCoeff() <= 1e-10 * scale);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> se(0.5 * (b.s_block + b.s_block.transpose()));
    CHECK(se.eigenvalues().maxCoeff() < 0.0);

    const BlockDecomposition other = block_decompose(op.at_tau(37.0), s);
    CHECK(testing::rel_diff(other.b_block, b.b_block) <= 1e-14);
    CHECK(testing::rel_diff(other.s_block, b.s_block) <= 1e-12);

    for (double tau : {0.0, 1.0, 50.0}) {
      const Eigen::VectorXcd proj = Eigen::ComplexEigenSolver<Eigen::MatrixXd>(b.projected(tau)).eigenvalues();
      const Eigen::VectorXcd full = compute_spectrum(op.at_tau(tau), SpectrumOptions{false}).eigenvalues;
      CHECK(testing::multiset_distance(proj, full) <= 1e-9 * std::max(1.0, full.cwiseAbs().maxCoeff()));
    }
    const Eigen::VectorXcd ca = conforming_spectrum(b);
    CHECK(ca.size() == s.n_conforming());
    CHECK(ca.real().cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("central flux has no conforming split") {
  CHECK_THROWS_AS(build_conforming_split(testing::advection_1d(4, 2, FluxKind::Central, 0.0)), InvalidInput);
}
