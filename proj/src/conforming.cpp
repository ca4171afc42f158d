#include "dgtau/conforming.hpp"

#include <algorithm>
#include <sstream>

#include "dgtau/error.hpp"

namespace dgtau {

Eigen::MatrixXd build_constraint_matrix(const Mesh& mesh, const ReferenceElement& ref,
                                        const HyperbolicSystem& system, FluxKind kind) {
  const DofMap dofs{mesh.num_elements(), ref.num_nodes(), system.n_fields};
  const int np = dofs.n_nodes;
  const int m = system.n_fields;
  const auto traces = face_traces(mesh, ref);
  std::vector<Eigen::RowVectorXd> rows;
  for (const auto& t : traces) {
    const NormalFluxData nd = normal_flux_data(system, t.normal, FluxConfig{FluxKind::Central, 0.0});
    Eigen::MatrixXd c = constraint_operator(nd, kind);
    if (t.boundary) c = c * (system.wall_reflection(t.normal) - Eigen::MatrixXd::Identity(m, m));
    for (int q = 0; q < t.interp_minus.rows(); ++q)
      for (int r = 0; r < c.rows(); ++r) {
        if (c.row(r).cwiseAbs().maxCoeff() == 0.0) continue;
        Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(dofs.size());
        for (int b = 0; b < m; ++b) {
          if (c(r, b) == 0.0) continue;
          row.segment(dofs.block(t.elem_minus, b), np) -= c(r, b) * t.interp_minus.row(q);
          if (!t.boundary) row.segment(dofs.block(t.elem_plus, b), np) += c(r, b) * t.interp_plus.row(q);
        }
        rows.push_back(std::move(row));
      }
  }
  Eigen::MatrixXd g(rows.size(), dofs.size());
  for (std::size_t i = 0; i < rows.size(); ++i) g.row(static_cast<Eigen::Index>(i)) = rows[i];
  return g;
}

MeshCounts mesh_counts(const Mesh& mesh) {
  MeshCounts c;
  c.cells = mesh.num_elements();
  c.boundary_edges = static_cast<int>(mesh.boundary_faces.size());
  c.edges = static_cast<int>(mesh.faces.size()) + c.boundary_edges;
  if (mesh.dim == 1) {
    c.vertices = c.edges;
    return c;
  }
  const bool periodic = std::any_of(mesh.faces.begin(), mesh.faces.end(), [](const InteriorFace& f) { return f.periodic; });
  if (periodic && c.boundary_edges > 0) throw InvalidInput("mesh_counts: mixed periodic and wall boundaries");
  c.vertices = (periodic ? 0 : 1) - c.cells + c.edges;
  return c;
}

int c0_lagrange_dimension(const Mesh& mesh, int degree) {
  if (degree < 1) throw InvalidInput("c0_lagrange_dimension: degree must be >= 1");
  const MeshCounts c = mesh_counts(mesh);
  if (mesh.dim == 1) return c.vertices + c.cells * (degree - 1);
  return c.vertices + c.edges * (degree - 1) + c.cells * (degree - 1) * (degree - 2) / 2;
}

int bdm_dimension(const Mesh& mesh, int degree, bool zero_boundary_normal) {
  if (mesh.dim != 2) throw InvalidInput("bdm_dimension: triangles only");
  if (degree < 1) throw InvalidInput("bdm_dimension: degree must be >= 1");
  const MeshCounts c = mesh_counts(mesh);
  const int edges = zero_boundary_normal ? c.edges - c.boundary_edges : c.edges;
  return edges * (degree + 1) + c.cells * (degree * degree - 1);
}

int expected_conforming_dimension(const HyperbolicSystem& system, const Mesh& mesh, int degree) {
  switch (system.kind) {
    case SystemKind::Advection1D:
      if (!mesh.boundary_faces.empty()) throw InvalidInput("expected_conforming_dimension: advection needs a periodic mesh");
      return c0_lagrange_dimension(mesh, degree);
    case SystemKind::Acoustics1D:
      // Walls pin the velocity to zero.
      return c0_lagrange_dimension(mesh, degree) + c0_lagrange_dimension(mesh, degree) -
             static_cast<int>(mesh.boundary_faces.size());
    case SystemKind::Acoustics2D:
      return c0_lagrange_dimension(mesh, degree) + bdm_dimension(mesh, degree, true);
    case SystemKind::Advection2D:
      break;
  }
  throw InvalidInput("expected_conforming_dimension: no closed form for " + system_id(system.kind));
}

ConformingSplit build_conforming_split(const DGOperator& op, const ConformingSplitOptions& options) {
  return build_conforming_split(op, op.config().flux.kind, options);
}

ConformingSplit build_conforming_split(const DGOperator& op, FluxKind kind, const ConformingSplitOptions& options) {
  if (kind == FluxKind::Central)
    throw InvalidInput("build_conforming_split: central flux has no penalization; use penalty, upwind or lf");
  const auto& cfg = op.config();
  ConformingSplit split;
  split.constraint_matrix = build_constraint_matrix(*cfg.mesh, *cfg.ref, cfg.system, kind);
  const int n = op.size();

  if (split.constraint_matrix.rows() == 0) {
    split.basis_c = op.back_transform(Eigen::MatrixXcd::Identity(n, n)).real();
    split.basis_nc.resize(n, 0);
    return split;
  }

  // In y = L^T x coordinates the M-inner product is Euclidean: G x = (G L^{-T}) y.
  const Eigen::MatrixXd g_tilde = op.factor_solve(split.constraint_matrix.transpose()).transpose();
  Eigen::BDCSVD<Eigen::MatrixXd> svd(g_tilde, Eigen::ComputeFullV);
  split.singular_values = svd.singularValues();
  const double smax = split.singular_values.size() ? split.singular_values(0) : 0.0;
  const double threshold = options.rank_tolerance * smax;
  int rank = 0;
  for (Eigen::Index i = 0; i < split.singular_values.size(); ++i) {
    const double s = split.singular_values(i);
    if (s > threshold / options.ambiguity_factor && s < threshold * options.ambiguity_factor) {
      std::ostringstream msg;
      msg << "build_conforming_split: ambiguous rank, singular value " << s << " is within a factor "
          << options.ambiguity_factor << " of the threshold " << threshold;
      throw NumericalFailure(msg.str());
    }
    if (s > threshold) ++rank;
  }
  split.rank = rank;
  const Eigen::MatrixXd& v = svd.matrixV();
  split.basis_nc = op.back_transform(v.leftCols(rank).cast<std::complex<double>>()).real();
  split.basis_c = op.back_transform(v.rightCols(n - rank).cast<std::complex<double>>()).real();
  return split;
}

Eigen::MatrixXd BlockDecomposition::projected(double t) const {
  const Eigen::Index nc = a_block.rows(), nn = c_block.rows();
  Eigen::MatrixXd p(nc + nn, nc + nn);
  p.topLeftCorner(nc, nc) = a_block;
  p.topRightCorner(nc, nn) = b_block;
  p.bottomLeftCorner(nn, nc) = -b_block.transpose();
  p.bottomRightCorner(nn, nn) = c_block + t * s_block;
  return p;
}

BlockDecomposition block_decompose(const DGOperator& op, const ConformingSplit& split) {
  if (split.basis_c.rows() != op.size() || split.basis_nc.rows() != op.size())
    throw InvalidInput("block_decompose: split does not match the operator size");
  const Eigen::MatrixXd k0 = op.central_part();
  const Eigen::MatrixXd k1 = op.central_part() + op.penalty_part();

  const Eigen::MatrixXd& phi = split.basis_c;
  const Eigen::MatrixXd& psi = split.basis_nc;
  BlockDecomposition blocks;
  blocks.tau = op.tau();
  blocks.a_block = phi.transpose() * k0 * phi;
  blocks.b_block = phi.transpose() * k0 * psi;
  blocks.lower_left = psi.transpose() * k0 * phi;
  blocks.c_block = psi.transpose() * k0 * psi;
  blocks.s_block = psi.transpose() * k1 * psi - blocks.c_block;
  return blocks;
}

Eigen::VectorXcd conforming_spectrum(const BlockDecomposition& blocks) {
  const Eigen::MatrixXd a = 0.5 * (blocks.a_block - blocks.a_block.transpose());
  // i A is Hermitian for skew-symmetric A; eig(A) = -i eig(iA).
  const Eigen::MatrixXcd h = std::complex<double>(0, 1) * a.cast<std::complex<double>>();
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(h, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) throw NumericalFailure("conforming_spectrum: eigensolver failed");
  const Eigen::VectorXd d = eig.eigenvalues();
  Eigen::VectorXcd out(d.size());
  // ascending imaginary part
  for (Eigen::Index i = 0; i < d.size(); ++i) out(i) = std::complex<double>(0.0, d(d.size() - 1 - i));
  return out;
}

}  // namespace dgtau
