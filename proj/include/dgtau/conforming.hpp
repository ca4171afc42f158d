#pragma once

#include <Eigen/Dense>

#include "dgtau/assembly.hpp"

namespace dgtau {

struct ConformingSplitOptions {
  /// Singular values below rank_tolerance * sigma_max count as zero.
  double rank_tolerance = 1e-9;
  /// Rank is ambiguous when a singular value falls within this factor of the threshold.
  double ambiguity_factor = 10.0;
};

/// Flux-induced conforming space V^C = null(G) and its M-orthogonal complement.
struct ConformingSplit {
  /// One row per (face, quadrature point, constraint component) evaluating C [[U]].
  Eigen::MatrixXd constraint_matrix;
  Eigen::MatrixXd basis_c;   ///< n x N^C, M-orthonormal
  Eigen::MatrixXd basis_nc;  ///< n x N^NC, M-orthonormal, M-orthogonal to basis_c
  Eigen::VectorXd singular_values;
  int rank = 0;

  int n_conforming() const { return static_cast<int>(basis_c.cols()); }
  int n_nonconforming() const { return static_cast<int>(basis_nc.cols()); }
};

/// Constraint rows C [[U]] = 0 at matched face quadrature points; walls use the
/// ghost jump (R - I) U-. `kind` selects C (see constraint_operator).
Eigen::MatrixXd build_constraint_matrix(const Mesh& mesh, const ReferenceElement& ref,
                                        const HyperbolicSystem& system, FluxKind kind);

ConformingSplit build_conforming_split(const DGOperator& op, const ConformingSplitOptions& options = {});
/// Split for an explicit flux kind (used to compare penalty- and upwind-induced spaces).
ConformingSplit build_conforming_split(const DGOperator& op, FluxKind kind,
                                       const ConformingSplitOptions& options = {});

/// Topological counts; vertices follow from Euler's formula (chi = 0 for fully
/// periodic meshes, 1 otherwise in 2D).
struct MeshCounts {
  int vertices = 0;
  int edges = 0;
  int boundary_edges = 0;
  int cells = 0;
};

MeshCounts mesh_counts(const Mesh& mesh);

/// Continuous piecewise P^N.
int c0_lagrange_dimension(const Mesh& mesh, int degree);
/// BDM_N on triangles; optionally with zero normal component on boundary edges.
int bdm_dimension(const Mesh& mesh, int degree, bool zero_boundary_normal);

/// Closed-form N^C for the penalty (or upwind) space where one is known:
/// advection in 1D, acoustics in 1D and 2D. Throws InvalidInput otherwise.
int expected_conforming_dimension(const HyperbolicSystem& system, const Mesh& mesh, int degree);

/// Projected operator [[A, B], [-B^T, C + tau S]] in the basis [Phi, Psi].
struct BlockDecomposition {
  Eigen::MatrixXd a_block;
  Eigen::MatrixXd b_block;
  Eigen::MatrixXd lower_left;  ///< Psi^T K Phi as assembled (equals -B^T)
  Eigen::MatrixXd c_block;
  Eigen::MatrixXd s_block;
  double tau = 0.0;

  /// [[A, B], [-B^T, C + tau S]]
  Eigen::MatrixXd projected(double tau) const;
};

/// S is the two-point difference of Psi^T K(tau) Psi at tau = 0 and tau = 1 (exact by affinity).
BlockDecomposition block_decompose(const DGOperator& op, const ConformingSplit& split);

/// Eigenvalues of the skew-symmetric conforming block A (purely imaginary).
Eigen::VectorXcd conforming_spectrum(const BlockDecomposition& blocks);

}  // namespace dgtau
