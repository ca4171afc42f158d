#pragma once

#include <Eigen/Dense>
#include <vector>

namespace dgtau {

enum class NodeSet {
  Optimized,   ///< Gauss-Lobatto (1D), warp & blend (2D)
  Equispaced,
};

/// Nodal basis data on the reference interval [-1,1] or the reference
/// triangle with vertices (-1,-1), (1,-1), (-1,1).
///
/// Faces are numbered 0..1 in 1D (left, right) and 0..2 in 2D
/// (v0->v1, v1->v2, v2->v0). Each face carries a Gauss-Legendre rule with
/// degree+1 points, parametrized by t in [-1,1] running from the face's start
/// vertex to its end vertex; in 1D the rule is the single point with weight 1.
struct ReferenceElement {
  int dim = 1;
  int degree = 0;
  NodeSet node_set = NodeSet::Optimized;

  /// Np x dim node coordinates.
  Eigen::MatrixXd nodes;
  /// V(i, j) = P_j(node_i) for the orthonormal modal basis P_j.
  Eigen::MatrixXd vandermonde;
  /// One Np x Np matrix per reference coordinate.
  std::vector<Eigen::MatrixXd> diff_matrices;
  Eigen::MatrixXd mass;

  /// Volume nodes lying on each face, ordered along the face direction.
  std::vector<std::vector<int>> face_nodes;

  /// Face quadrature abscissae t_q and weights (on [-1,1]).
  Eigen::VectorXd face_quad_points;
  Eigen::VectorXd face_quad_weights;
  /// Per face: nq x Np matrix evaluating the nodal basis at the face quadrature points.
  std::vector<Eigen::MatrixXd> face_interp;
  /// Per face: Np x nq operator M^{-1} E^T W mapping face-quadrature data to volume.
  /// W includes the reference face measure (length/2 in 2D, 1 in 1D).
  std::vector<Eigen::MatrixXd> lift;
  /// Reference face measures (1 per face in 1D, lengths in 2D).
  std::vector<double> face_measure;

  double vandermonde_condition = 1.0;

  int num_nodes() const { return static_cast<int>(nodes.rows()); }
  int num_faces() const { return dim == 1 ? 2 : 3; }
  int num_face_quad() const { return static_cast<int>(face_quad_points.size()); }
  /// Reference coordinates of face quadrature point t on face f.
  Eigen::VectorXd face_point(int face, double t) const;
  /// Evaluates the orthonormal modal basis at reference points (rows of r).
  Eigen::MatrixXd modal_basis(const Eigen::MatrixXd& r) const;
  /// Evaluates the nodal (Lagrange) basis at reference points: rows = points.
  Eigen::MatrixXd interpolation_matrix(const Eigen::MatrixXd& r) const;
};

struct ReferenceElementOptions {
  NodeSet node_set = NodeSet::Optimized;
  double max_vandermonde_condition = 1e8;
};

ReferenceElement build_reference_element(int dim, int degree,
                                         const ReferenceElementOptions& options = {});

inline int num_nodes_for(int dim, int degree) {
  return dim == 1 ? degree + 1 : (degree + 1) * (degree + 2) / 2;
}

namespace poly {

/// Gauss quadrature for the Jacobi weight (1-x)^alpha (1+x)^beta on [-1,1].
void jacobi_gauss(double alpha, double beta, int n_points, Eigen::VectorXd& x, Eigen::VectorXd& w);
/// Gauss-Lobatto points (alpha = beta = 0 gives the Legendre-Gauss-Lobatto nodes).
Eigen::VectorXd jacobi_gauss_lobatto(double alpha, double beta, int degree);
/// Orthonormal Jacobi polynomial P_n^{(alpha,beta)} evaluated at x.
Eigen::VectorXd jacobi_p(const Eigen::VectorXd& x, double alpha, double beta, int n);
Eigen::VectorXd grad_jacobi_p(const Eigen::VectorXd& x, double alpha, double beta, int n);

}  // namespace poly

}  // namespace dgtau
