#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "dgtau/refelem.hpp"

namespace dgtau {

enum class BoundaryKind { Periodic, Wall };

/// Face shared by two elements (or by one element with itself under periodicity).
/// The normal of the face is the outward normal of the minus side.
struct InteriorFace {
  int elem_minus = 0;
  int face_minus = 0;
  int elem_plus = 0;
  int face_plus = 0;
  /// True when the plus side traverses the face in the opposite direction.
  bool reversed = false;
  bool periodic = false;
  /// x_minus = x_plus + shift for matched points.
  Eigen::Vector2d shift = Eigen::Vector2d::Zero();
};

struct BoundaryFace {
  int elem = 0;
  int face = 0;
  std::string tag;
};

struct Mesh {
  int dim = 1;
  Eigen::MatrixXd vertices;        ///< nv x dim
  std::vector<std::vector<int>> elements;  ///< counter-clockwise vertex lists
  std::vector<InteriorFace> faces;
  std::vector<BoundaryFace> boundary_faces;
  /// normals[k][f]: outward unit normal of local face f of element k (dim entries used).
  std::vector<std::vector<Eigen::Vector2d>> normals;
  /// Affine map determinant (reference -> physical volume ratio) per element.
  std::vector<double> jacobians;
  /// Physical face measure per (element, local face); 1 in 1D.
  std::vector<std::vector<double>> face_measures;
  /// Affine map derivative dr/dx: per element a dim x dim matrix with rows = reference coords.
  std::vector<Eigen::Matrix2d> inverse_maps;
  /// Signed element volumes.
  std::vector<double> volumes;
  double domain_measure = 0.0;

  int num_elements() const { return static_cast<int>(elements.size()); }
  int faces_per_element() const { return dim == 1 ? 2 : 3; }

  /// Physical coordinates of reference points (rows) in element k.
  Eigen::MatrixXd map_to_physical(int elem, const Eigen::MatrixXd& ref_points) const;
  /// Physical coordinates of face parameter t on local face f of element k.
  Eigen::VectorXd face_point(int elem, int face, double t) const;
};

Mesh build_mesh_1d(int n_elements, double a, double b, BoundaryKind bc);
Mesh build_mesh_2d_bisected(int nx, int ny, double x0, double x1, double y0, double y1, BoundaryKind bc);

/// Permutation p such that face point q on the minus side matches point p[q] on
/// the plus side, for a parameter set symmetric under t -> -t (checked).
std::vector<int> trace_permutation(const InteriorFace& face, const Eigen::VectorXd& t_points);

/// Largest geometric mismatch between matched trace points of all interior
/// faces for the given face parameter set (brute-force coordinate comparison).
double max_trace_mismatch(const Mesh& mesh, const Eigen::VectorXd& t_points);

std::string to_string(BoundaryKind bc);
BoundaryKind boundary_kind_from_string(const std::string& s);

}  // namespace dgtau
