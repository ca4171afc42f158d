#include "dgtau/mesh.hpp"

#include <cmath>
#include <map>
#include <sstream>

#include "dgtau/error.hpp"

namespace dgtau {

namespace {

constexpr double kMatchTol = 1e-12;

void finalize_geometry(Mesh& mesh) {
  const int n = mesh.num_elements();
  const int nf = mesh.faces_per_element();
  mesh.normals.assign(n, std::vector<Eigen::Vector2d>(nf, Eigen::Vector2d::Zero()));
  mesh.face_measures.assign(n, std::vector<double>(nf, 1.0));
  mesh.jacobians.resize(n);
  mesh.inverse_maps.resize(n);
  mesh.volumes.resize(n);
  for (int k = 0; k < n; ++k) {
    const auto& el = mesh.elements[k];
    if (mesh.dim == 1) {
      const double h = mesh.vertices(el[1], 0) - mesh.vertices(el[0], 0);
      if (!(h > 0)) throw InvalidInput("mesh: degenerate 1D element");
      mesh.jacobians[k] = h / 2;
      mesh.inverse_maps[k] = Eigen::Matrix2d::Zero();
      mesh.inverse_maps[k](0, 0) = 2 / h;
      mesh.volumes[k] = h;
      mesh.normals[k][0] = Eigen::Vector2d(-1, 0);
      mesh.normals[k][1] = Eigen::Vector2d(1, 0);
      continue;
    }
    const Eigen::Vector2d v0 = mesh.vertices.row(el[0]).transpose();
    const Eigen::Vector2d v1 = mesh.vertices.row(el[1]).transpose();
    const Eigen::Vector2d v2 = mesh.vertices.row(el[2]).transpose();
    Eigen::Matrix2d jac;
    jac.col(0) = (v1 - v0) / 2;
    jac.col(1) = (v2 - v0) / 2;
    const double det = jac.determinant();
    if (!(det > 0)) throw InvalidInput("mesh: triangle is degenerate or clockwise");
    mesh.jacobians[k] = det;
    mesh.inverse_maps[k] = jac.inverse();
    mesh.volumes[k] = 2 * det;
    for (int f = 0; f < 3; ++f) {
      const Eigen::Vector2d a = mesh.vertices.row(el[f]).transpose();
      const Eigen::Vector2d b = mesh.vertices.row(el[(f + 1) % 3]).transpose();
      const Eigen::Vector2d d = b - a;
      mesh.face_measures[k][f] = d.norm();
      mesh.normals[k][f] = Eigen::Vector2d(d(1), -d(0)) / d.norm();
    }
  }
}

Eigen::Vector2d vertex2(const Mesh& mesh, int v) {
  Eigen::Vector2d x = Eigen::Vector2d::Zero();
  x.head(mesh.dim) = mesh.vertices.row(v).transpose();
  return x;
}

// Decides orientation of a matched 2D face from its end points.
bool edge_reversed(const Mesh& mesh, const InteriorFace& face) {
  const auto& em = mesh.elements[face.elem_minus];
  const auto& ep = mesh.elements[face.elem_plus];
  const Eigen::Vector2d m_start = vertex2(mesh, em[face.face_minus]);
  const Eigen::Vector2d p_start = vertex2(mesh, ep[face.face_plus]) + face.shift;
  const Eigen::Vector2d p_end = vertex2(mesh, ep[(face.face_plus + 1) % 3]) + face.shift;
  if ((m_start - p_end).norm() < kMatchTol) return true;
  if ((m_start - p_start).norm() < kMatchTol) return false;
  throw NumericalFailure("mesh: face end points do not match");
}

}  // namespace

std::string to_string(BoundaryKind bc) { return bc == BoundaryKind::Periodic ? "periodic" : "wall"; }

BoundaryKind boundary_kind_from_string(const std::string& s) {
  if (s == "periodic") return BoundaryKind::Periodic;
  if (s == "wall" || s == "bounded" || s == "reflective") return BoundaryKind::Wall;
  throw InvalidInput("unknown boundary condition '" + s + "' (expected periodic|wall)");
}

Eigen::MatrixXd Mesh::map_to_physical(int elem, const Eigen::MatrixXd& ref_points) const {
  const auto& el = elements[elem];
  Eigen::MatrixXd out(ref_points.rows(), dim);
  if (dim == 1) {
    const double x0 = vertices(el[0], 0), x1 = vertices(el[1], 0);
    out.col(0) = (x0 + (ref_points.col(0).array() + 1) / 2 * (x1 - x0)).matrix();
    return out;
  }
  const Eigen::RowVector2d v0 = vertices.row(el[0]);
  const Eigen::RowVector2d e1 = vertices.row(el[1]) - v0;
  const Eigen::RowVector2d e2 = vertices.row(el[2]) - v0;
  for (Eigen::Index i = 0; i < ref_points.rows(); ++i)
    out.row(i) = v0 + (ref_points(i, 0) + 1) / 2 * e1 + (ref_points(i, 1) + 1) / 2 * e2;
  return out;
}

Eigen::VectorXd Mesh::face_point(int elem, int face, double t) const {
  const auto& el = elements[elem];
  if (dim == 1) return vertices.row(el[face]).transpose();
  const Eigen::Vector2d a = vertices.row(el[face]).transpose();
  const Eigen::Vector2d b = vertices.row(el[(face + 1) % 3]).transpose();
  return a * (1 - t) / 2 + b * (1 + t) / 2;
}

Mesh build_mesh_1d(int n_elements, double a, double b, BoundaryKind bc) {
  if (n_elements < 1) throw InvalidInput("build_mesh_1d: n_elements must be >= 1");
  if (!(a < b)) throw InvalidInput("build_mesh_1d: empty interval");
  Mesh mesh;
  mesh.dim = 1;
  mesh.vertices.resize(n_elements + 1, 1);
  const double h = (b - a) / n_elements;
  for (int i = 0; i <= n_elements; ++i) mesh.vertices(i, 0) = a + i * h;
  mesh.vertices(n_elements, 0) = b;
  for (int k = 0; k < n_elements; ++k) mesh.elements.push_back({k, k + 1});
  mesh.domain_measure = b - a;
  finalize_geometry(mesh);

  if (bc == BoundaryKind::Periodic) {
    InteriorFace f;
    f.elem_minus = n_elements - 1;
    f.face_minus = 1;
    f.elem_plus = 0;
    f.face_plus = 0;
    f.periodic = true;
    f.shift = Eigen::Vector2d(b - a, 0);
    mesh.faces.push_back(f);
  } else {
    mesh.boundary_faces.push_back({0, 0, "left"});
  }
  for (int k = 0; k + 1 < n_elements; ++k) {
    InteriorFace f;
    f.elem_minus = k;
    f.face_minus = 1;
    f.elem_plus = k + 1;
    f.face_plus = 0;
    mesh.faces.push_back(f);
  }
  if (bc != BoundaryKind::Periodic) mesh.boundary_faces.push_back({n_elements - 1, 1, "right"});
  return mesh;
}

Mesh build_mesh_2d_bisected(int nx, int ny, double x0, double x1, double y0, double y1, BoundaryKind bc) {
  if (nx < 1 || ny < 1) throw InvalidInput("build_mesh_2d_bisected: nx, ny must be >= 1");
  if (!(x0 < x1) || !(y0 < y1)) throw InvalidInput("build_mesh_2d_bisected: degenerate domain");
  Mesh mesh;
  mesh.dim = 2;
  const auto vid = [nx](int i, int j) { return j * (nx + 1) + i; };
  mesh.vertices.resize((nx + 1) * (ny + 1), 2);
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i) {
      mesh.vertices(vid(i, j), 0) = i == nx ? x1 : x0 + (x1 - x0) * i / nx;
      mesh.vertices(vid(i, j), 1) = j == ny ? y1 : y0 + (y1 - y0) * j / ny;
    }
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const int v00 = vid(i, j), v10 = vid(i + 1, j), v01 = vid(i, j + 1), v11 = vid(i + 1, j + 1);
      mesh.elements.push_back({v00, v10, v11});
      mesh.elements.push_back({v00, v11, v01});
    }
  mesh.domain_measure = (x1 - x0) * (y1 - y0);
  finalize_geometry(mesh);

  std::map<std::pair<int, int>, std::pair<int, int>> open_edges;
  for (int k = 0; k < mesh.num_elements(); ++k)
    for (int f = 0; f < 3; ++f) {
      const int a = mesh.elements[k][f], b = mesh.elements[k][(f + 1) % 3];
      const auto key = std::minmax(a, b);
      auto it = open_edges.find(key);
      if (it == open_edges.end()) {
        open_edges.emplace(key, std::make_pair(k, f));
        continue;
      }
      InteriorFace face;
      face.elem_minus = it->second.first;
      face.face_minus = it->second.second;
      face.elem_plus = k;
      face.face_plus = f;
      face.reversed = edge_reversed(mesh, face);
      mesh.faces.push_back(face);
      open_edges.erase(it);
    }

  // Remaining edges lie on the domain boundary.
  struct Side {
    std::map<int, std::pair<int, int>> by_index;
  };
  Side left, right, bottom, top;
  for (const auto& [key, ef] : open_edges) {
    const int ia = key.first % (nx + 1), ja = key.first / (nx + 1);
    const int ib = key.second % (nx + 1), jb = key.second / (nx + 1);
    if (ia == ib && ia == 0) left.by_index[std::min(ja, jb)] = ef;
    else if (ia == ib && ia == nx) right.by_index[std::min(ja, jb)] = ef;
    else if (ja == jb && ja == 0) bottom.by_index[std::min(ia, ib)] = ef;
    else if (ja == jb && ja == ny) top.by_index[std::min(ia, ib)] = ef;
    else throw NumericalFailure("build_mesh_2d_bisected: unmatched interior edge");
  }

  if (bc == BoundaryKind::Periodic) {
    const auto pair_sides = [&mesh](const Side& minus, const Side& plus, const Eigen::Vector2d& shift) {
      for (const auto& [idx, em] : minus.by_index) {
        const auto& ep = plus.by_index.at(idx);
        InteriorFace face;
        face.elem_minus = em.first;
        face.face_minus = em.second;
        face.elem_plus = ep.first;
        face.face_plus = ep.second;
        face.periodic = true;
        face.shift = shift;
        face.reversed = edge_reversed(mesh, face);
        mesh.faces.push_back(face);
      }
    };
    pair_sides(left, right, Eigen::Vector2d(x0 - x1, 0));
    pair_sides(bottom, top, Eigen::Vector2d(0, y0 - y1));
  } else {
    const auto tag_side = [&mesh](const Side& side, const char* tag) {
      for (const auto& [idx, ef] : side.by_index) mesh.boundary_faces.push_back({ef.first, ef.second, tag});
    };
    tag_side(bottom, "bottom");
    tag_side(right, "right");
    tag_side(top, "top");
    tag_side(left, "left");
  }
  return mesh;
}

std::vector<int> trace_permutation(const InteriorFace& face, const Eigen::VectorXd& t_points) {
  const int n = static_cast<int>(t_points.size());
  std::vector<int> perm(n);
  for (int q = 0; q < n; ++q) {
    if (!face.reversed) {
      perm[q] = q;
      continue;
    }
    int match = -1;
    for (int j = 0; j < n; ++j)
      if (std::abs(t_points(j) + t_points(q)) < kMatchTol) match = j;
    if (match < 0) throw InvalidInput("trace_permutation: face parameter set is not symmetric");
    perm[q] = match;
  }
  return perm;
}

double max_trace_mismatch(const Mesh& mesh, const Eigen::VectorXd& t_points) {
  double worst = 0.0;
  for (const auto& face : mesh.faces) {
    const auto perm = trace_permutation(face, t_points);
    for (int q = 0; q < t_points.size(); ++q) {
      Eigen::Vector2d xm = Eigen::Vector2d::Zero(), xp = Eigen::Vector2d::Zero();
      xm.head(mesh.dim) = mesh.face_point(face.elem_minus, face.face_minus, t_points(q));
      xp.head(mesh.dim) = mesh.face_point(face.elem_plus, face.face_plus, t_points(perm[q]));
      worst = std::max(worst, (xm - (xp + face.shift)).norm());
    }
  }
  return worst;
}

}  // namespace dgtau
