#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <memory>
#include <vector>

#include "dgtau/assembly.hpp"
#include "dgtau/mesh.hpp"
#include "dgtau/pde.hpp"
#include "dgtau/refelem.hpp"

namespace testing {

using dgtau::BoundaryKind;
using dgtau::DGOperator;
using dgtau::FluxKind;

inline std::shared_ptr<const dgtau::Mesh> mesh_1d(int k, BoundaryKind bc, double a = -1.0, double b = 1.0) {
  return std::make_shared<dgtau::Mesh>(dgtau::build_mesh_1d(k, a, b, bc));
}

inline std::shared_ptr<const dgtau::Mesh> mesh_2d(int nx, int ny, BoundaryKind bc) {
  return std::make_shared<dgtau::Mesh>(dgtau::build_mesh_2d_bisected(nx, ny, -1.0, 1.0, -1.0, 1.0, bc));
}

inline std::shared_ptr<const dgtau::ReferenceElement> ref(int dim, int degree,
                                                          dgtau::NodeSet nodes = dgtau::NodeSet::Optimized) {
  dgtau::ReferenceElementOptions o;
  o.node_set = nodes;
  return std::make_shared<dgtau::ReferenceElement>(dgtau::build_reference_element(dim, degree, o));
}

inline DGOperator advection_1d(int k, int degree, FluxKind kind = FluxKind::Penalty, double tau = 1.0) {
  return dgtau::assemble(mesh_1d(k, BoundaryKind::Periodic), ref(1, degree), dgtau::make_advection_1d(),
                         dgtau::make_flux(kind, tau));
}

inline DGOperator acoustics_1d(int k, int degree, FluxKind kind = FluxKind::Penalty, double tau = 1.0,
                               BoundaryKind bc = BoundaryKind::Wall) {
  return dgtau::assemble(mesh_1d(k, bc), ref(1, degree), dgtau::make_acoustics_1d(), dgtau::make_flux(kind, tau));
}

inline DGOperator acoustics_2d(int nx, int ny, int degree, FluxKind kind = FluxKind::Penalty, double tau = 1.0,
                               BoundaryKind bc = BoundaryKind::Wall) {
  return dgtau::assemble(mesh_2d(nx, ny, bc), ref(2, degree), dgtau::make_acoustics_2d(),
                         dgtau::make_flux(kind, tau));
}

inline DGOperator advection_2d(int nx, int ny, int degree, FluxKind kind = FluxKind::Penalty, double tau = 1.0,
                               Eigen::Vector2d beta = Eigen::Vector2d(1.0, 0.0)) {
  return dgtau::assemble(mesh_2d(nx, ny, BoundaryKind::Periodic), ref(2, degree), dgtau::make_advection_2d(beta),
                         dgtau::make_flux(kind, tau));
}

/// Gauss-Legendre rule on [-1,1] by Golub-Welsch, independent of the library's Jacobi routines.
inline void gauss_legendre(int n, Eigen::VectorXd& x, Eigen::VectorXd& w) {
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(n, n);
  for (int i = 1; i < n; ++i) j(i, i - 1) = j(i - 1, i) = i / std::sqrt(4.0 * i * i - 1.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(j);
  x = es.eigenvalues();
  w = 2.0 * es.eigenvectors().row(0).transpose().array().square();
}

/// Largest distance from each value in `a` to its nearest partner in `b`, with
/// partners used once (greedy on sorted distances).
inline double multiset_distance(const Eigen::VectorXcd& a, const Eigen::VectorXcd& b) {
  if (a.size() != b.size()) return INFINITY;
  std::vector<bool> used(b.size(), false);
  double worst = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    Eigen::Index best = -1;
    for (Eigen::Index j = 0; j < b.size(); ++j)
      if (!used[j] && (best < 0 || std::abs(a(i) - b(j)) < std::abs(a(i) - b(best)))) best = j;
    used[best] = true;
    worst = std::max(worst, std::abs(a(i) - b(best)));
  }
  return worst;
}

inline double rel_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const double s = std::max(a.norm(), b.norm());
  return s > 0.0 ? (a - b).norm() / s : 0.0;
}

}  // namespace testing
