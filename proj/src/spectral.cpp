#include "dgtau/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "dgtau/error.hpp"

namespace dgtau {

std::vector<int> spectrum_order(const Eigen::VectorXcd& values, double tolerance) {
  const int n = static_cast<int>(values.size());
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  if (n == 0) return order;
  // Cluster real parts by a sweep over the descending order so that the final
  // comparison is a strict weak ordering.
  std::sort(order.begin(), order.end(), [&](int a, int b) { return values(a).real() > values(b).real(); });
  std::vector<int> cluster(n, 0);
  int current = 0;
  double anchor = values(order[0]).real();
  for (int i = 0; i < n; ++i) {
    const double re = values(order[i]).real();
    if (anchor - re > tolerance) {
      ++current;
      anchor = re;
    }
    cluster[order[i]] = current;
  }
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    if (cluster[a] != cluster[b]) return cluster[a] < cluster[b];
    return values(a).imag() < values(b).imag();
  });
  return order;
}

Spectrum compute_transformed_spectrum(const Eigen::MatrixXd& k_tilde, double tau, const SpectrumOptions& options) {
  const Eigen::EigenSolver<Eigen::MatrixXd> solver(k_tilde, options.eigenvectors);
  if (solver.info() != Eigen::Success) {
    std::ostringstream msg;
    msg << "compute_spectrum: eigensolver did not converge (n = " << k_tilde.rows() << ", tau = " << tau << ")";
    throw NumericalFailure(msg.str());
  }
  const Eigen::VectorXcd& raw = solver.eigenvalues();
  const double radius = raw.size() ? raw.cwiseAbs().maxCoeff() : 0.0;
  const auto order = spectrum_order(raw, options.sort_tolerance * std::max(1.0, radius));

  Spectrum spec;
  spec.tau = tau;
  spec.eigenvalues.resize(raw.size());
  for (std::size_t i = 0; i < order.size(); ++i) spec.eigenvalues(static_cast<Eigen::Index>(i)) = raw(order[i]);
  if (options.eigenvectors) {
    const Eigen::MatrixXcd vecs = solver.eigenvectors();
    spec.eigenvectors.resize(vecs.rows(), vecs.cols());
    for (std::size_t i = 0; i < order.size(); ++i) {
      Eigen::VectorXcd v = vecs.col(order[i]);
      v /= v.norm();
      Eigen::Index p = 0;
      v.cwiseAbs().maxCoeff(&p);
      v *= std::conj(v(p)) / std::abs(v(p));
      spec.eigenvectors.col(static_cast<Eigen::Index>(i)) = v;
    }
  }
  return spec;
}

Spectrum compute_spectrum(const DGOperator& op, const SpectrumOptions& options) {
  const Eigen::MatrixXd k_tilde = op.congruence(op.k_matrix());
  Spectrum spec = compute_transformed_spectrum(k_tilde, op.tau(), options);
  if (!spec.has_eigenvectors()) return spec;

  spec.eigenvectors = op.back_transform(spec.eigenvectors);
  const Eigen::MatrixXcd k = op.k_matrix().cast<Complex>();
  const Eigen::MatrixXcd m = op.m_matrix().cast<Complex>();
  const Eigen::MatrixXcd r = k * spec.eigenvectors - m * spec.eigenvectors * spec.eigenvalues.asDiagonal();
  for (int j = 0; j < spec.size(); ++j)
    spec.max_residual = std::max(spec.max_residual, r.col(j).norm() / spec.eigenvectors.col(j).norm());
  const double scale = std::max(1.0, k_tilde.lpNorm<1>());
  if (spec.max_residual > options.residual_tolerance * scale) {
    std::ostringstream msg;
    msg << "compute_spectrum: eigenpair residual " << spec.max_residual << " exceeds "
        << options.residual_tolerance * scale << " (tau = " << spec.tau << ")";
    throw NumericalFailure(msg.str());
  }
  return spec;
}

bool GerschgorinStructure::in_conforming_union(Complex z, double slack) const {
  return std::any_of(conforming_discs.begin(), conforming_discs.end(),
                     [&](const Disc& d) { return d.contains(z, slack); });
}

bool GerschgorinStructure::in_union(Complex z, double slack) const {
  return in_conforming_union(z, slack) ||
         std::any_of(nonconforming_discs.begin(), nonconforming_discs.end(),
                     [&](const Disc& d) { return d.contains(z, slack); });
}

GerschgorinBasis gerschgorin_basis(const BlockDecomposition& blocks, const GerschgorinOptions& options) {
  const Eigen::Index nc = blocks.a_block.rows(), nn = blocks.c_block.rows();
  GerschgorinBasis basis;

  // iA is Hermitian: its eigenvectors diagonalize A with a unitary U, including
  // inside repeated eigenspaces.
  const Eigen::MatrixXcd ia = Complex(0, 1) * blocks.a_block.cast<Complex>();
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> a_eig(0.5 * (ia + ia.adjoint()));
  if (a_eig.info() != Eigen::Success) throw NumericalFailure("gerschgorin_basis: eigensolver failed on A");
  basis.u = a_eig.eigenvectors();
  basis.a_eigenvalues = Complex(0, -1) * a_eig.eigenvalues().cast<Complex>();
  if (nc > 0) {
    // ||U^H U - I||_2 <= e implies kappa(U) <= sqrt((1 + e) / (1 - e)); Frobenius bounds e.
    const double e = (basis.u.adjoint() * basis.u - Eigen::MatrixXcd::Identity(nc, nc)).norm();
    basis.u_condition = e < 1.0 ? std::sqrt((1.0 + e) / (1.0 - e)) : std::numeric_limits<double>::infinity();
  }
  if (basis.u_condition > options.max_u_condition) {
    std::ostringstream msg;
    msg << "gerschgorin_basis: eigenvectors of A are not unitary (condition " << basis.u_condition << ")";
    throw NumericalFailure(msg.str());
  }

  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> s_eig(0.5 * (blocks.s_block + blocks.s_block.transpose()));
  if (s_eig.info() != Eigen::Success) throw NumericalFailure("gerschgorin_basis: eigensolver failed on S");
  basis.q = s_eig.eigenvectors();
  basis.s_eigenvalues = s_eig.eigenvalues();

  const Eigen::MatrixXcd q = basis.q.cast<Complex>();
  basis.transformed.resize(nc + nn, nc + nn);
  basis.transformed.topLeftCorner(nc, nc) = basis.u.adjoint() * blocks.a_block.cast<Complex>() * basis.u;
  basis.transformed.topRightCorner(nc, nn) = basis.u.adjoint() * blocks.b_block.cast<Complex>() * q;
  basis.transformed.bottomLeftCorner(nn, nc) = -q.transpose() * blocks.b_block.transpose().cast<Complex>() * basis.u;
  basis.transformed.bottomRightCorner(nn, nn) = q.transpose() * blocks.c_block.cast<Complex>() * q;
  return basis;
}

GerschgorinStructure gerschgorin_structure(const GerschgorinBasis& basis, double tau) {
  const Eigen::Index nc = basis.u.cols();
  const Eigen::Index n = basis.transformed.rows();
  GerschgorinStructure g;
  g.tau = tau;
  for (Eigen::Index i = 0; i < n; ++i) {
    double radius = basis.transformed.row(i).cwiseAbs().sum() - std::abs(basis.transformed(i, i));
    Complex center = basis.transformed(i, i);
    if (i < nc) {
      g.conforming_discs.push_back({center, radius});
    } else {
      // tau S enters only through the diagonal, so radii are tau-independent.
      center += tau * basis.s_eigenvalues(i - nc);
      g.nonconforming_discs.push_back({center, radius});
    }
  }
  g.disjoint = discs_disjoint(g.conforming_discs, g.nonconforming_discs);
  return g;
}

GerschgorinStructure gerschgorin_structure(const BlockDecomposition& blocks, double tau,
                                           const GerschgorinOptions& options) {
  return gerschgorin_structure(gerschgorin_basis(blocks, options), tau);
}

bool discs_disjoint(const std::vector<Disc>& first, const std::vector<Disc>& second) {
  if (first.empty() || second.empty()) return true;
  auto lo = [](const std::vector<Disc>& d) {
    double v = std::numeric_limits<double>::infinity();
    for (const auto& x : d) v = std::min(v, x.center.real() - x.radius);
    return v;
  };
  auto hi = [](const std::vector<Disc>& d) {
    double v = -std::numeric_limits<double>::infinity();
    for (const auto& x : d) v = std::max(v, x.center.real() + x.radius);
    return v;
  };
  if (hi(second) < lo(first) || hi(first) < lo(second)) return true;
  for (const auto& a : first)
    for (const auto& b : second)
      if (std::abs(a.center - b.center) <= a.radius + b.radius) return false;
  return true;
}

int count_in_conforming_union(const GerschgorinStructure& structure, const Eigen::VectorXcd& values) {
  int count = 0;
  for (Eigen::Index i = 0; i < values.size(); ++i)
    if (structure.in_conforming_union(values(i))) ++count;
  return count;
}

double minimal_disjoint_tau(const GerschgorinBasis& basis, double rel_tolerance) {
  if (basis.s_eigenvalues.size() && basis.s_eigenvalues.maxCoeff() >= 0.0)
    throw NumericalFailure("minimal_disjoint_tau: S is not negative definite; discs never separate");
  if (gerschgorin_structure(basis, 0.0).disjoint) return 0.0;
  double lo = 0.0, hi = 1.0;
  while (!gerschgorin_structure(basis, hi).disjoint) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e300) throw NumericalFailure("minimal_disjoint_tau: no separating tau found");
  }
  while (hi - lo > rel_tolerance * hi) {
    const double mid = 0.5 * (lo + hi);
    (gerschgorin_structure(basis, mid).disjoint ? hi : lo) = mid;
  }
  return hi;
}

std::vector<PartitionNorms> eigenvector_partition(const Spectrum& spectrum, const ConformingSplit& split,
                                                  const Eigen::MatrixXd& mass) {
  if (!spectrum.has_eigenvectors()) throw InvalidInput("eigenvector_partition: spectrum has no eigenvectors");
  if (spectrum.eigenvectors.rows() != mass.rows() || split.basis_c.rows() != mass.rows())
    throw InvalidInput("eigenvector_partition: dimension mismatch");
  const Eigen::MatrixXcd mw = mass.cast<Complex>() * spectrum.eigenvectors;
  const Eigen::MatrixXcd yc = split.basis_c.transpose().cast<Complex>() * mw;
  const Eigen::MatrixXcd ync = split.basis_nc.transpose().cast<Complex>() * mw;
  std::vector<PartitionNorms> out(spectrum.eigenvectors.cols());
  for (Eigen::Index j = 0; j < spectrum.eigenvectors.cols(); ++j) {
    const double norm = std::sqrt(std::abs(spectrum.eigenvectors.col(j).dot(mw.col(j))));
    out[j] = {yc.col(j).norm() / norm, ync.col(j).norm() / norm};
  }
  return out;
}

}  // namespace dgtau
