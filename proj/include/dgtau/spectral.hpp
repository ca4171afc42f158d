#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

#include "dgtau/assembly.hpp"
#include "dgtau/conforming.hpp"

namespace dgtau {

using Complex = std::complex<double>;

/// Eigenpairs of K u = lambda M u.
struct Spectrum {
  Eigen::VectorXcd eigenvalues;   ///< Re descending, then Im ascending
  Eigen::MatrixXcd eigenvectors;  ///< columns with v^H M v = 1; empty if not requested
  double tau = 0.0;
  double max_residual = 0.0;      ///< max ||K v - lambda M v|| / ||v||, 0 without eigenvectors

  int size() const { return static_cast<int>(eigenvalues.size()); }
  bool has_eigenvectors() const { return eigenvectors.cols() > 0; }
};

struct SpectrumOptions {
  bool eigenvectors = true;
  /// Residual bound relative to max(1, ||L^{-1} K L^{-T}||_2 estimate).
  double residual_tolerance = 1e-8;
  /// Real parts closer than this (relative to the spectral radius) sort as equal.
  double sort_tolerance = 1e-9;
};

Spectrum compute_spectrum(const DGOperator& op, const SpectrumOptions& options = {});

/// Eigenpairs of the symmetric-congruent matrix L^{-1} K L^{-T}; eigenvectors are
/// left in the transformed coordinates (Euclidean-normalized).
Spectrum compute_transformed_spectrum(const Eigen::MatrixXd& k_tilde, double tau,
                                      const SpectrumOptions& options = {});

/// Permutation sorting values by (Re descending, Im ascending); real parts
/// within `tolerance` of each other are treated as equal.
std::vector<int> spectrum_order(const Eigen::VectorXcd& values, double tolerance);

struct Disc {
  Complex center;
  double radius = 0.0;

  bool contains(Complex z, double slack = 0.0) const { return std::abs(z - center) <= radius + slack; }
};

/// tau-independent part of the block-diagonal similarity transform.
struct GerschgorinBasis {
  Eigen::MatrixXcd u;          ///< unitary diagonalizer of A
  Eigen::VectorXcd a_eigenvalues;
  Eigen::MatrixXd q;           ///< orthogonal diagonalizer of S
  Eigen::VectorXd s_eigenvalues;  ///< ascending, all negative for a valid split
  Eigen::MatrixXcd transformed;   ///< diag(U^H, Q^T) [[A, B], [-B^T, C]] diag(U, Q)
  double u_condition = 1.0;  ///< upper bound on kappa(U)
};

struct GerschgorinStructure {
  double tau = 0.0;
  std::vector<Disc> conforming_discs;
  std::vector<Disc> nonconforming_discs;
  bool disjoint = false;

  bool in_conforming_union(Complex z, double slack = 0.0) const;
  bool in_union(Complex z, double slack = 0.0) const;
};

struct GerschgorinOptions {
  double max_u_condition = 1.0 + 1e-6;
};

GerschgorinBasis gerschgorin_basis(const BlockDecomposition& blocks, const GerschgorinOptions& options = {});
GerschgorinStructure gerschgorin_structure(const GerschgorinBasis& basis, double tau);
GerschgorinStructure gerschgorin_structure(const BlockDecomposition& blocks, double tau,
                                           const GerschgorinOptions& options = {});

/// Exact disc geometry; the real-interval test only short-circuits the pairwise check.
bool discs_disjoint(const std::vector<Disc>& first, const std::vector<Disc>& second);

/// Number of values inside the conforming disc union.
int count_in_conforming_union(const GerschgorinStructure& structure, const Eigen::VectorXcd& values);

/// Smallest tau (to relative tolerance) at which the two disc unions separate.
/// Disjointness is monotone in tau since centers move left with fixed radii.
double minimal_disjoint_tau(const GerschgorinBasis& basis, double rel_tolerance = 1e-8);

struct PartitionNorms {
  double wc = 0.0;
  double wnc = 0.0;
};

/// Norms of the V^C and V^NC components of each M-normalized eigenvector.
std::vector<PartitionNorms> eigenvector_partition(const Spectrum& spectrum, const ConformingSplit& split,
                                                  const Eigen::MatrixXd& mass);

}  // namespace dgtau
