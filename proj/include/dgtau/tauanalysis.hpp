#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "dgtau/assembly.hpp"
#include "dgtau/conforming.hpp"
#include "dgtau/spectral.hpp"

namespace dgtau {

enum class PathClass { ConformingLimit, Divergent, Unclassified };

std::string to_string(PathClass c);

struct SweepOptions {
  bool eigenvectors = false;
  bool track = true;
  bool classify = true;
  /// A match is ambiguous when the nearest distance exceeds this fraction of the second nearest.
  double ambiguity_ratio = 0.5;
  /// Intervals are not bisected below this width; remaining ambiguity is recorded.
  double min_step = 1e-4;
  /// Cap on refinement samples added over the whole sweep.
  int max_refinements = 2000;
  /// Fallback rule when the Gerschgorin unions overlap at tau_max: divergent if
  /// Re < -divergence_factor * rho(K(0)).
  double divergence_factor = 10.0;
  /// Fallback rule: conforming-limit if within this multiple of rho(K(0)) of eig(A).
  double conforming_tolerance = 1e-3;
};

/// Interval in which greedy matching stayed ambiguous at the minimum step.
struct UnresolvedCrossing {
  double tau_lo = 0.0;
  double tau_hi = 0.0;
  int path = 0;
};

struct SpectrumSweep {
  std::vector<double> taus;          ///< requested samples plus refinement samples, increasing
  std::vector<bool> requested;       ///< false for samples inserted by refinement
  std::vector<Spectrum> spectra;
  /// paths[p][s]: index into spectra[s].eigenvalues
  std::vector<std::vector<int>> paths;
  std::vector<PathClass> classification;
  std::vector<UnresolvedCrossing> unresolved;
  double rho0 = 0.0;                 ///< spectral radius of K(0)
  int n_conforming = 0;
  int n_nonconforming = 0;
  bool gerschgorin_disjoint = false;  ///< at the last sample
  Eigen::VectorXcd conforming_eigenvalues;  ///< eig(A)
  Eigen::VectorXd s_eigenvalues;            ///< eig(S), ascending

  int num_paths() const { return static_cast<int>(paths.size()); }
  Complex value(int path, int sample) const { return spectra[sample].eigenvalues(paths[path][sample]); }
  /// Sample index of an exactly present tau, or -1.
  int sample_index(double tau) const;
  int count(PathClass c) const;
};

/// Spectra of K(tau) for the operator's discretization over `taus` (increasing,
/// at least two samples, flux kind penalty or lf).
SpectrumSweep sweep(const DGOperator& op, const std::vector<double>& taus, const SweepOptions& options = {});

/// Greedy nearest-neighbour assignment: result[i] is the index in `next` matched to `predicted[i]`.
std::vector<int> greedy_match(const Eigen::VectorXcd& predicted, const Eigen::VectorXcd& next);

/// Indices i whose match is ambiguous (nearest > ratio * second nearest, distinct candidates).
std::vector<int> ambiguous_matches(const Eigen::VectorXcd& predicted, const Eigen::VectorXcd& next, double ratio,
                                   double scale);

struct DivergentRate {
  int path = 0;
  double slope = 0.0;
  double s_eigenvalue = 0.0;  ///< sorted match
  double relative_error = 0.0;
};

struct ConvergentRate {
  int path = 0;
  double slope = 0.0;
  double final_distance = 0.0;
  bool roundoff_level = false;  ///< excluded from the slope check
};

struct LemmaReport {
  double tau_lo = 0.0;
  double tau_hi = 0.0;
  std::vector<DivergentRate> divergent;
  std::vector<ConvergentRate> convergent;
  double max_divergent_error = 0.0;
  double min_convergent_slope = 0.0;
  double max_convergent_slope = 0.0;
  double max_final_distance = 0.0;
  int n_divergent = 0;
  int n_convergent = 0;
  int n_roundoff = 0;
};

struct LemmaOptions {
  /// Distances below this multiple of eps * rho(K(tau)) at any fit sample are round-off.
  double roundoff_factor = 1e3;
  /// Requested samples with tau >= fit_from (and tau > 0) enter the fits.
  double fit_from = 0.0;
};

/// Fits rates over the requested samples, which must span at least a decade.
LemmaReport verify_lemma_rates(const SpectrumSweep& sweep, const BlockDecomposition& blocks,
                               const LemmaOptions& options = {});

struct ReturningMode {
  int path = 0;
  double peak_tau = 0.0;
  Complex peak_value;
  Complex end_value;
  double ratio = 0.0;  ///< |Re| at the peak over |Re| at the window end
};

/// Conforming-limit paths whose |Re| at an interior sample of [tau_lo, tau_hi]
/// exceeds `factor` times its value at tau_hi.
std::vector<ReturningMode> find_returning_modes(const SpectrumSweep& sweep, double tau_lo, double tau_hi,
                                                double factor = 5.0);

/// Index into `modes` of the returning mode with the largest |Im| at the window
/// end (ties go to Im > 0), or -1 when empty.
int highest_frequency_returning_mode(const SpectrumSweep& sweep, const std::vector<ReturningMode>& modes);

struct ContinuationOptions {
  /// Largest multiplicative tau step.
  double max_ratio = 1.25;
  /// Steps are not refined below this ratio; the path then fails.
  double min_ratio = 1.0 + 1e-3;
  int max_iterations = 12;
  /// Residual ||K y - lambda y|| relative to ||K||_1 accepted as converged.
  double residual_tolerance = 1e-11;
  /// Minimum |<y_prev, y>| between consecutive unit eigenvectors.
  double min_overlap = 0.9;
  /// With tau_to = 0 the last step jumps to zero from below this tau.
  double zero_floor = 1e-3;
};

/// One eigenvalue path followed by shifted inverse iteration.
struct EigenpairPath {
  std::vector<double> taus;
  std::vector<Complex> values;
  Eigen::VectorXcd initial_vector;  ///< unit eigenvector of L^{-1} K L^{-T} at the first tau
  Eigen::VectorXcd vector;          ///< same at the final tau
  int rejected_steps = 0;
};

/// Follows the eigenpair (lambda, y) of k0 + tau k1 from tau_from > 0 to
/// tau_to >= 0 in geometric steps. Throws NumericalFailure when continuity cannot
/// be established at the minimum step.
EigenpairPath continue_eigenpair(const Eigen::MatrixXd& k0, const Eigen::MatrixXd& k1, double tau_from,
                                 Complex lambda, const Eigen::VectorXcd& y, double tau_to,
                                 const ContinuationOptions& options = {});

struct ContinuedReturningMode {
  ReturningMode mode;
  EigenpairPath path;
  bool returning = false;  ///< ratio >= factor
  std::string failure;     ///< non-empty when continuation lost the path
};

/// Returning-mode search for spectra too dense for full tracking: eigenvalues in
/// the conforming Gerschgorin union at tau_hi (discs must be disjoint there) are
/// filtered to Im >= |Re|, ranked by |Re| and the `max_candidates` largest are
/// continued back to tau_lo. Every attempted candidate is reported.
std::vector<ContinuedReturningMode> find_returning_modes_continued(const DGOperator& op, double tau_lo,
                                                                   double tau_hi, double factor = 5.0,
                                                                   int max_candidates = 4,
                                                                   const ContinuationOptions& options = {});

struct ModalExpansion {
  Eigen::VectorXcd coefficients;
  Eigen::VectorXd damping;  ///< Re(lambda_j) of the basis spectrum
  double residual = 0.0;    ///< relative reconstruction residual
  double condition = 0.0;   ///< estimate for the eigenvector matrix
};

/// Solve V c = vector with V the eigenvectors of `basis` (usually tau = 1).
ModalExpansion expand_in_tau1_basis(const Eigen::VectorXcd& vector, const Spectrum& basis,
                                    double max_condition = 1e10);

/// Default sweep grid: 0 followed by `per_decade` log-spaced samples per decade on [lo, hi].
std::vector<double> log_grid(double lo, double hi, int per_decade, bool include_zero);

}  // namespace dgtau
