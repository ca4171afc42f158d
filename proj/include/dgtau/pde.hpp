#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace dgtau {

enum class SystemKind { Advection1D, Advection2D, Acoustics1D, Acoustics2D };

/// Constant-coefficient first order system dU/dt + sum_i A_i dU/dx_i = 0.
struct HyperbolicSystem {
  SystemKind kind = SystemKind::Advection1D;
  int dim = 1;
  int n_fields = 1;
  std::vector<Eigen::MatrixXd> coeff_matrices;
  Eigen::Vector2d advection_vector = Eigen::Vector2d::Zero();
  double wavespeed = 1.0;
  std::vector<std::string> field_names;

  /// A_n = sum_i A_i n_i.
  Eigen::MatrixXd normal_matrix(const Eigen::Vector2d& normal) const;
  /// Acoustic systems reflect at walls: p+ = p-, u_n+ = -u_n-.
  bool has_wall_rule() const;
  /// Ghost-state matrix R with U+ = R U- on a wall with outward normal n.
  Eigen::MatrixXd wall_reflection(const Eigen::Vector2d& normal) const;
};

HyperbolicSystem make_advection_1d(double beta = 1.0);
HyperbolicSystem make_advection_2d(const Eigen::Vector2d& beta = Eigen::Vector2d(1.0, 0.0));
HyperbolicSystem make_acoustics_1d();
HyperbolicSystem make_acoustics_2d();

/// "advection1d" | "advection2d" | "acoustics1d" | "acoustics2d".
HyperbolicSystem make_system(const std::string& id, const Eigen::Vector2d& beta);
std::string system_id(SystemKind kind);

enum class FluxKind { Central, Penalty, Upwind, LaxFriedrichs };

struct FluxConfig {
  FluxKind kind = FluxKind::Penalty;
  double tau = 1.0;

  /// tau actually multiplying the penalization (0 for central, 1 for upwind).
  double effective_tau() const;
  bool tau_dependent() const { return kind == FluxKind::Penalty || kind == FluxKind::LaxFriedrichs; }
};

FluxConfig make_flux(FluxKind kind, double tau);
/// "central" | "penalty" | "upwind" | "lf".
FluxKind flux_kind_from_string(const std::string& s);
std::string to_string(FluxKind kind);

struct NormalFluxData {
  Eigen::MatrixXd a_n;
  Eigen::VectorXd eigenvalues;     ///< Lambda (real)
  Eigen::MatrixXd eigenvectors;    ///< V
  double eigenvector_condition = 1.0;
  Eigen::MatrixXd abs_a_n;         ///< V |Lambda| V^{-1}
  Eigen::MatrixXd a_plus;          ///< V (Lambda + |Lambda|) V^{-1} / 2
  Eigen::MatrixXd a_minus;         ///< V (Lambda - |Lambda|) V^{-1} / 2
  /// Matrix multiplying the jump in the flux, (A_n U)* = A_n {U} - P [[U]].
  Eigen::MatrixXd penalization;
};

NormalFluxData normal_flux_data(const HyperbolicSystem& system, const Eigen::Vector2d& normal,
                                const FluxConfig& flux);

/// Rows whose vanishing on [[U]] defines the conforming space for the flux kind:
/// A_n (penalty), V|Lambda|V^{-1} (upwind), I (component-wise Lax-Friedrichs).
Eigen::MatrixXd constraint_operator(const NormalFluxData& data, FluxKind kind);

/// 1 / (max_i |lambda_i| kappa(V)); +infinity when A_n vanishes (callers reject it).
double recommend_tau(const HyperbolicSystem& system, const Eigen::Vector2d& normal);

}  // namespace dgtau
