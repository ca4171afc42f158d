#pragma once

#include <Eigen/Dense>
#include <vector>

#include "dgtau/assembly.hpp"

namespace dgtau {

struct EnergyTrace {
  std::vector<double> times;
  std::vector<double> energies;  ///< u^T M u
  Eigen::VectorXd final_state;
  std::vector<double> snapshot_times;
  std::vector<Eigen::VectorXd> snapshots;
  double dt = 0.0;
};

struct IntegrateOptions {
  /// dt must satisfy dt <= cfl / rho(M^{-1} K).
  double cfl = 0.5;
  /// Spectral radius of M^{-1} K; estimated from the dense spectrum when <= 0.
  double spectral_radius = 0.0;
  bool detect_instability = true;
  /// Per-step relative energy growth that aborts the run.
  double growth_tolerance = 1e-6;
  /// Store the state every this many steps (0 disables).
  int snapshot_every = 0;
};

/// Classical RK4 for du/dt = M^{-1} K u; the trace includes t = 0.
EnergyTrace integrate(const DGOperator& op, const Eigen::VectorXd& u0, double dt, int n_steps,
                      const IntegrateOptions& options = {});

double spectral_radius(const DGOperator& op);

/// dE/dt = 2 u^T K u for E = u^T M u.
double energy_rate(const DGOperator& op, const Eigen::VectorXd& u);

/// Jump penalization evaluated by face quadrature: 2 sum over interior faces of
/// <P [[u]], [[u]]> plus the wall ghost-jump terms. Equals -dE/dt.
double jump_dissipation(const DGOperator& op, const Eigen::VectorXd& u);

}  // namespace dgtau
