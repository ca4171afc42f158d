#include "dgtau/timedomain.hpp"

#include <cmath>
#include <sstream>

#include "dgtau/error.hpp"
#include "dgtau/spectral.hpp"

namespace dgtau {

double spectral_radius(const DGOperator& op) {
  const Spectrum s = compute_spectrum(op, SpectrumOptions{false});
  return s.size() ? s.eigenvalues.cwiseAbs().maxCoeff() : 0.0;
}

EnergyTrace integrate(const DGOperator& op, const Eigen::VectorXd& u0, double dt, int n_steps,
                      const IntegrateOptions& options) {
  if (u0.size() != op.size()) throw InvalidInput("integrate: initial state has the wrong length");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidInput("integrate: dt must be positive and finite");
  if (n_steps < 0) throw InvalidInput("integrate: n_steps must be >= 0");
  const double rho = options.spectral_radius > 0.0 ? options.spectral_radius : spectral_radius(op);
  if (rho > 0.0 && dt > options.cfl / rho) {
    std::ostringstream msg;
    msg << "integrate: dt = " << dt << " exceeds the cap " << options.cfl << " / rho = " << options.cfl / rho;
    throw InvalidInput(msg.str());
  }

  EnergyTrace trace;
  trace.dt = dt;
  Eigen::VectorXd u = u0;
  double e = op.energy(u);
  trace.times.push_back(0.0);
  trace.energies.push_back(e);
  if (options.snapshot_every > 0) {
    trace.snapshot_times.push_back(0.0);
    trace.snapshots.push_back(u);
  }
  for (int step = 1; step <= n_steps; ++step) {
    const Eigen::VectorXd k1 = op.apply(u);
    const Eigen::VectorXd k2 = op.apply(u + 0.5 * dt * k1);
    const Eigen::VectorXd k3 = op.apply(u + 0.5 * dt * k2);
    const Eigen::VectorXd k4 = op.apply(u + dt * k3);
    u += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    const double e_new = op.energy(u);
    if (options.detect_instability && e_new > e * (1.0 + options.growth_tolerance) && e_new > 0.0) {
      std::ostringstream msg;
      msg << "integrate: energy grew from " << e << " to " << e_new << " at step " << step << " (t = " << step * dt
          << ")";
      throw NumericalFailure(msg.str());
    }
    e = e_new;
    trace.times.push_back(step * dt);
    trace.energies.push_back(e);
    if (options.snapshot_every > 0 && step % options.snapshot_every == 0) {
      trace.snapshot_times.push_back(step * dt);
      trace.snapshots.push_back(u);
    }
  }
  trace.final_state = u;
  return trace;
}

double energy_rate(const DGOperator& op, const Eigen::VectorXd& u) {
  if (u.size() != op.size()) throw InvalidInput("energy_rate: state has the wrong length");
  return 2.0 * u.dot(op.k_matrix() * u);
}

double jump_dissipation(const DGOperator& op, const Eigen::VectorXd& u) {
  if (u.size() != op.size()) throw InvalidInput("jump_dissipation: state has the wrong length");
  const auto& cfg = op.config();
  const DofMap& dofs = op.dofs();
  const int m = dofs.n_fields, np = dofs.n_nodes;
  double total = 0.0;
  for (const auto& t : face_traces(*cfg.mesh, *cfg.ref)) {
    const Eigen::MatrixXd p = normal_flux_data(cfg.system, t.normal, cfg.flux).penalization;
    const Eigen::MatrixXd reflect = t.boundary ? cfg.system.wall_reflection(t.normal) : Eigen::MatrixXd();
    for (int q = 0; q < t.interp_minus.rows(); ++q) {
      Eigen::VectorXd um(m), jump(m);
      for (int f = 0; f < m; ++f) um(f) = t.interp_minus.row(q).dot(u.segment(dofs.block(t.elem_minus, f), np));
      if (t.boundary) {
        jump = (reflect - Eigen::MatrixXd::Identity(m, m)) * um;
      } else {
        for (int f = 0; f < m; ++f) jump(f) = t.interp_plus.row(q).dot(u.segment(dofs.block(t.elem_plus, f), np));
        jump -= um;
      }
      // Interior faces are shared by two element boundaries.
      total += (t.boundary ? 1.0 : 2.0) * t.weights(q) * jump.dot(p * jump);
    }
  }
  return total;
}

}  // namespace dgtau
