#include "dgtau/pde.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "dgtau/error.hpp"

namespace dgtau {

Eigen::MatrixXd HyperbolicSystem::normal_matrix(const Eigen::Vector2d& normal) const {
  Eigen::MatrixXd a_n = Eigen::MatrixXd::Zero(n_fields, n_fields);
  for (int i = 0; i < dim; ++i) a_n += normal(i) * coeff_matrices[i];
  return a_n;
}

bool HyperbolicSystem::has_wall_rule() const {
  return kind == SystemKind::Acoustics1D || kind == SystemKind::Acoustics2D;
}

Eigen::MatrixXd HyperbolicSystem::wall_reflection(const Eigen::Vector2d& normal) const {
  if (!has_wall_rule())
    throw InvalidInput("system '" + system_id(kind) + "' has no wall boundary rule; use periodic boundaries");
  Eigen::MatrixXd r = Eigen::MatrixXd::Identity(n_fields, n_fields);
  const Eigen::VectorXd n = normal.head(dim);
  r.bottomRightCorner(dim, dim) -= 2 * n * n.transpose();
  return r;
}

HyperbolicSystem make_advection_1d(double beta) {
  HyperbolicSystem s;
  s.kind = SystemKind::Advection1D;
  s.dim = 1;
  s.n_fields = 1;
  s.coeff_matrices = {Eigen::MatrixXd::Constant(1, 1, beta)};
  s.advection_vector = Eigen::Vector2d(beta, 0);
  s.field_names = {"u"};
  return s;
}

HyperbolicSystem make_advection_2d(const Eigen::Vector2d& beta) {
  HyperbolicSystem s;
  s.kind = SystemKind::Advection2D;
  s.dim = 2;
  s.n_fields = 1;
  s.coeff_matrices = {Eigen::MatrixXd::Constant(1, 1, beta(0)), Eigen::MatrixXd::Constant(1, 1, beta(1))};
  s.advection_vector = beta;
  s.field_names = {"u"};
  return s;
}

HyperbolicSystem make_acoustics_1d() {
  HyperbolicSystem s;
  s.kind = SystemKind::Acoustics1D;
  s.dim = 1;
  s.n_fields = 2;
  Eigen::MatrixXd ax(2, 2);
  ax << 0, 1, 1, 0;
  s.coeff_matrices = {ax};
  s.field_names = {"p", "u"};
  return s;
}

HyperbolicSystem make_acoustics_2d() {
  HyperbolicSystem s;
  s.kind = SystemKind::Acoustics2D;
  s.dim = 2;
  s.n_fields = 3;
  Eigen::MatrixXd ax = Eigen::MatrixXd::Zero(3, 3), ay = Eigen::MatrixXd::Zero(3, 3);
  ax(0, 1) = ax(1, 0) = 1;
  ay(0, 2) = ay(2, 0) = 1;
  s.coeff_matrices = {ax, ay};
  s.field_names = {"p", "u", "v"};
  return s;
}

HyperbolicSystem make_system(const std::string& id, const Eigen::Vector2d& beta) {
  if (id == "advection1d") return make_advection_1d(beta(0));
  if (id == "advection2d") return make_advection_2d(beta);
  if (id == "acoustics1d") return make_acoustics_1d();
  if (id == "acoustics2d") return make_acoustics_2d();
  throw InvalidInput("unknown system '" + id + "' (expected advection1d|advection2d|acoustics1d|acoustics2d)");
}

std::string system_id(SystemKind kind) {
  switch (kind) {
    case SystemKind::Advection1D: return "advection1d";
    case SystemKind::Advection2D: return "advection2d";
    case SystemKind::Acoustics1D: return "acoustics1d";
    case SystemKind::Acoustics2D: return "acoustics2d";
  }
  return "?";
}

double FluxConfig::effective_tau() const {
  switch (kind) {
    case FluxKind::Central: return 0.0;
    case FluxKind::Upwind: return 1.0;
    default: return tau;
  }
}

FluxConfig make_flux(FluxKind kind, double tau) {
  if (!(tau >= 0) || !std::isfinite(tau)) throw InvalidInput("flux: tau must be finite and >= 0");
  return FluxConfig{kind, tau};
}

FluxKind flux_kind_from_string(const std::string& s) {
  if (s == "central") return FluxKind::Central;
  if (s == "penalty") return FluxKind::Penalty;
  if (s == "upwind") return FluxKind::Upwind;
  if (s == "lf" || s == "lax_friedrichs_componentwise") return FluxKind::LaxFriedrichs;
  throw InvalidInput("unknown flux '" + s + "' (expected central|penalty|upwind|lf)");
}

std::string to_string(FluxKind kind) {
  switch (kind) {
    case FluxKind::Central: return "central";
    case FluxKind::Penalty: return "penalty";
    case FluxKind::Upwind: return "upwind";
    case FluxKind::LaxFriedrichs: return "lf";
  }
  return "?";
}

NormalFluxData normal_flux_data(const HyperbolicSystem& system, const Eigen::Vector2d& normal,
                                const FluxConfig& flux) {
  if (std::abs(normal.head(system.dim).norm() - 1.0) > 1e-12)
    throw InvalidInput("normal_flux_data: normal must have unit length");
  NormalFluxData data;
  data.a_n = system.normal_matrix(normal);
  const int m = system.n_fields;

  const Eigen::EigenSolver<Eigen::MatrixXd> general(data.a_n);
  if (general.info() != Eigen::Success) throw NumericalFailure("normal_flux_data: eigensolver failed");
  if (general.eigenvalues().imag().cwiseAbs().maxCoeff() > 1e-10) {
    std::ostringstream msg;
    msg << "normal_flux_data: A_n has complex eigenvalues (system not hyperbolic): "
        << general.eigenvalues().transpose();
    throw NumericalFailure(msg.str());
  }
  if ((data.a_n - data.a_n.transpose()).norm() == 0.0) {
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(data.a_n);
    data.eigenvalues = eig.eigenvalues();
    data.eigenvectors = eig.eigenvectors();
  } else {
    data.eigenvalues = general.eigenvalues().real();
    data.eigenvectors = general.eigenvectors().real();
  }
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(data.eigenvectors);
  const auto& sv = svd.singularValues();
  data.eigenvector_condition = sv(0) / sv(sv.size() - 1);

  const Eigen::MatrixXd v_inv = data.eigenvectors.inverse();
  const Eigen::VectorXd abs_l = data.eigenvalues.cwiseAbs();
  data.abs_a_n = data.eigenvectors * abs_l.asDiagonal() * v_inv;
  data.a_plus = 0.5 * data.eigenvectors * (data.eigenvalues + abs_l).asDiagonal() * v_inv;
  data.a_minus = 0.5 * data.eigenvectors * (data.eigenvalues - abs_l).asDiagonal() * v_inv;

  switch (flux.kind) {
    case FluxKind::Central: data.penalization = Eigen::MatrixXd::Zero(m, m); break;
    case FluxKind::Penalty: data.penalization = 0.5 * flux.tau * data.a_n.transpose() * data.a_n; break;
    case FluxKind::Upwind: data.penalization = 0.5 * data.abs_a_n; break;
    case FluxKind::LaxFriedrichs: data.penalization = 0.5 * flux.tau * Eigen::MatrixXd::Identity(m, m); break;
  }
  return data;
}

Eigen::MatrixXd constraint_operator(const NormalFluxData& data, FluxKind kind) {
  switch (kind) {
    case FluxKind::Penalty: return data.a_n;
    case FluxKind::Upwind: return data.abs_a_n;
    case FluxKind::LaxFriedrichs: return Eigen::MatrixXd::Identity(data.a_n.rows(), data.a_n.cols());
    case FluxKind::Central: break;
  }
  throw InvalidInput("central flux has no penalization and induces no conforming space");
}

double recommend_tau(const HyperbolicSystem& system, const Eigen::Vector2d& normal) {
  const NormalFluxData data = normal_flux_data(system, normal, FluxConfig{FluxKind::Central, 0.0});
  const double lmax = data.eigenvalues.cwiseAbs().maxCoeff();
  if (lmax == 0.0) return std::numeric_limits<double>::infinity();
  return 1.0 / (lmax * data.eigenvector_condition);
}

}  // namespace dgtau
