#pragma once

#include <Eigen/Dense>
#include <memory>
#include <vector>

#include "dgtau/mesh.hpp"
#include "dgtau/pde.hpp"
#include "dgtau/refelem.hpp"

namespace dgtau {

/// Global numbering: row = (element * n_fields + field) * n_nodes + node.
struct DofMap {
  int n_elements = 0;
  int n_nodes = 0;
  int n_fields = 0;

  struct Entry {
    int elem;
    int field;
    int node;
  };

  int size() const { return n_elements * n_nodes * n_fields; }
  int index(int elem, int field, int node) const { return (elem * n_fields + field) * n_nodes + node; }
  Entry unpack(int row) const {
    return {row / (n_nodes * n_fields), (row / n_nodes) % n_fields, row % n_nodes};
  }
  /// Offset of the contiguous (element, field) block.
  int block(int elem, int field) const { return (elem * n_fields + field) * n_nodes; }
};

struct OperatorConfig {
  std::shared_ptr<const Mesh> mesh;
  std::shared_ptr<const ReferenceElement> ref;
  HyperbolicSystem system;
  FluxConfig flux;
};

/// Matched quadrature data on one face. For boundary faces plus-side data is empty.
struct FaceTrace {
  int elem_minus = 0;
  int elem_plus = -1;
  bool boundary = false;
  Eigen::Vector2d normal = Eigen::Vector2d::Zero();
  Eigen::MatrixXd interp_minus;  ///< nq x Np
  Eigen::MatrixXd interp_plus;   ///< nq x Np, rows permuted to match interp_minus
  Eigen::VectorXd weights;       ///< physical quadrature weights
};

std::vector<FaceTrace> face_traces(const Mesh& mesh, const ReferenceElement& ref);

/// Semi-discrete operator M du/dt = K u for the skew-symmetric DG form.
///
/// K is stored as K(tau) = K_central + tau * K_penalty, with K_penalty the
/// penalization assembled at unit tau (for upwind the upwind penalization and
/// effective tau 1).
class DGOperator {
 public:
  DGOperator(OperatorConfig config, DofMap dofs, Eigen::MatrixXd central, Eigen::MatrixXd penalty,
             Eigen::MatrixXd mass, std::vector<Eigen::MatrixXd> element_mass);

  const Eigen::MatrixXd& k_matrix() const { return k_; }
  const Eigen::MatrixXd& m_matrix() const { return m_; }
  const Eigen::MatrixXd& central_part() const { return central_; }
  const Eigen::MatrixXd& penalty_part() const { return penalty_; }
  const DofMap& dofs() const { return dofs_; }
  const OperatorConfig& config() const { return config_; }
  int size() const { return dofs_.size(); }
  double tau() const { return config_.flux.effective_tau(); }

  /// Same discretization with a different tau (no re-assembly). Only for tau-dependent flux kinds.
  DGOperator at_tau(double tau) const;

  /// M^{-1} K u, applied element-block-wise.
  Eigen::VectorXd apply(const Eigen::VectorXd& u) const;
  Eigen::VectorXd solve_mass(const Eigen::VectorXd& v) const;
  /// u^T M u
  double energy(const Eigen::VectorXd& u) const;

  /// L^{-1} X L^{-T} for M = L L^T (block-wise).
  Eigen::MatrixXd congruence(const Eigen::MatrixXd& x) const;
  /// L^{-T} y, mapping eigenvectors of L^{-1} K L^{-T} back to DG coefficients.
  Eigen::MatrixXcd back_transform(const Eigen::MatrixXcd& y) const;
  /// L^T x
  Eigen::MatrixXd factor_transpose_times(const Eigen::MatrixXd& x) const;
  /// L^{-1} x
  Eigen::MatrixXd factor_solve(const Eigen::MatrixXd& x) const;

 private:
  OperatorConfig config_;
  DofMap dofs_;
  Eigen::MatrixXd central_;
  Eigen::MatrixXd penalty_;
  Eigen::MatrixXd k_;
  Eigen::MatrixXd m_;
  std::vector<Eigen::MatrixXd> element_mass_;
  std::vector<Eigen::LLT<Eigen::MatrixXd>> element_llt_;
};

DGOperator assemble(std::shared_ptr<const Mesh> mesh, std::shared_ptr<const ReferenceElement> ref,
                    const HyperbolicSystem& system, const FluxConfig& flux);
DGOperator assemble(const OperatorConfig& config);

/// M^{-1} K u.
Eigen::VectorXd apply_operator(const DGOperator& op, const Eigen::VectorXd& u);

}  // namespace dgtau
