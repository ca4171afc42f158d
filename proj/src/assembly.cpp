#include "dgtau/assembly.hpp"

#include <cmath>
#include <map>
#include <sstream>

#include "dgtau/error.hpp"

namespace dgtau {

namespace {

// Penalization per distinct normal; uniform meshes only have a handful.
class PenaltyCache {
 public:
  PenaltyCache(const HyperbolicSystem& system, FluxConfig unit_flux) : system_(system), flux_(unit_flux) {}

  const NormalFluxData& get(const Eigen::Vector2d& n) {
    const auto key = std::make_pair(std::llround(n(0) * 1e12), std::llround(n(1) * 1e12));
    auto it = cache_.find(key);
    if (it == cache_.end()) it = cache_.emplace(key, normal_flux_data(system_, n, flux_)).first;
    return it->second;
  }

 private:
  const HyperbolicSystem& system_;
  FluxConfig flux_;
  std::map<std::pair<long long, long long>, NormalFluxData> cache_;
};

// Adds coeff(a, b) * block to the (elem_row, a) x (elem_col, b) blocks.
void add_coupled(Eigen::MatrixXd& k, const DofMap& dofs, int elem_row, int elem_col, const Eigen::MatrixXd& coeff,
                 const Eigen::MatrixXd& block) {
  const int np = dofs.n_nodes;
  for (int a = 0; a < dofs.n_fields; ++a)
    for (int b = 0; b < dofs.n_fields; ++b) {
      if (coeff(a, b) == 0.0) continue;
      k.block(dofs.block(elem_row, a), dofs.block(elem_col, b), np, np) += coeff(a, b) * block;
    }
}

}  // namespace

std::vector<FaceTrace> face_traces(const Mesh& mesh, const ReferenceElement& ref) {
  if (mesh.dim != ref.dim) throw InvalidInput("face_traces: mesh and reference element dimensions differ");
  const int nq = ref.num_face_quad();
  std::vector<FaceTrace> out;
  out.reserve(mesh.faces.size() + mesh.boundary_faces.size());
  const auto weights = [&](int elem, int face) -> Eigen::VectorXd {
    if (mesh.dim == 1) return Eigen::VectorXd::Ones(1);
    return ref.face_quad_weights * (mesh.face_measures[elem][face] / 2);
  };
  for (const auto& f : mesh.faces) {
    FaceTrace t;
    t.elem_minus = f.elem_minus;
    t.elem_plus = f.elem_plus;
    t.normal = mesh.normals[f.elem_minus][f.face_minus];
    t.interp_minus = ref.face_interp[f.face_minus];
    const auto perm = trace_permutation(f, ref.face_quad_points);
    t.interp_plus.resize(nq, ref.num_nodes());
    for (int q = 0; q < nq; ++q) t.interp_plus.row(q) = ref.face_interp[f.face_plus].row(perm[q]);
    t.weights = weights(f.elem_minus, f.face_minus);
    out.push_back(std::move(t));
  }
  for (const auto& f : mesh.boundary_faces) {
    FaceTrace t;
    t.elem_minus = f.elem;
    t.boundary = true;
    t.normal = mesh.normals[f.elem][f.face];
    t.interp_minus = ref.face_interp[f.face];
    t.weights = weights(f.elem, f.face);
    out.push_back(std::move(t));
  }
  return out;
}

DGOperator::DGOperator(OperatorConfig config, DofMap dofs, Eigen::MatrixXd central, Eigen::MatrixXd penalty,
                       Eigen::MatrixXd mass, std::vector<Eigen::MatrixXd> element_mass)
    : config_(std::move(config)),
      dofs_(dofs),
      central_(std::move(central)),
      penalty_(std::move(penalty)),
      m_(std::move(mass)),
      element_mass_(std::move(element_mass)) {
  const double tau = config_.flux.effective_tau();
  k_ = tau == 0.0 ? central_ : Eigen::MatrixXd(central_ + tau * penalty_);
  element_llt_.reserve(element_mass_.size());
  for (const auto& me : element_mass_) {
    element_llt_.emplace_back(me);
    if (element_llt_.back().info() != Eigen::Success)
      throw NumericalFailure("DGOperator: element mass matrix is not positive definite");
  }
}

DGOperator DGOperator::at_tau(double tau) const {
  if (!config_.flux.tau_dependent())
    throw InvalidInput("at_tau: flux '" + to_string(config_.flux.kind) + "' does not depend on tau");
  OperatorConfig cfg = config_;
  cfg.flux = make_flux(cfg.flux.kind, tau);
  return DGOperator(std::move(cfg), dofs_, central_, penalty_, m_, element_mass_);
}

Eigen::VectorXd DGOperator::solve_mass(const Eigen::VectorXd& v) const {
  if (v.size() != size()) throw InvalidInput("solve_mass: size mismatch");
  Eigen::VectorXd out(v.size());
  const int np = dofs_.n_nodes;
  for (int k = 0; k < dofs_.n_elements; ++k)
    for (int f = 0; f < dofs_.n_fields; ++f)
      out.segment(dofs_.block(k, f), np) = element_llt_[k].solve(v.segment(dofs_.block(k, f), np));
  return out;
}

Eigen::VectorXd DGOperator::apply(const Eigen::VectorXd& u) const {
  if (u.size() != size()) throw InvalidInput("apply_operator: state has wrong length");
  return solve_mass(k_ * u);
}

double DGOperator::energy(const Eigen::VectorXd& u) const {
  const int np = dofs_.n_nodes;
  double e = 0.0;
  for (int k = 0; k < dofs_.n_elements; ++k)
    for (int f = 0; f < dofs_.n_fields; ++f) {
      const auto seg = u.segment(dofs_.block(k, f), np);
      e += seg.dot(element_mass_[k] * seg);
    }
  return e;
}

Eigen::MatrixXd DGOperator::congruence(const Eigen::MatrixXd& x) const {
  const int np = dofs_.n_nodes;
  Eigen::MatrixXd y = x;
  for (int k = 0; k < dofs_.n_elements; ++k) {
    const auto l = element_llt_[k].matrixL();
    for (int f = 0; f < dofs_.n_fields; ++f) {
      const int off = dofs_.block(k, f);
      l.solveInPlace(y.middleRows(off, np));
    }
  }
  Eigen::MatrixXd yt = y.transpose();
  for (int k = 0; k < dofs_.n_elements; ++k) {
    const auto l = element_llt_[k].matrixL();
    for (int f = 0; f < dofs_.n_fields; ++f) l.solveInPlace(yt.middleRows(dofs_.block(k, f), np));
  }
  return yt.transpose();
}

Eigen::MatrixXcd DGOperator::back_transform(const Eigen::MatrixXcd& y) const {
  const int np = dofs_.n_nodes;
  Eigen::MatrixXcd x = y;
  for (int k = 0; k < dofs_.n_elements; ++k) {
    const Eigen::MatrixXcd lt = element_llt_[k].matrixU().toDenseMatrix().cast<std::complex<double>>();
    for (int f = 0; f < dofs_.n_fields; ++f)
      lt.triangularView<Eigen::Upper>().solveInPlace(x.middleRows(dofs_.block(k, f), np));
  }
  return x;
}

Eigen::MatrixXd DGOperator::factor_transpose_times(const Eigen::MatrixXd& x) const {
  const int np = dofs_.n_nodes;
  Eigen::MatrixXd out(x.rows(), x.cols());
  for (int k = 0; k < dofs_.n_elements; ++k) {
    const Eigen::MatrixXd lt = element_llt_[k].matrixU();
    for (int f = 0; f < dofs_.n_fields; ++f)
      out.middleRows(dofs_.block(k, f), np) = lt * x.middleRows(dofs_.block(k, f), np);
  }
  return out;
}

Eigen::MatrixXd DGOperator::factor_solve(const Eigen::MatrixXd& x) const {
  const int np = dofs_.n_nodes;
  Eigen::MatrixXd y = x;
  for (int k = 0; k < dofs_.n_elements; ++k) {
    const auto l = element_llt_[k].matrixL();
    for (int f = 0; f < dofs_.n_fields; ++f) l.solveInPlace(y.middleRows(dofs_.block(k, f), np));
  }
  return y;
}

DGOperator assemble(const OperatorConfig& config) {
  if (!config.mesh || !config.ref) throw InvalidInput("assemble: mesh and reference element are required");
  const Mesh& mesh = *config.mesh;
  const ReferenceElement& ref = *config.ref;
  const HyperbolicSystem& system = config.system;
  if (mesh.dim != ref.dim) throw InvalidInput("assemble: mesh and reference element dimensions differ");
  if (mesh.dim != system.dim) throw InvalidInput("assemble: system dimension does not match the mesh");
  if (!mesh.boundary_faces.empty() && !system.has_wall_rule()) {
    std::ostringstream msg;
    msg << "assemble: mesh has " << mesh.boundary_faces.size() << " boundary faces but system '"
        << system_id(system.kind) << "' has no boundary rule";
    throw InvalidInput(msg.str());
  }

  DofMap dofs{mesh.num_elements(), ref.num_nodes(), system.n_fields};
  const int n = dofs.size();
  const int np = dofs.n_nodes;
  Eigen::MatrixXd central = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd penalty = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd mass = Eigen::MatrixXd::Zero(n, n);
  std::vector<Eigen::MatrixXd> element_mass(mesh.num_elements());

  // Volume: 1/2 [(A_i U, dV/dx_i) - (A_i dU/dx_i, V)].
  for (int k = 0; k < mesh.num_elements(); ++k) {
    const double det = mesh.jacobians[k];
    element_mass[k] = det * ref.mass;
    for (int f = 0; f < dofs.n_fields; ++f) mass.block(dofs.block(k, f), dofs.block(k, f), np, np) = element_mass[k];
    for (int i = 0; i < mesh.dim; ++i) {
      Eigen::MatrixXd d_phys = Eigen::MatrixXd::Zero(np, np);
      for (int r = 0; r < ref.dim; ++r) d_phys += mesh.inverse_maps[k](r, i) * ref.diff_matrices[r];
      // q(m, j) = int dl_m/dx_i l_j
      const Eigen::MatrixXd q = det * d_phys.transpose() * ref.mass;
      const Eigen::MatrixXd skew = 0.5 * (q - q.transpose());
      add_coupled(central, dofs, k, k, system.coeff_matrices[i], skew);
    }
  }

  // Faces, per unique face with n outward from the minus side and [[U]] = U+ - U-:
  //   -1/2 (<A_n U+, V->  - <A_n U-, V+>)  -  <P [[U]], [[V]]>.
  // Walls use the ghost state U+ = R U-.
  const FluxKind kind = config.flux.kind;
  PenaltyCache cache(system, FluxConfig{kind, 1.0});
  const auto traces = face_traces(mesh, ref);
  for (const auto& t : traces) {
    const NormalFluxData& nd = cache.get(t.normal);
    const Eigen::MatrixXd& a_n = nd.a_n;
    const Eigen::MatrixXd& pen = nd.penalization;
    const int km = t.elem_minus;
    const Eigen::MatrixXd wm = t.weights.asDiagonal() * t.interp_minus;
    const Eigen::MatrixXd emm = t.interp_minus.transpose() * wm;
    if (t.boundary) {
      const Eigen::MatrixXd r = system.wall_reflection(t.normal);
      const Eigen::MatrixXd ident = Eigen::MatrixXd::Identity(system.n_fields, system.n_fields);
      add_coupled(central, dofs, km, km, -0.5 * a_n * r, emm);
      add_coupled(penalty, dofs, km, km, pen * (r - ident), emm);
      continue;
    }
    const int kp = t.elem_plus;
    const Eigen::MatrixXd wp = t.weights.asDiagonal() * t.interp_plus;
    const Eigen::MatrixXd emp = t.interp_minus.transpose() * wp;
    const Eigen::MatrixXd epm = t.interp_plus.transpose() * wm;
    const Eigen::MatrixXd epp = t.interp_plus.transpose() * wp;
    add_coupled(central, dofs, km, kp, -0.5 * a_n, emp);
    add_coupled(central, dofs, kp, km, 0.5 * a_n, epm);
    add_coupled(penalty, dofs, km, km, -pen, emm);
    add_coupled(penalty, dofs, km, kp, pen, emp);
    add_coupled(penalty, dofs, kp, km, pen, epm);
    add_coupled(penalty, dofs, kp, kp, -pen, epp);
  }

  return DGOperator(config, dofs, std::move(central), std::move(penalty), std::move(mass), std::move(element_mass));
}

DGOperator assemble(std::shared_ptr<const Mesh> mesh, std::shared_ptr<const ReferenceElement> ref,
                    const HyperbolicSystem& system, const FluxConfig& flux) {
  return assemble(OperatorConfig{std::move(mesh), std::move(ref), system, flux});
}

Eigen::VectorXd apply_operator(const DGOperator& op, const Eigen::VectorXd& u) { return op.apply(u); }

}  // namespace dgtau
