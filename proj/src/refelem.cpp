#include "dgtau/refelem.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "dgtau/error.hpp"

namespace dgtau {

namespace poly {

void jacobi_gauss(double alpha, double beta, int n_points, Eigen::VectorXd& x, Eigen::VectorXd& w) {
  if (n_points < 1) throw InvalidInput("jacobi_gauss: need at least one point");
  const double gamma_ratio = std::exp(std::lgamma(alpha + 1) + std::lgamma(beta + 1) -
                                      std::lgamma(alpha + beta + 1));
  const double norm = std::pow(2.0, alpha + beta + 1) / (alpha + beta + 1) * gamma_ratio;
  if (n_points == 1) {
    x = Eigen::VectorXd::Constant(1, (beta - alpha) / (alpha + beta + 2));
    w = Eigen::VectorXd::Constant(1, norm);
    return;
  }
  // Golub-Welsch on the symmetric Jacobi matrix.
  const int n = n_points;
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    const double h1 = 2.0 * i + alpha + beta;
    jac(i, i) = (std::abs(h1 * (h1 + 2)) < 1e-300) ? 0.0
                                                     : -0.5 * (alpha * alpha - beta * beta) / ((h1 + 2) * h1);
    if (i + 1 < n) {
      const double k = i + 1.0;
      const double off = 2.0 / (h1 + 2) *
                         std::sqrt(k * (k + alpha + beta) * (k + alpha) * (k + beta) / ((h1 + 1) * (h1 + 3)));
      jac(i, i + 1) = off;
      jac(i + 1, i) = off;
    }
  }
  if (alpha + beta < 10 * std::numeric_limits<double>::epsilon()) jac(0, 0) = 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jac);
  x = eig.eigenvalues();
  w = eig.eigenvectors().row(0).transpose().array().square() * norm;
}

Eigen::VectorXd jacobi_gauss_lobatto(double alpha, double beta, int degree) {
  if (degree == 0) return Eigen::VectorXd::Zero(1);
  Eigen::VectorXd x(degree + 1);
  x(0) = -1.0;
  x(degree) = 1.0;
  if (degree >= 2) {
    Eigen::VectorXd xi, wi;
    jacobi_gauss(alpha + 1, beta + 1, degree - 1, xi, wi);
    x.segment(1, degree - 1) = xi;
  }
  return x;
}

Eigen::VectorXd jacobi_p(const Eigen::VectorXd& x, double alpha, double beta, int n) {
  const double gamma_ratio = std::exp(std::lgamma(alpha + 1) + std::lgamma(beta + 1) -
                                      std::lgamma(alpha + beta + 1));
  const double gamma0 = std::pow(2.0, alpha + beta + 1) / (alpha + beta + 1) * gamma_ratio;
  Eigen::VectorXd p_prev = Eigen::VectorXd::Constant(x.size(), 1.0 / std::sqrt(gamma0));
  if (n == 0) return p_prev;
  const double gamma1 = (alpha + 1) * (beta + 1) / (alpha + beta + 3) * gamma0;
  Eigen::VectorXd p =
      (((alpha + beta + 2) * x.array() / 2 + (alpha - beta) / 2) / std::sqrt(gamma1)).matrix();
  if (n == 1) return p;
  double a_old = 2.0 / (2 + alpha + beta) * std::sqrt((alpha + 1) * (beta + 1) / (alpha + beta + 3));
  for (int i = 1; i < n; ++i) {
    const double h1 = 2.0 * i + alpha + beta;
    const double a_new = 2.0 / (h1 + 2) *
                         std::sqrt((i + 1) * (i + 1 + alpha + beta) * (i + 1 + alpha) * (i + 1 + beta) /
                                   ((h1 + 1) * (h1 + 3)));
    const double b_new = -(alpha * alpha - beta * beta) / h1 / (h1 + 2);
    Eigen::VectorXd p_next = ((x.array() - b_new) * p.array() - a_old * p_prev.array()) / a_new;
    p_prev = std::move(p);
    p = std::move(p_next);
    a_old = a_new;
  }
  return p;
}

Eigen::VectorXd grad_jacobi_p(const Eigen::VectorXd& x, double alpha, double beta, int n) {
  if (n == 0) return Eigen::VectorXd::Zero(x.size());
  return std::sqrt(n * (n + alpha + beta + 1)) * jacobi_p(x, alpha + 1, beta + 1, n - 1);
}

}  // namespace poly

namespace {

constexpr double kNodeTol = 1e-10;

const Eigen::Matrix<double, 3, 2>& triangle_vertices() {
  static const Eigen::Matrix<double, 3, 2> v = (Eigen::Matrix<double, 3, 2>() << -1, -1, 1, -1, -1, 1).finished();
  return v;
}

Eigen::VectorXd warp_factor(int degree, const Eigen::VectorXd& rout) {
  const Eigen::VectorXd lgl = poly::jacobi_gauss_lobatto(0, 0, degree);
  const Eigen::VectorXd req = Eigen::VectorXd::LinSpaced(degree + 1, -1.0, 1.0);
  Eigen::MatrixXd veq(degree + 1, degree + 1);
  Eigen::MatrixXd pmat(degree + 1, rout.size());
  for (int i = 0; i <= degree; ++i) {
    veq.col(i) = poly::jacobi_p(req, 0, 0, i);
    pmat.row(i) = poly::jacobi_p(rout, 0, 0, i).transpose();
  }
  const Eigen::MatrixXd lmat = veq.transpose().partialPivLu().solve(pmat);
  Eigen::VectorXd warp = lmat.transpose() * (lgl - req);
  for (Eigen::Index i = 0; i < rout.size(); ++i) {
    const bool interior = std::abs(rout(i)) < 1.0 - 1e-10;
    if (interior) warp(i) /= 1.0 - rout(i) * rout(i);
  }
  return warp;
}

// Warp & blend nodes on the equilateral triangle, mapped to (r, s).
Eigen::MatrixXd warp_blend_nodes(int degree) {
  static const double alpha_opt[] = {0.0000, 0.0000, 1.4152, 0.1001, 0.2751, 0.9800, 1.0999, 1.2832,
                                     1.3648, 1.4773, 1.4959, 1.5743, 1.5770, 1.6223, 1.6258};
  const int np = num_nodes_for(2, degree);
  if (degree == 0) return (Eigen::MatrixXd(1, 2) << -1.0 / 3.0, -1.0 / 3.0).finished();
  const double alpha = degree < 16 ? alpha_opt[degree - 1] : 5.0 / 3.0;

  Eigen::VectorXd l1(np), l2(np), l3(np);
  int sk = 0;
  for (int n = 0; n <= degree; ++n) {
    for (int m = 0; m <= degree - n; ++m) {
      l1(sk) = static_cast<double>(n) / degree;
      l3(sk) = static_cast<double>(m) / degree;
      l2(sk) = 1.0 - l1(sk) - l3(sk);
      ++sk;
    }
  }
  const double sqrt3 = std::sqrt(3.0);
  Eigen::VectorXd x = (l3 - l2);
  Eigen::VectorXd y = ((-l2 - l3 + 2 * l1) / sqrt3);

  const Eigen::VectorXd warpf1 = warp_factor(degree, l3 - l2);
  const Eigen::VectorXd warpf2 = warp_factor(degree, l1 - l3);
  const Eigen::VectorXd warpf3 = warp_factor(degree, l2 - l1);
  const double c2 = std::cos(2 * std::numbers::pi / 3), s2 = std::sin(2 * std::numbers::pi / 3);
  const double c4 = std::cos(4 * std::numbers::pi / 3), s4 = std::sin(4 * std::numbers::pi / 3);
  for (int i = 0; i < np; ++i) {
    const double w1 = 4 * l2(i) * l3(i) * warpf1(i) * (1 + std::pow(alpha * l1(i), 2));
    const double w2 = 4 * l1(i) * l3(i) * warpf2(i) * (1 + std::pow(alpha * l2(i), 2));
    const double w3 = 4 * l1(i) * l2(i) * warpf3(i) * (1 + std::pow(alpha * l3(i), 2));
    x(i) += w1 + c2 * w2 + c4 * w3;
    y(i) += s2 * w2 + s4 * w3;
  }

  Eigen::MatrixXd rs(np, 2);
  for (int i = 0; i < np; ++i) {
    const double b1 = (sqrt3 * y(i) + 1) / 3;
    const double b2 = (-3 * x(i) - sqrt3 * y(i) + 2) / 6;
    const double b3 = (3 * x(i) - sqrt3 * y(i) + 2) / 6;
    rs(i, 0) = -b2 + b3 - b1;
    rs(i, 1) = -b2 - b3 + b1;
  }
  return rs;
}

Eigen::MatrixXd equispaced_nodes(int dim, int degree) {
  if (dim == 1) {
    if (degree == 0) return Eigen::MatrixXd::Zero(1, 1);
    return Eigen::VectorXd::LinSpaced(degree + 1, -1.0, 1.0);
  }
  if (degree == 0) return (Eigen::MatrixXd(1, 2) << -1.0 / 3.0, -1.0 / 3.0).finished();
  Eigen::MatrixXd rs(num_nodes_for(2, degree), 2);
  int sk = 0;
  for (int j = 0; j <= degree; ++j)
    for (int i = 0; i <= degree - j; ++i) {
      rs(sk, 0) = -1.0 + 2.0 * i / degree;
      rs(sk, 1) = -1.0 + 2.0 * j / degree;
      ++sk;
    }
  return rs;
}

// Collapsed coordinates (a, b) of the reference triangle.
void rs_to_ab(const Eigen::VectorXd& r, const Eigen::VectorXd& s, Eigen::VectorXd& a, Eigen::VectorXd& b) {
  a.resize(r.size());
  for (Eigen::Index i = 0; i < r.size(); ++i)
    a(i) = std::abs(s(i) - 1.0) > 1e-14 ? 2 * (1 + r(i)) / (1 - s(i)) - 1 : -1.0;
  b = s;
}

Eigen::MatrixXd simplex_basis(const Eigen::MatrixXd& rs, int degree) {
  Eigen::VectorXd a, b;
  rs_to_ab(rs.col(0), rs.col(1), a, b);
  Eigen::MatrixXd out(rs.rows(), num_nodes_for(2, degree));
  int sk = 0;
  for (int i = 0; i <= degree; ++i)
    for (int j = 0; j <= degree - i; ++j) {
      const Eigen::VectorXd h1 = poly::jacobi_p(a, 0, 0, i);
      const Eigen::VectorXd h2 = poly::jacobi_p(b, 2 * i + 1, 0, j);
      out.col(sk++) = std::sqrt(2.0) * h1.array() * h2.array() * (1 - b.array()).pow(i);
    }
  return out;
}

void grad_simplex_basis(const Eigen::MatrixXd& rs, int degree, Eigen::MatrixXd& dr, Eigen::MatrixXd& ds) {
  Eigen::VectorXd a, b;
  rs_to_ab(rs.col(0), rs.col(1), a, b);
  const Eigen::Index n = rs.rows();
  dr.resize(n, num_nodes_for(2, degree));
  ds.resize(n, num_nodes_for(2, degree));
  int sk = 0;
  for (int id = 0; id <= degree; ++id)
    for (int jd = 0; jd <= degree - id; ++jd) {
      const Eigen::ArrayXd fa = poly::jacobi_p(a, 0, 0, id).array();
      const Eigen::ArrayXd dfa = poly::grad_jacobi_p(a, 0, 0, id).array();
      const Eigen::ArrayXd gb = poly::jacobi_p(b, 2 * id + 1, 0, jd).array();
      const Eigen::ArrayXd dgb = poly::grad_jacobi_p(b, 2 * id + 1, 0, jd).array();
      const Eigen::ArrayXd half_1mb = 0.5 * (1 - b.array());
      Eigen::ArrayXd dmr = dfa * gb;
      Eigen::ArrayXd dms = dfa * (gb * (0.5 * (1 + a.array())));
      if (id > 0) {
        dmr *= half_1mb.pow(id - 1);
        dms *= half_1mb.pow(id - 1);
      }
      Eigen::ArrayXd tmp = dgb * half_1mb.pow(id);
      if (id > 0) tmp -= 0.5 * id * gb * half_1mb.pow(id - 1);
      dms += fa * tmp;
      const double scale = std::pow(2.0, id + 0.5);
      dr.col(sk) = (dmr * scale).matrix();
      ds.col(sk) = (dms * scale).matrix();
      ++sk;
    }
}

}  // namespace

Eigen::VectorXd ReferenceElement::face_point(int face, double t) const {
  if (dim == 1) return Eigen::VectorXd::Constant(1, face == 0 ? -1.0 : 1.0);
  const auto& v = triangle_vertices();
  const int a = face, b = (face + 1) % 3;
  return (v.row(a) * (1 - t) / 2 + v.row(b) * (1 + t) / 2).transpose();
}

Eigen::MatrixXd ReferenceElement::modal_basis(const Eigen::MatrixXd& r) const {
  if (dim == 1) {
    Eigen::MatrixXd out(r.rows(), degree + 1);
    for (int j = 0; j <= degree; ++j) out.col(j) = poly::jacobi_p(r.col(0), 0, 0, j);
    return out;
  }
  return simplex_basis(r, degree);
}

Eigen::MatrixXd ReferenceElement::interpolation_matrix(const Eigen::MatrixXd& r) const {
  // phi_nodal(x) = P(x)^T V^{-1}
  return vandermonde.transpose().partialPivLu().solve(modal_basis(r).transpose()).transpose();
}

ReferenceElement build_reference_element(int dim, int degree, const ReferenceElementOptions& options) {
  if (dim != 1 && dim != 2) throw InvalidInput("build_reference_element: dim must be 1 or 2");
  if (degree < 0) throw InvalidInput("build_reference_element: degree must be >= 0");

  ReferenceElement ref;
  ref.dim = dim;
  ref.degree = degree;
  ref.node_set = options.node_set;
  if (options.node_set == NodeSet::Equispaced) {
    ref.nodes = equispaced_nodes(dim, degree);
  } else if (dim == 1) {
    ref.nodes = poly::jacobi_gauss_lobatto(0, 0, degree);
  } else {
    ref.nodes = warp_blend_nodes(degree);
  }
  const int np = ref.num_nodes();

  ref.vandermonde = ref.modal_basis(ref.nodes);
  std::vector<Eigen::MatrixXd> grad_modal;
  if (dim == 1) {
    Eigen::MatrixXd vr(np, np);
    for (int j = 0; j <= degree; ++j) vr.col(j) = poly::grad_jacobi_p(ref.nodes.col(0), 0, 0, j);
    grad_modal.push_back(vr);
  } else {
    Eigen::MatrixXd vr, vs;
    grad_simplex_basis(ref.nodes, degree, vr, vs);
    grad_modal.push_back(vr);
    grad_modal.push_back(vs);
  }

  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(ref.vandermonde);
  const auto& sv = svd.singularValues();
  ref.vandermonde_condition = sv(sv.size() - 1) > 0 ? sv(0) / sv(sv.size() - 1)
                                                     : std::numeric_limits<double>::infinity();
  if (!(ref.vandermonde_condition <= options.max_vandermonde_condition)) {
    std::ostringstream msg;
    msg << "build_reference_element: Vandermonde condition number " << ref.vandermonde_condition
        << " exceeds cap " << options.max_vandermonde_condition << " (dim=" << dim << ", degree=" << degree
        << ")";
    throw NumericalFailure(msg.str());
  }

  const Eigen::MatrixXd vinv = ref.vandermonde.inverse();
  for (const auto& g : grad_modal) ref.diff_matrices.push_back(g * vinv);
  ref.mass = vinv.transpose() * vinv;
  ref.mass = 0.5 * (ref.mass + ref.mass.transpose()).eval();

  // Face quadrature.
  if (dim == 1) {
    ref.face_quad_points = Eigen::VectorXd::Zero(1);
    ref.face_quad_weights = Eigen::VectorXd::Ones(1);
    ref.face_measure = {1.0, 1.0};
  } else {
    poly::jacobi_gauss(0, 0, degree + 1, ref.face_quad_points, ref.face_quad_weights);
    ref.face_measure = {2.0, 2.0 * std::sqrt(2.0), 2.0};
  }
  const int nq = ref.num_face_quad();
  const Eigen::LLT<Eigen::MatrixXd> mass_llt(ref.mass);
  for (int f = 0; f < ref.num_faces(); ++f) {
    Eigen::MatrixXd pts(nq, dim);
    for (int q = 0; q < nq; ++q) pts.row(q) = ref.face_point(f, ref.face_quad_points(q)).transpose();
    ref.face_interp.push_back(ref.interpolation_matrix(pts));
    const double jac = dim == 1 ? 1.0 : ref.face_measure[f] / 2;
    const Eigen::VectorXd w = ref.face_quad_weights * jac;
    ref.lift.push_back(mass_llt.solve(ref.face_interp.back().transpose() * w.asDiagonal()));

    // Volume nodes on this face, ordered by the face parameter.
    std::vector<std::pair<double, int>> on_face;
    for (int i = 0; i < np; ++i) {
      const Eigen::RowVectorXd x = ref.nodes.row(i);
      if (dim == 1) {
        if (std::abs(x(0) - (f == 0 ? -1.0 : 1.0)) < kNodeTol) on_face.emplace_back(0.0, i);
        continue;
      }
      const auto& v = triangle_vertices();
      const Eigen::RowVector2d a = v.row(f), b = v.row((f + 1) % 3);
      const Eigen::RowVector2d d = b - a;
      const Eigen::RowVector2d rel = x - a;
      const double cross = d(0) * rel(1) - d(1) * rel(0);
      if (std::abs(cross) / d.norm() < kNodeTol) {
        on_face.emplace_back(2.0 * rel.dot(d) / d.squaredNorm() - 1.0, i);
      }
    }
    std::sort(on_face.begin(), on_face.end());
    std::vector<int> ids;
    for (const auto& [t, i] : on_face) ids.push_back(i);
    ref.face_nodes.push_back(std::move(ids));
  }
  return ref;
}

}  // namespace dgtau
