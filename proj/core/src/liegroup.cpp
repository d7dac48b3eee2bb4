#include "homcrb/liegroup.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/MatrixFunctions>

#include "homcrb/error.hpp"

namespace homcrb {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kSmallAngle = 1e-4;
constexpr double kCutLocusMargin = 1e-6;
constexpr double kMembershipTol = 1e-9;

Eigen::MatrixXd embed(const Eigen::MatrixXd& block, int dim, int offset) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(dim, dim);
  out.block(offset, offset, block.rows(), block.cols()) = block;
  return out;
}

std::vector<Eigen::MatrixXd> so3_basis() {
  std::vector<Eigen::MatrixXd> b;
  for (int i = 0; i < 3; ++i) b.emplace_back(skew3(Eigen::Vector3d::Unit(i)));
  return b;
}

std::vector<Eigen::MatrixXd> se2_basis() {
  std::vector<Eigen::MatrixXd> b(3, Eigen::MatrixXd::Zero(3, 3));
  b[0](0, 1) = -1.0;
  b[0](1, 0) = 1.0;
  b[1](0, 2) = 1.0;
  b[2](1, 2) = 1.0;
  return b;
}

std::vector<Eigen::MatrixXd> se3_basis() {
  std::vector<Eigen::MatrixXd> b;
  for (int i = 0; i < 3; ++i) {
    Eigen::MatrixXd E = Eigen::MatrixXd::Zero(4, 4);
    E.topLeftCorner<3, 3>() = skew3(Eigen::Vector3d::Unit(i));
    b.push_back(E);
  }
  for (int i = 0; i < 3; ++i) {
    Eigen::MatrixXd E = Eigen::MatrixXd::Zero(4, 4);
    E(i, 3) = 1.0;
    b.push_back(E);
  }
  return b;
}

double so3_defect(const Eigen::Ref<const Eigen::MatrixXd>& R) {
  const Eigen::Index n = R.rows();
  const double orth = (R.transpose() * R - Eigen::MatrixXd::Identity(n, n)).norm();
  const double det = std::abs(R.determinant() - 1.0);
  return std::max(orth, det);
}

double homogeneous_row_defect(const Eigen::Ref<const Eigen::MatrixXd>& g) {
  const Eigen::Index n = g.rows();
  Eigen::RowVectorXd expected = Eigen::RowVectorXd::Zero(n);
  expected(n - 1) = 1.0;
  return (g.row(n - 1) - expected).norm();
}

Eigen::Matrix2d rot2(double theta) {
  const double c = std::cos(theta), s = std::sin(theta);
  Eigen::Matrix2d R;
  R << c, -s, s, c;
  return R;
}

// Rodrigues coefficients sin(t)/t, (1-cos t)/t^2, (t - sin t)/t^3.
struct RodriguesCoeffs {
  double a, b, c;
};

RodriguesCoeffs rodrigues(double theta) {
  const double t2 = theta * theta;
  if (theta < kSmallAngle) {
    return {1.0 - t2 / 6.0 + t2 * t2 / 120.0, 0.5 - t2 / 24.0 + t2 * t2 / 720.0,
            1.0 / 6.0 - t2 / 120.0 + t2 * t2 / 5040.0};
  }
  return {std::sin(theta) / theta, (1.0 - std::cos(theta)) / t2,
          (theta - std::sin(theta)) / (t2 * theta)};
}

Eigen::Matrix3d so3_exp(const Eigen::Vector3d& w) {
  const auto k = rodrigues(w.norm());
  const Eigen::Matrix3d W = skew3(w);
  return Eigen::Matrix3d::Identity() + k.a * W + k.b * W * W;
}

Eigen::Vector3d so3_log(const Eigen::Matrix3d& R) {
  const Eigen::Vector3d s(R(2, 1) - R(1, 2), R(0, 2) - R(2, 0), R(1, 0) - R(0, 1));
  const double sin_t = 0.5 * s.norm();
  const double cos_t = 0.5 * (R.trace() - 1.0);
  const double theta = std::atan2(sin_t, cos_t);
  if (theta > kPi - kCutLocusMargin) {
    throw Error(ErrorCode::NearCutLocus,
                "log: rotation angle " + std::to_string(theta) + " is within 1e-6 of pi");
  }
  double factor;
  if (theta < kSmallAngle) {
    const double t2 = theta * theta;
    factor = 0.5 * (1.0 + t2 / 6.0 + 7.0 * t2 * t2 / 360.0);
  } else {
    factor = 0.5 * theta / std::sin(theta);
  }
  return factor * s;
}

// [J(Omega)]^{-1} = I - Omega/2 + (1/t^2 - (1 + cos t)/(2 t sin t)) Omega^2.
Eigen::Matrix3d so3_left_jacobian_inverse(const Eigen::Vector3d& w) {
  const double t = w.norm();
  const Eigen::Matrix3d W = skew3(w);
  double d;
  if (t < kSmallAngle) {
    const double t2 = t * t;
    d = 1.0 / 12.0 + t2 / 720.0 + t2 * t2 / 30240.0;
  } else {
    d = 1.0 / (t * t) - (1.0 + std::cos(t)) / (2.0 * t * std::sin(t));
  }
  return Eigen::Matrix3d::Identity() - 0.5 * W + d * W * W;
}

Eigen::MatrixXd exp_simple(GroupKind kind, int matrix_dim,
                           const Eigen::Ref<const Eigen::VectorXd>& c,
                           const GroupDescriptor& desc) {
  switch (kind) {
    case GroupKind::SO3:
      return so3_exp(c.head<3>());
    case GroupKind::SE3: {
      const Eigen::Vector3d w = c.head<3>();
      const auto k = rodrigues(w.norm());
      const Eigen::Matrix3d W = skew3(w);
      const Eigen::Matrix3d R = Eigen::Matrix3d::Identity() + k.a * W + k.b * W * W;
      const Eigen::Matrix3d V = Eigen::Matrix3d::Identity() + k.b * W + k.c * W * W;
      Eigen::MatrixXd g = Eigen::MatrixXd::Identity(4, 4);
      g.topLeftCorner<3, 3>() = R;
      g.topRightCorner<3, 1>() = V * c.tail<3>();
      return g;
    }
    case GroupKind::SE2: {
      const double theta = c(0);
      double a, b;
      if (std::abs(theta) < kSmallAngle) {
        const double t2 = theta * theta;
        a = 1.0 - t2 / 6.0 + t2 * t2 / 120.0;
        b = theta / 2.0 - theta * t2 / 24.0 + theta * t2 * t2 / 720.0;
      } else {
        a = std::sin(theta) / theta;
        b = (1.0 - std::cos(theta)) / theta;
      }
      Eigen::Matrix2d V;
      V << a, -b, b, a;
      Eigen::MatrixXd g = Eigen::MatrixXd::Identity(3, 3);
      g.topLeftCorner<2, 2>() = rot2(theta);
      g.topRightCorner<2, 1>() = V * c.tail<2>();
      return g;
    }
    case GroupKind::Rn: {
      Eigen::MatrixXd g = Eigen::MatrixXd::Identity(matrix_dim, matrix_dim);
      g.topRightCorner(matrix_dim - 1, 1) = c;
      return g;
    }
    case GroupKind::GLnPlus: {
      const Eigen::MatrixXd X = desc.wedge(c);
      return X.exp();
    }
    case GroupKind::Product:
      break;
  }
  throw Error(ErrorCode::Domain, "exp_simple: unexpected product group");
}

Eigen::VectorXd log_simple(const GroupDescriptor& desc,
                           const Eigen::Ref<const Eigen::MatrixXd>& g) {
  switch (desc.kind()) {
    case GroupKind::SO3:
      return so3_log(g);
    case GroupKind::SE3: {
      const Eigen::Matrix3d R = g.topLeftCorner<3, 3>();
      const Eigen::Vector3d w = so3_log(R);
      Eigen::VectorXd out(6);
      out.head<3>() = w;
      out.tail<3>() = so3_left_jacobian_inverse(w) * g.topRightCorner<3, 1>();
      return out;
    }
    case GroupKind::SE2: {
      const double theta = std::atan2(g(1, 0), g(0, 0));
      if (std::abs(theta) > kPi - kCutLocusMargin) {
        throw Error(ErrorCode::NearCutLocus, "log: SE(2) rotation angle within 1e-6 of pi");
      }
      double a, b;
      if (std::abs(theta) < kSmallAngle) {
        const double t2 = theta * theta;
        a = 1.0 - t2 / 6.0 + t2 * t2 / 120.0;
        b = theta / 2.0 - theta * t2 / 24.0 + theta * t2 * t2 / 720.0;
      } else {
        a = std::sin(theta) / theta;
        b = (1.0 - std::cos(theta)) / theta;
      }
      Eigen::Matrix2d Vinv;
      Vinv << a, b, -b, a;
      Vinv /= (a * a + b * b);
      Eigen::VectorXd out(3);
      out(0) = theta;
      out.tail<2>() = Vinv * g.topRightCorner<2, 1>();
      return out;
    }
    case GroupKind::Rn:
      return g.topRightCorner(g.rows() - 1, 1);
    case GroupKind::GLnPlus: {
      Eigen::EigenSolver<Eigen::MatrixXd> es(g, false);
      const auto& ev = es.eigenvalues();
      for (Eigen::Index i = 0; i < ev.size(); ++i) {
        if (std::abs(ev(i)) < 1e-14 ||
            (std::abs(ev(i).imag()) < 1e-12 && ev(i).real() < 0.0)) {
          throw Error(ErrorCode::Domain,
                      "log: matrix has a zero or real-negative eigenvalue");
        }
      }
      const Eigen::MatrixXd L = g.log();
      return desc.vee(L);
    }
    case GroupKind::Product:
      break;
  }
  throw Error(ErrorCode::Domain, "log_simple: unexpected product group");
}

Eigen::MatrixXd inverse_simple(GroupKind kind, const Eigen::Ref<const Eigen::MatrixXd>& g) {
  switch (kind) {
    case GroupKind::SO3:
      return g.transpose();
    case GroupKind::SE2:
    case GroupKind::SE3: {
      const Eigen::Index n = g.rows() - 1;
      Eigen::MatrixXd out = Eigen::MatrixXd::Identity(n + 1, n + 1);
      out.topLeftCorner(n, n) = g.topLeftCorner(n, n).transpose();
      out.topRightCorner(n, 1) = -g.topLeftCorner(n, n).transpose() * g.topRightCorner(n, 1);
      return out;
    }
    case GroupKind::Rn: {
      Eigen::MatrixXd out = g;
      out.topRightCorner(g.rows() - 1, 1) *= -1.0;
      return out;
    }
    case GroupKind::GLnPlus:
      return g.inverse();
    case GroupKind::Product:
      break;
  }
  throw Error(ErrorCode::Domain, "inverse_simple: unexpected product group");
}

double defect_simple(GroupKind kind, const Eigen::Ref<const Eigen::MatrixXd>& g) {
  switch (kind) {
    case GroupKind::SO3:
      return so3_defect(g);
    case GroupKind::SE2:
    case GroupKind::SE3: {
      const Eigen::Index n = g.rows() - 1;
      return std::max(so3_defect(g.topLeftCorner(n, n)), homogeneous_row_defect(g));
    }
    case GroupKind::Rn: {
      const Eigen::Index n = g.rows() - 1;
      const double top = (g.topLeftCorner(n, n) - Eigen::MatrixXd::Identity(n, n)).norm();
      return std::max(top, homogeneous_row_defect(g));
    }
    case GroupKind::GLnPlus:
      return g.determinant() > 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    case GroupKind::Product:
      break;
  }
  return std::numeric_limits<double>::infinity();
}

Eigen::MatrixXd polar_rotation(const Eigen::MatrixXd& M) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::MatrixXd U = svd.matrixU();
  const Eigen::MatrixXd V = svd.matrixV();
  if ((U * V.transpose()).determinant() < 0.0) U.col(U.cols() - 1) *= -1.0;
  return U * V.transpose();
}

Eigen::MatrixXd project_simple(GroupKind kind, const Eigen::MatrixXd& g) {
  switch (kind) {
    case GroupKind::SO3:
      return polar_rotation(g);
    case GroupKind::SE2:
    case GroupKind::SE3: {
      const Eigen::Index n = g.rows() - 1;
      Eigen::MatrixXd out = g;
      out.topLeftCorner(n, n) = polar_rotation(g.topLeftCorner(n, n));
      out.row(n).setZero();
      out(n, n) = 1.0;
      return out;
    }
    default:
      return g;
  }
}

double rotation_drift_simple(GroupKind kind, const Eigen::Ref<const Eigen::MatrixXd>& g) {
  switch (kind) {
    case GroupKind::SO3:
      return (g.transpose() * g - Eigen::MatrixXd::Identity(3, 3)).norm();
    case GroupKind::SE2:
    case GroupKind::SE3: {
      const Eigen::Index n = g.rows() - 1;
      const auto R = g.topLeftCorner(n, n);
      return (R.transpose() * R - Eigen::MatrixXd::Identity(n, n)).norm();
    }
    default:
      return 0.0;
  }
}

double max_angle_simple(GroupKind kind, const Eigen::Ref<const Eigen::MatrixXd>& g) {
  switch (kind) {
    case GroupKind::SO3:
      return rotation_angle(g);
    case GroupKind::SE3:
      return rotation_angle(g.topLeftCorner<3, 3>());
    case GroupKind::SE2:
      return std::abs(std::atan2(g(1, 0), g(0, 0)));
    default:
      return 0.0;
  }
}

}  // namespace

Eigen::Matrix3d skew3(const Eigen::Vector3d& w) {
  Eigen::Matrix3d W;
  W << 0.0, -w.z(), w.y(), w.z(), 0.0, -w.x(), -w.y(), w.x(), 0.0;
  return W;
}

// ---------------------------------------------------------------------------
// GroupDescriptor

GroupDescriptor::GroupDescriptor(GroupKind kind, int matrix_dim, std::string name,
                                 std::vector<Eigen::MatrixXd> basis,
                                 std::vector<Group> factors)
    : kind_(kind),
      matrix_dim_(matrix_dim),
      algebra_dim_(static_cast<int>(basis.size())),
      name_(std::move(name)),
      basis_(std::move(basis)),
      factors_(std::move(factors)) {
  int mo = 0, ao = 0;
  for (const auto& f : factors_) {
    matrix_offsets_.push_back(mo);
    algebra_offsets_.push_back(ao);
    mo += f->matrix_dim();
    ao += f->algebra_dim();
  }
  const int d2 = matrix_dim_ * matrix_dim_;
  basis_columns_.resize(d2, algebra_dim_);
  for (int i = 0; i < algebra_dim_; ++i) {
    basis_columns_.col(i) = Eigen::Map<const Eigen::VectorXd>(basis_[i].data(), d2);
  }
  const Eigen::MatrixXd gram = basis_columns_.transpose() * basis_columns_;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
      ldlt.vectorD().minCoeff() < 1e-12 * std::max(1.0, ldlt.vectorD().maxCoeff())) {
    throw Error(ErrorCode::BasisClosure, "GroupDescriptor: algebra basis is linearly dependent");
  }
  projector_ = ldlt.solve(basis_columns_.transpose());
}

Group GroupDescriptor::so3() {
  static const Group g =
      std::make_shared<const GroupDescriptor>(GroupKind::SO3, 3, "SO3", so3_basis(), std::vector<Group>{});
  return g;
}

Group GroupDescriptor::se2() {
  static const Group g =
      std::make_shared<const GroupDescriptor>(GroupKind::SE2, 3, "SE2", se2_basis(), std::vector<Group>{});
  return g;
}

Group GroupDescriptor::se3() {
  static const Group g =
      std::make_shared<const GroupDescriptor>(GroupKind::SE3, 4, "SE3", se3_basis(), std::vector<Group>{});
  return g;
}

Group GroupDescriptor::gl_plus(int n) {
  if (n < 1) throw Error(ErrorCode::Dimension, "gl_plus: n must be positive");
  std::vector<Eigen::MatrixXd> b;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      Eigen::MatrixXd E = Eigen::MatrixXd::Zero(n, n);
      E(i, j) = 1.0;
      b.push_back(E);
    }
  }
  return std::make_shared<const GroupDescriptor>(GroupKind::GLnPlus, n,
                                                 "GL" + std::to_string(n) + "+", std::move(b),
                                                 std::vector<Group>{});
}

Group GroupDescriptor::rn(int n) {
  if (n < 1) throw Error(ErrorCode::Dimension, "rn: n must be positive");
  std::vector<Eigen::MatrixXd> b;
  for (int i = 0; i < n; ++i) {
    Eigen::MatrixXd E = Eigen::MatrixXd::Zero(n + 1, n + 1);
    E(i, n) = 1.0;
    b.push_back(E);
  }
  return std::make_shared<const GroupDescriptor>(GroupKind::Rn, n + 1, "R" + std::to_string(n),
                                                 std::move(b), std::vector<Group>{});
}

Group GroupDescriptor::product(std::vector<Group> factors) {
  if (factors.empty()) throw Error(ErrorCode::Dimension, "product: no factors");
  int dim = 0;
  std::string name;
  for (const auto& f : factors) {
    if (f->kind() == GroupKind::Product) {
      throw Error(ErrorCode::Dimension, "product: nested products are not supported");
    }
    dim += f->matrix_dim();
    if (!name.empty()) name += "x";
    name += f->name();
  }
  std::vector<Eigen::MatrixXd> b;
  int offset = 0;
  for (const auto& f : factors) {
    for (const auto& E : f->algebra_basis()) b.push_back(embed(E, dim, offset));
    offset += f->matrix_dim();
  }
  return std::make_shared<const GroupDescriptor>(GroupKind::Product, dim, name, std::move(b),
                                                 std::move(factors));
}

Group GroupDescriptor::power(const Group& factor, int count) {
  if (count < 1) throw Error(ErrorCode::Dimension, "power: count must be positive");
  return product(std::vector<Group>(static_cast<std::size_t>(count), factor));
}

Eigen::MatrixXd GroupDescriptor::wedge(const Eigen::Ref<const Eigen::VectorXd>& coords) const {
  if (coords.size() != algebra_dim_) {
    throw Error(ErrorCode::Dimension, "wedge: expected " + std::to_string(algebra_dim_) +
                                          " coordinates, got " + std::to_string(coords.size()));
  }
  Eigen::VectorXd flat = basis_columns_ * coords;
  return Eigen::Map<Eigen::MatrixXd>(flat.data(), matrix_dim_, matrix_dim_);
}

Eigen::VectorXd GroupDescriptor::vee(const Eigen::Ref<const Eigen::MatrixXd>& X,
                                     double tolerance) const {
  if (X.rows() != matrix_dim_ || X.cols() != matrix_dim_) {
    throw Error(ErrorCode::Dimension, "vee: matrix has wrong shape for " + name_);
  }
  const Eigen::MatrixXd Xc = X;
  const Eigen::Map<const Eigen::VectorXd> flat(Xc.data(), Xc.size());
  Eigen::VectorXd c = projector_ * flat;
  const double residual = (basis_columns_ * c - flat).norm();
  if (residual > tolerance * (1.0 + flat.norm())) {
    throw Error(ErrorCode::NotInAlgebra,
                "vee: matrix is not in the Lie algebra of " + name_ +
                    " (residual " + std::to_string(residual) + ")");
  }
  return c;
}

double GroupDescriptor::algebra_residual(const Eigen::Ref<const Eigen::MatrixXd>& X) const {
  const Eigen::MatrixXd Xc = X;
  const Eigen::Map<const Eigen::VectorXd> flat(Xc.data(), Xc.size());
  return (basis_columns_ * (projector_ * flat) - flat).norm();
}

double GroupDescriptor::membership_defect(const Eigen::Ref<const Eigen::MatrixXd>& g) const {
  if (g.rows() != matrix_dim_ || g.cols() != matrix_dim_ || !g.allFinite()) {
    return std::numeric_limits<double>::infinity();
  }
  if (kind_ != GroupKind::Product) return defect_simple(kind_, g);
  double worst = 0.0;
  Eigen::MatrixXd off = g;
  for (std::size_t k = 0; k < factors_.size(); ++k) {
    const int o = matrix_offsets_[k], d = factors_[k]->matrix_dim();
    worst = std::max(worst, factors_[k]->membership_defect(g.block(o, o, d, d)));
    off.block(o, o, d, d).setZero();
  }
  return std::max(worst, off.norm());
}

void GroupDescriptor::validate_basis(double tol) const {
  for (int i = 0; i < algebra_dim_; ++i) {
    for (int j = i + 1; j < algebra_dim_; ++j) {
      const Eigen::MatrixXd B = basis_[i] * basis_[j] - basis_[j] * basis_[i];
      if (algebra_residual(B) > tol * (1.0 + B.norm())) {
        throw Error(ErrorCode::BasisClosure, "GroupDescriptor: basis of " + name_ +
                                                 " is not closed under the bracket");
      }
    }
  }
}

// ---------------------------------------------------------------------------
// GroupElement / AlgebraVector

GroupElement::GroupElement(Group group, Eigen::MatrixXd matrix)
    : group_(std::move(group)), matrix_(std::move(matrix)) {
  const double defect = group_->membership_defect(matrix_);
  if (!(defect <= kMembershipTol)) {
    throw Error(ErrorCode::Domain, "GroupElement: matrix is not an element of " +
                                       group_->name() + " (defect " + std::to_string(defect) +
                                       ")");
  }
}

GroupElement::GroupElement(Group group, Eigen::MatrixXd matrix, Unchecked)
    : group_(std::move(group)), matrix_(std::move(matrix)) {}

GroupElement GroupElement::identity(const Group& group) {
  const int n = group->matrix_dim();
  return GroupElement(group, Eigen::MatrixXd::Identity(n, n), Unchecked{});
}

GroupElement GroupElement::unchecked(Group group, Eigen::MatrixXd matrix) {
  return GroupElement(std::move(group), std::move(matrix), Unchecked{});
}

GroupElement GroupElement::inverse() const {
  if (group_->kind() != GroupKind::Product) {
    return GroupElement(group_, inverse_simple(group_->kind(), matrix_), Unchecked{});
  }
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(matrix_.rows(), matrix_.cols());
  const auto factors = group_->factors();
  for (std::size_t k = 0; k < factors.size(); ++k) {
    const int o = group_->factor_matrix_offset(k), d = factors[k]->matrix_dim();
    out.block(o, o, d, d) = inverse_simple(factors[k]->kind(), matrix_.block(o, o, d, d));
  }
  return GroupElement(group_, std::move(out), Unchecked{});
}

GroupElement GroupElement::operator*(const GroupElement& rhs) const {
  if (group_ != rhs.group_ && group_->name() != rhs.group_->name()) {
    throw Error(ErrorCode::Dimension, "GroupElement: multiplying elements of different groups");
  }
  if (group_->kind() != GroupKind::Product) {
    return GroupElement(group_, matrix_ * rhs.matrix_, Unchecked{});
  }
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(matrix_.rows(), matrix_.cols());
  const auto factors = group_->factors();
  for (std::size_t k = 0; k < factors.size(); ++k) {
    const int o = group_->factor_matrix_offset(k), d = factors[k]->matrix_dim();
    out.block(o, o, d, d) = matrix_.block(o, o, d, d) * rhs.matrix_.block(o, o, d, d);
  }
  return GroupElement(group_, std::move(out), Unchecked{});
}

Eigen::MatrixXd GroupElement::block(std::size_t k) const {
  const auto factors = group_->factors();
  if (k >= factors.size()) throw Error(ErrorCode::Dimension, "GroupElement::block: bad index");
  const int o = group_->factor_matrix_offset(k), d = factors[k]->matrix_dim();
  return matrix_.block(o, o, d, d);
}

AlgebraVector::AlgebraVector(Group g, Eigen::VectorXd c) : group(std::move(g)), coords(std::move(c)) {
  if (coords.size() != group->algebra_dim()) {
    throw Error(ErrorCode::Dimension, "AlgebraVector: expected " +
                                          std::to_string(group->algebra_dim()) +
                                          " coordinates, got " + std::to_string(coords.size()));
  }
}

AlgebraVector AlgebraVector::zero(const Group& g) {
  return AlgebraVector(g, Eigen::VectorXd::Zero(g->algebra_dim()));
}

Eigen::MatrixXd wedge(const Group& group, const Eigen::Ref<const Eigen::VectorXd>& coords) {
  return group->wedge(coords);
}

Eigen::VectorXd vee(const Group& group, const Eigen::Ref<const Eigen::MatrixXd>& X) {
  return group->vee(X);
}

// ---------------------------------------------------------------------------
// exp / log

GroupElement exp(const Group& group, const Eigen::Ref<const Eigen::VectorXd>& coords) {
  if (coords.size() != group->algebra_dim()) {
    throw Error(ErrorCode::Dimension, "exp: coordinate length mismatch for " + group->name());
  }
  if (group->kind() != GroupKind::Product) {
    return GroupElement::unchecked(group,
                                   exp_simple(group->kind(), group->matrix_dim(), coords, *group));
  }
  const int n = group->matrix_dim();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, n);
  const auto factors = group->factors();
  for (std::size_t k = 0; k < factors.size(); ++k) {
    const int o = group->factor_matrix_offset(k), d = factors[k]->matrix_dim();
    const int ao = group->factor_algebra_offset(k), ad = factors[k]->algebra_dim();
    out.block(o, o, d, d) =
        exp_simple(factors[k]->kind(), d, coords.segment(ao, ad), *factors[k]);
  }
  return GroupElement::unchecked(group, std::move(out));
}

GroupElement exp(const AlgebraVector& X) { return exp(X.group, X.coords); }

AlgebraVector log(const GroupElement& g) {
  const Group& group = g.group();
  if (group->kind() != GroupKind::Product) {
    return AlgebraVector(group, log_simple(*group, g.matrix()));
  }
  Eigen::VectorXd out(group->algebra_dim());
  const auto factors = group->factors();
  for (std::size_t k = 0; k < factors.size(); ++k) {
    const int o = group->factor_matrix_offset(k), d = factors[k]->matrix_dim();
    const int ao = group->factor_algebra_offset(k), ad = factors[k]->algebra_dim();
    out.segment(ao, ad) = log_simple(*factors[k], g.matrix().block(o, o, d, d));
  }
  return AlgebraVector(group, std::move(out));
}

// ---------------------------------------------------------------------------
// Representations

Eigen::MatrixXd adjoint_matrix(const GroupElement& g) {
  const Group& group = g.group();
  const int n = group->algebra_dim();
  const Eigen::MatrixXd& G = g.matrix();
  const Eigen::MatrixXd Ginv = g.inverse().matrix();
  Eigen::MatrixXd Ad(n, n);
  const auto& basis = group->algebra_basis();
  for (int i = 0; i < n; ++i) {
    try {
      Ad.col(i) = group->vee(G * basis[i] * Ginv, 1e-8);
    } catch (const Error& e) {
      throw Error(ErrorCode::BasisClosure, std::string("adjoint_matrix: ") + e.what());
    }
  }
  return Ad;
}

Eigen::MatrixXd ad_matrix(const AlgebraVector& X) {
  const Group& group = X.group;
  const int n = group->algebra_dim();
  const Eigen::MatrixXd Xm = X.matrix();
  Eigen::MatrixXd ad(n, n);
  const auto& basis = group->algebra_basis();
  for (int i = 0; i < n; ++i) {
    try {
      ad.col(i) = group->vee(Xm * basis[i] - basis[i] * Xm, 1e-8);
    } catch (const Error& e) {
      throw Error(ErrorCode::BasisClosure, std::string("ad_matrix: ") + e.what());
    }
  }
  return ad;
}

Eigen::VectorXd bracket(const Group& group, const Eigen::Ref<const Eigen::VectorXd>& x,
                        const Eigen::Ref<const Eigen::VectorXd>& y) {
  const Eigen::MatrixXd X = group->wedge(x), Y = group->wedge(y);
  return group->vee(X * Y - Y * X, 1e-8);
}

double bernoulli_even(int n) {
  static constexpr std::array<double, 11> kB = {
      1.0,          1.0 / 6.0,         -1.0 / 30.0,      1.0 / 42.0,
      -1.0 / 30.0,  5.0 / 66.0,        -691.0 / 2730.0,  7.0 / 6.0,
      -3617.0 / 510.0, 43867.0 / 798.0, -174611.0 / 330.0};
  if (n < 0 || n % 2 != 0 || n / 2 >= static_cast<int>(kB.size())) {
    throw Error(ErrorCode::Dimension, "bernoulli_even: unsupported index " + std::to_string(n));
  }
  return kB[static_cast<std::size_t>(n / 2)];
}

Eigen::MatrixXd psi_series(const Eigen::Ref<const Eigen::MatrixXd>& ad, int order,
                           double* remainder) {
  if (order < 2 || order > 20) {
    throw Error(ErrorCode::Dimension, "psi_matrix: order must lie in [2, 20]");
  }
  const Eigen::Index n = ad.rows();
  Eigen::MatrixXd psi = Eigen::MatrixXd::Identity(n, n) + 0.5 * ad;
  const Eigen::MatrixXd ad2 = ad * ad;
  Eigen::MatrixXd power = Eigen::MatrixXd::Identity(n, n);
  double factorial = 1.0;  // (2k)!
  const int terms = order / 2;
  for (int k = 1; k <= terms; ++k) {
    power = power * ad2;
    factorial *= (2.0 * k - 1.0) * (2.0 * k);
    psi += (bernoulli_even(2 * k) / factorial) * power;
  }
  if (remainder != nullptr) {
    const int k = terms + 1;
    if (2 * k <= 20) {
      factorial *= (2.0 * k - 1.0) * (2.0 * k);
      *remainder = std::abs(bernoulli_even(2 * k) / factorial) * (power * ad2).norm();
    } else {
      *remainder = std::pow(ad.norm() / (2.0 * std::numbers::pi), 2.0 * k);
    }
  }
  return psi;
}

PsiMatrix psi_matrix(const AlgebraVector& X, int order) {
  double remainder = 0.0;
  Eigen::MatrixXd m = psi_series(ad_matrix(X), order, &remainder);
  return PsiMatrix{std::move(m), X, order, remainder};
}

// ---------------------------------------------------------------------------
// Invariant vector field derivatives

double default_fd_step(const GroupElement& g) { return 1e-6 * (1.0 + g.matrix().norm()); }

namespace {

double central_difference(const GroupFunction& fn, const GroupElement& plus,
                          const GroupElement& minus, double h) {
  const double fp = fn(plus), fm = fn(minus);
  if (!std::isfinite(fp) || !std::isfinite(fm)) {
    throw Error(ErrorCode::Evaluation, "invariant-field derivative: non-finite function value");
  }
  return (fp - fm) / (2.0 * h);
}

}  // namespace

double livf_derivative(const GroupFunction& fn, const GroupElement& g, const AlgebraVector& X,
                       double step) {
  const double h = step > 0.0 ? step : default_fd_step(g);
  const GroupElement plus = g * exp(X.group, h * X.coords);
  const GroupElement minus = g * exp(X.group, -h * X.coords);
  return central_difference(fn, plus, minus, h);
}

double rivf_derivative(const GroupFunction& fn, const GroupElement& g, const AlgebraVector& X,
                       double step) {
  const double h = step > 0.0 ? step : default_fd_step(g);
  const GroupElement plus = exp(X.group, h * X.coords) * g;
  const GroupElement minus = exp(X.group, -h * X.coords) * g;
  return central_difference(fn, plus, minus, h);
}

// ---------------------------------------------------------------------------
// Misc

double rotation_angle(const Eigen::Matrix3d& R) {
  const Eigen::Vector3d s(R(2, 1) - R(1, 2), R(0, 2) - R(2, 0), R(1, 0) - R(0, 1));
  return std::atan2(0.5 * s.norm(), 0.5 * (R.trace() - 1.0));
}

double max_rotation_angle(const GroupElement& g) {
  const Group& group = g.group();
  if (group->kind() != GroupKind::Product) return max_angle_simple(group->kind(), g.matrix());
  double worst = 0.0;
  const auto factors = group->factors();
  for (std::size_t k = 0; k < factors.size(); ++k) {
    worst = std::max(worst, max_angle_simple(factors[k]->kind(), g.block(k)));
  }
  return worst;
}

double manifold_drift(const GroupElement& g) {
  const Group& group = g.group();
  if (group->kind() != GroupKind::Product) return rotation_drift_simple(group->kind(), g.matrix());
  double worst = 0.0;
  const auto factors = group->factors();
  for (std::size_t k = 0; k < factors.size(); ++k) {
    worst = std::max(worst, rotation_drift_simple(factors[k]->kind(), g.block(k)));
  }
  return worst;
}

GroupElement project_to_group(const Group& group, const Eigen::MatrixXd& matrix) {
  if (group->kind() != GroupKind::Product) {
    return GroupElement(group, project_simple(group->kind(), matrix));
  }
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(matrix.rows(), matrix.cols());
  const auto factors = group->factors();
  for (std::size_t k = 0; k < factors.size(); ++k) {
    const int o = group->factor_matrix_offset(k), d = factors[k]->matrix_dim();
    out.block(o, o, d, d) = project_simple(factors[k]->kind(), matrix.block(o, o, d, d));
  }
  return GroupElement(group, std::move(out));
}

}  // namespace homcrb
