#pragma once

// Matrix Lie group primitives: descriptors, exp/log, Ad/ad representations,
// invariant-vector-field derivatives and the derivative-of-log matrix.

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace homcrb {

enum class GroupKind { SO3, SE2, SE3, GLnPlus, Rn, Product };

class GroupDescriptor;
using Group = std::shared_ptr<const GroupDescriptor>;

/// Describes a real matrix Lie group together with an ordered basis of its
/// Lie algebra. Coordinates with respect to this basis are the "standard"
/// (vee) coordinates used throughout the library.
///
/// Standard bases:
///   SO3      hat(e1), hat(e2), hat(e3)
///   SE2      (omega, x, y)
///   SE3      (omega_1..3, v_1..3)
///   GLnPlus  elementary matrices E_ij, row-major
///   Rn       translation generators of the (n+1)x(n+1) affine embedding
///   Product  block-diagonal embeddings of the factor bases, in factor order
class GroupDescriptor {
 public:
  static Group so3();
  static Group se2();
  static Group se3();
  static Group gl_plus(int n);
  static Group rn(int n);
  static Group product(std::vector<Group> factors);
  static Group power(const Group& factor, int count);

  GroupKind kind() const noexcept { return kind_; }
  int matrix_dim() const noexcept { return matrix_dim_; }
  int algebra_dim() const noexcept { return algebra_dim_; }
  const std::string& name() const noexcept { return name_; }
  const std::vector<Eigen::MatrixXd>& algebra_basis() const noexcept { return basis_; }

  /// Product factors (empty for non-product groups).
  std::span<const Group> factors() const noexcept { return factors_; }
  /// Offset of factor k inside the block-diagonal matrix.
  int factor_matrix_offset(std::size_t k) const { return matrix_offsets_.at(k); }
  /// Offset of factor k inside the algebra coordinate vector.
  int factor_algebra_offset(std::size_t k) const { return algebra_offsets_.at(k); }

  /// Sum of coords_i E_i.
  Eigen::MatrixXd wedge(const Eigen::Ref<const Eigen::VectorXd>& coords) const;

  /// Least-squares coordinates of X against the basis Gram matrix. Throws
  /// NotInAlgebra when the projection residual exceeds `tolerance`
  /// (relative to 1 + ||X||_F).
  Eigen::VectorXd vee(const Eigen::Ref<const Eigen::MatrixXd>& X,
                      double tolerance = 1e-6) const;

  /// Residual of the least-squares projection of X onto the algebra.
  double algebra_residual(const Eigen::Ref<const Eigen::MatrixXd>& X) const;

  /// Deviation of a matrix from the group's defining constraints
  /// (orthogonality, det, bottom row); NaN-safe, returns +inf on NaN.
  double membership_defect(const Eigen::Ref<const Eigen::MatrixXd>& g) const;

  /// Checks linear independence and bracket closure of the basis.
  void validate_basis(double tol = 1e-10) const;

  GroupDescriptor(GroupKind kind, int matrix_dim, std::string name,
                  std::vector<Eigen::MatrixXd> basis, std::vector<Group> factors);

 private:
  GroupKind kind_;
  int matrix_dim_;
  int algebra_dim_;
  std::string name_;
  std::vector<Eigen::MatrixXd> basis_;
  std::vector<Group> factors_;
  std::vector<int> matrix_offsets_;
  std::vector<int> algebra_offsets_;
  Eigen::MatrixXd basis_columns_;  // vec(E_i) as columns
  Eigen::MatrixXd projector_;      // (B^T B)^{-1} B^T
};

/// A group element: a square matrix tagged with its group. The constructor
/// enforces the group's membership invariants to 1e-9.
class GroupElement {
 public:
  GroupElement(Group group, Eigen::MatrixXd matrix);

  static GroupElement identity(const Group& group);
  /// Builds without validation; the caller guarantees membership.
  static GroupElement unchecked(Group group, Eigen::MatrixXd matrix);

  const Group& group() const noexcept { return group_; }
  const Eigen::MatrixXd& matrix() const noexcept { return matrix_; }

  GroupElement inverse() const;
  GroupElement operator*(const GroupElement& rhs) const;

  /// Block k of a product element.
  Eigen::MatrixXd block(std::size_t k) const;

 private:
  struct Unchecked {};
  GroupElement(Group group, Eigen::MatrixXd matrix, Unchecked);

  Group group_;
  Eigen::MatrixXd matrix_;
};

/// Coordinates of a Lie algebra element in the group's standard basis.
struct AlgebraVector {
  Group group;
  Eigen::VectorXd coords;

  AlgebraVector(Group g, Eigen::VectorXd c);
  static AlgebraVector zero(const Group& g);

  Eigen::MatrixXd matrix() const { return group->wedge(coords); }
  AlgebraVector operator-() const { return {group, -coords}; }
};

Eigen::MatrixXd wedge(const Group& group, const Eigen::Ref<const Eigen::VectorXd>& coords);
Eigen::VectorXd vee(const Group& group, const Eigen::Ref<const Eigen::MatrixXd>& X);

GroupElement exp(const AlgebraVector& X);
GroupElement exp(const Group& group, const Eigen::Ref<const Eigen::VectorXd>& coords);

/// Principal logarithm. Throws NearCutLocus when a rotation angle is within
/// 1e-6 of pi, Domain when the matrix has no real principal logarithm.
AlgebraVector log(const GroupElement& g);

/// Matrix of Ad_g in the standard basis: columns vee(g E_i g^-1).
Eigen::MatrixXd adjoint_matrix(const GroupElement& g);

/// Matrix of ad_X in the standard basis: columns vee([X, E_i]).
Eigen::MatrixXd ad_matrix(const AlgebraVector& X);

/// Bracket [X, Y] in coordinates.
Eigen::VectorXd bracket(const Group& group, const Eigen::Ref<const Eigen::VectorXd>& x,
                        const Eigen::Ref<const Eigen::VectorXd>& y);

/// Truncated Bernoulli-series form of ad_X / (I - exp(-ad_X)).
struct PsiMatrix {
  Eigen::MatrixXd matrix;
  AlgebraVector source;
  int truncation_order;
  /// Norm of the first omitted series term.
  double remainder_estimate;
};

inline constexpr int kDefaultPsiOrder = 10;

/// Psi_X = I + 1/2 ad_X + sum_{n=1}^{order/2} B_{2n}/(2n)! ad_X^{2n}.
/// Supported orders: 2..20.
PsiMatrix psi_matrix(const AlgebraVector& X, int order = kDefaultPsiOrder);

/// Same series for an arbitrary ad matrix (used for non-standard bases).
Eigen::MatrixXd psi_series(const Eigen::Ref<const Eigen::MatrixXd>& ad, int order,
                           double* remainder = nullptr);

/// Bernoulli number B_n for even n <= 20 (B_1 is never needed).
double bernoulli_even(int n);

using GroupFunction = std::function<double(const GroupElement&)>;

/// Default central-difference step 1e-6 (1 + ||g||_F).
double default_fd_step(const GroupElement& g);

/// d/dt fn(g exp(tX)) at 0 by central differences. `step <= 0` selects the
/// default. Throws Evaluation on non-finite function values.
double livf_derivative(const GroupFunction& fn, const GroupElement& g,
                       const AlgebraVector& X, double step = 0.0);

/// d/dt fn(exp(tX) g) at 0 by central differences.
double rivf_derivative(const GroupFunction& fn, const GroupElement& g,
                       const AlgebraVector& X, double step = 0.0);

/// Rotation angle of an SO(3) matrix in [0, pi].
double rotation_angle(const Eigen::Matrix3d& R);

/// Largest rotation angle over all rotation blocks (0 for groups without one).
double max_rotation_angle(const GroupElement& g);

/// Largest orthogonality drift ||R^T R - I||_F over rotation blocks.
double manifold_drift(const GroupElement& g);

/// Polar-projects every rotation block back onto SO(n) and restores the
/// homogeneous bottom row; GLnPlus and Rn elements are returned unchanged.
GroupElement project_to_group(const Group& group, const Eigen::MatrixXd& matrix);

Eigen::Matrix3d skew3(const Eigen::Vector3d& w);

}  // namespace homcrb
