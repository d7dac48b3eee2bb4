#pragma once

// Reductive homogeneous-space structures g = h + m, coset errors obtained by
// horizontally lifting an estimate, and the closed-form S^2 cross-check.

#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "homcrb/liegroup.hpp"
#include "homcrb/random.hpp"

namespace homcrb {

enum class CosetSide { LeftCoset_GmodH, RightCoset_HmodG };

/// Draws a random element of the subgroup H.
using SubgroupSampler = std::function<GroupElement(RandomStream&)>;

/// Returns the horizontally lifted estimate for (g_ref, g_est). Used by
/// structures whose fiber is not reachable by the generic fixed-point lift.
using LiftStrategy =
    std::function<GroupElement(const GroupElement& g_ref, const GroupElement& g_est)>;

/// An ordered basis of g whose first n_H vectors span h and the remaining
/// n_Theta span m, together with an inner product expressed in that basis.
///
/// "Reductive coordinates" c of an algebra element relate to its standard
/// coordinates s through s = basis() * c.
class ReductiveStructure {
 public:
  ReductiveStructure(Group group, CosetSide side, int n_H, Eigen::MatrixXd basis,
                     Eigen::MatrixXd gram, SubgroupSampler sampler, LiftStrategy lift = {});

  const Group& group() const noexcept { return group_; }
  CosetSide side() const noexcept { return side_; }
  bool left_side() const noexcept { return side_ == CosetSide::LeftCoset_GmodH; }
  int n_G() const noexcept { return static_cast<int>(basis_.cols()); }
  int n_H() const noexcept { return n_H_; }
  int n_Theta() const noexcept { return n_G() - n_H_; }

  /// n_G x n_G; column i holds the standard coordinates of basis vector i.
  const Eigen::MatrixXd& basis() const noexcept { return basis_; }
  const Eigen::MatrixXd& basis_inverse() const noexcept { return basis_inverse_; }
  /// Inner product in reductive coordinates.
  const Eigen::MatrixXd& gram() const noexcept { return gram_; }

  Eigen::MatrixXd h_basis() const { return basis_.leftCols(n_H_); }
  Eigen::MatrixXd m_basis() const { return basis_.rightCols(n_Theta()); }
  AlgebraVector basis_vector(int i) const;

  Eigen::VectorXd to_reductive(const Eigen::Ref<const Eigen::VectorXd>& standard) const;
  Eigen::VectorXd to_standard(const Eigen::Ref<const Eigen::VectorXd>& reductive) const;

  /// Ad_g in reductive coordinates: B^-1 Ad_g B.
  Eigen::MatrixXd adjoint_reductive(const GroupElement& g) const;
  /// ad_X in reductive coordinates for X given in reductive coordinates.
  Eigen::MatrixXd ad_reductive(const Eigen::Ref<const Eigen::VectorXd>& x) const;

  bool has_sampler() const noexcept { return static_cast<bool>(sampler_); }
  GroupElement sample_subgroup(RandomStream& rng) const;
  const LiftStrategy& lift_strategy() const noexcept { return lift_; }

  /// Same structure with a replaced inner product (used to inject faults).
  ReductiveStructure with_gram(Eigen::MatrixXd gram) const;

 private:
  Group group_;
  CosetSide side_;
  int n_H_;
  Eigen::MatrixXd basis_;
  Eigen::MatrixXd basis_inverse_;
  Eigen::MatrixXd gram_;
  SubgroupSampler sampler_;
  LiftStrategy lift_;
};

/// Selector Pi = [0 I] extracting m-coordinates from reductive coordinates.
Eigen::MatrixXd selector_pi(const ReductiveStructure& s);

/// Builds a reductive structure. `h_basis` and the m seeds are
/// orthonormalized by Gram-Schmidt under `metric` (standard coordinates,
/// identity by default); without explicit seeds the standard basis is used
/// in index order, skipping vectors already in the span. When a sampler is
/// supplied the Ad_H-invariance of m is verified on a few draws.
///
/// Errors: Subalgebra (h not closed), DegenerateSeed (explicit seed dependent
/// on the span so far, or too few seeds), NotReductive.
ReductiveStructure build_reductive(const Group& group, const std::vector<AlgebraVector>& h_basis,
                                   const std::optional<std::vector<AlgebraVector>>& seed_m,
                                   CosetSide side, SubgroupSampler sampler = {},
                                   const std::optional<Eigen::MatrixXd>& metric = std::nullopt);

/// Structure with trivial H (n_H = 0) and the standard basis.
ReductiveStructure trivial_structure(const Group& group,
                                     CosetSide side = CosetSide::LeftCoset_GmodH);

/// S^2 = SO(3)/SO(2), h = span(hat e3), m = span(hat e1, hat e2).
ReductiveStructure sphere_structure();

struct InvarianceReport {
  bool invariant = true;
  bool block_diagonal = true;
  double max_norm_deviation = 0.0;
  double max_leakage = 0.0;
  double max_orthogonality_defect = 0.0;
  int n_samples = 0;
};

/// Samples h in H and checks that Ad_h is block diagonal (m maps into m) and
/// that Ad_h restricted to m is an isometry of the m-part of the inner product.
InvarianceReport check_adH_invariance(const ReductiveStructure& s, int n_samples,
                                      RandomStream& rng, double tol = 1e-8);

struct CosetError {
  AlgebraVector eta_full;          // standard coordinates
  Eigen::VectorXd eta_coords;      // reductive coordinates (h part ~ 0)
  Eigen::VectorXd eta_reduced;     // Pi * eta_coords
  GroupElement lift;
  int iterations = 0;
};

inline constexpr int kLiftMaxIterations = 100;
inline constexpr double kLiftTolerance = 1e-10;
/// After convergence the iteration continues (at most this many steps, while
/// the h-residual at least halves) until the residual reaches the polish level.
inline constexpr int kLiftPolishIterations = 10;
inline constexpr double kLiftPolishTolerance = 1e-13;

/// Horizontal lift of g_est relative to g_ref. G/H: finds h* with
/// log(g_ref^-1 g_est h*) in m; H\G: log(h* g_est g_ref^-1) in m.
/// Throws LiftFailure when the iteration does not converge.
CosetError coset_error(const GroupElement& g_ref, const GroupElement& g_est,
                       const ReductiveStructure& s);

/// Returns (group coset error, intrinsic spherical log coordinates) in the
/// tangent basis d pi_g(E_i^L) of m. Throws CutLocus for antipodal points.
std::pair<Eigen::Vector2d, Eigen::Vector2d> sphere_riemannian_check(
    const GroupElement& g_ref, const GroupElement& g_est, const ReductiveStructure& s2);

/// Random rotation exp(a1 e1) exp(a2 e2) exp(a3 e3) with angles uniform on
/// [-pi, pi].
Eigen::Matrix3d random_rotation(RandomStream& rng);

}  // namespace homcrb
