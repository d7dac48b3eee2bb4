#include "homcrb/homspace.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Dense>

#include "homcrb/error.hpp"

namespace homcrb {

namespace {

constexpr double kSeedResidual = 1e-8;
constexpr int kBuildInvarianceSamples = 8;

// Orthonormalizes v against `basis` (columns) under metric M. Returns the
// residual norm before normalization.
double orthonormalize_against(Eigen::VectorXd& v, const Eigen::MatrixXd& basis,
                              const Eigen::MatrixXd& M) {
  for (int pass = 0; pass < 2; ++pass) {
    for (Eigen::Index k = 0; k < basis.cols(); ++k) {
      v -= (basis.col(k).dot(M * v)) * basis.col(k);
    }
  }
  const double norm = std::sqrt(std::max(0.0, v.dot(M * v)));
  if (norm > 0.0) v /= norm;
  return norm;
}

void append_column(Eigen::MatrixXd& m, const Eigen::VectorXd& v) {
  m.conservativeResize(v.size(), m.cols() + 1);
  m.col(m.cols() - 1) = v;
}

}  // namespace

ReductiveStructure::ReductiveStructure(Group group, CosetSide side, int n_H,
                                       Eigen::MatrixXd basis, Eigen::MatrixXd gram,
                                       SubgroupSampler sampler, LiftStrategy lift)
    : group_(std::move(group)),
      side_(side),
      n_H_(n_H),
      basis_(std::move(basis)),
      gram_(std::move(gram)),
      sampler_(std::move(sampler)),
      lift_(std::move(lift)) {
  const int n = group_->algebra_dim();
  if (basis_.rows() != n || basis_.cols() != n) {
    throw Error(ErrorCode::Dimension, "ReductiveStructure: basis must be n_G x n_G");
  }
  if (gram_.rows() != n || gram_.cols() != n) {
    throw Error(ErrorCode::Dimension, "ReductiveStructure: gram must be n_G x n_G");
  }
  if (n_H_ < 0 || n_H_ > n) throw Error(ErrorCode::Dimension, "ReductiveStructure: bad n_H");
  Eigen::FullPivLU<Eigen::MatrixXd> lu(basis_);
  if (!lu.isInvertible()) {
    throw Error(ErrorCode::DegenerateSeed, "ReductiveStructure: basis is singular");
  }
  basis_inverse_ = lu.inverse();
}

AlgebraVector ReductiveStructure::basis_vector(int i) const {
  return AlgebraVector(group_, basis_.col(i));
}

Eigen::VectorXd ReductiveStructure::to_reductive(
    const Eigen::Ref<const Eigen::VectorXd>& standard) const {
  return basis_inverse_ * standard;
}

Eigen::VectorXd ReductiveStructure::to_standard(
    const Eigen::Ref<const Eigen::VectorXd>& reductive) const {
  return basis_ * reductive;
}

Eigen::MatrixXd ReductiveStructure::adjoint_reductive(const GroupElement& g) const {
  return basis_inverse_ * adjoint_matrix(g) * basis_;
}

Eigen::MatrixXd ReductiveStructure::ad_reductive(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  return basis_inverse_ * ad_matrix(AlgebraVector(group_, basis_ * x)) * basis_;
}

GroupElement ReductiveStructure::sample_subgroup(RandomStream& rng) const {
  if (!sampler_) throw Error(ErrorCode::UnsupportedMethod, "structure has no subgroup sampler");
  return sampler_(rng);
}

ReductiveStructure ReductiveStructure::with_gram(Eigen::MatrixXd gram) const {
  return ReductiveStructure(group_, side_, n_H_, basis_, std::move(gram), sampler_, lift_);
}

Eigen::MatrixXd selector_pi(const ReductiveStructure& s) {
  Eigen::MatrixXd pi = Eigen::MatrixXd::Zero(s.n_Theta(), s.n_G());
  pi.rightCols(s.n_Theta()).setIdentity();
  return pi;
}

ReductiveStructure build_reductive(const Group& group, const std::vector<AlgebraVector>& h_basis,
                                   const std::optional<std::vector<AlgebraVector>>& seed_m,
                                   CosetSide side, SubgroupSampler sampler,
                                   const std::optional<Eigen::MatrixXd>& metric) {
  const int n = group->algebra_dim();
  const Eigen::MatrixXd M = metric.value_or(Eigen::MatrixXd::Identity(n, n));
  if (M.rows() != n || M.cols() != n) {
    throw Error(ErrorCode::Dimension, "build_reductive: metric must be n_G x n_G");
  }

  Eigen::MatrixXd h_raw(n, static_cast<Eigen::Index>(h_basis.size()));
  for (std::size_t i = 0; i < h_basis.size(); ++i) {
    if (h_basis[i].coords.size() != n) {
      throw Error(ErrorCode::Dimension, "build_reductive: h vector of wrong length");
    }
    h_raw.col(static_cast<Eigen::Index>(i)) = h_basis[i].coords;
  }

  Eigen::MatrixXd basis(n, 0);
  for (Eigen::Index i = 0; i < h_raw.cols(); ++i) {
    Eigen::VectorXd v = h_raw.col(i);
    if (orthonormalize_against(v, basis, M) < kSeedResidual) {
      throw Error(ErrorCode::Subalgebra, "build_reductive: h basis is linearly dependent");
    }
    append_column(basis, v);
  }
  const int n_H = static_cast<int>(basis.cols());

  if (n_H > 0) {
    const Eigen::MatrixXd proj = h_raw * (h_raw.transpose() * h_raw).ldlt().solve(h_raw.transpose());
    for (Eigen::Index i = 0; i < h_raw.cols(); ++i) {
      for (Eigen::Index j = i + 1; j < h_raw.cols(); ++j) {
        const Eigen::VectorXd b = bracket(group, h_raw.col(i), h_raw.col(j));
        const double residual = (b - proj * b).norm();
        if (residual > 1e-8 * (1.0 + b.norm())) {
          throw Error(ErrorCode::Subalgebra,
                      "build_reductive: h is not closed under the bracket (residual " +
                          std::to_string(residual) + ")");
        }
      }
    }
  }

  if (seed_m) {
    for (const auto& seed : *seed_m) {
      Eigen::VectorXd v = seed.coords;
      if (v.size() != n) throw Error(ErrorCode::Dimension, "build_reductive: bad seed length");
      if (orthonormalize_against(v, basis, M) < kSeedResidual) {
        throw Error(ErrorCode::DegenerateSeed,
                    "build_reductive: seed vector depends on the span built so far");
      }
      append_column(basis, v);
    }
    if (basis.cols() != n) {
      throw Error(ErrorCode::DegenerateSeed, "build_reductive: seeds do not complete the basis");
    }
  } else {
    for (int i = 0; i < n && basis.cols() < n; ++i) {
      Eigen::VectorXd v = Eigen::VectorXd::Unit(n, i);
      if (orthonormalize_against(v, basis, M) < kSeedResidual) continue;
      append_column(basis, v);
    }
  }

  // The basis is M-orthonormal, so the inner product is the identity in
  // reductive coordinates.
  ReductiveStructure s(group, side, n_H, basis, Eigen::MatrixXd::Identity(n, n),
                       std::move(sampler));

  if (s.has_sampler() && n_H > 0 && n_H < n) {
    RandomStream rng(0x5eedULL);
    for (int k = 0; k < kBuildInvarianceSamples; ++k) {
      const Eigen::MatrixXd A = s.adjoint_reductive(s.sample_subgroup(rng));
      const double leakage = A.topRightCorner(n_H, n - n_H).norm();
      if (leakage > 1e-8 * (1.0 + A.norm())) {
        throw Error(ErrorCode::NotReductive, "build_reductive: Ad_H does not preserve m (leakage " +
                                                 std::to_string(leakage) + ")");
      }
    }
  }
  return s;
}

ReductiveStructure trivial_structure(const Group& group, CosetSide side) {
  const int n = group->algebra_dim();
  return ReductiveStructure(group, side, 0, Eigen::MatrixXd::Identity(n, n),
                            Eigen::MatrixXd::Identity(n, n),
                            [group](RandomStream&) { return GroupElement::identity(group); });
}

Eigen::Matrix3d random_rotation(RandomStream& rng) {
  Eigen::Matrix3d R = Eigen::Matrix3d::Identity();
  for (int axis = 0; axis < 3; ++axis) {
    const double angle = rng.uniform(-std::numbers::pi, std::numbers::pi);
    R = R * Eigen::AngleAxisd(angle, Eigen::Vector3d::Unit(axis)).toRotationMatrix();
  }
  return R;
}

ReductiveStructure sphere_structure() {
  const Group so3 = GroupDescriptor::so3();
  SubgroupSampler sampler = [so3](RandomStream& rng) {
    const double angle = rng.uniform(-std::numbers::pi, std::numbers::pi);
    return GroupElement::unchecked(
        so3, Eigen::Matrix3d(Eigen::AngleAxisd(angle, Eigen::Vector3d::UnitZ())));
  };
  return build_reductive(so3, {AlgebraVector(so3, Eigen::Vector3d::UnitZ())}, std::nullopt,
                         CosetSide::LeftCoset_GmodH, std::move(sampler));
}

InvarianceReport check_adH_invariance(const ReductiveStructure& s, int n_samples,
                                      RandomStream& rng, double tol) {
  InvarianceReport report;
  report.n_samples = n_samples;
  const int nH = s.n_H(), nT = s.n_Theta();
  if (nT == 0 || !s.has_sampler()) return report;
  const Eigen::MatrixXd G = s.gram().bottomRightCorner(nT, nT);
  for (int k = 0; k < n_samples; ++k) {
    const Eigen::MatrixXd A = s.adjoint_reductive(s.sample_subgroup(rng));
    const double leakage = nH > 0 ? A.topRightCorner(nH, nT).norm() : 0.0;
    const double reverse = nH > 0 ? A.bottomLeftCorner(nT, nH).norm() : 0.0;
    report.max_leakage = std::max({report.max_leakage, leakage, reverse});
    const Eigen::MatrixXd Amm = A.bottomRightCorner(nT, nT);
    report.max_orthogonality_defect =
        std::max(report.max_orthogonality_defect, (Amm.transpose() * G * Amm - G).norm());
    const Eigen::VectorXd z = rng.normal_vector(nT);
    const Eigen::VectorXd az = Amm * z;
    report.max_norm_deviation = std::max(
        report.max_norm_deviation, std::abs(std::sqrt(az.dot(G * az)) - std::sqrt(z.dot(G * z))));
  }
  report.block_diagonal = report.max_leakage <= tol;
  report.invariant = report.block_diagonal && report.max_orthogonality_defect <= tol &&
                     report.max_norm_deviation <= tol;
  return report;
}

namespace {

Eigen::VectorXd side_error(const GroupElement& lifted, const GroupElement& g_ref_inv,
                           bool left) {
  return left ? log(g_ref_inv * lifted).coords : log(lifted * g_ref_inv).coords;
}

CosetError make_error(const ReductiveStructure& s, Eigen::VectorXd eta_std, GroupElement lift,
                      int iterations) {
  Eigen::VectorXd c = s.to_reductive(eta_std);
  Eigen::VectorXd reduced = c.tail(s.n_Theta());
  return CosetError{AlgebraVector(s.group(), std::move(eta_std)), std::move(c),
                    std::move(reduced), std::move(lift), iterations};
}

}  // namespace

CosetError coset_error(const GroupElement& g_ref, const GroupElement& g_est,
                       const ReductiveStructure& s) {
  const bool left = s.left_side();
  const GroupElement g_ref_inv = g_ref.inverse();
  const int nH = s.n_H();

  try {
    if (s.lift_strategy()) {
      GroupElement lifted = s.lift_strategy()(g_ref, g_est);
      Eigen::VectorXd eta = side_error(lifted, g_ref_inv, left);
      CosetError e = make_error(s, std::move(eta), std::move(lifted), 0);
      if (nH > 0 && e.eta_coords.head(nH).norm() > 1e-8) {
        throw Error(ErrorCode::LiftFailure, "coset_error: custom lift left an h-component of " +
                                                std::to_string(e.eta_coords.head(nH).norm()));
      }
      return e;
    }

    GroupElement h = GroupElement::identity(s.group());
    const Eigen::MatrixXd Bh = s.h_basis();
    std::optional<CosetError> converged;
    double converged_norm = 0.0;
    for (int it = 0; it <= kLiftMaxIterations + kLiftPolishIterations; ++it) {
      GroupElement lifted = left ? g_est * h : h * g_est;
      Eigen::VectorXd eta = side_error(lifted, g_ref_inv, left);
      if (nH == 0) return make_error(s, std::move(eta), std::move(lifted), it);
      const Eigen::VectorXd ch = s.basis_inverse().topRows(nH) * eta;
      const double norm = ch.norm();
      // Past the tolerance, keep iterating while the residual still shrinks.
      if (converged) {
        if (!(norm < 0.5 * converged_norm)) return *converged;
        converged = make_error(s, std::move(eta), std::move(lifted), it);
        converged_norm = norm;
        if (norm <= kLiftPolishTolerance) return *converged;
      } else if (norm <= kLiftTolerance) {
        converged = make_error(s, std::move(eta), std::move(lifted), it);
        converged_norm = norm;
        if (norm <= kLiftPolishTolerance) return *converged;
      } else if (it >= kLiftMaxIterations) {
        break;
      }
      const GroupElement step = exp(s.group(), -(Bh * ch));
      h = left ? h * step : step * h;
    }
    if (converged) return *converged;
  } catch (const Error& e) {
    if (e.code() == ErrorCode::LiftFailure) throw;
    throw Error(ErrorCode::LiftFailure, std::string("coset_error: ") + e.what());
  }
  throw Error(ErrorCode::LiftFailure, "coset_error: horizontal lift did not converge within " +
                                          std::to_string(kLiftMaxIterations) + " iterations");
}

std::pair<Eigen::Vector2d, Eigen::Vector2d> sphere_riemannian_check(
    const GroupElement& g_ref, const GroupElement& g_est, const ReductiveStructure& s2) {
  const Eigen::Matrix3d G = g_ref.matrix();
  const Eigen::Vector3d n = G.col(2);
  const Eigen::Vector3d n_hat = g_est.matrix().col(2);
  const double c = std::clamp(n.dot(n_hat), -1.0, 1.0);
  if (c < -1.0 + 1e-12) {
    throw Error(ErrorCode::CutLocus, "sphere_riemannian_check: antipodal points");
  }

  const CosetError ce = coset_error(g_ref, g_est, s2);
  const Eigen::Vector2d eta_group = ce.eta_reduced;

  // Great-circle log at n: angle times the unit tangent toward n_hat.
  const Eigen::Vector3d tangent = n_hat - c * n;
  const double tn = tangent.norm();
  Eigen::Vector3d log_n = Eigen::Vector3d::Zero();
  if (tn > 0.0) log_n = std::atan2(tn, c) * tangent / tn;

  // Tangent images of the m-basis: d pi_g(E_i^L) = g E_i e3.
  Eigen::Matrix<double, 3, 2> T;
  const Eigen::Vector3d e3 = Eigen::Vector3d::UnitZ();
  for (int i = 0; i < 2; ++i) {
    const Eigen::VectorXd m_i = s2.m_basis().col(i);
    T.col(i) = G * (skew3(m_i.head<3>()) * e3);
  }
  const Eigen::Vector2d eta_intrinsic = (T.transpose() * T).ldlt().solve(T.transpose() * log_n);
  return {eta_group, eta_intrinsic};
}

}  // namespace homcrb
