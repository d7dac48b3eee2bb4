#include <cmath>
#include <numbers>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "homcrb/error.hpp"
#include "homcrb/homspace.hpp"
#include "homcrb/models.hpp"
#include "util.hpp"

using namespace homcrb;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorCode::Config;
}

LandmarkModel two_landmarks() { return LandmarkModel({{1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}}); }

}  // namespace

TEST(ReductiveStructure, SphereDimensions) {
  const ReductiveStructure s = sphere_structure();
  EXPECT_EQ(s.n_H(), 1);
  EXPECT_EQ(s.n_Theta(), 2);
  EXPECT_LE((s.h_basis().col(0) - Eigen::Vector3d::UnitZ()).norm(), 1e-15);
  Eigen::Matrix<double, 3, 2> m;
  m << 1, 0, 0, 1, 0, 0;
  EXPECT_LE((s.m_basis() - m).norm(), 1e-15);
}

TEST(ReductiveStructure, LandmarkDimensions) {
  EXPECT_EQ(LandmarkModel({{1.0, 2.0, 3.0}}).structure().n_H(), 3);
  EXPECT_EQ(LandmarkModel({{1.0, 2.0, 3.0}}).structure().n_Theta(), 3);
  EXPECT_EQ(two_landmarks().structure().n_H(), 1);
  EXPECT_EQ(two_landmarks().structure().n_Theta(), 5);
  EXPECT_EQ(LandmarkModel({{1, 0, 0}, {2, 0, 0}, {3, 0, 0}}).structure().n_H(), 1);
  EXPECT_EQ(LandmarkModel({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}).structure().n_H(), 0);
}

TEST(ReductiveStructure, SingleLandmarkMIsTranslations) {
  const ReductiveStructure s = LandmarkModel({{0.3, -1.0, 2.0}}).structure();
  const Eigen::MatrixXd M = s.m_basis();
  EXPECT_LE(M.topRows(3).norm(), 1e-12);
  EXPECT_LE((M.bottomRows(3).transpose() * M.bottomRows(3) - Eigen::Matrix3d::Identity()).norm(), 1e-12);
}

TEST(ReductiveStructure, CoordinateRoundTrip) {
  const ReductiveStructure s = two_landmarks().structure();
  RandomStream rng(1);
  const Eigen::VectorXd x = rng.normal_vector(6);
  EXPECT_LE((s.to_standard(s.to_reductive(x)) - x).norm(), 1e-12);
}

TEST(BuildReductive, RejectsNonClosedSubalgebra) {
  const Group so3 = GroupDescriptor::so3();
  const std::vector<AlgebraVector> h{AlgebraVector(so3, Eigen::Vector3d::UnitX()),
                                     AlgebraVector(so3, Eigen::Vector3d::UnitY())};
  EXPECT_EQ(code_of([&] { build_reductive(so3, h, std::nullopt, CosetSide::LeftCoset_GmodH); }),
            ErrorCode::Subalgebra);
}

TEST(BuildReductive, RejectsDependentSeeds) {
  const Group so3 = GroupDescriptor::so3();
  const std::vector<AlgebraVector> h{AlgebraVector(so3, Eigen::Vector3d::UnitZ())};
  const std::vector<AlgebraVector> seeds{AlgebraVector(so3, Eigen::Vector3d::UnitX()),
                                         AlgebraVector(so3, Eigen::Vector3d(2, 0, 1))};
  EXPECT_EQ(code_of([&] { build_reductive(so3, h, seeds, CosetSide::LeftCoset_GmodH); }),
            ErrorCode::DegenerateSeed);
}

TEST(BuildReductive, DetectsNonReductiveComplement) {
  // Under this metric the complement of h is span(e1, e2 + e3/2), which
  // rotations about e3 do not preserve.
  const Group so3 = GroupDescriptor::so3();
  const std::vector<AlgebraVector> h{AlgebraVector(so3, Eigen::Vector3d::UnitZ())};
  const std::vector<AlgebraVector> seeds{AlgebraVector(so3, Eigen::Vector3d::UnitX()),
                                         AlgebraVector(so3, Eigen::Vector3d(0, 1, 1))};
  Eigen::Matrix3d metric = Eigen::Matrix3d::Identity();
  metric(1, 2) = metric(2, 1) = -0.5;
  SubgroupSampler sampler = [so3](RandomStream& rng) {
    return exp(so3, Eigen::Vector3d(0, 0, rng.uniform(-3.0, 3.0)));
  };
  EXPECT_EQ(code_of([&] {
              build_reductive(so3, h, seeds, CosetSide::LeftCoset_GmodH, sampler, metric);
            }),
            ErrorCode::NotReductive);
}

TEST(AdHInvariance, SphereAndLandmarkAreInvariant) {
  RandomStream rng(2);
  const InvarianceReport sphere = check_adH_invariance(sphere_structure(), 100, rng, 1e-10);
  EXPECT_TRUE(sphere.invariant);
  EXPECT_LE(sphere.max_norm_deviation, 1e-10);
  EXPECT_TRUE(check_adH_invariance(two_landmarks().structure(), 100, rng).invariant);
  EXPECT_TRUE(check_adH_invariance(LandmarkModel({{0.5, 0.2, -1.0}}).structure(), 100, rng).invariant);
}

TEST(AdHInvariance, ScaledInnerProductBreaksInvariance) {
  const ReductiveStructure s = LandmarkModel({{0.5, 0.2, -1.0}}).structure();
  Eigen::MatrixXd G = Eigen::MatrixXd::Identity(6, 6);
  G(5, 5) = 10.0;
  RandomStream rng(3);
  const InvarianceReport r = check_adH_invariance(s.with_gram(G), 100, rng);
  EXPECT_FALSE(r.invariant);
  EXPECT_TRUE(r.block_diagonal);
  EXPECT_GT(r.max_orthogonality_defect, 1e-3);
}

TEST(CosetError, SamePointAndSameCoset) {
  const ReductiveStructure s2 = sphere_structure();
  RandomStream rng(4);
  const GroupElement g = GroupElement::unchecked(s2.group(), random_rotation(rng));
  EXPECT_LE(coset_error(g, g, s2).eta_reduced.norm(), 1e-15);
  for (int k = 0; k < 20; ++k) {
    const GroupElement gh = g * s2.sample_subgroup(rng);
    EXPECT_LE(coset_error(g, gh, s2).eta_reduced.norm(), 1e-9);
  }
}

TEST(CosetError, RecoversMComponent) {
  const ReductiveStructure s2 = sphere_structure();
  RandomStream rng(5);
  for (int k = 0; k < 20; ++k) {
    const GroupElement g = GroupElement::unchecked(s2.group(), random_rotation(rng));
    Eigen::Vector2d y = rng.normal_vector(2);
    y *= 0.1 / y.norm();
    const GroupElement est = g * exp(s2.group(), s2.m_basis() * y) * s2.sample_subgroup(rng);
    const CosetError ce = coset_error(g, est, s2);
    EXPECT_LE((ce.eta_reduced - y).norm(), 1e-10);
    EXPECT_LE(std::abs(ce.eta_coords(0)), 1e-10);
  }
}

TEST(CosetError, RightCosetSide) {
  const LandmarkModel model = two_landmarks();
  const ReductiveStructure& s = model.structure();
  RandomStream rng(6);
  const GroupElement g = se3_pose(random_rotation(rng), rng.normal_vector(3));
  Eigen::VectorXd y = rng.normal_vector(5);
  y *= 0.1 / y.norm();
  const GroupElement est = s.sample_subgroup(rng) * exp(s.group(), s.m_basis() * y) * g;
  const CosetError ce = coset_error(g, est, s);
  EXPECT_LE((ce.eta_reduced - y).norm(), 1e-10);
}

TEST(Selector, Pattern) {
  const ReductiveStructure s = two_landmarks().structure();
  const Eigen::MatrixXd Pi = selector_pi(s);
  EXPECT_LE((Pi * Pi.transpose() - Eigen::MatrixXd::Identity(5, 5)).norm(), 0.0);
  Eigen::VectorXd c = Eigen::VectorXd::Zero(6);
  c(0) = 4.0;
  EXPECT_LE((Pi * c).norm(), 0.0);
  // Pi^T M Pi embeds M into the m-block.
  const Eigen::MatrixXd M = Eigen::MatrixXd::Random(5, 5);
  const Eigen::MatrixXd E = Pi.transpose() * M * Pi;
  EXPECT_LE(E.row(0).norm() + E.col(0).norm(), 0.0);
  EXPECT_LE((E.bottomRightCorner(5, 5) - M).norm(), 0.0);
}

TEST(Sphere, CoincidentAndClosedForm) {
  const ReductiveStructure s2 = sphere_structure();
  RandomStream rng(7);
  const GroupElement g = GroupElement::unchecked(s2.group(), random_rotation(rng));
  const auto [a0, b0] = sphere_riemannian_check(g, g, s2);
  EXPECT_LE(a0.norm() + b0.norm(), 1e-15);
  const GroupElement est = g * exp(s2.group(), Eigen::Vector3d(0.3, 0, 0));
  const auto [a, b] = sphere_riemannian_check(g, est, s2);
  EXPECT_LE((a - b).norm(), 1e-10);
  EXPECT_NEAR(b(0), 0.3, 1e-12);
  for (int k = 0; k < 100; ++k) {
    const GroupElement r = GroupElement::unchecked(s2.group(), random_rotation(rng));
    const double theta = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const GroupElement e = r * exp(s2.group(), Eigen::Vector3d(std::cos(theta), std::sin(theta), 0.0));
    const auto [x, y] = sphere_riemannian_check(r, e * s2.sample_subgroup(rng), s2);
    EXPECT_LE((x - y).norm(), 1e-10);
    EXPECT_NEAR(y.norm(), 1.0, 1e-10);
  }
}

TEST(Sphere, AntipodalPointsRaise) {
  const ReductiveStructure s2 = sphere_structure();
  const GroupElement e = GroupElement::identity(s2.group());
  const GroupElement flip = exp(s2.group(), Eigen::Vector3d(std::numbers::pi, 0, 0));
  EXPECT_EQ(code_of([&] { sphere_riemannian_check(e, flip, s2); }), ErrorCode::CutLocus);
}
