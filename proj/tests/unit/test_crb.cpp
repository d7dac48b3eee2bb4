#include <cmath>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "homcrb/crb.hpp"
#include "homcrb/error.hpp"
#include "homcrb/models.hpp"
#include "homcrb/scoring.hpp"
#include "util.hpp"

using namespace homcrb;

namespace {

LandmarkModel two_landmarks() { return LandmarkModel({{1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}}); }

FimMatrix reduced(const Eigen::MatrixXd& F, const GroupElement& at) {
  return FimMatrix{FimFrame::Reduced, at, F, FimMethod::Analytic, 0};
}

}  // namespace

TEST(EstimatorStats, AllAtReference) {
  const ReductiveStructure s2 = sphere_structure();
  const GroupElement g = exp(s2.group(), Eigen::Vector3d(0.2, -0.4, 0.9));
  const std::vector<GroupElement> est(10, g);
  const EstimatorStats st = estimator_stats(g, est, s2);
  EXPECT_LE(st.bias.norm(), 1e-15);
  EXPECT_LE(st.covariance.norm(), 1e-15);
  EXPECT_EQ(st.n_trials, 10);
}

TEST(EstimatorStats, SymmetricTwoPoint) {
  const ReductiveStructure s2 = sphere_structure();
  const GroupElement g = exp(s2.group(), Eigen::Vector3d(0.2, -0.4, 0.9));
  std::vector<GroupElement> est;
  for (int k = 0; k < 10; ++k) {
    const double sign = k % 2 == 0 ? 1.0 : -1.0;
    est.push_back(g * exp(s2.group(), s2.m_basis().col(0) * (0.1 * sign)));
  }
  const EstimatorStats st = estimator_stats(g, est, s2);
  EXPECT_LE(st.bias.norm(), 1e-12);
  EXPECT_NEAR(st.variance_on_coset, 0.01, 1e-12);
}

TEST(EstimatorStats, PureFiberMotion) {
  const LandmarkModel model = two_landmarks();
  const ReductiveStructure& s = model.structure();
  RandomStream rng(1);
  const GroupElement g = se3_pose(random_rotation(rng), rng.normal_vector(3));
  std::vector<GroupElement> est;
  for (int k = 0; k < 20; ++k) est.push_back(s.sample_subgroup(rng) * g);
  const EstimatorStats st = estimator_stats(g, est, s);
  EXPECT_LE(st.variance_on_coset, 1e-18);
  EXPECT_GT(st.variance_on_G, 0.1);
}

TEST(Phi, ZeroErrorsAbelianAndSymmetric) {
  const ReductiveStructure s2 = sphere_structure();
  const GroupElement g = GroupElement::identity(s2.group());
  EstimatorStats zero = estimator_stats(g, std::vector<GroupElement>(4, g), s2);
  EXPECT_LE((phi_matrix(zero, s2) - Eigen::Matrix3d::Identity()).norm(), 1e-15);

  const GaussianMeanModel gm(2);
  const GroupElement t0 = gm.element(Eigen::Vector2d(0.0, 0.0));
  const std::vector<GroupElement> est{gm.element(Eigen::Vector2d(1.0, -2.0)),
                                      gm.element(Eigen::Vector2d(-0.5, 0.3))};
  const EstimatorStats st = estimator_stats(t0, est, gm.structure());
  const Eigen::Matrix2d J = Eigen::Matrix2d::Constant(0.25);
  EXPECT_LE((phi_matrix(st, gm.structure(), Eigen::MatrixXd(J)) - (Eigen::Matrix2d::Identity() + J)).norm(),
            1e-15);

  const ReductiveStructure so3 = trivial_structure(GroupDescriptor::so3());
  const Eigen::Vector3d y(0.01, -0.02, 0.015);
  const GroupElement e = GroupElement::identity(so3.group());
  const std::vector<GroupElement> pm{exp(so3.group(), y), exp(so3.group(), -y)};
  const EstimatorStats sym = estimator_stats(e, pm, so3);
  const Eigen::MatrixXd ad = ad_matrix(AlgebraVector(so3.group(), y));
  const Eigen::MatrixXd expected = Eigen::Matrix3d::Identity() + ad * ad / 12.0;
  EXPECT_LE((phi_matrix(sym, so3) - expected).norm(), 1e-8);
}

TEST(Bounds, ClassicalScalar) {
  const GaussianMeanModel gm(1);
  const GroupElement g = gm.element(Eigen::VectorXd::Zero(1));
  for (int m : {1, 10, 250}) {
    const FimMatrix F{FimFrame::Left, g, Eigen::MatrixXd::Constant(1, 1, m), FimMethod::Analytic, 0};
    EXPECT_NEAR(crb_group(F, Eigen::MatrixXd::Identity(1, 1)).bound_trace, 1.0 / m, 1e-15);
  }
}

TEST(Bounds, RandomSpdInverse) {
  RandomStream rng(2);
  Eigen::MatrixXd A(4, 4);
  for (int i = 0; i < 4; ++i) A.row(i) = rng.normal_vector(4).transpose();
  const Eigen::MatrixXd F = A * A.transpose() + Eigen::MatrixXd::Identity(4, 4);
  const GroupElement e = GroupElement::identity(GroupDescriptor::rn(4));
  const FimMatrix L{FimFrame::Left, e, F, FimMethod::Analytic, 0};
  EXPECT_LE((crb_group(L, Eigen::MatrixXd::Identity(4, 4)).bound_matrix - F.inverse()).norm(), 1e-10);
  EXPECT_LE((crb_third_order(reduced(F, e), Eigen::MatrixXd::Zero(4, 4)).bound_matrix - F.inverse()).norm(),
            1e-10);
  EXPECT_NEAR(variance_bound(reduced(Eigen::MatrixXd::Identity(4, 4), e)), 4.0, 1e-15);
}

TEST(Bounds, HomogeneousPatternAndScaling) {
  const LandmarkModel model = two_landmarks();
  const ReductiveStructure& s = model.structure();
  const GroupElement g = se3_pose(Eigen::Matrix3d::Identity(), Eigen::Vector3d(0.5, 0, 0));
  RandomStream rng(3);
  const FimMatrix F = fim(model, g, FimFrame::Reduced, FimMethod::Analytic, 0, rng);
  const FimMatrix FR = fim(model, g, FimFrame::Right, FimMethod::Analytic, 0, rng);
  const CrbReport full = crb_group(FR, Eigen::MatrixXd::Identity(6, 6));
  EXPECT_LE(full.bound_matrix.row(0).norm() + full.bound_matrix.col(0).norm(), 1e-12);
  EXPECT_LE((full.bound_matrix.bottomRightCorner(5, 5) - F.matrix.inverse()).norm(), 1e-9);
  const CrbReport r = crb_homogeneous(F, Eigen::MatrixXd::Identity(6, 6), s);
  EXPECT_LE((r.bound_matrix - F.matrix.inverse()).norm(), 1e-10);
  const double single = variance_bound(F);
  EXPECT_NEAR(variance_bound(reduced(20.0 * F.matrix, g)), single / 20.0, 1e-12);
}

TEST(Bounds, DegenerateAndWrongFrameRaise) {
  const GroupElement e = GroupElement::identity(GroupDescriptor::rn(2));
  Eigen::Matrix2d S;
  S << 1, 1, 1, 1;
  EXPECT_THROW(variance_bound(reduced(S, e)), Error);
  const FimMatrix L{FimFrame::Left, e, Eigen::Matrix2d::Identity(), FimMethod::Analytic, 0};
  EXPECT_THROW(variance_bound(L), Error);
}

TEST(Delta, ZeroAndAbelian) {
  const ReductiveStructure s2 = sphere_structure();
  const std::vector<Eigen::VectorXd> none;
  EXPECT_LE(delta_matrix(std::span<const Eigen::VectorXd>(none), s2).norm(), 0.0);
  const GaussianMeanModel gm(3);
  RandomStream rng(4);
  std::vector<Eigen::VectorXd> errs;
  for (int k = 0; k < 10; ++k) errs.push_back(rng.normal_vector(3));
  EXPECT_LE(delta_matrix(std::span<const Eigen::VectorXd>(errs), gm.structure()).norm(), 0.0);
}

TEST(Delta, So3GaussianExpectation) {
  const ReductiveStructure so3 = trivial_structure(GroupDescriptor::so3());
  RandomStream rng(5);
  const double sigma = 0.2;
  std::vector<Eigen::VectorXd> errs;
  for (int k = 0; k < 1000000; ++k) errs.push_back(sigma * rng.normal_vector(3));
  const Eigen::MatrixXd D = delta_matrix(std::span<const Eigen::VectorXd>(errs), so3);
  EXPECT_LE((D + sigma * sigma / 6.0 * Eigen::Matrix3d::Identity()).norm(), 1e-4);
}

TEST(Efficiency, ScalarSampleMeanIsExact) {
  const GaussianMeanModel gm(1, 1.0);
  const GroupElement g = gm.element(Eigen::VectorXd::Constant(1, 0.7));
  RandomStream rng(6);
  std::vector<std::vector<Observation>> obs;
  std::vector<GroupElement> est;
  for (int t = 0; t < 200; ++t) {
    obs.push_back(gm.sample(g, 25, rng));
    double mean = 0.0;
    for (const auto& x : obs.back()) mean += x(0);
    est.push_back(gm.element(Eigen::VectorXd::Constant(1, mean / 25.0)));
  }
  const EfficiencyResult r = efficiency_residual(gm, obs, g, est, gm.structure(), 1.0);
  EXPECT_LE(r.residual, 1e-10);
  const std::vector<GroupElement> frozen(obs.size(), g);
  EXPECT_GT(efficiency_residual(gm, obs, g, frozen, gm.structure(), 1.0).residual, 0.01);
}

TEST(BiasJacobian, TruthTrackingAndConstantEstimators) {
  const GaussianMeanModel gm(2, 1.0);
  const GroupElement g = gm.element(Eigen::Vector2d(0.4, -0.2));
  RandomStream rng(7);
  const EstimatorFn oracle = [](const std::vector<Observation>&, const GroupElement& truth) {
    return truth;
  };
  EXPECT_LE(bias_jacobian(gm, g, oracle, gm.structure(), 10, 1e-4, rng).norm(), 1e-12);
  const GroupElement g0 = gm.element(Eigen::Vector2d(1.0, 1.0));
  const EstimatorFn constant = [&](const std::vector<Observation>&, const GroupElement&) { return g0; };
  const Eigen::MatrixXd J = bias_jacobian(gm, g, constant, gm.structure(), 10, 1e-4, rng);
  EXPECT_LE((J + Eigen::Matrix2d::Identity()).norm(), 1e-8);
}

TEST(BiasJacobian, ConstantEstimatorOnSo3MatchesPsi) {
  const ReductiveStructure s = trivial_structure(GroupDescriptor::so3());
  const GroupElement g = exp(s.group(), Eigen::Vector3d(0.1, 0.2, -0.1));
  const GroupElement g0 = exp(s.group(), Eigen::Vector3d(0.3, -0.2, 0.25));
  // The estimator ignores its data.
  struct Fixed final : StatisticalModel {
    const ReductiveStructure* s;
    std::string name() const override { return "fixed"; }
    const ReductiveStructure& structure() const override { return *s; }
    Observation sample(const GroupElement&, RandomStream&) const override {
      return Eigen::VectorXd::Zero(1);
    }
    double log_likelihood(const Observation&, const GroupElement&) const override { return 0.0; }
  } model;
  model.s = &s;
  RandomStream rng(8);
  const EstimatorFn constant = [&](const std::vector<Observation>&, const GroupElement&) { return g0; };
  const Eigen::MatrixXd J = bias_jacobian(model, g, constant, s, 1, 1e-5, rng);
  const Eigen::VectorXd eta = log(g.inverse() * g0).coords;
  const Eigen::MatrixXd expected = -psi_matrix(AlgebraVector(s.group(), -eta), 20).matrix;
  EXPECT_LE((J - expected).norm(), 1e-6);
}

TEST(Efficiency, LandmarkMleIsNearlyEfficient) {
  const LandmarkModel model = two_landmarks();
  const GroupElement g = se3_pose(exp(GroupDescriptor::so3(), Eigen::Vector3d(0, 0, 1)).matrix(),
                                  Eigen::Vector3d(0.5, -0.5, 0.25));
  RandomStream rng(9);
  std::vector<std::vector<Observation>> obs;
  std::vector<GroupElement> est;
  for (int t = 0; t < 100; ++t) {
    obs.push_back(model.sample(g, 10000, rng));
    est.push_back(mle(model, obs.back(), g));
  }
  const EfficiencyResult r = efficiency_residual(model, obs, g, est, model.structure());
  EXPECT_LE(r.residual, 0.1 * r.mean_error_norm);
  EXPECT_NEAR(r.c, 1.0, 0.05);
}
