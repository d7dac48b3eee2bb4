#include <cmath>
#include <limits>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "homcrb/crb.hpp"
#include "homcrb/error.hpp"
#include "homcrb/models.hpp"
#include "homcrb/scoring.hpp"
#include "util.hpp"

using namespace homcrb;

namespace {

LandmarkModel two_landmarks(double sigma = 1.0) {
  return LandmarkModel({{1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}}, sigma);
}

GroupElement reference_pose() {
  return se3_pose(exp(GroupDescriptor::so3(), Eigen::Vector3d(0, 0, 1)).matrix(),
                  Eigen::Vector3d(0.5, -0.5, 0.25));
}

class NanModel final : public StatisticalModel {
 public:
  NanModel() : s_(trivial_structure(GroupDescriptor::rn(1))) {}
  std::string name() const override { return "nan"; }
  const ReductiveStructure& structure() const override { return s_; }
  using StatisticalModel::sample;
  Observation sample(const GroupElement&, RandomStream& rng) const override {
    return Eigen::VectorXd::Constant(1, rng.normal());
  }
  double log_likelihood(const Observation&, const GroupElement&) const override {
    return std::numeric_limits<double>::quiet_NaN();
  }

 private:
  ReductiveStructure s_;
};

}  // namespace

TEST(FisherScoring, GaussianMeanIsOneStep) {
  const GaussianMeanModel model(2, 0.7);
  RandomStream rng(1);
  const GroupElement g = model.element(Eigen::Vector2d(1.0, -2.0));
  const auto xs = model.sample(g, 50, rng);
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  for (const auto& x : xs) mean += x;
  mean /= 50.0;
  const ScoringTrace t = fisher_scoring(model, xs, model.element(Eigen::Vector2d::Zero()));
  EXPECT_TRUE(t.converged);
  EXPECT_EQ(t.iterations_used, 1);
  EXPECT_LE((model.translation(t.final_iterate()) - mean).norm(), 1e-12);
}

TEST(FisherScoring, SpdReachesSecondMoment) {
  const SpdModel model(3);
  RandomStream rng(2);
  Eigen::Matrix3d A;
  A << 1.2, 0.1, 0.0, -0.3, 0.9, 0.2, 0.1, 0.0, 1.5;
  const GroupElement g(model.group(), A);
  const auto xs = model.sample(g, 500, rng);
  const ScoringTrace t = fisher_scoring(model, xs, GroupElement::identity(model.group()));
  ASSERT_TRUE(t.converged);
  EXPECT_LE(t.iterations_used, 50);
  const Eigen::MatrixXd& G = t.final_iterate().matrix();
  EXPECT_LE((G * G.transpose() - second_moment(xs)).norm(), 1e-6);
}

TEST(FisherScoring, LandmarkConvergesFast) {
  const LandmarkModel model = two_landmarks();
  RandomStream rng(3);
  const auto xs = model.sample(reference_pose(), 10000, rng);
  const ScoringTrace t = fisher_scoring(model, xs, GroupElement::identity(model.group()));
  ASSERT_TRUE(t.converged);
  EXPECT_LE(t.iterations_used, 10);
  EXPECT_LT(t.gradient_norms.back(), 1e-8);
  for (double hn : t.h_step_norms) EXPECT_LE(hn, 1e-12);
  for (double d : t.drifts) EXPECT_LE(d, 1e-8);
}

TEST(FisherScoring, NoiselessLandmarkRecoversCoset) {
  const LandmarkModel model = two_landmarks(0.5);
  const GroupElement g = reference_pose();
  const std::vector<Observation> xs{model.mean(g)};
  const GroupElement g0 = se3_pose(Eigen::Matrix3d::Identity(), Eigen::Vector3d(0.3, -0.2, 0.1));
  const GroupElement est = mle(model, xs, g0);
  EXPECT_LE(coset_error(g, est, model.structure()).eta_reduced.norm(), 1e-6);
}

TEST(FisherScoring, StartsAlongTheFiberAgreeOnTheCoset) {
  const LandmarkModel model = two_landmarks();
  const ReductiveStructure& s = model.structure();
  RandomStream rng(4);
  const auto xs = model.sample(reference_pose(), 200, rng);
  const GroupElement g0 = GroupElement::identity(model.group());
  const GroupElement h = exp(model.group(), s.h_basis().col(0) * 1.3);
  const GroupElement a = mle(model, xs, g0);
  const GroupElement b = mle(model, xs, h * g0);
  EXPECT_LE(coset_error(a, b, s).eta_reduced.norm(), 1e-8);
  EXPECT_GT(group_error(a, b, s).norm(), 0.5);
}

TEST(FisherScoring, FrozenAndMonteCarloFimStillConverge) {
  const LandmarkModel model = two_landmarks();
  RandomStream rng(5);
  const auto xs = model.sample(reference_pose(), 1000, rng);
  const GroupElement g0 = reference_pose();
  const GroupElement ref = mle(model, xs, g0);
  ScoringOptions frozen;
  frozen.fim_mode = FimMode::FrozenAtInitial;
  EXPECT_LE(coset_error(ref, mle(model, xs, g0, frozen), model.structure()).eta_reduced.norm(), 1e-8);
  ScoringOptions mc;
  mc.fim_mode = FimMode::MonteCarlo;
  mc.fim_samples = 20000;
  mc.max_iterations = 200;
  EXPECT_LE(coset_error(ref, mle(model, xs, g0, mc), model.structure()).eta_reduced.norm(), 1e-8);
}

TEST(FisherScoring, DegenerateFimRaises) {
  const NetworkModel path({{0, 0}, {0, 1}, {1, 1.5}}, {{0, 1, 1.0}, {1, 2, 1.0}});
  RandomStream rng(6);
  const auto xs = path.sample(path.true_configuration(), 10, rng);
  try {
    fisher_scoring(path, xs, path.true_configuration());
    FAIL() << "expected DegenerateModel";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateModel);
  }
}

TEST(FisherScoring, NonFiniteLikelihoodIsDivergence) {
  const NanModel model;
  RandomStream rng(7);
  const auto xs = model.sample(GroupElement::identity(model.group()), 3, rng);
  try {
    fisher_scoring(model, xs, GroupElement::identity(model.group()));
    FAIL() << "expected divergence";
  } catch (const ScoringDivergence& e) {
    EXPECT_EQ(e.code(), ErrorCode::Divergence);
    EXPECT_EQ(e.trace().logliks.size(), 1u);
  }
}

TEST(FisherScoring, RejectsBadOptionsAndEmptyData) {
  const GaussianMeanModel model(1);
  const GroupElement e = GroupElement::identity(model.group());
  ScoringOptions bad;
  bad.max_iterations = 0;
  const std::vector<Observation> one{Eigen::VectorXd::Zero(1)};
  EXPECT_THROW(fisher_scoring(model, one, e, bad), Error);
  EXPECT_THROW(fisher_scoring(model, std::vector<Observation>{}, e), Error);
}

TEST(GradientAscent, StationaryStartStopsImmediately) {
  const GaussianMeanModel model(1);
  const std::vector<Observation> xs{Eigen::VectorXd::Constant(1, 0.4),
                                    Eigen::VectorXd::Constant(1, -0.4)};
  const ScoringTrace t =
      gradient_ascent(model, xs, GroupElement::identity(model.group()), GradientAscentOptions{});
  EXPECT_TRUE(t.converged);
  EXPECT_EQ(t.iterates.size(), 1u);
}

TEST(GradientAscent, UnitStepMatchesScoringOnGaussian) {
  const GaussianMeanModel model(3, 1.0);
  RandomStream rng(8);
  const auto xs = model.sample(model.element(Eigen::Vector3d(1, 2, 3)), 20, rng);
  const GroupElement e = GroupElement::identity(model.group());
  GradientAscentOptions opts;
  opts.step0 = 1.0;
  const ScoringTrace a = gradient_ascent(model, xs, e, opts);
  const ScoringTrace f = fisher_scoring(model, xs, e);
  ASSERT_GE(a.iterates.size(), 2u);
  EXPECT_LE((a.iterates[1].matrix() - f.iterates[1].matrix()).norm(), 1e-12);
}

TEST(GradientAscent, LandmarkNeedsMoreIterationsThanScoring) {
  const LandmarkModel model = two_landmarks();
  RandomStream rng(9);
  const auto xs = model.sample(reference_pose(), 1000, rng);
  const GroupElement e = GroupElement::identity(model.group());
  const ScoringTrace f = fisher_scoring(model, xs, e);
  GradientAscentOptions opts;
  opts.step0 = 0.1;
  opts.max_iterations = 5000;
  const ScoringTrace a = gradient_ascent(model, xs, e, opts);
  ASSERT_TRUE(f.converged);
  EXPECT_GT(a.iterations_used, f.iterations_used);
  if (a.converged) {
    EXPECT_LE(coset_error(f.final_iterate(), a.final_iterate(), model.structure()).eta_reduced.norm(),
              1e-6);
  }
}

TEST(GradientAscent, RejectsBadOptions) {
  const GaussianMeanModel model(1);
  const std::vector<Observation> one{Eigen::VectorXd::Zero(1)};
  const GroupElement e = GroupElement::identity(model.group());
  GradientAscentOptions bad;
  bad.decay = 1.5;
  EXPECT_THROW(gradient_ascent(model, one, e, bad), Error);
  bad = {};
  bad.step0 = 0.0;
  EXPECT_THROW(gradient_ascent(model, one, e, bad), Error);
}
