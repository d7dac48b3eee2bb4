#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Dense>

#include "homcrb/error.hpp"
#include "homcrb/models.hpp"

namespace homcrb {

GroupElement se3_pose(const Eigen::Matrix3d& R, const Eigen::Vector3d& p) {
  Eigen::MatrixXd g = Eigen::MatrixXd::Identity(4, 4);
  g.topLeftCorner<3, 3>() = R;
  g.topRightCorner<3, 1>() = p;
  return GroupElement(GroupDescriptor::se3(), std::move(g));
}

namespace {

// Standard metric transported by the translation to `a`:
// M = Ad_{T_a}^{-T} Ad_{T_a}^{-1}.
Eigen::MatrixXd transported_metric(const Eigen::Vector3d& a) {
  const Eigen::MatrixXd ad_inv =
      adjoint_matrix(GroupElement::unchecked(GroupDescriptor::se3(), [&] {
        Eigen::MatrixXd t = Eigen::MatrixXd::Identity(4, 4);
        t.topRightCorner<3, 1>() = -a;
        return t;
      }()));
  return ad_inv.transpose() * ad_inv;
}

// Generator of rotations about the axis through `a` with direction `w`:
// the derivative of log((Q(t), (I - Q(t)) a)), i.e. (w, a x w).
AlgebraVector fixed_point_generator(const Eigen::Vector3d& w, const Eigen::Vector3d& a) {
  Eigen::VectorXd c(6);
  c.head<3>() = w;
  c.tail<3>() = a.cross(w);
  return AlgebraVector(GroupDescriptor::se3(), std::move(c));
}

GroupElement rotation_about(const Eigen::Matrix3d& Q, const Eigen::Vector3d& a) {
  Eigen::MatrixXd g = Eigen::MatrixXd::Identity(4, 4);
  g.topLeftCorner<3, 3>() = Q;
  g.topRightCorner<3, 1>() = (Eigen::Matrix3d::Identity() - Q) * a;
  return GroupElement::unchecked(GroupDescriptor::se3(), std::move(g));
}

ReductiveStructure landmark_structure(const std::vector<Eigen::Vector3d>& landmarks) {
  const Group se3 = GroupDescriptor::se3();
  const Eigen::Vector3d a = landmarks.front();
  const Eigen::MatrixXd M = transported_metric(a);
  const CosetSide side = CosetSide::RightCoset_HmodG;

  if (landmarks.size() == 1) {
    std::vector<AlgebraVector> h;
    std::vector<AlgebraVector> seeds;
    for (int k = 0; k < 3; ++k) {
      h.push_back(fixed_point_generator(Eigen::Vector3d::Unit(k), a));
      seeds.emplace_back(se3, Eigen::VectorXd::Unit(6, 3 + k));
    }
    SubgroupSampler sampler = [a](RandomStream& rng) {
      return rotation_about(random_rotation(rng), a);
    };
    return build_reductive(se3, h, seeds, side, std::move(sampler), M);
  }

  Eigen::MatrixXd diffs(3, static_cast<Eigen::Index>(landmarks.size() - 1));
  for (std::size_t k = 1; k < landmarks.size(); ++k) {
    diffs.col(static_cast<Eigen::Index>(k - 1)) = landmarks[k] - a;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(diffs, Eigen::ComputeFullU);
  const Eigen::Vector3d sv = [&] {
    Eigen::Vector3d out = Eigen::Vector3d::Zero();
    out.head(svd.singularValues().size()) = svd.singularValues();
    return out;
  }();
  for (Eigen::Index k = 0; k < diffs.cols(); ++k) {
    if (diffs.col(k).norm() < 1e-12) {
      throw Error(ErrorCode::Config, "LandmarkModel: landmarks must be distinct");
    }
  }

  if (sv(1) <= 1e-9 * sv(0)) {
    const Eigen::Vector3d axis = svd.matrixU().col(0);
    SubgroupSampler sampler = [a, axis](RandomStream& rng) {
      const double angle = rng.uniform(-std::numbers::pi, std::numbers::pi);
      return rotation_about(Eigen::AngleAxisd(angle, axis).toRotationMatrix(), a);
    };
    return build_reductive(se3, {fixed_point_generator(axis, a)}, std::nullopt, side,
                           std::move(sampler), M);
  }
  return build_reductive(se3, {}, std::nullopt, side,
                         [se3](RandomStream&) { return GroupElement::identity(se3); }, M);
}

}  // namespace

LandmarkModel::LandmarkModel(std::vector<Eigen::Vector3d> landmarks, double sigma)
    : landmarks_(std::move(landmarks)), sigma_(sigma) {
  if (landmarks_.empty()) throw Error(ErrorCode::Config, "LandmarkModel: no landmarks");
  if (!(sigma_ > 0.0)) throw Error(ErrorCode::Config, "LandmarkModel: sigma must be positive");
  structure_.emplace(landmark_structure(landmarks_));
}

Eigen::VectorXd LandmarkModel::mean(const GroupElement& g) const {
  const Eigen::Matrix3d R = g.matrix().topLeftCorner<3, 3>();
  const Eigen::Vector3d p = g.matrix().topRightCorner<3, 1>();
  Eigen::VectorXd mu(3 * static_cast<Eigen::Index>(landmarks_.size()));
  for (std::size_t k = 0; k < landmarks_.size(); ++k) {
    mu.segment<3>(3 * static_cast<Eigen::Index>(k)) = R.transpose() * (landmarks_[k] - p);
  }
  return mu;
}

Observation LandmarkModel::sample(const GroupElement& g, RandomStream& rng) const {
  Eigen::VectorXd x = mean(g);
  for (Eigen::Index i = 0; i < x.size(); ++i) x(i) += sigma_ * rng.normal();
  return x;
}

double LandmarkModel::log_likelihood(const Observation& x, const GroupElement& g) const {
  if (x.size() != 3 * static_cast<Eigen::Index>(landmarks_.size())) {
    throw Error(ErrorCode::Shape, "LandmarkModel: observation has wrong length");
  }
  return -0.5 * (x - mean(g)).squaredNorm() / (sigma_ * sigma_);
}

Eigen::MatrixXd LandmarkModel::velocity_matrix(const Eigen::MatrixXd& directions) const {
  const Eigen::Index K = static_cast<Eigen::Index>(landmarks_.size());
  Eigen::MatrixXd U(3 * K, directions.cols());
  for (Eigen::Index c = 0; c < directions.cols(); ++c) {
    const Eigen::Vector3d w = directions.col(c).head<3>();
    const Eigen::Vector3d v = directions.col(c).tail<3>();
    for (Eigen::Index k = 0; k < K; ++k) {
      U.block<3, 1>(3 * k, c) = w.cross(landmarks_[static_cast<std::size_t>(k)]) + v;
    }
  }
  return U;
}

Eigen::VectorXd LandmarkModel::native_gradient(const Observation& x, const GroupElement& g,
                                               const Eigen::MatrixXd& directions) const {
  const Eigen::Matrix3d R = g.matrix().topLeftCorner<3, 3>();
  const Eigen::Vector3d p = g.matrix().topRightCorner<3, 1>();
  const Eigen::Index K = static_cast<Eigen::Index>(landmarks_.size());
  Eigen::VectorXd r(3 * K);
  for (Eigen::Index k = 0; k < K; ++k) {
    r.segment<3>(3 * k) = landmarks_[static_cast<std::size_t>(k)] - p - R * x.segment<3>(3 * k);
  }
  return velocity_matrix(directions).transpose() * r / (sigma_ * sigma_);
}

Eigen::MatrixXd LandmarkModel::native_fim(const GroupElement&,
                                          const Eigen::MatrixXd& directions) const {
  const Eigen::MatrixXd U = velocity_matrix(directions);
  return U.transpose() * U / (sigma_ * sigma_);
}

double LandmarkModel::grad_rivf(const Observation& x, const GroupElement& g,
                                const AlgebraVector& X) const {
  return native_gradient(x, g, X.coords)(0);
}

double LandmarkModel::fim_rivf(const GroupElement& g, const AlgebraVector& Xi,
                               const AlgebraVector& Xj) const {
  Eigen::MatrixXd D(6, 2);
  D.col(0) = Xi.coords;
  D.col(1) = Xj.coords;
  return native_fim(g, D)(0, 1);
}

}  // namespace homcrb
