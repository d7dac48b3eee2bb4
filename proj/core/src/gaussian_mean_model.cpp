#include <string>

#include "homcrb/error.hpp"
#include "homcrb/models.hpp"

namespace homcrb {

GaussianMeanModel::GaussianMeanModel(int n, double sigma) : n_(n), sigma_(sigma) {
  if (n < 1) throw Error(ErrorCode::Dimension, "GaussianMeanModel: dimension must be positive");
  if (!(sigma > 0.0)) throw Error(ErrorCode::Config, "GaussianMeanModel: sigma must be positive");
  structure_.emplace(trivial_structure(GroupDescriptor::rn(n), CosetSide::LeftCoset_GmodH));
}

GroupElement GaussianMeanModel::element(const Eigen::VectorXd& t) const {
  if (t.size() != n_) throw Error(ErrorCode::Shape, "GaussianMeanModel: wrong translation length");
  Eigen::MatrixXd g = Eigen::MatrixXd::Identity(n_ + 1, n_ + 1);
  g.topRightCorner(n_, 1) = t;
  return GroupElement(group(), std::move(g));
}

Eigen::VectorXd GaussianMeanModel::translation(const GroupElement& g) const {
  return g.matrix().topRightCorner(n_, 1);
}

Observation GaussianMeanModel::sample(const GroupElement& g, RandomStream& rng) const {
  return translation(g) + sigma_ * rng.normal_vector(n_);
}

double GaussianMeanModel::log_likelihood(const Observation& x, const GroupElement& g) const {
  if (x.size() != n_) throw Error(ErrorCode::Shape, "GaussianMeanModel: observation has wrong length");
  return -0.5 * (x - translation(g)).squaredNorm() / (sigma_ * sigma_);
}

Eigen::VectorXd GaussianMeanModel::native_gradient(const Observation& x, const GroupElement& g,
                                                   const Eigen::MatrixXd& directions) const {
  if (x.size() != n_) throw Error(ErrorCode::Shape, "GaussianMeanModel: observation has wrong length");
  return directions.transpose() * (x - translation(g)) / (sigma_ * sigma_);
}

Eigen::MatrixXd GaussianMeanModel::native_fim(const GroupElement&,
                                              const Eigen::MatrixXd& directions) const {
  return directions.transpose() * directions / (sigma_ * sigma_);
}

}  // namespace homcrb
