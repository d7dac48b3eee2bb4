#include "homcrb/model.hpp"

#include "homcrb/error.hpp"

namespace homcrb {

std::vector<Observation> StatisticalModel::sample(const GroupElement& g, int m,
                                                  RandomStream& rng) const {
  if (m < 1) throw Error(ErrorCode::Dimension, "sample: m must be positive");
  std::vector<Observation> out;
  out.reserve(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) out.push_back(sample(g, rng));
  return out;
}

double StatisticalModel::total_log_likelihood(std::span<const Observation> xs,
                                              const GroupElement& g) const {
  double total = 0.0;
  for (const auto& x : xs) total += log_likelihood(x, g);
  return total;
}

Eigen::MatrixXd StatisticalModel::to_native(const GroupElement& g, InvariantFrame frame,
                                            const Eigen::MatrixXd& directions) const {
  if (frame == native_frame()) return directions;
  // LIVF along X equals RIVF along Ad_g X; RIVF along X equals LIVF along Ad_{g^-1} X.
  if (frame == InvariantFrame::Left) return adjoint_matrix(g) * directions;
  return adjoint_matrix(g.inverse()) * directions;
}

Eigen::VectorXd StatisticalModel::analytic_gradient(const Observation& x, const GroupElement& g,
                                                    InvariantFrame frame,
                                                    const Eigen::MatrixXd& directions) const {
  if (!has_analytic_gradient()) {
    throw Error(ErrorCode::UnsupportedMethod, name() + ": no analytic gradient");
  }
  return native_gradient(x, g, to_native(g, frame, directions));
}

Eigen::MatrixXd StatisticalModel::analytic_fim(const GroupElement& g, InvariantFrame frame,
                                               const Eigen::MatrixXd& directions) const {
  if (!has_analytic_fim()) {
    throw Error(ErrorCode::UnsupportedMethod, name() + ": no analytic FIM");
  }
  return native_fim(g, to_native(g, frame, directions));
}

Eigen::VectorXd StatisticalModel::gradient(const Observation& x, const GroupElement& g,
                                           InvariantFrame frame,
                                           const Eigen::MatrixXd& directions) const {
  if (has_analytic_gradient()) return analytic_gradient(x, g, frame, directions);
  const GroupFunction fn = [&](const GroupElement& q) { return log_likelihood(x, q); };
  Eigen::VectorXd out(directions.cols());
  for (Eigen::Index i = 0; i < directions.cols(); ++i) {
    const AlgebraVector X(group(), directions.col(i));
    out(i) = frame == InvariantFrame::Left ? livf_derivative(fn, g, X) : rivf_derivative(fn, g, X);
  }
  return out;
}

Eigen::VectorXd StatisticalModel::total_gradient(std::span<const Observation> xs,
                                                 const GroupElement& g, InvariantFrame frame,
                                                 const Eigen::MatrixXd& directions) const {
  Eigen::VectorXd total = Eigen::VectorXd::Zero(directions.cols());
  if (has_analytic_gradient()) {
    const Eigen::MatrixXd native = to_native(g, frame, directions);
    for (const auto& x : xs) total += native_gradient(x, g, native);
    return total;
  }
  for (const auto& x : xs) total += gradient(x, g, frame, directions);
  return total;
}

GroupElement StatisticalModel::apply_random_symmetry(const GroupElement& g,
                                                     RandomStream& rng) const {
  const GroupElement h = structure().sample_subgroup(rng);
  return structure().left_side() ? g * h : h * g;
}

Eigen::VectorXd StatisticalModel::native_gradient(const Observation&, const GroupElement&,
                                                  const Eigen::MatrixXd&) const {
  throw Error(ErrorCode::UnsupportedMethod, name() + ": no analytic gradient");
}

Eigen::MatrixXd StatisticalModel::native_fim(const GroupElement&, const Eigen::MatrixXd&) const {
  throw Error(ErrorCode::UnsupportedMethod, name() + ": no analytic FIM");
}

}  // namespace homcrb
