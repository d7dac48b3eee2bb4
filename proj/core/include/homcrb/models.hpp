#pragma once

// Concrete statistical models: SE(3) landmark pose, SE(2)^|V| distance-based
// sensor network, GL(n)+/SO(n) covariance, and a Gaussian mean on R^n.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "homcrb/fisher.hpp"
#include "homcrb/homspace.hpp"
#include "homcrb/model.hpp"

namespace homcrb {

/// SE(3) element (R, p).
GroupElement se3_pose(const Eigen::Matrix3d& R, const Eigen::Vector3d& p);

/// Landmark observations x_k ~ N(R^T (a_k - p), sigma^2 I) on H\SE(3).
///
/// H is the stabilizer of the landmark set under left multiplication: all
/// rotations about a single landmark (n_H = 3), rotations about the common
/// axis of collinear landmarks (n_H = 1), or trivial otherwise. The inner
/// product is the standard one transported to the landmark a_1, which makes
/// m Ad_H-invariant; for one landmark m is the pure translations.
class LandmarkModel final : public StatisticalModel {
 public:
  explicit LandmarkModel(std::vector<Eigen::Vector3d> landmarks, double sigma = 1.0);

  std::string name() const override { return "landmark"; }
  const ReductiveStructure& structure() const override { return *structure_; }
  using StatisticalModel::sample;
  Observation sample(const GroupElement& g, RandomStream& rng) const override;
  double log_likelihood(const Observation& x, const GroupElement& g) const override;
  bool has_analytic_gradient() const override { return true; }
  bool has_analytic_fim() const override { return true; }

  const std::vector<Eigen::Vector3d>& landmarks() const noexcept { return landmarks_; }
  double sigma() const noexcept { return sigma_; }

  /// Noiseless measurement R^T (a_k - p), stacked.
  Eigen::VectorXd mean(const GroupElement& g) const;
  /// sum_k (Omega a_k + v)^T (a_k - p - R x_k) / sigma^2.
  double grad_rivf(const Observation& x, const GroupElement& g, const AlgebraVector& X) const;
  /// sum_k (Omega_j a_k + v_j)^T (Omega_i a_k + v_i) / sigma^2; independent of g.
  double fim_rivf(const GroupElement& g, const AlgebraVector& Xi, const AlgebraVector& Xj) const;

 protected:
  InvariantFrame native_frame() const override { return InvariantFrame::Right; }
  Eigen::VectorXd native_gradient(const Observation& x, const GroupElement& g,
                                  const Eigen::MatrixXd& directions) const override;
  Eigen::MatrixXd native_fim(const GroupElement& g,
                             const Eigen::MatrixXd& directions) const override;

 private:
  Eigen::MatrixXd velocity_matrix(const Eigen::MatrixXd& directions) const;

  std::vector<Eigen::Vector3d> landmarks_;
  double sigma_;
  std::optional<ReductiveStructure> structure_;
};

struct Edge {
  int i;
  int j;
  double sigma;
};

/// Squared-distance measurements x_ij ~ N(|p_i - p_j|^2 / 2, sigma_ij^2) on
/// SE(2)^|V|. The likelihood is constant under rigid motions of the whole
/// network and under rotations of any single agent about its own position.
///
/// The reference configuration is pre-rotated about agent 0 so that agent 1
/// lies on the +y axis relative to it. The reductive basis puts every
/// rotation generator plus the x/y translations of agent 0 and the x
/// translation of agent 1 in h; the remaining translations span m, in
/// agent order. Coset errors use a closed-form rigid alignment as the lift.
class NetworkModel final : public StatisticalModel {
 public:
  NetworkModel(std::vector<Eigen::Vector2d> positions, std::vector<Edge> edges,
               bool canonicalize = true);

  /// Parses {"positions": [[x,y],...], "edges": [[i,j,sigma],...]}.
  static NetworkModel from_json(const std::string& text, bool canonicalize = true);
  static NetworkModel from_json_file(const std::string& path, bool canonicalize = true);

  std::string name() const override { return "network"; }
  const ReductiveStructure& structure() const override { return *structure_; }
  using StatisticalModel::sample;
  Observation sample(const GroupElement& g, RandomStream& rng) const override;
  double log_likelihood(const Observation& x, const GroupElement& g) const override;
  bool has_analytic_gradient() const override { return true; }
  bool has_analytic_fim() const override { return true; }
  GroupElement apply_random_symmetry(const GroupElement& g, RandomStream& rng) const override;

  int n_agents() const noexcept { return static_cast<int>(positions_.size()); }
  const std::vector<Eigen::Vector2d>& positions() const noexcept { return positions_; }
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  /// True when agents 0 and 1 are distinct and aligned with the y axis.
  bool generic() const;

  /// Configuration with identity orientations at the canonical positions.
  GroupElement true_configuration() const;
  GroupElement configuration(const std::vector<Eigen::Vector2d>& positions) const;
  static std::vector<Eigen::Vector2d> positions_of(const GroupElement& g);

  Eigen::VectorXd mean(const GroupElement& g) const;

  /// Symmetric rigidity matrix: diagonal blocks sum_k sigma_ik^-2 d d^T,
  /// off-diagonal blocks -sigma_ij^-2 d d^T on edges, d = p_i - p_j.
  static Eigen::MatrixXd rigidity_matrix(const std::vector<Eigen::Vector2d>& positions,
                                         const std::vector<Edge>& edges);

  /// Reduced FIM: rigidity matrix without its first three rows and columns.
  /// Throws DegenerateModel (with the rank gap) on non-rigid graphs.
  static FimMatrix network_fim(const std::vector<Eigen::Vector2d>& positions,
                               const std::vector<Edge>& edges, const ReductiveStructure& s);
  FimMatrix network_fim() const { return network_fim(positions_, edges_, *structure_); }

 protected:
  InvariantFrame native_frame() const override { return InvariantFrame::Right; }
  Eigen::VectorXd native_gradient(const Observation& x, const GroupElement& g,
                                  const Eigen::MatrixXd& directions) const override;
  Eigen::MatrixXd native_fim(const GroupElement& g,
                             const Eigen::MatrixXd& directions) const override;

 private:
  Eigen::MatrixXd edge_jacobian(const GroupElement& g, const Eigen::MatrixXd& directions) const;

  std::vector<Eigen::Vector2d> positions_;
  std::vector<Edge> edges_;
  std::optional<ReductiveStructure> structure_;
};

/// Zero-mean Gaussian vectors x ~ N(0, g g^T) on GL(n)+/SO(n). h is the
/// skew-symmetric matrices, m the symmetric ones, both Frobenius-orthonormal.
/// Totals over observations go through the sample second moment.
class SpdModel final : public StatisticalModel {
 public:
  explicit SpdModel(int n);

  std::string name() const override { return "spd"; }
  const ReductiveStructure& structure() const override { return *structure_; }
  using StatisticalModel::sample;
  Observation sample(const GroupElement& g, RandomStream& rng) const override;
  double log_likelihood(const Observation& x, const GroupElement& g) const override;
  double total_log_likelihood(std::span<const Observation> xs,
                              const GroupElement& g) const override;
  Eigen::VectorXd total_gradient(std::span<const Observation> xs, const GroupElement& g,
                                 InvariantFrame frame,
                                 const Eigen::MatrixXd& directions) const override;
  bool has_analytic_gradient() const override { return true; }
  bool has_analytic_fim() const override { return true; }

  int dimension() const noexcept { return n_; }

 protected:
  InvariantFrame native_frame() const override { return InvariantFrame::Left; }
  Eigen::VectorXd native_gradient(const Observation& x, const GroupElement& g,
                                  const Eigen::MatrixXd& directions) const override;
  Eigen::MatrixXd native_fim(const GroupElement& g,
                             const Eigen::MatrixXd& directions) const override;

 private:
  double loglik_from_moment(const Eigen::MatrixXd& X, double m, const GroupElement& g) const;
  Eigen::VectorXd gradient_from_moment(const Eigen::MatrixXd& X, double m, const GroupElement& g,
                                       const Eigen::MatrixXd& native_dirs) const;

  int n_;
  std::optional<ReductiveStructure> structure_;
};

/// (1/m) sum x x^T.
Eigen::MatrixXd second_moment(std::span<const Observation> xs);

/// Matrix G with d/dt l(g exp(tX)) = <X, G>_F for the covariance model with
/// second moment X: G = g^-1 X g^-T - I. Throws Domain for singular g.
Eigen::MatrixXd spd_grad(const Eigen::MatrixXd& X, const GroupElement& g);

/// x ~ N(t, sigma^2 I) on the translation group R^n (H trivial).
class GaussianMeanModel final : public StatisticalModel {
 public:
  explicit GaussianMeanModel(int n = 1, double sigma = 1.0);

  std::string name() const override { return "gaussian-mean"; }
  const ReductiveStructure& structure() const override { return *structure_; }
  using StatisticalModel::sample;
  Observation sample(const GroupElement& g, RandomStream& rng) const override;
  double log_likelihood(const Observation& x, const GroupElement& g) const override;
  bool has_analytic_gradient() const override { return true; }
  bool has_analytic_fim() const override { return true; }

  GroupElement element(const Eigen::VectorXd& t) const;
  Eigen::VectorXd translation(const GroupElement& g) const;

 protected:
  InvariantFrame native_frame() const override { return InvariantFrame::Left; }
  Eigen::VectorXd native_gradient(const Observation& x, const GroupElement& g,
                                  const Eigen::MatrixXd& directions) const override;
  Eigen::MatrixXd native_fim(const GroupElement& g,
                             const Eigen::MatrixXd& directions) const override;

 private:
  int n_;
  double sigma_;
  std::optional<ReductiveStructure> structure_;
};

}  // namespace homcrb
