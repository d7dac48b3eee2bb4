#pragma once

// Cramér–Rao bounds on groups and on homogeneous spaces, together with the
// estimator statistics they are compared against.
//
// All vectors and matrices are in reductive coordinates of the structure.

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "homcrb/fisher.hpp"
#include "homcrb/homspace.hpp"
#include "homcrb/model.hpp"

namespace homcrb {

struct EstimatorStats {
  GroupElement at;
  CosetSide side;
  /// Lifted errors (eta on G/H, eta' on H\G), reductive coordinates.
  std::vector<Eigen::VectorXd> errors;
  Eigen::VectorXd bias;
  Eigen::MatrixXd covariance;
  /// Entrywise Monte-Carlo standard errors of `covariance`.
  Eigen::MatrixXd covariance_se;
  /// E||eta||^2 of the un-lifted group error.
  double variance_on_G = 0.0;
  double variance_on_G_se = 0.0;
  /// E||Pi eta||^2 of the lifted error.
  double variance_on_coset = 0.0;
  double variance_on_coset_se = 0.0;
  int n_trials = 0;
};

/// Lifts every estimate and accumulates bias, covariance and variances.
/// Lift failures are rethrown with the trial index in the message.
EstimatorStats estimator_stats(const GroupElement& g_ref, std::span<const GroupElement> estimates,
                               const ReductiveStructure& s);

/// Same statistics from precomputed lifted errors and un-lifted squared
/// group-error norms.
EstimatorStats estimator_stats_from_errors(const GroupElement& g_ref,
                                           std::vector<Eigen::VectorXd> lifted_errors,
                                           std::span<const double> group_error_sq,
                                           const ReductiveStructure& s);

/// Un-lifted group error log(g_ref^-1 g_est) (G/H) or log(g_est g_ref^-1)
/// (H\G) in reductive coordinates.
Eigen::VectorXd group_error(const GroupElement& g_ref, const GroupElement& g_est,
                            const ReductiveStructure& s);

/// Phi = E[Psi_{-eta}] (G/H) or E[Psi_{eta'}] (H\G), plus the bias Jacobian.
Eigen::MatrixXd phi_matrix(const EstimatorStats& stats, const ReductiveStructure& s,
                           const std::optional<Eigen::MatrixXd>& bias_jacobian = std::nullopt,
                           int psi_order = kDefaultPsiOrder);

enum class CrbVariant {
  GroupExactLeft,
  GroupExactRight,
  HomogeneousExact,
  HomogeneousThirdOrderUnbiased,
  VarianceTrace
};

struct CrbReport {
  Eigen::MatrixXd bound_matrix;
  double bound_trace = 0.0;
  CrbVariant variant;
  Eigen::MatrixXd phi;
  Eigen::MatrixXd delta;
};

inline constexpr double kPseudoInverseThreshold = 1e-10;

/// Moore–Penrose pseudoinverse with singular values below 1e-10 x max dropped.
Eigen::MatrixXd pseudo_inverse(const Eigen::MatrixXd& M, double rel = kPseudoInverseThreshold);

/// Phi F^+ Phi^T for a Left or Right FIM.
CrbReport crb_group(const FimMatrix& fim, const Eigen::MatrixXd& phi);

/// (Pi Phi Pi^T) Fbar^-1 (Pi Phi Pi^T)^T. Throws DegenerateModel when the
/// reduced FIM has condition number above 1e12.
CrbReport crb_homogeneous(const FimMatrix& fim_reduced, const Eigen::MatrixXd& phi,
                          const ReductiveStructure& s);

/// (I + Delta) Fbar^-1 (I + Delta)^T.
CrbReport crb_third_order(const FimMatrix& fim_reduced, const Eigen::MatrixXd& delta);

/// Pi E[ad_eta^2 / 12] Pi^T from errors in reductive coordinates.
Eigen::MatrixXd delta_matrix(std::span<const Eigen::VectorXd> errors, const ReductiveStructure& s);
/// Same for errors given as algebra vectors in standard coordinates.
Eigen::MatrixXd delta_matrix(std::span<const AlgebraVector> errors, const ReductiveStructure& s);

/// tr(Fbar^-1); throws DegenerateModel when Fbar is singular.
double variance_bound(const FimMatrix& fim_reduced);

struct EfficiencyResult {
  double residual = 0.0;
  double c = 1.0;
  double mean_error_norm = 0.0;
};

/// Mean over trials of ||eta - b - c Phi Pi^T F^-1 grad||, where F is the
/// FIM of all observations of a trial and grad their summed m-gradient at
/// g_ref. c is fitted by 1-D least squares unless given; b defaults to zero.
EfficiencyResult efficiency_residual(const StatisticalModel& model,
                                     std::span<const std::vector<Observation>> observations,
                                     const GroupElement& g_ref,
                                     std::span<const GroupElement> estimates,
                                     const ReductiveStructure& s,
                                     std::optional<double> c = std::nullopt,
                                     const std::optional<Eigen::VectorXd>& bias = std::nullopt);

using EstimatorFn =
    std::function<GroupElement(const std::vector<Observation>& xs, const GroupElement& g_true)>;

/// Central-difference Jacobian of the Monte-Carlo bias along the basis
/// invariant fields of the structure's side. Each trial reuses one random
/// stream at both perturbed parameters.
Eigen::MatrixXd bias_jacobian(const StatisticalModel& model, const GroupElement& g_ref,
                              const EstimatorFn& estimator, const ReductiveStructure& s,
                              int n_samples, double h, RandomStream& rng,
                              int observations_per_trial = 1);

}  // namespace homcrb
