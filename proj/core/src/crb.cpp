#include "homcrb/crb.hpp"

#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "homcrb/error.hpp"

namespace homcrb {

Eigen::VectorXd group_error(const GroupElement& g_ref, const GroupElement& g_est,
                            const ReductiveStructure& s) {
  const AlgebraVector eta =
      s.left_side() ? log(g_ref.inverse() * g_est) : log(g_est * g_ref.inverse());
  return s.to_reductive(eta.coords);
}

EstimatorStats estimator_stats_from_errors(const GroupElement& g_ref,
                                           std::vector<Eigen::VectorXd> lifted_errors,
                                           std::span<const double> group_error_sq,
                                           const ReductiveStructure& s) {
  const int n = s.n_G();
  const int N = static_cast<int>(lifted_errors.size());
  EstimatorStats st{g_ref, s.side(), {}, Eigen::VectorXd::Zero(n), Eigen::MatrixXd::Zero(n, n),
                    Eigen::MatrixXd::Zero(n, n)};
  st.n_trials = N;
  if (N == 0) return st;

  for (const auto& e : lifted_errors) st.bias += e;
  st.bias /= N;

  Eigen::MatrixXd sum_sq = Eigen::MatrixXd::Zero(n, n);
  std::vector<double> coset_sq;
  coset_sq.reserve(static_cast<std::size_t>(N));
  for (const auto& e : lifted_errors) {
    const Eigen::VectorXd d = e - st.bias;
    const Eigen::MatrixXd outer = d * d.transpose();
    st.covariance += outer;
    sum_sq += outer.cwiseProduct(outer);
    coset_sq.push_back(e.tail(s.n_Theta()).squaredNorm());
  }
  st.covariance /= N;
  if (N > 1) {
    const Eigen::MatrixXd var = (sum_sq / N - st.covariance.cwiseProduct(st.covariance)) * N / (N - 1.0);
    st.covariance_se = (var.cwiseMax(0.0) / N).cwiseSqrt();
  }

  auto mean_se = [N](auto begin, auto end, double& mean, double& se) {
    double s1 = 0.0, s2 = 0.0;
    for (auto it = begin; it != end; ++it) {
      s1 += *it;
      s2 += *it * *it;
    }
    mean = s1 / N;
    se = N > 1 ? std::sqrt(std::max(0.0, (s2 / N - mean * mean) * N / (N - 1.0)) / N) : 0.0;
  };
  mean_se(coset_sq.begin(), coset_sq.end(), st.variance_on_coset, st.variance_on_coset_se);
  if (group_error_sq.size() == lifted_errors.size()) {
    mean_se(group_error_sq.begin(), group_error_sq.end(), st.variance_on_G, st.variance_on_G_se);
  }
  st.errors = std::move(lifted_errors);
  return st;
}

EstimatorStats estimator_stats(const GroupElement& g_ref, std::span<const GroupElement> estimates,
                               const ReductiveStructure& s) {
  std::vector<Eigen::VectorXd> lifted;
  std::vector<double> group_sq;
  lifted.reserve(estimates.size());
  group_sq.reserve(estimates.size());
  for (std::size_t t = 0; t < estimates.size(); ++t) {
    try {
      lifted.push_back(coset_error(g_ref, estimates[t], s).eta_coords);
      group_sq.push_back(group_error(g_ref, estimates[t], s).squaredNorm());
    } catch (const Error& e) {
      throw Error(e.code(), "estimator_stats: trial " + std::to_string(t) + ": " + e.what());
    }
  }
  return estimator_stats_from_errors(g_ref, std::move(lifted), group_sq, s);
}

Eigen::MatrixXd phi_matrix(const EstimatorStats& stats, const ReductiveStructure& s,
                           const std::optional<Eigen::MatrixXd>& bias_jacobian, int psi_order) {
  const int n = s.n_G();
  Eigen::MatrixXd phi = Eigen::MatrixXd::Identity(n, n);
  if (!stats.errors.empty()) {
    phi.setZero();
    const double sign = s.left_side() ? -1.0 : 1.0;
    for (const auto& e : stats.errors) phi += psi_series(s.ad_reductive(sign * e), psi_order);
    phi /= static_cast<double>(stats.errors.size());
  }
  if (bias_jacobian) {
    if (bias_jacobian->rows() != n || bias_jacobian->cols() != n) {
      throw Error(ErrorCode::Dimension, "phi_matrix: bias Jacobian must be n_G x n_G");
    }
    phi += *bias_jacobian;
  }
  return phi;
}

Eigen::MatrixXd pseudo_inverse(const Eigen::MatrixXd& M, double rel) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& sv = svd.singularValues();
  const double cutoff = sv.size() > 0 ? rel * sv(0) : 0.0;
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(sv.size());
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > cutoff) inv(i) = 1.0 / sv(i);
  }
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

namespace {

CrbReport make_report(Eigen::MatrixXd bound, CrbVariant variant, Eigen::MatrixXd phi,
                      Eigen::MatrixXd delta) {
  bound = 0.5 * (bound + bound.transpose());
  const double trace = bound.trace();
  return CrbReport{std::move(bound), trace, variant, std::move(phi), std::move(delta)};
}

Eigen::MatrixXd checked_inverse(const FimMatrix& fim_reduced, const char* where) {
  if (fim_reduced.frame != FimFrame::Reduced) {
    throw Error(ErrorCode::Dimension, std::string(where) + ": a reduced FIM is required");
  }
  const double cond = condition_number(fim_reduced.matrix);
  if (!(cond <= kDegenerateCondition)) {
    throw Error(ErrorCode::DegenerateModel, std::string(where) +
                                                ": reduced FIM is degenerate (condition number " +
                                                std::to_string(cond) + ")");
  }
  return fim_reduced.matrix.ldlt().solve(
      Eigen::MatrixXd::Identity(fim_reduced.matrix.rows(), fim_reduced.matrix.cols()));
}

}  // namespace

CrbReport crb_group(const FimMatrix& fim, const Eigen::MatrixXd& phi) {
  if (fim.frame == FimFrame::Reduced) {
    throw Error(ErrorCode::Dimension, "crb_group: a Left or Right FIM is required");
  }
  const Eigen::MatrixXd bound = phi * pseudo_inverse(fim.matrix) * phi.transpose();
  return make_report(bound,
                     fim.frame == FimFrame::Left ? CrbVariant::GroupExactLeft
                                                 : CrbVariant::GroupExactRight,
                     phi, Eigen::MatrixXd());
}

CrbReport crb_homogeneous(const FimMatrix& fim_reduced, const Eigen::MatrixXd& phi,
                          const ReductiveStructure& s) {
  const Eigen::MatrixXd Finv = checked_inverse(fim_reduced, "crb_homogeneous");
  const Eigen::MatrixXd Pi = selector_pi(s);
  const Eigen::MatrixXd P = Pi * phi * Pi.transpose();
  return make_report(P * Finv * P.transpose(), CrbVariant::HomogeneousExact, phi,
                     Eigen::MatrixXd());
}

CrbReport crb_third_order(const FimMatrix& fim_reduced, const Eigen::MatrixXd& delta) {
  const Eigen::MatrixXd Finv = checked_inverse(fim_reduced, "crb_third_order");
  const Eigen::MatrixXd P = Eigen::MatrixXd::Identity(Finv.rows(), Finv.cols()) + delta;
  return make_report(P * Finv * P.transpose(), CrbVariant::HomogeneousThirdOrderUnbiased,
                     Eigen::MatrixXd(), delta);
}

Eigen::MatrixXd delta_matrix(std::span<const Eigen::VectorXd> errors, const ReductiveStructure& s) {
  const int n = s.n_G();
  Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(n, n);
  if (!errors.empty()) {
    for (const auto& e : errors) {
      const Eigen::MatrixXd ad = s.ad_reductive(e);
      mean += ad * ad;
    }
    mean /= 12.0 * static_cast<double>(errors.size());
  }
  const Eigen::MatrixXd Pi = selector_pi(s);
  return Pi * mean * Pi.transpose();
}

Eigen::MatrixXd delta_matrix(std::span<const AlgebraVector> errors, const ReductiveStructure& s) {
  std::vector<Eigen::VectorXd> coords;
  coords.reserve(errors.size());
  for (const auto& e : errors) coords.push_back(s.to_reductive(e.coords));
  return delta_matrix(std::span<const Eigen::VectorXd>(coords), s);
}

double variance_bound(const FimMatrix& fim_reduced) {
  return checked_inverse(fim_reduced, "variance_bound").trace();
}

EfficiencyResult efficiency_residual(const StatisticalModel& model,
                                     std::span<const std::vector<Observation>> observations,
                                     const GroupElement& g_ref,
                                     std::span<const GroupElement> estimates,
                                     const ReductiveStructure& s, std::optional<double> c,
                                     const std::optional<Eigen::VectorXd>& bias) {
  if (observations.size() != estimates.size() || estimates.empty()) {
    throw Error(ErrorCode::Shape, "efficiency_residual: need one estimate per observation set");
  }
  const int n = s.n_G();
  const EstimatorStats stats = estimator_stats(g_ref, estimates, s);
  const Eigen::MatrixXd phi = phi_matrix(stats, s);
  const Eigen::MatrixXd Pi = selector_pi(s);
  const Eigen::VectorXd b = bias.value_or(Eigen::VectorXd::Zero(n));

  RandomStream fim_rng(0xf15e7ULL);
  const FimMatrix Fbar = fim(model, g_ref, FimFrame::Reduced,
                             model.has_analytic_fim() ? FimMethod::Analytic
                                                      : FimMethod::MonteCarloGradient,
                             kDefaultFimSamples, fim_rng);
  const Eigen::MatrixXd Finv = checked_inverse(Fbar, "efficiency_residual");
  const Eigen::MatrixXd precond = phi * Pi.transpose() * Finv;

  const std::size_t N = estimates.size();
  std::vector<Eigen::VectorXd> r(N), sdir(N);
  double mean_norm = 0.0;
  for (std::size_t t = 0; t < N; ++t) {
    const auto& xs = observations[t];
    const Eigen::VectorXd grad =
        model.total_gradient(xs, g_ref, side_frame(s), s.m_basis());
    sdir[t] = precond * grad / static_cast<double>(xs.size());
    r[t] = stats.errors[t] - b;
    mean_norm += stats.errors[t].norm();
  }
  mean_norm /= static_cast<double>(N);

  double coef = 1.0;
  if (c) {
    coef = *c;
  } else {
    double num = 0.0, den = 0.0;
    for (std::size_t t = 0; t < N; ++t) {
      num += r[t].dot(sdir[t]);
      den += sdir[t].squaredNorm();
    }
    coef = den > 0.0 ? num / den : 0.0;
  }
  double residual = 0.0;
  for (std::size_t t = 0; t < N; ++t) residual += (r[t] - coef * sdir[t]).norm();
  return EfficiencyResult{residual / static_cast<double>(N), coef, mean_norm};
}

Eigen::MatrixXd bias_jacobian(const StatisticalModel& model, const GroupElement& g_ref,
                              const EstimatorFn& estimator, const ReductiveStructure& s,
                              int n_samples, double h, RandomStream& rng,
                              int observations_per_trial) {
  if (n_samples < 1) throw Error(ErrorCode::Dimension, "bias_jacobian: n_samples must be positive");
  const int n = s.n_G();
  const double step = h > 0.0 ? h : 1e-4 * (1.0 + g_ref.matrix().norm());
  const std::uint64_t base = rng.engine()();
  const bool left = s.left_side();

  auto mean_bias = [&](const GroupElement& g) {
    Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
    for (int t = 0; t < n_samples; ++t) {
      RandomStream trial(base, {static_cast<std::uint64_t>(t)});
      const auto xs = model.sample(g, observations_per_trial, trial);
      b += coset_error(g, estimator(xs, g), s).eta_coords;
    }
    return Eigen::VectorXd(b / n_samples);
  };

  Eigen::MatrixXd J(n, n);
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd d = s.basis().col(i) * step;
    const GroupElement ep = exp(s.group(), d), em = exp(s.group(), -d);
    const GroupElement gp = left ? g_ref * ep : ep * g_ref;
    const GroupElement gm = left ? g_ref * em : em * g_ref;
    J.col(i) = (mean_bias(gp) - mean_bias(gm)) / (2.0 * step);
  }
  return J;
}

}  // namespace homcrb
