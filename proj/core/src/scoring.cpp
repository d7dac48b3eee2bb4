#include "homcrb/scoring.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <string>

#include <Eigen/Dense>

#include "homcrb/fisher.hpp"
#include "homcrb/log.hpp"

namespace homcrb {

namespace {

constexpr double kReprojectDrift = 1e-12;

GroupElement apply_step(const ReductiveStructure& s, const GroupElement& g,
                        const Eigen::VectorXd& step_std) {
  const GroupElement e = exp(s.group(), step_std);
  GroupElement next = s.left_side() ? g * e : e * g;
  return next;
}

// Records the drift and re-projects rotation blocks when it exceeds 1e-12.
GroupElement reproject(const GroupElement& g, ScoringTrace& trace) {
  const double drift = manifold_drift(g);
  trace.drifts.push_back(drift);
  if (drift > kReprojectDrift) return project_to_group(g.group(), g.matrix());
  return g;
}

void check_loglik(double ll, double& best, double drop, int k, ScoringTrace& trace) {
  if (!std::isfinite(ll)) {
    throw ScoringDivergence("scoring: non-finite log-likelihood at iteration " + std::to_string(k),
                            trace);
  }
  best = std::max(best, ll);
  if (ll < best - drop) {
    throw ScoringDivergence("scoring: log-likelihood dropped by more than " + std::to_string(drop) +
                                " at iteration " + std::to_string(k),
                            trace);
  }
}

}  // namespace

void ScoringOptions::validate() const {
  if (max_iterations < 1) throw Error(ErrorCode::Config, "scoring: max_iterations must be >= 1");
  if (!(gradient_tolerance > 0.0)) {
    throw Error(ErrorCode::Config, "scoring: gradient_tolerance must be positive");
  }
  if (!(step_scale > 0.0)) throw Error(ErrorCode::Config, "scoring: step_scale must be positive");
  if (fim_mode == FimMode::MonteCarlo && fim_samples < 1) {
    throw Error(ErrorCode::Config, "scoring: fim_samples must be positive");
  }
}

ScoringTrace fisher_scoring(const StatisticalModel& model, std::span<const Observation> xs,
                            const GroupElement& g0, const ScoringOptions& opts) {
  opts.validate();
  if (xs.empty()) throw Error(ErrorCode::Shape, "fisher_scoring: no observations");
  const ReductiveStructure& s = model.structure();
  const Eigen::MatrixXd Bm = s.m_basis();
  const InvariantFrame frame = side_frame(s);
  const double m = static_cast<double>(xs.size());
  const int nH = s.n_H();

  const bool per_iterate = opts.fim_mode == FimMode::Analytic && model.has_analytic_fim();
  // Frozen FIMs are formed at g0 once its log-likelihood is known to be finite.
  std::optional<Eigen::MatrixXd> frozen;
  auto frozen_fim = [&]() -> const Eigen::MatrixXd& {
    if (!frozen) {
      if (opts.fim_mode != FimMode::MonteCarlo && model.has_analytic_fim()) {
        frozen = model.analytic_fim(g0, frame, Bm);
      } else {
        RandomStream rng(opts.fim_seed);
        frozen = fim(model, g0, FimFrame::Reduced, FimMethod::MonteCarloGradient, opts.fim_samples,
                     rng)
                     .matrix;
      }
    }
    return *frozen;
  };

  ScoringTrace trace;
  GroupElement g = reproject(g0, trace);
  double best = -std::numeric_limits<double>::infinity();
  for (int k = 0;; ++k) {
    trace.iterates.push_back(g);
    const double ll = model.total_log_likelihood(xs, g);
    trace.logliks.push_back(ll);
    check_loglik(ll, best, opts.divergence_drop, k, trace);

    const Eigen::VectorXd grad = model.total_gradient(xs, g, frame, Bm) / m;
    trace.gradient_norms.push_back(grad.norm());
    if (!grad.allFinite()) {
      throw ScoringDivergence("fisher_scoring: non-finite gradient at iteration " + std::to_string(k),
                              trace);
    }

    const Eigen::MatrixXd F = per_iterate ? model.analytic_fim(g, frame, Bm) : frozen_fim();
    const double cond = condition_number(F);
    if (!(cond <= kDegenerateCondition)) {
      throw Error(ErrorCode::DegenerateModel, "fisher_scoring: reduced FIM is degenerate at iteration " +
                                                  std::to_string(k) + " (condition number " +
                                                  std::to_string(cond) + ")");
    }
    const Eigen::VectorXd delta = opts.step_scale * F.ldlt().solve(grad);
    const double step_norm = delta.norm();
    trace.step_norms.push_back(step_norm);
    if (step_norm <= opts.gradient_tolerance) {
      trace.converged = true;
      break;
    }
    if (k >= opts.max_iterations) break;

    const Eigen::VectorXd step_std = Bm * delta;
    trace.h_step_norms.push_back(nH > 0 ? (s.basis_inverse().topRows(nH) * step_std).norm() : 0.0);
    g = reproject(apply_step(s, g, step_std), trace);
    ++trace.iterations_used;
  }
  log_debug("fisher_scoring: " + std::to_string(trace.iterations_used) + " iterations, converged=" +
            (trace.converged ? std::string("yes") : std::string("no")));
  return trace;
}

ScoringTrace gradient_ascent(const StatisticalModel& model, std::span<const Observation> xs,
                             const GroupElement& g0, const GradientAscentOptions& opts) {
  if (!(opts.step0 > 0.0)) throw Error(ErrorCode::Config, "gradient_ascent: step0 must be positive");
  if (!(opts.decay > 0.0 && opts.decay <= 1.0)) {
    throw Error(ErrorCode::Config, "gradient_ascent: decay must lie in (0, 1]");
  }
  if (opts.max_iterations < 1) {
    throw Error(ErrorCode::Config, "gradient_ascent: max_iterations must be >= 1");
  }
  if (xs.empty()) throw Error(ErrorCode::Shape, "gradient_ascent: no observations");
  const ReductiveStructure& s = model.structure();
  const Eigen::MatrixXd Bm = s.m_basis();
  const InvariantFrame frame = side_frame(s);
  const double m = static_cast<double>(xs.size());

  ScoringTrace trace;
  GroupElement g = reproject(g0, trace);
  double best = -std::numeric_limits<double>::infinity();
  double step = opts.step0;
  for (int k = 0;; ++k) {
    trace.iterates.push_back(g);
    const double ll = model.total_log_likelihood(xs, g);
    trace.logliks.push_back(ll);
    check_loglik(ll, best, opts.divergence_drop, k, trace);

    const Eigen::VectorXd grad = model.total_gradient(xs, g, frame, Bm) / m;
    const double gn = grad.norm();
    trace.gradient_norms.push_back(gn);
    if (!std::isfinite(gn)) {
      throw ScoringDivergence("gradient_ascent: non-finite gradient at iteration " + std::to_string(k),
                              trace);
    }
    if (gn <= opts.gradient_tolerance) {
      trace.step_norms.push_back(0.0);
      trace.converged = true;
      break;
    }
    if (k >= opts.max_iterations) break;
    const Eigen::VectorXd delta = step * grad;
    trace.step_norms.push_back(delta.norm());
    trace.h_step_norms.push_back(0.0);
    g = reproject(apply_step(s, g, Bm * delta), trace);
    step *= opts.decay;
    ++trace.iterations_used;
  }
  return trace;
}

GroupElement mle(const StatisticalModel& model, std::span<const Observation> xs,
                 const GroupElement& g0, const ScoringOptions& opts) {
  return fisher_scoring(model, xs, g0, opts).final_iterate();
}

}  // namespace homcrb
