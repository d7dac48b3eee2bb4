#pragma once

// Generalized Fisher scoring on G/H and H\G, and a first-order
// gradient-ascent baseline.

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "homcrb/error.hpp"
#include "homcrb/liegroup.hpp"
#include "homcrb/model.hpp"

namespace homcrb {

enum class FimMode { Analytic, MonteCarlo, FrozenAtInitial };

struct ScoringOptions {
  int max_iterations = 100;
  /// Tolerance on the natural step norm ||(1/m) Fbar^-1 sum grad||.
  double gradient_tolerance = 1e-10;
  FimMode fim_mode = FimMode::Analytic;
  double step_scale = 1.0;
  /// Monte-Carlo FIM settings (fim_mode == MonteCarlo).
  int fim_samples = 100000;
  std::uint64_t fim_seed = 0;
  /// Log-likelihood drop below the best value that counts as divergence.
  double divergence_drop = 1e3;

  void validate() const;
};

struct ScoringTrace {
  std::vector<GroupElement> iterates;
  /// Summed log-likelihood at each iterate.
  std::vector<double> logliks;
  /// Norm of the applied m-step at each iteration; the last entry is the
  /// step that met the tolerance when converged.
  std::vector<double> step_norms;
  /// ||(1/m) sum grad|| in m-coordinates at each iterate.
  std::vector<double> gradient_norms;
  /// max ||R^T R - I|| before re-projection at each iterate.
  std::vector<double> drifts;
  /// Norm of the h-part of each applied step (zero by construction).
  std::vector<double> h_step_norms;
  bool converged = false;
  int iterations_used = 0;

  const GroupElement& final_iterate() const { return iterates.back(); }
};

/// Divergence error carrying the trace up to the failing iterate.
class ScoringDivergence : public Error {
 public:
  ScoringDivergence(const std::string& what, ScoringTrace trace)
      : Error(ErrorCode::Divergence, what), trace_(std::move(trace)) {}
  const ScoringTrace& trace() const noexcept { return trace_; }

 private:
  ScoringTrace trace_;
};

/// Iterates g <- g exp(((1/m) Pi^T Fbar^-1 sum grad)^) on G/H, with the
/// exponential on the left on H\G. Throws DegenerateModel on a singular
/// reduced FIM and ScoringDivergence on a log-likelihood collapse or
/// non-finite values.
ScoringTrace fisher_scoring(const StatisticalModel& model, std::span<const Observation> xs,
                            const GroupElement& g0, const ScoringOptions& opts = {});

struct GradientAscentOptions {
  double step0 = 0.1;
  double decay = 1.0;
  int max_iterations = 1000;
  /// Stops when ||(1/m) sum grad|| falls to this value.
  double gradient_tolerance = 1e-8;
  double divergence_drop = 1e3;
};

/// g_{k+1} = g_k exp((step0 decay^k Pi^T sum grad / m)^), side-aware.
ScoringTrace gradient_ascent(const StatisticalModel& model, std::span<const Observation> xs,
                             const GroupElement& g0, const GradientAscentOptions& opts);

/// Final iterate of fisher_scoring.
GroupElement mle(const StatisticalModel& model, std::span<const Observation> xs,
                 const GroupElement& g0, const ScoringOptions& opts = {});

}  // namespace homcrb
