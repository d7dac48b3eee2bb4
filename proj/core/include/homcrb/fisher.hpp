#pragma once

// Fisher information matrices in the left, right and reduced frames.
//
// Left and Right matrices are expressed in the reductive basis of the
// model's structure (h-basis first), so their h/m block pattern can be read
// off directly. Reduced matrices live on the m-basis of the side's frame.

#include <Eigen/Core>

#include "homcrb/liegroup.hpp"
#include "homcrb/model.hpp"
#include "homcrb/random.hpp"

namespace homcrb {

enum class FimFrame { Left, Right, Reduced };
enum class FimMethod { Analytic, MonteCarloGradient, MonteCarloHessian };

struct FimMatrix {
  FimFrame frame;
  GroupElement at;
  Eigen::MatrixXd matrix;
  FimMethod estimation;
  int n_samples = 0;
};

inline constexpr int kDefaultFimSamples = 100000;
inline constexpr int kMonteCarloPartitions = 16;
inline constexpr double kDegenerateCondition = 1e12;

/// Direction matrix (standard coordinates in columns) for a frame.
Eigen::MatrixXd fim_directions(const ReductiveStructure& s, FimFrame frame);
InvariantFrame fim_invariant_frame(const ReductiveStructure& s, FimFrame frame);

/// E[D_i l D_j l]. Monte-Carlo estimates split `n_samples` into fixed
/// partitions seeded from one draw of `rng`; partial sums are combined in
/// partition order, so results do not depend on `workers`.
FimMatrix fim(const StatisticalModel& model, const GroupElement& g, FimFrame frame,
              FimMethod method, int n_samples, RandomStream& rng, int workers = 1);

/// -E[D_j D_i l] by nested central differences with step h (h <= 0 selects
/// 1e-4 (1 + ||g||_F)), symmetrized.
FimMatrix fim_hessian(const StatisticalModel& model, const GroupElement& g, FimFrame frame,
                      int n_samples, RandomStream& rng, double h = 0.0, int workers = 1);

/// Derivatives of l(x|.) at g along the m-basis in the side's frame.
Eigen::VectorXd grad_loglik(const StatisticalModel& model, const Observation& x,
                            const GroupElement& g);

/// Largest deviation of each FIM property; see verify_fim_properties.
struct FimPropertyReport {
  double block_form = 0.0;       // h rows/columns of the side's frame FIM
  double fiber_constancy = 0.0;  // other frame constant along the fiber
  double adjoint_relation = 0.0; // F^L = Ad_g^T F^R Ad_g
  double fiber_relation = 0.0;   // transport of the side's frame FIM along the fiber
  bool passes(double tol) const {
    return block_form <= tol && fiber_constancy <= tol && adjoint_relation <= tol &&
           fiber_relation <= tol;
  }
};

/// Checks the block form, fiber constancy, adjoint relation and fiber
/// transport of the FIMs at g and at the fiber point g h (G/H) or h g (H\G).
/// On G/H: F^L has zero h blocks, F^R_g = F^R_gh, F^L_gh = Ad_h^T F^L_g Ad_h.
/// On H\G the frames swap: F^R has zero h blocks, F^L_g = F^L_hg and
/// F^R_hg = Ad_{h^-1}^T F^R_g Ad_{h^-1}. Deviations are spectral norms.
/// Monte-Carlo estimates share random numbers across all matrices.
FimPropertyReport verify_fim_properties(const StatisticalModel& model, const GroupElement& g,
                                        const GroupElement& h_sample, FimMethod method,
                                        int n_samples, RandomStream& rng, int workers = 1);

/// Eigenvalue floor at zero; logs when any eigenvalue is raised.
Eigen::MatrixXd psd_floor(const Eigen::MatrixXd& M);

/// 2-norm condition number of a symmetric matrix (inf if singular).
double condition_number(const Eigen::MatrixXd& M);

}  // namespace homcrb
