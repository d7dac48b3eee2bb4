#pragma once

// Statistical models over a matrix Lie group whose likelihood is invariant
// along the fibers of a homogeneous space.

#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "homcrb/homspace.hpp"
#include "homcrb/liegroup.hpp"
#include "homcrb/random.hpp"

namespace homcrb {

/// One draw from a model, flattened into a real vector.
using Observation = Eigen::VectorXd;

enum class InvariantFrame { Left, Right };

/// Frame whose derivatives along h vanish: LIVFs on G/H, RIVFs on H\G.
inline InvariantFrame side_frame(const ReductiveStructure& s) {
  return s.left_side() ? InvariantFrame::Left : InvariantFrame::Right;
}

/// Interface of a model with likelihood f(x|g) satisfying f(x|g) = f(x|gh)
/// (G/H) or f(x|g) = f(x|hg) (H\G).
///
/// Direction matrices hold standard algebra coordinates in their columns.
/// Derivatives in the non-native frame are obtained through the adjoint
/// action, X^L_g = (Ad_g X)^R_g.
class StatisticalModel {
 public:
  virtual ~StatisticalModel() = default;

  virtual std::string name() const = 0;
  virtual const ReductiveStructure& structure() const = 0;
  const Group& group() const { return structure().group(); }

  virtual Observation sample(const GroupElement& g, RandomStream& rng) const = 0;
  std::vector<Observation> sample(const GroupElement& g, int m, RandomStream& rng) const;

  /// Log-likelihood up to a constant independent of g.
  virtual double log_likelihood(const Observation& x, const GroupElement& g) const = 0;
  virtual double total_log_likelihood(std::span<const Observation> xs,
                                      const GroupElement& g) const;

  virtual bool has_analytic_gradient() const { return false; }
  virtual bool has_analytic_fim() const { return false; }

  /// Derivatives of log_likelihood along `directions` in `frame`. Throws
  /// UnsupportedMethod when the model has no closed form.
  Eigen::VectorXd analytic_gradient(const Observation& x, const GroupElement& g,
                                    InvariantFrame frame, const Eigen::MatrixXd& directions) const;

  /// Per-observation FIM along `directions` in `frame`.
  Eigen::MatrixXd analytic_fim(const GroupElement& g, InvariantFrame frame,
                               const Eigen::MatrixXd& directions) const;

  /// Analytic gradient when available, central differences otherwise.
  Eigen::VectorXd gradient(const Observation& x, const GroupElement& g, InvariantFrame frame,
                           const Eigen::MatrixXd& directions) const;

  /// Sum of gradient() over observations.
  virtual Eigen::VectorXd total_gradient(std::span<const Observation> xs, const GroupElement& g,
                                         InvariantFrame frame,
                                         const Eigen::MatrixXd& directions) const;

  /// Moves g along a random element of its symmetry group (the fiber
  /// through g). The default multiplies by a sampled h on the coset side.
  virtual GroupElement apply_random_symmetry(const GroupElement& g, RandomStream& rng) const;

 protected:
  /// Frame in which the model implements its closed forms.
  virtual InvariantFrame native_frame() const { return InvariantFrame::Right; }
  virtual Eigen::VectorXd native_gradient(const Observation& x, const GroupElement& g,
                                          const Eigen::MatrixXd& directions) const;
  virtual Eigen::MatrixXd native_fim(const GroupElement& g,
                                     const Eigen::MatrixXd& directions) const;

  /// Converts directions given in `frame` to the native frame at g.
  Eigen::MatrixXd to_native(const GroupElement& g, InvariantFrame frame,
                            const Eigen::MatrixXd& directions) const;
};

}  // namespace homcrb
