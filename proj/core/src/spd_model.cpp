#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Dense>

#include "homcrb/error.hpp"
#include "homcrb/models.hpp"

namespace homcrb {

namespace {

Eigen::MatrixXd unit_pair(int n, int i, int j, double sign) {
  Eigen::MatrixXd E = Eigen::MatrixXd::Zero(n, n);
  E(i, j) += 1.0 / std::numbers::sqrt2;
  E(j, i) += sign / std::numbers::sqrt2;
  return E;
}

Eigen::VectorXd row_major(const Eigen::MatrixXd& A) {
  const Eigen::Index n = A.rows();
  Eigen::VectorXd v(n * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) v(i * n + j) = A(i, j);
  }
  return v;
}

Eigen::MatrixXd from_row_major(const Eigen::Ref<const Eigen::VectorXd>& v, Eigen::Index n) {
  Eigen::MatrixXd A(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) A(i, j) = v(i * n + j);
  }
  return A;
}

// Haar rotation: QR of a Gaussian matrix with the R diagonal made positive,
// then one column flipped if needed to land in SO(n).
Eigen::MatrixXd haar_rotation(int n, RandomStream& rng) {
  Eigen::MatrixXd Z(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) Z(i, j) = rng.normal();
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(Z);
  Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
  const Eigen::MatrixXd R = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int k = 0; k < n; ++k) {
    if (R(k, k) < 0.0) Q.col(k) = -Q.col(k);
  }
  if (Q.determinant() < 0.0) Q.col(0) = -Q.col(0);
  return Q;
}

ReductiveStructure spd_structure(int n) {
  const Group G = GroupDescriptor::gl_plus(n);
  std::vector<AlgebraVector> h;
  std::vector<AlgebraVector> seeds;
  for (int i = 0; i < n; ++i) {
    Eigen::MatrixXd E = Eigen::MatrixXd::Zero(n, n);
    E(i, i) = 1.0;
    seeds.emplace_back(G, row_major(E));
  }
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      h.emplace_back(G, row_major(unit_pair(n, i, j, -1.0)));
      seeds.emplace_back(G, row_major(unit_pair(n, i, j, 1.0)));
    }
  }
  SubgroupSampler sampler = [G, n](RandomStream& rng) {
    return GroupElement::unchecked(G, haar_rotation(n, rng));
  };
  return build_reductive(G, h, seeds, CosetSide::LeftCoset_GmodH, std::move(sampler));
}

Eigen::MatrixXd checked_inverse_of(const GroupElement& g) {
  const Eigen::MatrixXd& A = g.matrix();
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);
  const double det = lu.determinant();
  if (!std::isfinite(det) || !(det > 0.0)) {
    throw Error(ErrorCode::Domain, "spd: g must have positive determinant");
  }
  const Eigen::MatrixXd inv = lu.inverse();
  if (!inv.allFinite()) throw Error(ErrorCode::Domain, "spd: g is numerically singular");
  return inv;
}

}  // namespace

Eigen::MatrixXd second_moment(std::span<const Observation> xs) {
  if (xs.empty()) throw Error(ErrorCode::Shape, "second_moment: no observations");
  const Eigen::Index n = xs.front().size();
  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(n, n);
  for (const auto& x : xs) {
    if (x.size() != n) throw Error(ErrorCode::Shape, "second_moment: inconsistent dimensions");
    X.selfadjointView<Eigen::Lower>().rankUpdate(x);
  }
  X = X.selfadjointView<Eigen::Lower>();
  return X / static_cast<double>(xs.size());
}

Eigen::MatrixXd spd_grad(const Eigen::MatrixXd& X, const GroupElement& g) {
  if (X.rows() != g.matrix().rows() || X.cols() != g.matrix().cols()) {
    throw Error(ErrorCode::Shape, "spd_grad: moment and group element sizes differ");
  }
  const Eigen::MatrixXd gi = checked_inverse_of(g);
  return gi * X * gi.transpose() - Eigen::MatrixXd::Identity(X.rows(), X.cols());
}

SpdModel::SpdModel(int n) : n_(n) {
  if (n < 1) throw Error(ErrorCode::Dimension, "SpdModel: dimension must be positive");
  structure_.emplace(spd_structure(n));
}

Observation SpdModel::sample(const GroupElement& g, RandomStream& rng) const {
  return g.matrix() * rng.normal_vector(n_);
}

double SpdModel::loglik_from_moment(const Eigen::MatrixXd& X, double m,
                                    const GroupElement& g) const {
  const Eigen::MatrixXd gi = checked_inverse_of(g);
  const double logdet = std::log(g.matrix().determinant());
  const Eigen::MatrixXd W = gi * X * gi.transpose();
  return -m * logdet - 0.5 * m * W.trace();
}

Eigen::VectorXd SpdModel::gradient_from_moment(const Eigen::MatrixXd& X, double m,
                                               const GroupElement& g,
                                               const Eigen::MatrixXd& native_dirs) const {
  return m * native_dirs.transpose() * row_major(spd_grad(X, g));
}

double SpdModel::log_likelihood(const Observation& x, const GroupElement& g) const {
  if (x.size() != n_) throw Error(ErrorCode::Shape, "SpdModel: observation has wrong length");
  return loglik_from_moment(x * x.transpose(), 1.0, g);
}

double SpdModel::total_log_likelihood(std::span<const Observation> xs,
                                      const GroupElement& g) const {
  if (xs.empty()) return 0.0;
  if (xs.front().size() != n_) throw Error(ErrorCode::Shape, "SpdModel: observation has wrong length");
  return loglik_from_moment(second_moment(xs), static_cast<double>(xs.size()), g);
}

Eigen::VectorXd SpdModel::total_gradient(std::span<const Observation> xs, const GroupElement& g,
                                         InvariantFrame frame,
                                         const Eigen::MatrixXd& directions) const {
  if (xs.empty()) return Eigen::VectorXd::Zero(directions.cols());
  if (xs.front().size() != n_) throw Error(ErrorCode::Shape, "SpdModel: observation has wrong length");
  return gradient_from_moment(second_moment(xs), static_cast<double>(xs.size()), g,
                              to_native(g, frame, directions));
}

Eigen::VectorXd SpdModel::native_gradient(const Observation& x, const GroupElement& g,
                                          const Eigen::MatrixXd& directions) const {
  if (x.size() != n_) throw Error(ErrorCode::Shape, "SpdModel: observation has wrong length");
  return gradient_from_moment(x * x.transpose(), 1.0, g, directions);
}

// E[(y^T A y - tr A)(y^T B y - tr B)] = 2 <sym A, sym B> for y ~ N(0, I).
Eigen::MatrixXd SpdModel::native_fim(const GroupElement&, const Eigen::MatrixXd& directions) const {
  const Eigen::Index k = directions.cols();
  std::vector<Eigen::MatrixXd> sym;
  sym.reserve(static_cast<std::size_t>(k));
  for (Eigen::Index c = 0; c < k; ++c) {
    const Eigen::MatrixXd A = from_row_major(directions.col(c), n_);
    sym.push_back(0.5 * (A + A.transpose()));
  }
  Eigen::MatrixXd F(k, k);
  for (Eigen::Index a = 0; a < k; ++a) {
    for (Eigen::Index b = a; b < k; ++b) {
      F(a, b) = F(b, a) =
          2.0 * sym[static_cast<std::size_t>(a)].cwiseProduct(sym[static_cast<std::size_t>(b)]).sum();
    }
  }
  return F;
}

}  // namespace homcrb
