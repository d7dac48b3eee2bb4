#include "homcrb/fisher.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "homcrb/error.hpp"
#include "homcrb/log.hpp"
#include "homcrb/parallel.hpp"

namespace homcrb {

namespace {

struct Partition {
  int begin;
  int count;
};

std::vector<Partition> partitions(int n_samples) {
  const int p = std::min(kMonteCarloPartitions, n_samples);
  std::vector<Partition> out;
  int begin = 0;
  for (int k = 0; k < p; ++k) {
    const int count = n_samples / p + (k < n_samples % p ? 1 : 0);
    out.push_back({begin, count});
    begin += count;
  }
  return out;
}

// Sums per-partition matrices in partition order.
template <class PartitionFn>
Eigen::MatrixXd monte_carlo_mean(int n_samples, int dim, std::uint64_t base_seed, int workers,
                                 PartitionFn&& fn) {
  const auto parts = partitions(n_samples);
  std::vector<Eigen::MatrixXd> partial(parts.size(), Eigen::MatrixXd::Zero(dim, dim));
  parallel_for(static_cast<int>(parts.size()), workers, [&](int k) {
    RandomStream rng(base_seed, {static_cast<std::uint64_t>(k)});
    partial[static_cast<std::size_t>(k)] = fn(parts[static_cast<std::size_t>(k)].count, rng);
  });
  Eigen::MatrixXd total = Eigen::MatrixXd::Zero(dim, dim);
  for (const auto& m : partial) total += m;
  return total / static_cast<double>(n_samples);
}

Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& M) { return 0.5 * (M + M.transpose()); }

}  // namespace

Eigen::MatrixXd fim_directions(const ReductiveStructure& s, FimFrame frame) {
  return frame == FimFrame::Reduced ? s.m_basis() : s.basis();
}

InvariantFrame fim_invariant_frame(const ReductiveStructure& s, FimFrame frame) {
  switch (frame) {
    case FimFrame::Left: return InvariantFrame::Left;
    case FimFrame::Right: return InvariantFrame::Right;
    case FimFrame::Reduced: return side_frame(s);
  }
  return InvariantFrame::Left;
}

FimMatrix fim(const StatisticalModel& model, const GroupElement& g, FimFrame frame,
              FimMethod method, int n_samples, RandomStream& rng, int workers) {
  if (method == FimMethod::MonteCarloHessian) {
    return fim_hessian(model, g, frame, n_samples, rng, 0.0, workers);
  }
  const ReductiveStructure& s = model.structure();
  const Eigen::MatrixXd D = fim_directions(s, frame);
  const InvariantFrame inv = fim_invariant_frame(s, frame);

  if (method == FimMethod::Analytic) {
    if (!model.has_analytic_fim()) {
      throw Error(ErrorCode::UnsupportedMethod,
                  "fim: analytic FIM requested but " + model.name() + " has none");
    }
    return FimMatrix{frame, g, symmetrize(model.analytic_fim(g, inv, D)), method, 0};
  }

  if (n_samples < 1) throw Error(ErrorCode::Dimension, "fim: n_samples must be positive");
  const std::uint64_t base = rng.engine()();
  const int dim = static_cast<int>(D.cols());
  Eigen::MatrixXd F = monte_carlo_mean(n_samples, dim, base, workers, [&](int count, RandomStream& r) {
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(dim, dim);
    for (int i = 0; i < count; ++i) {
      const Observation x = model.sample(g, r);
      const Eigen::VectorXd d = model.gradient(x, g, inv, D);
      sum.selfadjointView<Eigen::Lower>().rankUpdate(d);
    }
    return Eigen::MatrixXd(sum.selfadjointView<Eigen::Lower>());
  });
  return FimMatrix{frame, g, symmetrize(F), method, n_samples};
}

FimMatrix fim_hessian(const StatisticalModel& model, const GroupElement& g, FimFrame frame,
                      int n_samples, RandomStream& rng, double h, int workers) {
  if (n_samples < 1) throw Error(ErrorCode::Dimension, "fim_hessian: n_samples must be positive");
  const ReductiveStructure& s = model.structure();
  const Eigen::MatrixXd D = fim_directions(s, frame);
  const bool left = fim_invariant_frame(s, frame) == InvariantFrame::Left;
  const double step = h > 0.0 ? h : 1e-4 * (1.0 + g.matrix().norm());
  const int n = static_cast<int>(D.cols());
  const Group& G = model.group();

  // Perturbed points for each (i <= j) and sign pair, computed once.
  std::vector<std::array<GroupElement, 4>> points;
  std::vector<std::pair<int, int>> index;
  const std::array<std::pair<double, double>, 4> signs{{{1, 1}, {1, -1}, {-1, 1}, {-1, -1}}};
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      std::array<GroupElement, 4> quad{g, g, g, g};
      for (std::size_t k = 0; k < 4; ++k) {
        const GroupElement ej = exp(G, signs[k].first * step * D.col(j));
        const GroupElement ei = exp(G, signs[k].second * step * D.col(i));
        quad[k] = left ? g * ej * ei : ei * ej * g;
      }
      points.push_back(quad);
      index.emplace_back(i, j);
    }
  }

  const std::uint64_t base = rng.engine()();
  Eigen::MatrixXd F = monte_carlo_mean(n_samples, n, base, workers, [&](int count, RandomStream& r) {
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(n, n);
    for (int t = 0; t < count; ++t) {
      const Observation x = model.sample(g, r);
      for (std::size_t p = 0; p < points.size(); ++p) {
        const auto& q = points[p];
        const double d2 = (model.log_likelihood(x, q[0]) - model.log_likelihood(x, q[1]) -
                           model.log_likelihood(x, q[2]) + model.log_likelihood(x, q[3])) /
                          (4.0 * step * step);
        sum(index[p].first, index[p].second) -= d2;
      }
    }
    return sum;
  });
  Eigen::MatrixXd full = F.triangularView<Eigen::Upper>();
  full.triangularView<Eigen::StrictlyLower>() = F.transpose().triangularView<Eigen::StrictlyLower>();
  return FimMatrix{frame, g, symmetrize(full), FimMethod::MonteCarloHessian, n_samples};
}

Eigen::VectorXd grad_loglik(const StatisticalModel& model, const Observation& x,
                            const GroupElement& g) {
  const ReductiveStructure& s = model.structure();
  return model.gradient(x, g, side_frame(s), s.m_basis());
}

namespace {

double spectral_norm(const Eigen::MatrixXd& M) {
  if (M.size() == 0) return 0.0;
  return Eigen::JacobiSVD<Eigen::MatrixXd>(M).singularValues()(0);
}

FimMatrix frame_fim(const StatisticalModel& model, const GroupElement& g, FimFrame frame,
                    FimMethod method, int n_samples, std::uint64_t seed, int workers) {
  RandomStream rng(seed);
  return fim(model, g, frame, method, n_samples, rng, workers);
}

}  // namespace

FimPropertyReport verify_fim_properties(const StatisticalModel& model, const GroupElement& g,
                                        const GroupElement& h_sample, FimMethod method,
                                        int n_samples, RandomStream& rng, int workers) {
  const ReductiveStructure& s = model.structure();
  const bool left = s.left_side();
  const int nH = s.n_H(), nG = s.n_G();
  const GroupElement gh = left ? g * h_sample : h_sample * g;
  const std::uint64_t seed = rng.engine()();

  const Eigen::MatrixXd FL = frame_fim(model, g, FimFrame::Left, method, n_samples, seed, workers).matrix;
  const Eigen::MatrixXd FR = frame_fim(model, g, FimFrame::Right, method, n_samples, seed, workers).matrix;
  const Eigen::MatrixXd FLh = frame_fim(model, gh, FimFrame::Left, method, n_samples, seed, workers).matrix;
  const Eigen::MatrixXd FRh = frame_fim(model, gh, FimFrame::Right, method, n_samples, seed, workers).matrix;

  FimPropertyReport r;
  const Eigen::MatrixXd& side = left ? FL : FR;
  if (nH > 0) {
    Eigen::MatrixXd hpart = side;
    hpart.bottomRightCorner(nG - nH, nG - nH).setZero();
    r.block_form = spectral_norm(hpart);
  }
  r.fiber_constancy = left ? spectral_norm(FR - FRh) : spectral_norm(FL - FLh);
  const Eigen::MatrixXd Ad = s.adjoint_reductive(g);
  r.adjoint_relation = spectral_norm(FL - Ad.transpose() * FR * Ad);
  if (left) {
    const Eigen::MatrixXd Ah = s.adjoint_reductive(h_sample);
    r.fiber_relation = spectral_norm(FLh - Ah.transpose() * FL * Ah);
  } else {
    const Eigen::MatrixXd Ah = s.adjoint_reductive(h_sample.inverse());
    r.fiber_relation = spectral_norm(FRh - Ah.transpose() * FR * Ah);
  }
  return r;
}

Eigen::MatrixXd psd_floor(const Eigen::MatrixXd& M) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(symmetrize(M));
  Eigen::VectorXd ev = es.eigenvalues();
  if (ev.size() > 0 && ev.minCoeff() < 0.0) {
    log_debug("psd_floor: raising negative eigenvalue " + std::to_string(ev.minCoeff()) + " to 0");
    ev = ev.cwiseMax(0.0);
  }
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

double condition_number(const Eigen::MatrixXd& M) {
  if (M.size() == 0) return 1.0;
  const Eigen::VectorXd sv = Eigen::JacobiSVD<Eigen::MatrixXd>(M).singularValues();
  const double lo = sv(sv.size() - 1);
  if (!(lo > 0.0)) return std::numeric_limits<double>::infinity();
  return sv(0) / lo;
}

}  // namespace homcrb
