#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <utility>

#include <Eigen/Dense>
#include <json.hpp>

#include "homcrb/error.hpp"
#include "homcrb/models.hpp"

namespace homcrb {

namespace {

Eigen::Matrix2d rot2(double theta) {
  Eigen::Matrix2d R;
  R << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
  return R;
}

const Eigen::Matrix2d kJ = (Eigen::Matrix2d() << 0.0, -1.0, 1.0, 0.0).finished();

std::vector<Eigen::Vector2d> canonical_positions(std::vector<Eigen::Vector2d> p) {
  const Eigen::Vector2d w = p[1] - p[0];
  const double theta = std::numbers::pi / 2.0 - std::atan2(w.y(), w.x());
  if (std::abs(theta) < 1e-15) return p;
  const Eigen::Matrix2d R = rot2(theta);
  const Eigen::Vector2d origin = p[0];
  for (auto& q : p) q = origin + R * (q - origin);
  p[1].x() = p[0].x();
  return p;
}

void validate_graph(const std::vector<Eigen::Vector2d>& positions, const std::vector<Edge>& edges) {
  const int n = static_cast<int>(positions.size());
  if (n < 2) throw Error(ErrorCode::Config, "NetworkModel: at least two agents are required");
  std::set<std::pair<int, int>> seen;
  for (const auto& e : edges) {
    if (e.i < 0 || e.j < 0 || e.i >= n || e.j >= n) {
      throw Error(ErrorCode::Config, "NetworkModel: edge index out of range");
    }
    if (e.i == e.j) throw Error(ErrorCode::Config, "NetworkModel: self-loop edge");
    if (!(e.sigma > 0.0)) throw Error(ErrorCode::Config, "NetworkModel: edge sigma must be positive");
    if (!seen.insert({std::min(e.i, e.j), std::max(e.i, e.j)}).second) {
      throw Error(ErrorCode::Config, "NetworkModel: duplicate edge");
    }
  }
  if ((positions[0] - positions[1]).norm() < 1e-12) {
    throw Error(ErrorCode::Config, "NetworkModel: agents 0 and 1 must be distinct");
  }
}

// Basis: h = all rotations, x0, y0, x1; m = y1, x2, y2, ...
Eigen::MatrixXd network_basis(int n) {
  const int nG = 3 * n;
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(nG, nG);
  int col = 0;
  for (int i = 0; i < n; ++i) B(3 * i, col++) = 1.0;
  B(1, col++) = 1.0;
  B(2, col++) = 1.0;
  B(4, col++) = 1.0;
  B(5, col++) = 1.0;
  for (int i = 2; i < n; ++i) {
    B(3 * i + 1, col++) = 1.0;
    B(3 * i + 2, col++) = 1.0;
  }
  return B;
}

// Rigid alignment of the estimate onto the reference: agent 0 coincides and
// agent 1 differs only along y (relative to the reference frame); every
// orientation is set to the reference orientation.
GroupElement rigid_lift(const GroupElement& g_ref, const GroupElement& g_est) {
  const auto p = NetworkModel::positions_of(g_ref);
  const auto q = NetworkModel::positions_of(g_est);
  const Eigen::Vector2d u = q[1] - q[0];
  const Eigen::Vector2d w = p[1] - p[0];
  const double un = u.norm();
  if (un < 1e-12 || std::abs(w.x()) > un) {
    throw Error(ErrorCode::LiftFailure, "network lift: estimate cannot be aligned with the reference");
  }
  const double target = (w.y() >= 0.0 ? 1.0 : -1.0) * std::acos(std::clamp(w.x() / un, -1.0, 1.0));
  const Eigen::Matrix2d Q = rot2(target - std::atan2(u.y(), u.x()));
  const Eigen::Vector2d t = p[0] - Q * q[0];

  Eigen::MatrixXd out = g_ref.matrix();
  for (std::size_t i = 0; i < p.size(); ++i) {
    out.block<2, 1>(3 * static_cast<Eigen::Index>(i), 3 * static_cast<Eigen::Index>(i) + 2) =
        Q * q[i] + t;
  }
  return GroupElement::unchecked(g_ref.group(), std::move(out));
}

}  // namespace

NetworkModel::NetworkModel(std::vector<Eigen::Vector2d> positions, std::vector<Edge> edges,
                           bool canonicalize)
    : positions_(std::move(positions)), edges_(std::move(edges)) {
  validate_graph(positions_, edges_);
  if (canonicalize) positions_ = canonical_positions(std::move(positions_));
  const int n = n_agents();
  const Group G = GroupDescriptor::power(GroupDescriptor::se2(), n);
  structure_.emplace(G, CosetSide::RightCoset_HmodG, n + 3, network_basis(n),
                     Eigen::MatrixXd::Identity(3 * n, 3 * n), SubgroupSampler{}, rigid_lift);
}

NetworkModel NetworkModel::from_json(const std::string& text, bool canonicalize) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Config, std::string("NetworkModel: invalid JSON: ") + e.what());
  }
  std::vector<Eigen::Vector2d> positions;
  std::vector<Edge> edges;
  try {
    for (const auto& p : doc.at("positions")) {
      if (p.size() != 2) throw Error(ErrorCode::Config, "NetworkModel: positions must be [x, y]");
      positions.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
    }
    for (const auto& e : doc.at("edges")) {
      if (e.size() != 3) throw Error(ErrorCode::Config, "NetworkModel: edges must be [i, j, sigma]");
      edges.push_back({e.at(0).get<int>(), e.at(1).get<int>(), e.at(2).get<double>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Config, std::string("NetworkModel: malformed graph: ") + e.what());
  }
  return NetworkModel(std::move(positions), std::move(edges), canonicalize);
}

NetworkModel NetworkModel::from_json_file(const std::string& path, bool canonicalize) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Config, "NetworkModel: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str(), canonicalize);
}

bool NetworkModel::generic() const {
  const Eigen::Vector2d w = positions_[1] - positions_[0];
  return w.norm() > 1e-12 && std::abs(w.x()) <= 1e-12 * (1.0 + w.norm()) && w.y() > 0.0;
}

GroupElement NetworkModel::configuration(const std::vector<Eigen::Vector2d>& positions) const {
  const int n = n_agents();
  if (static_cast<int>(positions.size()) != n) {
    throw Error(ErrorCode::Shape, "NetworkModel: wrong number of positions");
  }
  Eigen::MatrixXd g = Eigen::MatrixXd::Identity(3 * n, 3 * n);
  for (int i = 0; i < n; ++i) g.block<2, 1>(3 * i, 3 * i + 2) = positions[static_cast<std::size_t>(i)];
  return GroupElement(group(), std::move(g));
}

GroupElement NetworkModel::true_configuration() const { return configuration(positions_); }

std::vector<Eigen::Vector2d> NetworkModel::positions_of(const GroupElement& g) {
  const int n = g.group()->matrix_dim() / 3;
  std::vector<Eigen::Vector2d> p(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) p[static_cast<std::size_t>(i)] = g.matrix().block<2, 1>(3 * i, 3 * i + 2);
  return p;
}

Eigen::VectorXd NetworkModel::mean(const GroupElement& g) const {
  const auto p = positions_of(g);
  Eigen::VectorXd mu(static_cast<Eigen::Index>(edges_.size()));
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    mu(static_cast<Eigen::Index>(e)) =
        0.5 * (p[static_cast<std::size_t>(edges_[e].i)] - p[static_cast<std::size_t>(edges_[e].j)])
                  .squaredNorm();
  }
  return mu;
}

Observation NetworkModel::sample(const GroupElement& g, RandomStream& rng) const {
  Eigen::VectorXd x = mean(g);
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    x(static_cast<Eigen::Index>(e)) += edges_[e].sigma * rng.normal();
  }
  return x;
}

double NetworkModel::log_likelihood(const Observation& x, const GroupElement& g) const {
  if (x.size() != static_cast<Eigen::Index>(edges_.size())) {
    throw Error(ErrorCode::Shape, "NetworkModel: measurement vector does not match the edge list");
  }
  const Eigen::VectorXd r = x - mean(g);
  double ll = 0.0;
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    const double s = edges_[e].sigma;
    ll -= r(static_cast<Eigen::Index>(e)) * r(static_cast<Eigen::Index>(e)) / (2.0 * s * s);
  }
  return ll;
}

// Row e: derivative of |p_i - p_j|^2 / 2 along each direction under the
// right-invariant flow p_k -> p_k + t (omega_k J p_k + v_k).
Eigen::MatrixXd NetworkModel::edge_jacobian(const GroupElement& g,
                                            const Eigen::MatrixXd& directions) const {
  const auto p = positions_of(g);
  Eigen::MatrixXd C(static_cast<Eigen::Index>(edges_.size()), directions.cols());
  for (Eigen::Index c = 0; c < directions.cols(); ++c) {
    const auto d = directions.col(c);
    for (std::size_t e = 0; e < edges_.size(); ++e) {
      const auto i = static_cast<std::size_t>(edges_[e].i), j = static_cast<std::size_t>(edges_[e].j);
      const Eigen::Index oi = 3 * static_cast<Eigen::Index>(i), oj = 3 * static_cast<Eigen::Index>(j);
      const Eigen::Vector2d ui = d(oi) * (kJ * p[i]) + d.segment<2>(oi + 1);
      const Eigen::Vector2d uj = d(oj) * (kJ * p[j]) + d.segment<2>(oj + 1);
      C(static_cast<Eigen::Index>(e), c) = (p[i] - p[j]).dot(ui - uj);
    }
  }
  return C;
}

Eigen::VectorXd NetworkModel::native_gradient(const Observation& x, const GroupElement& g,
                                              const Eigen::MatrixXd& directions) const {
  const Eigen::MatrixXd C = edge_jacobian(g, directions);
  Eigen::VectorXd w = x - mean(g);
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    w(static_cast<Eigen::Index>(e)) /= edges_[e].sigma * edges_[e].sigma;
  }
  return C.transpose() * w;
}

Eigen::MatrixXd NetworkModel::native_fim(const GroupElement& g,
                                         const Eigen::MatrixXd& directions) const {
  Eigen::MatrixXd C = edge_jacobian(g, directions);
  for (std::size_t e = 0; e < edges_.size(); ++e) C.row(static_cast<Eigen::Index>(e)) /= edges_[e].sigma;
  return C.transpose() * C;
}

GroupElement NetworkModel::apply_random_symmetry(const GroupElement& g, RandomStream& rng) const {
  const double theta = rng.uniform(-std::numbers::pi, std::numbers::pi);
  const Eigen::Vector2d t(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
  Eigen::Matrix3d rigid = Eigen::Matrix3d::Identity();
  rigid.topLeftCorner<2, 2>() = rot2(theta);
  rigid.topRightCorner<2, 1>() = t;
  Eigen::MatrixXd out = g.matrix();
  for (int i = 0; i < n_agents(); ++i) {
    Eigen::Matrix3d spin = Eigen::Matrix3d::Identity();
    spin.topLeftCorner<2, 2>() = rot2(rng.uniform(-std::numbers::pi, std::numbers::pi));
    out.block<3, 3>(3 * i, 3 * i) = rigid * out.block<3, 3>(3 * i, 3 * i) * spin;
  }
  return GroupElement::unchecked(g.group(), std::move(out));
}

Eigen::MatrixXd NetworkModel::rigidity_matrix(const std::vector<Eigen::Vector2d>& positions,
                                              const std::vector<Edge>& edges) {
  const Eigen::Index n = static_cast<Eigen::Index>(positions.size());
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  for (const auto& e : edges) {
    const Eigen::Vector2d d =
        positions[static_cast<std::size_t>(e.i)] - positions[static_cast<std::size_t>(e.j)];
    const Eigen::Matrix2d block = d * d.transpose() / (e.sigma * e.sigma);
    S.block<2, 2>(2 * e.i, 2 * e.i) += block;
    S.block<2, 2>(2 * e.j, 2 * e.j) += block;
    S.block<2, 2>(2 * e.i, 2 * e.j) -= block;
    S.block<2, 2>(2 * e.j, 2 * e.i) -= block;
  }
  return S;
}

FimMatrix NetworkModel::network_fim(const std::vector<Eigen::Vector2d>& positions,
                                    const std::vector<Edge>& edges, const ReductiveStructure& s) {
  const Eigen::Index n = static_cast<Eigen::Index>(positions.size());
  const Eigen::MatrixXd S = rigidity_matrix(positions, edges);
  const Eigen::Index target = 2 * n - 3;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S, Eigen::EigenvaluesOnly);
  const double top = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
  const Eigen::Index rank = (es.eigenvalues().array() > 1e-9 * top).count();
  if (rank < target) {
    throw Error(ErrorCode::DegenerateModel,
                "network_fim: graph is not rigid: rigidity matrix rank " + std::to_string(rank) +
                    " < " + std::to_string(target) + " (rank gap " +
                    std::to_string(target - rank) + ")");
  }
  Eigen::MatrixXd F = S.bottomRightCorner(target, target);
  if (condition_number(F) > kDegenerateCondition) {
    throw Error(ErrorCode::DegenerateModel,
                "network_fim: reduced FIM is singular; the configuration is not generic");
  }
  Eigen::MatrixXd g = Eigen::MatrixXd::Identity(3 * n, 3 * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    g.block<2, 1>(3 * i, 3 * i + 2) = positions[static_cast<std::size_t>(i)];
  }
  return FimMatrix{FimFrame::Reduced, GroupElement::unchecked(s.group(), std::move(g)),
                   std::move(F), FimMethod::Analytic, 0};
}

}  // namespace homcrb
