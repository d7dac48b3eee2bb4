// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <fmt/core.h>

#include "homcrb/crb.hpp"
#include "homcrb/error.hpp"
#include "homcrb/fisher.hpp"
#include "homcrb/harness.hpp"
#include "homcrb/homspace.hpp"
#include "homcrb/liegroup.hpp"
#include "homcrb/models.hpp"
#include "homcrb/scoring.hpp"

using namespace homcrb;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

double spectral(const Eigen::MatrixXd& A) {
  return Eigen::JacobiSVD<Eigen::MatrixXd>(A).singularValues()(0);
}

std::string config_path(const std::string& name) { return std::string(HOMCRB_CONFIG_DIR) + "/" + name; }

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) pass = false;
    if (!detail.empty()) detail += "; ";
    detail += (ok ? "" : "FAILED ") + what;
  }
  void info(const std::string& what) {
    if (!detail.empty()) detail += "; ";
    detail += what;
  }
};

GroupElement reference_pose() {
  return se3_pose(exp(GroupDescriptor::so3(), Eigen::Vector3d(0, 0, 1)).matrix(),
                  Eigen::Vector3d(0.5, -0.5, 0.25));
}

LandmarkModel two_landmarks(double sigma = 1.0) {
  return LandmarkModel({{1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}}, sigma);
}

// ---------------------------------------------------------------------------

Outcome criterion_psi() {
  Outcome o;
  const auto t0 = Clock::now();
  RandomStream rng(101);
  double worst = 0.0;
  for (const Group& G : {GroupDescriptor::so3(), GroupDescriptor::se2(), GroupDescriptor::se3(),
                         GroupDescriptor::gl_plus(3)}) {
    const int n = G->algebra_dim();
    for (int k = 0; k < 100; ++k) {
      Eigen::VectorXd x = rng.normal_vector(n);
      x *= rng.uniform(0.0, 0.5) / x.norm();
      const Eigen::VectorXd y = rng.normal_vector(n).normalized();
      const GroupElement ex = exp(G, x);
      const double h = 1e-5;
      const Eigen::VectorXd fd =
          (log(ex * exp(G, h * y)).coords - log(ex * exp(G, -h * y)).coords) / (2.0 * h);
      const Eigen::VectorXd psi = psi_matrix(AlgebraVector(G, x)).matrix * y;
      worst = std::max(worst, (psi - fd).norm());
    }
  }
  const double t = seconds_since(t0);
  o.require(worst <= 1e-5, fmt::format("max |Psi y - FD| = {:.2e} over 4 groups x 100", worst));
  o.require(t < 5.0, fmt::format("{:.2f} s", t));
  return o;
}

Outcome criterion_fim_properties() {
  Outcome o;
  const auto t0 = Clock::now();
  const LandmarkModel model = two_landmarks();
  const ReductiveStructure& s = model.structure();
  RandomStream rng(102);
  const GroupElement g = reference_pose();
  FimPropertyReport worst;
  for (int k = 0; k < 20; ++k) {
    const FimPropertyReport r =
        verify_fim_properties(model, g, s.sample_subgroup(rng), FimMethod::Analytic, 0, rng);
    worst.block_form = std::max(worst.block_form, r.block_form);
    worst.fiber_constancy = std::max(worst.fiber_constancy, r.fiber_constancy);
    worst.adjoint_relation = std::max(worst.adjoint_relation, r.adjoint_relation);
    worst.fiber_relation = std::max(worst.fiber_relation, r.fiber_relation);
  }
  // The side frame on H\G is the right frame; its h rows are the vanishing
  // block, the left frame is the one constant along the fiber.
  const FimMatrix FR = fim(model, g, FimFrame::Right, FimMethod::Analytic, 0, rng);
  const double h_block = FR.matrix.topRows(s.n_H()).cwiseAbs().maxCoeff();
  // Zero up to double rounding of the transported basis.
  o.require(h_block <= 1e-12, fmt::format("side-frame h-block max {:.1e}", h_block));
  o.require(worst.block_form <= 1e-9, fmt::format("block form {:.1e}", worst.block_form));
  o.require(worst.fiber_constancy <= 1e-9, fmt::format("fiber constancy {:.1e}", worst.fiber_constancy));
  o.require(worst.adjoint_relation <= 1e-9, fmt::format("adjoint relation {:.1e}", worst.adjoint_relation));
  o.require(worst.fiber_relation <= 1e-9, fmt::format("fiber transport {:.1e}", worst.fiber_relation));
  const FimPropertyReport mc = verify_fim_properties(model, g, s.sample_subgroup(rng),
                                                     FimMethod::MonteCarloGradient, kDefaultFimSamples, rng);
  const double mc_worst =
      std::max({mc.block_form, mc.fiber_constancy, mc.adjoint_relation, mc.fiber_relation});
  o.require(mc_worst <= 0.05, fmt::format("Monte-Carlo (1e5) worst {:.3f}", mc_worst));
  const FimMatrix a = fim(model, g, FimFrame::Left, FimMethod::Analytic, 0, rng);
  const FimMatrix m = fim(model, g, FimFrame::Left, FimMethod::MonteCarloGradient, kDefaultFimSamples, rng);
  const double gap = spectral(a.matrix - m.matrix);
  o.require(gap <= 0.05, fmt::format("MC vs analytic left FIM {:.3f}", gap));
  const double t = seconds_since(t0);
  o.require(t < 60.0, fmt::format("{:.2f} s", t));
  return o;
}

Outcome criterion_block_structure(const ExperimentReport& campaign) {
  Outcome o;
  for (const auto& s : campaign.summaries) {
    o.require(s.h_component_max <= 1e-8, fmt::format("m={} max h-component {:.1e}", s.m, s.h_component_max));
    o.require(s.h_block_max_z <= 3.0, fmt::format("m={} h-block {:.1e} SE", s.m, s.h_block_max_z));
  }
  return o;
}

Outcome criterion_variance_ratios(const ExperimentReport& r, double runtime) {
  Outcome o;
  const auto& S = r.summaries;
  if (S.size() != 3) {
    o.require(false, "expected three m values");
    return o;
  }
  bool strict = true;
  for (std::size_t k = 0; k < S.size(); ++k) {
    const double se = S[k].coset_var_se / S[k].crb_trace;
    o.info(fmt::format("m={}: coset/CRB {:.3f} (se {:.3f}), G/CRB {:.2f}, failed {}", S[k].m,
                       S[k].coset_ratio(), se, S[k].group_ratio(), S[k].n_failed));
    if (k > 0) {
      const double prev = std::abs(S[k - 1].coset_ratio() - 1.0);
      const double cur = std::abs(S[k].coset_ratio() - 1.0);
      const double se_prev = S[k - 1].coset_var_se / S[k - 1].crb_trace;
      // Monotone up to Monte-Carlo noise at 2000 trials.
      o.require(cur <= prev + 2.0 * std::hypot(se, se_prev),
                fmt::format("|r-1| m={} -> m={}: {:.3f} -> {:.3f}", S[k - 1].m, S[k].m, prev, cur));
      if (cur > prev) strict = false;
      o.require(S[k].group_ratio() >= S[k - 1].group_ratio(),
                fmt::format("G ratio non-decreasing at m={}", S[k].m));
    }
    o.require(S[k].group_ratio() > 1.5, fmt::format("G ratio > 1.5 at m={}", S[k].m));
  }
  o.info(fmt::format("strictly monotone |r-1|: {}", strict ? "yes" : "no"));
  o.require(S.back().coset_ratio() >= 0.9 && S.back().coset_ratio() <= 1.1, "ratio in [0.9, 1.1] at m=1000");
  o.require(runtime < 600.0, fmt::format("{:.1f} s single-threaded", runtime));
  return o;
}

Outcome criterion_scoring_speed() {
  Outcome o;
  const LandmarkModel model = two_landmarks();
  const GroupElement e = GroupElement::identity(model.group());
  for (int m : {100, 1000, 10000}) {
    RandomStream rng(103, {static_cast<std::uint64_t>(m)});
    const auto xs = model.sample(reference_pose(), m, rng);
    const ScoringTrace f = fisher_scoring(model, xs, e);
    const double gn = f.gradient_norms.back();
    o.require(f.converged && gn <= 1e-8 && f.iterations_used <= 10,
              fmt::format("m={}: scoring {} it, |grad| {:.1e}", m, f.iterations_used, gn));
    for (double step : {0.01, 0.1, 1.0}) {
      GradientAscentOptions opts;
      opts.step0 = step;
      opts.gradient_tolerance = 1e-8;
      opts.max_iterations = 2000;
      std::string what;
      bool slower = true;
      try {
        const ScoringTrace a = gradient_ascent(model, xs, e, opts);
        slower = !a.converged || a.iterations_used > f.iterations_used;
        what = a.converged ? fmt::format("{} it", a.iterations_used) : "no convergence";
      } catch (const Error& err) {
        what = std::string(to_string(err.code()));
      }
      o.require(slower, fmt::format("ascent step {}: {}", step, what));
    }
  }
  return o;
}

Outcome criterion_multistart() {
  Outcome o;
  const ExperimentConfig c = ExperimentConfig::from_file(config_path("landmark_multistart.json"));
  const ExperimentReport r = run_landmark_experiment(c);
  for (const auto& s : r.summaries) {
    o.require(s.n_failed == 0, fmt::format("m={} failed starts {}", s.m, s.n_failed));
    o.require(s.multistart_coset_spread <= 1e-6,
              fmt::format("m={} coset spread {:.1e}", s.m, s.multistart_coset_spread));
    o.require(s.multistart_group_spread >= 1e-2,
              fmt::format("m={} min G-distance {:.2f}", s.m, s.multistart_group_spread));
  }
  return o;
}

Outcome criterion_fiber_invariance() {
  Outcome o;
  const LandmarkModel model = two_landmarks();
  const ReductiveStructure& s = model.structure();
  RandomStream rng(104);
  const GroupElement g = reference_pose();
  const double base = variance_bound(fim(model, g, FimFrame::Reduced, FimMethod::Analytic, 0, rng));
  double worst = 0.0;
  std::vector<GroupElement> hs;
  for (int k = 0; k < 20; ++k) {
    hs.push_back(s.sample_subgroup(rng));
    const GroupElement hg = hs.back() * g;
    worst = std::max(worst, std::abs(variance_bound(fim(model, hg, FimFrame::Reduced,
                                                        FimMethod::Analytic, 0, rng)) - base));
  }
  o.require(worst <= 1e-8, fmt::format("max |tr F(g)^-1 - tr F(hg)^-1| = {:.1e}", worst));

  // Shared trials: the same data are re-estimated with g and hg as truth.
  const int trials = 500, m = 100;
  std::vector<GroupElement> est_g, est_h;
  const GroupElement hg = hs.front() * g;
  for (int t = 0; t < trials; ++t) {
    RandomStream tr(105, {static_cast<std::uint64_t>(t)});
    const auto xs = model.sample(g, m, tr);
    est_g.push_back(mle(model, xs, g));
    est_h.push_back(mle(model, xs, hg));
  }
  const EstimatorStats a = estimator_stats(g, est_g, s);
  const EstimatorStats b = estimator_stats(hg, est_h, s);
  const double se = std::hypot(a.variance_on_coset_se, b.variance_on_coset_se);
  o.require(std::abs(a.variance_on_coset - b.variance_on_coset) <= 3.0 * se,
            fmt::format("coset variance {:.5f} vs {:.5f} (3 SE = {:.5f})", a.variance_on_coset,
                        b.variance_on_coset, 3.0 * se));
  return o;
}

Outcome criterion_sphere() {
  Outcome o;
  const ReductiveStructure s2 = sphere_structure();
  RandomStream rng(106);
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const GroupElement r = GroupElement::unchecked(s2.group(), random_rotation(rng));
    const double theta = rng.uniform(0.0, 2.0);
    const double phi = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const GroupElement est = r * exp(s2.group(), Eigen::Vector3d(theta * std::cos(phi), theta * std::sin(phi), 0)) *
                             s2.sample_subgroup(rng);
    const auto [a, b] = sphere_riemannian_check(r, est, s2);
    worst = std::max(worst, (a - b).norm());
  }
  o.require(worst <= 1e-10, fmt::format("max gap {:.1e} over 100 pairs", worst));
  return o;
}

Outcome criterion_network() {
  Outcome o;
  const std::vector<Eigen::Vector2d> p{{0, 0}, {0, 1}, {1, 0.4}, {-0.8, 0.6}};
  const std::vector<Edge> edges{{0, 1, 1.0}, {1, 2, 1.0}, {0, 2, 1.0}, {2, 3, 1.0}, {0, 3, 1.0}, {1, 3, 1.0}};
  const NetworkModel model(p, edges);
  RandomStream rng(107);
  const GroupElement g = model.true_configuration();
  const FimMatrix rigid = model.network_fim();
  const FimMatrix analytic = fim(model, g, FimFrame::Reduced, FimMethod::Analytic, 0, rng);
  const double same = (rigid.matrix - analytic.matrix).cwiseAbs().maxCoeff();
  o.require(same <= 1e-12, fmt::format("edge-Jacobian FIM vs rigidity block {:.1e}", same));
  const FimMatrix hess = fim_hessian(model, g, FimFrame::Reduced, kDefaultFimSamples, rng);
  const double gap = spectral(rigid.matrix - hess.matrix);
  o.require(gap <= 0.05, fmt::format("rigidity block vs Monte-Carlo Hessian {:.3f}", gap));

  int violations = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 3 + trial % 6;
    std::vector<Eigen::Vector2d> q;
    for (int i = 0; i < n; ++i) q.emplace_back(rng.normal_vector(2));
    std::vector<Edge> es;
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        if (rng.uniform(0.0, 1.0) < 0.5) es.push_back({i, j, 1.0});
      }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(NetworkModel::rigidity_matrix(q, es));
    const double top = std::max(1.0, eig.eigenvalues().cwiseAbs().maxCoeff());
    if ((eig.eigenvalues().array() > 1e-9 * top).count() > 2 * n - 3) ++violations;
  }
  o.require(violations == 0, fmt::format("rank bound violated on {}/50 random graphs", violations));

  bool refused = false;
  std::string message;
  try {
    run_network_experiment(ExperimentConfig::from_file(config_path("network_flex.json")));
  } catch (const Error& e) {
    refused = e.code() == ErrorCode::DegenerateModel;
    message = e.what();
  }
  o.require(refused, "flex graph refused: " + message);
  return o;
}

Outcome criterion_spd() {
  Outcome o;
  const ExperimentConfig c = ExperimentConfig::from_file(config_path("spd.json"));
  const ExperimentReport r = run_spd_experiment(c);
  for (const auto& s : r.summaries) {
    o.require(s.m == 500 && s.n_used == 100 && s.n_failed == 0,
              fmt::format("m={} trials {} failed {}", s.m, s.n_used, s.n_failed));
    o.require(s.max_value <= 1e-6, fmt::format("max Frobenius gap {:.1e}", s.max_value));
    o.require(s.max_iterations <= 50, fmt::format("max iterations {}", s.max_iterations));
  }
  return o;
}

Outcome criterion_efficiency() {
  Outcome o;
  const GaussianMeanModel gm(1, 1.0);
  const GroupElement g = gm.element(Eigen::VectorXd::Constant(1, 0.3));
  RandomStream rng(108);
  std::vector<std::vector<Observation>> obs;
  std::vector<GroupElement> est;
  for (int t = 0; t < 500; ++t) {
    obs.push_back(gm.sample(g, 20, rng));
    est.push_back(mle(gm, obs.back(), gm.element(Eigen::VectorXd::Zero(1))));
  }
  const EfficiencyResult scalar = efficiency_residual(gm, obs, g, est, gm.structure(), 1.0);
  o.require(scalar.residual <= 1e-10, fmt::format("Gaussian residual {:.1e}", scalar.residual));

  const LandmarkModel model = two_landmarks();
  const GroupElement pose = reference_pose();
  obs.clear();
  est.clear();
  for (int t = 0; t < 100; ++t) {
    RandomStream tr(109, {static_cast<std::uint64_t>(t)});
    obs.push_back(model.sample(pose, 10000, tr));
    est.push_back(mle(model, obs.back(), pose));
  }
  const EfficiencyResult lm = efficiency_residual(model, obs, pose, est, model.structure());
  o.require(lm.residual <= 0.1 * lm.mean_error_norm,
            fmt::format("landmark residual {:.2e} vs 10% of {:.2e} (c = {:.3f})", lm.residual,
                        lm.mean_error_norm, lm.c));
  return o;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome criterion_determinism() {
  Outcome o;
  const std::filesystem::path dir = std::filesystem::temp_directory_path() / "homcrb_acceptance";
  std::filesystem::create_directories(dir);
  const std::pair<const char*, const char*> runs[] = {{"landmark", "landmark_variance.json"},
                                                      {"landmark", "landmark_multistart.json"},
                                                      {"network", "network_triangle.json"},
                                                      {"spd", "spd.json"},
                                                      {"crb-report", "crb_report.json"},
                                                      {"check", "check.json"}};
  for (const auto& [cmd, cfg] : runs) {
    std::string outputs[2];
    bool ran = true;
    for (int k = 0; k < 2; ++k) {
      const std::string out = (dir / fmt::format("{}_{}_{}.csv", cmd, cfg, k)).string();
      const std::string line = fmt::format("{} {} --config {} --out {} --workers 2 2>/dev/null", HOMCRB_CLI,
                                           cmd, config_path(cfg), out);
      if (std::system(line.c_str()) != 0) ran = false;
      outputs[k] = slurp(out);
    }
    o.require(ran && !outputs[0].empty() && outputs[0] == outputs[1],
              fmt::format("{} {}: {} bytes", cmd, cfg, outputs[0].size()));
  }
  return o;
}

}  // namespace

int main() {
  int failures = 0;
  auto report = [&](int n, const std::string& title, const std::function<Outcome()>& fn) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    if (!o.pass) ++failures;
    std::cout << (o.pass ? "[PASS]" : "[FAIL]") << " criterion " << n << ": " << title << " -- "
              << o.detail << std::endl;
  };

  ExperimentReport campaign;
  double campaign_runtime = 0.0;
  std::string campaign_error;
  try {
    ExperimentConfig c = ExperimentConfig::from_file(config_path("landmark_variance.json"));
    c.workers = 1;
    const auto t0 = Clock::now();
    campaign = run_landmark_experiment(c);
    campaign_runtime = seconds_since(t0);
  } catch (const std::exception& e) {
    campaign_error = e.what();
  }
  auto with_campaign = [&](const std::function<Outcome()>& fn) {
    return [&, fn] {
      if (!campaign_error.empty()) throw std::runtime_error("landmark campaign: " + campaign_error);
      return fn();
    };
  };

  report(1, "Psi matrix vs finite differences", criterion_psi);
  report(2, "FIM properties on the landmark model", criterion_fim_properties);
  report(3, "MLE error block structure", with_campaign([&] { return criterion_block_structure(campaign); }));
  report(4, "landmark variance vs bound", with_campaign([&] { return criterion_variance_ratios(campaign, campaign_runtime); }));
  report(5, "Fisher scoring vs gradient ascent", criterion_scoring_speed);
  report(6, "multistart MLEs agree on the coset space", criterion_multistart);
  report(7, "bound constant along the fiber", criterion_fiber_invariance);
  report(8, "sphere coset error vs Riemannian log", criterion_sphere);
  report(9, "sensor network FIM and rigidity", criterion_network);
  report(10, "SPD scoring reaches the second moment", criterion_spd);
  report(11, "efficiency residual", criterion_efficiency);
  report(12, "byte-identical CLI re-runs", criterion_determinism);

  std::cout << (12 - failures) << "/12 criteria passed" << std::endl;
  return failures == 0 ? 0 : 1;
}
