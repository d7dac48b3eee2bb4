#include "homcrb/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>

#include <Eigen/Dense>
#include <json.hpp>

#include "homcrb/crb.hpp"
#include "homcrb/error.hpp"
#include "homcrb/fisher.hpp"
#include "homcrb/log.hpp"
#include "homcrb/parallel.hpp"

namespace homcrb {

using nlohmann::json;

namespace {

const std::set<std::string> kKnownSuites{"fim-properties", "fiber-invariance", "block-structure", "psi", "sphere",
                                         "gradient"};

std::string fim_mode_name(FimMode mode) {
  switch (mode) {
    case FimMode::Analytic: return "analytic";
    case FimMode::MonteCarlo: return "monte-carlo";
    case FimMode::FrozenAtInitial: return "frozen";
  }
  return "analytic";
}

FimMode fim_mode_from(const std::string& name) {
  if (name == "analytic") return FimMode::Analytic;
  if (name == "monte-carlo") return FimMode::MonteCarlo;
  if (name == "frozen") return FimMode::FrozenAtInitial;
  throw Error(ErrorCode::Config, "config: unknown fim_mode '" + name + "'");
}

json vec_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

Eigen::VectorXd vec_from(const json& j, Eigen::Index n, const std::string& key) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != n) {
    throw Error(ErrorCode::Config,
                "config: '" + key + "' must be an array of " + std::to_string(n) + " numbers");
  }
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = j.at(static_cast<std::size_t>(i)).get<double>();
  return v;
}

json to_json(const ExperimentConfig& c) {
  json j;
  j["experiment"] = to_string(c.experiment);
  json lm = json::array();
  for (const auto& a : c.landmarks) lm.push_back(vec_json(a));
  j["landmarks"] = lm;
  j["landmark_sigma"] = c.landmark_sigma;
  j["true_rotation"] = vec_json(c.true_rotation);
  j["true_position"] = vec_json(c.true_position);
  j["n_starts"] = c.n_starts;
  json pos = json::array();
  for (const auto& p : c.positions) pos.push_back(vec_json(p));
  j["positions"] = pos;
  json edges = json::array();
  for (const auto& e : c.edges) edges.push_back(json::array({e.i, e.j, e.sigma}));
  j["edges"] = edges;
  j["graph_file"] = c.graph_file;
  j["network_sigma"] = c.network_sigma;
  j["dimension"] = c.dimension;
  json tf = json::array();
  for (Eigen::Index r = 0; r < c.true_factor.rows(); ++r) {
    tf.push_back(vec_json(c.true_factor.row(r).transpose()));
  }
  j["true_factor"] = tf;
  j["degenerate_data"] = c.degenerate_data;
  j["crb_model"] = c.crb_model;
  j["suites"] = c.suites;
  j["corrupt_inner_product"] = c.corrupt_inner_product;
  j["property_trials"] = c.property_trials;
  j["m_values"] = c.m_values;
  j["n_trials"] = c.n_trials;
  j["seed"] = c.seed;
  j["init"] = c.init == InitKind::Identity ? "identity" : "truth";
  j["init_fiber_offset"] = c.init_fiber_offset;
  j["scoring"] = {{"max_iterations", c.scoring.max_iterations},
                  {"tolerance", c.scoring.gradient_tolerance},
                  {"fim_mode", fim_mode_name(c.scoring.fim_mode)},
                  {"step_scale", c.scoring.step_scale},
                  {"fim_samples", c.scoring.fim_samples},
                  {"fim_seed", c.scoring.fim_seed}};
  return j;
}

void parse_into(ExperimentConfig& c, const json& j) {
  static const std::set<std::string> known{
      "experiment", "landmarks",     "landmark_sigma",  "true_rotation",
      "true_position", "n_starts",   "positions",       "edges",
      "graph_file", "network_sigma", "dimension",       "true_factor",
      "degenerate_data", "crb_model", "suites",         "corrupt_inner_product",
      "property_trials", "m_values", "n_trials",        "seed",
      "init",       "init_fiber_offset", "scoring",       "output_path",     "workers"};
  if (!j.is_object()) throw Error(ErrorCode::Config, "config: top level must be an object");
  for (const auto& [key, _] : j.items()) {
    if (!known.count(key)) throw Error(ErrorCode::Config, "config: unknown key '" + key + "'");
  }
  if (j.contains("experiment")) {
    c.experiment = experiment_kind_from_string(j["experiment"].get<std::string>());
  }
  if (j.contains("landmarks")) {
    c.landmarks.clear();
    for (const auto& a : j["landmarks"]) c.landmarks.push_back(vec_from(a, 3, "landmarks"));
  }
  if (j.contains("landmark_sigma")) c.landmark_sigma = j["landmark_sigma"].get<double>();
  if (j.contains("true_rotation")) c.true_rotation = vec_from(j["true_rotation"], 3, "true_rotation");
  if (j.contains("true_position")) c.true_position = vec_from(j["true_position"], 3, "true_position");
  if (j.contains("n_starts")) c.n_starts = j["n_starts"].get<int>();
  if (j.contains("network_sigma")) c.network_sigma = j["network_sigma"].get<double>();
  if (j.contains("positions")) {
    c.positions.clear();
    for (const auto& p : j["positions"]) c.positions.push_back(vec_from(p, 2, "positions"));
  }
  if (j.contains("edges")) {
    c.edges.clear();
    for (const auto& e : j["edges"]) {
      if (!e.is_array() || (e.size() != 2 && e.size() != 3)) {
        throw Error(ErrorCode::Config, "config: edges must be [i, j] or [i, j, sigma]");
      }
      c.edges.push_back({e.at(0).get<int>(), e.at(1).get<int>(),
                         e.size() == 3 ? e.at(2).get<double>() : c.network_sigma});
    }
  }
  if (j.contains("graph_file")) c.graph_file = j["graph_file"].get<std::string>();
  if (j.contains("dimension")) c.dimension = j["dimension"].get<int>();
  if (j.contains("true_factor")) {
    const auto& rows = j["true_factor"];
    const auto n = static_cast<Eigen::Index>(rows.size());
    c.true_factor.resize(n, n);
    for (Eigen::Index r = 0; r < n; ++r) {
      c.true_factor.row(r) = vec_from(rows.at(static_cast<std::size_t>(r)), n, "true_factor").transpose();
    }
  }
  if (j.contains("degenerate_data")) c.degenerate_data = j["degenerate_data"].get<bool>();
  if (j.contains("crb_model")) c.crb_model = j["crb_model"].get<std::string>();
  if (j.contains("suites")) c.suites = j["suites"].get<std::vector<std::string>>();
  if (j.contains("corrupt_inner_product")) {
    c.corrupt_inner_product = j["corrupt_inner_product"].get<bool>();
  }
  if (j.contains("property_trials")) c.property_trials = j["property_trials"].get<int>();
  if (j.contains("m_values")) c.m_values = j["m_values"].get<std::vector<int>>();
  if (j.contains("n_trials")) c.n_trials = j["n_trials"].get<int>();
  if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("init")) {
    const auto name = j["init"].get<std::string>();
    if (name == "identity") c.init = InitKind::Identity;
    else if (name == "truth") c.init = InitKind::Truth;
    else throw Error(ErrorCode::Config, "config: init must be 'identity' or 'truth'");
  }
  if (j.contains("init_fiber_offset")) c.init_fiber_offset = j["init_fiber_offset"].get<double>();
  if (j.contains("scoring")) {
    const auto& s = j["scoring"];
    static const std::set<std::string> skeys{"max_iterations", "tolerance",   "fim_mode",
                                             "step_scale",     "fim_samples", "fim_seed"};
    for (const auto& [key, _] : s.items()) {
      if (!skeys.count(key)) throw Error(ErrorCode::Config, "config: unknown scoring key '" + key + "'");
    }
    if (s.contains("max_iterations")) c.scoring.max_iterations = s["max_iterations"].get<int>();
    if (s.contains("tolerance")) c.scoring.gradient_tolerance = s["tolerance"].get<double>();
    if (s.contains("fim_mode")) c.scoring.fim_mode = fim_mode_from(s["fim_mode"].get<std::string>());
    if (s.contains("step_scale")) c.scoring.step_scale = s["step_scale"].get<double>();
    if (s.contains("fim_samples")) c.scoring.fim_samples = s["fim_samples"].get<int>();
    if (s.contains("fim_seed")) c.scoring.fim_seed = s["fim_seed"].get<std::uint64_t>();
  }
  if (j.contains("output_path")) c.output_path = j["output_path"].get<std::string>();
  if (j.contains("workers")) c.workers = j["workers"].get<int>();
}

// ---------------------------------------------------------------------------
// Monte-Carlo campaigns

struct TrialResult {
  bool ok = false;
  std::string status;
  double coset_err2 = 0.0;
  double group_err2 = 0.0;
  double loglik = 0.0;
  int iterations = 0;
  Eigen::VectorXd lifted;
  double spread_coset = 0.0;
  double spread_group = 0.0;
  std::optional<double> value;
};

std::string error_status(const Error& e) { return std::string(to_string(e.code())); }

// Starting points that differ by elements of H: exp(angle_k X_k) on the
// coset side, with X_k cycling through the h-basis.
std::vector<GroupElement> multistart_points(const ReductiveStructure& s, const GroupElement& g0,
                                            int n_starts) {
  static const double kAngles[] = {0.0, 1.0, -1.5, 2.2, -0.6, 0.4, -2.5, 1.7};
  std::vector<GroupElement> out{g0};
  for (int k = 1; k < n_starts; ++k) {
    if (s.n_H() == 0) {
      out.push_back(g0);
      continue;
    }
    const double angle = kAngles[k % 8] + 0.1 * (k / 8);
    const Eigen::VectorXd X = angle * s.h_basis().col((k - 1) % s.n_H());
    const GroupElement h = exp(s.group(), X);
    out.push_back(s.left_side() ? g0 * h : h * g0);
  }
  return out;
}

// Runs the per-(m, trial) body on the worker pool; slot order is fixed.
template <class Body>
std::vector<TrialResult> run_trials(const ExperimentConfig& c, Body&& body) {
  const int n_m = static_cast<int>(c.m_values.size());
  std::vector<TrialResult> results(static_cast<std::size_t>(n_m * c.n_trials));
  parallel_for(n_m * c.n_trials, c.workers, [&](int idx) {
    const int mi = idx / c.n_trials;
    const int t = idx % c.n_trials;
    RandomStream rng(c.seed, {static_cast<std::uint64_t>(mi), static_cast<std::uint64_t>(t)});
    TrialResult& r = results[static_cast<std::size_t>(idx)];
    try {
      body(c.m_values[static_cast<std::size_t>(mi)], rng, r);
    } catch (const Error& e) {
      r.ok = false;
      r.status = error_status(e);
    }
  });
  return results;
}

TrialResult estimate_trial(const StatisticalModel& model, const GroupElement& g_true,
                           const GroupElement& g_init, int m, int n_starts,
                           const ScoringOptions& opts, RandomStream& rng) {
  const ReductiveStructure& s = model.structure();
  const auto xs = model.sample(g_true, m, rng);
  TrialResult r;
  std::vector<GroupElement> estimates;
  for (const auto& start : multistart_points(s, g_init, n_starts)) {
    const ScoringTrace trace = fisher_scoring(model, xs, start, opts);
    if (!trace.converged) {
      r.status = "not_converged";
      r.iterations = trace.iterations_used;
      return r;
    }
    if (estimates.empty()) {
      r.iterations = trace.iterations_used;
      r.loglik = trace.logliks.back();
    }
    estimates.push_back(trace.final_iterate());
  }
  const GroupElement& g_hat = estimates.front();
  const CosetError ce = coset_error(g_true, g_hat, s);
  r.lifted = ce.eta_coords;
  r.coset_err2 = ce.eta_reduced.squaredNorm();
  r.group_err2 = group_error(g_true, g_hat, s).squaredNorm();
  if (estimates.size() > 1) {
    r.spread_group = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < estimates.size(); ++a) {
      for (std::size_t b = a + 1; b < estimates.size(); ++b) {
        r.spread_coset = std::max(r.spread_coset,
                                  coset_error(estimates[a], estimates[b], s).eta_reduced.norm());
        r.spread_group = std::min(
            r.spread_group, log(estimates[a].inverse() * estimates[b]).coords.norm());
      }
    }
  }
  r.ok = true;
  r.status = "ok";
  return r;
}

void push_trial_rows(ExperimentReport& report, const ExperimentConfig& c,
                     const std::vector<TrialResult>& results, const std::string& label) {
  for (std::size_t mi = 0; mi < c.m_values.size(); ++mi) {
    for (int t = 0; t < c.n_trials; ++t) {
      const TrialResult& r = results[mi * static_cast<std::size_t>(c.n_trials) + static_cast<std::size_t>(t)];
      ReportRow row;
      row.kind = "trial";
      row.label = label;
      row.m = c.m_values[mi];
      row.trial = t;
      row.status = r.status;
      row.iterations = r.iterations;
      if (r.ok) {
        row.coset_err2 = r.coset_err2;
        row.group_err2 = r.group_err2;
        row.final_loglik = r.loglik;
      }
      row.value = r.value;
      report.rows.push_back(std::move(row));
    }
  }
}

double h_block_z(const EstimatorStats& stats, int nH) {
  const Eigen::Index n = stats.covariance.rows();
  if (nH == 0 || n == nH) return 0.0;
  double ref = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = nH; i < n; ++i) {
    for (Eigen::Index j = nH; j < n; ++j) ref = std::min(ref, stats.covariance_se(i, j));
  }
  if (!(ref > 0.0)) ref = std::numeric_limits<double>::min();
  return stats.covariance.topRows(nH).cwiseAbs().maxCoeff() / ref;
}

void summarize_estimation(ExperimentReport& report, const ExperimentConfig& c,
                          const StatisticalModel& model, const GroupElement& g_true,
                          const Eigen::MatrixXd& fim_per_measurement,
                          const std::vector<TrialResult>& results, const std::string& label) {
  const ReductiveStructure& s = model.structure();
  for (std::size_t mi = 0; mi < c.m_values.size(); ++mi) {
    const int m = c.m_values[mi];
    SummaryStats sum;
    sum.m = m;
    std::vector<Eigen::VectorXd> lifted;
    std::vector<double> g2;
    for (int t = 0; t < c.n_trials; ++t) {
      const TrialResult& r = results[mi * static_cast<std::size_t>(c.n_trials) + static_cast<std::size_t>(t)];
      if (!r.ok) {
        ++sum.n_failed;
        continue;
      }
      lifted.push_back(r.lifted);
      g2.push_back(r.group_err2);
      sum.max_iterations = std::max(sum.max_iterations, r.iterations);
      sum.multistart_coset_spread = std::max(sum.multistart_coset_spread, r.spread_coset);
      sum.multistart_group_spread =
          sum.n_used == 0 ? r.spread_group : std::min(sum.multistart_group_spread, r.spread_group);
      if (s.n_H() > 0) {
        sum.h_component_max = std::max(sum.h_component_max, r.lifted.head(s.n_H()).cwiseAbs().maxCoeff());
      }
      ++sum.n_used;
    }
    sum.n_converged = sum.n_used;
    const FimMatrix Fm{FimFrame::Reduced, g_true, static_cast<double>(m) * fim_per_measurement,
                       FimMethod::Analytic, 0};
    sum.crb_trace = variance_bound(Fm);
    ReportRow row;
    row.kind = "summary";
    row.label = label;
    row.m = m;
    row.n_used = sum.n_used;
    row.n_failed = sum.n_failed;
    row.crb_trace = sum.crb_trace;
    if (sum.n_used >= 2) {
      const EstimatorStats stats = estimator_stats_from_errors(g_true, lifted, g2, s);
      sum.coset_var = stats.variance_on_coset;
      sum.coset_var_se = stats.variance_on_coset_se;
      sum.group_var = stats.variance_on_G;
      sum.group_var_se = stats.variance_on_G_se;
      sum.h_block_max_z = h_block_z(stats, s.n_H());
      sum.crb_third_order_trace = crb_third_order(Fm, delta_matrix(lifted, s)).bound_trace;
      row.status = "ok";
      row.coset_var = sum.coset_var;
      row.coset_var_se = sum.coset_var_se;
      row.group_var = sum.group_var;
      row.group_var_se = sum.group_var_se;
      row.crb_third_order_trace = sum.crb_third_order_trace;
      row.value = sum.coset_ratio();
    } else {
      row.status = "insufficient_trials";
    }
    log_info(label + " m=" + std::to_string(m) + ": coset/CRB=" + std::to_string(sum.coset_ratio()) +
             " G/CRB=" + std::to_string(sum.group_ratio()) + " failed=" + std::to_string(sum.n_failed));
    report.rows.push_back(std::move(row));
    report.summaries.push_back(sum);
  }
}

GroupElement initial_point(const ExperimentConfig& c, const ReductiveStructure& s,
                           const GroupElement& g_true) {
  const GroupElement g0 = c.init == InitKind::Truth ? g_true : GroupElement::identity(g_true.group());
  if (c.init_fiber_offset == 0.0 || s.n_H() == 0) return g0;
  const GroupElement h = exp(s.group(), c.init_fiber_offset * s.h_basis().col(0));
  return s.left_side() ? g0 * h : h * g0;
}

// ---------------------------------------------------------------------------
// Property suite

struct CheckSink {
  ExperimentReport& report;
  void add(const std::string& label, bool pass, double value) {
    ReportRow row;
    row.kind = "check";
    row.label = label;
    row.trial = report.n_checks;
    row.status = pass ? "pass" : "fail";
    row.value = value;
    report.rows.push_back(std::move(row));
    ++report.n_checks;
    if (!pass) ++report.n_failed_checks;
  }
};

Eigen::MatrixXd reduced_fim(const StatisticalModel& model, const GroupElement& g) {
  const ReductiveStructure& s = model.structure();
  return model.analytic_fim(g, side_frame(s), s.m_basis());
}

void suite_fim_properties(const ExperimentConfig& c, CheckSink& sink) {
  const LandmarkModel model = landmark_model(c);
  const GroupElement g = landmark_true_pose(c);
  RandomStream rng(c.seed, {0x1e1, 0});
  double worst = 0.0;
  for (int k = 0; k < 20; ++k) {
    const GroupElement h = model.structure().sample_subgroup(rng);
    const FimPropertyReport r = verify_fim_properties(model, g, h, FimMethod::Analytic, 0, rng);
    worst = std::max({worst, r.block_form, r.fiber_constancy, r.adjoint_relation, r.fiber_relation});
  }
  sink.add("fim-properties:analytic", worst <= 1e-9, worst);
  const GroupElement h = model.structure().sample_subgroup(rng);
  const FimPropertyReport r = verify_fim_properties(model, g, h, FimMethod::MonteCarloGradient,
                                                    kDefaultFimSamples, rng, c.workers);
  const double mc = std::max({r.block_form, r.fiber_constancy, r.adjoint_relation, r.fiber_relation});
  sink.add("fim-properties:monte-carlo", mc <= 0.05, mc);
}

void suite_fiber_invariance(const ExperimentConfig& c, CheckSink& sink) {
  const LandmarkModel model = landmark_model(c);
  ReductiveStructure s = model.structure();
  if (c.corrupt_inner_product) {
    Eigen::MatrixXd G = s.gram();
    const int n = s.n_G();
    for (int i = 0; i < n; ++i) G(i, i) += 0.5 * (i + 1);
    G(n - 1, n - 2) += 0.3;
    G(n - 2, n - 1) += 0.3;
    s = s.with_gram(G);
  }
  const GroupElement g = landmark_true_pose(c);
  const int nT = s.n_Theta();
  const Eigen::MatrixXd Gm = s.gram().bottomRightCorner(nT, nT);
  const double base = (Gm * reduced_fim(model, g).inverse()).trace();
  RandomStream rng(c.seed, {0x1e3, 0});
  double worst = 0.0;
  for (int k = 0; k < 20; ++k) {
    const GroupElement gh = model.apply_random_symmetry(g, rng);
    const double tr = (Gm * reduced_fim(model, gh).inverse()).trace();
    worst = std::max(worst, std::abs(tr - base));
  }
  sink.add("fiber-invariance:trace-invariance", worst <= 1e-8 * (1.0 + std::abs(base)), worst);
  const InvarianceReport inv = check_adH_invariance(s, 20, rng, 1e-9);
  const double dev = std::max({inv.max_leakage, inv.max_orthogonality_defect, inv.max_norm_deviation});
  sink.add("fiber-invariance:adH-invariance", inv.invariant, dev);
}

void suite_block_structure(const ExperimentConfig& c, CheckSink& sink) {
  ExperimentConfig sub = c;
  sub.experiment = ExperimentKind::Landmark;
  sub.m_values = {100};
  sub.n_trials = c.property_trials;
  sub.n_starts = 1;
  const ExperimentReport r = run_landmark_experiment(sub);
  const SummaryStats& sum = r.summaries.front();
  sink.add("block-structure:h-components", sum.n_used > 0 && sum.h_component_max <= 1e-8,
           sum.h_component_max);
  sink.add("block-structure:h-block-covariance", sum.n_used > 1 && sum.h_block_max_z <= 3.0,
           sum.h_block_max_z);
}

std::vector<std::pair<std::string, Group>> psi_groups() {
  return {{"so3", GroupDescriptor::so3()},
          {"se2", GroupDescriptor::se2()},
          {"se3", GroupDescriptor::se3()},
          {"gl2", GroupDescriptor::gl_plus(2)},
          {"gl3", GroupDescriptor::gl_plus(3)}};
}

void suite_psi(const ExperimentConfig& c, CheckSink& sink) {
  for (const auto& [name, G] : psi_groups()) {
    RandomStream rng(c.seed, {0x951, static_cast<std::uint64_t>(G->algebra_dim())});
    double worst = 0.0;
    for (int k = 0; k < 100; ++k) {
      Eigen::VectorXd x = rng.normal_vector(G->algebra_dim());
      x *= rng.uniform(0.0, 0.5) / x.norm();
      const Eigen::VectorXd y = rng.normal_vector(G->algebra_dim());
      const AlgebraVector X(G, x);
      const GroupElement ex = exp(X);
      const double h = 1e-5;
      const Eigen::VectorXd fd = (log(ex * exp(G, h * y)).coords - log(ex * exp(G, -h * y)).coords) /
                                 (2.0 * h);
      worst = std::max(worst, (psi_matrix(X).matrix * y - fd).norm());
    }
    sink.add("psi:" + name, worst <= 1e-5, worst);
  }
}

void suite_sphere(const ExperimentConfig& c, CheckSink& sink) {
  const ReductiveStructure s2 = sphere_structure();
  RandomStream rng(c.seed, {0x5a2, 0});
  double worst = 0.0;
  int n = 0;
  while (n < 100) {
    const GroupElement g_ref = GroupElement::unchecked(s2.group(), random_rotation(rng));
    Eigen::Vector3d axis = rng.normal_vector(3);
    axis.z() = 0.0;
    const double dist = rng.uniform(0.0, 2.0);
    const Eigen::Matrix3d step = Eigen::AngleAxisd(dist, axis.normalized()).toRotationMatrix();
    const Eigen::Matrix3d spin =
        Eigen::AngleAxisd(rng.uniform(-std::numbers::pi, std::numbers::pi), Eigen::Vector3d::UnitZ())
            .toRotationMatrix();
    const GroupElement g_est =
        GroupElement::unchecked(s2.group(), g_ref.matrix() * step * spin);
    const auto [group_side, intrinsic] = sphere_riemannian_check(g_ref, g_est, s2);
    worst = std::max(worst, (group_side - intrinsic).norm());
    ++n;
  }
  sink.add("sphere:coset-log", worst <= 1e-10, worst);
}

GroupElement random_pose(RandomStream& rng) {
  return se3_pose(random_rotation(rng), rng.normal_vector(3));
}

double gradient_deviation(const StatisticalModel& model, const Observation& x,
                          const GroupElement& g) {
  const ReductiveStructure& s = model.structure();
  const InvariantFrame frame = side_frame(s);
  const Eigen::MatrixXd dirs = s.basis();
  const Eigen::VectorXd analytic = model.analytic_gradient(x, g, frame, dirs);
  const GroupFunction fn = [&](const GroupElement& q) { return model.log_likelihood(x, q); };
  double worst = 0.0;
  for (Eigen::Index i = 0; i < dirs.cols(); ++i) {
    const AlgebraVector X(model.group(), dirs.col(i));
    const double fd = frame == InvariantFrame::Left ? livf_derivative(fn, g, X)
                                                    : rivf_derivative(fn, g, X);
    worst = std::max(worst, std::abs(fd - analytic(i)) / (1.0 + std::abs(analytic(i))));
  }
  return worst;
}

void suite_gradient(const ExperimentConfig& c, CheckSink& sink) {
  RandomStream rng(c.seed, {0x96a, 0});
  {
    const LandmarkModel model = landmark_model(c);
    double worst = 0.0;
    for (int k = 0; k < 100; ++k) {
      const GroupElement g = random_pose(rng);
      worst = std::max(worst, gradient_deviation(model, model.sample(random_pose(rng), rng), g));
    }
    sink.add("gradient:landmark", worst <= 1e-5, worst);
  }
  {
    const NetworkModel model({{0.0, 0.0}, {0.0, 1.0}, {1.0, 0.4}, {0.8, 1.3}},
                             {{0, 1, 0.5}, {1, 2, 0.5}, {0, 2, 0.5}, {2, 3, 0.5}, {1, 3, 0.5}});
    double worst = 0.0;
    for (int k = 0; k < 100; ++k) {
      const GroupElement g = model.apply_random_symmetry(model.true_configuration(), rng);
      Eigen::MatrixXd jitter = g.matrix();
      for (int i = 0; i < model.n_agents(); ++i) jitter.block<2, 1>(3 * i, 3 * i + 2) += 0.2 * rng.normal_vector(2);
      const GroupElement gj(model.group(), jitter);
      worst = std::max(worst, gradient_deviation(model, model.sample(g, rng), gj));
    }
    sink.add("gradient:network", worst <= 1e-5, worst);
  }
  {
    const SpdModel model(3);
    double worst = 0.0;
    for (int k = 0; k < 100; ++k) {
      Eigen::MatrixXd a = Eigen::MatrixXd::Identity(3, 3);
      for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) a(i, j) += 0.3 * rng.normal();
      }
      if (a.determinant() < 0.0) a.col(0) = -a.col(0);
      const GroupElement g(model.group(), a);
      worst = std::max(worst, gradient_deviation(model, model.sample(g, rng), g));
    }
    sink.add("gradient:spd", worst <= 1e-5, worst);
  }
  {
    const GaussianMeanModel model(2, 0.7);
    double worst = 0.0;
    for (int k = 0; k < 100; ++k) {
      const GroupElement g = model.element(rng.normal_vector(2));
      worst = std::max(worst, gradient_deviation(model, model.sample(g, rng), g));
    }
    sink.add("gradient:gaussian-mean", worst <= 1e-5, worst);
  }
}

}  // namespace

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::Landmark: return "landmark";
    case ExperimentKind::Network: return "network";
    case ExperimentKind::Spd: return "spd";
    case ExperimentKind::CrbReport: return "crb-report";
    case ExperimentKind::PropertySuite: return "property-suite";
  }
  return "landmark";
}

ExperimentKind experiment_kind_from_string(const std::string& name) {
  if (name == "landmark") return ExperimentKind::Landmark;
  if (name == "network") return ExperimentKind::Network;
  if (name == "spd") return ExperimentKind::Spd;
  if (name == "crb-report") return ExperimentKind::CrbReport;
  if (name == "property-suite" || name == "check") return ExperimentKind::PropertySuite;
  throw Error(ErrorCode::Config, "config: unknown experiment '" + name + "'");
}

void ExperimentConfig::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::Config, "config: " + msg); };
  if (m_values.empty()) fail("m_values must be nonempty");
  for (int m : m_values) {
    if (m < 1) fail("m_values must be positive");
  }
  if (n_trials < 1) fail("n_trials must be >= 1");
  if (workers < 1) fail("workers must be >= 1");
  if (n_starts < 1) fail("n_starts must be >= 1");
  if (!(landmark_sigma > 0.0)) fail("landmark_sigma must be positive");
  if (!(network_sigma > 0.0)) fail("network_sigma must be positive");
  if (landmarks.empty()) fail("landmarks must be nonempty");
  if (property_trials < 2) fail("property_trials must be >= 2");
  if (experiment == ExperimentKind::Spd) {
    if (dimension < 2) fail("dimension must be >= 2");
    if (true_factor.size() > 0) {
      if (true_factor.rows() != dimension) fail("true_factor must be dimension x dimension");
      if (!(true_factor.determinant() > 0.0)) fail("true_factor must have positive determinant");
    }
  }
  if (experiment == ExperimentKind::Network && positions.empty() && graph_file.empty()) {
    fail("network experiment needs positions/edges or graph_file");
  }
  if (crb_model != "landmark" && crb_model != "network") fail("crb_model must be landmark or network");
  for (const auto& s : suites) {
    if (!kKnownSuites.count(s)) fail("unknown suite '" + s + "'");
  }
  scoring.validate();
}

std::string ExperimentConfig::canonical_json() const { return to_json(*this).dump(); }

std::uint64_t ExperimentConfig::hash() const {
  std::uint64_t h = 1469598103934665603ULL;
  for (const unsigned char ch : canonical_json()) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

ExperimentConfig ExperimentConfig::from_json(const std::string& text) {
  ExperimentConfig c;
  try {
    parse_into(c, json::parse(text));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Config, std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Config, "config: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

LandmarkModel landmark_model(const ExperimentConfig& c) {
  return LandmarkModel(c.landmarks, c.landmark_sigma);
}

GroupElement landmark_true_pose(const ExperimentConfig& c) {
  const Eigen::Matrix3d R = exp(GroupDescriptor::so3(), c.true_rotation).matrix();
  return se3_pose(R, c.true_position);
}

NetworkModel network_model(const ExperimentConfig& c) {
  if (!c.graph_file.empty()) return NetworkModel::from_json_file(c.graph_file);
  return NetworkModel(c.positions, c.edges);
}

ExperimentReport run_landmark_experiment(const ExperimentConfig& c) {
  c.validate();
  const LandmarkModel model = landmark_model(c);
  const GroupElement g_true = landmark_true_pose(c);
  const GroupElement g_init = initial_point(c, model.structure(), g_true);
  const Eigen::MatrixXd F = reduced_fim(model, g_true);
  const auto results = run_trials(c, [&](int m, RandomStream& rng, TrialResult& r) {
    r = estimate_trial(model, g_true, g_init, m, c.n_starts, c.scoring, rng);
    if (c.n_starts > 1 && r.ok) r.value = r.spread_coset;
  });
  ExperimentReport report;
  report.kind = ExperimentKind::Landmark;
  push_trial_rows(report, c, results, model.name());
  summarize_estimation(report, c, model, g_true, F, results, model.name());
  return report;
}

ExperimentReport run_network_experiment(const ExperimentConfig& c) {
  c.validate();
  const NetworkModel model = network_model(c);
  const FimMatrix F = model.network_fim();
  const GroupElement g_true = model.true_configuration();
  const GroupElement g_init = initial_point(c, model.structure(), g_true);
  const auto results = run_trials(c, [&](int m, RandomStream& rng, TrialResult& r) {
    r = estimate_trial(model, g_true, g_init, m, 1, c.scoring, rng);
  });
  ExperimentReport report;
  report.kind = ExperimentKind::Network;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
      NetworkModel::rigidity_matrix(model.positions(), model.edges()), Eigen::EigenvaluesOnly);
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    report.spectrum.push_back(es.eigenvalues()(i));
    ReportRow row;
    row.kind = "spectrum";
    row.label = "rigidity";
    row.trial = static_cast<int>(i);
    row.value = es.eigenvalues()(i);
    report.rows.push_back(std::move(row));
  }
  push_trial_rows(report, c, results, model.name());
  summarize_estimation(report, c, model, g_true, F.matrix, results, model.name());
  return report;
}

ExperimentReport run_spd_experiment(const ExperimentConfig& c) {
  c.validate();
  const SpdModel model(c.dimension);
  const Eigen::MatrixXd A = c.true_factor.size() > 0
                                ? c.true_factor
                                : Eigen::MatrixXd::Identity(c.dimension, c.dimension);
  const GroupElement g_true(model.group(), A);
  const GroupElement g0 = GroupElement::identity(model.group());
  const auto results = run_trials(c, [&](int m, RandomStream& rng, TrialResult& r) {
    std::vector<Observation> xs = model.sample(g_true, m, rng);
    if (c.degenerate_data) std::fill(xs.begin(), xs.end(), Observation(A.col(0)));
    const Eigen::MatrixXd X = second_moment(xs);
    if (condition_number(X) > kDegenerateCondition) {
      r.status = std::string(to_string(ErrorCode::DegenerateModel));
      return;
    }
    const ScoringTrace trace = fisher_scoring(model, xs, g0, c.scoring);
    const Eigen::MatrixXd& gh = trace.final_iterate().matrix();
    r.iterations = trace.iterations_used;
    r.loglik = trace.logliks.back();
    r.value = (gh * gh.transpose() - X).norm();
    r.ok = trace.converged;
    r.status = trace.converged ? "ok" : "not_converged";
  });
  ExperimentReport report;
  report.kind = ExperimentKind::Spd;
  for (std::size_t mi = 0; mi < c.m_values.size(); ++mi) {
    for (int t = 0; t < c.n_trials; ++t) {
      const TrialResult& r = results[mi * static_cast<std::size_t>(c.n_trials) + static_cast<std::size_t>(t)];
      ReportRow row;
      row.kind = "trial";
      row.label = model.name();
      row.m = c.m_values[mi];
      row.trial = t;
      row.status = r.status;
      row.iterations = r.iterations;
      if (r.ok) row.final_loglik = r.loglik;
      row.value = r.value;
      report.rows.push_back(std::move(row));
    }
  }
  for (std::size_t mi = 0; mi < c.m_values.size(); ++mi) {
    SummaryStats sum;
    sum.m = c.m_values[mi];
    for (int t = 0; t < c.n_trials; ++t) {
      const TrialResult& r = results[mi * static_cast<std::size_t>(c.n_trials) + static_cast<std::size_t>(t)];
      if (!r.ok) {
        ++sum.n_failed;
        continue;
      }
      ++sum.n_used;
      ++sum.n_converged;
      sum.max_value = std::max(sum.max_value, r.value.value_or(0.0));
      sum.max_iterations = std::max(sum.max_iterations, r.iterations);
    }
    ReportRow row;
    row.kind = "summary";
    row.label = model.name();
    row.m = sum.m;
    row.status = sum.n_used > 0 ? "ok" : "insufficient_trials";
    row.iterations = sum.max_iterations;
    row.n_used = sum.n_used;
    row.n_failed = sum.n_failed;
    row.value = sum.max_value;
    report.rows.push_back(std::move(row));
    report.summaries.push_back(sum);
  }
  return report;
}

ExperimentReport run_crb_report(const ExperimentConfig& c) {
  c.validate();
  ExperimentReport report;
  report.kind = ExperimentKind::CrbReport;
  Eigen::MatrixXd F;
  std::string label;
  GroupElement at = GroupElement::identity(GroupDescriptor::se3());
  if (c.crb_model == "network") {
    const NetworkModel model = network_model(c);
    F = model.network_fim().matrix;
    at = model.true_configuration();
    label = model.name();
  } else {
    const LandmarkModel model = landmark_model(c);
    at = landmark_true_pose(c);
    F = reduced_fim(model, at);
    label = model.name();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(F, Eigen::EigenvaluesOnly);
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    ReportRow row;
    row.kind = "fim_eigenvalue";
    row.label = label;
    row.trial = static_cast<int>(i);
    row.value = es.eigenvalues()(i);
    report.rows.push_back(std::move(row));
  }
  for (int m : c.m_values) {
    SummaryStats sum;
    sum.m = m;
    sum.crb_trace = variance_bound(FimMatrix{FimFrame::Reduced, at, m * F, FimMethod::Analytic, 0});
    ReportRow row;
    row.kind = "crb";
    row.label = label;
    row.m = m;
    row.status = "ok";
    row.crb_trace = sum.crb_trace;
    report.rows.push_back(std::move(row));
    report.summaries.push_back(sum);
  }
  return report;
}

ExperimentReport run_property_suite(const ExperimentConfig& c) {
  c.validate();
  ExperimentReport report;
  report.kind = ExperimentKind::PropertySuite;
  CheckSink sink{report};
  for (const auto& name : c.suites) {
    try {
      if (name == "fim-properties") suite_fim_properties(c, sink);
      else if (name == "fiber-invariance") suite_fiber_invariance(c, sink);
      else if (name == "block-structure") suite_block_structure(c, sink);
      else if (name == "psi") suite_psi(c, sink);
      else if (name == "sphere") suite_sphere(c, sink);
      else if (name == "gradient") suite_gradient(c, sink);
    } catch (const Error& e) {
      sink.add(name + ":error:" + std::string(to_string(e.code())), false,
               std::numeric_limits<double>::quiet_NaN());
      log_error(name + " suite raised: " + e.what());
    }
  }
  log_info("property suite: " + std::to_string(report.n_checks - report.n_failed_checks) + "/" +
           std::to_string(report.n_checks) + " checks passed");
  return report;
}

ExperimentReport run_experiment(const ExperimentConfig& c) {
  switch (c.experiment) {
    case ExperimentKind::Landmark: return run_landmark_experiment(c);
    case ExperimentKind::Network: return run_network_experiment(c);
    case ExperimentKind::Spd: return run_spd_experiment(c);
    case ExperimentKind::CrbReport: return run_crb_report(c);
    case ExperimentKind::PropertySuite: return run_property_suite(c);
  }
  throw Error(ErrorCode::Config, "config: unknown experiment");
}

}  // namespace homcrb
