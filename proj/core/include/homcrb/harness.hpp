#pragma once

// Experiment configuration, Monte-Carlo campaigns and the property suite
// behind the homcrb command-line tool.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "homcrb/models.hpp"
#include "homcrb/scoring.hpp"

namespace homcrb {

enum class ExperimentKind { Landmark, Network, Spd, CrbReport, PropertySuite };

std::string to_string(ExperimentKind kind);
ExperimentKind experiment_kind_from_string(const std::string& name);

enum class InitKind { Identity, Truth };

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::Landmark;

  // Landmark model.
  std::vector<Eigen::Vector3d> landmarks{{1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}};
  double landmark_sigma = 1.0;
  /// True pose: R = exp(rotation^), p = position.
  Eigen::Vector3d true_rotation{0.0, 0.0, 1.0};
  Eigen::Vector3d true_position{0.5, -0.5, 0.25};
  /// Number of scoring starts per trial; starts differ by elements of H.
  int n_starts = 1;

  // Network model: inline graph, or a JSON file in the same format.
  std::vector<Eigen::Vector2d> positions;
  std::vector<Edge> edges;
  std::string graph_file;
  double network_sigma = 0.1;

  // SPD model.
  int dimension = 3;
  /// Generator of the true covariance Sigma = g g^T (identity when empty).
  Eigen::MatrixXd true_factor;
  /// Replace all observations by one fixed vector (rank-1 second moment).
  bool degenerate_data = false;

  // crb-report: model whose bound is tabulated ("landmark" or "network").
  std::string crb_model = "landmark";

  // Property suite.
  std::vector<std::string> suites{"fim-properties", "fiber-invariance", "block-structure", "psi", "sphere", "gradient"};
  bool corrupt_inner_product = false;
  int property_trials = 2000;

  // Campaign.
  std::vector<int> m_values{10, 100, 1000};
  int n_trials = 2000;
  std::uint64_t seed = 0;
  InitKind init = InitKind::Identity;
  /// Angle of exp(angle X) applied to the initial point on the coset side,
  /// X the first h-basis vector; moves the start along the fiber.
  double init_fiber_offset = 0.0;
  ScoringOptions scoring;
  std::string output_path;
  int workers = 1;

  void validate() const;
  /// Canonical JSON of every field that affects results (not workers or
  /// output_path).
  std::string canonical_json() const;
  /// FNV-1a of canonical_json().
  std::uint64_t hash() const;

  static ExperimentConfig from_json(const std::string& text);
  static ExperimentConfig from_file(const std::string& path);
};

/// One CSV row; unset fields print as empty cells.
struct ReportRow {
  std::string kind;
  std::string label;
  int m = 0;
  int trial = -1;
  std::string status;
  std::optional<double> coset_err2;
  std::optional<double> group_err2;
  std::optional<int> iterations;
  std::optional<double> final_loglik;
  std::optional<double> coset_var;
  std::optional<double> coset_var_se;
  std::optional<double> group_var;
  std::optional<double> group_var_se;
  std::optional<double> crb_trace;
  std::optional<double> crb_third_order_trace;
  std::optional<int> n_used;
  std::optional<int> n_failed;
  std::optional<double> value;
};

struct SummaryStats {
  int m = 0;
  double coset_var = 0.0;
  double coset_var_se = 0.0;
  double group_var = 0.0;
  double group_var_se = 0.0;
  /// tr((m Fbar)^-1).
  double crb_trace = 0.0;
  double crb_third_order_trace = 0.0;
  /// Largest entry of the h-block of the lifted-error covariance, in units
  /// of its Monte-Carlo standard error.
  double h_block_max_z = 0.0;
  /// Largest h-component over all lifted errors.
  double h_component_max = 0.0;
  /// Largest pairwise coset spread across starts (n_starts > 1).
  double multistart_coset_spread = 0.0;
  /// Smallest pairwise group distance across starts (n_starts > 1).
  double multistart_group_spread = 0.0;
  /// SPD: largest Frobenius gap to the second-moment MLE, iteration count.
  double max_value = 0.0;
  int max_iterations = 0;
  int n_converged = 0;
  int n_used = 0;
  int n_failed = 0;

  double coset_ratio() const { return coset_var / crb_trace; }
  double group_ratio() const { return group_var / crb_trace; }
};

struct ExperimentReport {
  ExperimentKind kind = ExperimentKind::Landmark;
  std::vector<ReportRow> rows;
  std::vector<SummaryStats> summaries;
  /// Network: rigidity-matrix eigenvalues (ascending).
  std::vector<double> spectrum;
  int n_checks = 0;
  int n_failed_checks = 0;

  bool passed() const { return n_failed_checks == 0; }
};

ExperimentReport run_landmark_experiment(const ExperimentConfig& config);
/// Throws DegenerateModel with the rank gap for non-rigid graphs.
ExperimentReport run_network_experiment(const ExperimentConfig& config);
ExperimentReport run_spd_experiment(const ExperimentConfig& config);
/// tr((m Fbar)^-1) per m for the configured model plus the Fbar spectrum.
ExperimentReport run_crb_report(const ExperimentConfig& config);
/// One "check" row per executed check; an empty suite list is a trivial pass.
ExperimentReport run_property_suite(const ExperimentConfig& config);
ExperimentReport run_experiment(const ExperimentConfig& config);

/// Landmark model described by the config.
LandmarkModel landmark_model(const ExperimentConfig& config);
/// Network model from the inline graph or graph_file.
NetworkModel network_model(const ExperimentConfig& config);
GroupElement landmark_true_pose(const ExperimentConfig& config);

}  // namespace homcrb
