#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "shapbo/core.hpp"
#include "shapbo/problems.hpp"
#include "shapbo/refine.hpp"

namespace shapbo {

enum class Protocol { StandardBO, TrustRegionBO, ShapBO };

const char* to_string(Protocol protocol);
Protocol parse_protocol(const std::string& name);

struct ProtocolConfig {
  Protocol protocol = Protocol::StandardBO;
  int budget = 400;
  int n_init = 0;  // 0 means 10 * dim, resolved when the run starts
  std::vector<int> refine_iterations = {100, 150, 200, 250, 300, 350};
  double margin = 0.1;
  int top_k = 6;
  double trust_gamma = 0.7;
  double trust_min_width_frac = 0.05;
  int mlp_epochs = 500;
  std::uint64_t seed = 0;
  bool train_filtering = false;
};

/// Full record of one optimization run.
struct RunTrace {
  ProtocolConfig config;
  std::string problem;
  std::vector<EvaluatedSample> samples;
  Eigen::VectorXd best_curve;  // best-so-far objective after each evaluation
  std::vector<std::pair<int, SearchDomain>> domain_snapshots;  // by iteration
  std::vector<RefinementEvent> refinement_events;
  std::vector<int> fit_retry_iterations;
};

/// Cross-seed convergence summary (population standard deviation).
struct ConvergenceStats {
  Eigen::VectorXd mean_curve;
  Eigen::VectorXd std_curve;
  std::vector<double> final_bests;
  double reference = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::optional<int>> iterations_to_reference;  // only when reference set
};

struct ComparisonRow {
  std::string protocol;
  double mean_final_best = 0.0;
  double std_final_best = 0.0;
  double reference = 0.0;
  double mean_iterations_to_reference = std::numeric_limits<double>::quiet_NaN();
  double fraction_reached = 0.0;
};

/// Runs one protocol to budget exhaustion: n_init seeded uniform evaluations,
/// then sequential EI-maximizing evaluations. ShapBO retrains the attribution
/// network and tightens bounds at each scheduled iteration (geometric coupling
/// re-imposed for problems that declare rules); TrustRegionBO contracts around
/// the incumbent on the same schedule; StandardBO never changes the domain.
/// Deterministic given config.seed.
RunTrace run_protocol(const ObjectiveSpec& objective, const ProtocolConfig& config);

/// Runs the same config across seeds, one job per seed (n_threads = 0 picks
/// the hardware concurrency). Per-seed results are independent of job order.
std::vector<RunTrace> run_many(const ObjectiveSpec& objective, const ProtocolConfig& config,
                               const std::vector<std::uint64_t>& seeds, int n_threads = 0);

/// Elementwise mean/std of best curves plus per-seed final bests. Traces must
/// share one budget. When reference is finite, per-seed crossing iterations
/// are filled in as well.
ConvergenceStats aggregate(const std::vector<RunTrace>& traces,
                           double reference = std::numeric_limits<double>::quiet_NaN());

/// Smallest 1-based iteration whose best-so-far reaches the reference.
std::optional<int> iterations_to_reference(const RunTrace& trace, double reference);

/// Runs every (config, seed) pair and summarizes per protocol against the
/// mean final best of the StandardBO entry. Requires at least two configs and
/// two seeds, one config being StandardBO. Optionally hands back all traces
/// (indexed [config][seed]).
std::vector<ComparisonRow> compare_protocols(
    const ObjectiveSpec& objective, const std::vector<ProtocolConfig>& configs,
    const std::vector<std::uint64_t>& seeds, int n_threads = 0,
    std::vector<std::vector<RunTrace>>* traces_out = nullptr);

}  // namespace shapbo
