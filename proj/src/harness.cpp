#include "shapbo/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "shapbo/gpr.hpp"
#include "shapbo/mlp.hpp"
#include "shapbo/shap.hpp"

namespace shapbo {

namespace {

// Substream layout per run: one stream per purpose and iteration so replays
// and seed isolation hold regardless of protocol branching.
constexpr std::uint64_t kInitStream = 0;
constexpr std::uint64_t kFitBase = 1'000'000;
constexpr std::uint64_t kAcqBase = 2'000'000;
constexpr std::uint64_t kMlpBase = 3'000'000;
constexpr std::uint64_t kShapBase = 4'000'000;
constexpr std::uint64_t kFitRetryBase = 5'000'000;

void validate_config(const ProtocolConfig& config, Eigen::Index dim) {
  if (config.budget < 1) throw std::invalid_argument("run_protocol: budget must be >= 1");
  if (config.n_init < 2) {
    throw std::invalid_argument("run_protocol: n_init must be >= 2");
  }
  if (config.n_init >= config.budget) {
    throw std::invalid_argument("run_protocol: n_init must be < budget");
  }
  int previous = 0;
  for (int it : config.refine_iterations) {
    if (it < config.n_init || it > config.budget) {
      throw std::invalid_argument(
          "run_protocol: refine iterations must lie in [n_init, budget]");
    }
    if (it <= previous) {
      throw std::invalid_argument("run_protocol: refine iterations must be increasing");
    }
    previous = it;
  }
  if (config.top_k < 1 || config.top_k > static_cast<int>(dim)) {
    // top_k is clamped to the dimension inside shap_refine; only reject nonsense.
    if (config.top_k < 1) throw std::invalid_argument("run_protocol: top_k must be >= 1");
  }
}

Dataset filtered_dataset(const Dataset& data, const SearchDomain& current) {
  Dataset filtered(data.domain());
  for (const auto& sample : data.samples()) {
    if (contains(current, sample.x)) filtered.add(sample);
  }
  return filtered;
}

std::vector<RefinementEvent> diff_domains(const SearchDomain& before,
                                          const SearchDomain& after, int iteration,
                                          RefineReason reason) {
  std::vector<RefinementEvent> events;
  for (Eigen::Index j = 0; j < before.dim(); ++j) {
    if (before.lower()[j] != after.lower()[j]) {
      events.push_back({iteration, j, BoundSide::Lower, before.lower()[j],
                        after.lower()[j], reason});
    }
    if (before.upper()[j] != after.upper()[j]) {
      events.push_back({iteration, j, BoundSide::Upper, before.upper()[j],
                        after.upper()[j], reason});
    }
  }
  return events;
}

}  // namespace

const char* to_string(Protocol protocol) {
  switch (protocol) {
    case Protocol::StandardBO: return "standard";
    case Protocol::TrustRegionBO: return "trust-region";
    case Protocol::ShapBO: return "shap";
  }
  return "unknown";
}

Protocol parse_protocol(const std::string& name) {
  if (name == "standard") return Protocol::StandardBO;
  if (name == "trust-region") return Protocol::TrustRegionBO;
  if (name == "shap") return Protocol::ShapBO;
  throw std::invalid_argument("parse_protocol: unknown protocol '" + name + "'");
}

RunTrace run_protocol(const ObjectiveSpec& objective, const ProtocolConfig& raw_config) {
  ProtocolConfig config = raw_config;
  const Eigen::Index dim = objective.domain.dim();
  if (config.n_init <= 0) config.n_init = 10 * static_cast<int>(dim);
  validate_config(config, dim);

  RngStream root(config.seed);
  RunTrace trace;
  trace.config = config;
  trace.problem = objective.name;
  trace.best_curve.resize(config.budget);

  Dataset data(objective.domain);
  SearchDomain current = objective.domain;
  trace.domain_snapshots.emplace_back(0, current);

  auto record = [&](EvaluatedSample sample) {
    data.add(std::move(sample));
    const auto i = static_cast<Eigen::Index>(data.size()) - 1;
    trace.best_curve[i] = i == 0 ? data[static_cast<std::size_t>(i)].y
                                 : std::max(trace.best_curve[i - 1],
                                            data[static_cast<std::size_t>(i)].y);
  };

  auto maybe_refine = [&](int iteration) {
    if (config.protocol == Protocol::StandardBO) return;
    if (!std::binary_search(config.refine_iterations.begin(),
                            config.refine_iterations.end(), iteration)) {
      return;
    }
    const EvaluatedSample best = data.best();
    if (config.protocol == Protocol::ShapBO) {
      RngStream mlp_rng = root.substream(kMlpBase + static_cast<std::uint64_t>(iteration));
      const MlpModel surrogate = train_mlp(data, config.mlp_epochs, mlp_rng);
      RngStream shap_rng =
          root.substream(kShapBase + static_cast<std::uint64_t>(iteration));
      const ShapReport report = explain_dataset(surrogate, data, shap_rng);
      auto [refined, events] = shap_refine(current, report, best, config.margin,
                                           config.top_k, 0.0, iteration);
      current = std::move(refined);
      trace.refinement_events.insert(trace.refinement_events.end(), events.begin(),
                                     events.end());
      for (const auto& rule : objective.coupling_rules) {
        auto [coupled, coupling_events] =
            apply_geometric_coupling(current, rule, iteration);
        current = std::move(coupled);
        trace.refinement_events.insert(trace.refinement_events.end(),
                                       coupling_events.begin(), coupling_events.end());
      }
    } else {
      const SearchDomain before = current;
      current = trust_region_reduce(current, objective.domain, best, config.trust_gamma,
                                    config.trust_min_width_frac);
      auto events = diff_domains(before, current, iteration, RefineReason::TrustRegion);
      trace.refinement_events.insert(trace.refinement_events.end(), events.begin(),
                                     events.end());
    }
    trace.domain_snapshots.emplace_back(iteration, current);
  };

  RngStream init_rng = root.substream(kInitStream);
  for (const auto& x : initial_design(current, config.n_init, init_rng)) {
    record({x, objective.evaluator(x)});
  }
  maybe_refine(config.n_init);

  for (int iteration = config.n_init + 1; iteration <= config.budget; ++iteration) {
    const Dataset* train = &data;
    Dataset filtered(objective.domain);
    if (config.train_filtering) {
      filtered = filtered_dataset(data, current);
      if (filtered.size() >= 2) train = &filtered;
    }

    GprModel model = [&] {
      RngStream fit_rng =
          root.substream(kFitBase + static_cast<std::uint64_t>(iteration));
      try {
        return fit_gpr(*train, fit_rng);
      } catch (const FitError&) {
        trace.fit_retry_iterations.push_back(iteration);
        RngStream retry_rng =
            root.substream(kFitRetryBase + static_cast<std::uint64_t>(iteration));
        try {
          return fit_gpr(*train, retry_rng);
        } catch (const FitError& err) {
          throw FitError("run_protocol: surrogate fit failed twice at iteration " +
                         std::to_string(iteration) + ": " + err.what());
        }
      }
    }();

    RngStream acq_rng = root.substream(kAcqBase + static_cast<std::uint64_t>(iteration));
    const Eigen::VectorXd x =
        argmax_acquisition(model, current, data.best().y, acq_rng);
    record({x, objective.evaluator(x)});
    maybe_refine(iteration);
  }

  for (const auto& sample : data.samples()) trace.samples.push_back(sample);
  return trace;
}

std::vector<RunTrace> run_many(const ObjectiveSpec& objective, const ProtocolConfig& config,
                               const std::vector<std::uint64_t>& seeds, int n_threads) {
  std::vector<RunTrace> traces(seeds.size());
  if (seeds.empty()) return traces;
  const unsigned hardware = std::max(1u, std::thread::hardware_concurrency());
  const std::size_t workers =
      std::min<std::size_t>(seeds.size(), n_threads > 0 ? static_cast<std::size_t>(n_threads)
                                                        : hardware);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= seeds.size()) return;
      try {
        ProtocolConfig job = config;
        job.seed = seeds[i];
        traces[i] = run_protocol(objective, job);
      } catch (...) {
        std::scoped_lock lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };

  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  for (auto& thread : pool) thread.join();
  if (failure) std::rethrow_exception(failure);
  return traces;
}

ConvergenceStats aggregate(const std::vector<RunTrace>& traces, double reference) {
  if (traces.empty()) throw std::invalid_argument("aggregate: no traces");
  const auto budget = traces.front().best_curve.size();
  for (const auto& trace : traces) {
    if (trace.best_curve.size() != budget) {
      throw std::invalid_argument("aggregate: traces have mixed budgets");
    }
  }
  ConvergenceStats stats;
  stats.mean_curve = Eigen::VectorXd::Zero(budget);
  for (const auto& trace : traces) stats.mean_curve += trace.best_curve;
  stats.mean_curve /= static_cast<double>(traces.size());

  Eigen::VectorXd sq = Eigen::VectorXd::Zero(budget);
  for (const auto& trace : traces) {
    sq += (trace.best_curve - stats.mean_curve).cwiseAbs2();
  }
  stats.std_curve = (sq / static_cast<double>(traces.size())).cwiseSqrt();

  for (const auto& trace : traces) stats.final_bests.push_back(trace.best_curve[budget - 1]);

  stats.reference = reference;
  if (std::isfinite(reference)) {
    for (const auto& trace : traces) {
      stats.iterations_to_reference.push_back(iterations_to_reference(trace, reference));
    }
  }
  return stats;
}

std::optional<int> iterations_to_reference(const RunTrace& trace, double reference) {
  for (Eigen::Index i = 0; i < trace.best_curve.size(); ++i) {
    if (trace.best_curve[i] >= reference) return static_cast<int>(i) + 1;
  }
  return std::nullopt;
}

std::vector<ComparisonRow> compare_protocols(
    const ObjectiveSpec& objective, const std::vector<ProtocolConfig>& configs,
    const std::vector<std::uint64_t>& seeds, int n_threads,
    std::vector<std::vector<RunTrace>>* traces_out) {
  if (configs.size() < 2) {
    throw std::invalid_argument("compare_protocols: need at least 2 protocols");
  }
  if (seeds.size() < 2) {
    throw std::invalid_argument("compare_protocols: need at least 2 seeds");
  }
  const auto standard = std::find_if(configs.begin(), configs.end(), [](const auto& c) {
    return c.protocol == Protocol::StandardBO;
  });
  if (standard == configs.end()) {
    throw std::invalid_argument(
        "compare_protocols: a StandardBO config is required as the reference");
  }

  std::vector<std::vector<RunTrace>> traces;
  traces.reserve(configs.size());
  for (const auto& config : configs) {
    traces.push_back(run_many(objective, config, seeds, n_threads));
  }

  const auto standard_index =
      static_cast<std::size_t>(std::distance(configs.begin(), standard));
  double reference = 0.0;
  for (const auto& trace : traces[standard_index]) {
    reference += trace.best_curve[trace.best_curve.size() - 1];
  }
  reference /= static_cast<double>(seeds.size());

  std::vector<ComparisonRow> rows;
  for (std::size_t c = 0; c < configs.size(); ++c) {
    const ConvergenceStats stats = aggregate(traces[c], reference);
    ComparisonRow row;
    row.protocol = to_string(configs[c].protocol);
    const auto n = static_cast<double>(stats.final_bests.size());
    double mean = 0.0;
    for (double v : stats.final_bests) mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : stats.final_bests) var += (v - mean) * (v - mean);
    row.mean_final_best = mean;
    row.std_final_best = std::sqrt(var / n);
    row.reference = reference;
    int reached = 0;
    double iteration_sum = 0.0;
    for (const auto& crossing : stats.iterations_to_reference) {
      if (crossing) {
        ++reached;
        iteration_sum += *crossing;
      }
    }
    row.fraction_reached = reached / n;
    row.mean_iterations_to_reference =
        reached > 0 ? iteration_sum / reached : std::numeric_limits<double>::quiet_NaN();
    rows.push_back(row);
  }
  if (traces_out) *traces_out = std::move(traces);
  return rows;
}

}  // namespace shapbo
