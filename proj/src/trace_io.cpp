#include "shapbo/trace_io.hpp"

#include <fstream>
#include <stdexcept>

namespace shapbo {

namespace {

using nlohmann::json;

json domain_to_json(const SearchDomain& domain) {
  return json{{"names", domain.names()},
              {"lower", std::vector<double>(domain.lower().begin(), domain.lower().end())},
              {"upper", std::vector<double>(domain.upper().begin(), domain.upper().end())}};
}

SearchDomain domain_from_json(const json& j) {
  auto names = j.at("names").get<std::vector<std::string>>();
  auto lower = j.at("lower").get<std::vector<double>>();
  auto upper = j.at("upper").get<std::vector<double>>();
  return SearchDomain(std::move(names),
                      Eigen::Map<Eigen::VectorXd>(lower.data(),
                                                  static_cast<Eigen::Index>(lower.size())),
                      Eigen::Map<Eigen::VectorXd>(upper.data(),
                                                  static_cast<Eigen::Index>(upper.size())));
}

RefineReason reason_from_string(const std::string& s) {
  if (s == "shap_right_positive") return RefineReason::ShapRightPositive;
  if (s == "shap_left_positive") return RefineReason::ShapLeftPositive;
  if (s == "geometric_coupling") return RefineReason::GeometricCoupling;
  if (s == "trust_region") return RefineReason::TrustRegion;
  throw std::invalid_argument("trace_from_json: unknown refine reason '" + s + "'");
}

}  // namespace

json trace_to_json(const RunTrace& trace) {
  json config{{"protocol", to_string(trace.config.protocol)},
              {"budget", trace.config.budget},
              {"n_init", trace.config.n_init},
              {"refine_iterations", trace.config.refine_iterations},
              {"margin", trace.config.margin},
              {"top_k", trace.config.top_k},
              {"trust_gamma", trace.config.trust_gamma},
              {"trust_min_width_frac", trace.config.trust_min_width_frac},
              {"mlp_epochs", trace.config.mlp_epochs},
              {"seed", trace.config.seed},
              {"train_filtering", trace.config.train_filtering}};

  json samples = json::array();
  for (const auto& sample : trace.samples) {
    samples.push_back(json{
        {"x", std::vector<double>(sample.x.begin(), sample.x.end())}, {"y", sample.y}});
  }

  json snapshots = json::object();
  for (const auto& [iteration, domain] : trace.domain_snapshots) {
    snapshots[std::to_string(iteration)] = domain_to_json(domain);
  }

  json events = json::array();
  for (const auto& event : trace.refinement_events) {
    events.push_back(json{{"iteration", event.iteration},
                          {"feature", event.feature},
                          {"side", to_string(event.side)},
                          {"old_bound", event.old_bound},
                          {"new_bound", event.new_bound},
                          {"reason", to_string(event.reason)}});
  }

  return json{{"config", config},
              {"problem", trace.problem},
              {"samples", samples},
              {"best_curve",
               std::vector<double>(trace.best_curve.begin(), trace.best_curve.end())},
              {"domain_snapshots", snapshots},
              {"refinement_events", events},
              {"fit_retry_iterations", trace.fit_retry_iterations}};
}

RunTrace trace_from_json(const json& j) {
  RunTrace trace;
  const json& config = j.at("config");
  trace.config.protocol = parse_protocol(config.at("protocol").get<std::string>());
  trace.config.budget = config.at("budget").get<int>();
  trace.config.n_init = config.at("n_init").get<int>();
  trace.config.refine_iterations = config.at("refine_iterations").get<std::vector<int>>();
  trace.config.margin = config.at("margin").get<double>();
  trace.config.top_k = config.at("top_k").get<int>();
  trace.config.trust_gamma = config.at("trust_gamma").get<double>();
  trace.config.trust_min_width_frac = config.at("trust_min_width_frac").get<double>();
  trace.config.mlp_epochs = config.at("mlp_epochs").get<int>();
  trace.config.seed = config.at("seed").get<std::uint64_t>();
  trace.config.train_filtering = config.at("train_filtering").get<bool>();
  trace.problem = j.at("problem").get<std::string>();

  for (const auto& sample : j.at("samples")) {
    auto x = sample.at("x").get<std::vector<double>>();
    trace.samples.push_back(
        {Eigen::Map<Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size())),
         sample.at("y").get<double>()});
  }

  auto curve = j.at("best_curve").get<std::vector<double>>();
  trace.best_curve =
      Eigen::Map<Eigen::VectorXd>(curve.data(), static_cast<Eigen::Index>(curve.size()));

  for (const auto& [key, value] : j.at("domain_snapshots").items()) {
    trace.domain_snapshots.emplace_back(std::stoi(key), domain_from_json(value));
  }
  std::sort(trace.domain_snapshots.begin(), trace.domain_snapshots.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  for (const auto& event : j.at("refinement_events")) {
    trace.refinement_events.push_back(
        {event.at("iteration").get<int>(),
         event.at("feature").get<Eigen::Index>(),
         event.at("side").get<std::string>() == "lower" ? BoundSide::Lower
                                                        : BoundSide::Upper,
         event.at("old_bound").get<double>(), event.at("new_bound").get<double>(),
         reason_from_string(event.at("reason").get<std::string>())});
  }
  trace.fit_retry_iterations = j.at("fit_retry_iterations").get<std::vector<int>>();
  return trace;
}

void save_trace(const RunTrace& trace, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_trace: cannot open " + path);
  out << trace_to_json(trace).dump(2) << "\n";
}

RunTrace load_trace(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_trace: cannot open " + path);
  json j;
  in >> j;
  return trace_from_json(j);
}

void write_convergence_csv(
    const std::vector<std::pair<std::string, ConvergenceStats>>& per_protocol,
    const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_convergence_csv: cannot open " + path);
  out.precision(17);
  out << "iteration,protocol,mean_best,std_best\n";
  for (const auto& [protocol, stats] : per_protocol) {
    for (Eigen::Index i = 0; i < stats.mean_curve.size(); ++i) {
      out << (i + 1) << ',' << protocol << ',' << stats.mean_curve[i] << ','
          << stats.std_curve[i] << '\n';
    }
  }
}

void write_summary_csv(const std::vector<ComparisonRow>& rows, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_summary_csv: cannot open " + path);
  out.precision(17);
  out << "protocol,mean_final_best,std_final_best,reference,"
         "mean_iterations_to_reference,fraction_reached\n";
  for (const auto& row : rows) {
    out << row.protocol << ',' << row.mean_final_best << ',' << row.std_final_best << ','
        << row.reference << ',' << row.mean_iterations_to_reference << ','
        << row.fraction_reached << '\n';
  }
}

}  // namespace shapbo
