#include "shapbo/refine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace shapbo {

namespace {

/// Row of the report matching the incumbent's input exactly.
Eigen::Index find_best_row(const ShapReport& report, const Eigen::VectorXd& x) {
  for (Eigen::Index i = 0; i < report.sample_inputs.rows(); ++i) {
    if (report.sample_inputs.row(i).transpose() == x) return i;
  }
  throw std::invalid_argument(
      "shap_refine: the incumbent is not among the explained samples");
}

double round_down_to_grid(double value, double grid) {
  return grid > 0.0 ? std::floor(value / grid) * grid : value;
}

double round_up_to_grid(double value, double grid) {
  return grid > 0.0 ? std::ceil(value / grid) * grid : value;
}

}  // namespace

std::pair<SearchDomain, std::vector<RefinementEvent>> shap_refine(
    const SearchDomain& domain, const ShapReport& report, const EvaluatedSample& best,
    double margin, int top_k, double grid_resolution, int iteration) {
  if (!(margin > 0.0 && margin < 1.0)) {
    throw std::invalid_argument("shap_refine: margin must be in (0, 1)");
  }
  if (top_k < 1) throw std::invalid_argument("shap_refine: top_k must be >= 1");
  if (!contains(domain, best.x)) {
    throw std::invalid_argument("shap_refine: domain does not contain the incumbent");
  }

  const Eigen::Index best_row = find_best_row(report, best.x);
  const int k = std::min<int>(top_k, static_cast<int>(report.values.cols()));
  SearchDomain refined = domain;
  std::vector<RefinementEvent> events;

  for (Eigen::Index feature : rank_features(report, k)) {
    if (!(report.values(best_row, feature) > 0.0)) continue;  // ambiguous signal

    const double best_value = best.x[feature];
    const SidePositivity verdict = one_sided_positivity(report, feature, best.x);
    if (verdict == SidePositivity::AllRightPositive) {
      const double old_lower = refined.lower()[feature];
      double candidate = round_down_to_grid(best_value * (1.0 - margin), grid_resolution);
      double new_lower = std::max(old_lower, candidate);
      if (best_value < new_lower) {
        // Incumbent would be expelled (negative best value): relax around it.
        new_lower = std::max(old_lower, best_value * (1.0 + margin));
      }
      if (new_lower != old_lower) {
        refined = refined.with_lower(feature, new_lower);
        events.push_back({iteration, feature, BoundSide::Lower, old_lower, new_lower,
                          RefineReason::ShapRightPositive});
      }
    } else if (verdict == SidePositivity::AllLeftPositive) {
      const double old_upper = refined.upper()[feature];
      double candidate = round_up_to_grid(best_value * (1.0 + margin), grid_resolution);
      double new_upper = std::min(old_upper, candidate);
      if (best_value > new_upper) {
        new_upper = std::min(old_upper, best_value * (1.0 - margin));
      }
      if (new_upper != old_upper) {
        refined = refined.with_upper(feature, new_upper);
        events.push_back({iteration, feature, BoundSide::Upper, old_upper, new_upper,
                          RefineReason::ShapLeftPositive});
      }
    }
  }
  return {std::move(refined), std::move(events)};
}

std::pair<SearchDomain, std::vector<RefinementEvent>> apply_geometric_coupling(
    const SearchDomain& domain, const CouplingRule& rule, int iteration) {
  if (rule.sources.empty()) {
    throw std::invalid_argument("apply_geometric_coupling: rule has no sources");
  }
  const Eigen::Index target = domain.index_of(rule.target);
  double candidate = std::numeric_limits<double>::infinity();
  for (const auto& source : rule.sources) {
    candidate = std::min(candidate,
                         rule.offset + rule.slope * domain.lower()[domain.index_of(source)]);
  }
  const double old_lower = domain.lower()[target];
  std::vector<RefinementEvent> events;
  if (candidate <= old_lower) return {domain, std::move(events)};
  events.push_back({iteration, target, BoundSide::Lower, old_lower, candidate,
                    RefineReason::GeometricCoupling});
  return {domain.with_lower(target, candidate), std::move(events)};
}

SearchDomain trust_region_reduce(const SearchDomain& domain, const SearchDomain& original,
                                 const EvaluatedSample& best, double gamma,
                                 double min_width_frac) {
  if (!(gamma > 0.0 && gamma <= 1.0)) {
    throw std::invalid_argument("trust_region_reduce: gamma must be in (0, 1]");
  }
  if (!(min_width_frac > 0.0 && min_width_frac <= 1.0)) {
    throw std::invalid_argument("trust_region_reduce: min_width_frac must be in (0, 1]");
  }
  if (domain.dim() != original.dim()) {
    throw std::invalid_argument("trust_region_reduce: dimension mismatch");
  }
  for (Eigen::Index j = 0; j < domain.dim(); ++j) {
    if (domain.lower()[j] < original.lower()[j] || domain.upper()[j] > original.upper()[j]) {
      throw std::invalid_argument("trust_region_reduce: domain not inside original");
    }
  }
  if (!contains(domain, best.x)) {
    throw std::invalid_argument("trust_region_reduce: domain does not contain incumbent");
  }

  Eigen::VectorXd lower(domain.dim()), upper(domain.dim());
  for (Eigen::Index j = 0; j < domain.dim(); ++j) {
    const double current_half = 0.5 * (domain.upper()[j] - domain.lower()[j]);
    const double floor_half = 0.5 * min_width_frac *
                              (original.upper()[j] - original.lower()[j]);
    const double half = std::max(gamma * current_half, floor_half);
    double lo = best.x[j] - half;
    double hi = best.x[j] + half;
    if (lo < original.lower()[j]) {  // shift, not shrink
      hi += original.lower()[j] - lo;
      lo = original.lower()[j];
    } else if (hi > original.upper()[j]) {
      lo -= hi - original.upper()[j];
      hi = original.upper()[j];
    }
    lower[j] = lo;
    upper[j] = hi;
  }
  return SearchDomain(domain.names(), std::move(lower), std::move(upper));
}

const char* to_string(BoundSide side) {
  return side == BoundSide::Lower ? "lower" : "upper";
}

const char* to_string(RefineReason reason) {
  switch (reason) {
    case RefineReason::ShapRightPositive: return "shap_right_positive";
    case RefineReason::ShapLeftPositive: return "shap_left_positive";
    case RefineReason::GeometricCoupling: return "geometric_coupling";
    case RefineReason::TrustRegion: return "trust_region";
  }
  return "unknown";
}

}  // namespace shapbo
