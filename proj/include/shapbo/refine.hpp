#pragma once

#include <Eigen/Dense>

#include <string>
#include <utility>
#include <vector>

#include "shapbo/core.hpp"
#include "shapbo/shap.hpp"

namespace shapbo {

enum class BoundSide { Lower, Upper };

enum class RefineReason {
  ShapRightPositive,
  ShapLeftPositive,
  GeometricCoupling,
  TrustRegion,
};

/// Audit record of one bound change.
struct RefinementEvent {
  int iteration = 0;
  Eigen::Index feature = 0;
  BoundSide side = BoundSide::Lower;
  double old_bound = 0.0;
  double new_bound = 0.0;
  RefineReason reason = RefineReason::ShapRightPositive;
};

/// Floor/offset constraint tying one dimension's lower bound to others:
/// lower(target) is raised to min over sources of (offset + slope * lower(source)).
struct CouplingRule {
  std::string target;
  std::vector<std::string> sources;
  double offset = 0.0;
  double slope = 0.0;
};

/// Tightens bounds of the top_k ranked features whose attribution at the
/// incumbent is positive: a one-sided-positive verdict on the right raises
/// the lower bound to best_value * (1 - margin), on the left lowers the
/// upper bound to best_value * (1 + margin). Bounds only ever tighten
/// relative to the pre-call domain, and the incumbent always stays inside
/// (a bound that would expel it is relaxed back around the incumbent, never
/// beyond the pre-call domain). grid_resolution > 0 rounds tightened lower
/// bounds outward (down) and upper bounds outward (up) to that grid.
std::pair<SearchDomain, std::vector<RefinementEvent>> shap_refine(
    const SearchDomain& domain, const ShapReport& report, const EvaluatedSample& best,
    double margin = 0.1, int top_k = 6, double grid_resolution = 0.0,
    int iteration = 0);

/// Applies one geometric coupling rule; the target's lower bound never drops.
std::pair<SearchDomain, std::vector<RefinementEvent>> apply_geometric_coupling(
    const SearchDomain& domain, const CouplingRule& rule, int iteration = 0);

/// Trust-region contraction: per dimension the half-width shrinks by gamma
/// (floored at min_width_frac of the original width), recentered at the
/// incumbent and shifted, not shrunk, to fit inside the original box.
SearchDomain trust_region_reduce(const SearchDomain& domain, const SearchDomain& original,
                                 const EvaluatedSample& best, double gamma = 0.7,
                                 double min_width_frac = 0.05);

const char* to_string(BoundSide side);
const char* to_string(RefineReason reason);

}  // namespace shapbo
