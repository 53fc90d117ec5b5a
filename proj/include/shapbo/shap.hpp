#pragma once

#include <Eigen/Dense>

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "shapbo/core.hpp"
#include "shapbo/mlp.hpp"

namespace shapbo {

/// Per-sample, per-feature exact interventional Shapley attributions.
/// base_value is the mean model output over the background, and for every
/// explained row base_value + sum of that row's values equals the model
/// prediction (efficiency).
struct ShapReport {
  double base_value = 0.0;
  Eigen::MatrixXd values;         // n_samples x D
  std::vector<Eigen::Index> feature_order;  // descending mean |phi|, ties by index
  Eigen::MatrixXd sample_inputs;  // n_samples x D
};

using ModelFn = std::function<double(const Eigen::VectorXd&)>;
using BatchModelFn = std::function<Eigen::VectorXd(const Eigen::MatrixXd&)>;

/// Verdict of the one-sided attribution check around the incumbent.
enum class SidePositivity { AllRightPositive, AllLeftPositive, Mixed };

/// Exact Shapley values of model_fn at x under the interventional value
/// function: v(S) averages the model over composites taking x on S and a
/// background row elsewhere. Enumerates all 2^D coalitions; D is capped at
/// 16 and exceeding it is a capability error, never a silent approximation.
Eigen::VectorXd exact_shapley(const BatchModelFn& model_fn,
                              const Eigen::Ref<const Eigen::VectorXd>& x,
                              const Eigen::MatrixXd& background);
Eigen::VectorXd exact_shapley(const ModelFn& model_fn,
                              const Eigen::Ref<const Eigen::VectorXd>& x,
                              const std::vector<Eigen::VectorXd>& background);

/// Explains every sample in data against a background of min(64, n) points
/// subsampled from data with rng (all points, in order, when n <= 64).
ShapReport explain_dataset(const MlpModel& model, const Dataset& data, RngStream& rng);

/// The k features with largest mean absolute attribution, ties broken by
/// lower index. Throws when k is outside [1, D].
std::vector<Eigen::Index> rank_features(const ShapReport& report, int k);

/// AllRightPositive iff at least one explained sample lies strictly right of
/// best_x on the feature and all of them have phi > 0; symmetrically for
/// AllLeftPositive. Mixed otherwise, and also when both sides would qualify
/// at once (ambiguous signal). A side with no samples never certifies.
SidePositivity one_sided_positivity(const ShapReport& report, Eigen::Index feature,
                                    const Eigen::Ref<const Eigen::VectorXd>& best_x);

/// CSV with columns: sample index, feature name, feature value, phi.
void write_shap_csv(const ShapReport& report, const std::vector<std::string>& names,
                    std::ostream& out);
void write_shap_csv(const ShapReport& report, const std::vector<std::string>& names,
                    const std::string& path);

}  // namespace shapbo
