#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "shapbo/core.hpp"

namespace shapbo {

/// ReLU network [D, 64, 64, 1] mapping design vectors to the objective.
/// Inputs are min-max normalized by the original domain and the output is
/// de-standardized by (y_mean, y_std). Weights are (out x in) per layer.
/// Immutable after training.
struct MlpModel {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;
  SearchDomain input_domain;
  double y_mean = 0.0;
  double y_std = 1.0;
};

/// Trains with seeded He initialization and full-batch Adam (step 1e-3) on
/// mean squared error. Deterministic given the rng state; throws
/// std::runtime_error naming the epoch if the loss turns non-finite.
/// loss_log, when given, receives the standardized MSE of every epoch.
MlpModel train_mlp(const Dataset& data, int epochs, RngStream& rng,
                   std::vector<double>* loss_log = nullptr);

/// Scalar prediction in objective units.
double mlp_forward(const MlpModel& model, const Eigen::Ref<const Eigen::VectorXd>& x);

/// Batched prediction; rows of x are samples. Matches the scalar path
/// value-for-value.
Eigen::VectorXd mlp_forward_batch(const MlpModel& model, const Eigen::MatrixXd& x);

/// Debug dump: layer sizes, then row-major weights and biases per layer,
/// then the normalization constants. Plain text, one matrix per block.
void save_mlp(const MlpModel& model, const std::string& path);
MlpModel load_mlp(const std::string& path);

}  // namespace shapbo
