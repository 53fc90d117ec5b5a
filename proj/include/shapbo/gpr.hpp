#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <utility>

#include "shapbo/core.hpp"

namespace shapbo {

/// Squared-exponential kernel hyperparameters, in normalized input units.
struct KernelParams {
  double lengthscale = 1.0;      // > 0
  double signal_variance = 1.0;  // > 0
  double noise_variance = 0.0;   // >= 0
};

/// Raised when the kernel matrix cannot be factorized even after the
/// jitter escalation schedule (1e-9 up to 1e-6) is exhausted.
struct FitError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Fitted Gaussian-process surrogate. Inputs are min-max normalized by the
/// ORIGINAL search domain and targets standardized; both transforms are kept
/// with the model so predictions come back in objective units. Immutable
/// after fit; safe to query concurrently.
struct GprModel {
  KernelParams params;
  Eigen::MatrixXd train_inputs;   // rows normalized to [0,1]^d
  Eigen::VectorXd train_targets;  // standardized
  Eigen::MatrixXd chol_factor;    // lower factor L of K + (noise + jitter) I
  Eigen::VectorXd alpha;          // (K + (noise + jitter) I)^{-1} targets
  double y_mean = 0.0;
  double y_std = 1.0;
  double jitter = 0.0;
  double log_marginal = 0.0;
  SearchDomain input_domain;
};

/// k(x, x') = signal_variance * exp(-|x - x'|^2 / (2 lengthscale^2)).
double squared_exponential(const Eigen::Ref<const Eigen::VectorXd>& x,
                           const Eigen::Ref<const Eigen::VectorXd>& x_other,
                           const KernelParams& params);

/// Fits kernel hyperparameters by maximizing the log marginal likelihood
/// with a compass search from 8 seeded starts in log10-space, bounded by
/// log10 lengthscale in [-4, 2], log10 signal variance in [-6, 4] and
/// log10 noise variance in [-12, 0]. Deterministic given the rng state.
GprModel fit_gpr(const Dataset& data, RngStream& rng);

/// Posterior (mean, variance) at x in original input/objective units.
/// Variance is clamped at zero after floating-point cancellation.
std::pair<double, double> predict(const GprModel& model,
                                  const Eigen::Ref<const Eigen::VectorXd>& x);

/// EI = (mu - f_best) Phi(z) + sigma phi(z) with z = (mu - f_best) / sigma;
/// degenerates to max(mu - f_best, 0) at sigma = 0. Always >= 0.
double expected_improvement(double mean, double variance, double f_best);

/// Maximizes EI over the current (possibly refined) domain: 2048 seeded
/// uniform candidates, then a coordinate-wise pattern search from the top 10
/// (initial step 10% of each dimension's width, halved 8 times). The result
/// always lies inside the domain and its EI is never below the best raw
/// candidate's.
Eigen::VectorXd argmax_acquisition(const GprModel& model, const SearchDomain& domain,
                                   double f_best, RngStream& rng);

}  // namespace shapbo
