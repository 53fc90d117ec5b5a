#include "shapbo/gpr.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <vector>

namespace shapbo {

namespace {

constexpr double kLogLengthscaleMin = -4.0;  // bounds in log10 units
constexpr double kLogLengthscaleMax = 2.0;
constexpr double kLogSignalMin = -6.0;
constexpr double kLogSignalMax = 4.0;
constexpr double kLogNoiseMin = -12.0;
constexpr double kLogNoiseMax = 0.0;

constexpr std::array<double, 4> kJitterSchedule = {1e-9, 1e-8, 1e-7, 1e-6};
constexpr int kMultistarts = 8;

Eigen::MatrixXd normalize_rows(const Eigen::MatrixXd& x, const SearchDomain& domain) {
  Eigen::ArrayXd lo = domain.lower().array();
  Eigen::ArrayXd width = domain.width().array();
  return ((x.array().rowwise() - lo.transpose()).rowwise() / width.transpose()).matrix();
}

Eigen::VectorXd normalize_point(const Eigen::Ref<const Eigen::VectorXd>& x,
                                const SearchDomain& domain) {
  return ((x - domain.lower()).array() / domain.width().array()).matrix();
}

/// Pairwise squared distances between rows of a and rows of b.
Eigen::MatrixXd pairwise_sqdist(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::VectorXd a2 = a.rowwise().squaredNorm();
  Eigen::VectorXd b2 = b.rowwise().squaredNorm();
  Eigen::MatrixXd d2 = (-2.0 * a * b.transpose());
  d2.colwise() += a2;
  d2.rowwise() += b2.transpose();
  return d2.cwiseMax(0.0);
}

struct Factorization {
  Eigen::MatrixXd chol;
  Eigen::VectorXd alpha;
  double jitter = 0.0;
  double log_marginal = 0.0;
};

/// Reusable buffers for the many marginal-likelihood evaluations a fit makes.
/// Only the lower triangle is ever touched; the decomposition runs in place.
class LmlWorkspace {
 public:
  LmlWorkspace(const Eigen::MatrixXd& sqdist, Eigen::VectorXd targets)
      : sqdist_(sqdist),
        targets_(std::move(targets)),
        kernel_(sqdist.rows(), sqdist.cols()),
        work_(sqdist.rows(), sqdist.cols()) {}

  /// Cholesky with jitter escalation; nullopt when every level fails.
  std::optional<Factorization> factorize(const KernelParams& params) {
    const auto n = targets_.size();
    const double inv_two_ell2 =
        1.0 / (2.0 * params.lengthscale * params.lengthscale);
    for (Eigen::Index j = 0; j < n; ++j) {
      kernel_.col(j).tail(n - j) =
          params.signal_variance *
          (-inv_two_ell2 * sqdist_.col(j).tail(n - j).array()).exp();
    }
    for (double jitter : kJitterSchedule) {
      work_.triangularView<Eigen::Lower>() = kernel_;
      work_.diagonal().array() += params.noise_variance + jitter;
      Eigen::LLT<Eigen::Ref<Eigen::MatrixXd>> llt(work_);
      if (llt.info() != Eigen::Success) continue;
      const double log_det = work_.diagonal().array().log().sum();
      Factorization f;
      f.alpha = llt.solve(targets_);
      f.jitter = jitter;
      f.log_marginal = -0.5 * targets_.dot(f.alpha) - log_det -
                       0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
      if (!std::isfinite(f.log_marginal)) continue;
      f.chol = work_.triangularView<Eigen::Lower>();
      return f;
    }
    return std::nullopt;
  }

  double log_marginal_or_rejection(const KernelParams& params) {
    auto f = factorize(params);
    return f ? f->log_marginal : -std::numeric_limits<double>::infinity();
  }

  const Eigen::VectorXd& targets() const { return targets_; }

 private:
  const Eigen::MatrixXd& sqdist_;
  Eigen::VectorXd targets_;
  Eigen::MatrixXd kernel_;
  Eigen::MatrixXd work_;
};

KernelParams params_from_log10(const Eigen::Vector3d& u) {
  KernelParams p;
  p.lengthscale = std::pow(10.0, u[0]);
  p.signal_variance = std::pow(10.0, u[1]);
  p.noise_variance = std::pow(10.0, u[2]);
  return p;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double normal_pdf(double z) {
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

}  // namespace

double squared_exponential(const Eigen::Ref<const Eigen::VectorXd>& x,
                           const Eigen::Ref<const Eigen::VectorXd>& x_other,
                           const KernelParams& params) {
  if (x.size() != x_other.size()) {
    throw std::invalid_argument("squared_exponential: dimension mismatch");
  }
  const double d2 = (x - x_other).squaredNorm();
  return params.signal_variance *
         std::exp(-d2 / (2.0 * params.lengthscale * params.lengthscale));
}

GprModel fit_gpr(const Dataset& data, RngStream& rng) {
  if (data.size() < 2) throw std::invalid_argument("fit_gpr: need at least 2 samples");
  const auto n = static_cast<Eigen::Index>(data.size());

  Eigen::MatrixXd inputs = normalize_rows(data.inputs(), data.domain());
  Eigen::VectorXd raw_targets = data.targets();
  const double y_mean = raw_targets.mean();
  double y_std = std::sqrt((raw_targets.array() - y_mean).square().sum() /
                           static_cast<double>(n));
  if (y_std < 1e-12) y_std = 1.0;  // constant-target floor
  Eigen::VectorXd targets = (raw_targets.array() - y_mean) / y_std;

  const Eigen::MatrixXd sqdist = pairwise_sqdist(inputs, inputs);
  LmlWorkspace workspace(sqdist, targets);

  const Eigen::Vector3d box_lo(kLogLengthscaleMin, kLogSignalMin, kLogNoiseMin);
  const Eigen::Vector3d box_hi(kLogLengthscaleMax, kLogSignalMax, kLogNoiseMax);

  // The search revisits points whenever the step shrinks; memoize them.
  std::map<std::array<double, 3>, double> memo;
  auto evaluate = [&](const Eigen::Vector3d& u) {
    const std::array<double, 3> key{u[0], u[1], u[2]};
    if (auto it = memo.find(key); it != memo.end()) return it->second;
    const double value = workspace.log_marginal_or_rejection(params_from_log10(u));
    memo.emplace(key, value);
    return value;
  };

  // Compass search in log10 hyperparameter space from 8 seeded starts, with
  // ray extension: a successful move keeps stepping in its direction.
  Eigen::Vector3d best_u = Eigen::Vector3d::Zero();
  double best_value = -std::numeric_limits<double>::infinity();
  for (int start = 0; start < kMultistarts; ++start) {
    Eigen::Vector3d u;
    for (int j = 0; j < 3; ++j) u[j] = rng.uniform(box_lo[j], box_hi[j]);
    double value = evaluate(u);

    double step = 0.5;
    int evals = 0;
    const int max_evals = 80;
    while (step >= 0.02 && evals < max_evals) {
      bool improved = false;
      for (int j = 0; j < 3 && evals < max_evals; ++j) {
        for (double sign : {1.0, -1.0}) {
          Eigen::Vector3d trial = u;
          trial[j] = std::clamp(trial[j] + sign * step, box_lo[j], box_hi[j]);
          if (trial[j] == u[j]) continue;
          double trial_value = evaluate(trial);
          ++evals;
          if (!(trial_value > value)) continue;
          u = trial;
          value = trial_value;
          improved = true;
          while (evals < max_evals) {  // ride the ray while it keeps paying
            trial[j] = std::clamp(u[j] + sign * step, box_lo[j], box_hi[j]);
            if (trial[j] == u[j]) break;
            trial_value = evaluate(trial);
            ++evals;
            if (!(trial_value > value)) break;
            u = trial;
            value = trial_value;
          }
          break;
        }
      }
      if (!improved) step *= 0.5;
    }
    if (value > best_value) {
      best_value = value;
      best_u = u;
    }
  }
  if (!std::isfinite(best_value)) {
    throw FitError("fit_gpr: kernel factorization failed at every multistart point");
  }

  const KernelParams params = params_from_log10(best_u);
  auto fact = workspace.factorize(params);
  if (!fact) throw FitError("fit_gpr: factorization failed at the selected optimum");

  return GprModel{params,
                  std::move(inputs),
                  std::move(targets),
                  std::move(fact->chol),
                  std::move(fact->alpha),
                  y_mean,
                  y_std,
                  fact->jitter,
                  fact->log_marginal,
                  data.domain()};
}

std::pair<double, double> predict(const GprModel& model,
                                  const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (x.size() != model.input_domain.dim()) {
    throw std::invalid_argument("predict: dimension mismatch");
  }
  const Eigen::VectorXd q = normalize_point(x, model.input_domain);
  const double inv_two_ell2 =
      1.0 / (2.0 * model.params.lengthscale * model.params.lengthscale);
  Eigen::VectorXd k_star =
      model.params.signal_variance *
      ((model.train_inputs.rowwise() - q.transpose()).rowwise().squaredNorm().array() *
       -inv_two_ell2)
          .exp();
  const double mean = model.y_mean + model.y_std * k_star.dot(model.alpha);
  const Eigen::VectorXd v =
      model.chol_factor.triangularView<Eigen::Lower>().solve(k_star);
  const double var_latent =
      std::max(0.0, model.params.signal_variance - v.squaredNorm());
  return {mean, var_latent * model.y_std * model.y_std};
}

double expected_improvement(double mean, double variance, double f_best) {
  if (variance < 0.0) throw std::invalid_argument("expected_improvement: variance < 0");
  const double sigma = std::sqrt(variance);
  const double delta = mean - f_best;
  if (sigma == 0.0) return std::max(delta, 0.0);
  const double z = delta / sigma;
  return std::max(0.0, delta * normal_cdf(z) + sigma * normal_pdf(z));
}

Eigen::VectorXd argmax_acquisition(const GprModel& model, const SearchDomain& domain,
                                   double f_best, RngStream& rng) {
  const auto dim = domain.dim();
  constexpr int kCandidates = 2048;
  constexpr int kPolishStarts = 10;
  constexpr int kHalvings = 8;

  Eigen::MatrixXd candidates(kCandidates, dim);
  for (int i = 0; i < kCandidates; ++i) {
    for (Eigen::Index j = 0; j < dim; ++j) {
      candidates(i, j) = rng.uniform(domain.lower()[j], domain.upper()[j]);
    }
  }

  // Batched EI over the raw candidates: one triangular solve for all columns.
  Eigen::MatrixXd normalized = normalize_rows(candidates, model.input_domain);
  Eigen::MatrixXd k_star =
      model.params.signal_variance *
      (pairwise_sqdist(model.train_inputs, normalized).array() /
       (-2.0 * model.params.lengthscale * model.params.lengthscale))
          .exp()
          .matrix();
  Eigen::VectorXd means =
      (model.y_mean + model.y_std * (k_star.transpose() * model.alpha).array()).matrix();
  Eigen::MatrixXd v = model.chol_factor.triangularView<Eigen::Lower>().solve(k_star);
  Eigen::VectorXd variances =
      ((model.params.signal_variance - v.colwise().squaredNorm().transpose().array())
           .max(0.0) *
       model.y_std * model.y_std)
          .matrix();

  std::vector<int> order(kCandidates);
  std::vector<double> ei(kCandidates);
  for (int i = 0; i < kCandidates; ++i) {
    order[i] = i;
    ei[i] = expected_improvement(means[i], variances[i], f_best);
  }
  const int n_polish = std::min<int>(kPolishStarts, kCandidates);
  std::partial_sort(order.begin(), order.begin() + n_polish, order.end(),
                    [&](int a, int b) {
                      if (ei[a] != ei[b]) return ei[a] > ei[b];
                      return a < b;
                    });

  auto ei_at = [&](const Eigen::VectorXd& x) {
    auto [mean, variance] = predict(model, x);
    return expected_improvement(mean, variance, f_best);
  };

  Eigen::VectorXd best_x = candidates.row(order[0]).transpose();
  double best_ei = ei[order[0]];

  const Eigen::VectorXd width = domain.width();
  for (int s = 0; s < n_polish; ++s) {
    Eigen::VectorXd x = candidates.row(order[s]).transpose();
    double value = ei[order[s]];
    for (int level = 0; level <= kHalvings; ++level) {
      const double scale = 0.1 / static_cast<double>(1 << level);
      bool level_improving = true;
      int sweeps = 0;
      while (level_improving && sweeps < 25) {
        level_improving = false;
        ++sweeps;
        for (Eigen::Index j = 0; j < dim; ++j) {
          for (double sign : {1.0, -1.0}) {
            Eigen::VectorXd trial = x;
            trial[j] = std::clamp(trial[j] + sign * scale * width[j],
                                  domain.lower()[j], domain.upper()[j]);
            if (trial[j] == x[j]) continue;
            const double trial_value = ei_at(trial);
            if (trial_value > value) {
              x = trial;
              value = trial_value;
              level_improving = true;
              break;
            }
          }
        }
      }
    }
    if (value > best_ei) {
      best_ei = value;
      best_x = x;
    }
  }
  return best_x;
}

}  // namespace shapbo
