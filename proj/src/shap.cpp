#include "shapbo/shap.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace shapbo {

namespace {

constexpr int kMaxExactDim = 16;
constexpr Eigen::Index kMaxBackground = 64;
constexpr Eigen::Index kBatchRowTarget = 8192;

/// w(s) = s! (D-1-s)! / D!, the Shapley coalition weight by size.
std::vector<double> coalition_weights(int dim) {
  std::vector<double> factorial(static_cast<std::size_t>(dim) + 1, 1.0);
  for (int i = 1; i <= dim; ++i) {
    factorial[static_cast<std::size_t>(i)] =
        factorial[static_cast<std::size_t>(i - 1)] * i;
  }
  std::vector<double> w(static_cast<std::size_t>(dim));
  for (int s = 0; s < dim; ++s) {
    w[static_cast<std::size_t>(s)] = factorial[static_cast<std::size_t>(s)] *
                                     factorial[static_cast<std::size_t>(dim - 1 - s)] /
                                     factorial[static_cast<std::size_t>(dim)];
  }
  return w;
}

std::vector<Eigen::Index> ranking_by_mean_abs(const Eigen::MatrixXd& values) {
  Eigen::VectorXd mean_abs = values.cwiseAbs().colwise().mean();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(values.cols()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    if (mean_abs[a] != mean_abs[b]) return mean_abs[a] > mean_abs[b];
    return a < b;
  });
  return order;
}

}  // namespace

Eigen::VectorXd exact_shapley(const BatchModelFn& model_fn,
                              const Eigen::Ref<const Eigen::VectorXd>& x,
                              const Eigen::MatrixXd& background) {
  const int dim = static_cast<int>(x.size());
  if (dim < 1) throw std::invalid_argument("exact_shapley: empty input");
  if (dim > kMaxExactDim) {
    throw std::invalid_argument(
        "exact_shapley: exact coalition enumeration supports at most 16 features, got " +
        std::to_string(dim));
  }
  if (background.rows() == 0) {
    throw std::invalid_argument("exact_shapley: background must be non-empty");
  }
  if (background.cols() != dim) {
    throw std::invalid_argument("exact_shapley: background dimension mismatch");
  }

  const Eigen::Index n_bg = background.rows();
  const std::uint32_t n_masks = 1u << dim;

  // Value function for every coalition mask, evaluated in batched chunks.
  Eigen::VectorXd v(n_masks);
  const std::uint32_t chunk =
      static_cast<std::uint32_t>(std::max<Eigen::Index>(1, kBatchRowTarget / n_bg));
  Eigen::MatrixXd rows(static_cast<Eigen::Index>(chunk) * n_bg, dim);
  for (std::uint32_t mask0 = 0; mask0 < n_masks; mask0 += chunk) {
    const std::uint32_t count = std::min(chunk, n_masks - mask0);
    for (std::uint32_t m = 0; m < count; ++m) {
      const std::uint32_t mask = mask0 + m;
      auto block = rows.middleRows(static_cast<Eigen::Index>(m) * n_bg, n_bg);
      block = background;
      for (int j = 0; j < dim; ++j) {
        if (mask & (1u << j)) block.col(j).setConstant(x[j]);
      }
    }
    Eigen::VectorXd out = model_fn(rows.topRows(static_cast<Eigen::Index>(count) * n_bg));
    if (out.size() != static_cast<Eigen::Index>(count) * n_bg) {
      throw std::invalid_argument("exact_shapley: batch model returned wrong size");
    }
    for (std::uint32_t m = 0; m < count; ++m) {
      v[mask0 + m] =
          out.segment(static_cast<Eigen::Index>(m) * n_bg, n_bg).mean();
    }
  }

  const std::vector<double> weights = coalition_weights(dim);
  Eigen::VectorXd phi = Eigen::VectorXd::Zero(dim);
  for (std::uint32_t mask = 0; mask < n_masks; ++mask) {
    const int size = std::popcount(mask);
    if (size == dim) continue;
    const double w = weights[static_cast<std::size_t>(size)];
    for (int j = 0; j < dim; ++j) {
      const std::uint32_t bit = 1u << j;
      if (mask & bit) continue;
      phi[j] += w * (v[mask | bit] - v[mask]);
    }
  }
  return phi;
}

Eigen::VectorXd exact_shapley(const ModelFn& model_fn,
                              const Eigen::Ref<const Eigen::VectorXd>& x,
                              const std::vector<Eigen::VectorXd>& background) {
  if (background.empty()) {
    throw std::invalid_argument("exact_shapley: background must be non-empty");
  }
  Eigen::MatrixXd bg(static_cast<Eigen::Index>(background.size()), x.size());
  for (std::size_t i = 0; i < background.size(); ++i) {
    if (background[i].size() != x.size()) {
      throw std::invalid_argument("exact_shapley: background dimension mismatch");
    }
    bg.row(static_cast<Eigen::Index>(i)) = background[i].transpose();
  }
  BatchModelFn batched = [&model_fn](const Eigen::MatrixXd& rows) {
    Eigen::VectorXd out(rows.rows());
    for (Eigen::Index i = 0; i < rows.rows(); ++i) {
      out[i] = model_fn(rows.row(i).transpose());
    }
    return out;
  };
  return exact_shapley(batched, x, bg);
}

ShapReport explain_dataset(const MlpModel& model, const Dataset& data, RngStream& rng) {
  if (data.size() == 0) throw std::invalid_argument("explain_dataset: empty dataset");
  const auto n = static_cast<Eigen::Index>(data.size());
  const auto dim = data.domain().dim();

  // Background: the whole dataset when small, otherwise a seeded subsample
  // of 64 points (partial Fisher-Yates, indices kept in dataset order).
  Eigen::Index n_bg = std::min<Eigen::Index>(n, kMaxBackground);
  std::vector<Eigen::Index> indices(static_cast<std::size_t>(n));
  std::iota(indices.begin(), indices.end(), Eigen::Index{0});
  if (n_bg < n) {
    for (Eigen::Index i = 0; i < n_bg; ++i) {
      const auto pick =
          i + static_cast<Eigen::Index>(rng.next_u64() %
                                        static_cast<std::uint64_t>(n - i));
      std::swap(indices[static_cast<std::size_t>(i)],
                indices[static_cast<std::size_t>(pick)]);
    }
    indices.resize(static_cast<std::size_t>(n_bg));
    std::sort(indices.begin(), indices.end());
  }
  Eigen::MatrixXd background(n_bg, dim);
  for (Eigen::Index i = 0; i < n_bg; ++i) {
    background.row(i) = data[static_cast<std::size_t>(indices[static_cast<std::size_t>(i)])]
                            .x.transpose();
  }

  BatchModelFn batched = [&model](const Eigen::MatrixXd& rows) {
    return mlp_forward_batch(model, rows);
  };

  ShapReport report;
  report.base_value = mlp_forward_batch(model, background).mean();
  report.values.resize(n, dim);
  report.sample_inputs = data.inputs();
  for (Eigen::Index i = 0; i < n; ++i) {
    report.values.row(i) =
        exact_shapley(batched, data[static_cast<std::size_t>(i)].x, background)
            .transpose();
  }
  report.feature_order = ranking_by_mean_abs(report.values);
  return report;
}

std::vector<Eigen::Index> rank_features(const ShapReport& report, int k) {
  const auto dim = report.values.cols();
  if (k < 1 || k > dim) {
    throw std::invalid_argument("rank_features: k must be in [1, " +
                                std::to_string(dim) + "]");
  }
  auto order = ranking_by_mean_abs(report.values);
  order.resize(static_cast<std::size_t>(k));
  return order;
}

SidePositivity one_sided_positivity(const ShapReport& report, Eigen::Index feature,
                                    const Eigen::Ref<const Eigen::VectorXd>& best_x) {
  if (feature < 0 || feature >= report.values.cols()) {
    throw std::invalid_argument("one_sided_positivity: feature index out of range");
  }
  if (best_x.size() != report.sample_inputs.cols()) {
    throw std::invalid_argument("one_sided_positivity: dimension mismatch");
  }
  const double pivot = best_x[feature];
  bool right_seen = false, right_all_positive = true;
  bool left_seen = false, left_all_positive = true;
  for (Eigen::Index i = 0; i < report.values.rows(); ++i) {
    const double value = report.sample_inputs(i, feature);
    const double phi = report.values(i, feature);
    if (value > pivot) {
      right_seen = true;
      right_all_positive = right_all_positive && phi > 0.0;
    } else if (value < pivot) {
      left_seen = true;
      left_all_positive = left_all_positive && phi > 0.0;
    }
  }
  const bool right_ok = right_seen && right_all_positive;
  const bool left_ok = left_seen && left_all_positive;
  if (right_ok && left_ok) return SidePositivity::Mixed;  // ambiguous
  if (right_ok) return SidePositivity::AllRightPositive;
  if (left_ok) return SidePositivity::AllLeftPositive;
  return SidePositivity::Mixed;
}

void write_shap_csv(const ShapReport& report, const std::vector<std::string>& names,
                    std::ostream& out) {
  if (static_cast<Eigen::Index>(names.size()) != report.values.cols()) {
    throw std::invalid_argument("write_shap_csv: feature name count mismatch");
  }
  out.precision(17);
  out << "sample,feature,value,phi\n";
  for (Eigen::Index i = 0; i < report.values.rows(); ++i) {
    for (Eigen::Index j = 0; j < report.values.cols(); ++j) {
      out << i << ',' << names[static_cast<std::size_t>(j)] << ','
          << report.sample_inputs(i, j) << ',' << report.values(i, j) << '\n';
    }
  }
}

void write_shap_csv(const ShapReport& report, const std::vector<std::string>& names,
                    const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_shap_csv: cannot open " + path);
  write_shap_csv(report, names, out);
}

}  // namespace shapbo
