#include "shapbo/mlp.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

namespace shapbo {

namespace {

constexpr int kHiddenWidth = 64;

Eigen::MatrixXd normalize_rows(const Eigen::MatrixXd& x, const SearchDomain& domain) {
  Eigen::ArrayXd lo = domain.lower().array();
  Eigen::ArrayXd width = domain.width().array();
  return ((x.array().rowwise() - lo.transpose()).rowwise() / width.transpose()).matrix();
}

/// Standardized network output for pre-normalized inputs (rows).
Eigen::VectorXd forward_normalized(const MlpModel& model, const Eigen::MatrixXd& x) {
  Eigen::MatrixXd h = x;
  const std::size_t layers = model.weights.size();
  for (std::size_t l = 0; l < layers; ++l) {
    h = (h * model.weights[l].transpose()).rowwise() + model.biases[l].transpose();
    if (l + 1 < layers) h = h.cwiseMax(0.0);
  }
  return h.col(0);
}

}  // namespace

MlpModel train_mlp(const Dataset& data, int epochs, RngStream& rng,
                   std::vector<double>* loss_log) {
  if (data.size() < 2) throw std::invalid_argument("train_mlp: need at least 2 samples");
  if (epochs < 1) throw std::invalid_argument("train_mlp: epochs must be >= 1");
  const auto n = static_cast<Eigen::Index>(data.size());
  const auto dim = data.domain().dim();

  MlpModel model{{}, {}, data.domain(), 0.0, 1.0};

  Eigen::VectorXd raw = data.targets();
  model.y_mean = raw.mean();
  double y_std =
      std::sqrt((raw.array() - model.y_mean).square().sum() / static_cast<double>(n));
  model.y_std = y_std < 1e-12 ? 1.0 : y_std;
  Eigen::VectorXd targets = (raw.array() - model.y_mean) / model.y_std;
  Eigen::MatrixXd inputs = normalize_rows(data.inputs(), data.domain());

  const std::vector<Eigen::Index> sizes = {dim, kHiddenWidth, kHiddenWidth, 1};
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const auto fan_in = sizes[l];
    const auto fan_out = sizes[l + 1];
    const double scale = std::sqrt(2.0 / static_cast<double>(fan_in));
    Eigen::MatrixXd w(fan_out, fan_in);
    for (Eigen::Index r = 0; r < fan_out; ++r) {
      for (Eigen::Index c = 0; c < fan_in; ++c) w(r, c) = scale * rng.normal();
    }
    model.weights.push_back(std::move(w));
    model.biases.push_back(Eigen::VectorXd::Zero(fan_out));
  }

  const std::size_t layers = model.weights.size();
  std::vector<Eigen::MatrixXd> m_w(layers), v_w(layers);
  std::vector<Eigen::VectorXd> m_b(layers), v_b(layers);
  for (std::size_t l = 0; l < layers; ++l) {
    m_w[l] = Eigen::MatrixXd::Zero(model.weights[l].rows(), model.weights[l].cols());
    v_w[l] = m_w[l];
    m_b[l] = Eigen::VectorXd::Zero(model.biases[l].size());
    v_b[l] = m_b[l];
  }
  constexpr double kStep = 1e-3;
  constexpr double kBeta1 = 0.9;
  constexpr double kBeta2 = 0.999;
  constexpr double kEps = 1e-8;

  std::vector<Eigen::MatrixXd> pre(layers), act(layers + 1);
  for (int epoch = 1; epoch <= epochs; ++epoch) {
    act[0] = inputs;
    for (std::size_t l = 0; l < layers; ++l) {
      pre[l] = (act[l] * model.weights[l].transpose()).rowwise() +
               model.biases[l].transpose();
      act[l + 1] = (l + 1 < layers) ? pre[l].cwiseMax(0.0) : pre[l];
    }
    Eigen::VectorXd residual = act[layers].col(0) - targets;
    const double loss = residual.squaredNorm() / static_cast<double>(n);
    if (!std::isfinite(loss)) {
      throw std::runtime_error("train_mlp: non-finite loss at epoch " +
                               std::to_string(epoch));
    }
    if (loss_log) loss_log->push_back(loss);

    // Backward pass; delta holds dLoss/dPre for the current layer.
    Eigen::MatrixXd delta = (2.0 / static_cast<double>(n)) * residual;
    for (std::size_t li = layers; li-- > 0;) {
      Eigen::MatrixXd grad_w = delta.transpose() * act[li];
      Eigen::VectorXd grad_b = delta.colwise().sum();
      if (li > 0) {
        delta = (delta * model.weights[li])
                    .cwiseProduct((pre[li - 1].array() > 0.0).cast<double>().matrix());
      }
      m_w[li] = kBeta1 * m_w[li] + (1.0 - kBeta1) * grad_w;
      v_w[li] = kBeta2 * v_w[li] + (1.0 - kBeta2) * grad_w.cwiseProduct(grad_w);
      m_b[li] = kBeta1 * m_b[li] + (1.0 - kBeta1) * grad_b;
      v_b[li] = kBeta2 * v_b[li] + (1.0 - kBeta2) * grad_b.cwiseProduct(grad_b);
      const double bias1 = 1.0 - std::pow(kBeta1, epoch);
      const double bias2 = 1.0 - std::pow(kBeta2, epoch);
      model.weights[li] -=
          (kStep * (m_w[li] / bias1).array() /
           ((v_w[li] / bias2).array().sqrt() + kEps))
              .matrix();
      model.biases[li] -=
          (kStep * (m_b[li] / bias1).array() /
           ((v_b[li] / bias2).array().sqrt() + kEps))
              .matrix();
    }
  }
  return model;
}

double mlp_forward(const MlpModel& model, const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (x.size() != model.input_domain.dim()) {
    throw std::invalid_argument("mlp_forward: dimension mismatch");
  }
  Eigen::MatrixXd row = x.transpose();
  return mlp_forward_batch(model, row)[0];
}

Eigen::VectorXd mlp_forward_batch(const MlpModel& model, const Eigen::MatrixXd& x) {
  if (x.cols() != model.input_domain.dim()) {
    throw std::invalid_argument("mlp_forward_batch: dimension mismatch");
  }
  Eigen::MatrixXd normalized = normalize_rows(x, model.input_domain);
  return (model.y_mean +
          model.y_std * forward_normalized(model, normalized).array())
      .matrix();
}

void save_mlp(const MlpModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_mlp: cannot open " + path);
  out.precision(17);
  out << model.weights.size() << "\n";
  out << model.input_domain.dim();
  for (const auto& w : model.weights) out << " " << w.rows();
  out << "\n";
  for (std::size_t l = 0; l < model.weights.size(); ++l) {
    const auto& w = model.weights[l];
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) out << w(r, c) << " ";
      out << "\n";
    }
    for (Eigen::Index r = 0; r < model.biases[l].size(); ++r) {
      out << model.biases[l][r] << " ";
    }
    out << "\n";
  }
  out << model.y_mean << " " << model.y_std << "\n";
  const auto& d = model.input_domain;
  for (Eigen::Index j = 0; j < d.dim(); ++j) {
    out << d.names()[static_cast<std::size_t>(j)] << " " << d.lower()[j] << " "
        << d.upper()[j] << "\n";
  }
}

MlpModel load_mlp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_mlp: cannot open " + path);
  std::size_t layers = 0;
  in >> layers;
  std::vector<Eigen::Index> sizes(layers + 1);
  for (auto& s : sizes) in >> s;

  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;
  for (std::size_t l = 0; l < layers; ++l) {
    Eigen::MatrixXd w(sizes[l + 1], sizes[l]);
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) in >> w(r, c);
    }
    Eigen::VectorXd b(sizes[l + 1]);
    for (Eigen::Index r = 0; r < b.size(); ++r) in >> b[r];
    weights.push_back(std::move(w));
    biases.push_back(std::move(b));
  }
  double y_mean = 0.0, y_std = 1.0;
  in >> y_mean >> y_std;
  std::vector<std::string> names(static_cast<std::size_t>(sizes[0]));
  Eigen::VectorXd lo(sizes[0]), hi(sizes[0]);
  for (Eigen::Index j = 0; j < sizes[0]; ++j) {
    in >> names[static_cast<std::size_t>(j)] >> lo[j] >> hi[j];
  }
  if (!in) throw std::runtime_error("load_mlp: malformed file " + path);
  return MlpModel{std::move(weights), std::move(biases),
                  SearchDomain(std::move(names), std::move(lo), std::move(hi)),
                  y_mean, y_std};
}

}  // namespace shapbo
