#include "shapbo/problems.hpp"

#include <cmath>
#include <stdexcept>

namespace shapbo {

namespace {

struct Bump {
  double amplitude;
  double x;
  double y;
};

// Frozen once from RngStream(42): per bump, amplitude ~ U[0.3, 1.0] then
// center coordinates ~ U[0.25, 4.75] each, in draw order.
constexpr Bump kToy2dBumps[12] = {
    {0.57434309345891621, 4.5903688691786213, 4.022468228556896},
    {0.32923571267195223, 2.7258079066562408, 0.72240005445393962},
    {0.81802906927301478, 1.6211623818171099, 1.5148853361107788},
    {0.52143481439529504, 2.7847825169689435, 3.2537096107933978},
    {0.6357984961578943, 4.6577435826383393, 2.1171059806013428},
    {0.4373391466556249, 0.81286371197525598, 2.4431275679004365},
    {0.33949260210303539, 0.98348757637172946, 0.44438016013536141},
    {0.95095738469056657, 2.3723875675144357, 3.9165673278516335},
    {0.67484174791753482, 1.7182473554503812, 3.2253329794345507},
    {0.67248674838654132, 4.3567939044852491, 3.2752057319176453},
    {0.9086485180258459, 1.2673750944107571, 0.7570237050072337},
    {0.77106121699791652, 2.5941534752297928, 1.8407184210421401},
};

constexpr double kBumpSigma = 0.18;

double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

double lorentzian(double f, double center, double width) {
  const double df = f - center;
  return width * width / (df * df + width * width);
}

double shortfall(double value) { return value > 0.0 ? value : 0.0; }

}  // namespace

AbsorptionSpectrum::AbsorptionSpectrum(Eigen::VectorXd values) : a(std::move(values)) {
  if (a.size() == 0) throw std::invalid_argument("AbsorptionSpectrum: empty spectrum");
  if ((a.array() < 0.0).any() || (a.array() > 1.0).any()) {
    throw std::invalid_argument("AbsorptionSpectrum: coefficients must lie in [0, 1]");
  }
}

AcousticDesign AcousticDesign::from_vector(const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (x.size() != 10) {
    throw std::invalid_argument("AcousticDesign: expected a 10-dimensional vector");
  }
  return {x[0], x[1], x[2], x[3], x[4], x[5], x[6], x[7], x[8], x[9]};
}

double eq1_objective(const AbsorptionSpectrum& spectrum, double penalty) {
  if (penalty < 0.0) throw std::invalid_argument("eq1_objective: penalty must be >= 0");
  const auto n = spectrum.size();
  // Integer numerators summed first, one division at the end: the all-ones
  // spectrum yields (N + 1) / 2 exactly.
  double sum = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    sum += spectrum.a[i] * static_cast<double>(n - i);
  }
  return sum / static_cast<double>(n) - penalty;
}

double eq1_weight(int i, int n) {
  if (i < 1 || i > n) throw std::invalid_argument("eq1_weight: i must be in [1, N]");
  return static_cast<double>(n + 1 - i) / static_cast<double>(n);
}

SearchDomain table1_domain() {
  Eigen::VectorXd lower(10), upper(10);
  lower << 2, 2, 10, 10, 10, 10, 10, 10, 30, 30;
  upper << 15, 15, 80, 80, 80, 80, 80, 80, 100, 100;
  return SearchDomain({"r1", "r2", "D1", "D2", "B1", "B2", "B3", "B4", "h", "t"},
                      std::move(lower), std::move(upper));
}

AbsorptionSpectrum synthetic_absorber(const AcousticDesign& x) {
  const double c1 = 8000.0 / (1.0 + 0.6 * x.r1);
  const double c2 = 8000.0 / (1.0 + 0.6 * x.r2);
  const double w1 = 300.0 + 20.0 * x.d1;
  const double w2 = 300.0 + 20.0 * x.d2;
  const double db13 = (x.b1 - x.b3) / 70.0;
  const double db24 = (x.b2 - x.b4) / 70.0;
  const double a1 = 0.35 * logistic(0.08 * (x.d1 - 45.0)) - 0.1 * db13 * db13;
  const double a2 = 0.35 * logistic(-0.08 * (x.d2 - 45.0)) - 0.1 * db24 * db24;

  Eigen::VectorXd a(kNumFrequencies);
  for (Eigen::Index i = 0; i < kNumFrequencies; ++i) {
    const double f = AbsorptionSpectrum::frequency(i);
    const double base =
        0.15 + 0.25 * (1.0 - std::exp(-f / 4000.0)) * (x.h / 100.0);
    const double value = base + a1 * lorentzian(f, c1, w1) + a2 * lorentzian(f, c2, w2);
    a[i] = std::clamp(value, 0.0, 1.0);
  }
  return AbsorptionSpectrum(std::move(a));
}

double manufacturability_penalty(const AcousticDesign& x) {
  double total = 0.0;
  total += shortfall(2.0 * (x.r1 + x.r2) + 30.0 - x.h);
  for (auto [d, r] : {std::pair{x.d1, x.r1}, std::pair{x.d2, x.r2}}) {
    total += shortfall(10.0 - (d - r));
    total += shortfall(d + r - (x.t - 10.0));
  }
  // Vertical distances check against their own layer's radius.
  for (auto [b, r] : {std::pair{x.b1, x.r1}, std::pair{x.b2, x.r2},
                      std::pair{x.b3, x.r1}, std::pair{x.b4, x.r2}}) {
    total += shortfall(10.0 - (b - r));
  }
  return 0.02 * total;
}

double toy2d(double x, double y) {
  if (x < 0.0 || x > 5.0 || y < 0.0 || y > 5.0) {
    throw std::invalid_argument("toy2d: input outside [0, 5]^2");
  }
  double value = 0.3 * x - 0.2 * y;
  for (const auto& bump : kToy2dBumps) {
    const double dx = x - bump.x;
    const double dy = y - bump.y;
    value += bump.amplitude *
             std::exp(-(dx * dx + dy * dy) / (2.0 * kBumpSigma * kBumpSigma));
  }
  return value;
}

ObjectiveSpec objective_by_name(const std::string& name) {
  if (name == "toy2d") {
    SearchDomain domain({"x", "y"}, Eigen::Vector2d(0.0, 0.0), Eigen::Vector2d(5.0, 5.0));
    return ObjectiveSpec{
        "toy2d", domain,
        [](const Eigen::VectorXd& x) { return toy2d(x[0], x[1]); },
        {}};
  }
  if (name == "synthetic-pu") {
    return ObjectiveSpec{
        "synthetic-pu", table1_domain(),
        [](const Eigen::VectorXd& x) {
          const AcousticDesign design = AcousticDesign::from_vector(x);
          return eq1_objective(synthetic_absorber(design),
                               manufacturability_penalty(design));
        },
        {CouplingRule{"h", {"r1", "r2"}, 30.0, 4.0}}};
  }
  throw std::invalid_argument("objective_by_name: unknown objective '" + name + "'");
}

std::vector<std::string> objective_names() { return {"toy2d", "synthetic-pu"}; }

}  // namespace shapbo
