#pragma once

#include <Eigen/Dense>

#include <functional>
#include <string>
#include <vector>

#include "shapbo/core.hpp"
#include "shapbo/refine.hpp"

namespace shapbo {

/// Number of frequency points of the acoustic grid: f_i = 10 * i Hz for
/// i = 1..1000 (10 Hz to 10 kHz).
constexpr int kNumFrequencies = 1000;

/// Absorption coefficients on a frequency grid, each in [0, 1].
struct AbsorptionSpectrum {
  Eigen::VectorXd a;

  explicit AbsorptionSpectrum(Eigen::VectorXd values);
  Eigen::Index size() const { return a.size(); }

  /// Grid frequency of the i-th (0-based) coefficient on the acoustic grid.
  static double frequency(Eigen::Index i) { return 10.0 * static_cast<double>(i + 1); }
};

/// The ten geometric parameters of the two-layer voided slab, in mm.
struct AcousticDesign {
  double r1, r2;          // void radii per layer
  double d1, d2;          // horizontal layer distances from their edges
  double b1, b2, b3, b4;  // vertical void distances (b1, b3 layer 1; b2, b4 layer 2)
  double h;               // slab thickness
  double t;               // unit width

  /// Reads a vector in the fixed domain order (r1, r2, D1, D2, B1..B4, h, t).
  static AcousticDesign from_vector(const Eigen::Ref<const Eigen::VectorXd>& x);
};

/// A named benchmark objective over a search domain. Evaluators are pure and
/// deterministic. coupling_rules lists geometric constraints the refinement
/// step must re-impose after tightening bounds (empty for most problems).
struct ObjectiveSpec {
  std::string name;
  SearchDomain domain;
  std::function<double(const Eigen::VectorXd&)> evaluator;
  std::vector<CouplingRule> coupling_rules;
};

/// Frequency-weighted absorption aggregate: sum_i w_i a_i - p with
/// w_i = (N + 1 - i) / N, emphasizing low frequencies.
double eq1_objective(const AbsorptionSpectrum& spectrum, double penalty);

/// w_i for 1-based i on a grid of N frequencies.
double eq1_weight(int i, int n);

/// The original ten-dimensional acoustic search box, in mm:
/// r1, r2 in [2, 15]; D1, D2 and B1..B4 in [10, 80]; h, t in [30, 100].
SearchDomain table1_domain();

/// Deterministic closed-form stand-in absorber: a rising baseline scaled by
/// slab thickness plus one Lorentzian resonance per void layer, with radius
/// setting the resonance frequency and layer distance its width/strength.
AbsorptionSpectrum synthetic_absorber(const AcousticDesign& x);

/// 0.02 per mm of constraint shortfall over: h >= 2 (r1 + r2) + 30;
/// Dj - rj >= 10 and Dj + rj <= t - 10; Bk - r(layer of k) >= 10.
double manufacturability_penalty(const AcousticDesign& x);

/// Rugged 2D benchmark on [0, 5]^2: a linear trend 0.3 x - 0.2 y plus 12
/// fixed positive Gaussian bumps. Out-of-domain input is rejected.
double toy2d(double x, double y);

/// Registry lookup for "toy2d" and "synthetic-pu"; throws on unknown names.
ObjectiveSpec objective_by_name(const std::string& name);
std::vector<std::string> objective_names();

}  // namespace shapbo
