#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace shapbo {

/// Axis-aligned box of continuous design variables with per-dimension names.
/// Bounds are closed intervals; boundary points are feasible.
class SearchDomain {
 public:
  SearchDomain(std::vector<std::string> names, Eigen::VectorXd lower,
               Eigen::VectorXd upper);

  Eigen::Index dim() const { return lower_.size(); }
  const std::vector<std::string>& names() const { return names_; }
  const Eigen::VectorXd& lower() const { return lower_; }
  const Eigen::VectorXd& upper() const { return upper_; }
  Eigen::VectorXd width() const { return upper_ - lower_; }

  /// Index of a named dimension; throws std::invalid_argument if unknown.
  Eigen::Index index_of(const std::string& name) const;

  /// Copy with one bound replaced (validates lower < upper).
  SearchDomain with_lower(Eigen::Index j, double value) const;
  SearchDomain with_upper(Eigen::Index j, double value) const;

  bool operator==(const SearchDomain& other) const;

 private:
  std::vector<std::string> names_;
  Eigen::VectorXd lower_;
  Eigen::VectorXd upper_;
};

struct EvaluatedSample {
  Eigen::VectorXd x;
  double y = 0.0;
};

/// Cumulative evaluation history of one run. The domain is the original
/// search box of the run; refined domains are subsets of it, so containment
/// of every sample is preserved across refinements.
class Dataset {
 public:
  explicit Dataset(SearchDomain domain) : domain_(std::move(domain)) {}

  void add(EvaluatedSample sample);

  std::size_t size() const { return samples_.size(); }
  const std::vector<EvaluatedSample>& samples() const { return samples_; }
  const EvaluatedSample& operator[](std::size_t i) const { return samples_[i]; }
  const SearchDomain& domain() const { return domain_; }

  /// Sample with maximal y; ties broken by lowest insertion index.
  std::size_t best_index() const;
  const EvaluatedSample& best() const { return samples_[best_index()]; }

  /// Inputs stacked as rows (n x dim).
  Eigen::MatrixXd inputs() const;
  Eigen::VectorXd targets() const;

 private:
  SearchDomain domain_;
  std::vector<EvaluatedSample> samples_;
};

/// Deterministic, platform-portable random stream: xoshiro256++ seeded
/// through splitmix64 from a (seed, stream) pair. Identical (seed, stream)
/// produces identical draws everywhere; substreams are independent.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

  std::uint64_t next_u64();

  /// Uniform double in [0, 1) from the top 53 bits.
  double uniform();
  double uniform(double lo, double hi);

  /// Standard normal via Box-Muller (pairs are cached).
  double normal();

  /// Independent stream derived from this stream's identity and an index.
  RngStream substream(std::uint64_t index) const;

 private:
  std::array<std::uint64_t, 4> state_;
  std::uint64_t seed_ = 0;
  std::uint64_t stream_ = 0;
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

/// True iff lower[j] <= x[j] <= upper[j] for all j.
bool contains(const SearchDomain& domain, const Eigen::Ref<const Eigen::VectorXd>& x);

/// Coordinate-wise clamp of x into the domain box.
Eigen::VectorXd clip(const SearchDomain& domain, const Eigen::Ref<const Eigen::VectorXd>& x);

/// n points drawn uniformly and independently per dimension, in sample-major
/// draw order. Deterministic given (domain, n, rng state).
std::vector<Eigen::VectorXd> initial_design(const SearchDomain& domain, int n,
                                            RngStream& rng);

}  // namespace shapbo
