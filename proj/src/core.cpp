#include "shapbo/core.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace shapbo {

namespace {

void check_dim(Eigen::Index expected, Eigen::Index got, const char* what) {
  if (expected != got) {
    throw std::invalid_argument(std::string(what) + ": expected size " +
                                std::to_string(expected) + ", got " +
                                std::to_string(got));
  }
}

std::uint64_t splitmix64(std::uint64_t& s) {
  s += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = s;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t v, int k) { return (v << k) | (v >> (64 - k)); }

}  // namespace

SearchDomain::SearchDomain(std::vector<std::string> names, Eigen::VectorXd lower,
                           Eigen::VectorXd upper)
    : names_(std::move(names)), lower_(std::move(lower)), upper_(std::move(upper)) {
  const auto d = static_cast<Eigen::Index>(names_.size());
  if (d == 0) throw std::invalid_argument("SearchDomain: empty dimension list");
  check_dim(d, lower_.size(), "SearchDomain lower");
  check_dim(d, upper_.size(), "SearchDomain upper");
  for (Eigen::Index j = 0; j < d; ++j) {
    if (!(lower_[j] < upper_[j])) {
      throw std::invalid_argument("SearchDomain: lower[" + std::to_string(j) +
                                  "] must be < upper[" + std::to_string(j) + "]");
    }
  }
}

Eigen::Index SearchDomain::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] == name) return static_cast<Eigen::Index>(i);
  }
  throw std::invalid_argument("SearchDomain: unknown dimension '" + name + "'");
}

SearchDomain SearchDomain::with_lower(Eigen::Index j, double value) const {
  Eigen::VectorXd lo = lower_;
  lo[j] = value;
  return SearchDomain(names_, std::move(lo), upper_);
}

SearchDomain SearchDomain::with_upper(Eigen::Index j, double value) const {
  Eigen::VectorXd up = upper_;
  up[j] = value;
  return SearchDomain(names_, lower_, std::move(up));
}

bool SearchDomain::operator==(const SearchDomain& other) const {
  return names_ == other.names_ && lower_ == other.lower_ && upper_ == other.upper_;
}

void Dataset::add(EvaluatedSample sample) {
  check_dim(domain_.dim(), sample.x.size(), "Dataset sample");
  if (!contains(domain_, sample.x)) {
    throw std::invalid_argument("Dataset: sample outside the original domain");
  }
  samples_.push_back(std::move(sample));
}

std::size_t Dataset::best_index() const {
  if (samples_.empty()) throw std::logic_error("Dataset::best_index on empty dataset");
  std::size_t best = 0;
  for (std::size_t i = 1; i < samples_.size(); ++i) {
    if (samples_[i].y > samples_[best].y) best = i;
  }
  return best;
}

Eigen::MatrixXd Dataset::inputs() const {
  Eigen::MatrixXd x(samples_.size(), domain_.dim());
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    x.row(static_cast<Eigen::Index>(i)) = samples_[i].x.transpose();
  }
  return x;
}

Eigen::VectorXd Dataset::targets() const {
  Eigen::VectorXd y(samples_.size());
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    y[static_cast<Eigen::Index>(i)] = samples_[i].y;
  }
  return y;
}

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream)
    : seed_(seed), stream_(stream) {
  // Expand (seed, stream) into four state words; fold the stream id into the
  // seeding chain so distinct streams decorrelate immediately.
  std::uint64_t s = seed;
  std::uint64_t mix = stream;
  s ^= splitmix64(mix) + 0x9e3779b97f4a7c15ULL;
  for (auto& word : state_) word = splitmix64(s);
}

std::uint64_t RngStream::next_u64() {
  // xoshiro256++ step (Blackman & Vigna).
  const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
  const std::uint64_t t = state_[1] << 17;
  state_[2] ^= state_[0];
  state_[3] ^= state_[1];
  state_[1] ^= state_[2];
  state_[0] ^= state_[3];
  state_[2] ^= t;
  state_[3] = rotl(state_[3], 45);
  return result;
}

double RngStream::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::uniform(double lo, double hi) {
  return lo + uniform() * (hi - lo);
}

double RngStream::normal() {
  if (has_cached_normal_) {
    has_cached_normal_ = false;
    return cached_normal_;
  }
  // Box-Muller on uniforms kept away from 0.
  double u1 = 0.0;
  do {
    u1 = uniform();
  } while (u1 <= 0.0);
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  cached_normal_ = radius * std::sin(angle);
  has_cached_normal_ = true;
  return radius * std::cos(angle);
}

RngStream RngStream::substream(std::uint64_t index) const {
  // Derive a fresh stream id by mixing this stream's id with the index.
  std::uint64_t s = stream_;
  std::uint64_t mixed = splitmix64(s) ^ (index + 0x9e3779b97f4a7c15ULL);
  std::uint64_t t = mixed;
  return RngStream(seed_, splitmix64(t));
}

bool contains(const SearchDomain& domain, const Eigen::Ref<const Eigen::VectorXd>& x) {
  check_dim(domain.dim(), x.size(), "contains");
  return (x.array() >= domain.lower().array()).all() &&
         (x.array() <= domain.upper().array()).all();
}

Eigen::VectorXd clip(const SearchDomain& domain, const Eigen::Ref<const Eigen::VectorXd>& x) {
  check_dim(domain.dim(), x.size(), "clip");
  return x.cwiseMax(domain.lower()).cwiseMin(domain.upper());
}

std::vector<Eigen::VectorXd> initial_design(const SearchDomain& domain, int n,
                                            RngStream& rng) {
  if (n < 0) throw std::invalid_argument("initial_design: n must be >= 0");
  std::vector<Eigen::VectorXd> points;
  points.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd x(domain.dim());
    for (Eigen::Index j = 0; j < domain.dim(); ++j) {
      x[j] = rng.uniform(domain.lower()[j], domain.upper()[j]);
    }
    points.push_back(std::move(x));
  }
  return points;
}

}  // namespace shapbo
