#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <stdexcept>

#include "shapbo/core.hpp"

using namespace shapbo;

namespace {

SearchDomain unit_box(int d) {
  return SearchDomain(std::vector<std::string>(d, "x"),
                      Eigen::VectorXd::Zero(d), Eigen::VectorXd::Ones(d));
}

}  // namespace

TEST_CASE("SearchDomain validates its invariants") {
  CHECK_THROWS_AS(SearchDomain({"a"}, Eigen::VectorXd::Ones(1), Eigen::VectorXd::Zero(1)),
                  std::invalid_argument);
  CHECK_THROWS_AS(SearchDomain({"a", "b"}, Eigen::VectorXd::Zero(1), Eigen::VectorXd::Ones(1)),
                  std::invalid_argument);
  auto d = unit_box(2);
  CHECK(d.dim() == 2);
  CHECK_THROWS_AS(d.with_upper(0, -1.0), std::invalid_argument);
}

TEST_CASE("contains: interior, boundary, outside") {
  auto d = unit_box(2);
  CHECK(contains(d, Eigen::Vector2d(0.5, 0.5)));
  CHECK(contains(d, Eigen::Vector2d(0.0, 1.0)));
  CHECK_FALSE(contains(d, Eigen::Vector2d(1.0001, 0.5)));
  CHECK_THROWS_AS(contains(d, Eigen::VectorXd::Zero(3)), std::invalid_argument);
}

TEST_CASE("clip: clamp, identity, boundary fixed point") {
  auto d2 = unit_box(2);
  Eigen::VectorXd clipped = clip(d2, Eigen::Vector2d(2.0, -1.0));
  CHECK(clipped == Eigen::Vector2d(1.0, 0.0));
  CHECK(clip(d2, Eigen::Vector2d(0.3, 0.7)) == Eigen::Vector2d(0.3, 0.7));

  SearchDomain d1({"x"}, Eigen::VectorXd::Zero(1), Eigen::VectorXd::Constant(1, 10.0));
  Eigen::VectorXd edge(1);
  edge << 10.0;
  CHECK(clip(d1, edge) == edge);
  CHECK_THROWS_AS(clip(d1, Eigen::VectorXd::Zero(2)), std::invalid_argument);
}

TEST_CASE("clip is idempotent on random points") {
  RngStream rng(7);
  auto d = unit_box(4);
  for (int i = 0; i < 200; ++i) {
    Eigen::VectorXd x(4);
    for (int j = 0; j < 4; ++j) x[j] = rng.uniform(-3.0, 3.0);
    Eigen::VectorXd once = clip(d, x);
    CHECK(clip(d, once) == once);
  }
}

TEST_CASE("initial_design: empty, containment, determinism") {
  auto d = unit_box(3);
  RngStream rng(11);
  CHECK(initial_design(d, 0, rng).empty());

  RngStream a(123), b(123);
  auto pa = initial_design(d, 30, a);
  auto pb = initial_design(d, 30, b);
  REQUIRE(pa.size() == 30);
  for (int i = 0; i < 30; ++i) {
    CHECK(contains(d, pa[i]));
    CHECK(pa[i] == pb[i]);  // bit-identical
  }
}

TEST_CASE("initial_design containment holds for 1000 random domains and seeds") {
  RngStream meta(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    const int dim = 1 + static_cast<int>(meta.next_u64() % 6);
    Eigen::VectorXd lo(dim), hi(dim);
    for (int j = 0; j < dim; ++j) {
      lo[j] = meta.uniform(-50.0, 50.0);
      hi[j] = lo[j] + meta.uniform(0.1, 100.0);
    }
    SearchDomain d(std::vector<std::string>(dim, "v"), lo, hi);
    RngStream rng(meta.next_u64());
    for (const auto& x : initial_design(d, 5, rng)) CHECK(contains(d, x));
  }
}

TEST_CASE("Dataset best: max y, ties broken by insertion order") {
  auto d = unit_box(1);
  Dataset data(d);
  Eigen::VectorXd x(1);
  x << 0.5;
  data.add({x, 1.0});
  data.add({x, 3.0});
  data.add({x, 3.0});
  data.add({x, 2.0});
  CHECK(data.best_index() == 1);
  CHECK(data.best().y == 3.0);

  // Reordering changes only which of the tied entries comes first.
  Dataset reordered(d);
  reordered.add({x, 3.0});
  reordered.add({x, 2.0});
  reordered.add({x, 1.0});
  reordered.add({x, 3.0});
  CHECK(reordered.best_index() == 0);
  CHECK(reordered.best().y == 3.0);

  Eigen::VectorXd outside(1);
  outside << 1.5;
  CHECK_THROWS_AS(data.add({outside, 0.0}), std::invalid_argument);
}

TEST_CASE("RngStream determinism and stream separation") {
  RngStream a(42), b(42);
  for (int i = 0; i < 64; ++i) CHECK(a.next_u64() == b.next_u64());

  RngStream s0(42, 0), s1(42, 1);
  bool all_equal = true;
  for (int i = 0; i < 16; ++i) all_equal &= (s0.next_u64() == s1.next_u64());
  CHECK_FALSE(all_equal);

  // Substreams are reproducible from the parent's identity.
  RngStream parent(9001);
  auto c1 = parent.substream(3);
  auto c2 = RngStream(9001).substream(3);
  for (int i = 0; i < 16; ++i) CHECK(c1.next_u64() == c2.next_u64());
}

TEST_CASE("RngStream uniforms and normals are sane") {
  RngStream rng(5);
  double sum = 0.0;
  for (int i = 0; i < 10000; ++i) {
    double u = rng.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    sum += u;
  }
  CHECK(sum / 10000.0 == doctest::Approx(0.5).epsilon(0.02));

  double mean = 0.0, sq = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    double z = rng.normal();
    mean += z;
    sq += z * z;
  }
  mean /= n;
  sq /= n;
  CHECK(mean == doctest::Approx(0.0).epsilon(0.05));
  CHECK(sq - mean * mean == doctest::Approx(1.0).epsilon(0.05));
}
