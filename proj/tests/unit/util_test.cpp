#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "doctest.h"
#include "propdetect/util/fnv.hpp"
#include "propdetect/util/matrix.hpp"
#include "propdetect/util/rng.hpp"

using propdetect::Matrix;
using propdetect::Rng;

TEST_CASE("rng is deterministic per seed") {
  Rng a(42), b(42), c(43);
  bool all_equal = true, any_diff = false;
  for (int i = 0; i < 100; ++i) {
    uint64_t x = a.next();
    all_equal = all_equal && (x == b.next());
    any_diff = any_diff || (x != c.next());
  }
  CHECK(all_equal);
  CHECK(any_diff);
}

TEST_CASE("rng uniform stays in [0,1) and below(n) stays under n") {
  Rng rng(7);
  for (int i = 0; i < 10000; ++i) {
    double u = rng.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
  std::set<uint64_t> seen;
  for (int i = 0; i < 1000; ++i) seen.insert(rng.below(5));
  CHECK(*seen.rbegin() < 5);
  CHECK(seen.size() == 5);  // all residues hit over 1000 draws
  CHECK(rng.below(1) == 0);
}

TEST_CASE("rng normal has sane moments") {
  Rng rng(99);
  const int n = 100000;
  double s = 0, s2 = 0;
  for (int i = 0; i < n; ++i) {
    double x = rng.normal();
    s += x;
    s2 += x * x;
  }
  double mean = s / n;
  double var = s2 / n - mean * mean;
  CHECK(std::fabs(mean) < 0.02);
  CHECK(std::fabs(var - 1.0) < 0.03);
  // scaled variant
  double y = Rng(5).normal(10.0, 2.0);
  double z = Rng(5).normal();
  CHECK(y == doctest::Approx(10.0 + 2.0 * z));
}

TEST_CASE("rng shuffle permutes and is seed-stable") {
  std::vector<int> v{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  auto once = v;
  Rng(3).shuffle(once);
  auto twice = v;
  Rng(3).shuffle(twice);
  CHECK(once == twice);
  auto sorted = once;
  std::sort(sorted.begin(), sorted.end());
  CHECK(sorted == v);
  auto other = v;
  Rng(4).shuffle(other);
  CHECK(once != other);  // overwhelmingly likely for 10! arrangements
}

TEST_CASE("sample_without_replacement draws k distinct indices below n") {
  Rng rng(17);
  auto s = rng.sample_without_replacement(100, 10);
  CHECK(s.size() == 10);
  std::set<size_t> uniq(s.begin(), s.end());
  CHECK(uniq.size() == 10);
  CHECK(*uniq.rbegin() < 100);
  // k == n yields a permutation
  auto all = Rng(2).sample_without_replacement(6, 6);
  std::sort(all.begin(), all.end());
  CHECK(all == std::vector<size_t>{0, 1, 2, 3, 4, 5});
}

TEST_CASE("rng mix derives distinct stable streams") {
  CHECK(Rng::mix(1, 2) == Rng::mix(1, 2));
  CHECK(Rng::mix(1, 2) != Rng::mix(1, 3));
  CHECK(Rng::mix(1, 2) != Rng::mix(2, 1));
}

TEST_CASE("fnv1a64 matches published vectors and chains") {
  using propdetect::fnv1a64;
  CHECK(fnv1a64("") == 0xcbf29ce484222325ull);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cull);
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ull);
  CHECK(fnv1a64("hello world") == 0x779a65e7023cd2e7ull);
  // streaming a buffer in two chunks equals hashing it whole
  CHECK(fnv1a64("bar", 3, fnv1a64("foo")) == fnv1a64("foobar"));
}

TEST_CASE("fnv1a64_hex formats 16 lowercase hex digits") {
  auto h = propdetect::fnv1a64_hex("foobar");
  CHECK(h == "85944171f73967e8");
  CHECK(propdetect::fnv1a64_hex("").size() == 16);
}

TEST_CASE("matrix shape, access, and equality") {
  Matrix m(2, 3, 1.5);
  CHECK(m.rows() == 2);
  CHECK(m.cols() == 3);
  CHECK(m(1, 2) == 1.5);
  m(0, 1) = -2.0;
  CHECK(m(0, 1) == -2.0);
  CHECK(m.row(1)[0] == 1.5);

  Matrix r = Matrix::row_vector({1.0, 2.0, 3.0});
  CHECK(r.rows() == 1);
  CHECK(r.cols() == 3);
  CHECK(r(0, 2) == 3.0);

  Matrix a(2, 2), b(2, 2), c(2, 3);
  CHECK(a.same_shape(b));
  CHECK(!a.same_shape(c));
  CHECK(a == b);
  b(1, 1) = 1.0;
  CHECK(!(a == b));
  b.zero();
  CHECK(a == b);
}
