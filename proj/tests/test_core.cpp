#include "doctest.h"

#include <cmath>
#include <vector>

#include "ffm/errors.hpp"
#include "ffm/mass_distribution.hpp"
#include "ffm/rng.hpp"
#include "ffm/stats.hpp"

using namespace ffm;

TEST_CASE("state_distance matches the compactified metric") {
  CHECK(state_distance(1, 1) == 0.0);
  CHECK(state_distance(2, 3) == doctest::Approx(1.0 / 6.0).epsilon(1e-15));
  CHECK(state_distance(1, 1000) == doctest::Approx(0.001).epsilon(1e-15));
  CHECK(state_distance(5, 7) == doctest::Approx(2.0 / 35.0).epsilon(1e-15));
  CHECK(state_distance(7, 5) == state_distance(5, 7));
  CHECK(state_distance(123456789, 1) == doctest::Approx(1.0 / 123456789.0));
}

TEST_CASE("state_distance triangle inequality, exhaustive small scan") {
  // All triples up to 200; the point 1 is inside the range.
  bool ok = true;
  for (SizeState i = 1; i <= 200 && ok; ++i)
    for (SizeState j = 1; j <= 200 && ok; ++j)
      for (SizeState k = 1; k <= 200; ++k) {
        if (state_distance(i, k) > state_distance(i, j) + state_distance(j, k) + 1e-15) {
          ok = false;
          CAPTURE(i);
          CAPTURE(j);
          CAPTURE(k);
          break;
        }
      }
  CHECK(ok);
}

TEST_CASE("sample_size inverse CDF on finite masses") {
  MassDistribution d({0.5, 0.25, 0.25});
  CHECK(sample_size(d, 0.3) == 1);
  CHECK(sample_size(d, 0.6) == 2);
  CHECK(sample_size(d, 0.999999) == 3);
  // ties resolve upward
  CHECK(sample_size(d, 0.5) == 2);
  CHECK(sample_size(d, 0.75) == 3);

  MassDistribution point({1.0});
  CHECK(sample_size(point, 0.999) == 1);

  MassDistribution leaky({0.5});
  CHECK_THROWS_AS(sample_size(leaky, 0.9), Error);
}

TEST_CASE("sample_size sweeps the CDF exactly at non-atom points") {
  MassDistribution d({0.1, 0.0, 0.4, 0.2, 0.3});
  const std::vector<double> cdf = {0.1, 0.1, 0.5, 0.7, 1.0};
  for (int i = 0; i <= 2000; ++i) {
    const double u = i / 2001.0;
    std::int64_t expect = 1;
    while (expect <= 5 && !(u < cdf[static_cast<std::size_t>(expect - 1)])) ++expect;
    if (expect > 5) continue;
    CHECK(sample_size(d, u) == expect);
  }
}

TEST_CASE("tail sampling inverts the power law analytically") {
  TailModel tail{100, 0.5};
  const double total = tail.mass();
  CHECK(total == doctest::Approx(0.05));
  CHECK(sample_tail(tail, 0.0) == 101);
  // remaining r corresponds to size (c/(total-r))^2
  const double r = 0.03;
  const double y = std::pow(0.5 / (total - r), 2.0);
  CHECK(sample_tail(tail, r) == static_cast<std::int64_t>(std::ceil(y)));
  // near-exhausted residual gives enormous sizes without overflow
  CHECK(sample_tail(tail, total * (1 - 1e-12)) > 1000000);

  MassDistribution d({0.5, 0.25}, TailModel{2, 0.25 * std::sqrt(2.0)});
  CHECK(d.conservative(1e-12));
  CHECK(sample_size(d, 0.76) > 2);
}

TEST_CASE("empirical law of sample_size matches the distribution") {
  MassDistribution d({0.45, 0.3, 0.15, 0.1});
  const int n = 1000000;
  RandomStream rng(42, 7);
  std::vector<int> counts(5, 0);
  for (int i = 0; i < n; ++i) ++counts[static_cast<std::size_t>(sample_size(d, rng.next_double()))];
  for (std::size_t k = 1; k <= 4; ++k) {
    const double p = d.mass(static_cast<std::int64_t>(k));
    const double phat = counts[k] / static_cast<double>(n);
    const double band = 3.0 * std::sqrt(p * (1.0 - p) / n);
    CHECK(std::fabs(phat - p) <= band);
  }
}

TEST_CASE("random streams are reproducible and separated") {
  RandomStream a(42, 0), b(42, 0), c(42, 1);
  bool all_equal = true, any_diff = false;
  for (int i = 0; i < 1000; ++i) {
    const auto xa = a.next_u64();
    const auto xb = b.next_u64();
    const auto xc = c.next_u64();
    all_equal = all_equal && (xa == xb);
    any_diff = any_diff || (xa != xc);
  }
  CHECK(all_equal);
  CHECK(any_diff);
}

TEST_CASE("per-stream sequences do not depend on worker assignment") {
  // Draw the same streams in different interleavings.
  std::vector<std::uint64_t> direct;
  for (int s = 0; s < 4; ++s) {
    RandomStream r(99, static_cast<std::uint64_t>(s));
    for (int i = 0; i < 10; ++i) direct.push_back(r.next_u64());
  }
  std::vector<RandomStream> rs;
  for (int s = 0; s < 4; ++s) rs.emplace_back(99, static_cast<std::uint64_t>(s));
  std::vector<std::uint64_t> interleaved(40);
  for (int i = 0; i < 10; ++i)
    for (int s = 3; s >= 0; --s)
      interleaved[static_cast<std::size_t>(s * 10 + i)] = rs[static_cast<std::size_t>(s)].next_u64();
  CHECK(direct == interleaved);
}

TEST_CASE("bounded draw is unbiased over small ranges") {
  RandomStream r(1, 2);
  std::vector<int> counts(10, 0);
  const int n = 200000;
  for (int i = 0; i < n; ++i) ++counts[static_cast<std::size_t>(r.next_below(10))];
  for (int k = 0; k < 10; ++k) {
    const double phat = counts[static_cast<std::size_t>(k)] / static_cast<double>(n);
    CHECK(std::fabs(phat - 0.1) < 3.0 * std::sqrt(0.1 * 0.9 / n));
  }
}

TEST_CASE("validate flags negatives and super-unit mass") {
  CHECK_THROWS_AS(MassDistribution({0.5, -0.1}).validate(), Error);
  CHECK_THROWS_AS(MassDistribution({0.9, 0.2}).validate(1e-9), Error);
  MassDistribution ok({0.9, 0.1});
  ok.validate();
  CHECK(ok.conservative());
}

TEST_CASE("chi-square machinery sanity") {
  CHECK(regularized_gamma_q(2.0, 0.0) == doctest::Approx(1.0));
  CHECK(chi_square_pvalue(18.307, 10) == doctest::Approx(0.05).epsilon(1e-3));
  CHECK(chi_square_pvalue(23.209, 10) == doctest::Approx(0.01).epsilon(1e-2));
}

TEST_CASE("monotone cubic interpolation preserves monotone data") {
  std::vector<double> x = {0.0, 1.0, 2.0, 3.0, 4.0};
  std::vector<double> y = {0.0, 0.1, 0.5, 0.9, 1.0};
  MonotoneCubic f(x, y);
  double prev = -1.0;
  for (int i = 0; i <= 400; ++i) {
    const double v = f(4.0 * i / 400.0);
    CHECK(v >= prev - 1e-12);
    prev = v;
  }
  CHECK(f(0.0) == doctest::Approx(0.0));
  CHECK(f(4.0) == doctest::Approx(1.0));
  CHECK(f(2.0) == doctest::Approx(0.5));
}
