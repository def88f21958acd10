#include <doctest.h>

#include <random>

#include "diraclev/spectrum.hpp"

using namespace diraclev;

namespace {

// Brute-force quadratic-time oracle for the Hausdorff distance.
double hausdorff_brute(const std::vector<double>& a, const std::vector<double>& b) {
  auto directed = [](const std::vector<double>& x, const std::vector<double>& y) {
    double worst = 0;
    for (double u : x) {
      double best = std::numeric_limits<double>::infinity();
      for (double v : y) best = std::min(best, std::abs(u - v));
      worst = std::max(worst, best);
    }
    return worst;
  };
  return std::max(directed(a, b), directed(b, a));
}

}  // namespace

TEST_CASE("hausdorff basics") {
  SpectrumSet a({0.0, 1.0, 2.0}, -10, 10);
  CHECK(hausdorff(a, a) == 0.0);
  SpectrumSet z({0.0}, -10, 10), o({1.0}, -10, 10);
  CHECK(hausdorff(z, o) == doctest::Approx(1.0));
  SpectrumSet zt({0.0, 2.0}, -10, 10);
  CHECK(hausdorff(zt, o) == doctest::Approx(1.0));
}

TEST_CASE("hausdorff against brute force on random sets") {
  std::mt19937_64 rng(123);
  std::uniform_real_distribution<double> u(-5, 5);
  std::uniform_int_distribution<int> len(1, 40);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> a(static_cast<std::size_t>(len(rng)), 0.0), b(static_cast<std::size_t>(len(rng)), 0.0);
    for (double& x : a) x = u(rng);
    for (double& x : b) x = u(rng);
    SpectrumSet A(a, -10, 10), B(b, -10, 10);
    CHECK(hausdorff(A, B) == doctest::Approx(hausdorff_brute(A.values, B.values)).epsilon(1e-12));
  }
}

TEST_CASE("hausdorff is a metric on finite nonempty sets") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-3, 3);
  for (int t = 0; t < 100; ++t) {
    auto mk = [&](int n) {
      std::vector<double> v(static_cast<std::size_t>(n), 0.0);
      for (double& x : v) x = u(rng);
      return SpectrumSet(v, -10, 10);
    };
    SpectrumSet A = mk(5), B = mk(7), C = mk(3);
    CHECK(hausdorff(A, B) == hausdorff(B, A));
    CHECK(hausdorff(A, C) <= hausdorff(A, B) + hausdorff(B, C) + 1e-12);
  }
}

TEST_CASE("empty-set conventions") {
  SpectrumSet empty({}, -1, 1), one({0.5}, -1, 1);
  auto r1 = hausdorff_full(empty, empty);
  CHECK(r1.both_empty);
  CHECK(r1.distance == 0.0);
  auto r2 = hausdorff_full(empty, one);
  CHECK(r2.empty_mismatch);
  CHECK(std::isinf(r2.distance));
}

TEST_CASE("window filtering and sorting") {
  SpectrumSet s({3.0, -0.5, 0.2, 9.0}, -1, 1);
  REQUIRE(s.size() == 2);
  CHECK(s.values[0] == -0.5);
  CHECK(s.values[1] == 0.2);
}

TEST_CASE("loglog slope recovers a power law") {
  std::vector<double> x, y;
  for (int k = 1; k <= 6; ++k) {
    x.push_back(std::pow(2.0, -k));
    y.push_back(3.0 * std::pow(x.back(), 1.5));
  }
  CHECK(loglog_slope(x, y) == doctest::Approx(1.5).epsilon(1e-12));
}
