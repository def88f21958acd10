#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <random>

#include "diraclev/two_band.hpp"

using namespace diraclev;

namespace {

const Vec2 kDiracPoint(2.0 * pi / 3.0, -2.0 * pi / 3.0);

Mat2 random_hermitian(std::mt19937_64& rng) {
  std::normal_distribution<double> g(0, 1);
  Mat2 a;
  a << cxd(g(rng), g(rng)), cxd(g(rng), g(rng)), cxd(g(rng), g(rng)), cxd(g(rng), g(rng));
  return 0.5 * (a + a.adjoint());
}

}  // namespace

TEST_CASE("pauli decomposition basics") {
  auto [f0a, fa] = pauli_decompose(sigma3());
  CHECK(f0a == 0.0);
  CHECK((fa - Vec3(0, 0, 1)).norm() == 0.0);

  auto [f0b, fb] = pauli_decompose(Mat2::Identity());
  CHECK(f0b == 1.0);
  CHECK(fb.norm() == 0.0);
}

TEST_CASE("pauli roundtrip on random Hermitian matrices") {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 100; ++t) {
    const Mat2 m = random_hermitian(rng);
    auto [f0, f] = pauli_decompose(m);
    // trace-formula oracle
    CHECK(f0 == doctest::Approx(0.5 * std::real((m * Mat2::Identity()).trace())));
    CHECK(f[0] == doctest::Approx(0.5 * std::real((sigma1() * m).trace())));
    CHECK(f[1] == doctest::Approx(0.5 * std::real((sigma2() * m).trace())));
    CHECK(f[2] == doctest::Approx(0.5 * std::real((sigma3() * m).trace())));
    CHECK(max_abs(MatX(pauli_reconstruct(f0, f) - m)) < 1e-14);
  }
}

TEST_CASE("pauli decomposition rejects non-Hermitian input") {
  Mat2 m;
  m << 0, 1, 0, 0;
  CHECK_THROWS_WITH_AS(pauli_decompose(m), doctest::Contains("invalid-input"), Error);
}

TEST_CASE("symbol eigenvalues are F0 -/+ |F| and match direct diagonalization") {
  const TwoBandSymbol s = TwoBandSymbol::from_hoppings(honeycomb_hoppings());
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-pi, pi);
  for (int t = 0; t < 50; ++t) {
    const Vec2 th(u(rng), u(rng));
    auto [lm, lp] = s.eigenvalues(th);
    Eigen::SelfAdjointEigenSolver<Mat2> es(s.matrix(th));
    CHECK(lm == doctest::Approx(es.eigenvalues()(0)).epsilon(1e-12));
    CHECK(lp == doctest::Approx(es.eigenvalues()(1)).epsilon(1e-12));
  }
  // honeycomb at (pi, pi): off-diagonal 1 + 2 e^{i pi} = -1
  auto [lm, lp] = s.eigenvalues(Vec2(pi, pi));
  CHECK(lm == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(lp == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("honeycomb linearization: analytic Taylor data") {
  const TwoBandSymbol s = TwoBandSymbol::from_hoppings(honeycomb_hoppings());
  const DiracLinearization lin = linearize_at_crossing(s, kDiracPoint);
  CHECK(std::abs(lin.f1) < 1e-9);
  CHECK(std::abs(lin.f2) < 1e-9);
  CHECK(lin.v1.norm() == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(lin.v2.norm() == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(lin.v1.dot(lin.v2) == doctest::Approx(-0.5).epsilon(1e-8));
  CHECK(lin.a0 == doctest::Approx(0.5).epsilon(1e-8));
  CHECK(lin.mu == doctest::Approx(-0.5).epsilon(1e-8));
  // v3 orthogonal to the span, unit
  CHECK(std::abs(lin.v3.dot(lin.v1)) < 1e-9);
  CHECK(std::abs(lin.v3.dot(lin.v2)) < 1e-9);
  CHECK(lin.v3.norm() == doctest::Approx(1.0));
  CHECK(lin.omega() == doctest::Approx(std::sqrt(3.0) / 2.0).epsilon(1e-8));
}

TEST_CASE("already-linear symbol linearizes exactly") {
  auto eval = [](const Vec2& th) -> Mat2 { return th[0] * sigma1() + th[1] * sigma2(); };
  const TwoBandSymbol s = TwoBandSymbol::from_callable(eval);
  const DiracLinearization lin = linearize_at_crossing(s, Vec2(0, 0));
  CHECK((lin.v1 - Vec3(1, 0, 0)).norm() < 1e-10);
  CHECK((lin.v2 - Vec3(0, 1, 0)).norm() < 1e-10);
  CHECK((lin.v3 - Vec3(0, 0, 1)).norm() < 1e-10);
  CHECK(lin.a0 == doctest::Approx(1.0).epsilon(1e-10));
  const EllipticityReport er = check_ellipticity(lin);
  // isotropic cone: det = -(t^2 + tau^2) exactly
  CHECK(er.worst_margin == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("parallel gradients are a degenerate cone") {
  auto eval = [](const Vec2& th) -> Mat2 {
    return (th[0] + 2 * th[1]) * sigma1();
  };
  const TwoBandSymbol s = TwoBandSymbol::from_callable(eval);
  CHECK_THROWS_WITH_AS(linearize_at_crossing(s, Vec2(0, 0)),
                       doctest::Contains("degenerate-cone"), Error);
}

TEST_CASE("strong tilt violates ellipticity") {
  // F0 = theta_1 (tilt slope 1 along v1 = e1): a = 1, not < 1.
  auto eval = [](const Vec2& th) -> Mat2 {
    return th[0] * Mat2::Identity() + th[0] * sigma1() + th[1] * sigma2();
  };
  const TwoBandSymbol s = TwoBandSymbol::from_callable(eval);
  CHECK_THROWS_WITH_AS(linearize_at_crossing(s, Vec2(0, 0)),
                       doctest::Contains("ellipticity-violated"), Error);
}

TEST_CASE("moderate tilt: a below one passes and is reported") {
  auto eval = [](const Vec2& th) -> Mat2 {
    return 0.8 * th[0] * Mat2::Identity() + th[0] * sigma1() + th[1] * sigma2();
  };
  const TwoBandSymbol s = TwoBandSymbol::from_callable(eval);
  const DiracLinearization lin = linearize_at_crossing(s, Vec2(0, 0));
  const EllipticityReport er = check_ellipticity(lin);
  CHECK(er.a == doctest::Approx(0.8).epsilon(1e-8));
  CHECK(er.pass);
}

TEST_CASE("ellipticity margin for the honeycomb cone") {
  const TwoBandSymbol s = TwoBandSymbol::from_hoppings(honeycomb_hoppings());
  const DiracLinearization lin = linearize_at_crossing(s, kDiracPoint);
  const EllipticityReport er = check_ellipticity(lin);
  CHECK(er.worst_margin == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(er.a == doctest::Approx(0.0).epsilon(1e-8));
}

TEST_CASE("Nagy intertwiner: identity, rotation oracle, out of range") {
  MatX P = MatX::Zero(2, 2);
  P(0, 0) = 1;
  CHECK(max_abs(MatX(nagy_intertwiner(P, P) - MatX::Identity(2, 2))) < 1e-12);

  // rank-1 projectors at angle phi: the intertwiner is the rotation by phi
  // (valid range: sin(phi) <= 1/2, the intertwiner precondition)
  const double phi = pi / 7;
  VecX v(2), w(2);
  v << 1, 0;
  w << std::cos(phi), std::sin(phi);
  const MatX P0 = v * v.adjoint();
  const MatX P1 = w * w.adjoint();
  const MatX U = nagy_intertwiner(P1, P0);
  MatX rot(2, 2);
  rot << std::cos(phi), -std::sin(phi), std::sin(phi), std::cos(phi);
  CHECK(max_abs(MatX(U - rot)) < 1e-10);
  CHECK(max_abs(MatX(U * P0 - P1 * U)) < 1e-10);

  // ||P - P0|| = sin(angle) = 0.6 -> rejected
  const double ang = std::asin(0.6);
  VecX w2(2);
  w2 << std::cos(ang), std::sin(ang);
  CHECK_THROWS_WITH_AS(nagy_intertwiner(MatX(w2 * w2.adjoint()), P0),
                       doctest::Contains("intertwiner-out-of-range"), Error);
}

TEST_CASE("Nagy intertwining identity on random nearby projectors") {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> g(0, 1);
  for (int t = 0; t < 30; ++t) {
    MatX A(5, 3);
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j < 3; ++j) A(i, j) = cxd(g(rng), g(rng));
    Eigen::HouseholderQR<MatX> qr(A);
    const MatX Q = qr.householderQ() * MatX::Identity(5, 3);
    const MatX P0 = Q * Q.adjoint();
    // small perturbation of the frame
    MatX B = Q;
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j < 3; ++j) B(i, j) += 0.05 * cxd(g(rng), g(rng));
    Eigen::HouseholderQR<MatX> qr2(B);
    const MatX Q2 = qr2.householderQ() * MatX::Identity(5, 3);
    const MatX P1 = Q2 * Q2.adjoint();
    const MatX U = nagy_intertwiner(P1, P0);
    CHECK(max_abs(MatX(U * U.adjoint() - MatX::Identity(5, 5))) < 1e-10);
    CHECK(max_abs(MatX(U * P0 - P1 * U)) < 1e-10);
  }
}

TEST_CASE("grid-backed symbol reproduces its samples (trigonometric interpolation)") {
  const TwoBandSymbol hop = TwoBandSymbol::from_hoppings(honeycomb_hoppings());
  const int n = 12;
  std::vector<Mat2> samples;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      samples.push_back(hop.matrix(Vec2(two_pi * i / n, two_pi * j / n)));
  const TwoBandSymbol grid = TwoBandSymbol::from_grid(n, samples);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      CHECK(max_abs(MatX(grid.matrix(Vec2(two_pi * i / n, two_pi * j / n)) -
                         samples[std::size_t(i) * n + j])) < 1e-12);
  // interpolation is exact for a trig polynomial of low degree
  CHECK(max_abs(MatX(grid.matrix(Vec2(0.3, 1.1)) - hop.matrix(Vec2(0.3, 1.1)))) < 1e-12);
}

TEST_CASE("F0 equals lambda_circ and |F| equals delta along the symbol") {
  const TwoBandSymbol s = TwoBandSymbol::from_hoppings(honeycomb_hoppings());
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(-pi, pi);
  for (int t = 0; t < 40; ++t) {
    const Vec2 th(u(rng), u(rng));
    auto [lm, lp] = s.eigenvalues(th);
    CHECK(s.lambda_circ(th) == doctest::Approx(0.5 * (lm + lp)).epsilon(1e-10));
    CHECK(s.delta(th) == doctest::Approx(0.5 * (lp - lm)).epsilon(1e-10));
    // Remark identity: 2 det = (Tr)^2 - Tr(M^2)
    const Mat2 M = s.matrix(th);
    const double tr = std::real(M.trace());
    const double tr2 = std::real((M * M).trace());
    CHECK(2.0 * s.det2(th) == doctest::Approx(tr * tr - tr2).epsilon(1e-10));
  }
}
