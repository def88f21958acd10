#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <random>

#include "diraclev/semiclassical.hpp"
#include "diraclev/two_band.hpp"

using namespace diraclev;

namespace {

std::vector<double> sorted_eigs(const MatX& H) {
  Eigen::SelfAdjointEigenSolver<MatX> es(H, Eigen::EigenvaluesOnly);
  return std::vector<double>(es.eigenvalues().data(),
                             es.eigenvalues().data() + es.eigenvalues().size());
}

}  // namespace

TEST_CASE("scalar symbols: constants and multiplication operators") {
  HoppingSet c;
  c.add(0, 0, Mat2(0.7 * sigma3()));
  const MatX K = quantize_1d_dense(c, two_pi / 3, 1, 2);
  const auto ev = sorted_eigs(K);
  for (double v : ev) CHECK(std::abs(std::abs(v) - 0.7) < 1e-12);

  HoppingSet cost;
  cost.add(1, 0, Mat2(0.5 * Mat2::Identity()));
  cost.add(-1, 0, Mat2(0.5 * Mat2::Identity()));
  const int M = 18;  // cells * steps * q
  const MatX Kc = quantize_1d_dense(cost, two_pi / 3, 2, 3);
  REQUIRE(Kc.rows() == 2 * M);
  std::vector<double> expected;
  for (int i = 0; i < M; ++i) {
    expected.push_back(std::cos(two_pi * 2.0 * i / M));
    expected.push_back(std::cos(two_pi * 2.0 * i / M));
  }
  std::sort(expected.begin(), expected.end());
  const auto got = sorted_eigs(Kc);
  for (std::size_t i = 0; i < got.size(); ++i)
    CHECK(got[i] == doctest::Approx(expected[i]).epsilon(1e-12));
}

TEST_CASE("Harper at flux 1/5: fiber blocks against the Chambers oracle") {
  const HoppingSet harper = harper_hoppings();
  const FluxRational flux(1, 5);
  const int q = 5;

  auto scalar_harper = [&](double s, double kappa) {
    Eigen::MatrixXcd H = Eigen::MatrixXcd::Zero(q, q);
    for (int j = 0; j < q; ++j) {
      H(j, j) = std::cos(s + flux.h() * j);
      H(j, (j + q - 1) % q) += 0.5 * std::exp(cxd(0, -kappa));
      H(j, (j + 1) % q) += 0.5 * std::exp(cxd(0, kappa));
    }
    return H;
  };

  // Chambers structure: det(E - H(s,kappa)) + (cos(q s) + cos(q kappa))/2^{q-1}
  // does not depend on (s, kappa).
  auto char_poly_at = [&](double s, double kappa, double E) {
    return (Eigen::MatrixXcd::Identity(q, q) * E - scalar_harper(s, kappa))
        .determinant()
        .real();
  };
  const double base =
      char_poly_at(0.3, 0.9, 0.37) + (std::cos(5 * 0.3) + std::cos(5 * 0.9)) / 16.0;
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-pi, pi);
  for (int t = 0; t < 24; ++t) {
    const double s = u(rng), k = u(rng);
    const double val =
        char_poly_at(s, k, 0.37) + (std::cos(5 * s) + std::cos(5 * k)) / 16.0;
    CHECK(val == doctest::Approx(base).epsilon(1e-10));
  }

  // The 2q x 2q fiber block carries two copies of the scalar Harper spectrum.
  for (int t = 0; t < 8; ++t) {
    const double s = u(rng), k = u(rng);
    const auto block = sorted_eigs(weyl_fiber_block(harper, flux, s, k));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(scalar_harper(s, k));
    std::vector<double> oracle;
    for (int i = 0; i < q; ++i) {
      oracle.push_back(es.eigenvalues()(i));
      oracle.push_back(es.eigenvalues()(i));
    }
    std::sort(oracle.begin(), oracle.end());
    REQUIRE(block.size() == oracle.size());
    for (std::size_t i = 0; i < oracle.size(); ++i)
      CHECK(block[i] == doctest::Approx(oracle[i]).epsilon(1e-10));
  }
}

TEST_CASE("dense periodized quantization block-diagonalizes over the fibers") {
  const HoppingSet harper = harper_hoppings();
  const FluxRational flux(1, 5);
  const int cells = 2, steps = 3;
  const MatX K = quantize_1d_dense(harper, flux.h(), cells, steps);
  std::vector<double> dense = sorted_eigs(K);

  std::vector<double> fibers;
  for (int i = 0; i < steps; ++i)
    for (int j = 0; j < cells; ++j) {
      const double s = flux.h() * i / steps;
      const double kappa = (two_pi / flux.q) * j / cells;
      const auto ev = sorted_eigs(weyl_fiber_block(harper, flux, s, kappa));
      fibers.insert(fibers.end(), ev.begin(), ev.end());
    }
  std::sort(fibers.begin(), fibers.end());
  REQUIRE(dense.size() == fibers.size());
  for (std::size_t i = 0; i < dense.size(); ++i)
    CHECK(dense[i] == doctest::Approx(fibers[i]).epsilon(1e-10));
}

TEST_CASE("collocation quantization agrees with the hop-exact grid operator") {
  const HoppingSet honey = honeycomb_hoppings();
  const double h = two_pi / 5;
  const MatX dense = quantize_1d_dense(honey, h, 1, 2, 0.0);
  const TwoBandSymbol sym = peierls_symbol(honey);
  auto eval = [&](const Vec2& T) { return sym.matrix(T); };
  const int M = int(dense.rows() / 2);
  MatX coll = weyl_collocation_matrix(eval, h, 0.0, two_pi, M);
  // the dense operator is site-interleaved; permute to component-major
  MatX P = MatX::Zero(2 * M, 2 * M);
  for (int i = 0; i < M; ++i) {
    P(0 * M + i, 2 * i + 0) = 1;
    P(1 * M + i, 2 * i + 1) = 1;
  }
  CHECK(max_abs(MatX(coll - P * dense * P.transpose())) < 1e-11);
}

TEST_CASE("apply_hopping_weyl matches the dense operator on smooth vectors") {
  const HoppingSet honey = honeycomb_hoppings();
  const double h = two_pi / 5;
  const MatX dense = quantize_1d_dense(honey, h, 1, 4, 0.0);
  const int M = int(dense.rows() / 2);
  VecX u(2 * M);
  for (int i = 0; i < M; ++i) {
    const double t = two_pi * i / M;
    u(i) = std::exp(cxd(0, 2 * t)) * std::exp(-std::cos(t));
    u(M + i) = std::sin(t) + cxd(0, 0.3) * std::cos(2 * t);
  }
  VecX ud(2 * M);
  for (int i = 0; i < M; ++i) {
    ud(2 * i) = u(i);
    ud(2 * i + 1) = u(M + i);
  }
  const VecX dense_out = dense * ud;
  const VecX fft_out = apply_hopping_weyl(honey, h, 0.0, two_pi, u);
  for (int i = 0; i < M; ++i) {
    CHECK(std::abs(fft_out(i) - dense_out(2 * i)) < 1e-10);
    CHECK(std::abs(fft_out(M + i) - dense_out(2 * i + 1)) < 1e-10);
  }
}

TEST_CASE("parity symmetry of the quantization of an even real scalar symbol") {
  const HoppingSet harper = harper_hoppings();
  const MatX K = quantize_1d_dense(harper, two_pi / 3, 1, 2, 0.0);
  const int M = int(K.rows() / 2);
  MatX P = MatX::Zero(2 * M, 2 * M);
  for (int i = 0; i < M; ++i) {
    const int ir = (M - i) % M;  // t -> -t on the periodized grid
    P(2 * ir + 0, 2 * i + 0) = 1;
    P(2 * ir + 1, 2 * i + 1) = 1;
  }
  CHECK(max_abs(MatX(P * K - K * P)) < 1e-13);
}

TEST_CASE("dilation covariance: symmetric quantization has identical spectrum") {
  const HoppingSet honey = honeycomb_hoppings();
  const TwoBandSymbol sym = peierls_symbol(honey);
  const double h = two_pi / 5;
  const double rh = std::sqrt(h);
  const int M = 40;
  auto plain = [&](const Vec2& T) { return sym.matrix(T); };
  auto symmetric = [&](const Vec2& T) { return sym.matrix(Vec2(rh * T[0], T[1])); };
  const MatX Kp = weyl_collocation_matrix(plain, h, 0.0, two_pi, M);
  const MatX Ks = weyl_collocation_matrix(symmetric, rh, 0.0, two_pi / rh, M);
  const auto evp = sorted_eigs(Kp), evs = sorted_eigs(Ks);
  for (std::size_t i = 0; i < evp.size(); ++i)
    CHECK(evp[i] == doctest::Approx(evs[i]).epsilon(1e-10));
}

TEST_CASE("isospectrality of the 2D and 1D routes") {
  const HoppingSet honey = honeycomb_hoppings();
  for (int q : {3, 5}) {
    const auto rep = cross_check_isospectral(honey, FluxRational(1, q), -10, 10, 4, 1e-8);
    CHECK(rep.pass);
    CHECK(rep.distance <= 1e-8);
  }
  const auto rep0 = cross_check_isospectral(honey, FluxRational(0, 1), -10, 10, 3, 1e-8);
  CHECK(rep0.distance <= 1e-8);
}

TEST_CASE("a flipped symmetrization sign is detected as a violation") {
  HoppingSet m = honeycomb_hoppings();
  m.add_with_conjugate(1, 1, Mat2(0.4 * sigma3()));  // makes the Weyl phase matter
  const FluxRational flux(1, 3);
  const auto good = cross_check_isospectral(m, flux, -10, 10, 4, 1e-8);
  CHECK(good.pass);

  std::vector<double> wrong;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      const double s = flux.h() * i / 4;
      const double kappa = (two_pi / flux.q) * j / 4;
      MatX H = MatX::Zero(2 * flux.q, 2 * flux.q);
      for (const auto& [g, mm] : m.terms)
        for (int l = 0; l < flux.q; ++l) {
          const int lp = ((l - g.g2) % flux.q + flux.q) % flux.q;
          const cxd ph =
              std::exp(cxd(0, -0.5 * flux.h() * g.g1 * g.g2 -
                                  g.g1 * (s + flux.h() * l) - kappa * g.g2));
          for (int r = 0; r < 2; ++r)
            for (int c = 0; c < 2; ++c) H(2 * l + r, 2 * lp + c) += ph * mm(r, c);
        }
      const auto ev = sorted_eigs(MatX(0.5 * (H + H.adjoint())));
      wrong.insert(wrong.end(), ev.begin(), ev.end());
    }
  const SpectrumSet wrong_set(wrong, -10, 10);
  const SpectrumSet right = hofstadter_spectrum(m, flux, 4, -10, 10);
  CHECK(hausdorff(right, wrong_set) > 1e-8);
}

TEST_CASE("one-crossing symbol: support and gap structure") {
  const TwoBandSymbol honey = peierls_symbol(honeycomb_hoppings());
  const Vec2 th0(2 * pi / 3, -2 * pi / 3);
  const DiracLinearization lin = linearize_at_crossing(honey, th0);
  OneCrossingParams oc;
  oc.d0 = 0.5;
  oc.d1 = 0.2;
  oc.c_lower = 0.9;
  oc.kept = 0;
  const std::vector<Vec2> crossings = {th0, Vec2(-th0)};
  const std::vector<Vec3> v3 = {lin.v3, lin.v3};
  const TwoBandSymbol one = one_crossing_symbol(honey, crossings, v3, oc);

  CHECK(one.F(th0).norm() < 1e-12);
  CHECK(max_abs(MatX(one.matrix(th0 + Vec2(0.15, 0)) -
                     honey.matrix(th0 + Vec2(0.15, 0)))) < 1e-15);
  CHECK(2 * one.F(Vec2(-th0)).norm() >= oc.d0 / 8);
  CHECK(2 * one.F(th0 + Vec2(two_pi, 0)).norm() >= oc.d0 / 8);

  OneCrossingParams tiny = oc;
  tiny.d0 = 1e-9;
  const TwoBandSymbol almost = one_crossing_symbol(honey, crossings, v3, tiny);
  CHECK(max_abs(MatX(almost.matrix(Vec2(0.3, 0.4)) - honey.matrix(Vec2(0.3, 0.4)))) <
        1e-9);

  OneCrossingParams wide = oc;
  wide.d0 = 4.0;
  CHECK_THROWS_WITH_AS(one_crossing_symbol(honey, crossings, v3, wide),
                       doctest::Contains("cutoff-overlap"), Error);
}

TEST_CASE("one-crossing spectrum near zero approximates the periodic one") {
  const TwoBandSymbol honey = peierls_symbol(honeycomb_hoppings());
  const Vec2 th0(2 * pi / 3, -2 * pi / 3);
  const DiracLinearization lin = linearize_at_crossing(honey, th0);
  // d0 large enough that the opened gap clears the observation window
  // (0.3 sqrt(h) must sit inside the d0/8 plateau).
  OneCrossingParams oc;
  oc.d0 = 1.0;
  oc.c_lower = 0.87;
  oc.kept = 0;
  const TwoBandSymbol one =
      one_crossing_symbol(honey, {th0, Vec2(-th0)}, {lin.v3, lin.v3}, oc);

  const FluxRational flux(1, 47);
  const double h = flux.h();
  const double win = 0.3 * std::sqrt(h);
  const SpectrumSet one_sp = one_crossing_spectrum(one, th0, flux, 5, 2, -win, win);
  const SpectrumSet per_sp = hofstadter_spectrum(honeycomb_hoppings(), flux, 6, -win, win);
  REQUIRE(!one_sp.empty());
  REQUIRE(!per_sp.empty());
  CHECK(hausdorff(one_sp, per_sp) < 1e-6);
}
