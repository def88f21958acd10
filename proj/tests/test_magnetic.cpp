#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <random>

#include "diraclev/bloch.hpp"
#include "diraclev/magnetic.hpp"
#include "diraclev/sections.hpp"

using namespace diraclev;

TEST_CASE("magnetic phase: unit modulus, antisymmetry, frozen value") {
  const Vec2 x(1, 0), y(0, 1);
  CHECK(magnetic_phase(x, x, 2.7) == cxd(1, 0));
  CHECK(std::abs(magnetic_phase(x, y, 0.77) * magnetic_phase(y, x, 0.77) - cxd(1, 0)) <
        1e-15);
  CHECK(std::abs(std::abs(magnetic_phase(x, y, 1.3)) - 1.0) < 1e-15);
  // x=(1,0), y=(0,1), eps B0 = pi: exp(-i pi/2) = -i
  CHECK(std::abs(magnetic_phase(x, y, pi) - cxd(0, -1)) < 1e-15);
}

TEST_CASE("flux phase: Stokes identity against the signed-area oracle") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-4, 4);
  for (int t = 0; t < 100; ++t) {
    const Vec2 x(u(rng), u(rng)), y(u(rng), u(rng)), z(u(rng), u(rng));
    const double h = std::abs(u(rng));
    const cxd direct = std::exp(cxd(0, -0.5 * h * wedge(y - x, z - x)));
    CHECK(std::abs(flux_phase(x, y, z, h) - direct) < 1e-13);
    const Vec2 w(5, -3);
    CHECK(std::abs(flux_phase(x + w, y + w, z + w, h) - flux_phase(x, y, z, h)) < 1e-13);
  }
  const Vec2 x(0, 0), y(2, 2), z(1, 1);
  CHECK(std::abs(flux_phase(x, y, z, 1.7) - cxd(1, 0)) < 1e-14);
  CHECK(std::abs(flux_phase(Vec2(0, 0), Vec2(1, 0), Vec2(0, 1), two_pi) - cxd(-1, 0)) <
        1e-13);
}

TEST_CASE("magnetic matrix: Hermitian, on-site spectrum, zero-field limit") {
  HoppingSet onsite;
  onsite.add(0, 0, sigma3());
  const MatX H = build_magnetic_matrix(onsite, 0.37, 4);
  Eigen::SelfAdjointEigenSolver<MatX> es(H);
  for (int i = 0; i < es.eigenvalues().size(); ++i)
    CHECK(std::abs(std::abs(es.eigenvalues()(i)) - 1.0) < 1e-12);

  const HoppingSet honey = honeycomb_hoppings();
  const MatX M = build_magnetic_matrix(honey, 0.21, 5);
  CHECK(max_abs(MatX(M - M.adjoint())) < 1e-12);

  const MatX M0 = build_magnetic_matrix(honey, 0.0, 5);
  Eigen::SelfAdjointEigenSolver<MatX> es0(M0);
  CHECK(es0.eigenvalues().minCoeff() > -3.0 - 1e-9);
  CHECK(es0.eigenvalues().maxCoeff() < 3.0 + 1e-9);
}

TEST_CASE("magnetic matrix: translated gauge equals diagonal conjugation, exactly") {
  const HoppingSet honey = honeycomb_hoppings();
  const double h = 0.31;
  const int L = 4;
  const Vec2 w(1, -2);
  const int n = 2 * L + 1;
  auto site_index = [&](int a1, int a2) { return (a1 + L) * n + (a2 + L); };

  const MatX M = build_magnetic_matrix(honey, h, L);
  MatX Mt = MatX::Zero(M.rows(), M.cols());
  MatX D = MatX::Zero(M.rows(), M.cols());
  for (int a1 = -L; a1 <= L; ++a1)
    for (int a2 = -L; a2 <= L; ++a2) {
      const Vec2 alpha(a1, a2);
      const cxd d = std::exp(cxd(0, -0.5 * h * wedge(alpha, w)));
      D.block(2 * site_index(a1, a2), 2 * site_index(a1, a2), 2, 2) = d * Mat2::Identity();
      for (const auto& [g, mm] : honey.terms) {
        const int b1 = a1 - g.g1, b2 = a2 - g.g2;
        if (std::abs(b1) > L || std::abs(b2) > L) continue;
        const cxd ph = magnetic_phase(alpha + w, Vec2(b1, b2) + w, h);
        Mt.block(2 * site_index(a1, a2), 2 * site_index(b1, b2), 2, 2) += ph * mm;
      }
    }
  CHECK(max_abs(MatX(Mt - D * M * D.adjoint())) < 1e-13);
}

TEST_CASE("magnetic translation cocycle on interior sites") {
  const double h = 0.29;
  const int L = 5;
  const int n = 2 * L + 1;
  auto site = [&](int a1, int a2) { return (a1 + L) * n + (a2 + L); };
  auto translation = [&](int w1, int w2) {
    MatX T = MatX::Zero(n * n, n * n);
    for (int a1 = -L; a1 <= L; ++a1)
      for (int a2 = -L; a2 <= L; ++a2) {
        const int b1 = a1 - w1, b2 = a2 - w2;
        if (std::abs(b1) > L || std::abs(b2) > L) continue;
        T(site(a1, a2), site(b1, b2)) = magnetic_phase(Vec2(a1, a2), Vec2(w1, w2), h);
      }
    return T;
  };
  const MatX Ta = translation(1, 0), Tb = translation(0, 1), Tab = translation(1, 1);
  const MatX lhs = Ta * Tb;
  const MatX rhs = magnetic_phase(Vec2(0, 1), Vec2(1, 0), h) * Tab;
  for (int a1 = -L + 2; a1 <= L - 2; ++a1)
    for (int a2 = -L + 2; a2 <= L - 2; ++a2)
      for (int b1 = -L; b1 <= L; ++b1)
        for (int b2 = -L; b2 <= L; ++b2)
          CHECK(std::abs(lhs(site(a1, a2), site(b1, b2)) -
                         rhs(site(a1, a2), site(b1, b2))) < 1e-13);
}

TEST_CASE("hofstadter: zero flux reproduces Bloch band samples") {
  const HoppingSet honey = honeycomb_hoppings();
  const SpectrumSet s = hofstadter_spectrum(honey, FluxRational(0, 1), 6, -10, 10);
  const TwoBandSymbol sym = peierls_symbol(honey);
  for (double v : s.values) {
    double best = 1e300;
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 6; ++j) {
        auto [lm, lp] = sym.eigenvalues(Vec2(two_pi * i / 6, two_pi * j / 6));
        best = std::min({best, std::abs(v - lm), std::abs(v - lp)});
      }
    CHECK(best < 1e-10);
  }
}

TEST_CASE("hofstadter: chiral symmetry at flux 1/2 and flux periodicity") {
  const HoppingSet honey = honeycomb_hoppings();
  const SpectrumSet s = hofstadter_spectrum(honey, FluxRational(1, 2), 5, -10, 10);
  for (double v : s.values) {
    double best = 1e300;
    for (double w : s.values) best = std::min(best, std::abs(v + w));
    CHECK(best < 1e-10);
  }
  const MatX B1 = hofstadter_block(honey, FluxRational(1, 3), 0.3, 0.7);
  const MatX B2 = hofstadter_block(honey, FluxRational(4, 3), 0.3, 0.7);
  CHECK(max_abs(MatX(B1 - B2)) < 1e-12);
}

TEST_CASE("inverse square root of a positive Hermitian matrix") {
  CHECK(max_abs(MatX(inverse_sqrt(MatX::Identity(3, 3)) - MatX::Identity(3, 3))) < 1e-13);
  MatX G = MatX::Zero(2, 2);
  G(0, 0) = 4;
  G(1, 1) = 1;
  const MatX F = inverse_sqrt(G);
  CHECK(std::abs(F(0, 0) - cxd(0.5, 0)) < 1e-13);
  CHECK(std::abs(F(1, 1) - cxd(1.0, 0)) < 1e-13);

  MatX G2(2, 2);
  G2 << 1.0, 0.2, 0.2, 1.0;
  const MatX F2 = inverse_sqrt(G2);
  MatX oracle(2, 2);
  const double a = 1.0 / std::sqrt(1.2), b = 1.0 / std::sqrt(0.8);
  oracle << (a + b) / 2, (a - b) / 2, (a - b) / 2, (a + b) / 2;
  CHECK(max_abs(MatX(F2 - oracle)) < 1e-12);
  CHECK(max_abs(MatX(F2 * G2 * F2 - MatX::Identity(2, 2))) < 1e-10);

  MatX bad = MatX::Zero(2, 2);
  bad(0, 0) = 1e-12;
  bad(1, 1) = 1;
  CHECK_THROWS_WITH_AS(inverse_sqrt(bad), doctest::Contains("gram-not-positive"), Error);
}

TEST_CASE("point-supported Wannier pair: Gram is the identity at any flux") {
  WannierPair w;
  w.dim = 2;
  w.radius = 0;
  w.w.assign(2, MatX::Zero(1, 2));
  w.w[0](0, 0) = 1;
  w.w[1](0, 1) = 1;
  for (double h : {0.0, 0.17, 0.9}) {
    const MatX G = gram_matrix_from_wannier(w, h, 2);
    CHECK(max_abs(MatX(G - MatX::Identity(G.rows(), G.cols()))) < 1e-14);
  }
}

namespace {

// Smooth orthonormal section pair of the trivial C^2 bundle; translates of
// the Wannier data are orthonormal at zero field by Fourier orthogonality.
WannierPair toy_wannier(int grid_n) {
  SectionField sminus, splus;
  sminus.grid.n = splus.grid.n = grid_n;
  sminus.dim = splus.dim = 2;
  sminus.psi.resize(std::size_t(grid_n) * grid_n);
  splus.psi.resize(sminus.psi.size());
  for (int i = 0; i < grid_n; ++i)
    for (int j = 0; j < grid_n; ++j) {
      const double a =
          0.4 * std::sin(two_pi * i / grid_n) + 0.3 * std::cos(two_pi * j / grid_n);
      VecX v(2), u(2);
      v << std::cos(a), std::sin(a);
      u << -std::sin(a), std::cos(a);
      sminus.psi[sminus.grid.flat(i, j)] = v;
      splus.psi[splus.grid.flat(i, j)] = u;
    }
  return build_quasi_band_projector(sminus, splus).wannier;
}

}  // namespace

TEST_CASE("Gaussian-overlap toy: Gram deviation linear in the flux") {
  // Overlaps with the leading magnetic response i sin(eps alpha^beta) under a
  // Gaussian envelope; Hermitian-symmetric by construction.
  auto make_overlap = [](double e) {
    return [e](int j, const LatticeIndex& a, int k, const LatticeIndex& b) -> cxd {
      if (j != k) return 0.0;
      if (a.g1 == b.g1 && a.g2 == b.g2) return 1.0;
      const double d2 = double(a.g1 - b.g1) * (a.g1 - b.g1) +
                        double(a.g2 - b.g2) * (a.g2 - b.g2);
      const double wedge_ab = double(a.g1) * b.g2 - double(a.g2) * b.g1;
      return cxd(0, std::sin(e * wedge_ab)) * std::exp(-d2);
    };
  };
  std::vector<double> eps = {0.01, 0.005, 0.0025, 0.00125, 0.000625};
  std::vector<double> dev;
  for (double e : eps) {
    const MatX G = gram_matrix(make_overlap(e), 3);
    dev.push_back(max_abs(MatX(G - MatX::Identity(G.rows(), G.cols()))));
  }
  CHECK(dev[0] <= 0.05);
  const double slope = loglog_slope(eps, dev);
  CHECK(slope == doctest::Approx(1.0).epsilon(0.05));
  // positivity at small flux; gram-not-positive surfaces via inverse_sqrt
  const MatX F = inverse_sqrt(gram_matrix(make_overlap(0.01), 3));
  const MatX G = gram_matrix(make_overlap(0.01), 3);
  CHECK(max_abs(MatX(F * G * F - MatX::Identity(G.rows(), G.cols()))) < 1e-10);
}

TEST_CASE("dressed Gram deviation is bounded by C epsilon") {
  const WannierPair w = toy_wannier(20);
  const MatX G1 = gram_matrix_from_wannier(w, 0.02, 3);
  const MatX G2 = gram_matrix_from_wannier(w, 0.01, 3);
  const double d1 = max_abs(MatX(G1 - MatX::Identity(G1.rows(), G1.cols())));
  const double d2 = max_abs(MatX(G2 - MatX::Identity(G2.rows(), G2.cols())));
  CHECK(d1 <= 0.05);
  CHECK(d2 <= d1);  // monotone toward the flux-free limit
}

TEST_CASE("peierls symbol roundtrip and symbol distance") {
  const HoppingSet honey = honeycomb_hoppings();
  const TwoBandSymbol k = peierls_symbol(honey);
  const int n = 8;
  std::vector<Mat2> samples;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      samples.push_back(k.matrix(Vec2(two_pi * i / n, two_pi * j / n)));
  const TwoBandSymbol k2 = TwoBandSymbol::from_grid(n, samples);
  for (const auto& [g, mm] : honey.terms)
    CHECK(max_abs(MatX(k2.hoppings()->at(g.g1, g.g2) - mm)) < 1e-12);

  CHECK(symbol_distance(k, k, 0, 0) == 0.0);
  HoppingSet c1, c2;
  c1.add(0, 0, Mat2(2.0 * Mat2::Identity()));
  c2.add(0, 0, Mat2(-1.0 * Mat2::Identity()));
  CHECK(symbol_distance(peierls_symbol(c1), peierls_symbol(c2), 1, 0, 16) < 1e-10);
  CHECK(symbol_distance(peierls_symbol(c1), peierls_symbol(c2), 0, 0, 16) ==
        doctest::Approx(3.0));
}

TEST_CASE("magnetic dressing: epsilon-linear symbol drift and Lambda factorization") {
  const WannierPair w = toy_wannier(20);
  OperatorHoppings Hfiber;
  for (const auto& [g, mm] : honeycomb_hoppings().terms) Hfiber.add(g.g1, g.g2, MatX(mm));

  const int R = 4, keep = 2;
  const DressedResult d0 = magnetic_dressed_hoppings(Hfiber, w, 0.0, R, keep);
  const DressedResult d1 = magnetic_dressed_hoppings(Hfiber, w, 0.02, R, keep);
  const DressedResult d2 = magnetic_dressed_hoppings(Hfiber, w, 0.01, R, keep);

  CHECK(d0.gram_dev < 1e-10);
  CHECK(d1.factorization_defect < 1e-8);
  CHECK(d1.gram_dev <= 0.05);
  const TwoBandSymbol k0 = peierls_symbol(d0.m_eps);
  const double dist1 = symbol_distance(peierls_symbol(d1.m_eps), k0, 0, 0, 16);
  const double dist2 = symbol_distance(peierls_symbol(d2.m_eps), k0, 0, 0, 16);
  CHECK(dist1 / dist2 == doctest::Approx(2.0).epsilon(0.15));
  const double dd1 = symbol_distance(peierls_symbol(d1.m_eps), k0, 1, 0, 16);
  const double dd2 = symbol_distance(peierls_symbol(d2.m_eps), k0, 1, 0, 16);
  CHECK(dd1 / dd2 == doctest::Approx(2.0).epsilon(0.2));
}

TEST_CASE("nonconstant field: kappa = 0 matches the Hofstadter route") {
  const HoppingSet honey = honeycomb_hoppings();
  const FluxRational flux(1, 20);
  MagneticParams mp;
  mp.epsilon = flux.h();
  mp.B0 = 1.0;
  mp.kappa = 0;
  mp.B = [](const Vec2&) { return 0.0; };
  // Window around the zero Landau level, where interior states are sharp; at
  // this moderate flux they still carry a small boundary tail, so the filter
  // threshold is loosened accordingly.
  const double wlo = -0.35, whi = 0.35;
  InteriorFilterReport rep;
  const SpectrumSet fin =
      nonconstant_field_spectrum(honey, mp, 10, wlo, whi, &rep, 1e-2);
  const SpectrumSet hof = hofstadter_spectrum(honey, flux, 4, wlo, whi);
  REQUIRE(!fin.empty());
  CHECK(rep.kept > 0);
  CHECK(rep.discarded > 0);
  CHECK(directed_hausdorff(fin.values, hof.values) < 1e-6);
}

TEST_CASE("Bloch supercell route equals the Hofstadter route at kappa = 0") {
  const HoppingSet honey = honeycomb_hoppings();
  const FluxRational flux(1, 6);
  auto A_zero = [](const Vec2&) { return Vec2(0, 0); };
  // Supercell period q makes both quasimomentum grids range over
  // [0, 2pi/q)^2, so the sampled unions coincide exactly.
  const SpectrumSet sup = nonconstant_field_bloch_spectrum(honey, flux, 0.0, A_zero, 6,
                                                           -10, 10, 6);
  const SpectrumSet hof = hofstadter_spectrum(honey, flux, 6, -10, 10);
  CHECK(hausdorff(sup, hof) < 1e-10);
}

TEST_CASE("nonconstant field: constant B is a reparametrization, exactly") {
  const HoppingSet honey = honeycomb_hoppings();
  MagneticParams mp;
  mp.epsilon = 0.2;
  mp.B0 = 1.0;
  mp.kappa = 0.3;
  mp.B = [](const Vec2&) { return 1.0; };
  MagneticParams mp_eq;
  mp_eq.epsilon = 0.2 * 1.3;  // epsilon (B0 + kappa)
  mp_eq.B0 = 1.0;
  mp_eq.kappa = 0;
  mp_eq.B = [](const Vec2&) { return 0.0; };
  const SpectrumSet a = nonconstant_field_spectrum(honey, mp, 6, -2, 2);
  const SpectrumSet b = nonconstant_field_spectrum(honey, mp_eq, 6, -2, 2);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    CHECK(a.values[i] == doctest::Approx(b.values[i]).epsilon(1e-11));
}

TEST_CASE("flux parsing and continued-fraction approximation") {
  const FluxRational f = FluxRational::parse("3/7");
  CHECK(f.p == 3);
  CHECK(f.q == 7);
  CHECK_THROWS_AS(FluxRational::parse("2/4"), Error);
  const FluxRational g = approximate_flux(two_pi * 0.3183098861837907, 50);
  CHECK(std::abs(double(g.p) / g.q - 0.3183098861837907) < 1e-3);
}
