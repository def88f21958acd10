#include "diraclev/semiclassical.hpp"

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/FFT>

namespace diraclev {

MatX weyl_fiber_block(const HoppingSet& m, const FluxRational& flux, double s, double kappa) {
  const int q = flux.q;
  const double h = flux.h();
  MatX H = MatX::Zero(2 * q, 2 * q);
  for (const auto& [g, mm] : m.terms)
    for (int j = 0; j < q; ++j) {
      const int jp = ((j - g.g2) % q + q) % q;
      const cxd ph = std::exp(cxd(0, 0.5 * h * g.g1 * g.g2 - g.g1 * (s + h * j) - kappa * g.g2));
      for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 2; ++c) H(2 * j + r, 2 * jp + c) += ph * mm(r, c);
    }
  return H;
}

SpectrumSet spectrum_1d(const HoppingSet& m, const FluxRational& flux, int s_grid, int k_grid,
                        double lo, double hi) {
  std::vector<double> vals;
  const double h = flux.h();
  // s lives on a torus of circumference h (relabeling); at zero flux there is
  // no relabeling and s ranges over the full period.
  const double s_period = flux.p == 0 ? two_pi : h;
  vals.reserve(std::size_t(2 * flux.q) * s_grid * k_grid);
  for (int i = 0; i < s_grid; ++i)
    for (int j = 0; j < k_grid; ++j) {
      const double s = s_period * i / s_grid;
      const double kappa = (two_pi / flux.q) * j / k_grid;
      Eigen::SelfAdjointEigenSolver<MatX> es(weyl_fiber_block(m, flux, s, kappa),
                                             Eigen::EigenvaluesOnly);
      for (int a = 0; a < es.eigenvalues().size(); ++a) vals.push_back(es.eigenvalues()(a));
    }
  return make_spectrum(std::move(vals), lo, hi);
}

MatX quantize_1d_dense(const HoppingSet& m, double h, int cells, int steps_per_h, double t0) {
  const double dt = h / steps_per_h;
  const double width = two_pi * cells;
  const double steps = width / dt;
  require(std::abs(steps - std::lround(steps)) < 1e-9, "commensurability-error",
          "h must tile the periodized domain: 2*pi*cells / (h/steps_per_h) not an integer");
  const int M = int(std::lround(steps));
  MatX H = MatX::Zero(2 * M, 2 * M);
  for (const auto& [g, mm] : m.terms) {
    const int shift = g.g2 * steps_per_h;
    const cxd sym = std::exp(cxd(0, 0.5 * h * g.g1 * g.g2));
    for (int i = 0; i < M; ++i) {
      const double t = t0 + i * dt;
      const int ip = ((i - shift) % M + M) % M;
      const cxd ph = sym * std::exp(cxd(0, -g.g1 * t));
      for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 2; ++c) H(2 * i + r, 2 * ip + c) += ph * mm(r, c);
    }
  }
  return H;
}

MatX weyl_collocation_matrix(const std::function<Mat2(const Vec2&)>& symbol, double h,
                             double t0, double width, int M) {
  // K(i,j) = (1/M) sum_n k((t_i+t_j)/2, h tau_n) e^{i tau_n (t_i - t_j)},
  // tau_n = (2 pi / width)(n - M/2). For each midpoint the column over
  // (i - j) is an inverse DFT, done by FFT per 2x2 entry.
  require(M % 2 == 0, "invalid-input", "collocation grid size must be even");
  const double dt = width / M;
  Eigen::FFT<double> fft;
  MatX K = MatX::Zero(2 * M, 2 * M);
  std::vector<std::vector<cxd>> samples(4, std::vector<cxd>(std::size_t(M)));
  std::vector<std::vector<cxd>> kernel(4, std::vector<cxd>(std::size_t(M)));
  // Midpoints live on the half-step grid: 2M distinct values.
  for (int mid2 = 0; mid2 < 2 * M; ++mid2) {
    const double tmid = t0 + 0.5 * mid2 * dt;
    for (int n = 0; n < M; ++n) {
      const double tau = (two_pi / width) * (n - M / 2);
      const Mat2 val = symbol(Vec2(tmid, h * tau));
      samples[0][std::size_t(n)] = val(0, 0);
      samples[1][std::size_t(n)] = val(0, 1);
      samples[2][std::size_t(n)] = val(1, 0);
      samples[3][std::size_t(n)] = val(1, 1);
    }
    for (int e = 0; e < 4; ++e) {
      // e^{i tau_n v} with v = m dt and tau_n = (2pi/width)(n - M/2) equals
      // e^{2 pi i n m / M} (-1)^m for even M.
      std::vector<cxd> tmp(static_cast<std::size_t>(M), cxd());
      fft.inv(tmp, samples[std::size_t(e)]);  // (1/M) sum_n g_n e^{+2pi i n m/M}
      for (int mm = 0; mm < M; ++mm)
        kernel[std::size_t(e)][std::size_t(mm)] = tmp[std::size_t(mm)] * (mm % 2 ? -1.0 : 1.0);
    }
    // Fill all (i, j) with i + j = mid2 and v = (i - j) dt. Layout is
    // component-major: index a*M + i, matching apply_hopping_weyl.
    for (int i = std::max(0, mid2 - (M - 1)); i <= std::min(M - 1, mid2); ++i) {
      const int j = mid2 - i;
      if (j < 0 || j >= M) continue;
      const int v = ((i - j) % M + M) % M;
      K(0 * M + i, 0 * M + j) += kernel[0][std::size_t(v)];
      K(0 * M + i, 1 * M + j) += kernel[1][std::size_t(v)];
      K(1 * M + i, 0 * M + j) += kernel[2][std::size_t(v)];
      K(1 * M + i, 1 * M + j) += kernel[3][std::size_t(v)];
    }
  }
  return K;
}

VecX apply_hopping_weyl(const HoppingSet& m, double h, double t0, double width,
                        const VecX& u) {
  const int M = int(u.size() / 2);
  const double dt = width / M;
  Eigen::FFT<double> fft;

  auto shift_component = [&](const std::vector<cxd>& comp, double c) {
    // Band-limited translation by c: multiply the DFT by e^{-i xi c}.
    std::vector<cxd> hat(static_cast<std::size_t>(M), cxd());
    std::vector<cxd> tmp = comp;
    fft.fwd(hat, tmp);
    for (int n = 0; n < M; ++n) {
      const int k = (n <= M / 2) ? n : n - M;
      const double xi = two_pi * k / width;
      hat[std::size_t(n)] *= std::exp(cxd(0, -xi * c));
    }
    std::vector<cxd> out(static_cast<std::size_t>(M), cxd());
    fft.inv(out, hat);
    return out;
  };

  std::vector<std::vector<cxd>> comp(2, std::vector<cxd>(std::size_t(M)));
  for (int a = 0; a < 2; ++a)
    for (int i = 0; i < M; ++i) comp[std::size_t(a)][std::size_t(i)] = u(a * M + i);

  VecX out = VecX::Zero(2 * M);
  for (const auto& [g, mm] : m.terms) {
    const cxd sym = std::exp(cxd(0, 0.5 * h * g.g1 * g.g2));
    std::vector<std::vector<cxd>> shifted(2);
    for (int a = 0; a < 2; ++a) shifted[std::size_t(a)] = shift_component(comp[std::size_t(a)], g.g2 * h);
    for (int i = 0; i < M; ++i) {
      const double t = t0 + i * dt;
      const cxd ph = sym * std::exp(cxd(0, -g.g1 * t));
      for (int r = 0; r < 2; ++r) {
        cxd acc = 0;
        for (int c = 0; c < 2; ++c) acc += mm(r, c) * shifted[std::size_t(c)][std::size_t(i)];
        out(r * M + i) += ph * acc;
      }
    }
  }
  return out;
}

TwoBandSymbol one_crossing_symbol(const TwoBandSymbol& s, const std::vector<Vec2>& crossings,
                                  const std::vector<Vec3>& v3, const OneCrossingParams& oc) {
  require(oc.d0 > 0 && oc.c_lower > 0, "invalid-input", "d0 and c must be positive");
  require(oc.kept >= -1 && oc.kept < int(crossings.size()), "invalid-input",
          "kept index out of range (-1 gaps every listed crossing)");
  require(crossings.size() == v3.size(), "invalid-input", "need one v3 per crossing");
  const double bump_radius = oc.d0 / oc.c_lower;
  require(bump_radius <= pi, "cutoff-overlap",
          "d0/c exceeds half the lattice spacing; bumps would overlap");

  const std::vector<Vec2> pts = crossings;
  const std::vector<Vec3> vs = v3;
  const int kept = oc.kept;
  const double d0 = oc.d0, c = oc.c_lower;
  auto extra = [pts, vs, kept, d0, c](const Vec2& T) -> Mat2 {
    Mat2 add = Mat2::Zero();
    for (std::size_t ip = 0; ip < pts.size(); ++ip) {
      // Only lattice translates within bump reach of T matter.
      const Vec2 rel = T - pts[ip];
      const int n1 = int(std::lround(rel[0] / two_pi));
      const int n2 = int(std::lround(rel[1] / two_pi));
      for (int d1 = -1; d1 <= 1; ++d1)
        for (int d2 = -1; d2 <= 1; ++d2) {
          const Vec2 x = pts[ip] + two_pi * Vec2(n1 + d1, n2 + d2);
          if (int(ip) == kept && n1 + d1 == 0 && n2 + d2 == 0) continue;
          const double r = (T - x).norm() * c / d0;
          if (r >= 1.0) continue;
          add += (d0 / 8.0) * smooth_bump(r) * sigma_dot(vs[ip]);
        }
    }
    return add;
  };
  return s.shifted_by(extra);
}

SpectrumSet one_crossing_spectrum(const TwoBandSymbol& s_one, const Vec2& kept_crossing,
                                  const FluxRational& flux, int cells, int steps_per_h,
                                  double lo, double hi) {
  const double h = flux.h();
  const double dt = h / steps_per_h;
  const double width = two_pi * cells;
  const double steps = width / dt;
  require(std::abs(steps - std::lround(steps)) < 1e-9, "commensurability-error",
          "grid does not tile the window");
  const int M = int(std::lround(steps));
  const double t0 = kept_crossing[0] - 0.5 * width;
  auto eval = [&](const Vec2& T) { return s_one.matrix(T); };
  MatX K = weyl_collocation_matrix(eval, h, t0, width, M);
  K = 0.5 * (K + K.adjoint()).eval();
  Eigen::SelfAdjointEigenSolver<MatX> es(K, Eigen::EigenvaluesOnly);
  std::vector<double> vals(es.eigenvalues().data(),
                           es.eigenvalues().data() + es.eigenvalues().size());
  return make_spectrum(std::move(vals), lo, hi);
}

IsospectralReport cross_check_isospectral(const HoppingSet& m, const FluxRational& flux,
                                          double lo, double hi, int grid, double iso_tol) {
  IsospectralReport rep;
  rep.two_d = hofstadter_spectrum(m, flux, grid, lo, hi);
  rep.one_d = spectrum_1d(m, flux, grid, grid, lo, hi);
  const auto hr = hausdorff_full(rep.two_d, rep.one_d);
  rep.distance = hr.distance;
  rep.pass = !hr.empty_mismatch && rep.distance <= iso_tol;
  if (!rep.pass)
    throw Error("isospectrality-violation",
                "2D and 1D routes disagree: Hausdorff distance " + std::to_string(rep.distance));
  return rep;
}

}  // namespace diraclev
