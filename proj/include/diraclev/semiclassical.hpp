#pragma once

#include <functional>

#include "diraclev/common.hpp"
#include "diraclev/magnetic.hpp"
#include "diraclev/spectrum.hpp"
#include "diraclev/two_band.hpp"

namespace diraclev {

// One (s, kappa) fiber (2q x 2q) of Op1(k(t, h tau)) at rational flux p/q:
// hop gamma carries e^{i h g1 g2 / 2} e^{-i g1 (s + h j)} e^{-i kappa g2} and
// shifts j -> j - g2 (mod q).
MatX weyl_fiber_block(const HoppingSet& m, const FluxRational& flux, double s, double kappa);

// Union of fiber eigenvalues over matched uniform grids: s in h*[0,1) with
// s_grid points, kappa in (2pi/q)*[0,1) with k_grid points.
SpectrumSet spectrum_1d(const HoppingSet& m, const FluxRational& flux, int s_grid, int k_grid,
                        double lo, double hi);

// Dense periodized-grid Weyl operator for a hopping symbol on t in
// [t0, t0 + 2*pi*cells): grid step dt = h / steps_per_h must tile the domain.
MatX quantize_1d_dense(const HoppingSet& m, double h, int cells, int steps_per_h,
                       double t0 = 0.0);

// Collocation (midpoint-DFT) Weyl quantization of a general 2x2 symbol
// evaluated at (t, h tau); exact on hopping terms whose shift is grid-aligned.
MatX weyl_collocation_matrix(const std::function<Mat2(const Vec2&)>& symbol, double h,
                             double t0, double width, int M);

// Apply the Weyl quantization of a hopping symbol to a grid function via
// exact modulations and FFT (band-limited) shifts. Layout: component-major.
VecX apply_hopping_weyl(const HoppingSet& m, double h, double t0, double width,
                        const VecX& u);

struct OneCrossingParams {
  double d0 = 0;          // gap-opening energy
  double d1 = 0;          // radius where the symbol must stay untouched
  double c_lower = 0;     // linear-cone constant c from the gap bounds
  int kept = 0;           // index into the crossing list of the kept point
};

// Symbol on R^2 gapped by (d0/8) g(c (T - x*)/d0) sigma_{v3} at every
// crossing translate x* except the kept one.
TwoBandSymbol one_crossing_symbol(const TwoBandSymbol& s, const std::vector<Vec2>& crossings,
                                  const std::vector<Vec3>& v3, const OneCrossingParams& oc);

// Spectrum of the one-crossing quantization near zero: dense collocation on a
// cells-wide window with interior filtering (the symbol is gapped elsewhere).
SpectrumSet one_crossing_spectrum(const TwoBandSymbol& s_one, const Vec2& kept_crossing,
                                  const FluxRational& flux, int cells, int steps_per_h,
                                  double lo, double hi);

struct IsospectralReport {
  double distance = 0;
  SpectrumSet two_d;
  SpectrumSet one_d;
  bool pass = false;
};

// 2D Hofstadter route vs 1D Weyl route on matched negation-closed grids.
IsospectralReport cross_check_isospectral(const HoppingSet& m, const FluxRational& flux,
                                          double lo, double hi, int grid = 4,
                                          double iso_tol = 1e-8);

}  // namespace diraclev
