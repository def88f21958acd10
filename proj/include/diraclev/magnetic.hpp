#pragma once

#include <functional>
#include <numeric>
#include <vector>

#include "diraclev/common.hpp"
#include "diraclev/hoppings.hpp"
#include "diraclev/spectrum.hpp"
#include "diraclev/two_band.hpp"

namespace diraclev {

// Flux per unit cell 2*pi*p/q.
struct FluxRational {
  int p = 0;
  int q = 1;

  FluxRational() = default;
  FluxRational(int pp, int qq) : p(pp), q(qq) {
    require(q >= 1, "invalid-input", "flux denominator must be >= 1");
    require(std::gcd(std::abs(p), q) == 1 || p == 0, "invalid-input",
            "flux p/q must be in lowest terms");
  }
  double h() const { return two_pi * p / q; }
  static FluxRational parse(const std::string& s);
};

// Best rational approximation p/q to h/(2*pi) with q <= max_q (continued fractions).
FluxRational approximate_flux(double eps_times_B0, int max_q);

struct MagneticParams {
  double epsilon = 0;  // in [0, 1]
  double kappa = 0;    // in [0, 1]
  double B0 = 1;       // constant field (flux per unit cell area / 2pi-free units)
  std::function<double(const Vec2&)> B;  // bounded smooth perturbation profile

  double eps_B0() const { return epsilon * B0; }
};

// Transverse-gauge phase exp(-i (epsB0/2) x ^ y)  with x^y = x1 y2 - x2 y1.
inline cxd magnetic_phase(const Vec2& x, const Vec2& y, double eps_B0) {
  return std::exp(cxd(0, -0.5 * eps_B0 * wedge(x, y)));
}

// Flux through the oriented triangle <x,y,z> as the product of edge phases.
inline cxd flux_phase(const Vec2& x, const Vec2& y, const Vec2& z, double eps_B0) {
  return magnetic_phase(x, y, eps_B0) * magnetic_phase(y, z, eps_B0) *
         magnetic_phase(z, x, eps_B0);
}

// Dense magnetic matrix on sites {-L..L}^2 (x) C^2:
// [M]_{(alpha),(beta)} = Lambda^eps(alpha,beta) m(alpha-beta).
MatX build_magnetic_matrix(const HoppingSet& m, double eps_B0, int L);

// 2q x 2q magnetic-Bloch block at quasimomentum (k1, k2); Landau gauge with
// the magnetic unit cell q x 1.
MatX hofstadter_block(const HoppingSet& m, const FluxRational& flux, double k1, double k2);

// Union of block eigenvalues over an mbz_grid^2 sampling of
// [0, 2pi/q) x [0, 2pi/q), filtered to (lo, hi).
SpectrumSet hofstadter_spectrum(const HoppingSet& m, const FluxRational& flux, int mbz_grid,
                                double lo, double hi);

struct InteriorFilterReport {
  int kept = 0;
  int discarded = 0;  // eigenpairs with boundary mass above the threshold
  double worst_kept_boundary_mass = 0;
};

// Finite-lattice spectrum with Peierls phases exp(-i int_[beta,alpha] A^{eps,kappa}),
// A from the transverse-gauge (Poincare) integral of B; boundary-localized
// eigenpairs removed by the interior filter.
SpectrumSet nonconstant_field_spectrum(const HoppingSet& m, const MagneticParams& mp, int L,
                                       double lo, double hi,
                                       InteriorFilterReport* report = nullptr,
                                       double boundary_threshold = 1e-4);

// Exact spectrum of the perturbed magnetic operator when the perturbing field
// is lattice-periodic with integer period W: Bloch reduction over the
// lcm(q, W) x W magnetic supercell in Landau gauge, no boundary, no filter.
// A_per must be a vector potential of the periodic perturbation field; the
// bond phases are exp(-i int (eps B0 A_Landau + kappa_eps A_per)).
SpectrumSet nonconstant_field_bloch_spectrum(const HoppingSet& m, const FluxRational& flux,
                                             double kappa_eps,
                                             const std::function<Vec2(const Vec2&)>& A_per,
                                             int W, double lo, double hi,
                                             int k_grid = 1);

// k(theta) = sum_gamma e^{-i<theta,gamma>} m(gamma), as a TwoBandSymbol.
TwoBandSymbol peierls_symbol(const HoppingSet& m);

// sup over an n x n torus grid of the matrix max-norm of the (a1,a2)
// finite-difference derivative of (s1 - s2).
double symbol_distance(const TwoBandSymbol& s1, const TwoBandSymbol& s2, int a1, int a2,
                       int grid_n = 48);

// --- quasi-Wannier dressing at desk scale -------------------------------

// d x d fiber Hamiltonian as lattice hoppings: H(theta) = sum e^{-i<theta,g>} T(g).
struct OperatorHoppings {
  int dim = 0;
  std::vector<std::pair<LatticeIndex, MatX>> terms;

  void add(int g1, int g2, const MatX& m) {
    if (dim == 0) dim = int(m.rows());
    terms.push_back({{g1, g2}, m});
  }
  MatX symbol(const Vec2& th) const {
    MatX k = MatX::Zero(dim, dim);
    for (const auto& [g, m] : terms)
      k += std::exp(cxd(0, -(th[0] * g.g1 + th[1] * g.g2))) * m;
    return k;
  }
};

// Lattice-supported pair of fiber-valued Wannier vectors w_j(gamma) in C^d.
struct WannierPair {
  int dim = 0;
  int radius = 0;  // support {-radius..radius}^2
  std::vector<MatX> w;  // two entries; each (2r+1)^2 x d row-per-site stack

  VecX value(int j, int g1, int g2) const {
    if (std::abs(g1) > radius || std::abs(g2) > radius) return VecX::Zero(dim);
    const int n = 2 * radius + 1;
    return w[std::size_t(j)].row((g1 + radius) * n + (g2 + radius)).transpose();
  }
};

// Gram matrix of magnetic translates of the Wannier pair over sites
// {-R..R}^2: G_{(j,alpha),(k,beta)} = <phi_{j,alpha}, phi_{k,beta}>.
MatX gram_matrix(const std::function<cxd(int, const LatticeIndex&, int, const LatticeIndex&)>&
                     overlap,
                 int R);

MatX gram_matrix_from_wannier(const WannierPair& w, double eps_B0, int R);

// F = G^{-1/2} for a positive Hermitian G.
MatX inverse_sqrt(const MatX& G);

struct DressedResult {
  HoppingSet m_eps;        // magnetic hopping coefficients m^eps(gamma)
  double gram_dev = 0;     // ||G - 1||_max
  double f_dev = 0;        // max <a-b>^4 |F - 1| over entries
  double factorization_defect = 0;  // Lambda-covariance defect of the matrix
};

// Full quasi-Wannier dressing: orthonormalize magnetic translates, compress
// the magnetically quantized fiber Hamiltonian, undo the Lambda factor.
DressedResult magnetic_dressed_hoppings(const OperatorHoppings& Hfiber, const WannierPair& w,
                                        double eps_B0, int R, int keep_radius);

}  // namespace diraclev
