#pragma once

#include <map>
#include <vector>

#include "diraclev/common.hpp"
#include "diraclev/spectrum.hpp"
#include "diraclev/two_band.hpp"

namespace diraclev {

// Position/momentum matrices in the truncated Hermite basis, ladder
// convention a|n> = sqrt(n)|n-1>, t = (a + a^+)/sqrt2, p = i(a^+ - a)/sqrt2.
struct OscillatorRep {
  int N = 0;
  Eigen::MatrixXd t;
  MatX p;

  explicit OscillatorRep(int n);
};

// 2x2-matrix-valued polynomial in (t, tau): sum of coeff * t^a tau^b.
struct MatrixPolynomial {
  std::map<std::pair<int, int>, Mat2> terms;

  void add(int a, int b, const Mat2& c) {
    auto it = terms.find({a, b});
    if (it == terms.end())
      terms[{a, b}] = c;
    else
      it->second += c;
  }
  int degree() const {
    int d = 0;
    for (auto& [k, c] : terms) d = std::max(d, k.first + k.second);
    return d;
  }
  Mat2 eval(double t, double tau) const {
    Mat2 m = Mat2::Zero();
    for (auto& [k, c] : terms) m += std::pow(t, k.first) * std::pow(tau, k.second) * c;
    return m;
  }
};

// Weyl (fully symmetrized) quantization of a matrix polynomial in the
// oscillator basis: each monomial t^a tau^b maps to the McCoy ordering
// 2^{-a} sum_k C(a,k) t^k p^b t^{a-k}.
MatX weyl_quantize_polynomial(const MatrixPolynomial& poly, const OscillatorRep& rep);

// L = A (x) t + B (x) p with A = f1 + sigma.v1, B = f2 + sigma.v2 on the
// 2N-dimensional truncated space. Refuses non-elliptic linearizations.
MatX build_L_operator(const DiracLinearization& lin, int N);

struct SpectrumLResult {
  std::vector<double> levels;       // the nLevels smallest-|lambda|, ascending
  double convergence_drift = 0;     // max |lambda(N) - lambda(2N)| over levels
  double symmetry_defect = 0;       // max_n |lambda_n + lambda_{-n}|
  double min_gap = 0;               // min gap between consecutive kept levels
  bool converged = false;
};

SpectrumLResult spectrum_L(const DiracLinearization& lin, int n_levels, int N,
                           double conv_tol = 1e-8);

// Taylor terms k^hat_l of the symbol centered at the crossing: homogeneous
// polynomials of degree l, exact for hopping-backed symbols.
std::vector<MatrixPolynomial> symbol_taylor_terms(const TwoBandSymbol& s, const Vec2& theta0,
                                                  int max_degree);

struct QuasimodeExpansion {
  double lambda1 = 0;                  // base eigenvalue of L
  std::vector<double> lambda;          // lambda_1..lambda_K
  std::vector<VecX> v;                 // v_0..v_{K-1} (Hermite coefficients, 2N)
  std::vector<double> solvability;     // |<v0, rhs>| residual per solved order
  std::vector<double> tail_mass;       // top-of-basis mass per vector
  int N = 0;

  double lambda_of_h(double h, int k) const {
    double s = 0, hp = std::sqrt(h);
    for (int l = 1; l <= k; ++l) {
      s += hp * lambda[std::size_t(l - 1)];
      hp *= std::sqrt(h);
    }
    return s;
  }
};

// Order-by-order expansion around the level with index `level_index` (0 is the
// zero mode, +-n the n-th positive/negative level).
QuasimodeExpansion quasimode_expand(const DiracLinearization& lin,
                                    const std::vector<MatrixPolynomial>& taylor_terms,
                                    int level_index, int order_K, int N);

// || (Op1(k(.+theta0, h .)) - lambda^{(k)}(h)) u^{(k-1)}(., h) ||_{L^2}.
double quasimode_residual(const QuasimodeExpansion& exp, const TwoBandSymbol& s,
                          const Vec2& theta0, double h, int k, int grid_M = 2048,
                          double half_width = 12.0);

// Normalized Hermite function values h_n(x), n < N.
Eigen::VectorXd hermite_values(int N, double x);

}  // namespace diraclev
