#pragma once

#include <cmath>
#include <vector>

#include "diraclev/common.hpp"
#include "diraclev/pauli.hpp"

namespace diraclev {

// Rapidly decaying map gamma -> 2x2 matrix with m(-gamma) = m(gamma)^dagger.
struct HoppingSet {
  std::vector<std::pair<LatticeIndex, Mat2>> terms;
  int cutoff = 0;  // max |gamma|_inf over stored terms

  void add(int g1, int g2, const Mat2& m) {
    for (auto& [g, mm] : terms) {
      if (g.g1 == g1 && g.g2 == g2) {
        mm += m;
        return;
      }
    }
    terms.push_back({{g1, g2}, m});
    cutoff = std::max({cutoff, std::abs(g1), std::abs(g2)});
  }

  // Adds m at gamma and m^dagger at -gamma.
  void add_with_conjugate(int g1, int g2, const Mat2& m) {
    add(g1, g2, m);
    add(-g1, -g2, Mat2(m.adjoint()));
  }

  Mat2 at(int g1, int g2) const {
    for (const auto& [g, m] : terms)
      if (g.g1 == g1 && g.g2 == g2) return m;
    return Mat2::Zero();
  }

  bool is_hermitian_symmetric(double tol = 1e-12) const {
    for (const auto& [g, m] : terms)
      if (max_abs(MatX(at(-g.g1, -g.g2) - m.adjoint())) > tol) return false;
    return true;
  }

  // k(theta) = sum_gamma exp(-i<theta,gamma>) m(gamma)
  Mat2 symbol(const Vec2& th) const {
    Mat2 k = Mat2::Zero();
    for (const auto& [g, m] : terms)
      k += std::exp(cxd(0, -(th[0] * g.g1 + th[1] * g.g2))) * m;
    return k;
  }

  // sup_gamma <gamma>^order * ||m(gamma)||_max over stored terms
  double decay_bound(int order) const {
    double b = 0;
    for (const auto& [g, m] : terms) {
      const double w = std::pow(1.0 + double(g.g1) * g.g1 + double(g.g2) * g.g2, 0.5 * order);
      b = std::max(b, w * max_abs(MatX(m)));
    }
    return b;
  }

  // Drops terms below an absolute threshold (keeps Hermitian symmetry).
  HoppingSet truncated(double threshold) const {
    HoppingSet out;
    for (const auto& [g, m] : terms) {
      if (max_abs(MatX(m)) > threshold || max_abs(MatX(at(-g.g1, -g.g2))) > threshold)
        out.add(g.g1, g.g2, m);
    }
    return out;
  }
};

// Nearest-neighbor honeycomb model in lattice coordinates: the off-diagonal
// of the symbol is 1 + e^{i theta_1} + e^{i theta_2}, with conical crossings
// at +/- (2pi/3, -2pi/3).
inline HoppingSet honeycomb_hoppings() {
  HoppingSet m;
  m.add(0, 0, sigma1());
  Mat2 hop;
  hop << 0, 0, 1, 0;  // contributes e^{i theta} to the (1,2) symbol entry
  m.add_with_conjugate(1, 0, hop);
  m.add_with_conjugate(0, 1, hop);
  return m;
}

// Scalar Harper model cos(theta_1) + cos(theta_2) on both components.
inline HoppingSet harper_hoppings() {
  HoppingSet m;
  const Mat2 half = 0.5 * Mat2::Identity();
  m.add(1, 0, half);
  m.add(-1, 0, half);
  m.add(0, 1, half);
  m.add(0, -1, half);
  return m;
}

}  // namespace diraclev
