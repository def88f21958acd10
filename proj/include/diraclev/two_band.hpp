#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "diraclev/common.hpp"
#include "diraclev/hoppings.hpp"
#include "diraclev/pauli.hpp"

namespace diraclev {

// Gamma*-periodic 2x2 Hermitian symbol stored as Pauli fields (F0, F).
// Backed by a hopping set, a closed-form callable, or grid samples (which are
// converted to Fourier/hopping coefficients, i.e. trigonometric interpolation).
class TwoBandSymbol {
 public:
  using EvalFn = std::function<Mat2(const Vec2&)>;

  static TwoBandSymbol from_hoppings(HoppingSet m);
  static TwoBandSymbol from_callable(EvalFn f);
  // Samples on the uniform seam-identified grid theta = origin + 2*pi*(i,j)/n.
  static TwoBandSymbol from_grid(int n, std::vector<Mat2> samples,
                                 const Vec2& origin = Vec2::Zero());

  Mat2 matrix(const Vec2& th) const { return eval_(th); }
  double F0(const Vec2& th) const { return pauli_decompose(matrix(th)).first; }
  Vec3 F(const Vec2& th) const { return pauli_decompose(matrix(th)).second; }

  // lambda_pm = F0 -/+ |F|  (Eq. of the Pauli representation)
  std::pair<double, double> eigenvalues(const Vec2& th) const {
    auto [f0, f] = pauli_decompose(matrix(th));
    return {f0 - f.norm(), f0 + f.norm()};
  }
  double lambda_circ(const Vec2& th) const { return F0(th); }
  double delta(const Vec2& th) const { return F(th).norm(); }
  double det2(const Vec2& th) const {
    auto [f0, f] = pauli_decompose(matrix(th));
    return f0 * f0 - f.squaredNorm();
  }

  const HoppingSet* hoppings() const { return hops_ ? hops_.get() : nullptr; }
  bool has_grid() const { return grid_n_ > 0; }
  int grid_n() const { return grid_n_; }
  const Vec2& grid_origin() const { return grid_origin_; }
  const std::vector<Mat2>& grid_samples() const { return grid_; }

  // Returns a symbol whose evaluation adds `extra` pointwise; grid samples (if
  // present) are re-derived with the exact skip-when-zero rule used by open_gap.
  TwoBandSymbol shifted_by(EvalFn extra) const;

 private:
  EvalFn eval_;
  std::shared_ptr<const HoppingSet> hops_;
  int grid_n_ = 0;
  Vec2 grid_origin_ = Vec2::Zero();
  std::vector<Mat2> grid_;
};

// (f1, f2, v1, v2, v3, a0): the linear symbol at the crossing and its
// ellipticity data.
struct DiracLinearization {
  double f1 = 0, f2 = 0;
  Vec3 v1 = Vec3::Zero(), v2 = Vec3::Zero(), v3 = Vec3::Zero();
  double a0 = 0;  // smallest eigenvalue of the tilted Gram form
  double mu = 0;  // cosine of the angle between v1 and v2

  // l(t,tau) = (f1 + sigma.v1) t + (f2 + sigma.v2) tau
  Mat2 linear_symbol(double t, double tau) const {
    return (f1 * t + f2 * tau) * Mat2::Identity() + sigma_dot(Vec3(t * v1 + tau * v2));
  }
  double det_linear(double t, double tau) const {
    const double d = f1 * t + f2 * tau;
    return d * d - (t * v1 + tau * v2).squaredNorm();
  }
  // |v1 x v2|: the symplectic frequency of the squared operator.
  double omega() const { return v1.cross(v2).norm(); }
};

struct EllipticityReport {
  double worst_margin = 0;  // min over angles of -det(l) on the unit circle
  double worst_angle = 0;
  double a = 0;  // the tilt constant of the a-inequality
  bool pass = false;
};

// Central differences with one Richardson level; step h per design decision.
DiracLinearization linearize_at_crossing(const TwoBandSymbol& s, const Vec2& theta0,
                                         double fd_step = 1e-3, double gap_tol = 1e-7);

EllipticityReport check_ellipticity(const DiracLinearization& lin, int angular_points = 720);

// Sz.-Nagy unitary intertwining two nearby orthogonal projectors:
// U = (1 - (P-P0)^2)^{-1/2} (P P0 + Pperp P0perp), with U P0 = P U.
MatX nagy_intertwiner(const MatX& P, const MatX& P0);

}  // namespace diraclev
