#include "diraclev/two_band.hpp"

#include <Eigen/Eigenvalues>

namespace diraclev {

TwoBandSymbol TwoBandSymbol::from_hoppings(HoppingSet m) {
  require(m.is_hermitian_symmetric(1e-10), "invalid-problem",
          "hopping set is not Hermitian-symmetric");
  TwoBandSymbol s;
  auto hp = std::make_shared<HoppingSet>(std::move(m));
  s.hops_ = hp;
  s.eval_ = [hp](const Vec2& th) { return hp->symbol(th); };
  return s;
}

TwoBandSymbol TwoBandSymbol::from_callable(EvalFn f) {
  TwoBandSymbol s;
  s.eval_ = std::move(f);
  return s;
}

TwoBandSymbol TwoBandSymbol::from_grid(int n, std::vector<Mat2> samples,
                                       const Vec2& origin) {
  require(int(samples.size()) == n * n, "invalid-input", "grid sample count mismatch");
  // Inverse DFT: m(gamma) = (1/n^2) sum_theta e^{+i<theta,gamma>} k(theta) on
  // the symmetric range |gamma_i| <= (n-1)/2; the unpaired Nyquist rows of an
  // even grid are dropped and Hermitian symmetry enforced by averaging, so
  // the interpolant is again a valid symbol.
  HoppingSet hop;
  const int hi = (n - 1) / 2;
  std::vector<Mat2> coef(std::size_t(2 * hi + 1) * (2 * hi + 1));
  auto cidx = [hi](int g1, int g2) {
    return std::size_t(g1 + hi) * (2 * hi + 1) + std::size_t(g2 + hi);
  };
  for (int g1 = -hi; g1 <= hi; ++g1)
    for (int g2 = -hi; g2 <= hi; ++g2) {
      Mat2 acc = Mat2::Zero();
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          const double th1 = origin[0] + two_pi * i / n, th2 = origin[1] + two_pi * j / n;
          acc += std::exp(cxd(0, th1 * g1 + th2 * g2)) * samples[i * n + j];
        }
      coef[cidx(g1, g2)] = acc / double(n * n);
    }
  for (int g1 = -hi; g1 <= hi; ++g1)
    for (int g2 = -hi; g2 <= hi; ++g2) {
      const Mat2 sym = 0.5 * (coef[cidx(g1, g2)] + coef[cidx(-g1, -g2)].adjoint());
      if (max_abs(MatX(sym)) > 1e-15) hop.add(g1, g2, sym);
    }
  TwoBandSymbol s = from_hoppings(std::move(hop));
  s.grid_n_ = n;
  s.grid_origin_ = origin;
  s.grid_ = std::move(samples);
  return s;
}

TwoBandSymbol TwoBandSymbol::shifted_by(EvalFn extra) const {
  TwoBandSymbol out;
  EvalFn base = eval_;
  out.eval_ = [base, extra](const Vec2& th) -> Mat2 {
    const Mat2 e = extra(th);
    // Outside the perturbation support the symbol is returned untouched, so
    // equality there is bitwise, not up to rounding.
    if ((e.array() == cxd(0, 0)).all()) return base(th);
    return Mat2(base(th) + e);
  };
  return out;
}

DiracLinearization linearize_at_crossing(const TwoBandSymbol& s, const Vec2& theta0,
                                         double fd_step, double gap_tol) {
  require(s.F(theta0).norm() <= gap_tol, "invalid-input",
          "|F(theta0)| exceeds gapTol: not a crossing point");

  auto deriv = [&](int axis) -> std::pair<double, Vec3> {
    auto one = [&](double h) -> std::pair<double, Vec3> {
      Vec2 e = Vec2::Zero();
      e[axis] = h;
      auto [f0p, fp] = pauli_decompose(s.matrix(theta0 + e));
      auto [f0m, fm] = pauli_decompose(s.matrix(theta0 - e));
      return {(f0p - f0m) / (2 * h), Vec3((fp - fm) / (2 * h))};
    };
    auto [d0a, da] = one(fd_step);
    auto [d0b, db] = one(fd_step / 2);
    return {(4 * d0b - d0a) / 3, Vec3((4 * db - da) / 3)};
  };

  DiracLinearization lin;
  auto [f1, v1] = deriv(0);
  auto [f2, v2] = deriv(1);
  lin.f1 = f1;
  lin.f2 = f2;
  lin.v1 = v1;
  lin.v2 = v2;

  const Vec3 cross = v1.cross(v2);
  require(cross.norm() > 1e-10 * std::max(1.0, v1.norm() * v2.norm()), "degenerate-cone",
          "v1 and v2 are parallel");
  lin.v3 = cross.normalized();
  lin.mu = v1.dot(v2) / (v1.norm() * v2.norm());

  Eigen::Matrix2d gram;
  gram << v1.squaredNorm() - f1 * f1, v1.dot(v2) - f1 * f2,  //
      v1.dot(v2) - f1 * f2, v2.squaredNorm() - f2 * f2;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(gram);
  require(es.eigenvalues()(0) > 0, "ellipticity-violated",
          "tilted Gram form is not positive definite");
  lin.a0 = es.eigenvalues()(0);
  return lin;
}

EllipticityReport check_ellipticity(const DiracLinearization& lin, int angular_points) {
  EllipticityReport rep;
  rep.worst_margin = std::numeric_limits<double>::infinity();
  for (int i = 0; i < angular_points; ++i) {
    const double phi = two_pi * i / angular_points;
    const double neg_det = -lin.det_linear(std::cos(phi), std::sin(phi));
    if (neg_det < rep.worst_margin) {
      rep.worst_margin = neg_det;
      rep.worst_angle = phi;
    }
  }
  // a^2 = f^T G_v^{-1} f with G_v the plain Gram matrix of (v1, v2).
  Eigen::Matrix2d gv;
  gv << lin.v1.squaredNorm(), lin.v1.dot(lin.v2),  //
      lin.v1.dot(lin.v2), lin.v2.squaredNorm();
  const Eigen::Vector2d f(lin.f1, lin.f2);
  const double a2 = f.dot(gv.inverse() * f);
  rep.a = std::sqrt(std::max(0.0, a2));
  rep.pass = rep.worst_margin >= lin.a0 - 1e-9 && rep.a < 1.0;
  if (!rep.pass)
    throw Error("ellipticity-violated",
                "worst -det margin " + std::to_string(rep.worst_margin) + " at angle " +
                    std::to_string(rep.worst_angle) + ", a = " + std::to_string(rep.a));
  return rep;
}

MatX nagy_intertwiner(const MatX& P, const MatX& P0) {
  require(P.rows() == P.cols() && P0.rows() == P0.cols() && P.rows() == P0.rows(),
          "invalid-input", "projector dimension mismatch");
  auto check_proj = [](const MatX& q) {
    return max_abs(MatX(q * q - q)) <= 1e-10 && max_abs(MatX(q - q.adjoint())) <= 1e-10;
  };
  require(check_proj(P) && check_proj(P0), "invalid-input",
          "inputs are not orthogonal projectors");
  const MatX D = P - P0;
  Eigen::SelfAdjointEigenSolver<MatX> es(MatX(D * D));
  require(es.eigenvalues().maxCoeff() <= 0.25 + 1e-12, "intertwiner-out-of-range",
          "||P - P0|| > 1/2");
  // (1 - (P-P0)^2)^{-1/2} by spectral calculus.
  MatX inv_sqrt = es.eigenvectors() *
                  (1.0 - es.eigenvalues().array()).rsqrt().matrix().asDiagonal() *
                  es.eigenvectors().adjoint();
  const int n = int(P.rows());
  const MatX I = MatX::Identity(n, n);
  return inv_sqrt * (P * P0 + (I - P) * (I - P0));
}

}  // namespace diraclev
