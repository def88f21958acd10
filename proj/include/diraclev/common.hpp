#pragma once

#include <Eigen/Core>
#include <Eigen/Dense>
#include <complex>
#include <stdexcept>
#include <string>

namespace diraclev {

using cxd = std::complex<double>;
using Mat2 = Eigen::Matrix2cd;
using MatX = Eigen::MatrixXcd;
using VecX = Eigen::VectorXcd;
using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;

inline constexpr double pi = 3.14159265358979323846;
inline constexpr double two_pi = 2.0 * pi;

// Integer lattice point of Gamma ~ Z^2.
struct LatticeIndex {
  int g1 = 0;
  int g2 = 0;
  friend bool operator==(const LatticeIndex&, const LatticeIndex&) = default;
};

inline double wedge(const Vec2& x, const Vec2& y) { return x[0] * y[1] - x[1] * y[0]; }

// Errors carry the spec's error tag as the what() prefix.
class Error : public std::runtime_error {
 public:
  Error(const std::string& tag, const std::string& msg)
      : std::runtime_error(tag + ": " + msg), tag_(tag) {}
  const std::string& tag() const { return tag_; }

 private:
  std::string tag_;
};

inline double max_abs(const MatX& m) { return m.cwiseAbs().maxCoeff(); }

inline void require(bool cond, const std::string& tag, const std::string& msg) {
  if (!cond) throw Error(tag, msg);
}

// Reduce x to the fundamental torus cell [-pi, pi)^2.
inline double wrap_to_pi(double x) {
  double y = std::remainder(x, two_pi);
  if (y == pi) y = -pi;
  return y;
}

inline Vec2 wrap_to_torus(const Vec2& th) { return Vec2(wrap_to_pi(th[0]), wrap_to_pi(th[1])); }

// Geodesic distance on the torus (-pi,pi]^2.
inline double torus_dist(const Vec2& a, const Vec2& b) {
  return Vec2(wrap_to_pi(a[0] - b[0]), wrap_to_pi(a[1] - b[1])).norm();
}

// Radial smooth cutoff: 1 for r <= 1/2, 0 for r >= 1, C-infinity in between.
inline double smooth_bump(double r) {
  if (r <= 0.5) return 1.0;
  if (r >= 1.0) return 0.0;
  auto f = [](double s) { return s > 0 ? std::exp(-1.0 / s) : 0.0; };
  const double a = f(1.0 - r), b = f(r - 0.5);
  return a / (a + b);
}

inline double smooth_bump2(const Vec2& x) { return smooth_bump(x.norm()); }

}  // namespace diraclev
