#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "diraclev/common.hpp"
#include "diraclev/magnetic.hpp"
#include "diraclev/two_band.hpp"

namespace diraclev {

struct LatticeSpec {
  Vec2 a1, a2;  // lattice basis
  Vec2 b1, b2;  // reciprocal basis, <b_i, a_j> = 2 pi delta_ij

  static LatticeSpec from_basis(const Vec2& a1, const Vec2& a2);
  static LatticeSpec square(double a = 1.0) { return from_basis({a, 0}, {0, a}); }
  void validate() const;
};

// Plane-wave truncated periodic problem; coefficients indexed by the dual
// lattice, V real and A componentwise real in physical space.
struct BlochProblem {
  LatticeSpec lattice = LatticeSpec::square();
  std::vector<std::pair<LatticeIndex, cxd>> potential;
  std::vector<std::pair<LatticeIndex, Eigen::Vector2cd>> vector_potential;
  int truncation = 8;

  void validate() const;
  int fiber_dim() const { return (2 * truncation + 1) * (2 * truncation + 1); }
};

// H(theta) on the (2N+1)^2 plane-wave basis; theta in lattice coordinates
// (the physical quasimomentum is (theta_1 b1 + theta_2 b2)/(2 pi)).
MatX assemble_fiber_hamiltonian(const BlochProblem& problem, const Vec2& theta);

// A smooth family of fiber Hamiltonians with k0 bands below the crossing pair.
struct FiberFamily {
  int dim = 0;
  int k0 = 1;
  std::function<MatX(const Vec2&)> H;
};

FiberFamily fiber_family(const BlochProblem& problem, int k0);
// Two-band symbols are their own fiber family with k0 = 0.
FiberFamily fiber_family(const TwoBandSymbol& s);

// Sampled Bloch eigenvalues (and optionally eigenvectors) over a uniform
// torus grid theta = 2 pi (i, j)/n, plus an off-grid evaluator.
struct BandGrid {
  int grid_n = 0;
  int bands = 0;
  int fiber_dim = 0;
  int k0 = 1;
  std::vector<Eigen::VectorXd> lambda;     // node-major, ascending per node
  std::vector<MatX> vectors;               // optional; dim x bands per node
  std::function<Eigen::VectorXd(const Vec2&)> evaluate;  // all kept bands
  std::function<MatX(const Vec2&)> fiber;  // fiber Hamiltonian evaluator

  Vec2 node(int i, int j) const { return Vec2(two_pi * i / grid_n, two_pi * j / grid_n); }
  double value(int i, int j, int band) const {
    return lambda[std::size_t(i) * grid_n + j](band);
  }
};

BandGrid compute_bands(const BlochProblem& problem, int grid_resolution, int bands_kept,
                       bool with_vectors = false, int k0 = 1);
BandGrid compute_bands(const FiberFamily& fam, int grid_resolution, int bands_kept,
                       bool with_vectors = false);

struct CrossingPoint {
  Vec2 theta0 = Vec2::Zero();
  int k0 = 1;                       // lower band of the crossing pair (0-based)
  double lambda_lo = 0.3;           // window I = [-lambda_lo, lambda_hi] around the crossing
  double lambda_hi = 0.3;
  double sigma_radius = 1.0;        // disk Sigma_I around theta0
  double crossing_energy = 0;       // (lambda_- + lambda_+)/2 at theta0
  double residual_gap = 0;
};

CrossingPoint locate_crossing(const BandGrid& bands, int k0_hint, double gap_tol = 1e-7,
                              double seed_threshold = 0.5);

struct HypothesisReport {
  double c_lower = 0, c_upper = 0;     // linear gap constants
  Vec2 hessian_eigenvalues = Vec2::Zero();  // of Hess d(theta0)
  double a0 = 0;                       // -(largest Hessian eigenvalue)
  double a = 0;                        // tilt constant, in [0, 1) when H2 holds
  double rho = 0;                      // smallest eigenvalue of Hess delta^2(theta0)
  bool pass_h1 = false;
  bool pass_h2 = false;
  bool k0_warning = false;             // k0 == 1: the section construction is unproven
};

HypothesisReport verify_hypotheses(const BandGrid& bands, const CrossingPoint& crossing);

// Local 2x2 Hamiltonian via the Sz.-Nagy frame transported from theta0;
// valid on Sigma_I. `frame` returns the dim x 2 orthonormal pair per theta.
struct LocalModel {
  TwoBandSymbol symbol;  // callable-backed M_I(theta), energies relative to the crossing
  Vec2 theta0 = Vec2::Zero();
  double energy_shift = 0;
  std::function<MatX(const Vec2&)> frame;
};

LocalModel build_local_model(const BandGrid& bands, const CrossingPoint& crossing);

// Sampled frame over the Sigma_I nodes of a grid (the FrameField of the
// contract); pairs (node index, dim x 2 frame).
struct FrameField {
  std::vector<std::pair<std::pair<int, int>, MatX>> frames;
};

FrameField sample_frame_field(const LocalModel& lm, const BandGrid& bands,
                              const CrossingPoint& crossing);

// Synthetic fiber family: a two-band symbol embedded as the middle bands of a
// d-dimensional fiber with remote flat bands, mixed by a smooth periodic
// unitary so eigenvectors genuinely wander.
FiberFamily embed_symbol(const TwoBandSymbol& s, const std::vector<double>& below,
                         const std::vector<double>& above, double mixing, unsigned seed = 7);

// Hopping coefficients of a fiber family (FFT over a grid, truncated).
OperatorHoppings fiber_hoppings(const FiberFamily& fam, int grid_n, double drop_tol = 1e-12);

}  // namespace diraclev
