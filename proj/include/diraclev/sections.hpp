#pragma once

#include <functional>
#include <vector>

#include "diraclev/bloch.hpp"
#include "diraclev/common.hpp"
#include "diraclev/magnetic.hpp"
#include "diraclev/two_band.hpp"

namespace diraclev {

// Seam-identified torus grid: nodes origin + 2 pi (i, j)/n; periodicity is
// exact by index wrapping, never by tolerance.
struct Grid2 {
  int n = 0;
  Vec2 origin = Vec2::Zero();

  Vec2 node(int i, int j) const { return origin + two_pi * Vec2(double(i) / n, double(j) / n); }
  int wrap(int i) const { return ((i % n) + n) % n; }
  std::size_t flat(int i, int j) const { return std::size_t(wrap(i)) * n + wrap(j); }
  double spacing() const { return two_pi / n; }
};

struct ProjectorField {
  Grid2 grid;
  int dim = 0;
  int rank = 0;
  std::vector<MatX> P;                       // grid.n^2 node values
  std::function<MatX(const Vec2&)> eval;     // off-grid evaluator

  const MatX& at(int i, int j) const { return P[grid.flat(i, j)]; }
};

struct SectionField {
  Grid2 grid;
  int dim = 0;
  std::vector<VecX> psi;

  const VecX& at(int i, int j) const { return psi[grid.flat(i, j)]; }
  VecX& at(int i, int j) { return psi[grid.flat(i, j)]; }
};

struct GapParams {
  double delta = 0;    // gap-opening energy, < delta0
  double c_lower = 0;  // linear-cone constant c
};

struct GapReport {
  TwoBandSymbol symbol;
  double min_two_F = 0;   // min over Sigma_I of 2 |F_delta|
  double C_measured = 0;  // delta / min_two_F
};

// M_{I,delta}(theta) = M_I(theta) + (delta/8) g(c (theta - theta0)/delta) v3.sigma.
GapReport open_gap(const TwoBandSymbol& s, const DiracLinearization& lin, const Vec2& theta0,
                   const GapParams& gp, double sigma_radius, int measure_grid = 192);

// Fiber-level version: H(theta) + (delta/8) g_delta(theta) F(theta) v3.sigma F(theta)^+.
FiberFamily open_gap_fiber(const FiberFamily& fam, const LocalModel& lm,
                           const DiracLinearization& lin, const GapParams& gp);

// Spectral projectors below/above `split_energy` on the grid.
std::pair<ProjectorField, ProjectorField> split_projectors(const FiberFamily& gapped,
                                                           const Grid2& grid,
                                                           double split_energy = 0,
                                                           double gap_tol = 1e-7);

// Discrete parallel transport with symmetric (Loewdin) orthonormalization.
std::vector<MatX> parallel_transport_frame(const std::vector<MatX>& P_path, const MatX& seed);

// Transport a frame along t -> P(path(t)) with `steps` subdivisions.
MatX transport_along(const std::function<MatX(double)>& P_of_t, const MatX& seed, int steps);

struct StraightenResult {
  std::vector<MatX> frames;
  bool branch_warning = false;  // an eigenvalue of the mismatch was near -1
  double closure_defect = 0;
};

// Multiplies the transported loop frames by exp((t/T) log W), W = V_end^+ V_start,
// so the corrected loop closes exactly.
StraightenResult straighten_loop_unitary(const std::vector<MatX>& frame_loop);

struct SphereLoopHomotopy {
  int phi_n = 0, s_n = 0;
  std::vector<VecX> F;  // (s-major) s_n+1 rows of phi_n columns
  double missed_distance = 0;
  const VecX& at(int iphi, int is) const { return F[std::size_t(is) * phi_n + iphi]; }
};

// Contract a loop on the unit sphere of C^d (d >= 2): mollify, find a missed
// point by sampling, straight-line to it, rotate to the north pole.
SphereLoopHomotopy contract_sphere_loop(const std::vector<VecX>& loop, int s_steps,
                                        double eps_moll, int max_samples = 64,
                                        unsigned seed = 11);

struct SectionBuildParams {
  double disk_r = 0.9;        // radius of B around the center
  int edge_steps = 512;       // fine subdivisions for edge transports
  int ray_steps = 96;         // subdivisions for radial transports
  int homotopy_steps = 24;    // s-resolution of the column contraction
  double eps_blend = 0;       // 0: defaults to 2 grid spacings
  unsigned sard_seed = 11;
};

// Lemma A.1 pipeline: continuous periodic unit section of Ran P equal to the
// first local-frame vector on the disk B(center, disk_r).
SectionField build_global_section(const ProjectorField& P,
                                  const std::function<MatX(const Vec2&)>& local_frame,
                                  const Vec2& center, const SectionBuildParams& params = {});

// Lemma A.2: mollify, project, normalize, blend; equals psi on K = B(center, r_K).
SectionField smooth_section(const SectionField& psi, const ProjectorField& P,
                            const Vec2& center, double r_B, double r_K, double eps_moll);

struct QuasiBand {
  ProjectorField P;
  WannierPair wannier;
  std::vector<double> decay_sup;  // sup <gamma>^k ||w(gamma)|| for k = 0..6
};

QuasiBand build_quasi_band_projector(const SectionField& minus, const SectionField& plus,
                                     double ortho_tol = 1e-8);

// Rotate the section pair by exp(chi(theta) log u(theta)) so it coincides with
// the local frame on B(theta0, R) and is untouched outside B(theta0, 2R).
std::pair<SectionField, SectionField> align_sections_with_frame(
    const SectionField& minus, const SectionField& plus,
    const std::function<MatX(const Vec2&)>& local_frame, const Vec2& theta0, double R);

// k(theta)_{jk} = <psi_j(theta), H(theta) psi_k(theta)> sampled on the grid.
TwoBandSymbol quasiband_symbol(const FiberFamily& fam, const SectionField& minus,
                               const SectionField& plus, double energy_shift = 0);

// Max second-difference norm over the grid (smoothness measurement).
double section_second_difference(const SectionField& s);

// Smooth frame of a projector family over a disk: parallel transport of the
// seed along straight rays from the center (contractibility, no 1/2 bound).
std::function<MatX(const Vec2&)> ray_transported_frame(
    const std::function<MatX(const Vec2&)>& P_eval, const Vec2& center, const MatX& seed,
    int steps_per_unit = 48);

// Column-concatenation of frames with mutually orthogonal ranges.
std::function<MatX(const Vec2&)> stack_frames(
    const std::vector<std::function<MatX(const Vec2&)>>& frames);

}  // namespace diraclev
