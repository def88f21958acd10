#include "diraclev/sections.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <random>

namespace diraclev {

namespace {

// Loewdin orthonormalization A (A^+ A)^{-1/2}; throws on rank collapse.
MatX polar_orthonormalize(const MatX& A) {
  Eigen::JacobiSVD<MatX> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  require(svd.singularValues().minCoeff() > 1e-8, "transport-failed",
          "rank collapse during orthonormalization");
  return svd.matrixU() * svd.matrixV().adjoint();
}

void fix_column_phases(MatX& v) {
  for (int c = 0; c < v.cols(); ++c) {
    int imax = 0;
    double best = 0;
    for (int i = 0; i < v.rows(); ++i)
      if (std::abs(v(i, c)) > best) {
        best = std::abs(v(i, c));
        imax = i;
      }
    v.col(c) /= v(imax, c) / std::abs(v(imax, c));
  }
}

MatX frame_of_projector(const MatX& P, int rank) {
  Eigen::SelfAdjointEigenSolver<MatX> es(P);
  MatX F(P.rows(), rank);
  int c = 0;
  for (int i = int(P.rows()) - 1; i >= 0 && c < rank; --i) {
    if (es.eigenvalues()(i) > 0.5) F.col(c++) = es.eigenvectors().col(i);
  }
  require(c == rank, "invalid-input", "projector rank mismatch");
  fix_column_phases(F);
  return F;
}

// Principal log of a unitary, eigen-based; deterministic branch shift when an
// eigenvalue sits within 1e-8 of -1.
MatX unitary_log(const MatX& W, bool* branch_warning) {
  Eigen::ComplexEigenSolver<MatX> es(W);
  MatX L = MatX::Zero(W.rows(), W.cols());
  for (int i = 0; i < W.rows(); ++i) {
    cxd lam = es.eigenvalues()(i);
    lam /= std::abs(lam);
    double phi;
    if (std::abs(lam + 1.0) < 1e-8) {
      if (branch_warning) *branch_warning = true;
      phi = std::arg(lam * std::exp(cxd(0, pi / 16.0))) - pi / 16.0;
    } else {
      phi = std::arg(lam);
    }
    const VecX v = es.eigenvectors().col(i);
    L += cxd(0, phi) * (v * v.adjoint()) / v.squaredNorm();
  }
  return L;
}

MatX mat_exp_skew(const MatX& L) {
  // L is anti-Hermitian (i * Hermitian); exponentiate spectrally.
  const MatX Hm = L / cxd(0, 1);
  Eigen::SelfAdjointEigenSolver<MatX> es(MatX(0.5 * (Hm + Hm.adjoint())));
  return es.eigenvectors() *
         (cxd(0, 1) * es.eigenvalues().array()).exp().matrix().asDiagonal() *
         es.eigenvectors().adjoint();
}

}  // namespace

GapReport open_gap(const TwoBandSymbol& s, const DiracLinearization& lin, const Vec2& theta0,
                   const GapParams& gp, double sigma_radius, int measure_grid) {
  require(gp.delta > 0 && gp.c_lower > 0, "invalid-input", "delta and c must be positive");
  require(gp.delta / gp.c_lower <= sigma_radius, "invalid-input",
          "delta too large: the cutoff support leaves Sigma_I");

  const Vec2 t0 = theta0;
  const double delta = gp.delta, c = gp.c_lower;
  const Vec3 v3 = lin.v3;
  auto extra = [t0, delta, c, v3](const Vec2& th) -> Mat2 {
    // Evaluate on the torus: the bump is supported well inside one cell.
    const Vec2 rel(wrap_to_pi(th[0] - t0[0]), wrap_to_pi(th[1] - t0[1]));
    const double g = smooth_bump(rel.norm() * c / delta);
    if (g == 0.0) return Mat2::Zero();
    return (delta / 8.0) * g * sigma_dot(v3);
  };

  GapReport rep;
  rep.symbol = s.shifted_by(extra);

  // Measure the gap over Sigma_I.
  double min2F = std::numeric_limits<double>::infinity();
  for (int i = 0; i < measure_grid; ++i)
    for (int j = 0; j < measure_grid; ++j) {
      const Vec2 x = sigma_radius * Vec2(2.0 * i / (measure_grid - 1) - 1.0,
                                         2.0 * j / (measure_grid - 1) - 1.0);
      if (x.norm() > sigma_radius) continue;
      min2F = std::min(min2F, 2.0 * rep.symbol.F(t0 + x).norm());
    }
  rep.min_two_F = min2F;
  rep.C_measured = delta / std::max(min2F, 1e-300);
  require(min2F >= delta / 64.0, "gap-opening-failed",
          "measured min gap " + std::to_string(min2F) + " below delta/64");
  return rep;
}

FiberFamily open_gap_fiber(const FiberFamily& fam, const LocalModel& lm,
                           const DiracLinearization& lin, const GapParams& gp) {
  const Vec2 t0 = lm.theta0;
  const double delta = gp.delta, c = gp.c_lower;
  const Mat2 bump_dir = sigma_dot(lin.v3);
  auto frame = lm.frame;
  auto base = fam.H;
  FiberFamily out;
  out.dim = fam.dim;
  out.k0 = fam.k0;
  out.H = [base, frame, t0, delta, c, bump_dir](const Vec2& th) -> MatX {
    MatX H = base(th);
    const Vec2 rel(wrap_to_pi(th[0] - t0[0]), wrap_to_pi(th[1] - t0[1]));
    const double g = smooth_bump(rel.norm() * c / delta);
    if (g != 0.0) {
      const MatX F = frame(th);
      H += (delta / 8.0) * g * (F * bump_dir * F.adjoint());
    }
    return H;
  };
  return out;
}

std::pair<ProjectorField, ProjectorField> split_projectors(const FiberFamily& gapped,
                                                           const Grid2& grid,
                                                           double split_energy,
                                                           double gap_tol) {
  ProjectorField lo, hi;
  lo.grid = hi.grid = grid;
  lo.dim = hi.dim = gapped.dim;
  lo.P.resize(std::size_t(grid.n) * grid.n);
  hi.P.resize(lo.P.size());
  int rank_lo = -1;
  for (int i = 0; i < grid.n; ++i)
    for (int j = 0; j < grid.n; ++j) {
      Eigen::SelfAdjointEigenSolver<MatX> es(gapped.H(grid.node(i, j)));
      MatX Pl = MatX::Zero(gapped.dim, gapped.dim);
      int below = 0;
      double top_below = -std::numeric_limits<double>::infinity();
      double bottom_above = std::numeric_limits<double>::infinity();
      for (int k = 0; k < gapped.dim; ++k) {
        if (es.eigenvalues()(k) < split_energy) {
          Pl += es.eigenvectors().col(k) * es.eigenvectors().col(k).adjoint();
          ++below;
          top_below = std::max(top_below, es.eigenvalues()(k));
        } else {
          bottom_above = std::min(bottom_above, es.eigenvalues()(k));
        }
      }
      require(bottom_above - top_below >= gap_tol, "split-failed",
              "gap below tolerance at node (" + std::to_string(i) + "," + std::to_string(j) +
                  ")");
      if (rank_lo < 0) rank_lo = below;
      require(below == rank_lo, "split-failed", "projector rank is not constant on the grid");
      lo.P[grid.flat(i, j)] = Pl;
      hi.P[grid.flat(i, j)] = MatX::Identity(gapped.dim, gapped.dim) - Pl;
    }
  lo.rank = rank_lo;
  hi.rank = gapped.dim - rank_lo;

  auto Hfn = gapped.H;
  const int dim = gapped.dim;
  lo.eval = [Hfn, split_energy, dim](const Vec2& th) -> MatX {
    Eigen::SelfAdjointEigenSolver<MatX> es(Hfn(th));
    MatX Pl = MatX::Zero(dim, dim);
    for (int k = 0; k < dim; ++k)
      if (es.eigenvalues()(k) < split_energy)
        Pl += es.eigenvectors().col(k) * es.eigenvectors().col(k).adjoint();
    return Pl;
  };
  hi.eval = [lo_eval = lo.eval, dim](const Vec2& th) -> MatX {
    return MatX::Identity(dim, dim) - lo_eval(th);
  };
  return {lo, hi};
}

std::vector<MatX> parallel_transport_frame(const std::vector<MatX>& P_path, const MatX& seed) {
  require(!P_path.empty(), "invalid-input", "empty path");
  std::vector<MatX> out;
  out.reserve(P_path.size());
  MatX V = polar_orthonormalize(P_path.front() * seed);
  out.push_back(V);
  for (std::size_t k = 1; k < P_path.size(); ++k) {
    V = polar_orthonormalize(P_path[k] * V);
    out.push_back(V);
  }
  return out;
}

MatX transport_along(const std::function<MatX(double)>& P_of_t, const MatX& seed, int steps) {
  MatX V = seed;
  for (int k = 1; k <= steps; ++k) V = polar_orthonormalize(P_of_t(double(k) / steps) * V);
  return V;
}

StraightenResult straighten_loop_unitary(const std::vector<MatX>& frame_loop) {
  require(frame_loop.size() >= 2, "invalid-input", "loop too short");
  StraightenResult res;
  const MatX W = frame_loop.back().adjoint() * frame_loop.front();
  const MatX logW = unitary_log(W, &res.branch_warning);
  const double T = double(frame_loop.size() - 1);
  res.frames.reserve(frame_loop.size());
  for (std::size_t k = 0; k < frame_loop.size(); ++k)
    res.frames.push_back(frame_loop[k] * mat_exp_skew(MatX(double(k) / T * logW)));
  res.closure_defect = max_abs(MatX(res.frames.back() - res.frames.front()));
  return res;
}

namespace {

struct CircleMollifier {
  std::vector<VecX> samples;
  double sigma;

  VecX eval(double phi) const {
    const int M = int(samples.size());
    VecX acc = VecX::Zero(samples.front().size());
    double wsum = 0;
    const int reach = std::max(2, int(std::ceil(4 * sigma * M / two_pi)));
    const int m0 = int(std::floor(phi / (two_pi / M)));
    for (int k = m0 - reach; k <= m0 + reach; ++k) {
      const int m = ((k % M) + M) % M;
      const double dphi = wrap_to_pi(phi - two_pi * k / M);
      const double w = std::exp(-0.5 * dphi * dphi / (sigma * sigma));
      acc += w * samples[std::size_t(m)];
      wsum += w;
    }
    acc /= wsum;
    const double nn = acc.norm();
    require(nn > 0.25, "contraction-failed", "mollified loop nearly vanishes");
    return acc / nn;
  }
};

VecX slerp_to_pole(const VecX& N, double u) {
  // Path from N to the north pole e1 that never vanishes before normalizing:
  // straight line to e1 * (phase aligned with <e1, N>), then unwind the phase.
  const int d = int(N.size());
  VecX e1 = VecX::Zero(d);
  e1(0) = 1.0;
  const cxd a = N(0);
  const cxd c = std::abs(a) > 1e-6 ? a / std::abs(a) : cxd(1, 0);
  if (u <= 0.5) {
    const double s = 2 * u;
    VecX v = (1 - s) * N + s * (c * e1);
    return v / v.norm();
  }
  const double s = 2 * (u - 0.5);
  const double arg = std::arg(c);
  return std::exp(cxd(0, (1 - s) * arg)) * e1;
}

}  // namespace

SphereLoopHomotopy contract_sphere_loop(const std::vector<VecX>& loop, int s_steps,
                                        double eps_moll, int max_samples, unsigned seed) {
  const int M = int(loop.size());
  require(M >= 4, "invalid-input", "loop too short");
  const int d = int(loop.front().size());
  require(d >= 2, "rank-too-small", "sphere loop contraction needs C^d with d >= 2");
  for (std::size_t k = 0; k < loop.size(); ++k) {
    require(std::abs(loop[k].norm() - 1.0) < 1e-8, "invalid-input", "loop is not unit norm");
    const double inc = (loop[k] - loop[(k + 1) % loop.size()]).norm();
    require(inc < 0.5, "invalid-input", "loop increments too large (not continuous)");
  }

  CircleMollifier moll{loop, std::max(eps_moll, two_pi / M)};

  // Sard step: sample candidate directions, keep the one farthest from the
  // mollified loop; its antipode is then missed by the loop image. Axis
  // candidates come first so symmetric loops get deterministic targets (a
  // loop sitting at the pole keeps the pole itself).
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0, 1);
  VecX best_sample;
  double best_dist = -1;
  const int fine = 4 * M;
  std::vector<VecX> mloop(static_cast<std::size_t>(fine), VecX());
  for (int i = 0; i < fine; ++i) mloop[std::size_t(i)] = moll.eval(two_pi * i / fine);
  std::vector<VecX> candidates;
  for (int i = 0; i < d; ++i)
    for (const cxd phase : {cxd(1, 0), cxd(-1, 0), cxd(0, 1), cxd(0, -1)}) {
      VecX z = VecX::Zero(d);
      z(i) = phase;
      candidates.push_back(z);
    }
  for (int s = 0; s < max_samples; ++s) {
    VecX z(d);
    for (int i = 0; i < d; ++i) z(i) = cxd(gauss(rng), gauss(rng));
    candidates.push_back(VecX(z / z.norm()));
  }
  for (const VecX& z : candidates) {
    double dist = std::numeric_limits<double>::infinity();
    for (const VecX& u : mloop) dist = std::min(dist, (u - (-z)).norm());
    if (dist > best_dist + 1e-12) {
      best_dist = dist;
      best_sample = z;
    }
  }
  require(best_dist > 0.1, "contraction-failed",
          "no missed point found; loop too dense, increase mollification");
  const VecX N = best_sample;  // -N is missed by the mollified loop

  SphereLoopHomotopy out;
  out.phi_n = M;
  out.s_n = s_steps;
  out.missed_distance = best_dist;
  out.F.resize(std::size_t(s_steps + 1) * M);
  for (int is = 0; is <= s_steps; ++is) {
    const double s = double(is) / s_steps;
    for (int m = 0; m < M; ++m) {
      VecX val;
      if (s <= 0.5) {
        // normalized straight-line homotopy from the mollified loop to N
        const double u = 2 * s;
        const VecX base = mloop[std::size_t(4 * m) % fine];
        VecX v = (1 - u) * base + u * N;
        const double nn = v.norm();
        require(nn > 1e-6, "contraction-failed", "line homotopy hit the origin");
        val = v / nn;
      } else {
        val = slerp_to_pole(N, 2 * (s - 0.5));
      }
      out.F[std::size_t(is) * M + m] = val;
    }
  }
  return out;
}

namespace {

// Edge transport cache: raw transported frames at fine steps plus the
// straightening log, evaluable at arbitrary parameter t in [0, 2 pi].
struct EdgeFrames {
  std::vector<MatX> raw;
  MatX logW;
  int steps;
  std::function<MatX(double)> P_of_t;

  MatX at(double t) const {
    const double u = std::clamp(t / two_pi, 0.0, 1.0);
    const int k = std::min(int(u * steps), steps);
    MatX V = raw[std::size_t(k)];
    if (u * steps > k) V = polar_orthonormalize(P_of_t(u) * V);
    return V * mat_exp_skew(MatX(u * logW));
  }
};

EdgeFrames make_edge(const std::function<MatX(double)>& P_of_t, const MatX& seed, int steps,
                     bool* warn) {
  EdgeFrames e;
  e.steps = steps;
  e.P_of_t = P_of_t;
  e.raw.reserve(std::size_t(steps) + 1);
  MatX V = polar_orthonormalize(P_of_t(0.0) * seed);
  e.raw.push_back(V);
  for (int k = 1; k <= steps; ++k) {
    V = polar_orthonormalize(P_of_t(double(k) / steps) * V);
    e.raw.push_back(V);
  }
  const MatX W = e.raw.back().adjoint() * e.raw.front();
  e.logW = unitary_log(W, warn);
  return e;
}

}  // namespace

SectionField build_global_section(const ProjectorField& Pf,
                                  const std::function<MatX(const Vec2&)>& local_frame,
                                  const Vec2& center, const SectionBuildParams& params) {
  require(Pf.rank >= 2, "rank-too-small", "Lemma A.1 requires rank d >= 2");
  require(bool(Pf.eval), "invalid-input", "projector field lacks an off-grid evaluator");
  const int n = Pf.grid.n;
  require(n % 2 == 0, "invalid-input", "grid size must be even");
  const int d_r = Pf.rank;
  auto P = Pf.eval;

  const double r = params.disk_r;
  const double eps = params.eps_blend > 0 ? params.eps_blend : 2.0 * two_pi / n;
  require(r + 2 * eps < pi, "invalid-input", "disk plus blend must fit inside the cell");

  Grid2 grid;
  grid.n = n;
  grid.origin = center - Vec2(pi, pi);

  // Corner seed frame: transport the local frame from the center so the
  // inner and outer frames stay as aligned as the geometry allows.
  const Vec2 corner = center + Vec2(-pi, -pi);
  MatX seed;
  {
    const MatX U0 = polar_orthonormalize(P(center) * local_frame(center));
    auto path = [&](double u) { return P(center + u * Vec2(-pi, -pi)); };
    seed = transport_along(path, U0, params.edge_steps);
  }

  bool warn = false;
  auto left_path = [&](double u) { return P(center + Vec2(-pi, -pi + two_pi * u)); };
  auto bottom_path = [&](double u) { return P(center + Vec2(-pi + two_pi * u, -pi)); };
  const EdgeFrames EL = make_edge(left_path, seed, params.edge_steps, &warn);
  const EdgeFrames EB = make_edge(bottom_path, seed, params.edge_steps, &warn);

  auto boundary_frame = [&](const Vec2& x) -> MatX {
    // x in square coordinates relative to the center, on the boundary.
    if (std::abs(std::abs(x[0]) - pi) <= std::abs(std::abs(x[1]) - pi))
      return EL.at(x[1] + pi);
    return EB.at(x[0] + pi);
  };

  auto boundary_point = [&](const Vec2& x) -> Vec2 {
    // Foot point on the square boundary, parametrized by arc length in the
    // angle: keeps the foot speed bounded at the diagonals, where the naive
    // through-x map races through the corners.
    const double phi = std::atan2(x[1], x[0]);
    double u = std::fmod(phi + two_pi + pi / 4, two_pi) / (two_pi);  // 0 at (+,+) diagonal
    const double s = 8.0 * pi * u;  // arc length along the perimeter
    const int side = std::min(3, int(s / (2 * pi)));
    const double t = s - side * 2 * pi;  // position along the side, in [0, 2 pi)
    switch (side) {
      case 0: return Vec2(pi, -pi + t);    // right, upward
      case 1: return Vec2(pi - t, pi);     // top, leftward
      case 2: return Vec2(-pi, pi - t);    // left, downward
      default: return Vec2(-pi + t, -pi);  // bottom, rightward
    }
  };

  auto radial_frame = [&](const Vec2& x) -> MatX {
    // Transport the boundary frame inward along the ray through x; constant
    // step counts keep the discretization error smooth in x.
    const Vec2 b = boundary_point(x);
    const MatX Vb = boundary_frame(b);
    auto path = [&](double u) { return P(center + b + u * (x - b)); };
    return transport_along(path, Vb, params.ray_steps);
  };

  auto u_frame = [&](const Vec2& x) -> MatX {
    // Local frame inside B, extended radially outward past the disk.
    const double rho = x.norm();
    if (rho <= r) return local_frame(center + x);
    const Vec2 xr = (r / rho) * x;
    const MatX U0 = local_frame(center + xr);
    auto path = [&](double u) { return P(center + xr + u * (x - xr)); };
    return transport_along(path, U0, params.ray_steps);
  };

  auto W_of_phi = [&](double phi) -> MatX {
    const Vec2 xr = r * Vec2(std::cos(phi), std::sin(phi));
    const MatX U = u_frame(xr);
    const MatX V = radial_frame(xr);
    return U.adjoint() * V;
  };

  // First-column loop on a uniform angle grid, then the contraction data.
  const int Mphi = std::max(192, 3 * n);
  std::vector<VecX> c1(static_cast<std::size_t>(Mphi), VecX());
  std::vector<MatX> Wphi(static_cast<std::size_t>(Mphi), MatX());
  for (int m = 0; m < Mphi; ++m) {
    Wphi[std::size_t(m)] = W_of_phi(two_pi * m / Mphi);
    c1[std::size_t(m)] = Wphi[std::size_t(m)].col(0);
  }
  CircleMollifier moll{c1, 3.0 * two_pi / Mphi};

  // Missed point for the normalized line homotopy (axis candidates first).
  std::mt19937_64 rng(params.sard_seed);
  std::normal_distribution<double> gauss(0, 1);
  VecX N;
  double best_dist = -1;
  std::vector<VecX> candidates;
  {
    VecX mean = VecX::Zero(d_r);
    for (int m = 0; m < Mphi; ++m) mean += moll.eval(two_pi * m / Mphi);
    if (mean.norm() > 0.3 * Mphi) candidates.push_back(VecX(mean / mean.norm()));
  }
  for (int i = 0; i < d_r; ++i)
    for (const cxd phase : {cxd(1, 0), cxd(-1, 0), cxd(0, 1), cxd(0, -1)}) {
      VecX z = VecX::Zero(d_r);
      z(i) = phase;
      candidates.push_back(z);
    }
  for (int s = 0; s < 64; ++s) {
    VecX z(d_r);
    for (int i = 0; i < d_r; ++i) z(i) = cxd(gauss(rng), gauss(rng));
    candidates.push_back(VecX(z / z.norm()));
  }
  // Prefer the earliest candidate whose antipode clears the loop by a wide
  // margin: a tight pass would concentrate the unwinding of the column loop
  // into a narrow phase string across the annulus. Fall back to the sample
  // farthest from the loop.
  for (const VecX& z : candidates) {
    double dist = std::numeric_limits<double>::infinity();
    for (int m = 0; m < Mphi; ++m)
      dist = std::min(dist, (moll.eval(two_pi * m / Mphi) - (-z)).norm());
    if (N.size() == 0 && dist > 1.0) {
      N = z;
      best_dist = dist;
    }
  }
  if (N.size() == 0) {
    for (const VecX& z : candidates) {
      double dist = std::numeric_limits<double>::infinity();
      for (int m = 0; m < Mphi; ++m)
        dist = std::min(dist, (moll.eval(two_pi * m / Mphi) - (-z)).norm());
      if (dist > best_dist + 1e-12) {
        best_dist = dist;
        N = z;
      }
    }
  }
  require(best_dist > 0.1, "contraction-failed", "no missed point for the column loop");

  auto c_of = [&](const VecX& raw, const VecX& mollified, double s) -> VecX {
    // Homotopy of the first column: blend to the mollified loop, line to N,
    // then rotate to the pole.
    if (s <= 0.25) {
      const double u = 4 * s;
      VecX v = (1 - u) * raw + u * mollified;
      require(v.norm() > 1e-6, "contraction-failed", "mollification blend degenerate");
      return VecX(v / v.norm());
    }
    if (s <= 0.625) {
      const double u = (s - 0.25) / 0.375;
      VecX v = (1 - u) * mollified + u * N;
      require(v.norm() > 1e-6, "contraction-failed", "line homotopy hit the origin");
      return VecX(v / v.norm());
    }
    return slerp_to_pole(N, (s - 0.625) / 0.375);
  };

  auto A_of = [&](const MatX& W, double phi, double s) -> MatX {
    // W(phi) W(phi; s)^{-1} with W(phi; s) = [c(phi,s) | U(phi,s) c_j(phi)],
    // U the chained Nagy intertwiner along the column homotopy.
    const VecX raw = W.col(0);
    const VecX mollified = moll.eval(phi);
    const int S = params.homotopy_steps;
    MatX U = MatX::Identity(d_r, d_r);
    VecX cprev = c_of(raw, mollified, 0.0);
    for (int k = 1; k <= S; ++k) {
      const VecX ck = c_of(raw, mollified, s * k / S);
      const MatX pk = ck * ck.adjoint();
      const MatX pprev = cprev * cprev.adjoint();
      U = nagy_intertwiner(pk, pprev) * U;
      cprev = ck;
    }
    MatX Ws(d_r, d_r);
    Ws.col(0) = cprev;
    for (int j = 1; j < d_r; ++j) Ws.col(j) = U * W.col(j);
    return W * Ws.inverse();
  };

  SectionField out;
  out.grid = grid;
  out.dim = Pf.dim;
  out.psi.resize(std::size_t(n) * n);

  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      Vec2 x = grid.node(i, j) - center;  // in [-pi, pi)^2
      x[0] = wrap_to_pi(x[0]);
      x[1] = wrap_to_pi(x[1]);
      const double rho = x.norm();
      VecX psi;
      if (rho <= r) {
        psi = local_frame(center + x).col(0);
      } else if (rho <= r + eps) {
        const double phi = std::atan2(x[1], x[0]);
        const double phi_pos = phi < 0 ? phi + two_pi : phi;
        const double s = (rho - r) / eps;
        const MatX U = u_frame(x);
        psi = U * A_of(W_of_phi(phi_pos), phi_pos, s).col(0);
        const MatX Px = P(center + x);
        psi = Px * psi;
        psi /= psi.norm();
      } else if (rho <= r + 2 * eps) {
        const double phi = std::atan2(x[1], x[0]);
        const double phi_pos = phi < 0 ? phi + two_pi : phi;
        // Extend u~1 from the inner annulus by radial transport of a vector.
        const Vec2 xin = ((r + eps) / rho) * x;
        const MatX Uin = u_frame(xin);
        VecX ut = Uin * A_of(W_of_phi(phi_pos), phi_pos, 1.0).col(0);
        const int steps = std::max(16, params.ray_steps / 2);
        for (int k = 1; k <= steps; ++k) {
          const Vec2 xk = xin + double(k) / steps * (x - xin);
          ut = P(center + xk) * ut;
          require(ut.norm() > 1e-8, "transport-failed", "vector transport collapsed");
          ut /= ut.norm();
        }
        const MatX V = radial_frame(x);
        const double lam = (rho - r - eps) / eps;
        VecX blend = (1 - lam) * ut + lam * V.col(0);
        require(blend.norm() > 1e-6, "blend-failed",
                "convex blend nearly cancels; reduce eps_blend");
        const MatX Px = P(center + x);
        blend = Px * blend;
        psi = blend / blend.norm();
      } else {
        const MatX V = radial_frame(x);
        psi = V.col(0);
        const MatX Px = P(center + x);
        psi = Px * psi;
        psi /= psi.norm();
      }
      out.psi[grid.flat(i, j)] = psi;
    }
  return out;
}

SectionField smooth_section(const SectionField& psi, const ProjectorField& P,
                            const Vec2& center, double r_B, double r_K, double eps_moll) {
  require(r_K < r_B, "invalid-input", "K must be compactly inside B");
  const int n = psi.grid.n;
  const double h = psi.grid.spacing();
  const double sigma = eps_moll;
  // 6 sigma support: a shorter truncation leaves spectral ringing that caps
  // the Wannier decay of the smoothed sections.
  const int reach = std::max(1, int(std::ceil(6 * sigma / h)));
  require(2 * reach < n, "mollifier-too-wide", "mollifier reach exceeds half the torus");

  std::vector<double> w(std::size_t(2 * reach) + 1);
  for (int k = -reach; k <= reach; ++k)
    w[std::size_t(k + reach)] = std::exp(-0.5 * (k * h) * (k * h) / (sigma * sigma));
  double wsum = 0;
  for (double x : w) wsum += x;
  for (double& x : w) x /= wsum;

  SectionField out;
  out.grid = psi.grid;
  out.dim = psi.dim;
  out.psi.resize(psi.psi.size());

  // Separable periodic convolution.
  std::vector<VecX> tmp(psi.psi.size());
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      VecX acc = VecX::Zero(psi.dim);
      for (int k = -reach; k <= reach; ++k)
        acc += w[std::size_t(k + reach)] * psi.at(i + k, j);
      tmp[psi.grid.flat(i, j)] = acc;
    }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      VecX acc = VecX::Zero(psi.dim);
      for (int k = -reach; k <= reach; ++k)
        acc += w[std::size_t(k + reach)] * tmp[psi.grid.flat(i, j + k)];

      const Vec2 th = psi.grid.node(i, j);
      const MatX Pth = P.eval ? P.eval(th) : P.at(i, j);
      VecX proj = Pth * acc;
      require(proj.norm() >= 0.5, "mollifier-too-wide",
              "projected mollified section shorter than 1/2 (norm " +
                  std::to_string(proj.norm()) + " at node " + std::to_string(i) + "," +
                  std::to_string(j) + ")");
      proj /= proj.norm();

      Vec2 x(wrap_to_pi(th[0] - center[0]), wrap_to_pi(th[1] - center[1]));
      const double rho = x.norm();
      double f;
      if (rho <= r_K)
        f = 1.0;
      else if (rho >= r_B)
        f = 0.0;
      else
        f = smooth_bump(0.5 + 0.5 * (rho - r_K) / (r_B - r_K));
      VecX blended = f * psi.at(i, j) + (1 - f) * proj;
      require(blended.norm() > 1e-6, "blend-failed", "smoothing blend degenerate");
      out.psi[out.grid.flat(i, j)] = blended / blended.norm();
    }
  return out;
}

QuasiBand build_quasi_band_projector(const SectionField& minus, const SectionField& plus,
                                     double ortho_tol) {
  require(minus.grid.n == plus.grid.n && minus.dim == plus.dim, "invalid-input",
          "section grids do not match");
  const int n = minus.grid.n;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double ip = std::abs(minus.at(i, j).dot(plus.at(i, j)));
      require(ip <= ortho_tol, "invalid-input", "sections are not orthonormal per node");
      require(std::abs(minus.at(i, j).norm() - 1) <= ortho_tol &&
                  std::abs(plus.at(i, j).norm() - 1) <= ortho_tol,
              "invalid-input", "sections are not unit norm");
    }

  QuasiBand qb;
  qb.P.grid = minus.grid;
  qb.P.dim = minus.dim;
  qb.P.rank = 2;
  qb.P.P.resize(std::size_t(n) * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      qb.P.P[minus.grid.flat(i, j)] =
          minus.at(i, j) * minus.at(i, j).adjoint() + plus.at(i, j) * plus.at(i, j).adjoint();

  // Wannier coefficients: inverse DFT of the sections over the theta grid.
  qb.wannier.dim = minus.dim;
  qb.wannier.radius = n / 2 - 1;
  const int R = qb.wannier.radius;
  const int nr = 2 * R + 1;
  qb.wannier.w.assign(2, MatX::Zero(nr * nr, minus.dim));
  qb.decay_sup.assign(7, 0.0);
  for (int g1 = -R; g1 <= R; ++g1)
    for (int g2 = -R; g2 <= R; ++g2) {
      VecX wm = VecX::Zero(minus.dim), wp = VecX::Zero(minus.dim);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          const Vec2 th = minus.grid.node(i, j);
          const cxd ph = std::exp(cxd(0, th[0] * g1 + th[1] * g2));
          wm += ph * minus.at(i, j);
          wp += ph * plus.at(i, j);
        }
      wm /= double(n) * n;
      wp /= double(n) * n;
      const int row = (g1 + R) * nr + (g2 + R);
      qb.wannier.w[0].row(row) = wm.transpose();
      qb.wannier.w[1].row(row) = wp.transpose();
      const double norm = std::max(wm.norm(), wp.norm());
      for (int k = 0; k <= 6; ++k)
        qb.decay_sup[std::size_t(k)] =
            std::max(qb.decay_sup[std::size_t(k)],
                     std::pow(1.0 + double(g1) * g1 + double(g2) * g2, 0.5 * k) * norm);
    }
  return qb;
}

std::pair<SectionField, SectionField> align_sections_with_frame(
    const SectionField& minus, const SectionField& plus,
    const std::function<MatX(const Vec2&)>& local_frame, const Vec2& theta0, double R) {
  SectionField om = minus, op = plus;
  const int n = minus.grid.n;
  bool warn = false;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const Vec2 th = minus.grid.node(i, j);
      const double rho = torus_dist(th, theta0);
      if (rho >= 2 * R) continue;
      const double chi = smooth_bump(0.5 * rho / R);
      MatX Psi(minus.dim, 2);
      Psi.col(0) = minus.at(i, j);
      Psi.col(1) = plus.at(i, j);
      const MatX Phi = local_frame(th);
      MatX u = Psi.adjoint() * Phi;  // 2x2, unitary where both span Pi_I
      // Re-unitarize before the log to keep exp(chi log u) unitary.
      Eigen::JacobiSVD<MatX> svd(u, Eigen::ComputeFullU | Eigen::ComputeFullV);
      u = svd.matrixU() * svd.matrixV().adjoint();
      const MatX rot = mat_exp_skew(MatX(chi * unitary_log(u, &warn)));
      const MatX rotated = Psi * rot;
      om.at(i, j) = rotated.col(0);
      op.at(i, j) = rotated.col(1);
    }
  return {om, op};
}

TwoBandSymbol quasiband_symbol(const FiberFamily& fam, const SectionField& minus,
                               const SectionField& plus, double energy_shift) {
  const int n = minus.grid.n;
  std::vector<Mat2> samples(std::size_t(n) * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const Vec2 th = minus.grid.node(i, j);
      const MatX H = fam.H(th);
      MatX Psi(minus.dim, 2);
      Psi.col(0) = minus.at(i, j);
      Psi.col(1) = plus.at(i, j);
      const Mat2 k = (Psi.adjoint() * H * Psi) - energy_shift * Mat2::Identity();
      samples[std::size_t(i) * n + j] = 0.5 * (k + k.adjoint());
    }
  return TwoBandSymbol::from_grid(n, samples, minus.grid.origin);
}

std::function<MatX(const Vec2&)> ray_transported_frame(
    const std::function<MatX(const Vec2&)>& P_eval, const Vec2& center, const MatX& seed,
    int steps_per_unit) {
  // A constant step count keeps the discretization error a smooth function of
  // the endpoint; length-dependent step counts would put small jumps into the
  // frame field wherever the count changes.
  return [P_eval, center, seed, steps_per_unit](const Vec2& th) -> MatX {
    Vec2 x(wrap_to_pi(th[0] - center[0]), wrap_to_pi(th[1] - center[1]));
    const double rho = x.norm();
    if (rho < 1e-14) return polar_orthonormalize(P_eval(center) * seed);
    const int steps = std::max(16, int(std::lround(steps_per_unit * pi)));
    auto path = [&](double u) { return P_eval(center + u * x); };
    return transport_along(path, polar_orthonormalize(P_eval(center) * seed), steps);
  };
}

std::function<MatX(const Vec2&)> stack_frames(
    const std::vector<std::function<MatX(const Vec2&)>>& frames) {
  return [frames](const Vec2& th) -> MatX {
    std::vector<MatX> blocks;
    int cols = 0;
    for (const auto& f : frames) {
      blocks.push_back(f(th));
      cols += int(blocks.back().cols());
    }
    MatX out(blocks.front().rows(), cols);
    int at = 0;
    for (const MatX& b : blocks) {
      out.middleCols(at, int(b.cols())) = b;
      at += int(b.cols());
    }
    return out;
  };
}

double section_second_difference(const SectionField& s) {
  double worst = 0;
  const int n = s.grid.n;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const VecX d1 = s.at(i + 1, j) - 2 * s.at(i, j) + s.at(i - 1, j);
      const VecX d2 = s.at(i, j + 1) - 2 * s.at(i, j) + s.at(i, j - 1);
      worst = std::max({worst, d1.norm(), d2.norm()});
    }
  return worst;
}

}  // namespace diraclev
