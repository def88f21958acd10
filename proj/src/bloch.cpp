#include "diraclev/bloch.hpp"

#include <Eigen/Eigenvalues>
#include <random>

namespace diraclev {

LatticeSpec LatticeSpec::from_basis(const Vec2& a1, const Vec2& a2) {
  LatticeSpec l;
  l.a1 = a1;
  l.a2 = a2;
  const double det = wedge(a1, a2);
  require(std::abs(det) > 1e-14, "invalid-problem", "lattice basis is degenerate");
  l.b1 = two_pi / det * Vec2(a2[1], -a2[0]);
  l.b2 = two_pi / det * Vec2(-a1[1], a1[0]);
  l.validate();
  return l;
}

void LatticeSpec::validate() const {
  require(std::abs(wedge(a1, a2)) > 1e-14, "invalid-problem", "lattice basis is degenerate");
  require(std::abs(b1.dot(a1) - two_pi) <= 1e-12 && std::abs(b2.dot(a2) - two_pi) <= 1e-12 &&
              std::abs(b1.dot(a2)) <= 1e-12 && std::abs(b2.dot(a1)) <= 1e-12,
          "invalid-problem", "<b_i, a_j> != 2 pi delta_ij");
}

void BlochProblem::validate() const {
  lattice.validate();
  require(truncation >= 1, "invalid-problem", "truncation must be >= 1");
  auto coeff_at = [&](int n1, int n2) -> cxd {
    for (const auto& [n, v] : potential)
      if (n.g1 == n1 && n.g2 == n2) return v;
    return 0.0;
  };
  for (const auto& [n, v] : potential)
    require(std::abs(std::conj(v) - coeff_at(-n.g1, -n.g2)) <= 1e-12, "invalid-problem",
            "potential coefficients violate the reality condition");
  auto vp_at = [&](int n1, int n2) -> Eigen::Vector2cd {
    for (const auto& [n, v] : vector_potential)
      if (n.g1 == n1 && n.g2 == n2) return v;
    return Eigen::Vector2cd::Zero();
  };
  for (const auto& [n, v] : vector_potential) {
    const Eigen::Vector2cd conj_v = vp_at(-n.g1, -n.g2);
    require((v.conjugate() - conj_v).cwiseAbs().maxCoeff() <= 1e-12, "invalid-problem",
            "vector potential coefficients violate the reality condition");
  }
}

MatX assemble_fiber_hamiltonian(const BlochProblem& problem, const Vec2& theta) {
  problem.validate();
  require(theta.allFinite(), "invalid-input", "theta must be finite");
  const int N = problem.truncation;
  const int n1d = 2 * N + 1;
  const int dim = n1d * n1d;
  auto idx = [&](int m1, int m2) { return (m1 + N) * n1d + (m2 + N); };
  auto kvec = [&](int m1, int m2) -> Vec2 {
    return (m1 + theta[0] / two_pi) * problem.lattice.b1 +
           (m2 + theta[1] / two_pi) * problem.lattice.b2;
  };

  MatX H = MatX::Zero(dim, dim);
  for (int m1 = -N; m1 <= N; ++m1)
    for (int m2 = -N; m2 <= N; ++m2) H(idx(m1, m2), idx(m1, m2)) = kvec(m1, m2).squaredNorm();

  for (const auto& [n, v] : problem.potential) {
    for (int m1 = -N; m1 <= N; ++m1)
      for (int m2 = -N; m2 <= N; ++m2) {
        const int p1 = m1 - n.g1, p2 = m2 - n.g2;
        if (std::abs(p1) > N || std::abs(p2) > N) continue;
        H(idx(m1, m2), idx(p1, p2)) += v;
      }
  }

  if (!problem.vector_potential.empty()) {
    // -A.(k + k') cross terms plus the |A|^2 convolution.
    for (const auto& [n, av] : problem.vector_potential) {
      for (int m1 = -N; m1 <= N; ++m1)
        for (int m2 = -N; m2 <= N; ++m2) {
          const int p1 = m1 - n.g1, p2 = m2 - n.g2;
          if (std::abs(p1) > N || std::abs(p2) > N) continue;
          const Vec2 ksum = kvec(m1, m2) + kvec(p1, p2);
          H(idx(m1, m2), idx(p1, p2)) -= av(0) * ksum[0] + av(1) * ksum[1];
        }
    }
    for (const auto& [n, av] : problem.vector_potential)
      for (const auto& [r, ar] : problem.vector_potential) {
        const int s1 = n.g1 + r.g1, s2 = n.g2 + r.g2;
        for (int m1 = -N; m1 <= N; ++m1)
          for (int m2 = -N; m2 <= N; ++m2) {
            const int p1 = m1 - s1, p2 = m2 - s2;
            if (std::abs(p1) > N || std::abs(p2) > N) continue;
            H(idx(m1, m2), idx(p1, p2)) += av.dot(ar.conjugate());
          }
      }
  }

  require(max_abs(MatX(H - H.adjoint())) <= 1e-12 * std::max(1.0, max_abs(H)),
          "invalid-problem", "assembled fiber Hamiltonian is not Hermitian");
  return 0.5 * (H + H.adjoint());
}

FiberFamily fiber_family(const BlochProblem& problem, int k0) {
  FiberFamily f;
  f.dim = problem.fiber_dim();
  f.k0 = k0;
  const BlochProblem prob = problem;
  f.H = [prob](const Vec2& th) { return assemble_fiber_hamiltonian(prob, th); };
  return f;
}

FiberFamily fiber_family(const TwoBandSymbol& s) {
  FiberFamily f;
  f.dim = 2;
  f.k0 = 0;
  f.H = [s](const Vec2& th) { return MatX(s.matrix(th)); };
  return f;
}

BandGrid compute_bands(const FiberFamily& fam, int grid_resolution, int bands_kept,
                       bool with_vectors) {
  require(grid_resolution >= 4, "invalid-input", "grid resolution must be >= 4");
  require(bands_kept >= 1 && bands_kept <= fam.dim, "invalid-input", "bad bandsKept");
  BandGrid g;
  g.grid_n = grid_resolution;
  g.bands = bands_kept;
  g.fiber_dim = fam.dim;
  g.k0 = fam.k0;
  g.fiber = fam.H;
  g.lambda.resize(std::size_t(grid_resolution) * grid_resolution);
  if (with_vectors) g.vectors.resize(g.lambda.size());

  const int n = grid_resolution;
#pragma omp parallel for collapse(2) schedule(dynamic)
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const MatX H = fam.H(Vec2(two_pi * i / n, two_pi * j / n));
      Eigen::SelfAdjointEigenSolver<MatX> es(H, with_vectors ? Eigen::ComputeEigenvectors
                                                             : Eigen::EigenvaluesOnly);
      if (es.info() != Eigen::Success)
        throw Error("numerical-failure",
                    "eigensolver failed at node (" + std::to_string(i) + "," +
                        std::to_string(j) + ")");
      g.lambda[std::size_t(i) * n + j] = es.eigenvalues().head(bands_kept);
      if (with_vectors)
        g.vectors[std::size_t(i) * n + j] = es.eigenvectors().leftCols(bands_kept);
    }

  auto fn = fam.H;
  const int kept = bands_kept;
  g.evaluate = [fn, kept](const Vec2& th) -> Eigen::VectorXd {
    Eigen::SelfAdjointEigenSolver<MatX> es(fn(th), Eigen::EigenvaluesOnly);
    return es.eigenvalues().head(kept);
  };
  return g;
}

BandGrid compute_bands(const BlochProblem& problem, int grid_resolution, int bands_kept,
                       bool with_vectors, int k0) {
  return compute_bands(fiber_family(problem, k0), grid_resolution, bands_kept, with_vectors);
}

CrossingPoint locate_crossing(const BandGrid& bands, int k0_hint, double gap_tol,
                              double seed_threshold) {
  require(bands.bands >= k0_hint + 2, "invalid-input",
          "band grid does not contain the crossing pair");
  const int n = bands.grid_n;

  // Grid scan for the smallest pair gap.
  double best = std::numeric_limits<double>::infinity();
  Vec2 seed = Vec2::Zero();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double gap = bands.value(i, j, k0_hint + 1) - bands.value(i, j, k0_hint);
      if (gap < best) {
        best = gap;
        seed = bands.node(i, j);
      }
    }
  require(best < seed_threshold, "no-crossing-found",
          "no node with pair gap below the seed threshold");

  // Newton iteration on delta^2 with central differences.
  auto delta2 = [&](const Vec2& th) {
    const Eigen::VectorXd ev = bands.evaluate(th);
    const double d = 0.5 * (ev(k0_hint + 1) - ev(k0_hint));
    return d * d;
  };
  const double fd = 1e-4 * (two_pi / n);
  Vec2 th = seed;
  bool converged = false;
  for (int it = 0; it < 60; ++it) {
    const double c = delta2(th);
    Vec2 grad;
    Eigen::Matrix2d hess;
    const double fpp = delta2(th + Vec2(fd, 0)), fmm = delta2(th - Vec2(fd, 0));
    const double gpp = delta2(th + Vec2(0, fd)), gmm = delta2(th - Vec2(0, fd));
    grad[0] = (fpp - fmm) / (2 * fd);
    grad[1] = (gpp - gmm) / (2 * fd);
    hess(0, 0) = (fpp - 2 * c + fmm) / (fd * fd);
    hess(1, 1) = (gpp - 2 * c + gmm) / (fd * fd);
    const double pp = delta2(th + Vec2(fd, fd)), pm = delta2(th + Vec2(fd, -fd));
    const double mp = delta2(th + Vec2(-fd, fd)), mm2 = delta2(th + Vec2(-fd, -fd));
    hess(0, 1) = hess(1, 0) = (pp - pm - mp + mm2) / (4 * fd * fd);
    if (grad.norm() < 1e-12) {
      converged = true;
      break;
    }
    const Eigen::Vector2d step = hess.fullPivLu().solve(-grad);
    if (!step.allFinite() || step.norm() > 1.0)
      throw Error("refinement-failed", "Newton step diverged; best node at (" +
                                           std::to_string(seed[0]) + "," +
                                           std::to_string(seed[1]) + ")");
    th += step;
  }
  if (!converged && delta2(th) > gap_tol * gap_tol)
    throw Error("refinement-failed", "Newton did not converge; best node at (" +
                                         std::to_string(seed[0]) + "," +
                                         std::to_string(seed[1]) + ")");

  CrossingPoint cp;
  cp.theta0 = wrap_to_torus(th);
  cp.k0 = k0_hint;
  const Eigen::VectorXd ev = bands.evaluate(th);
  cp.residual_gap = ev(k0_hint + 1) - ev(k0_hint);
  require(cp.residual_gap <= gap_tol, "no-crossing-found",
          "refined gap " + std::to_string(cp.residual_gap) + " above gapTol");
  cp.crossing_energy = 0.5 * (ev(k0_hint + 1) + ev(k0_hint));

  // Default window and disk: limited by the remote bands at theta0 and the
  // requirement that the disk sit inside one fundamental cell.
  double lo = 0.45, hi = 0.45;
  if (k0_hint >= 1) lo = std::min(lo, 0.45 * (cp.crossing_energy - ev(k0_hint - 1)));
  if (k0_hint + 2 < bands.bands) hi = std::min(hi, 0.45 * (ev(k0_hint + 2) - cp.crossing_energy));
  cp.lambda_lo = lo;
  cp.lambda_hi = hi;
  cp.sigma_radius = std::min(1.0, pi / 2);
  return cp;
}

HypothesisReport verify_hypotheses(const BandGrid& bands, const CrossingPoint& crossing) {
  HypothesisReport rep;
  const int k0 = crossing.k0;
  const double E0 = crossing.crossing_energy;
  rep.k0_warning = (k0 == 1);

  auto pair_at = [&](const Vec2& th) -> std::pair<double, double> {
    const Eigen::VectorXd ev = bands.evaluate(th);
    return {ev(k0) - E0, ev(k0 + 1) - E0};
  };
  auto dd = [&](const Vec2& th) {
    auto [lm, lp] = pair_at(th);
    return lm * lp;
  };
  auto delta2 = [&](const Vec2& th) {
    auto [lm, lp] = pair_at(th);
    return 0.25 * (lp - lm) * (lp - lm);
  };
  auto lambda_circ = [&](const Vec2& th) {
    auto [lm, lp] = pair_at(th);
    return 0.5 * (lm + lp);
  };

  // H1: the window I must meet only the crossing pair over Sigma_I.
  rep.pass_h1 = true;
  const int n = bands.grid_n;
  for (int i = 0; i < n && rep.pass_h1; ++i)
    for (int j = 0; j < n; ++j) {
      if (torus_dist(bands.node(i, j), crossing.theta0) > crossing.sigma_radius) continue;
      if (k0 >= 1 && bands.value(i, j, k0 - 1) - E0 > -crossing.lambda_lo) {
        rep.pass_h1 = false;
        throw Error("hypothesis-H1-violated",
                    "band " + std::to_string(k0 - 1) + " enters the window");
      }
      if (k0 + 2 < bands.bands && bands.value(i, j, k0 + 2) - E0 < crossing.lambda_hi) {
        rep.pass_h1 = false;
        throw Error("hypothesis-H1-violated",
                    "band " + std::to_string(k0 + 2) + " enters the window");
      }
    }

  // Hessians at theta0 by central differences.
  const double h = 5e-3;
  auto hess_of = [&](const std::function<double(const Vec2&)>& f) {
    Eigen::Matrix2d H;
    const Vec2 t0 = crossing.theta0;
    const double c = f(t0);
    H(0, 0) = (f(t0 + Vec2(h, 0)) - 2 * c + f(t0 - Vec2(h, 0))) / (h * h);
    H(1, 1) = (f(t0 + Vec2(0, h)) - 2 * c + f(t0 - Vec2(0, h))) / (h * h);
    H(0, 1) = H(1, 0) = (f(t0 + Vec2(h, h)) - f(t0 + Vec2(h, -h)) - f(t0 + Vec2(-h, h)) +
                         f(t0 + Vec2(-h, -h))) /
                        (4 * h * h);
    return H;
  };
  const Eigen::Matrix2d Hd = hess_of(dd);
  const Eigen::Matrix2d Hdelta2 = hess_of(delta2);
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> esd(Hd);
  rep.hessian_eigenvalues = esd.eigenvalues();
  rep.pass_h2 = rep.hessian_eigenvalues(1) < 0;
  rep.a0 = -rep.hessian_eigenvalues(1);
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> esd2(Hdelta2);
  rep.rho = esd2.eigenvalues()(0);

  // a^2 = max_zeta 2 |<grad lambda_circ, zeta>|^2 / <Hess delta^2 zeta, zeta>.
  Vec2 grad_lc;
  grad_lc[0] = (lambda_circ(crossing.theta0 + Vec2(h, 0)) -
                lambda_circ(crossing.theta0 - Vec2(h, 0))) /
               (2 * h);
  grad_lc[1] = (lambda_circ(crossing.theta0 + Vec2(0, h)) -
                lambda_circ(crossing.theta0 - Vec2(0, h))) /
               (2 * h);
  if (rep.pass_h2) {
    const double a2 = 2.0 * grad_lc.dot(Hdelta2.inverse() * grad_lc);
    rep.a = std::sqrt(std::max(0.0, a2));
  }

  // Linear gap constants over Sigma_I, excluding a small core.
  const double core = 2.0 * two_pi / n;
  rep.c_lower = std::numeric_limits<double>::infinity();
  rep.c_upper = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double r = torus_dist(bands.node(i, j), crossing.theta0);
      if (r > crossing.sigma_radius || r < core) continue;
      const double gap = bands.value(i, j, k0 + 1) - bands.value(i, j, k0);
      rep.c_lower = std::min(rep.c_lower, gap / r);
      rep.c_upper = std::max(rep.c_upper, gap / r);
    }
  return rep;
}

namespace {

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

}  // namespace

LocalModel build_local_model(const BandGrid& bands, const CrossingPoint& crossing) {
  require(bool(bands.fiber), "invalid-input", "band grid lacks a fiber evaluator");
  const int k0 = crossing.k0;
  const auto Hfn = bands.fiber;
  const Vec2 th0 = crossing.theta0;
  const double E0 = crossing.crossing_energy;

  // Seed frame: the crossing-pair eigenvectors at theta0 with fixed phases.
  Eigen::SelfAdjointEigenSolver<MatX> es0(Hfn(th0));
  MatX seed = es0.eigenvectors().middleCols(k0, 2);
  fix_column_phases(seed);
  const MatX P0 = seed * seed.adjoint();

  auto frame = [Hfn, k0, P0, seed](const Vec2& th) -> MatX {
    Eigen::SelfAdjointEigenSolver<MatX> es(Hfn(th));
    const MatX V = es.eigenvectors().middleCols(k0, 2);
    const MatX P = V * V.adjoint();
    const MatX U = nagy_intertwiner(P, P0);
    return U * seed;
  };

  auto symbol_eval = [Hfn, frame, E0](const Vec2& th) -> Mat2 {
    const MatX F = frame(th);
    const MatX H = Hfn(th);
    const Mat2 M = (F.adjoint() * H * F) - E0 * Mat2::Identity();
    return Mat2(0.5 * (M + M.adjoint()));
  };

  LocalModel lm;
  lm.symbol = TwoBandSymbol::from_callable(symbol_eval);
  lm.theta0 = th0;
  lm.energy_shift = E0;
  lm.frame = frame;
  return lm;
}

FrameField sample_frame_field(const LocalModel& lm, const BandGrid& bands,
                              const CrossingPoint& crossing) {
  FrameField ff;
  const int n = bands.grid_n;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (torus_dist(bands.node(i, j), crossing.theta0) > crossing.sigma_radius) continue;
      ff.frames.push_back({{i, j}, lm.frame(bands.node(i, j))});
    }
  return ff;
}

FiberFamily embed_symbol(const TwoBandSymbol& s, const std::vector<double>& below,
                         const std::vector<double>& above, double mixing, unsigned seed) {
  const int nb = int(below.size()), na = int(above.size());
  const int d = nb + 2 + na;
  require(d >= 3, "invalid-input", "embedding needs at least one remote band");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto herm = [&]() {
    MatX g(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) g(i, j) = cxd(gauss(rng), gauss(rng));
    return MatX(0.5 * (g + g.adjoint()) / std::sqrt(double(d)));
  };
  const MatX G1 = herm(), G2 = herm();

  const std::vector<double> eb = below, ea = above;
  const TwoBandSymbol sym = s;
  const double mix = mixing;
  auto H = [sym, eb, ea, G1, G2, mix, d, nb](const Vec2& th) -> MatX {
    MatX core = MatX::Zero(d, d);
    for (int i = 0; i < int(eb.size()); ++i) core(i, i) = eb[std::size_t(i)];
    core.block(nb, nb, 2, 2) = sym.matrix(th);
    for (int i = 0; i < int(ea.size()); ++i)
      core(nb + 2 + i, nb + 2 + i) = ea[std::size_t(i)];
    const MatX A = mix * (std::sin(th[0]) * G1 + std::sin(th[1]) * G2);
    // W(theta) = exp(i A(theta)): smooth, Gamma*-periodic.
    Eigen::SelfAdjointEigenSolver<MatX> es(A);
    const MatX W = es.eigenvectors() *
                   (cxd(0, 1) * es.eigenvalues().array()).exp().matrix().asDiagonal() *
                   es.eigenvectors().adjoint();
    return MatX(W * core * W.adjoint());
  };

  FiberFamily fam;
  fam.dim = d;
  fam.k0 = nb;
  fam.H = H;
  return fam;
}

OperatorHoppings fiber_hoppings(const FiberFamily& fam, int grid_n, double drop_tol) {
  std::vector<MatX> samples(std::size_t(grid_n) * grid_n);
  for (int i = 0; i < grid_n; ++i)
    for (int j = 0; j < grid_n; ++j)
      samples[std::size_t(i) * grid_n + j] = fam.H(Vec2(two_pi * i / grid_n, two_pi * j / grid_n));
  OperatorHoppings out;
  out.dim = fam.dim;
  const int lo = -(grid_n / 2), hi = (grid_n - 1) / 2;
  for (int g1 = lo; g1 <= hi; ++g1)
    for (int g2 = lo; g2 <= hi; ++g2) {
      MatX acc = MatX::Zero(fam.dim, fam.dim);
      for (int i = 0; i < grid_n; ++i)
        for (int j = 0; j < grid_n; ++j)
          acc += std::exp(cxd(0, two_pi * (double(i) * g1 + double(j) * g2) / grid_n)) *
                 samples[std::size_t(i) * grid_n + j];
      acc /= double(grid_n) * grid_n;
      if (max_abs(acc) > drop_tol) out.add(g1, g2, acc);
    }
  return out;
}

}  // namespace diraclev
