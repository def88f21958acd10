#include "diraclev/magnetic.hpp"

#include <Eigen/Eigenvalues>

#include "diraclev/feshbach.hpp"

namespace diraclev {

FluxRational FluxRational::parse(const std::string& s) {
  const auto slash = s.find('/');
  require(slash != std::string::npos, "invalid-input", "flux must be given as \"p/q\"");
  return FluxRational(std::stoi(s.substr(0, slash)), std::stoi(s.substr(slash + 1)));
}

FluxRational approximate_flux(double eps_times_B0, int max_q) {
  const double x = eps_times_B0 / two_pi;
  int best_p = int(std::lround(x)), best_q = 1;
  double best_err = std::abs(x - best_p);
  for (int q = 2; q <= max_q; ++q) {
    const int p = int(std::lround(x * q));
    if (std::gcd(std::abs(p), q) != 1) continue;
    const double err = std::abs(x - double(p) / q);
    if (err < best_err) {
      best_err = err;
      best_p = p;
      best_q = q;
    }
  }
  return FluxRational(best_p, best_q);
}

namespace {

int site_index(int a1, int a2, int L) { return (a1 + L) * (2 * L + 1) + (a2 + L); }

}  // namespace

MatX build_magnetic_matrix(const HoppingSet& m, double eps_B0, int L) {
  require(L >= 3 * std::max(1, m.cutoff), "truncation-warning",
          "lattice extent below 3x hopping cutoff");
  const int n = 2 * L + 1;
  MatX H = MatX::Zero(2 * n * n, 2 * n * n);
  for (int a1 = -L; a1 <= L; ++a1)
    for (int a2 = -L; a2 <= L; ++a2) {
      const Vec2 alpha(a1, a2);
      for (const auto& [g, mm] : m.terms) {
        const int b1 = a1 - g.g1, b2 = a2 - g.g2;
        if (std::abs(b1) > L || std::abs(b2) > L) continue;
        const Vec2 beta(b1, b2);
        const cxd ph = magnetic_phase(alpha, beta, eps_B0);
        const int ia = site_index(a1, a2, L), ib = site_index(b1, b2, L);
        for (int r = 0; r < 2; ++r)
          for (int c = 0; c < 2; ++c) H(2 * ia + r, 2 * ib + c) += ph * mm(r, c);
      }
    }
  return H;
}

MatX hofstadter_block(const HoppingSet& m, const FluxRational& flux, double k1, double k2) {
  const int q = flux.q;
  require(2 * q <= 4096, "resource", "magnetic Bloch block too large");
  const double h = flux.h();
  MatX H = MatX::Zero(2 * q, 2 * q);
  for (const auto& [g, mm] : m.terms) {
    for (int j = 0; j < q; ++j) {
      const int jp = ((j - g.g1) % q + q) % q;
      const cxd ph = std::exp(cxd(0, 0.5 * h * g.g1 * g.g2 - k1 * g.g1 - (h * j + k2) * g.g2));
      for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 2; ++c) H(2 * j + r, 2 * jp + c) += ph * mm(r, c);
    }
  }
  return H;
}

SpectrumSet hofstadter_spectrum(const HoppingSet& m, const FluxRational& flux, int mbz_grid,
                                double lo, double hi) {
  std::vector<double> vals;
  const int q = flux.q;
  vals.reserve(std::size_t(2 * q) * mbz_grid * mbz_grid);
  for (int i = 0; i < mbz_grid; ++i)
    for (int j = 0; j < mbz_grid; ++j) {
      const double k1 = (two_pi / q) * i / mbz_grid;
      const double k2 = (two_pi / q) * j / mbz_grid;
      Eigen::SelfAdjointEigenSolver<MatX> es(hofstadter_block(m, flux, k1, k2),
                                             Eigen::EigenvaluesOnly);
      for (int a = 0; a < es.eigenvalues().size(); ++a) vals.push_back(es.eigenvalues()(a));
    }
  return make_spectrum(std::move(vals), lo, hi);
}

namespace {

// 32-point Gauss-Legendre nodes/weights on [0, 1].
struct GaussLegendre32 {
  std::array<double, 32> x{}, w{};
  GaussLegendre32() {
    // Nodes/weights on [-1,1] via Newton iteration on Legendre polynomials.
    const int n = 32;
    for (int i = 0; i < n / 2; ++i) {
      double t = std::cos(pi * (i + 0.75) / (n + 0.5));
      for (int it = 0; it < 100; ++it) {
        double p0 = 1, p1 = t;
        for (int k = 2; k <= n; ++k) {
          const double p2 = ((2 * k - 1) * t * p1 - (k - 1) * p0) / k;
          p0 = p1;
          p1 = p2;
        }
        const double dp = n * (t * p1 - p0) / (t * t - 1);
        const double dt = p1 / dp;
        t -= dt;
        if (std::abs(dt) < 1e-15) break;
      }
      double p0 = 1, p1 = t;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2 * k - 1) * t * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      const double dp = n * (t * p1 - p0) / (t * t - 1);
      const double ww = 2.0 / ((1 - t * t) * dp * dp);
      x[std::size_t(i)] = 0.5 * (1 - t);
      x[std::size_t(n - 1 - i)] = 0.5 * (1 + t);
      w[std::size_t(i)] = 0.5 * ww;
      w[std::size_t(n - 1 - i)] = 0.5 * ww;
    }
  }
};

const GaussLegendre32& gl32() {
  static const GaussLegendre32 g;
  return g;
}

}  // namespace

SpectrumSet nonconstant_field_spectrum(const HoppingSet& m, const MagneticParams& mp, int L,
                                       double lo, double hi, InteriorFilterReport* report,
                                       double boundary_threshold) {
  require(mp.epsilon >= 0 && mp.epsilon <= 1 && mp.kappa >= 0 && mp.kappa <= 1,
          "invalid-input", "epsilon and kappa must lie in [0,1]");
  const auto& gl = gl32();

  // Poincare (transverse) gauge for the perturbation: A(x) = (-x2, x1) I(x),
  // I(x) = int_0^1 s B(s x) ds. For kappa = 0 this reduces to the constant
  // transverse gauge exactly.
  auto A_pert = [&](const Vec2& x) -> Vec2 {
    double I = 0;
    for (int i = 0; i < 32; ++i) I += gl.w[std::size_t(i)] * gl.x[std::size_t(i)] * mp.B(gl.x[std::size_t(i)] * x);
    return Vec2(-x[1], x[0]) * I;
  };
  auto bond_phase = [&](const Vec2& alpha, const Vec2& beta) -> cxd {
    // exp(-i int_[alpha,beta] A^{eps,kappa}); constant part in closed form.
    double line = 0;
    if (mp.kappa != 0) {
      for (int i = 0; i < 32; ++i) {
        const Vec2 xpt = alpha + gl.x[std::size_t(i)] * (beta - alpha);
        line += gl.w[std::size_t(i)] * A_pert(xpt).dot(beta - alpha);
      }
    }
    const double constant_part = 0.5 * mp.eps_B0() * wedge(alpha, beta);
    return std::exp(cxd(0, -(constant_part + mp.epsilon * mp.kappa * line)));
  };

  const int n = 2 * L + 1;
  MatX H = MatX::Zero(2 * n * n, 2 * n * n);
  for (int a1 = -L; a1 <= L; ++a1)
    for (int a2 = -L; a2 <= L; ++a2) {
      const Vec2 alpha(a1, a2);
      for (const auto& [g, mm] : m.terms) {
        const int b1 = a1 - g.g1, b2 = a2 - g.g2;
        if (std::abs(b1) > L || std::abs(b2) > L) continue;
        const cxd ph = bond_phase(alpha, Vec2(b1, b2));
        const int ia = site_index(a1, a2, L), ib = site_index(b1, b2, L);
        for (int r = 0; r < 2; ++r)
          for (int c = 0; c < 2; ++c) H(2 * ia + r, 2 * ib + c) += ph * mm(r, c);
      }
    }

  Eigen::SelfAdjointEigenSolver<MatX> es(H);
  InteriorFilterReport rep;
  std::vector<double> vals;

  // Boundary-site indicator (outer two rings).
  std::vector<int> boundary_rows;
  for (int a1 = -L; a1 <= L; ++a1)
    for (int a2 = -L; a2 <= L; ++a2) {
      if (std::max(std::abs(a1), std::abs(a2)) < L - 1) continue;
      const int ia = site_index(a1, a2, L);
      boundary_rows.push_back(2 * ia);
      boundary_rows.push_back(2 * ia + 1);
    }

  // Within a near-degenerate cluster the eigenbasis is arbitrary; an
  // eigenvalue counts as interior if SOME unit combination in the cluster has
  // small boundary mass, i.e. an eigenvalue of the compressed boundary form
  // falls below the threshold.
  const int n_ev = int(es.eigenvalues().size());
  int i = 0;
  while (i < n_ev) {
    int j = i + 1;
    while (j < n_ev && es.eigenvalues()(j) - es.eigenvalues()(j - 1) < 1e-9) ++j;
    const int c = j - i;
    bool any_in_window = false;
    for (int k = i; k < j; ++k)
      if (es.eigenvalues()(k) > lo && es.eigenvalues()(k) < hi) any_in_window = true;
    if (!any_in_window) {
      i = j;
      continue;
    }
    MatX Vb(int(boundary_rows.size()), c);
    for (int k = 0; k < c; ++k)
      for (std::size_t r = 0; r < boundary_rows.size(); ++r)
        Vb(int(r), k) = es.eigenvectors()(boundary_rows[r], i + k);
    Eigen::SelfAdjointEigenSolver<MatX> esb(MatX(Vb.adjoint() * Vb));
    for (int k = 0; k < c; ++k) {
      const double ev = es.eigenvalues()(i + k);
      if (ev <= lo || ev >= hi) continue;
      const double mass = esb.eigenvalues()(std::min(k, c - 1));
      if (mass > boundary_threshold) {
        ++rep.discarded;
        continue;
      }
      rep.worst_kept_boundary_mass = std::max(rep.worst_kept_boundary_mass, mass);
      ++rep.kept;
      vals.push_back(ev);
    }
    i = j;
  }
  if (report) *report = rep;
  return make_spectrum(std::move(vals), lo, hi);
}

SpectrumSet nonconstant_field_bloch_spectrum(const HoppingSet& m, const FluxRational& flux,
                                             double kappa_eps,
                                             const std::function<Vec2(const Vec2&)>& A_per,
                                             int W, double lo, double hi, int k_grid) {
  require(W >= 1, "invalid-input", "perturbation period must be >= 1");
  const double h = flux.h();
  const int W1 = std::lcm(flux.q, W);
  const int W2 = W;
  const int cells = W1 * W2;
  require(2 * cells <= 6000, "resource", "magnetic supercell too large");
  const auto& gl = gl32();

  auto pert_line = [&](const Vec2& alpha, const Vec2& beta) -> double {
    if (kappa_eps == 0) return 0.0;
    double line = 0;
    for (int i = 0; i < 32; ++i) {
      const Vec2 x = alpha + gl.x[std::size_t(i)] * (beta - alpha);
      line += gl.w[std::size_t(i)] * A_per(x).dot(beta - alpha);
    }
    return kappa_eps * line;
  };

  auto cell_index = [&](int a1, int a2) {
    return ((a1 % W1 + W1) % W1) * W2 + ((a2 % W2 + W2) % W2);
  };

  std::vector<double> vals;
  for (int k1i = 0; k1i < k_grid; ++k1i)
    for (int k2i = 0; k2i < k_grid; ++k2i) {
      const double k1 = (two_pi / W1) * k1i / k_grid;
      const double k2 = (two_pi / W2) * k2i / k_grid;
      MatX H = MatX::Zero(2 * cells, 2 * cells);
      for (int a1 = 0; a1 < W1; ++a1)
        for (int a2 = 0; a2 < W2; ++a2)
          for (const auto& [g, mm] : m.terms) {
            // Landau-gauge constant part + periodic perturbation line integral.
            const double phase_const = -h * g.g2 * (a1 - 0.5 * g.g1);
            const double phase_pert =
                -pert_line(Vec2(a1, a2), Vec2(a1 - g.g1, a2 - g.g2));
            const cxd ph =
                std::exp(cxd(0, phase_const + phase_pert - k1 * g.g1 - k2 * g.g2));
            const int ia = cell_index(a1, a2), ib = cell_index(a1 - g.g1, a2 - g.g2);
            for (int r = 0; r < 2; ++r)
              for (int c = 0; c < 2; ++c) H(2 * ia + r, 2 * ib + c) += ph * mm(r, c);
          }
      H = 0.5 * (H + H.adjoint()).eval();
      Eigen::SelfAdjointEigenSolver<MatX> es(H, Eigen::EigenvaluesOnly);
      for (int i = 0; i < es.eigenvalues().size(); ++i) vals.push_back(es.eigenvalues()(i));
    }
  return make_spectrum(std::move(vals), lo, hi);
}

TwoBandSymbol peierls_symbol(const HoppingSet& m) {
  require(m.is_hermitian_symmetric(1e-10), "invalid-input",
          "hopping set is not Hermitian-symmetric");
  return TwoBandSymbol::from_hoppings(m);
}

double symbol_distance(const TwoBandSymbol& s1, const TwoBandSymbol& s2, int a1, int a2,
                       int grid_n) {
  // Finite-difference derivative d^{(a1,a2)} of the difference, sup over grid.
  const double h1 = two_pi / grid_n, h2 = two_pi / grid_n;
  auto diff = [&](const Vec2& th) { return Mat2(s1.matrix(th) - s2.matrix(th)); };
  double sup = 0;
  for (int i = 0; i < grid_n; ++i)
    for (int j = 0; j < grid_n; ++j) {
      const Vec2 th(two_pi * i / grid_n, two_pi * j / grid_n);
      // central differences along each axis, iterated.
      std::function<Mat2(const Vec2&, int, int)> d = [&](const Vec2& t, int o1,
                                                         int o2) -> Mat2 {
        if (o1 > 0)
          return Mat2((d(t + Vec2(h1, 0), o1 - 1, o2) - d(t - Vec2(h1, 0), o1 - 1, o2)) /
                      (2 * h1));
        if (o2 > 0)
          return Mat2((d(t + Vec2(0, h2), o1, o2 - 1) - d(t - Vec2(0, h2), o1, o2 - 1)) /
                      (2 * h2));
        return diff(t);
      };
      sup = std::max(sup, max_abs(MatX(d(th, a1, a2))));
    }
  return sup;
}

MatX gram_matrix(
    const std::function<cxd(int, const LatticeIndex&, int, const LatticeIndex&)>& overlap,
    int R) {
  const int n = 2 * R + 1;
  const int dim = 2 * n * n;
  MatX G(dim, dim);
  for (int a1 = -R; a1 <= R; ++a1)
    for (int a2 = -R; a2 <= R; ++a2)
      for (int b1 = -R; b1 <= R; ++b1)
        for (int b2 = -R; b2 <= R; ++b2) {
          const int ia = site_index(a1, a2, R), ib = site_index(b1, b2, R);
          for (int j = 0; j < 2; ++j)
            for (int k = 0; k < 2; ++k)
              G(2 * ia + j, 2 * ib + k) = overlap(j, {a1, a2}, k, {b1, b2});
        }
  require(max_abs(MatX(G - G.adjoint())) <= 1e-10, "invalid-input",
          "overlaps are not Hermitian-symmetric");
  for (int i = 0; i < dim; ++i)
    require(std::abs(G(i, i) - 1.0) <= 1e-10, "invalid-input",
            "diagonal overlaps must be exactly 1");
  return G;
}

MatX gram_matrix_from_wannier(const WannierPair& w, double eps_B0, int R) {
  // phi_{j,alpha}(x) = Lambda^eps(x, alpha) w_j(x - alpha); inner products over
  // all lattice sites reached by the supports.
  auto overlap = [&](int j, const LatticeIndex& a, int k, const LatticeIndex& b) -> cxd {
    cxd acc = 0;
    const int r = w.radius;
    for (int x1 = std::max(a.g1, b.g1) - r; x1 <= std::min(a.g1, b.g1) + r; ++x1)
      for (int x2 = std::max(a.g2, b.g2) - r; x2 <= std::min(a.g2, b.g2) + r; ++x2) {
        const Vec2 x(x1, x2);
        const VecX wa = w.value(j, x1 - a.g1, x2 - a.g2);
        const VecX wb = w.value(k, x1 - b.g1, x2 - b.g2);
        if (wa.isZero(0) || wb.isZero(0)) continue;
        const cxd ph = std::conj(magnetic_phase(x, Vec2(a.g1, a.g2), eps_B0)) *
                       magnetic_phase(x, Vec2(b.g1, b.g2), eps_B0);
        acc += ph * wa.dot(wb);
      }
    return acc;
  };
  const int n = 2 * R + 1;
  const int dim = 2 * n * n;
  MatX G(dim, dim);
  for (int a1 = -R; a1 <= R; ++a1)
    for (int a2 = -R; a2 <= R; ++a2)
      for (int b1 = -R; b1 <= R; ++b1)
        for (int b2 = -R; b2 <= R; ++b2) {
          const int ia = site_index(a1, a2, R), ib = site_index(b1, b2, R);
          for (int j = 0; j < 2; ++j)
            for (int k = 0; k < 2; ++k)
              G(2 * ia + j, 2 * ib + k) = overlap(j, {a1, a2}, k, {b1, b2});
        }
  return MatX(0.5 * (G + G.adjoint()));
}

MatX inverse_sqrt(const MatX& G) {
  Eigen::SelfAdjointEigenSolver<MatX> es(G);
  require(es.eigenvalues().minCoeff() > 1e-8, "gram-not-positive",
          "Gram matrix is (near-)singular");
  return es.eigenvectors() * es.eigenvalues().array().rsqrt().matrix().asDiagonal() *
         es.eigenvectors().adjoint();
}

DressedResult magnetic_dressed_hoppings(const OperatorHoppings& Hfiber, const WannierPair& w,
                                        double eps_B0, int R, int keep_radius) {
  const int d = w.dim;
  const int n = 2 * R + 1;
  DressedResult out;

  const MatX G = gram_matrix_from_wannier(w, eps_B0, R);
  out.gram_dev = max_abs(MatX(G - MatX::Identity(G.rows(), G.cols())));
  const MatX F = inverse_sqrt(G);
  for (int ia = 0; ia < n * n; ++ia)
    for (int ib = 0; ib < n * n; ++ib) {
      const int a1 = ia / n - R, a2 = ia % n - R, b1 = ib / n - R, b2 = ib % n - R;
      const double wgt = std::pow(
          1.0 + double(a1 - b1) * (a1 - b1) + double(a2 - b2) * (a2 - b2), 2.0);
      for (int j = 0; j < 2; ++j)
        for (int k = 0; k < 2; ++k) {
          const double dev =
              std::abs(F(2 * ia + j, 2 * ib + k) - ((ia == ib && j == k) ? 1.0 : 0.0));
          out.f_dev = std::max(out.f_dev, wgt * dev);
        }
    }

  // Extended box so translates anchored anywhere on {-R..R}^2 keep their full
  // support; this keeps the compressed matrix consistent with G.
  const int E = R + w.radius + std::max(1, Hfiber.terms.empty() ? 1 : 2);
  const int ne = 2 * E + 1;
  const int nd = ne * ne * d;
  MatX Hop = MatX::Zero(nd, nd);
  for (int a1 = -E; a1 <= E; ++a1)
    for (int a2 = -E; a2 <= E; ++a2)
      for (const auto& [g, mm] : Hfiber.terms) {
        const int b1 = a1 - g.g1, b2 = a2 - g.g2;
        if (std::abs(b1) > E || std::abs(b2) > E) continue;
        const cxd ph = magnetic_phase(Vec2(a1, a2), Vec2(b1, b2), eps_B0);
        const int ia = site_index(a1, a2, E), ib = site_index(b1, b2, E);
        Hop.block(ia * d, ib * d, d, d) += ph * mm;
      }
  Hop = 0.5 * (Hop + Hop.adjoint()).eval();

  // Raw magnetic translates as vectors on the extended box (x) C^d.
  MatX Phi0(nd, 2 * n * n);
  Phi0.setZero();
  for (int a1 = -R; a1 <= R; ++a1)
    for (int a2 = -R; a2 <= R; ++a2) {
      const int ia = site_index(a1, a2, R);
      for (int x1 = a1 - w.radius; x1 <= a1 + w.radius; ++x1)
        for (int x2 = a2 - w.radius; x2 <= a2 + w.radius; ++x2) {
          const int ix = site_index(x1, x2, E);
          const cxd ph = magnetic_phase(Vec2(x1, x2), Vec2(a1, a2), eps_B0);
          for (int j = 0; j < 2; ++j) {
            const VecX wv = w.value(j, x1 - a1, x2 - a2);
            if (wv.isZero(0)) continue;
            Phi0.block(ix * d, 2 * ia + j, d, 1) += ph * wv;
          }
        }
    }

  // Orthonormalized quasi-Wannier frame and the compressed matrix.
  const MatX Phi = Phi0 * F;
  const MatX M = Phi.adjoint() * Hop * Phi;

  // Undo the Lambda factor and measure translation covariance of the rest.
  const int ctr = site_index(0, 0, R);
  for (int g1 = -keep_radius; g1 <= keep_radius; ++g1)
    for (int g2 = -keep_radius; g2 <= keep_radius; ++g2) {
      const int ig = site_index(g1, g2, R);
      Mat2 meps;
      for (int j = 0; j < 2; ++j)
        for (int k = 0; k < 2; ++k)
          meps(j, k) = M(2 * ig + j, 2 * ctr + k) /
                       magnetic_phase(Vec2(g1, g2), Vec2(0, 0), eps_B0);
      if (max_abs(MatX(meps)) > 1e-13) out.m_eps.add(g1, g2, meps);

      // Covariance defect: the same difference vector anchored off-center.
      const int s = 1;
      if (std::abs(g1 + s) <= R && std::abs(g2 + s) <= R && std::abs(s) <= R) {
        const int ia = site_index(g1 + s, g2 + s, R), ib = site_index(s, s, R);
        for (int j = 0; j < 2; ++j)
          for (int k = 0; k < 2; ++k) {
            const cxd shifted = M(2 * ia + j, 2 * ib + k) /
                                magnetic_phase(Vec2(g1 + s, g2 + s), Vec2(s, s), eps_B0);
            out.factorization_defect =
                std::max(out.factorization_defect, std::abs(shifted - meps(j, k)));
          }
      }
    }
  return out;
}

}  // namespace diraclev
