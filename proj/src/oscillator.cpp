#include "diraclev/oscillator.hpp"

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/KroneckerProduct>

#include "diraclev/semiclassical.hpp"

namespace diraclev {

OscillatorRep::OscillatorRep(int n) : N(n), t(n, n), p(n, n) {
  require(n >= 1, "invalid-input", "oscillator truncation must be >= 1");
  t.setZero();
  p.setZero();
  for (int m = 0; m + 1 < n; ++m) {
    const double c = std::sqrt(double(m + 1) / 2.0);
    t(m, m + 1) = c;
    t(m + 1, m) = c;
    p(m, m + 1) = cxd(0, -c);
    p(m + 1, m) = cxd(0, c);
  }
}

namespace {

double binom(int n, int k) {
  double r = 1;
  for (int i = 0; i < k; ++i) r = r * (n - i) / (i + 1);
  return r;
}

}  // namespace

MatX weyl_quantize_polynomial(const MatrixPolynomial& poly, const OscillatorRep& rep) {
  const int N = rep.N;
  require(poly.degree() <= 6, "invalid-input", "polynomial degree > 6 unsupported");
  MatX out = MatX::Zero(2 * N, 2 * N);
  // Cache powers of t and p.
  std::vector<MatX> tp(7), pp(7);
  tp[0] = MatX::Identity(N, N);
  pp[0] = MatX::Identity(N, N);
  for (int i = 1; i <= 6; ++i) {
    tp[i] = tp[i - 1] * rep.t;
    pp[i] = pp[i - 1] * rep.p;
  }
  for (const auto& [ab, coef] : poly.terms) {
    const auto [a, b] = ab;
    MatX w = MatX::Zero(N, N);
    for (int k = 0; k <= a; ++k) w += binom(a, k) * tp[k] * pp[b] * tp[a - k];
    w /= std::pow(2.0, a);
    out += Eigen::kroneckerProduct(coef, w).eval();
  }
  return out;
}

MatX build_L_operator(const DiracLinearization& lin, int N) {
  check_ellipticity(lin);  // throws if the spectrum would not be discrete
  const OscillatorRep rep(N);
  const Mat2 A = lin.f1 * Mat2::Identity() + sigma_dot(lin.v1);
  const Mat2 B = lin.f2 * Mat2::Identity() + sigma_dot(lin.v2);
  MatX L = Eigen::kroneckerProduct(A, MatX(rep.t.cast<cxd>())).eval() +
           Eigen::kroneckerProduct(B, rep.p).eval();
  return L;
}

namespace {

// Interior eigenvalues only: truncating the ladder operators manufactures
// spurious kernel vectors concentrated at the top of the Hermite basis.
std::vector<double> interior_levels(const MatX& L, int N, int n_levels,
                                    double tail_tol = 1e-8) {
  Eigen::SelfAdjointEigenSolver<MatX> es(L);
  const int tail_start = N - std::max(2, N / 8);
  std::vector<double> kept;
  for (int i = 0; i < es.eigenvalues().size(); ++i) {
    double tail = 0;
    for (int a = 0; a < 2; ++a)
      for (int n = tail_start; n < N; ++n) tail += std::norm(es.eigenvectors()(a * N + n, i));
    if (std::sqrt(tail) < tail_tol) kept.push_back(es.eigenvalues()(i));
  }
  std::sort(kept.begin(), kept.end(),
            [](double a, double b) { return std::abs(a) < std::abs(b); });
  kept.resize(std::min<std::size_t>(kept.size(), std::size_t(n_levels)));
  std::sort(kept.begin(), kept.end());
  return kept;
}

}  // namespace

SpectrumLResult spectrum_L(const DiracLinearization& lin, int n_levels, int N,
                           double conv_tol) {
  SpectrumLResult res;
  res.levels = interior_levels(build_L_operator(lin, N), N, n_levels);
  require(res.levels.size() == std::size_t(n_levels), "numerical-failure",
          "truncation too small for the requested level count");
  // Certificate against the doubled truncation: directed distance of each kept
  // level to the 2N spectrum (values only; spurious truncation modes can only
  // add points, never remove true ones).
  Eigen::SelfAdjointEigenSolver<MatX> es2(build_L_operator(lin, 2 * N),
                                          Eigen::EigenvaluesOnly);
  res.convergence_drift = 0;
  for (double x : res.levels) {
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < es2.eigenvalues().size(); ++i)
      best = std::min(best, std::abs(x - es2.eigenvalues()(i)));
    res.convergence_drift = std::max(res.convergence_drift, best);
  }
  res.converged = res.convergence_drift < conv_tol;

  res.symmetry_defect = 0;
  for (double x : res.levels) {
    double best = std::numeric_limits<double>::infinity();
    for (double y : res.levels) best = std::min(best, std::abs(x + y));
    res.symmetry_defect = std::max(res.symmetry_defect, best);
  }
  res.min_gap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < res.levels.size(); ++i)
    res.min_gap = std::min(res.min_gap, res.levels[i + 1] - res.levels[i]);
  return res;
}

std::vector<MatrixPolynomial> symbol_taylor_terms(const TwoBandSymbol& s, const Vec2& theta0,
                                                  int max_degree) {
  std::vector<MatrixPolynomial> terms(std::size_t(max_degree) + 1);
  double fact[8] = {1, 1, 2, 6, 24, 120, 720, 5040};
  if (const HoppingSet* m = s.hoppings()) {
    // Exact derivatives: d_t^a d_tau^b k(theta0) = sum (-i g1)^a (-i g2)^b e^{-i th0.g} m(g).
    for (int deg = 0; deg <= max_degree; ++deg)
      for (int a = 0; a <= deg; ++a) {
        const int b = deg - a;
        Mat2 d = Mat2::Zero();
        for (const auto& [g, mm] : m->terms) {
          const cxd ph = std::exp(cxd(0, -(theta0[0] * g.g1 + theta0[1] * g.g2)));
          d += std::pow(cxd(0, -g.g1), a) * std::pow(cxd(0, -g.g2), b) * ph * mm;
        }
        const Mat2 c = d / (fact[a] * fact[b]);
        if (max_abs(MatX(c)) > 1e-15) terms[std::size_t(deg)].add(a, b, c);
      }
    return terms;
  }
  // Finite-difference fallback on the callable, tensorized central stencils.
  const double h = 1e-2;
  auto sample = [&](int i, int j) { return s.matrix(theta0 + Vec2(i * h, j * h)); };
  // Central difference weights for derivatives 0..4 on a 9-point stencil.
  auto dweights = [&](int order) -> std::vector<std::pair<int, double>> {
    switch (order) {
      case 0: return {{0, 1.0}};
      case 1: return {{-2, 1 / 12.}, {-1, -8 / 12.}, {1, 8 / 12.}, {2, -1 / 12.}};
      case 2: return {{-2, -1 / 12.}, {-1, 16 / 12.}, {0, -30 / 12.}, {1, 16 / 12.}, {2, -1 / 12.}};
      case 3: return {{-2, -0.5}, {-1, 1.0}, {1, -1.0}, {2, 0.5}};
      case 4: return {{-2, 1.0}, {-1, -4.0}, {0, 6.0}, {1, -4.0}, {2, 1.0}};
      default: throw Error("invalid-input", "FD Taylor terms support degree <= 4");
    }
  };
  for (int deg = 0; deg <= std::min(max_degree, 4); ++deg)
    for (int a = 0; a <= deg; ++a) {
      const int b = deg - a;
      Mat2 d = Mat2::Zero();
      for (auto [i, wi] : dweights(a))
        for (auto [j, wj] : dweights(b)) d += wi * wj * sample(i, j);
      d /= std::pow(h, deg);
      const Mat2 c = d / (fact[a] * fact[b]);
      if (max_abs(MatX(c)) > 1e-12) terms[std::size_t(deg)].add(a, b, c);
    }
  return terms;
}

namespace {

// Deterministic eigenvector phase: largest-|component| entry real positive.
void fix_phase(VecX& v) {
  int imax = 0;
  double best = 0;
  for (int i = 0; i < v.size(); ++i)
    if (std::abs(v(i)) > best) {
      best = std::abs(v(i));
      imax = i;
    }
  const cxd ph = v(imax) / std::abs(v(imax));
  v /= ph;
}

}  // namespace

QuasimodeExpansion quasimode_expand(const DiracLinearization& lin,
                                    const std::vector<MatrixPolynomial>& taylor_terms,
                                    int level_index, int order_K, int N) {
  require(order_K >= 1, "invalid-input", "order must be >= 1");
  require(int(taylor_terms.size()) >= order_K + 2, "invalid-input",
          "need Taylor terms up to degree K+1");
  const MatX L = build_L_operator(lin, N);
  Eigen::SelfAdjointEigenSolver<MatX> es(L);

  // Pick the requested level among interior eigenvectors (spurious kernel
  // vectors of the truncated ladder sit at the top of the basis).
  const int tail_start = N - std::max(2, N / 8);
  auto tail_mass = [&](int i) {
    double tail = 0;
    for (int a = 0; a < 2; ++a)
      for (int n = tail_start; n < N; ++n) tail += std::norm(es.eigenvectors()(a * N + n, i));
    return std::sqrt(tail);
  };
  std::vector<std::pair<double, int>> idx;
  for (int i = 0; i < es.eigenvalues().size(); ++i)
    if (tail_mass(i) < 1e-8) idx.push_back({es.eigenvalues()(i), i});
  std::sort(idx.begin(), idx.end());
  int chosen = -1;
  if (level_index == 0) {
    double best = std::numeric_limits<double>::infinity();
    for (auto& [ev, i] : idx)
      if (std::abs(ev) < best) {
        best = std::abs(ev);
        chosen = i;
      }
  } else if (level_index > 0) {
    int count = 0;
    for (auto& [ev, i] : idx)
      if (ev > 1e-10 && ++count == level_index) {
        chosen = i;
        break;
      }
  } else {
    int count = 0;
    for (auto it = idx.rbegin(); it != idx.rend(); ++it)
      if (it->first < -1e-10 && ++count == -level_index) {
        chosen = it->second;
        break;
      }
  }
  require(chosen >= 0, "invalid-input", "requested level not present in truncation");
  const double lambda1 = es.eigenvalues()(chosen);

  // Simplicity tolerance before expanding (interior levels only).
  for (const auto& [ev, i] : idx)
    if (i != chosen)
      require(std::abs(ev - lambda1) > 1e-6, "fredholm-failure",
              "level is not simple at tolerance 1e-6");

  VecX v0 = es.eigenvectors().col(chosen);
  fix_phase(v0);

  const OscillatorRep rep(N);
  std::vector<MatX> Op(std::size_t(order_K) + 2);
  for (int l = 2; l <= order_K + 1; ++l)
    Op[std::size_t(l)] = weyl_quantize_polynomial(taylor_terms[std::size_t(l)], rep);

  // Reduced inverse of (L - lambda1) on the orthogonal complement of v0.
  const MatX shifted = L - lambda1 * MatX::Identity(2 * N, 2 * N);
  auto reduced_solve = [&](const VecX& rhs) -> VecX {
    VecX sol = VecX::Zero(2 * N);
    for (int i = 0; i < 2 * N; ++i) {
      if (i == chosen) continue;
      const VecX u = es.eigenvectors().col(i);
      sol += u * (u.dot(rhs) / (es.eigenvalues()(i) - lambda1));
    }
    return sol;
  };
  (void)shifted;

  QuasimodeExpansion out;
  out.N = N;
  out.lambda1 = lambda1;
  out.lambda.assign(std::size_t(order_K), 0.0);
  out.lambda[0] = lambda1;
  out.v.push_back(v0);

  for (int k = 1; k < order_K; ++k) {
    // rhs_k = -sum_{l=2}^{k+1} Op(l) v_{k+1-l} + sum_{l=2}^{k} lambda_l v_{k+1-l}
    VecX rhs = VecX::Zero(2 * N);
    for (int l = 2; l <= k + 1; ++l) rhs -= Op[std::size_t(l)] * out.v[std::size_t(k + 1 - l)];
    for (int l = 2; l <= k; ++l) rhs += out.lambda[std::size_t(l - 1)] * out.v[std::size_t(k + 1 - l)];
    // lambda_{k+1} from the Fredholm alternative.
    const double lam_next = -std::real(v0.dot(rhs));
    out.lambda[std::size_t(k)] = lam_next;
    rhs += lam_next * v0;
    const double solv = std::abs(v0.dot(rhs));
    out.solvability.push_back(solv);
    require(solv <= 1e-6, "fredholm-failure", "solvability residual too large");
    VecX vk = reduced_solve(rhs);
    out.v.push_back(vk);
  }

  // Tail mass: top 10% Hermite indices of each vector.
  const int tail_lo = N - std::max(1, N / 10);
  for (const VecX& w : out.v) {
    double m = 0;
    for (int a = 0; a < 2; ++a)
      for (int n = tail_lo; n < N; ++n) m += std::norm(w(a * N + n));
    out.tail_mass.push_back(std::sqrt(m));
  }
  return out;
}

Eigen::VectorXd hermite_values(int N, double x) {
  Eigen::VectorXd h(N);
  const double h0 = std::pow(pi, -0.25) * std::exp(-0.5 * x * x);
  if (N > 0) h(0) = h0;
  if (N > 1) h(1) = std::sqrt(2.0) * x * h0;
  for (int n = 1; n + 1 < N; ++n)
    h(n + 1) = std::sqrt(2.0 / (n + 1)) * x * h(n) - std::sqrt(double(n) / (n + 1)) * h(n - 1);
  return h;
}

double quasimode_residual(const QuasimodeExpansion& exp, const TwoBandSymbol& s,
                          const Vec2& theta0, double h, int k, int grid_M,
                          double half_width) {
  require(k >= 1 && k <= int(exp.lambda.size()), "invalid-input", "order k out of range");
  const int N = exp.N;
  const int M = grid_M;
  const double W = 2 * half_width;
  const double dt = W / M;

  // u^{(k-1)}(t) = h^{-1/4} sum_{l<k} h^{l/2} sum_n c_{l,n} h_n(t/sqrt(h))
  VecX u = VecX::Zero(2 * M);
  for (int i = 0; i < M; ++i) {
    const double t = -half_width + i * dt;
    const Eigen::VectorXd hv = hermite_values(N, t / std::sqrt(h));
    for (int l = 0; l < k; ++l) {
      const double scale = std::pow(h, -0.25) * std::pow(h, 0.5 * l);
      for (int a = 0; a < 2; ++a) {
        cxd acc = 0;
        for (int n = 0; n < N; ++n) acc += exp.v[std::size_t(l)](a * N + n) * hv(n);
        u(a * M + i) += scale * acc;
      }
    }
  }

  // Centered symbol k_c(T) = k(theta0 + T), quantized as Op1(k_c(t, h tau)).
  VecX opu;
  if (const HoppingSet* m = s.hoppings()) {
    HoppingSet centered;
    for (const auto& [g, mm] : m->terms)
      centered.add(g.g1, g.g2,
                   Mat2(std::exp(cxd(0, -(theta0[0] * g.g1 + theta0[1] * g.g2))) * mm));
    opu = apply_hopping_weyl(centered, h, -half_width, W, u);
  } else {
    require(M <= 1024, "invalid-input",
            "dense collocation fallback needs grid_M <= 1024");
    auto centered = [&](const Vec2& T) { return s.matrix(theta0 + T); };
    opu = weyl_collocation_matrix(centered, h, -half_width, W, M) * u;
  }
  const double lam = exp.lambda_of_h(h, k);
  const VecX r = opu - lam * u;
  return std::sqrt(dt) * r.norm();
}

}  // namespace diraclev
