#include "diraclev/feshbach.hpp"

#include <Eigen/Eigenvalues>

namespace diraclev {

namespace {

// Orthonormal basis of Ran(P) for an orthogonal projector P (columns).
MatX basis_of_range(const MatX& P) {
  Eigen::SelfAdjointEigenSolver<MatX> es(P);
  const int n = int(P.rows());
  int rank = 0;
  for (int i = 0; i < n; ++i)
    if (es.eigenvalues()(i) > 0.5) ++rank;
  MatX B(n, rank);
  int c = 0;
  for (int i = 0; i < n; ++i)
    if (es.eigenvalues()(i) > 0.5) B.col(c++) = es.eigenvectors().col(i);
  return B;
}

// Inverse of Pi^perp (H - e) Pi^perp on Ran(Pi^perp), extended by 0.
MatX resolvent_on_complement(const MatX& H, const MatX& Pi, double e) {
  const int n = int(H.rows());
  const MatX Q = MatX::Identity(n, n) - Pi;
  const MatX B = basis_of_range(Q);
  const MatX comp = B.adjoint() * H * B -
                    e * MatX::Identity(B.cols(), B.cols());
  return B * comp.inverse() * B.adjoint();
}

std::vector<double> spectrum_on_range(const MatX& A, const MatX& onto) {
  const MatX B = basis_of_range(onto);
  Eigen::SelfAdjointEigenSolver<MatX> es(MatX(B.adjoint() * A * B));
  std::vector<double> out(es.eigenvalues().data(),
                          es.eigenvalues().data() + es.eigenvalues().size());
  std::sort(out.begin(), out.end());
  return out;
}

double dist_to_set(double e, const std::vector<double>& s) {
  double d = std::numeric_limits<double>::infinity();
  for (double x : s) d = std::min(d, std::abs(e - x));
  return d;
}

}  // namespace

MatX hermitian_inverse_sqrt(const MatX& A, const MatX& onto, double floor) {
  const MatX B = basis_of_range(onto);
  Eigen::SelfAdjointEigenSolver<MatX> es(MatX(B.adjoint() * A * B));
  require(es.eigenvalues().minCoeff() > floor, "gram-not-positive",
          "matrix not positive definite on the requested range");
  const MatX core = es.eigenvectors() *
                    es.eigenvalues().array().rsqrt().matrix().asDiagonal() *
                    es.eigenvectors().adjoint();
  return B * core * B.adjoint();
}

AdmissibleTriple check_admissible(const MatX& H, const MatX& Pi, double lo, double hi) {
  require(H.rows() == H.cols() && Pi.rows() == Pi.cols() && H.rows() == Pi.rows(),
          "invalid-input", "dimension mismatch");
  require(max_abs(MatX(H - H.adjoint())) <= 1e-12 * std::max(1.0, max_abs(H)),
          "invalid-input", "H is not Hermitian");
  require(max_abs(MatX(Pi * Pi - Pi)) <= 1e-12 && max_abs(MatX(Pi - Pi.adjoint())) <= 1e-12,
          "invalid-input", "Pi is not an orthogonal projector");
  require(lo < 0 && 0 < hi, "invalid-input", "interval must contain 0 in its interior");

  const int n = int(H.rows());
  const MatX Q = MatX::Identity(n, n) - Pi;
  const std::vector<double> comp_spec = spectrum_on_range(H, Q);
  double margin = std::numeric_limits<double>::infinity();
  for (double ev : comp_spec) {
    if (ev > lo && ev < hi)
      throw Error("not-admissible", "complement eigenvalue " + std::to_string(ev) +
                                        " lies inside the interval");
    margin = std::min(margin, std::min(std::abs(ev - lo), std::abs(ev - hi)));
  }

  AdmissibleTriple t;
  t.H = H;
  t.Pi = Pi;
  t.lo = lo;
  t.hi = hi;
  t.margin = margin;
  t.Rperp0 = resolvent_on_complement(H, Pi, 0.0);
  return t;
}

MatX complement_resolvent(const AdmissibleTriple& t, double e) {
  require(e > t.lo && e < t.hi, "domain-error", "e outside the admissible interval");
  return resolvent_on_complement(t.H, t.Pi, e);
}

MatX dressing_Y(const AdmissibleTriple& t) {
  return t.Pi + t.Pi * t.H * t.Rperp0 * t.Rperp0 * t.H * t.Pi;
}

MatX dressed_hamiltonian(const AdmissibleTriple& t) {
  const MatX Y = dressing_Y(t);
  const MatX Ym = hermitian_inverse_sqrt(Y, t.Pi);
  const MatX core = t.Pi * t.H * t.Pi - t.Pi * t.H * t.Rperp0 * t.H * t.Pi;
  return Ym * core * Ym;
}

MatX schur_complement(const AdmissibleTriple& t, double e) {
  const MatX Re = complement_resolvent(t, e);
  return t.Pi * (t.H - e * MatX::Identity(t.H.rows(), t.H.cols())) * t.Pi -
         t.Pi * t.H * Re * t.H * t.Pi;
}

SpectralDistanceReport spectral_distance_bound(const AdmissibleTriple& t, double iplo,
                                               double iphi) {
  require(iplo < 0 && 0 < iphi && iplo > t.lo && iphi < t.hi, "invalid-input",
          "I' must contain 0 and be contained in I");
  SpectralDistanceReport rep;
  const double ell = std::max(std::abs(iplo), std::abs(iphi));
  const double d_ip = std::min(iplo - t.lo, t.hi - iphi);
  const double hpi_norm = MatX(t.H * t.Pi).operatorNorm();
  const double lam = t.lambda_I();
  rep.bound = hpi_norm * hpi_norm * (ell / lam) * (ell / lam) / d_ip;

  Eigen::SelfAdjointEigenSolver<MatX> esH(t.H);
  std::vector<double> spec_h(esH.eigenvalues().data(),
                             esH.eigenvalues().data() + esH.eigenvalues().size());
  const std::vector<double> spec_ht = spectrum_on_range(dressed_hamiltonian(t), t.Pi);

  double observed = 0.0;
  for (double e : spec_h)
    if (e >= iplo && e <= iphi) observed = std::max(observed, dist_to_set(e, spec_ht));
  for (double e : spec_ht)
    if (e >= iplo && e <= iphi) observed = std::max(observed, dist_to_set(e, spec_h));

  rep.observed = observed;
  rep.worst_ratio = rep.bound > 0 ? observed / rep.bound : 0.0;
  rep.verified = observed <= rep.bound * (1 + 1e-9) + 1e-14;
  if (!rep.verified)
    throw Error("bound-violated", "observed " + std::to_string(observed) + " exceeds bound " +
                                      std::to_string(rep.bound));
  return rep;
}

AdmissibleTriple random_admissible(int n, int rank, double lo, double hi,
                                   std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto randn_mat = [&](int r, int c) {
    MatX m(r, c);
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < c; ++j) m(i, j) = cxd(gauss(rng), gauss(rng));
    return m;
  };

  Eigen::HouseholderQR<MatX> qr(randn_mat(n, rank));
  const MatX Bp = qr.householderQ() * MatX::Identity(n, rank);
  const MatX Pi = Bp * Bp.adjoint();
  const MatX Q = MatX::Identity(n, n) - Pi;
  const MatX Bq = basis_of_range(Q);

  // Arbitrary Hermitian block on Ran(Pi).
  const MatX Ap = randn_mat(rank, rank);
  const MatX Hp = 0.5 * (Ap + Ap.adjoint());

  // Complement block with spectrum pushed outside (lo, hi).
  const int m = n - rank;
  const MatX Aq = randn_mat(m, m);
  Eigen::SelfAdjointEigenSolver<MatX> es(MatX(0.5 * (Aq + Aq.adjoint())));
  std::uniform_real_distribution<double> push(0.5, 2.0);
  Eigen::VectorXd evs = es.eigenvalues();
  for (int i = 0; i < m; ++i)
    evs(i) = (evs(i) >= 0) ? hi + evs(i) + push(rng) : lo + evs(i) - push(rng);
  const MatX Hq = es.eigenvectors() * evs.asDiagonal() * es.eigenvectors().adjoint();

  // Bounded off-diagonal coupling; admissibility is preserved exactly because
  // the compressed complement block is unchanged by Pi-Q cross terms.
  const MatX C = randn_mat(rank, m);
  MatX H = Bp * Hp * Bp.adjoint() + Bq * Hq * Bq.adjoint() +
           Bp * C * Bq.adjoint() + Bq * C.adjoint() * Bp.adjoint();
  H = 0.5 * (H + H.adjoint()).eval();
  return check_admissible(H, Pi, lo, hi);
}

}  // namespace diraclev
