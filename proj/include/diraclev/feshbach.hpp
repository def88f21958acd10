#pragma once

#include <random>

#include "diraclev/common.hpp"

namespace diraclev {

// Admissible triple (H, Pi, I): H Hermitian, Pi an orthogonal projector, and
// the open interval I inside the resolvent set of the compression of H to
// Ran(Pi^perp).
struct AdmissibleTriple {
  MatX H;
  MatX Pi;
  double lo = 0, hi = 0;   // I = (lo, hi), 0 in the interior
  double margin = 0;       // distance of sigma(Pi^perp H Pi^perp) to I
  MatX Rperp0;             // R_perp(0), extended by 0 on Ran(Pi)

  double lambda_I() const { return std::min(-lo, hi); }
};

AdmissibleTriple check_admissible(const MatX& H, const MatX& Pi, double lo, double hi);

// R_perp(e) = inverse of Pi^perp (H - e) Pi^perp on Ran(Pi^perp), extended by zero.
MatX complement_resolvent(const AdmissibleTriple& t, double e);

// Y = Pi + Pi H Pi^perp R_perp(0)^2 Pi^perp H Pi
MatX dressing_Y(const AdmissibleTriple& t);

// H~ = Y^{-1/2} (Pi H Pi - Pi H Pi^perp R_perp(0) Pi^perp H Pi) Y^{-1/2},
// with Y^{-1/2} computed on Ran(Pi) (pseudo-inverse off it).
MatX dressed_hamiltonian(const AdmissibleTriple& t);

// S(e) = Pi (H - e) Pi - Pi H Pi^perp R_perp(e) Pi^perp H Pi
MatX schur_complement(const AdmissibleTriple& t, double e);

struct SpectralDistanceReport {
  double bound = 0;          // ||H Pi||^2 (l_I'/Lambda_I)^2 / d_I'
  double observed = 0;       // max of the two directed sups over I'
  double worst_ratio = 0;    // observed / bound
  bool verified = false;
};

// Two-sided spectral-distance estimate over I' = [iplo, iphi] (subset of I).
SpectralDistanceReport spectral_distance_bound(const AdmissibleTriple& t, double iplo,
                                               double iphi);

// Random admissible instance: block-diagonal skeleton with the complement
// spectrum pushed outside I, plus bounded coupling.
AdmissibleTriple random_admissible(int n, int rank, double lo, double hi,
                                   std::mt19937_64& rng);

// Square root / inverse square root of a Hermitian positive matrix on the
// range of `onto` (pseudo-inverse semantics off it); pass identity for full.
MatX hermitian_inverse_sqrt(const MatX& A, const MatX& onto, double floor = 1e-12);

}  // namespace diraclev
