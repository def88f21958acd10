#pragma once

#include <algorithm>
#include <limits>
#include <optional>
#include <vector>

#include "diraclev/common.hpp"

namespace diraclev {

// Finite sorted spectrum restricted to a window (a, b).
struct SpectrumSet {
  std::vector<double> values;  // sorted ascending
  double window_lo = -std::numeric_limits<double>::infinity();
  double window_hi = std::numeric_limits<double>::infinity();

  SpectrumSet() = default;
  SpectrumSet(std::vector<double> v, double lo, double hi) : window_lo(lo), window_hi(hi) {
    std::sort(v.begin(), v.end());
    for (double x : v)
      if (x > lo && x < hi) values.push_back(x);
  }

  bool empty() const { return values.empty(); }
  std::size_t size() const { return values.size(); }
};

inline SpectrumSet make_spectrum(std::vector<double> v, double lo, double hi) {
  return SpectrumSet(std::move(v), lo, hi);
}

// Directed sup-inf distance by a single merge pass over the sorted lists.
inline double directed_hausdorff(const std::vector<double>& a, const std::vector<double>& b) {
  double worst = 0.0;
  std::size_t j = 0;
  for (double x : a) {
    while (j + 1 < b.size() && b[j + 1] < x) ++j;
    double d = std::abs(b[j] - x);
    if (j + 1 < b.size()) d = std::min(d, std::abs(b[j + 1] - x));
    worst = std::max(worst, d);
  }
  return worst;
}

struct HausdorffResult {
  double distance = 0.0;
  bool empty_mismatch = false;  // one side empty, the other not
  bool both_empty = false;
};

inline HausdorffResult hausdorff_full(const SpectrumSet& A, const SpectrumSet& B) {
  HausdorffResult r;
  if (A.empty() && B.empty()) {
    r.both_empty = true;
    r.distance = 0.0;
    return r;
  }
  if (A.empty() || B.empty()) {
    r.empty_mismatch = true;
    r.distance = std::numeric_limits<double>::infinity();
    return r;
  }
  r.distance = std::max(directed_hausdorff(A.values, B.values),
                        directed_hausdorff(B.values, A.values));
  return r;
}

inline double hausdorff(const SpectrumSet& A, const SpectrumSet& B) {
  return hausdorff_full(A, B).distance;
}

// Least-squares slope of log(y) against log(x).
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  require(x.size() == y.size() && x.size() >= 2, "invalid-input", "need >= 2 points for a fit");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = double(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace diraclev
