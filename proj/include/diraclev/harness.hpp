#pragma once

#include <string>
#include <vector>

#include "diraclev/bloch.hpp"
#include "diraclev/magnetic.hpp"
#include "diraclev/oscillator.hpp"
#include "diraclev/semiclassical.hpp"
#include "diraclev/spectrum.hpp"

namespace diraclev {

struct ScenarioConfig {
  std::string scenario = "verify";
  std::string builtin = "honeycomb";   // or "harper", or empty with a file source
  std::string hoppings_file;
  std::string problem_file;
  std::vector<std::string> flux_list = {"1/89", "1/144", "1/233", "1/377"};
  std::vector<double> kappa_list = {0.01, 0.02, 0.039, 0.077, 0.152, 0.3};
  std::string kappa_flux = "1/144";
  double B0 = 1.0;
  double delta = 0;           // 0 -> default 1/8 of c * sigmaRadius
  double window_factor = 0;   // L; 0 -> mid-gap of sqrt(B0) sigma(L)
  double perturbation_amplitude = 1.0;
  double perturbation_period = 16.0;
  int mbz_grid = 3;
  int lattice_extent = 15;
  int band_grid = 48;
  int oscillator_N = 400;
  double iso_tol = 1e-8;
  unsigned seed = 1;
  std::string output_dir = "out";

  static ScenarioConfig from_json_file(const std::string& path);
  std::string to_json() const;
};

// Resolve the configured problem source to a hopping set.
HoppingSet resolve_hoppings(const ScenarioConfig& cfg);

struct SweepPoint {
  double x = 0;         // epsilon or kappa
  double distance = 0;  // windowed Hausdorff
  int points = 0;       // spectrum points in the window
};

struct VerificationReport {
  Vec2 theta0 = Vec2::Zero();
  HypothesisReport hypotheses;
  DiracLinearization lin;
  double omega = 0;
  double level_L = 0;  // window factor actually used
  std::vector<SweepPoint> eps_sweep;
  double eps_slope = 0;
  bool eps_pass = false;
  std::vector<SweepPoint> kappa_sweep;
  double kappa_slope = 0;
  bool kappa_pass = false;
  double kappa_bound_ratio = 0;  // max d / sqrt(kappa*eps): the paper-side bound check
  std::vector<std::string> notes;

  std::string to_json() const;
};

VerificationReport run_theorem_check(const ScenarioConfig& cfg);

// Dispatch a CLI subcommand; returns the process exit status.
int run_scenario(const ScenarioConfig& cfg);

}  // namespace diraclev

#include "diraclev/sections.hpp"

namespace diraclev {

// The full continuum-style pipeline on the embedded one-crossing model:
// gap opening, spectral split, global sections of both branches.
struct SectionsPipeline {
  FiberFamily family;          // ungapped embedded model
  FiberFamily gapped;
  CrossingPoint crossing;
  HypothesisReport hypotheses;
  LocalModel local;
  DiracLinearization lin;
  GapParams gap;
  ProjectorField P_minus, P_plus;
  SectionField minus, plus;            // continuous sections
  SectionField smooth_minus, smooth_plus;  // mollified (Lemma A.2) sections
  SectionField aligned_minus, aligned_plus;  // frame-aligned near the crossing
  std::function<MatX(const Vec2&)> frame_minus, frame_plus;  // Lemma A.1 inputs
  double disk_r = 1.3;
  double smooth_K = 0.7;
  double align_R = 0.0;
};

SectionsPipeline run_sections_pipeline(int band_grid, int section_grid, unsigned seed,
                                       double delta = 0, double moll_spacings = 1.0);

}  // namespace diraclev
