#include "diraclev/harness.hpp"

#include <Eigen/Eigenvalues>
#include <filesystem>
#include <iostream>
#include <json.hpp>

#include <random>

#include "diraclev/feshbach.hpp"
#include "diraclev/io.hpp"
#include "diraclev/sections.hpp"

namespace diraclev {

using nlohmann::json;

ScenarioConfig ScenarioConfig::from_json_file(const std::string& path) {
  const json j = json::parse(read_file(path));
  ScenarioConfig c;
  c.scenario = j.value("scenario", c.scenario);
  c.builtin = j.value("builtin", std::string());
  c.hoppings_file = j.value("hoppings_file", std::string());
  c.problem_file = j.value("problem_file", std::string());
  const int sources = int(!c.builtin.empty()) + int(!c.hoppings_file.empty()) +
                      int(!c.problem_file.empty());
  require(sources == 1, "invalid-input", "config must name exactly one problem source");
  if (j.contains("flux_list"))
    c.flux_list = j.at("flux_list").get<std::vector<std::string>>();
  if (j.contains("kappa_list")) {
    c.kappa_list = j.at("kappa_list").get<std::vector<double>>();
    require(!c.kappa_list.empty(), "invalid-input", "kappa list must be nonempty");
  }
  require(!c.flux_list.empty(), "invalid-input", "flux list must be nonempty");
  c.kappa_flux = j.value("kappa_flux", c.kappa_flux);
  c.B0 = j.value("B0", c.B0);
  c.delta = j.value("delta", c.delta);
  c.window_factor = j.value("window_factor", c.window_factor);
  c.perturbation_amplitude = j.value("perturbation_amplitude", c.perturbation_amplitude);
  c.perturbation_period = j.value("perturbation_period", c.perturbation_period);
  c.mbz_grid = j.value("mbz_grid", c.mbz_grid);
  c.lattice_extent = j.value("lattice_extent", c.lattice_extent);
  c.band_grid = j.value("band_grid", c.band_grid);
  c.oscillator_N = j.value("oscillator_N", c.oscillator_N);
  c.iso_tol = j.value("iso_tol", c.iso_tol);
  c.seed = j.value("seed", c.seed);
  c.output_dir = j.value("output_dir", c.output_dir);
  for (const auto& f : c.flux_list) {
    const FluxRational fr = FluxRational::parse(f);
    const double eps = fr.h() / c.B0;
    require(eps > 0 && eps <= 1.0, "invalid-input", "epsilon values must lie in (0, 1]");
  }
  return c;
}

std::string ScenarioConfig::to_json() const {
  json j;
  j["scenario"] = scenario;
  if (!builtin.empty()) j["builtin"] = builtin;
  if (!hoppings_file.empty()) j["hoppings_file"] = hoppings_file;
  if (!problem_file.empty()) j["problem_file"] = problem_file;
  j["flux_list"] = flux_list;
  j["kappa_list"] = kappa_list;
  j["kappa_flux"] = kappa_flux;
  j["B0"] = B0;
  j["delta"] = delta;
  j["window_factor"] = window_factor;
  j["perturbation_amplitude"] = perturbation_amplitude;
  j["perturbation_period"] = perturbation_period;
  j["mbz_grid"] = mbz_grid;
  j["lattice_extent"] = lattice_extent;
  j["band_grid"] = band_grid;
  j["oscillator_N"] = oscillator_N;
  j["iso_tol"] = iso_tol;
  j["seed"] = seed;
  j["output_dir"] = output_dir;
  return j.dump(2);
}

HoppingSet resolve_hoppings(const ScenarioConfig& cfg) {
  if (cfg.builtin == "honeycomb") return honeycomb_hoppings();
  if (cfg.builtin == "harper") return harper_hoppings();
  if (!cfg.hoppings_file.empty()) return hoppings_from_json(read_file(cfg.hoppings_file));
  throw Error("invalid-input", "no hopping-set source configured");
}

namespace {

SpectrumSet scaled_L_spectrum(const SpectrumLResult& specL, double scale, double lo,
                              double hi) {
  std::vector<double> vals;
  for (double v : specL.levels) vals.push_back(scale * v);
  return make_spectrum(std::move(vals), lo, hi);
}

void dump_spectrum(const std::string& dir, const std::string& name, const SpectrumSet& s) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  write_file((fs::path(dir) / name).string(), spectrum_to_csv(s));
}

}  // namespace

VerificationReport run_theorem_check(const ScenarioConfig& cfg) {
  VerificationReport rep;
  const HoppingSet hops = resolve_hoppings(cfg);
  const TwoBandSymbol symbol = peierls_symbol(hops);

  // Bands, crossing, hypotheses on the effective symbol.
  const BandGrid bands = compute_bands(fiber_family(symbol), cfg.band_grid, 2);
  const CrossingPoint crossing = locate_crossing(bands, 0);
  rep.theta0 = crossing.theta0;
  rep.hypotheses = verify_hypotheses(bands, crossing);

  rep.lin = linearize_at_crossing(symbol, crossing.theta0);
  check_ellipticity(rep.lin);
  rep.omega = rep.lin.omega();

  // sigma(L) with a convergence certificate, then the mid-gap window factor.
  const SpectrumLResult specL = spectrum_L(rep.lin, 24, cfg.oscillator_N);
  if (!specL.converged) rep.notes.push_back("oscillator truncation not converged");
  std::vector<double> positive;
  for (double v : specL.levels)
    if (v > 1e-9) positive.push_back(v);
  std::sort(positive.begin(), positive.end());
  require(positive.size() >= 2, "invalid-L", "need two positive levels for the mid-gap L");
  double L = cfg.window_factor;
  if (L == 0) L = std::sqrt(cfg.B0) * 0.5 * (positive[0] + positive[1]);
  // L must not sit inside a cluster of sqrt(B0) sigma(L).
  for (double v : specL.levels)
    require(std::abs(std::sqrt(cfg.B0) * v - L) > 1e-6, "invalid-L",
            "window factor collides with sqrt(B0) sigma(L)");
  rep.level_L = L;

  // Main sweep: windowed Hausdorff distance vs epsilon.
  std::vector<double> xs, ys;
  for (const auto& fstr : cfg.flux_list) {
    const FluxRational flux = FluxRational::parse(fstr);
    const double h = flux.h();
    const double eps = h / cfg.B0;
    const double wlo = -L * std::sqrt(eps), whi = L * std::sqrt(eps);
    const SpectrumSet mag = hofstadter_spectrum(hops, flux, cfg.mbz_grid, wlo, whi);
    const SpectrumSet ref = scaled_L_spectrum(specL, std::sqrt(h), wlo, whi);
    const auto hr = hausdorff_full(mag, ref);
    SweepPoint pt;
    pt.x = eps;
    pt.distance = hr.distance;
    pt.points = int(mag.size());
    rep.eps_sweep.push_back(pt);
    xs.push_back(eps);
    ys.push_back(std::max(hr.distance, 1e-16));
    dump_spectrum(cfg.output_dir, "magnetic_" + std::to_string(flux.q) + ".csv", mag);
    dump_spectrum(cfg.output_dir, "landau_" + std::to_string(flux.q) + ".csv", ref);
  }
  rep.eps_slope = loglog_slope(xs, ys);
  rep.eps_pass = rep.eps_slope >= 0.9;

  // Nonconstant-field sweep at fixed epsilon. The sinusoidal perturbation is
  // lattice-periodic, so the exact Bloch supercell route applies; its vector
  // potential is assembled mode by mode (curl of each term gives the cosine).
  const FluxRational kflux = FluxRational::parse(cfg.kappa_flux);
  const double eps_k = kflux.h() / cfg.B0;
  const double wlo = -L * std::sqrt(eps_k), whi = L * std::sqrt(eps_k);
  const int W = int(std::lround(cfg.perturbation_period));
  const double amp = cfg.perturbation_amplitude;
  const double g = two_pi / W;
  auto A_pert = [amp, g](const Vec2& x) -> Vec2 {
    // B(x) = amp cos(g x1) cos(g x2)
    //      = (amp/2)[cos(g(x1+x2)) + cos(g(x1-x2))]
    const double sp = std::sin(g * (x[0] + x[1])), sm = std::sin(g * (x[0] - x[1]));
    return (amp / (4 * g)) * Vec2(-sp + sm, sp + sm);
  };
  const SpectrumSet base =
      nonconstant_field_bloch_spectrum(hops, kflux, 0.0, A_pert, W, wlo, whi);
  dump_spectrum(cfg.output_dir, "kappa_base.csv", base);

  std::vector<double> kx, ky;
  double bound_ratio = 0;
  for (double kappa : cfg.kappa_list) {
    const SpectrumSet pert = nonconstant_field_bloch_spectrum(
        hops, kflux, kappa * eps_k, A_pert, W, wlo, whi);
    const auto hr = hausdorff_full(base, pert);
    SweepPoint pt;
    pt.x = kappa;
    pt.distance = hr.distance;
    pt.points = int(pert.size());
    rep.kappa_sweep.push_back(pt);
    kx.push_back(kappa);
    ky.push_back(std::max(hr.distance, 1e-16));
    bound_ratio = std::max(bound_ratio, hr.distance / std::sqrt(kappa * eps_k));
    dump_spectrum(cfg.output_dir,
                  "kappa_" + std::to_string(int(std::lround(1000 * kappa))) + ".csv", pert);
  }
  rep.kappa_slope = loglog_slope(kx, ky);
  rep.kappa_pass = std::abs(rep.kappa_slope - 0.5) <= 0.1;
  rep.kappa_bound_ratio = bound_ratio;

  write_file(std::filesystem::path(cfg.output_dir) / "report.json", rep.to_json());
  return rep;
}

std::string VerificationReport::to_json() const {
  json j;
  j["theta0"] = {theta0[0], theta0[1]};
  j["hypotheses"] = {{"c_lower", hypotheses.c_lower},
                     {"c_upper", hypotheses.c_upper},
                     {"hessian_eigenvalues",
                      {hypotheses.hessian_eigenvalues[0], hypotheses.hessian_eigenvalues[1]}},
                     {"a0", hypotheses.a0},
                     {"a", hypotheses.a},
                     {"rho", hypotheses.rho},
                     {"pass_h1", hypotheses.pass_h1},
                     {"pass_h2", hypotheses.pass_h2},
                     {"k0_warning", hypotheses.k0_warning}};
  j["omega"] = omega;
  j["window_factor"] = level_L;
  auto sweep_json = [](const std::vector<SweepPoint>& s) {
    json arr = json::array();
    for (const auto& p : s)
      arr.push_back({{"x", p.x}, {"distance", p.distance}, {"points", p.points}});
    return arr;
  };
  j["eps_sweep"] = sweep_json(eps_sweep);
  j["eps_slope"] = eps_slope;
  j["eps_pass"] = eps_pass;
  j["kappa_sweep"] = sweep_json(kappa_sweep);
  j["kappa_slope"] = kappa_slope;
  j["kappa_pass"] = kappa_pass;
  j["kappa_bound_ratio"] = kappa_bound_ratio;
  j["notes"] = notes;
  return j.dump(2);
}

SectionsPipeline run_sections_pipeline(int band_grid, int section_grid, unsigned seed,
                                       double delta, double moll_spacings) {
  SectionsPipeline pipe;

  // Honeycomb symbol with the second Dirac point gapped away, so the global
  // hypotheses (unique crossing, isolated window) hold on the torus.
  const TwoBandSymbol honey = peierls_symbol(honeycomb_hoppings());
  const BandGrid g2 = compute_bands(fiber_family(honey), band_grid, 2);
  const CrossingPoint cp2 = locate_crossing(g2, 0);
  const DiracLinearization lin2 = linearize_at_crossing(honey, cp2.theta0);
  OneCrossingParams oc;
  oc.d0 = 0.5;
  oc.c_lower = 0.9;
  oc.kept = -1;
  const TwoBandSymbol keep1 =
      one_crossing_symbol(honey, {Vec2(-cp2.theta0)}, {lin2.v3}, oc);

  pipe.family = embed_symbol(keep1, {-6.0, -4.0}, {4.0, 6.0}, 0.35, seed);
  const BandGrid bands = compute_bands(pipe.family, band_grid, pipe.family.dim);
  pipe.crossing = locate_crossing(bands, pipe.family.k0);
  pipe.hypotheses = verify_hypotheses(bands, pipe.crossing);
  pipe.local = build_local_model(bands, pipe.crossing);
  pipe.lin = linearize_at_crossing(pipe.local.symbol, pipe.crossing.theta0);

  pipe.gap.c_lower = pipe.hypotheses.c_lower;
  pipe.gap.delta = delta > 0 ? delta : pipe.gap.c_lower * pipe.crossing.sigma_radius / 8.0;
  pipe.gapped = open_gap_fiber(pipe.family, pipe.local, pipe.lin, pipe.gap);

  Grid2 grid;
  grid.n = section_grid;
  grid.origin = pipe.crossing.theta0 - Vec2(pi, pi);
  auto split = split_projectors(pipe.gapped, grid, pipe.crossing.crossing_energy);
  pipe.P_minus = split.first;
  pipe.P_plus = split.second;

  // Local frames inside the disk: the gapped rank-1 crossing bands extended by
  // ray transport, stacked with the transported remote-band frames.
  const int d = pipe.family.dim, k0 = pipe.family.k0;
  auto Hg = pipe.gapped.H;
  auto band_proj = [Hg](int index) {
    return [Hg, index](const Vec2& th) -> MatX {
      Eigen::SelfAdjointEigenSolver<MatX> es(Hg(th));
      return MatX(es.eigenvectors().col(index) * es.eigenvectors().col(index).adjoint());
    };
  };
  auto range_proj = [Hg](int from, int count) {
    return [Hg, from, count](const Vec2& th) -> MatX {
      Eigen::SelfAdjointEigenSolver<MatX> es(Hg(th));
      const MatX V = es.eigenvectors().middleCols(from, count);
      return MatX(V * V.adjoint());
    };
  };
  Eigen::SelfAdjointEigenSolver<MatX> es0(Hg(pipe.crossing.theta0));
  const MatX vec0 = es0.eigenvectors();

  auto lower_line = ray_transported_frame(band_proj(k0), pipe.crossing.theta0,
                                          MatX(vec0.col(k0)));
  auto below_frame = ray_transported_frame(range_proj(0, k0), pipe.crossing.theta0,
                                           MatX(vec0.leftCols(k0)));
  auto upper_line = ray_transported_frame(band_proj(k0 + 1), pipe.crossing.theta0,
                                          MatX(vec0.col(k0 + 1)));
  auto above_frame = ray_transported_frame(range_proj(k0 + 2, d - k0 - 2),
                                           pipe.crossing.theta0,
                                           MatX(vec0.rightCols(d - k0 - 2)));
  pipe.frame_minus = stack_frames({lower_line, below_frame});
  pipe.frame_plus = stack_frames({upper_line, above_frame});

  SectionBuildParams sbp;
  sbp.disk_r = pipe.disk_r;
  // Wider gluing annulus than the bare default: the column homotopy then
  // rotates slowly enough for the Lemma A.2 mollifier to keep its norm.
  sbp.eps_blend = 4.0 * (two_pi / section_grid);
  pipe.minus = build_global_section(pipe.P_minus, pipe.frame_minus, pipe.crossing.theta0, sbp);
  pipe.plus = build_global_section(pipe.P_plus, pipe.frame_plus, pipe.crossing.theta0, sbp);

  // Mollify outside the disk, then rotate the pair onto the local frame so
  // the quasi-band symbol coincides with M_I near the crossing.
  if (std::getenv("DIRACLEV_DEBUG_NOSMOOTH")) {
    pipe.smooth_minus = pipe.minus;
    pipe.smooth_plus = pipe.plus;
    pipe.align_R = 0.32;
    auto aligned0 = align_sections_with_frame(pipe.smooth_minus, pipe.smooth_plus,
                                              pipe.local.frame, pipe.crossing.theta0,
                                              pipe.align_R);
    pipe.aligned_minus = aligned0.first;
    pipe.aligned_plus = aligned0.second;
    return pipe;
  }
  const double eps_moll = moll_spacings * pipe.minus.grid.spacing();
  pipe.smooth_minus = smooth_section(pipe.minus, pipe.P_minus, pipe.crossing.theta0,
                                     pipe.disk_r, pipe.smooth_K, eps_moll);
  pipe.smooth_plus = smooth_section(pipe.plus, pipe.P_plus, pipe.crossing.theta0,
                                    pipe.disk_r, pipe.smooth_K, eps_moll);
  pipe.align_R = 0.32;
  auto aligned = align_sections_with_frame(pipe.smooth_minus, pipe.smooth_plus,
                                           pipe.local.frame, pipe.crossing.theta0,
                                           pipe.align_R);
  pipe.aligned_minus = aligned.first;
  pipe.aligned_plus = aligned.second;
  return pipe;
}

int run_scenario(const ScenarioConfig& cfg) {
  namespace fs = std::filesystem;
  fs::create_directories(cfg.output_dir);
  try {
    if (cfg.scenario == "bands") {
      BandGrid g;
      if (!cfg.problem_file.empty()) {
        const BlochProblem p = bloch_problem_from_json(read_file(cfg.problem_file));
        g = compute_bands(p, cfg.band_grid, std::min(8, p.fiber_dim()));
      } else {
        g = compute_bands(fiber_family(peierls_symbol(resolve_hoppings(cfg))), cfg.band_grid,
                          2);
      }
      write_file(fs::path(cfg.output_dir) / "bands.csv", bands_to_csv(g));
      std::cout << "bands: " << g.grid_n << "x" << g.grid_n << " grid, " << g.bands
                << " bands -> " << (fs::path(cfg.output_dir) / "bands.csv").string() << "\n";
      return 0;
    }
    if (cfg.scenario == "crossing") {
      const BandGrid g = compute_bands(fiber_family(peierls_symbol(resolve_hoppings(cfg))),
                                       cfg.band_grid, 2);
      const CrossingPoint cp = locate_crossing(g, 0);
      const HypothesisReport hr = verify_hypotheses(g, cp);
      json out;
      out["theta0"] = {cp.theta0[0], cp.theta0[1]};
      out["residual_gap"] = cp.residual_gap;
      out["a"] = hr.a;
      out["a0"] = hr.a0;
      out["c_lower"] = hr.c_lower;
      out["c_upper"] = hr.c_upper;
      out["pass_h2"] = hr.pass_h2;
      write_file(fs::path(cfg.output_dir) / "crossing.json", out.dump(2));
      std::cout << out.dump(2) << "\n";
      return 0;
    }
    if (cfg.scenario == "effmodel") {
      const TwoBandSymbol s = peierls_symbol(resolve_hoppings(cfg));
      const BandGrid g = compute_bands(fiber_family(s), cfg.band_grid, 2);
      const CrossingPoint cp = locate_crossing(g, 0);
      const DiracLinearization lin = linearize_at_crossing(s, cp.theta0);
      const EllipticityReport er = check_ellipticity(lin);
      json out;
      out["f"] = {lin.f1, lin.f2};
      out["v1"] = {lin.v1[0], lin.v1[1], lin.v1[2]};
      out["v2"] = {lin.v2[0], lin.v2[1], lin.v2[2]};
      out["v3"] = {lin.v3[0], lin.v3[1], lin.v3[2]};
      out["a0"] = lin.a0;
      out["mu"] = lin.mu;
      out["omega"] = lin.omega();
      out["worst_margin"] = er.worst_margin;
      out["a"] = er.a;
      write_file(fs::path(cfg.output_dir) / "effmodel.json", out.dump(2));
      std::cout << out.dump(2) << "\n";
      return 0;
    }
    if (cfg.scenario == "hofstadter") {
      const HoppingSet hops = resolve_hoppings(cfg);
      for (const auto& fstr : cfg.flux_list) {
        const FluxRational flux = FluxRational::parse(fstr);
        const SpectrumSet s = hofstadter_spectrum(hops, flux, cfg.mbz_grid, -1e9, 1e9);
        dump_spectrum(cfg.output_dir, "hofstadter_" + std::to_string(flux.p) + "_" +
                                          std::to_string(flux.q) + ".csv",
                      s);
        std::cout << "flux " << fstr << ": " << s.size() << " eigenvalues\n";
      }
      return 0;
    }
    if (cfg.scenario == "semiclassical") {
      const HoppingSet hops = resolve_hoppings(cfg);
      const FluxRational flux = FluxRational::parse(cfg.flux_list.front());
      const IsospectralReport ir =
          cross_check_isospectral(hops, flux, -1e9, 1e9, cfg.mbz_grid, cfg.iso_tol);
      dump_spectrum(cfg.output_dir, "route_2d.csv", ir.two_d);
      dump_spectrum(cfg.output_dir, "route_1d.csv", ir.one_d);
      std::cout << "isospectrality distance: " << ir.distance << "\n";
      return 0;
    }
    if (cfg.scenario == "landau") {
      const TwoBandSymbol s = peierls_symbol(resolve_hoppings(cfg));
      const BandGrid g = compute_bands(fiber_family(s), cfg.band_grid, 2);
      const CrossingPoint cp = locate_crossing(g, 0);
      const DiracLinearization lin = linearize_at_crossing(s, cp.theta0);
      const SpectrumLResult sl = spectrum_L(lin, 21, cfg.oscillator_N);
      SpectrumSet out(std::vector<double>(sl.levels), -1e9, 1e9);
      dump_spectrum(cfg.output_dir, "sigma_L.csv", out);
      std::cout << "sigma(L): drift " << sl.convergence_drift << ", symmetry "
                << sl.symmetry_defect << "\n";
      return 0;
    }
    if (cfg.scenario == "sections") {
      const SectionsPipeline pipe = run_sections_pipeline(cfg.band_grid, 64, cfg.seed,
                                                          cfg.delta);
      write_file(fs::path(cfg.output_dir) / "section_minus.bin",
                 section_to_binary(pipe.minus));
      write_file(fs::path(cfg.output_dir) / "section_plus.bin",
                 section_to_binary(pipe.plus));
      write_file(fs::path(cfg.output_dir) / "projector_minus.bin",
                 projector_to_binary(pipe.P_minus));
      std::cout << "sections written to " << cfg.output_dir << "\n";
      return 0;
    }
    if (cfg.scenario == "feshbach-suite") {
      std::mt19937_64 rng(cfg.seed);
      int violations = 0;
      double worst = 0;
      for (int t = 0; t < 200; ++t) {
        const AdmissibleTriple tr = random_admissible(60, 6, -1.0, 1.0, rng);
        try {
          const auto r = spectral_distance_bound(tr, -0.2, 0.2);
          worst = std::max(worst, r.worst_ratio);
        } catch (const Error&) {
          ++violations;
        }
      }
      std::cout << "feshbach-suite: " << violations << " violations, worst ratio " << worst
                << "\n";
      return violations == 0 ? 0 : 1;
    }
    if (cfg.scenario == "verify") {
      const VerificationReport rep = run_theorem_check(cfg);
      std::cout << rep.to_json() << "\n";
      return (rep.eps_pass && rep.kappa_pass) ? 0 : 1;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  std::cerr << "unknown scenario: " << cfg.scenario << "\n";
  return 2;
}

}  // namespace diraclev
