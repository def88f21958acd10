#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>

#include "diraclev/harness.hpp"
#include "diraclev/io.hpp"

using namespace diraclev;

TEST_CASE("hopping set JSON roundtrip") {
  HoppingSet m = honeycomb_hoppings();
  m.add_with_conjugate(2, -1, Mat2((Mat2() << cxd(0.1, 0.2), cxd(0, -0.3),  //
                                    cxd(0.4, 0), cxd(-0.5, 0.1))
                                       .finished()));
  const HoppingSet back = hoppings_from_json(hoppings_to_json(m));
  for (const auto& [g, mm] : m.terms)
    CHECK(max_abs(MatX(back.at(g.g1, g.g2) - mm)) < 1e-15);
}

TEST_CASE("symbol JSON: hoppings and pauli_grid forms") {
  const TwoBandSymbol s = peierls_symbol(honeycomb_hoppings());
  const TwoBandSymbol s1 = symbol_from_json(symbol_to_json(s));
  CHECK(max_abs(MatX(s1.matrix(Vec2(0.3, -1.2)) - s.matrix(Vec2(0.3, -1.2)))) < 1e-12);

  const std::string grid_json = symbol_to_json(s, 16);
  const TwoBandSymbol s2 = symbol_from_json(grid_json);
  CHECK(max_abs(MatX(s2.matrix(Vec2(0.3, -1.2)) - s.matrix(Vec2(0.3, -1.2)))) < 1e-10);
}

TEST_CASE("Bloch problem JSON roundtrip and validation") {
  BlochProblem p;
  p.lattice = LatticeSpec::from_basis({1.0, 0.0}, {0.5, std::sqrt(3.0) / 2});
  p.truncation = 3;
  p.potential = {{{1, 0}, cxd(0.5, 0.25)}, {{-1, 0}, cxd(0.5, -0.25)}};
  const BlochProblem q = bloch_problem_from_json(bloch_problem_to_json(p));
  CHECK((q.lattice.a2 - p.lattice.a2).norm() < 1e-15);
  CHECK(q.truncation == 3);
  REQUIRE(q.potential.size() == 2);
  CHECK(std::abs(q.potential[0].second - cxd(0.5, 0.25)) < 1e-15);
}

TEST_CASE("spectrum CSV roundtrip") {
  SpectrumSet s({0.5, -0.25, 0.125}, -1.0, 1.0);
  const SpectrumSet back = spectrum_from_csv(spectrum_to_csv(s));
  REQUIRE(back.size() == s.size());
  for (std::size_t i = 0; i < s.size(); ++i) CHECK(back.values[i] == s.values[i]);
  CHECK(back.window_lo == -1.0);
  CHECK(back.window_hi == 1.0);
}

TEST_CASE("section and projector binary roundtrips") {
  SectionField s;
  s.grid.n = 4;
  s.grid.origin = Vec2(0.25, -0.75);
  s.dim = 3;
  for (int k = 0; k < 16; ++k) {
    VecX v(3);
    v << cxd(k, 1), cxd(-k, 0.5), cxd(0.1 * k, -2);
    s.psi.push_back(v / v.norm());
  }
  const SectionField back = section_from_binary(section_to_binary(s));
  CHECK(back.grid.n == 4);
  CHECK((back.grid.origin - s.grid.origin).norm() == 0.0);
  for (int k = 0; k < 16; ++k) CHECK((back.psi[std::size_t(k)] - s.psi[std::size_t(k)]).norm() == 0.0);

  ProjectorField p;
  p.grid = s.grid;
  p.dim = 2;
  p.rank = 1;
  for (int k = 0; k < 16; ++k) {
    VecX v(2);
    v << std::cos(0.2 * k), cxd(0, 1) * std::sin(0.2 * k);
    p.P.push_back(MatX(v * v.adjoint()));
  }
  const ProjectorField pb = projector_from_binary(projector_to_binary(p));
  CHECK(pb.rank == 1);
  for (int k = 0; k < 16; ++k) CHECK(max_abs(MatX(pb.P[std::size_t(k)] - p.P[std::size_t(k)])) == 0.0);
}

TEST_CASE("scenario config: exactly one source, epsilon range") {
  namespace fs = std::filesystem;
  const auto dir = fs::temp_directory_path() / "diraclev_cfg_test";
  fs::create_directories(dir);
  const auto path = dir / "cfg.json";

  write_file(path.string(), R"({"scenario":"verify","builtin":"honeycomb",
    "flux_list":["1/89","1/144"],"kappa_list":[0.01,0.1],"B0":1.0})");
  const ScenarioConfig cfg = ScenarioConfig::from_json_file(path.string());
  CHECK(cfg.builtin == "honeycomb");
  CHECK(cfg.flux_list.size() == 2);

  write_file(path.string(), R"({"builtin":"honeycomb","hoppings_file":"x.json",
    "flux_list":["1/89"]})");
  CHECK_THROWS_AS(ScenarioConfig::from_json_file(path.string()), Error);

  write_file(path.string(), R"({"builtin":"honeycomb","flux_list":["7/2"]})");
  CHECK_THROWS_AS(ScenarioConfig::from_json_file(path.string()), Error);
}

TEST_CASE("CLI scenarios produce deterministic byte-identical outputs") {
  namespace fs = std::filesystem;
  ScenarioConfig cfg;
  cfg.scenario = "crossing";
  cfg.builtin = "honeycomb";
  cfg.band_grid = 16;

  const auto dir1 = fs::temp_directory_path() / "diraclev_det1";
  const auto dir2 = fs::temp_directory_path() / "diraclev_det2";
  fs::remove_all(dir1);
  fs::remove_all(dir2);
  cfg.output_dir = dir1.string();
  REQUIRE(run_scenario(cfg) == 0);
  cfg.output_dir = dir2.string();
  REQUIRE(run_scenario(cfg) == 0);
  CHECK(read_file((dir1 / "crossing.json").string()) ==
        read_file((dir2 / "crossing.json").string()));

  ScenarioConfig bc = cfg;
  bc.scenario = "bands";
  bc.output_dir = dir1.string();
  REQUIRE(run_scenario(bc) == 0);
  const std::string csv = read_file((dir1 / "bands.csv").string());
  CHECK(csv.rfind("theta1,theta2,lambda_0", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 16 * 16);
}

TEST_CASE("hofstadter scenario writes windowed spectra") {
  namespace fs = std::filesystem;
  ScenarioConfig cfg;
  cfg.scenario = "hofstadter";
  cfg.builtin = "honeycomb";
  cfg.flux_list = {"1/5"};
  cfg.mbz_grid = 3;
  const auto dir = fs::temp_directory_path() / "diraclev_hof";
  fs::remove_all(dir);
  cfg.output_dir = dir.string();
  REQUIRE(run_scenario(cfg) == 0);
  const SpectrumSet s = spectrum_from_csv(read_file((dir / "hofstadter_1_5.csv").string()));
  CHECK(s.size() == std::size_t(2 * 5 * 3 * 3));
}
