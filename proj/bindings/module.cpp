// Python bindings for the core operations: effective two-band models,
// magnetic spectra, the linearized-operator ladder, and the Feshbach-Schur
// reduction.

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "diraclev/feshbach.hpp"
#include "diraclev/harness.hpp"
#include "diraclev/io.hpp"
#include "diraclev/oscillator.hpp"
#include "diraclev/semiclassical.hpp"

namespace py = pybind11;
using namespace diraclev;

namespace {

Eigen::VectorXd to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), long(v.size()));
}

}  // namespace

PYBIND11_MODULE(_diraclev, m) {
  m.doc() = "Dirac crossings in weak magnetic fields, at desk scale";

  py::register_exception<Error>(m, "DiraclevError");

  py::class_<HoppingSet>(m, "HoppingSet")
      .def(py::init<>())
      .def("add", [](HoppingSet& h, int g1, int g2, const Mat2& mm) { h.add(g1, g2, mm); })
      .def("add_with_conjugate",
           [](HoppingSet& h, int g1, int g2, const Mat2& mm) {
             h.add_with_conjugate(g1, g2, mm);
           })
      .def("symbol", &HoppingSet::symbol)
      .def("to_json", [](const HoppingSet& h) { return hoppings_to_json(h); })
      .def_static("from_json", [](const std::string& s) { return hoppings_from_json(s); });

  m.def("honeycomb", &honeycomb_hoppings);
  m.def("harper", &harper_hoppings);

  py::class_<TwoBandSymbol>(m, "TwoBandSymbol")
      .def("matrix", &TwoBandSymbol::matrix)
      .def("eigenvalues", &TwoBandSymbol::eigenvalues)
      .def("F0", &TwoBandSymbol::F0)
      .def("F", &TwoBandSymbol::F)
      .def("to_json", [](const TwoBandSymbol& s) { return symbol_to_json(s); })
      .def_static("from_json", [](const std::string& s) { return symbol_from_json(s); });

  m.def("peierls_symbol", &peierls_symbol);

  py::class_<DiracLinearization>(m, "DiracLinearization")
      .def_readonly("f1", &DiracLinearization::f1)
      .def_readonly("f2", &DiracLinearization::f2)
      .def_readonly("v1", &DiracLinearization::v1)
      .def_readonly("v2", &DiracLinearization::v2)
      .def_readonly("v3", &DiracLinearization::v3)
      .def_readonly("a0", &DiracLinearization::a0)
      .def_readonly("mu", &DiracLinearization::mu)
      .def("omega", &DiracLinearization::omega);

  py::class_<CrossingPoint>(m, "CrossingPoint")
      .def_readonly("theta0", &CrossingPoint::theta0)
      .def_readonly("k0", &CrossingPoint::k0)
      .def_readonly("residual_gap", &CrossingPoint::residual_gap)
      .def_readonly("crossing_energy", &CrossingPoint::crossing_energy)
      .def_readwrite("sigma_radius", &CrossingPoint::sigma_radius);

  py::class_<HypothesisReport>(m, "HypothesisReport")
      .def_readonly("c_lower", &HypothesisReport::c_lower)
      .def_readonly("c_upper", &HypothesisReport::c_upper)
      .def_readonly("hessian_eigenvalues", &HypothesisReport::hessian_eigenvalues)
      .def_readonly("a0", &HypothesisReport::a0)
      .def_readonly("a", &HypothesisReport::a)
      .def_readonly("rho", &HypothesisReport::rho)
      .def_readonly("pass_h1", &HypothesisReport::pass_h1)
      .def_readonly("pass_h2", &HypothesisReport::pass_h2)
      .def_readonly("k0_warning", &HypothesisReport::k0_warning);

  m.def(
      "locate_crossing",
      [](const HoppingSet& hops, int grid) {
        const BandGrid bands = compute_bands(fiber_family(peierls_symbol(hops)), grid, 2);
        return locate_crossing(bands, 0);
      },
      py::arg("hoppings"), py::arg("grid") = 32);
  m.def(
      "verify_hypotheses",
      [](const HoppingSet& hops, const CrossingPoint& cp, int grid) {
        const BandGrid bands = compute_bands(fiber_family(peierls_symbol(hops)), grid, 2);
        return verify_hypotheses(bands, cp);
      },
      py::arg("hoppings"), py::arg("crossing"), py::arg("grid") = 32);
  m.def("linearize_at_crossing", &linearize_at_crossing, py::arg("symbol"),
        py::arg("theta0"), py::arg("fd_step") = 1e-3, py::arg("gap_tol") = 1e-7);

  m.def(
      "band_grid",
      [](const HoppingSet& hops, int grid) {
        const BandGrid g = compute_bands(fiber_family(peierls_symbol(hops)), grid, 2);
        Eigen::MatrixXd lo(grid, grid), hi(grid, grid);
        for (int i = 0; i < grid; ++i)
          for (int j = 0; j < grid; ++j) {
            lo(i, j) = g.value(i, j, 0);
            hi(i, j) = g.value(i, j, 1);
          }
        return py::make_tuple(lo, hi);
      },
      py::arg("hoppings"), py::arg("grid") = 32);

  m.def(
      "spectrum_L",
      [](const DiracLinearization& lin, int n_levels, int N) {
        const auto res = spectrum_L(lin, n_levels, N);
        py::dict out;
        out["levels"] = to_vector(res.levels);
        out["convergence_drift"] = res.convergence_drift;
        out["symmetry_defect"] = res.symmetry_defect;
        out["converged"] = res.converged;
        return out;
      },
      py::arg("lin"), py::arg("n_levels") = 21, py::arg("N") = 200);

  m.def(
      "hofstadter_spectrum",
      [](const HoppingSet& hops, int p, int q, int mbz, double lo, double hi) {
        return to_vector(hofstadter_spectrum(hops, FluxRational(p, q), mbz, lo, hi).values);
      },
      py::arg("hoppings"), py::arg("p"), py::arg("q"), py::arg("mbz_grid") = 4,
      py::arg("lo") = -1e9, py::arg("hi") = 1e9);

  m.def(
      "spectrum_1d",
      [](const HoppingSet& hops, int p, int q, int s_grid, int k_grid, double lo, double hi) {
        return to_vector(spectrum_1d(hops, FluxRational(p, q), s_grid, k_grid, lo, hi).values);
      },
      py::arg("hoppings"), py::arg("p"), py::arg("q"), py::arg("s_grid") = 4,
      py::arg("k_grid") = 4, py::arg("lo") = -1e9, py::arg("hi") = 1e9);

  m.def(
      "cross_check_isospectral",
      [](const HoppingSet& hops, int p, int q, double lo, double hi, int grid, double tol) {
        const auto rep = cross_check_isospectral(hops, FluxRational(p, q), lo, hi, grid, tol);
        return rep.distance;
      },
      py::arg("hoppings"), py::arg("p"), py::arg("q"), py::arg("lo") = -1e9,
      py::arg("hi") = 1e9, py::arg("grid") = 4, py::arg("iso_tol") = 1e-8);

  m.def(
      "hausdorff",
      [](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
        SpectrumSet A(std::vector<double>(a.data(), a.data() + a.size()), -1e300, 1e300);
        SpectrumSet B(std::vector<double>(b.data(), b.data() + b.size()), -1e300, 1e300);
        return hausdorff(A, B);
      },
      py::arg("a"), py::arg("b"));

  m.def(
      "dressed_hamiltonian",
      [](const MatX& H, const MatX& Pi, double lo, double hi) {
        return dressed_hamiltonian(check_admissible(H, Pi, lo, hi));
      },
      py::arg("H"), py::arg("Pi"), py::arg("lo"), py::arg("hi"));
  m.def(
      "schur_complement",
      [](const MatX& H, const MatX& Pi, double lo, double hi, double e) {
        return schur_complement(check_admissible(H, Pi, lo, hi), e);
      },
      py::arg("H"), py::arg("Pi"), py::arg("lo"), py::arg("hi"), py::arg("e"));
  m.def(
      "spectral_distance_bound",
      [](const MatX& H, const MatX& Pi, double lo, double hi, double iplo, double iphi) {
        const auto rep = spectral_distance_bound(check_admissible(H, Pi, lo, hi), iplo, iphi);
        py::dict out;
        out["bound"] = rep.bound;
        out["observed"] = rep.observed;
        out["ratio"] = rep.worst_ratio;
        return out;
      },
      py::arg("H"), py::arg("Pi"), py::arg("lo"), py::arg("hi"), py::arg("iplo"),
      py::arg("iphi"));

  m.def(
      "quasimode_lambdas",
      [](const HoppingSet& hops, const Vec2& theta0, int level, int order, int N) {
        const TwoBandSymbol s = peierls_symbol(hops);
        const DiracLinearization lin = linearize_at_crossing(s, theta0);
        const auto taylor = symbol_taylor_terms(s, theta0, order + 1);
        const auto exp = quasimode_expand(lin, taylor, level, order, N);
        return to_vector(exp.lambda);
      },
      py::arg("hoppings"), py::arg("theta0"), py::arg("level") = 1, py::arg("order") = 2,
      py::arg("N") = 80);

  m.def(
      "run_scenario",
      [](const std::string& config_path, const std::string& out_dir) {
        ScenarioConfig cfg = ScenarioConfig::from_json_file(config_path);
        if (!out_dir.empty()) cfg.output_dir = out_dir;
        return run_scenario(cfg);
      },
      py::arg("config_path"), py::arg("output_dir") = "");
}
