#include "diraclev/io.hpp"

#include <cstring>
#include <fstream>
#include <json.hpp>
#include <sstream>

namespace diraclev {

using nlohmann::json;

std::string hoppings_to_json(const HoppingSet& m) {
  json j;
  j["hoppings"] = json::array();
  for (const auto& [g, mm] : m.terms) {
    json e;
    e["gamma"] = {g.g1, g.g2};
    json flat = json::array();
    for (int r = 0; r < 2; ++r)
      for (int c = 0; c < 2; ++c) {
        flat.push_back(mm(r, c).real());
        flat.push_back(mm(r, c).imag());
      }
    e["m"] = flat;
    j["hoppings"].push_back(e);
  }
  return j.dump(2);
}

HoppingSet hoppings_from_json(const std::string& text) {
  const json j = json::parse(text);
  HoppingSet m;
  for (const auto& e : j.at("hoppings")) {
    Mat2 mm;
    const auto& flat = e.at("m");
    require(flat.size() == 8, "invalid-input", "hopping matrix needs 8 numbers");
    int idx = 0;
    for (int r = 0; r < 2; ++r)
      for (int c = 0; c < 2; ++c) {
        mm(r, c) = cxd(flat[idx], flat[idx + 1]);
        idx += 2;
      }
    m.add(e.at("gamma")[0].get<int>(), e.at("gamma")[1].get<int>(), mm);
  }
  require(m.is_hermitian_symmetric(1e-10), "invalid-input",
          "hopping set in file is not Hermitian-symmetric");
  return m;
}

std::string symbol_to_json(const TwoBandSymbol& s, int sample_grid) {
  if (const HoppingSet* m = s.hoppings(); m != nullptr && sample_grid == 0)
    return hoppings_to_json(*m);
  const int n = sample_grid > 0 ? sample_grid : (s.has_grid() ? s.grid_n() : 32);
  json j;
  j["pauli_grid"]["n"] = n;
  json f0 = json::array(), f = json::array();
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k) {
      const Vec2 th(two_pi * i / n, two_pi * k / n);
      auto [a0, a] = pauli_decompose(s.matrix(th));
      f0.push_back(a0);
      f.push_back({a[0], a[1], a[2]});
    }
  j["pauli_grid"]["f0"] = f0;
  j["pauli_grid"]["f"] = f;
  return j.dump();
}

TwoBandSymbol symbol_from_json(const std::string& text) {
  const json j = json::parse(text);
  if (j.contains("hoppings")) return TwoBandSymbol::from_hoppings(hoppings_from_json(text));
  const auto& pg = j.at("pauli_grid");
  const int n = pg.at("n").get<int>();
  std::vector<Mat2> samples;
  samples.reserve(std::size_t(n) * n);
  for (int idx = 0; idx < n * n; ++idx) {
    const double f0 = pg.at("f0")[std::size_t(idx)].get<double>();
    const auto& fv = pg.at("f")[std::size_t(idx)];
    samples.push_back(pauli_reconstruct(f0, Vec3(fv[0], fv[1], fv[2])));
  }
  return TwoBandSymbol::from_grid(n, std::move(samples));
}

std::string bloch_problem_to_json(const BlochProblem& p) {
  json j;
  j["lattice"]["a1"] = {p.lattice.a1[0], p.lattice.a1[1]};
  j["lattice"]["a2"] = {p.lattice.a2[0], p.lattice.a2[1]};
  j["truncation"] = p.truncation;
  j["potential"] = json::array();
  for (const auto& [n, v] : p.potential)
    j["potential"].push_back({{"n", {n.g1, n.g2}}, {"c", {v.real(), v.imag()}}});
  if (!p.vector_potential.empty()) {
    j["vector_potential"] = json::array();
    for (const auto& [n, v] : p.vector_potential)
      j["vector_potential"].push_back(
          {{"n", {n.g1, n.g2}},
           {"c", {v(0).real(), v(0).imag(), v(1).real(), v(1).imag()}}});
  }
  return j.dump(2);
}

BlochProblem bloch_problem_from_json(const std::string& text) {
  const json j = json::parse(text);
  BlochProblem p;
  p.lattice = LatticeSpec::from_basis(
      Vec2(j.at("lattice").at("a1")[0], j.at("lattice").at("a1")[1]),
      Vec2(j.at("lattice").at("a2")[0], j.at("lattice").at("a2")[1]));
  p.truncation = j.at("truncation").get<int>();
  for (const auto& e : j.value("potential", json::array()))
    p.potential.push_back({{e.at("n")[0].get<int>(), e.at("n")[1].get<int>()},
                           cxd(e.at("c")[0], e.at("c")[1])});
  for (const auto& e : j.value("vector_potential", json::array())) {
    Eigen::Vector2cd v;
    v << cxd(e.at("c")[0], e.at("c")[1]), cxd(e.at("c")[2], e.at("c")[3]);
    p.vector_potential.push_back({{e.at("n")[0].get<int>(), e.at("n")[1].get<int>()}, v});
  }
  p.validate();
  return p;
}

std::string spectrum_to_csv(const SpectrumSet& s) {
  std::ostringstream os;
  os.precision(17);
  os << "# window," << s.window_lo << "," << s.window_hi << "\n";
  for (double v : s.values) os << v << "\n";
  return os.str();
}

SpectrumSet spectrum_from_csv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  SpectrumSet s;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto c1 = line.find(','), c2 = line.rfind(',');
      s.window_lo = std::stod(line.substr(c1 + 1, c2 - c1 - 1));
      s.window_hi = std::stod(line.substr(c2 + 1));
      continue;
    }
    s.values.push_back(std::stod(line));
  }
  std::sort(s.values.begin(), s.values.end());
  return s;
}

std::string bands_to_csv(const BandGrid& g) {
  std::ostringstream os;
  os.precision(17);
  os << "theta1,theta2";
  for (int b = 0; b < g.bands; ++b) os << ",lambda_" << b;
  os << "\n";
  for (int i = 0; i < g.grid_n; ++i)
    for (int j = 0; j < g.grid_n; ++j) {
      const Vec2 th = g.node(i, j);
      os << th[0] << "," << th[1];
      for (int b = 0; b < g.bands; ++b) os << "," << g.value(i, j, b);
      os << "\n";
    }
  return os.str();
}

namespace {

void append_doubles(std::string& out, const double* data, std::size_t count) {
  const std::size_t bytes = count * sizeof(double);
  const std::size_t at = out.size();
  out.resize(at + bytes);
  std::memcpy(out.data() + at, data, bytes);
}

const double* payload_start(const std::string& blob, std::size_t* header_len) {
  const auto nl = blob.find('\n');
  require(nl != std::string::npos, "invalid-input", "missing binary header");
  *header_len = nl + 1;
  return reinterpret_cast<const double*>(blob.data() + nl + 1);
}

}  // namespace

std::string section_to_binary(const SectionField& s) {
  json h;
  h["kind"] = "section";
  h["n"] = s.grid.n;
  h["dim"] = s.dim;
  h["origin"] = {s.grid.origin[0], s.grid.origin[1]};
  std::string out = h.dump() + "\n";
  for (const VecX& v : s.psi)
    append_doubles(out, reinterpret_cast<const double*>(v.data()), std::size_t(v.size()) * 2);
  return out;
}

SectionField section_from_binary(const std::string& blob) {
  std::size_t hl = 0;
  const double* p = payload_start(blob, &hl);
  const json h = json::parse(blob.substr(0, hl));
  SectionField s;
  s.grid.n = h.at("n").get<int>();
  s.grid.origin = Vec2(h.at("origin")[0], h.at("origin")[1]);
  s.dim = h.at("dim").get<int>();
  const std::size_t nn = std::size_t(s.grid.n) * s.grid.n;
  require(blob.size() - hl == nn * s.dim * 2 * sizeof(double), "invalid-input",
          "binary payload size mismatch");
  s.psi.resize(nn);
  for (std::size_t k = 0; k < nn; ++k) {
    VecX v(s.dim);
    for (int i = 0; i < s.dim; ++i) {
      v(i) = cxd(p[0], p[1]);
      p += 2;
    }
    s.psi[k] = v;
  }
  return s;
}

std::string projector_to_binary(const ProjectorField& pf) {
  json h;
  h["kind"] = "projector";
  h["n"] = pf.grid.n;
  h["dim"] = pf.dim;
  h["rank"] = pf.rank;
  h["origin"] = {pf.grid.origin[0], pf.grid.origin[1]};
  std::string out = h.dump() + "\n";
  for (const MatX& m : pf.P)
    append_doubles(out, reinterpret_cast<const double*>(m.data()), std::size_t(m.size()) * 2);
  return out;
}

ProjectorField projector_from_binary(const std::string& blob) {
  std::size_t hl = 0;
  const double* p = payload_start(blob, &hl);
  const json h = json::parse(blob.substr(0, hl));
  ProjectorField pf;
  pf.grid.n = h.at("n").get<int>();
  pf.grid.origin = Vec2(h.at("origin")[0], h.at("origin")[1]);
  pf.dim = h.at("dim").get<int>();
  pf.rank = h.at("rank").get<int>();
  const std::size_t nn = std::size_t(pf.grid.n) * pf.grid.n;
  require(blob.size() - hl == nn * pf.dim * pf.dim * 2 * sizeof(double), "invalid-input",
          "binary payload size mismatch");
  pf.P.resize(nn);
  for (std::size_t k = 0; k < nn; ++k) {
    MatX m(pf.dim, pf.dim);
    for (int c = 0; c < pf.dim; ++c)
      for (int r = 0; r < pf.dim; ++r) {
        m(r, c) = cxd(p[0], p[1]);
        p += 2;
      }
    pf.P[k] = m;
  }
  return pf;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  require(f.good(), "io-error", "cannot open " + path + " for writing");
  f.write(content.data(), std::streamsize(content.size()));
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  require(f.good(), "io-error", "cannot open " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace diraclev
