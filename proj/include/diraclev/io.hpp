#pragma once

#include <string>

#include "diraclev/bloch.hpp"
#include "diraclev/hoppings.hpp"
#include "diraclev/sections.hpp"
#include "diraclev/spectrum.hpp"
#include "diraclev/two_band.hpp"

namespace diraclev {

// HoppingSet JSON: {"hoppings": [{"gamma": [g1,g2], "m": [re,im x 4 row-major]}]}
std::string hoppings_to_json(const HoppingSet& m);
HoppingSet hoppings_from_json(const std::string& text);

// TwoBandSymbol JSON: either {"hoppings": ...} or
// {"pauli_grid": {"n": n, "f0": [...], "f": [...]}}.
std::string symbol_to_json(const TwoBandSymbol& s, int sample_grid = 0);
TwoBandSymbol symbol_from_json(const std::string& text);

// BlochProblem JSON: lattice vectors, potential entries, truncation.
std::string bloch_problem_to_json(const BlochProblem& p);
BlochProblem bloch_problem_from_json(const std::string& text);

// SpectrumSet CSV: "# window,<lo>,<hi>" header then one value per line.
std::string spectrum_to_csv(const SpectrumSet& s);
SpectrumSet spectrum_from_csv(const std::string& text);

// BandGrid CSV with columns theta1,theta2,lambda_0,...
std::string bands_to_csv(const BandGrid& g);

// Binary-safe persistence: one-line JSON header (grid size, fiber dimension,
// rank) followed by raw little-endian float64 payload.
std::string section_to_binary(const SectionField& s);
SectionField section_from_binary(const std::string& blob);
std::string projector_to_binary(const ProjectorField& p);
ProjectorField projector_from_binary(const std::string& blob);

void write_file(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

}  // namespace diraclev
