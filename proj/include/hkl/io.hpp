#pragma once

#include <string>
#include <vector>

#include "json.hpp"

#include "hkl/lattice.hpp"
#include "hkl/perturb.hpp"
#include "hkl/symbols.hpp"

namespace hkl::io {

using nlohmann::json;

// Reads and parses a JSON file; InputError on I/O or syntax errors.
json read_json_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

// Numbers or "a/b" strings. Non-integral JSON numbers have no exact value.
bool is_exact_number(const json& j);
Rational to_rational(const json& j);
double to_double(const json& j);
json from_rational(const Rational& r);

// {dim, terms: [{alpha: [...], coeff}]}
symbols::PolySymbol symbol_from_json(const json& j);
json symbol_to_json(const symbols::PolySymbol& p);

// Row-major array of rows.
linops::ScalingMap matrix_from_json(const json& j, int dim);
json matrix_to_json(const linops::ScalingMap& m);

// {a, b, P1, P2, Q: {in_dim, components}, E1, E2, F1, F2, family?}
// or {"generator": "pql", "p", "q", "l", "scale"?}
symbols::SymbolDecomposition decomposition_from_json(const json& j);
json decomposition_to_json(const symbols::SymbolDecomposition& D);

// {dim, entries: [{x, re, im}]}
lattice::LatticeFunction lattice_from_json(const json& j);
json lattice_to_json(const lattice::LatticeFunction& f);

struct NamedPerturbation {
    std::string name;
    perturb::Perturbation R;
};
// One perturbation object or {"perturbations": [...]}. Composed kinds use P.
std::vector<NamedPerturbation> perturbations_from_json(const json& j, const symbols::PolySymbol& P);

// Scientific notation with round-trip precision.
std::string fmt(double v);

}  // namespace hkl::io
