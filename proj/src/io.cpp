#include "hkl/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "hkl/errors.hpp"

namespace hkl::io {

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw InputError(path + ": " + e.what());
    }
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path);
    out << text;
}

bool is_exact_number(const json& j) { return j.is_number_integer() || j.is_string(); }

Rational to_rational(const json& j) {
    if (j.is_number_integer()) return Rational(j.get<std::int64_t>());
    if (j.is_string()) {
        try {
            return Rational::parse(j.get<std::string>());
        } catch (const InputError&) {
            throw;
        } catch (const std::exception& e) {
            throw InputError("bad rational '" + j.get<std::string>() + "'");
        }
    }
    throw InputError("expected an exact number, got " + j.dump());
}

double to_double(const json& j) {
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) return to_rational(j).to_double();
    throw InputError("expected a number, got " + j.dump());
}

json from_rational(const Rational& r) {
    if (r.den() == 1) return r.num();
    return r.str();
}

namespace {

const json& field(const json& j, const char* name) {
    if (!j.is_object() || !j.contains(name)) throw InputError(std::string("missing field '") + name + "'");
    return j.at(name);
}

int int_field(const json& j, const char* name) {
    const json& v = field(j, name);
    if (!v.is_number_integer()) throw InputError(std::string("field '") + name + "' must be an integer");
    return v.get<int>();
}

}  // namespace

symbols::PolySymbol symbol_from_json(const json& j) {
    const int dim = int_field(j, "dim");
    if (dim < 0) throw InputError("symbol dimension must be nonnegative");
    const json& terms = field(j, "terms");
    if (!terms.is_array()) throw InputError("'terms' must be an array");
    bool exact = true;
    for (const auto& t : terms) exact = exact && is_exact_number(field(t, "coeff"));
    auto alpha_of = [&](const json& t) {
        const json& a = field(t, "alpha");
        if (!a.is_array() || static_cast<int>(a.size()) != dim) throw InputError("term exponent has wrong length");
        symbols::MultiIndex m;
        for (const auto& e : a) {
            if (!e.is_number_integer() || e.get<int>() < 0) throw InputError("exponents must be nonnegative integers");
            m.push_back(e.get<int>());
        }
        return m;
    };
    if (exact) {
        symbols::RationalPoly p(dim);
        for (const auto& t : terms) p.add_term(alpha_of(t), to_rational(t.at("coeff")));
        return symbols::PolySymbol(p);
    }
    symbols::RealPoly p(dim);
    for (const auto& t : terms) p.add_term(alpha_of(t), to_double(t.at("coeff")));
    return symbols::PolySymbol(p);
}

json symbol_to_json(const symbols::PolySymbol& p) {
    json terms = json::array();
    if (p.exact()) {
        for (const auto& [a, c] : p.exact()->terms()) terms.push_back({{"alpha", a}, {"coeff", from_rational(c)}});
    } else {
        for (const auto& [a, c] : p.terms().terms()) terms.push_back({{"alpha", a}, {"coeff", c}});
    }
    return {{"dim", p.dim()}, {"terms", terms}};
}

linops::ScalingMap matrix_from_json(const json& j, int dim) {
    if (!j.is_array() || static_cast<int>(j.size()) != dim) throw InputError("matrix has wrong number of rows");
    bool exact = true;
    for (const auto& row : j) {
        if (!row.is_array() || static_cast<int>(row.size()) != dim) throw InputError("matrix row has wrong length");
        for (const auto& v : row) exact = exact && is_exact_number(v);
    }
    if (exact) {
        std::vector<Rational> e;
        for (const auto& row : j)
            for (const auto& v : row) e.push_back(to_rational(v));
        return linops::ScalingMap(dim, e);
    }
    linops::Matrix m(dim, dim);
    for (int r = 0; r < dim; ++r)
        for (int c = 0; c < dim; ++c) m(r, c) = to_double(j[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)]);
    return linops::ScalingMap(m);
}

json matrix_to_json(const linops::ScalingMap& m) {
    json rows = json::array();
    for (int r = 0; r < m.dim(); ++r) {
        json row = json::array();
        for (int c = 0; c < m.dim(); ++c) {
            if (m.exact())
                row.push_back(from_rational((*m.exact())[static_cast<std::size_t>(r * m.dim() + c)]));
            else
                row.push_back(m.matrix()(r, c));
        }
        rows.push_back(row);
    }
    return rows;
}

symbols::SymbolDecomposition decomposition_from_json(const json& j) {
    if (!j.is_object()) throw InputError("decomposition must be a JSON object");
    if (j.contains("generator")) {
        const std::string g = j.at("generator").get<std::string>();
        symbols::SymbolDecomposition D;
        if (g == "pql") {
            D = symbols::pql_family(int_field(j, "p"), int_field(j, "q"), int_field(j, "l"));
        } else if (g == "diagonal") {
            auto ints = [&](const char* n) { return field(j, n).get<std::vector<int>>(); };
            D = symbols::diagonal_family(ints("m1"), ints("m2"), ints("alpha"), ints("sigma"));
        } else {
            throw InputError("unknown generator '" + g + "'");
        }
        if (j.contains("scale")) {
            Rational s = to_rational(j.at("scale"));
            if (!(Rational(0) < s)) throw InputError("scale must be positive");
            D.P1 = D.P1.scaled(Rational(1) / s);
            D.P2 = D.P2.scaled(Rational(1) / s);
        }
        return D;
    }
    symbols::SymbolDecomposition D;
    D.a = int_field(j, "a");
    D.b = int_field(j, "b");
    if (D.a <= 0 || D.b < 0) throw InputError("need a > 0 and b >= 0");
    D.P1 = symbol_from_json(field(j, "P1"));
    D.P2 = symbol_from_json(field(j, "P2"));
    const json& q = field(j, "Q");
    D.Q.in_dim = int_field(q, "in_dim");
    for (const auto& c : field(q, "components")) D.Q.components.push_back(symbol_from_json(c));
    D.E1 = matrix_from_json(field(j, "E1"), D.a);
    D.E2 = matrix_from_json(field(j, "E2"), D.a);
    D.F1 = matrix_from_json(field(j, "F1"), D.b);
    D.F2 = matrix_from_json(field(j, "F2"), D.b);
    if (j.contains("family")) {
        const json& f = j.at("family");
        symbols::DiagonalFamily fam;
        for (const auto& v : field(f, "lambda1")) fam.lambda1.push_back(to_rational(v));
        for (const auto& v : field(f, "lambda2")) fam.lambda2.push_back(to_rational(v));
        fam.alpha = field(f, "alpha").get<std::vector<int>>();
        fam.sigma = field(f, "sigma").get<std::vector<int>>();
        D.family = fam;
    }
    D.check_shapes();
    return D;
}

json decomposition_to_json(const symbols::SymbolDecomposition& D) {
    json comps = json::array();
    for (const auto& c : D.Q.components) comps.push_back(symbol_to_json(c));
    json j = {{"a", D.a},
              {"b", D.b},
              {"P1", symbol_to_json(D.P1)},
              {"P2", symbol_to_json(D.P2)},
              {"Q", {{"in_dim", D.Q.in_dim}, {"components", comps}}},
              {"E1", matrix_to_json(D.E1)},
              {"E2", matrix_to_json(D.E2)},
              {"F1", matrix_to_json(D.F1)},
              {"F2", matrix_to_json(D.F2)}};
    if (D.family) {
        json l1 = json::array(), l2 = json::array();
        for (const auto& r : D.family->lambda1) l1.push_back(from_rational(r));
        for (const auto& r : D.family->lambda2) l2.push_back(from_rational(r));
        j["family"] = {{"lambda1", l1}, {"lambda2", l2}, {"alpha", D.family->alpha}, {"sigma", D.family->sigma}};
    }
    return j;
}

lattice::LatticeFunction lattice_from_json(const json& j) {
    const int dim = int_field(j, "dim");
    if (dim <= 0) throw InputError("lattice dimension must be positive");
    const json& entries = field(j, "entries");
    if (!entries.is_array()) throw InputError("'entries' must be an array");
    bool exact = true;
    for (const auto& e : entries) {
        exact = exact && is_exact_number(field(e, "re"));
        if (e.contains("im")) exact = exact && is_exact_number(e.at("im"));
    }
    auto point = [&](const json& e) {
        const json& x = field(e, "x");
        if (!x.is_array() || static_cast<int>(x.size()) != dim) throw InputError("lattice point has wrong dimension");
        lattice::Point p;
        for (const auto& v : x) {
            if (!v.is_number_integer()) throw InputError("lattice coordinates must be integers");
            p.push_back(v.get<int>());
        }
        return p;
    };
    if (exact) {
        std::map<lattice::Point, lattice::ExactComplex> m;
        for (const auto& e : entries) {
            auto& v = m[point(e)];
            v.re = v.re + to_rational(e.at("re"));
            if (e.contains("im")) v.im = v.im + to_rational(e.at("im"));
        }
        return lattice::LatticeFunction::from_exact(dim, m);
    }
    std::map<lattice::Point, lattice::cd> m;
    for (const auto& e : entries) m[point(e)] += lattice::cd(to_double(e.at("re")), e.contains("im") ? to_double(e.at("im")) : 0.0);
    return lattice::LatticeFunction::from_entries(dim, m);
}

json lattice_to_json(const lattice::LatticeFunction& f) {
    json entries = json::array();
    if (f.exact()) {
        for (const auto& [x, v] : *f.exact())
            entries.push_back({{"x", x}, {"re", from_rational(v.re)}, {"im", from_rational(v.im)}});
    } else {
        for (const auto& [x, v] : f.entries()) entries.push_back({{"x", x}, {"re", v.real()}, {"im", v.imag()}});
    }
    return {{"dim", f.dim()}, {"entries", entries}};
}

std::vector<NamedPerturbation> perturbations_from_json(const json& j, const symbols::PolySymbol& P) {
    if (j.is_object() && j.contains("perturbations")) {
        std::vector<NamedPerturbation> out;
        for (const auto& e : j.at("perturbations")) {
            auto one = perturbations_from_json(e, P);
            out.insert(out.end(), one.begin(), one.end());
        }
        return out;
    }
    const std::string kind = field(j, "kind").get<std::string>();
    std::string name = j.contains("name") ? j.at("name").get<std::string>() : kind;
    if (kind == "polynomial") {
        auto re = symbol_from_json(field(j, "re"));
        auto im = j.contains("im") ? symbol_from_json(j.at("im")) : symbols::PolySymbol(re.dim());
        return {{name, perturb::Perturbation::polynomial(re, im)}};
    }
    if (kind == "radial_power") {
        int dim = j.contains("dim") ? int_field(j, "dim") : P.dim();
        return {{name, perturb::Perturbation::radial_power(dim, to_double(field(j, "k")))}};
    }
    if (kind == "composed") {
        std::vector<Rational> q;
        for (const auto& v : field(j, "q")) q.push_back(to_rational(v));
        return {{name, perturb::Perturbation::composed(P, q)}};
    }
    throw InputError("unknown perturbation kind '" + kind + "'");
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17e", v);
    return buf;
}

}  // namespace hkl::io
