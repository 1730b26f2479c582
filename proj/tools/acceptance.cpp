// hkl_acceptance: one pass/fail line per acceptance criterion.
//   hkl_acceptance [N]   runs criterion N only; exit 1 if any selected criterion fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>

#include "hkl/kernel.hpp"
#include "hkl/lattice.hpp"
#include "hkl/perturb.hpp"
#include "hkl/symbols.hpp"

#ifndef HKL_TESTS_BINARY
#define HKL_TESTS_BINARY "hkl_tests"
#endif

using namespace hkl;
using symbols::ItemStatus;
using symbols::PolySymbol;

namespace {

constexpr double kPi = std::numbers::pi;
const double kLargeConst = std::tgamma(9.0 / 8.0) / (2.0 * std::pow(kPi, 1.5));

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string num(double v) {
    char b[32];
    std::snprintf(b, sizeof b, "%.8g", v);
    return b;
}

// value vs target with a relative tolerance
Outcome rel_check(double value, double target, double tol) {
    double rel = std::abs(value - target) / std::abs(target);
    return {rel <= tol, "value=" + num(value) + " target=" + num(target) + " rel=" + num(rel) + " tol=" + num(tol)};
}

void merge(Outcome& o, const Outcome& part, const std::string& label) {
    if (!o.detail.empty()) o.detail += "; ";
    o.detail += label + " " + part.detail;
    o.pass = o.pass && part.pass;
}

PolySymbol mono(std::vector<int> a, std::int64_t c = 1) {
    symbols::RationalPoly p(static_cast<int>(a.size()));
    p.add_term(a, Rational(c));
    return PolySymbol(p);
}

Outcome c1() {
    auto D = symbols::builtin_intro();
    double t = 1e-4;
    double v = std::pow(t, 0.5) * kernel::phi_rescaled_small(D, t).value;
    return rel_check(v, std::pow(std::tgamma(1.25), 2) / (kPi * kPi), 2e-3);
}

Outcome c2() {
    auto D = symbols::builtin_intro();
    double t = 1e4;
    double v = std::pow(t, 0.625) * kernel::phi_rescaled_large(D, t).value;
    return rel_check(v, kLargeConst, 2e-3);
}

Outcome c3() {
    auto D = symbols::builtin_intro();
    auto P = symbols::assemble_symbol(D);
    auto Pt = symbols::dual_symbol(D);
    Outcome o{true, ""};
    for (double t : {0.5, 1.0, 2.0}) {
        double a = kernel::phi_naive(P, t).value, b = kernel::phi_naive(Pt, t).value;
        double rel = std::abs(a - b) / a;
        merge(o, {rel <= 1e-6, "rel=" + num(rel)}, "t=" + num(t));
    }
    o.detail += " tol=1e-06";
    return o;
}

Outcome c4() {
    Outcome o{true, ""};
    auto q1 = mono({4});
    for (double eps : {0.5, 1.0, 2.0}) {
        auto r = kernel::exp_integral_identity(q1, linops::ScalingMap::diagonal(std::vector<double>{0.25}), eps);
        merge(o, rel_check(r.lhs, r.rhs, 1e-4), "xi^4 eps=" + num(eps));
    }
    auto q2 = mono({4, 0}) + mono({0, 4});
    auto r = kernel::exp_integral_identity(q2, linops::ScalingMap::diagonal(std::vector<double>{0.25, 0.25}), 1.0);
    merge(o, rel_check(r.lhs, r.rhs, 1e-3), "eta^4+zeta^4 eps=1");
    return o;
}

Outcome c5() {
    auto a = symbols::exponents(symbols::builtin_intro());
    auto b = symbols::exponents(symbols::pql_family(3, 2, 6));
    bool ok = a.mu0_exact && a.mu_inf_exact && b.mu0_exact && b.mu_inf_exact && *a.mu0_exact == Rational(1, 2) &&
              *a.mu_inf_exact == Rational(5, 8) && *b.mu0_exact == Rational(1, 3) && *b.mu_inf_exact == Rational(5, 9);
    auto s = [](const std::optional<Rational>& r) { return r ? r->str() : std::string("none"); };
    return {ok, "intro=(" + s(a.mu0_exact) + ", " + s(a.mu_inf_exact) + ") target=(1/2, 5/8); pql(3,2,6)=(" +
                    s(b.mu0_exact) + ", " + s(b.mu_inf_exact) + ") target=(1/3, 5/9)"};
}

Outcome c6() {
    Outcome o{true, ""};
    for (auto [p, q, l] : {std::tuple{2, 2, 4}, std::tuple{2, 2, 6}, std::tuple{3, 2, 6}}) {
        auto D = symbols::pql_family(p, q, l);
        double v = kernel::limit_constant(symbols::limit_symbols(D).Pinf).value;
        double target = std::tgamma(1.0 + 1.0 / q) * std::tgamma(1.0 + 1.0 / (l * p)) / (kPi * kPi);
        merge(o, rel_check(v, target, 1e-3),
              "(" + std::to_string(p) + "," + std::to_string(q) + "," + std::to_string(l) + ")");
    }
    return o;
}

Outcome c7() {
    auto D = symbols::builtin_intro();
    auto rep = symbols::validate_decomposition(D);
    auto P = symbols::assemble_symbol(D);
    auto r2 = mono({2, 0}) + mono({0, 2});
    struct Case {
        std::string name;
        perturb::Perturbation R;
        ItemStatus want;
    };
    std::vector<Case> cases = {
        {"R1", perturb::Perturbation::polynomial(mono({2, 2}) + mono({1, 4}, 2) + mono({0, 6})), ItemStatus::pass},
        {"|xi|^10", perturb::Perturbation::polynomial(pow(r2, 5)), ItemStatus::pass},
        {"P^2", perturb::Perturbation::polynomial(pow(P, 2)), ItemStatus::pass},
        {"eta^2zeta^6", perturb::Perturbation::polynomial(mono({2, 6})), ItemStatus::pass},
        {"eta^3zeta^4", perturb::Perturbation::polynomial(mono({3, 4})), ItemStatus::pass},
        {"eta^4zeta^4", perturb::Perturbation::polynomial(mono({4, 4})), ItemStatus::pass},
        {"eta^5zeta^2", perturb::Perturbation::polynomial(mono({5, 2})), ItemStatus::pass},
        {"eta^6", perturb::Perturbation::polynomial(mono({6, 0})), ItemStatus::pass},
        {"eta^8", perturb::Perturbation::polynomial(mono({8, 0})), ItemStatus::pass},
        {"eta^2zeta^4", perturb::Perturbation::polynomial(mono({2, 4})), ItemStatus::fail},
        {"|xi|^4", perturb::Perturbation::polynomial(pow(r2, 2)), ItemStatus::fail},
    };
    Outcome o{true, ""};
    int right = 0;
    for (const auto& c : cases) {
        auto res = perturb::subhomogeneity_probe(c.R, D, rep);
        bool ok = res.verdict == c.want;
        right += ok;
        o.pass = o.pass && ok;
        if (!ok) o.detail += c.name + " gave " + symbols::to_string(res.verdict) + "; ";
    }
    o.detail += "correct=" + std::to_string(right) + "/" + std::to_string(cases.size());
    return o;
}

Outcome c8() {
    auto D = symbols::builtin_intro();
    auto P = symbols::assemble_symbol(D);
    auto R = perturb::Perturbation::composed(P, {Rational(1), Rational(1)});
    double t = 1e3;
    double v = std::pow(t, 0.625) * perturb::perturbed_phi(D, R, t).value;
    return rel_check(v, kLargeConst, 2e-2);
}

Outcome c9() {
    auto f = lattice::builtin_phi();
    const unsigned n = 10000;
    auto r = lattice::conv_power_dft(f, n);
    double scaled = std::pow(double(n), 0.625) * r.values.sup_norm();
    Outcome o = rel_check(scaled, std::pow(100.0, 0.625) * kLargeConst, 3e-2);
    bool settled = r.exact_period || r.alias_change < 1e-9;
    o.pass = o.pass && settled;
    o.detail += " alias_change=" + num(r.alias_change) + (r.exact_period ? " (exact period)" : "");
    return o;
}

Outcome c10() {
    auto f = lattice::builtin_phi();
    lattice::LLTSpec spec{symbols::builtin_intro(100), {0.0, 0.0}, {0.0, 0.0}};
    Outcome o{true, ""};
    double prev = INFINITY, last = 0.0, attractor = 0.0;
    for (unsigned n : {100u, 400u, 1600u}) {
        auto r = lattice::llt_compare(f, spec, n);
        o.pass = o.pass && r.sup_residual_scaled < prev;
        prev = last = r.sup_residual_scaled;
        attractor = r.attractor_at_zero_scaled;
        o.detail += "n=" + std::to_string(n) + " residual=" + num(r.sup_residual_scaled) + "; ";
    }
    double ratio = last / attractor;
    o.pass = o.pass && ratio < 0.1;
    o.detail += "ratio at 1600=" + num(ratio) + " tol=0.1 (strictly decreasing required)";
    return o;
}

Outcome c11() {
    auto curve = lattice::supnorm_curve(lattice::builtin_psi(), {100, 1000, 10000}, 0.625);
    bool mono_dec = curve[1].scaled < curve[0].scaled && curve[2].scaled < curve[1].scaled;
    double ratio = curve[2].scaled / curve[0].scaled;
    std::string d;
    for (const auto& p : curve) d += "n=" + std::to_string(p.n) + " scaled=" + num(p.scaled) + "; ";
    return {mono_dec && ratio < 0.5,
            d + "ratio=" + num(ratio) + " tol=0.5 monotone=" + (mono_dec ? "yes" : "no")};
}

Outcome c12() {
    std::string cmd = std::string("\"") + HKL_TESTS_BINARY + "\" --test-suite=properties --minimal > /dev/null 2>&1";
    int rc = std::system(cmd.c_str());
    return {rc == 0, "property suite exit status " + std::to_string(rc)};
}

struct Criterion {
    const char* name;
    double budget_s;
    std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
    const std::vector<Criterion> all = {
        {"small-time constant", 10, c1},
        {"large-time constant", 10, c2},
        {"duality", 30, c3},
        {"exp integral identity", 30, c4},
        {"exact exponents", 1, c5},
        {"gamma-product constants", 30, c6},
        {"subhomogeneity verdicts", 10, c7},
        {"perturbed large-time constant", 60, c8},
        {"convolution sup-norm", 300, c9},
        {"local limit residual decay", 300, c10},
        {"psi non-example decay", 300, c11},
        {"property suites", 300, c12},
    };
    int only = 0;
    if (argc > 1) {
        only = std::atoi(argv[1]);
        if (only < 1 || only > static_cast<int>(all.size())) {
            std::fprintf(stderr, "usage: %s [1-%zu]\n", argv[0], all.size());
            return 2;
        }
    }
    bool ok = true;
    for (std::size_t i = 0; i < all.size(); ++i) {
        if (only && static_cast<int>(i) + 1 != only) continue;
        auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = all[i].run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (secs > all[i].budget_s) {
            o.pass = false;
            o.detail += " (over time budget)";
        }
        ok = ok && o.pass;
        std::printf("[%s] %zu %s: %s time=%.2fs\n", o.pass ? "PASS" : "FAIL", i + 1, all[i].name, o.detail.c_str(), secs);
        std::fflush(stdout);
    }
    return ok ? 0 : 1;
}
