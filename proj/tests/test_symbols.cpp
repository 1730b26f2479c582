#include <cmath>
#include <random>

#include "doctest.h"
#include "hkl/symbols.hpp"

using namespace hkl::symbols;
using hkl::Rational;
using hkl::linops::ScalingMap;

namespace {

RationalPoly poly(int dim, std::initializer_list<std::pair<MultiIndex, Rational>> terms) {
    RationalPoly p(dim);
    for (const auto& [a, c] : terms) p.add_term(a, c);
    return p;
}

std::int64_t binom(int n, int k) {
    std::int64_t r = 1;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

ScalingMap diag(std::vector<double> d) { return ScalingMap::diagonal(d); }

// Q(zeta) = (zeta1^2 + zeta2^4, (zeta1 + zeta3^3)^5) on R^3
PolyMap composite_q() {
    PolyMap Q;
    Q.in_dim = 3;
    Q.components.emplace_back(poly(3, {{{2, 0, 0}, 1}, {{0, 4, 0}, 1}}));
    Q.components.push_back(pow(PolySymbol(poly(3, {{{1, 0, 0}, 1}, {{0, 0, 3}, 1}})), 5));
    return Q;
}

SymbolDecomposition swapped_intro() {
    SymbolDecomposition D = builtin_intro();
    std::swap(D.P1, D.P2);
    std::swap(D.E1, D.E2);
    std::swap(D.F1, D.F2);
    return D;
}

SymbolDecomposition zero_q(const SymbolDecomposition& base) {
    SymbolDecomposition D = base;
    for (auto& c : D.Q.components) c = PolySymbol(RationalPoly(D.b));
    return D;
}

double abs_terms(const PolySymbol& p, const std::vector<double>& x) {
    double s = 0.0;
    for (const auto& [a, c] : p.terms().terms()) {
        double m = std::abs(c);
        for (std::size_t k = 0; k < a.size(); ++k) m *= std::pow(std::abs(x[k]), a[k]);
        s += m;
    }
    return s;
}

}  // namespace

TEST_CASE("evaluate polynomial symbols") {
    PolySymbol P = assemble_symbol(builtin_intro());
    CHECK(P.eval({1.0, 0.0}) == 2.0);
    CHECK(P.eval({-1.0, 1.0}) == 1.0);
    PolySymbol P1(poly(2, {{{4, 0}, 1}, {{0, 6}, 1}}));
    CHECK(P1.eval({1.0, 1.0}) == 2.0);
    CHECK(P.eval_exact({Rational(3), Rational(-2)}) == Rational(49 + 81));
    CHECK_THROWS_AS(P.eval({1.0}), hkl::InputError);
}

TEST_CASE("assemble the worked symbol") {
    PolySymbol P = assemble_symbol(builtin_intro());
    RationalPoly expect = poly(2, {{{2, 0}, 1}, {{1, 2}, 2}, {{0, 4}, 1}, {{4, 0}, 1}});
    CHECK(*P.exact() == expect);
    CHECK(*assemble_symbol(pql_family(2, 2, 4)).exact() == expect);
}

TEST_CASE("composition with a multivariate map") {
    // P1 = x1^5 + x2^2 composed with Q, compared with binomial expansions
    PolySymbol P1(poly(2, {{{5, 0}, 1}, {{0, 2}, 1}}));
    PolyMap Q = composite_q();
    PolySymbol comp = compose(P1, Q.components);
    RationalPoly expect(3);
    for (int k = 0; k <= 5; ++k) expect.add_term({2 * k, 4 * (5 - k), 0}, Rational(binom(5, k)));
    for (int k = 0; k <= 10; ++k) expect.add_term({k, 0, 3 * (10 - k)}, Rational(binom(10, k)));
    CHECK(*comp.exact() == expect);

    // same thing as the eta = 0 slice of the assembled symbol with P2 = 0
    SymbolDecomposition D;
    D.a = 2;
    D.b = 3;
    D.P1 = P1;
    D.P2 = PolySymbol(RationalPoly(2));
    D.Q = Q;
    D.E1 = diag({2, 5});
    D.E2 = diag({2, 5});
    D.F1 = diag({1, 0.5, 1.0 / 3});
    D.F2 = diag({1, 0.5, 1.0 / 3});
    PolySymbol full = assemble_symbol(D);
    RationalPoly slice(5);
    for (const auto& [a, c] : full.exact()->terms())
        if (a[0] == 0 && a[1] == 0) slice.add_term(a, c);
    CHECK(slice == expect.embed(5, 2));
}

TEST_CASE("dual symbol") {
    RationalPoly expect = poly(2, {{{2, 0}, 1}, {{4, 0}, 1}, {{3, 2}, -4}, {{2, 4}, 6}, {{1, 6}, -4}, {{0, 8}, 1}});
    CHECK(*dual_symbol(builtin_intro()).exact() == expect);
    CHECK(*dual_symbol(pql_family(2, 2, 4)).exact() == expect);
    SymbolDecomposition D = zero_q(builtin_intro());
    RationalPoly plain = poly(2, {{{2, 0}, 1}, {{4, 0}, 1}});
    CHECK(*dual_symbol(D).exact() == plain);
}

TEST_CASE("limit symbols") {
    auto L = limit_symbols(builtin_intro());
    CHECK(*L.P0.exact() == poly(2, {{{4, 0}, 1}, {{0, 4}, 1}}));
    CHECK(*L.Pinf.exact() == poly(2, {{{2, 0}, 1}, {{0, 8}, 1}}));
    auto L6 = limit_symbols(pql_family(2, 2, 6));
    CHECK(*L6.P0.exact() == poly(2, {{{6, 0}, 1}, {{0, 4}, 1}}));
    CHECK(*L6.Pinf.exact() == poly(2, {{{2, 0}, 1}, {{0, 12}, 1}}));
    auto Lz = limit_symbols(zero_q(builtin_intro()));
    CHECK(*Lz.P0.exact() == poly(2, {{{4, 0}, 1}}));
    CHECK(*Lz.Pinf.exact() == poly(2, {{{2, 0}, 1}}));
}

TEST_CASE("composition overflow is reported") {
    PolySymbol big(poly(2, {{{1, 0}, 1000}, {{0, 1}, 999}}));
    CHECK_THROWS_AS(pow(big, 9), hkl::RationalOverflow);
}

TEST_CASE("homogeneity checks") {
    PolySymbol P = assemble_symbol(builtin_intro());
    auto r = check_homogeneity(P, diag({0.5, 0.25}));
    CHECK_FALSE(r.pass);
    CHECK(r.max_defect > 1e-2);
    PolySymbol P1(poly(2, {{{4, 0}, 1}, {{0, 6}, 1}}));
    CHECK(check_homogeneity(P1, diag({0.25, 1.0 / 6})).pass);
    PolySymbol euclid(poly(2, {{{2, 0}, 1}, {{0, 2}, 1}}));
    CHECK(check_homogeneity(euclid, diag({0.5, 0.5})).pass);
    auto z = check_homogeneity(PolySymbol(RationalPoly(2)), diag({1, 1}));
    CHECK(z.pass);
    CHECK_FALSE(z.warning.empty());
}

TEST_CASE("pair homogeneity checks") {
    PolyMap q;
    q.in_dim = 1;
    q.components.emplace_back(poly(1, {{{2}, 1}}));
    CHECK(check_pair_homogeneity(q, diag({0.5}), diag({0.25})).pass);
    CHECK_FALSE(check_pair_homogeneity(q, diag({0.5}), diag({0.5})).pass);
    CHECK(check_pair_homogeneity(composite_q(), diag({2, 5}), diag({1, 0.5, 1.0 / 3})).pass);
}

TEST_CASE("validate decompositions") {
    auto rep = validate_decomposition(builtin_intro());
    CHECK(rep.all_pass());
    CHECK(rep.contracting_difference);
    CHECK(rep.items.size() == 11);

    auto eq = validate_decomposition(pql_family(2, 4, 4));
    CHECK(eq.all_pass());
    CHECK_FALSE(eq.contracting_difference);

    auto sw = validate_decomposition(swapped_intro());
    CHECK_FALSE(sw.all_pass());
    CHECK(sw.find("E1-E2 non-expanding")->status == ItemStatus::fail);
    // the swap only breaks the difference condition
    for (const auto& it : sw.items)
        if (it.name != "E1-E2 non-expanding") CHECK_MESSAGE(it.status == ItemStatus::pass, it.name);

    auto bad = builtin_intro();
    bad.F2 = diag({0.25});
    CHECK(validate_decomposition(bad).find("Q homogeneous w.r.t. (E2,F2)")->status == ItemStatus::fail);
}

TEST_CASE("exponents") {
    auto e = exponents(builtin_intro());
    CHECK(*e.mu0_exact == Rational(1, 2));
    CHECK(*e.mu_inf_exact == Rational(5, 8));
    CHECK(e.mu0 == 0.5);
    CHECK(e.mu_inf == 0.625);
    auto f = exponents(pql_family(3, 2, 6));
    CHECK(*f.mu0_exact == Rational(1, 3));
    CHECK(*f.mu_inf_exact == Rational(5, 9));
    CHECK(*f.family_mu0 == Rational(1, 3));
    CHECK(*f.family_mu_inf == Rational(5, 9));
    auto [m0, mi] = diagonal_family_exponents({Rational(1), Rational(2)}, {Rational(1, 2), Rational(1)}, {2, 3});
    CHECK(m0 == Rational(1, 2) + Rational(1) + Rational(1, 2) + Rational(2, 3));
    CHECK(mi == Rational(1) + Rational(2) + Rational(1, 4) + Rational(1, 3));
}

TEST_CASE("diagonal family generator agrees with its closed form") {
    auto D = diagonal_family({2, 4}, {4, 8}, {2, 3}, {1, 0});
    auto rep = validate_decomposition(D);
    CHECK(rep.all_pass());
    auto e = exponents(D);
    CHECK(*e.mu0_exact == *e.family_mu0);
    CHECK(*e.mu_inf_exact == *e.family_mu_inf);
}

TEST_SUITE("properties") {
    TEST_CASE("assembled symbol equals nested evaluation") {
        std::vector<SymbolDecomposition> cases = {builtin_intro(), pql_family(3, 2, 6), diagonal_family({2, 4}, {4, 8}, {2, 3}, {1, 0})};
        SymbolDecomposition wide;
        wide.a = 2;
        wide.b = 3;
        wide.P1 = PolySymbol(poly(2, {{{4, 0}, 1}, {{0, 2}, 1}}));
        wide.P2 = PolySymbol(poly(2, {{{8, 0}, 1}, {{0, 4}, 1}}));
        wide.Q = composite_q();
        wide.E1 = wide.E2 = diag({1, 1});
        wide.F1 = wide.F2 = diag({1, 1, 1});
        cases.push_back(wide);
        std::mt19937_64 rng(42);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        for (const auto& D : cases) {
            PolySymbol P = assemble_symbol(D);
            PolySymbol Pt = dual_symbol(D);
            std::vector<double> xi(static_cast<std::size_t>(D.d())), y(xi.size()), q(static_cast<std::size_t>(D.a));
            for (int k = 0; k < 100; ++k) {
                for (auto& v : xi) v = u(rng);
                D.Q.eval(xi.data() + D.a, q.data());
                std::vector<double> s(q.size());
                for (int j = 0; j < D.a; ++j) s[static_cast<std::size_t>(j)] = xi[static_cast<std::size_t>(j)] + q[static_cast<std::size_t>(j)];
                double nested = D.P1(s.data()) + D.P2(xi.data());
                REQUIRE(std::abs(P(xi.data()) - nested) <= 1e-12 * (1.0 + std::abs(nested)));
                apply_shear(D, xi.data(), y.data());
                double viaT = P(y.data());
                // scale by the sum of |terms| for the degree-60 case, where cancellation is heavy
                double scale = D.d() > 2 ? abs_terms(P, y) : std::abs(viaT);
                REQUIRE(std::abs(Pt(xi.data()) - viaT) <= 1e-12 * (1.0 + scale));
            }
        }
    }

    TEST_CASE("limit symbols are homogeneous") {
        for (const auto& D : {builtin_intro(), pql_family(2, 2, 6), pql_family(3, 2, 6), diagonal_family({2, 4}, {4, 8}, {2, 3}, {1, 0})}) {
            auto L = limit_symbols(D);
            CHECK(check_homogeneity(L.P0, D.G0(), 1e-8).pass);
            CHECK(check_homogeneity(L.Pinf, D.G(), 1e-8).pass);
        }
    }

    TEST_CASE("validated decompositions have positive exponents") {
        for (const auto& D : {builtin_intro(), builtin_intro(100), pql_family(2, 2, 6), pql_family(3, 2, 6), pql_family(2, 4, 4),
                              diagonal_family({2, 4}, {4, 8}, {2, 3}, {1, 0})}) {
            REQUIRE(validate_decomposition(D).all_pass());
            auto e = exponents(D);
            CHECK(e.mu0 > 0.0);
            CHECK(e.mu_inf > 0.0);
        }
    }

    TEST_CASE("two-sided envelopes for the rescaled symbols") {
        // Fits C, C', M, M' with C g_lo - M <= f <= C' g_hi + M' on a 41x41 grid for 20 t values.
        auto fit = [](auto f, auto glo, auto ghi) {
            double c = INFINITY, cp = 0.0;
            std::vector<std::array<double, 3>> pts;
            for (int k = 1; k <= 20; ++k) {
                double t = k / 20.0;
                for (int i = 0; i <= 40; ++i)
                    for (int j = 0; j <= 40; ++j) {
                        double eta = -5.0 + 0.25 * i, zeta = -5.0 + 0.25 * j;
                        double v = f(t, eta, zeta), lo = glo(eta, zeta), hi = ghi(eta, zeta);
                        if (lo >= 1.0) c = std::min(c, v / lo);
                        if (hi >= 1.0) cp = std::max(cp, v / hi);
                        pts.push_back({v, lo, hi});
                    }
            }
            double m = 0.0, mp = 0.0;
            for (auto [v, lo, hi] : pts) {
                m = std::max(m, c * lo - v);
                mp = std::max(mp, v - cp * hi);
            }
            CHECK(c > 0.0);
            CHECK(std::isfinite(c));
            CHECK(cp > 0.0);
            CHECK(std::isfinite(cp));
            CHECK(std::isfinite(m));
            CHECK(std::isfinite(mp));
            for (auto [v, lo, hi] : pts) {
                CHECK(c * lo - m <= v + 1e-9);
                CHECK(v <= cp * hi + mp + 1e-9);
            }
        };
        fit([](double t, double e, double z) { return std::pow(std::pow(t, 0.25) * e + z * z, 2) + std::pow(e, 4); },
            [](double e, double z) { return std::pow(z, 4) + std::pow(e, 4); },
            [](double e, double z) { return std::pow(z, 4) + std::pow(e, 4); });
        fit([](double t, double e, double z) { return e * e + std::pow(std::pow(t, 0.25) * e - z * z, 4); },
            [](double e, double z) { return e * e + std::pow(z, 4); },
            [](double e, double z) { return std::pow(e, 4) + std::pow(z, 8); });
    }

    TEST_CASE("quasi-triangle inequality constant") {
        // eps P(xi) <= P(zeta + xi) + P(zeta) for P = x1^4 + x2^4; convexity of x^4 gives eps >= 1/8
        auto P = [](double a, double b) { return a * a * a * a + b * b * b * b; };
        double eps = INFINITY;
        for (int i0 = 0; i0 < 31; ++i0)
            for (int i1 = 0; i1 < 31; ++i1) {
                double x0 = -3.0 + 0.2 * i0, x1 = -3.0 + 0.2 * i1;
                double px = P(x0, x1);
                if (px == 0.0) continue;
                for (int j0 = 0; j0 < 31; ++j0)
                    for (int j1 = 0; j1 < 31; ++j1) {
                        double z0 = -3.0 + 0.2 * j0, z1 = -3.0 + 0.2 * j1;
                        eps = std::min(eps, (P(z0 + x0, z1 + x1) + P(z0, z1)) / px);
                    }
            }
        MESSAGE("best empirical eps = " << eps);
        CHECK(eps > 0.0);
        CHECK(eps >= 0.125 - 1e-12);
    }
}
