#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "hkl/lattice.hpp"

using namespace hkl;
using namespace hkl::lattice;

namespace {

LatticeFunction line(std::initializer_list<double> v, int start = 0) {
    std::map<Point, cd> m;
    int x = start;
    for (double a : v) m[{x++}] = a;
    return LatticeFunction::from_entries(1, m);
}

LatticeFunction random_function(std::mt19937_64& rng, int dim, int radius) {
    std::uniform_int_distribution<int> pos(-radius, radius);
    std::normal_distribution<double> val;
    std::map<Point, cd> m;
    for (int i = 0; i < 12; ++i) {
        Point x;
        for (int k = 0; k < dim; ++k) x.push_back(pos(rng));
        m[x] = cd(val(rng), val(rng));
    }
    return LatticeFunction::from_entries(dim, m);
}

double max_diff(const LatticeFunction& a, const LatticeFunction& b) {
    double m = 0.0;
    for (const auto& [x, v] : a.entries()) m = std::max(m, std::abs(v - b.at(x)));
    for (const auto& [x, v] : b.entries()) m = std::max(m, std::abs(v - a.at(x)));
    return m;
}

// Lazy walk (1/4, 1/2, 1/4): log f-hat = 2 log cos(xi/2) = -xi^2/4 + O(xi^4).
LLTSpec lazy_walk_spec() {
    symbols::SymbolDecomposition D;
    D.a = 1;
    D.b = 0;
    symbols::RationalPoly h(1);
    h.add_term({2}, Rational(1, 8));
    D.P1 = D.P2 = symbols::PolySymbol(h);
    D.Q.in_dim = 0;
    D.Q.components = {symbols::PolySymbol(symbols::RationalPoly(0))};
    D.E1 = D.E2 = linops::ScalingMap::diagonal(std::vector<Rational>{Rational(1, 2)});
    D.F1 = D.F2 = linops::ScalingMap::zero(0);
    return {D, {0.0}, {0.0}};
}

LLTSpec intro_spec() { return {symbols::builtin_intro(100), {0.0, 0.0}, {0.0, 0.0}}; }

const double kPi = std::numbers::pi;

}  // namespace

TEST_CASE("builtin datasets and checksums") {
    auto phi = builtin_phi(), psi = builtin_psi();
    REQUIRE(phi.exact_sum().has_value());
    CHECK(phi.exact_sum()->re == Rational(1));
    CHECK(phi.exact_sum()->im == Rational(0));
    CHECK(psi.exact_sum()->re == Rational(1));
    CHECK(psi.exact_sum()->im == Rational(0));
    CHECK(phi.exact()->at({0, 0}).re == Rational(41375061, 12 * 3840000));
    CHECK(phi.exact()->at({1, 0}).im == Rational(969232, 12 * 3840000));
    CHECK(psi.exact()->at({0, 0}).re == Rational(862318, 960000));
    CHECK(phi.support_size() == 47);
    CHECK(psi.support_size() == 21);
    CHECK(std::abs(fourier_eval(phi, {0.0, 0.0}) - 1.0) < 1e-15);
    CHECK(std::abs(fourier_eval(psi, {0.0, 0.0}) - 1.0) < 1e-15);
}

TEST_CASE("phi-hat matches its closed form") {
    auto phi = builtin_phi();
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-kPi, kPi);
    for (int i = 0; i < 50; ++i) {
        double e = u(rng), z = u(rng);
        double se = std::sin(e), sz = std::sin(z), sz2 = std::sin(z / 2), se2 = std::sin(e / 2);
        double closed = (100 - std::pow(se + 4 * sz2 * sz2, 2) - 797.0 / 600 * std::pow(se, 4) - 10 * std::pow(se2, 6) -
                         std::pow(sz, 6) / 6 - 179.0 / 1200 * std::pow(sz, 8) - se * std::pow(sz, 4) / 6 -
                         77.0 / 900 * se * std::pow(sz, 6) - 47.0 / 150 * sz * sz * std::pow(se, 3) +
                         3.0 / 100 * se * se * std::pow(sz, 4)) /
                        100;
        CHECK(std::abs(fourier_eval(phi, {e, z}) - closed) < 1e-14);
    }
}

TEST_CASE("sup distance between phi and psi") {
    // computed from the tables; the printed value 51/20935 does not match them
    auto phi = builtin_phi(), psi = builtin_psi();
    std::map<Point, ExactComplex> diff = *phi.exact();
    for (const auto& [x, v] : *psi.exact()) {
        auto& e = diff[x];
        e.re = e.re - v.re;
        e.im = e.im - v.im;
    }
    Rational best(0);
    Point arg;
    for (const auto& [x, v] : diff) {
        Rational m2 = v.re * v.re + v.im * v.im;
        if (best < m2) {
            best = m2;
            arg = x;
        }
    }
    Rational target(2977, 2880000);
    CHECK(best == target * target);
    CHECK(std::abs(arg[0]) == 1);
    CHECK(arg[1] == 0);
}

TEST_CASE("convolution examples") {
    auto d0 = LatticeFunction::delta(1);
    auto f = line({0.5, 0.5});
    CHECK(max_diff(convolve(d0, f), f) == 0.0);
    auto ff = convolve(f, f);
    CHECK(max_diff(ff, line({0.25, 0.5, 0.25})) < 1e-16);
    auto p4 = conv_power(ff, 4, Method::direct_binary);
    auto p4d = conv_power(ff, 4, Method::dft);
    double binom[] = {1, 8, 28, 56, 70, 56, 28, 8, 1};
    for (int k = 0; k <= 8; ++k) {
        CHECK(p4.at({k}).real() == doctest::Approx(binom[k] / 256.0).epsilon(1e-14));
        CHECK(std::abs(p4d.at({k}) - binom[k] / 256.0) < 1e-15);
    }
    CHECK(max_diff(conv_power(f, 1, Method::direct_binary), f) == 0.0);
    CHECK(max_diff(conv_power(f, 1, Method::dft), f) < 1e-16);
    // shifted support
    auto s = convolve(LatticeFunction::delta(2, {3, -2}), builtin_phi());
    CHECK(s.at({3 + 4, -2 + 8}) == builtin_phi().at({4, 8}));
    CHECK(s.lo() == Point{-1, -10});
}

TEST_CASE("convolution power errors") {
    auto f = line({0.5, 0.5});
    CHECK_THROWS_AS(conv_power(f, 0), InputError);
    CHECK_THROWS_AS(conv_power_dft_fixed(builtin_phi(), 3, {8, 8}), InputError);
    CHECK_THROWS_AS(conv_power_dft_fixed(f, 3, {8, 8}), InputError);
    CHECK_THROWS_AS(convolve(f, builtin_phi()), InputError);
}

TEST_CASE("fourier evaluation") {
    auto d = LatticeFunction::delta(2, {2, -3});
    for (double a : {0.1, 1.7, -2.9}) CHECK(std::abs(fourier_eval(d, {a, 0.4 * a})) == doctest::Approx(1.0).epsilon(1e-15));
    auto f = line({0.25, 0.5, 0.25}, -1);
    CHECK(fourier_eval(f, {0.8}).real() == doctest::Approx(0.5 + 0.5 * std::cos(0.8)).epsilon(1e-15));
    CHECK_THROWS_AS(fourier_eval(f, {0.1, 0.2}), InputError);
}

TEST_CASE("max modulus search") {
    auto m = max_modulus_search(builtin_phi());
    REQUIRE(m.size() == 1);
    CHECK(std::abs(m[0].xi[0]) < 1e-9);
    CHECK(std::abs(m[0].xi[1]) < 1e-9);
    CHECK(m[0].modulus == doctest::Approx(1.0).epsilon(1e-14));
    auto mp = max_modulus_search(builtin_psi());
    REQUIRE(mp.size() == 1);
    CHECK(std::abs(mp[0].xi[0]) < 1e-9);
    auto pascal = max_modulus_search(line({0.25, 0.5, 0.25}));
    REQUIRE(pascal.size() == 1);
    CHECK(std::abs(pascal[0].xi[0]) < 1e-9);
    CHECK(pascal[0].modulus == doctest::Approx(1.0));
    CHECK_THROWS_AS(max_modulus_search(LatticeFunction::delta(2, {1, 1})), DomainError);
    CHECK_THROWS_AS(max_modulus_search(builtin_phi(), 16), InputError);

    // two maximizers: (delta_0 + delta_2)/2 has |f-hat| = |cos xi| with maxima at 0 and pi
    auto two = max_modulus_search(line({0.5, 0.0, 0.5}));
    CHECK(two.size() == 2);
    // off-grid maximizer: f-hat(xi) = e^{i xi}-weighted lazy walk shifted in frequency
    std::map<Point, cd> m2;
    const double w0 = 0.7;
    m2[{-1}] = 0.25 * std::polar(1.0, w0);
    m2[{0}] = 0.5;
    m2[{1}] = 0.25 * std::polar(1.0, -w0);
    auto off = max_modulus_search(LatticeFunction::from_entries(1, m2));
    REQUIRE(off.size() == 1);
    CHECK(off[0].xi[0] == doctest::Approx(w0).epsilon(1e-7));
}

TEST_CASE("expansion residual") {
    auto rep = expansion_residual(builtin_phi(), intro_spec());
    CHECK(rep.pass);
    auto bad = expansion_residual(builtin_psi(), intro_spec());
    CHECK_FALSE(bad.pass);
    CHECK(bad.shells.back().max_ratio > bad.shells.front().max_ratio);

    auto walk = line({0.25, 0.5, 0.25}, -1);
    auto ws = lazy_walk_spec();
    CHECK(std::abs(expansion_remainder(walk, ws, {0.3}) - (2.0 * std::log(std::cos(0.15)) + 0.0225)) < 2e-16);
    for (double xi : {1e-2, 1e-4, 1e-5}) {
        // 2 log cos(xi/2) + xi^2/4 by its Taylor series
        double oracle = -std::pow(xi, 4) / 96.0 - std::pow(xi, 6) / 1440.0 - 17.0 * std::pow(xi, 8) / 322560.0;
        CHECK(std::abs(expansion_remainder(walk, ws, {xi}).real() - oracle) <= 1e-15 * xi * xi);
    }
    auto wr = expansion_residual(walk, ws);
    CHECK(wr.pass);
    for (std::size_t i = 1; i < wr.shells.size(); ++i) CHECK(wr.shells[i].max_ratio < wr.shells[i - 1].max_ratio);

    auto unnormalized = line({0.2, 0.5, 0.2}, -1);
    CHECK_THROWS_AS(expansion_residual(unnormalized, ws), DomainError);
    LLTSpec wrong = intro_spec();
    wrong.xi0 = {0.0};
    CHECK_THROWS_AS(expansion_residual(builtin_phi(), wrong), InputError);
}

TEST_CASE("local limit comparison") {
    auto spec = intro_spec();
    double prev = INFINITY;
    for (unsigned n : {100u, 400u, 1600u}) {
        auto r = llt_compare(builtin_phi(), spec, n);
        CHECK(r.sup_residual_scaled < prev);
        CHECK(r.clipped_mass <= 1e-6);
        prev = r.sup_residual_scaled;
        if (n == 1600) CHECK(r.sup_residual_scaled < 0.1 * r.attractor_at_zero_scaled);
    }
    auto at1000 = llt_compare(builtin_phi(), spec, 1000);
    double h0 = at1000.attractor_at_zero_scaled / std::pow(1000.0, 0.625);
    auto p = conv_power(builtin_phi(), 1000);
    CHECK(std::abs(p.at({0, 0}) - h0) < 0.05 * h0);

    CHECK_THROWS_AS(llt_compare(builtin_phi(), spec, 100, {}, Window{{-2, -2}, {2, 2}}), DomainError);
    CHECK_THROWS_AS(llt_compare(builtin_psi(), spec, 100), DomainError);

    auto walk = line({0.25, 0.5, 0.25}, -1);
    auto smoke = llt_compare(walk, lazy_walk_spec(), 1);
    CHECK(std::isfinite(smoke.sup_residual_scaled));
}

TEST_CASE("supnorm curve") {
    auto d = supnorm_curve(LatticeFunction::delta(2), {1, 10, 100}, 0.625);
    for (const auto& c : d) CHECK(c.supnorm == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_THROWS_AS(supnorm_curve(builtin_phi(), {10, 5}, 0.625), InputError);
    auto c = supnorm_curve(builtin_phi(), {1000}, 0.625);
    CHECK(c[0].scaled == doctest::Approx(1.50).epsilon(0.05 / 1.5));
}

TEST_SUITE("properties") {
    TEST_CASE("Young's inequality and Fourier homomorphism") {
        std::mt19937_64 rng(11);
        std::uniform_real_distribution<double> u(-kPi, kPi);
        for (int trial = 0; trial < 10; ++trial) {
            auto f = random_function(rng, 2, 4), g = random_function(rng, 2, 6);
            auto fg = convolve(f, g);
            CHECK(fg.l1_norm() <= f.l1_norm() * g.l1_norm() * (1 + 1e-14));
            for (int i = 0; i < 10; ++i) {
                std::vector<double> xi = {u(rng), u(rng)};
                cd lhs = fourier_eval(fg, xi), rhs = fourier_eval(f, xi) * fourier_eval(g, xi);
                CHECK(std::abs(lhs - rhs) <= 1e-10 * std::max(std::abs(rhs), 1e-3 * f.l1_norm() * g.l1_norm()));
            }
        }
    }

    TEST_CASE("Parseval for convolution powers") {
        auto phi = builtin_phi();
        const int N = 1024;
        std::vector<double> sq(static_cast<std::size_t>(N) * N);
        for (int i = 0; i < N; ++i)
            for (int j = 0; j < N; ++j)
                sq[static_cast<std::size_t>(i) * N + j] = std::norm(fourier_eval(phi, {2 * kPi * i / N, 2 * kPi * j / N}));
        for (unsigned n : {2u, 8u, 32u}) {
            auto p = conv_power(phi, n);
            double lhs = 0.0;
            for (const auto& v : p.data()) lhs += std::norm(v);
            double rhs = 0.0;
            for (double s : sq) rhs += std::pow(s, n);
            rhs /= static_cast<double>(N) * N;
            CHECK(lhs == doctest::Approx(rhs).epsilon(1e-6));
        }
    }

    TEST_CASE("direct and dft powers agree") {
        auto phi = builtin_phi();
        for (unsigned n : {1u, 2u, 3u, 7u, 16u, 32u}) {
            auto a = conv_power(phi, n, Method::direct_binary);
            auto b = conv_power(phi, n, Method::dft);
            CHECK(max_diff(a, b) <= 1e-9 * a.sup_norm());
        }
    }

    TEST_CASE("alias stability at the converged grid") {
        auto phi = builtin_phi();
        for (unsigned n : {1000u, 10000u}) {
            auto p = conv_power_dft(phi, n);
            std::vector<int> g2;
            for (int v : p.grid) g2.push_back(2 * v);
            auto q = conv_power_dft_fixed(phi, n, g2);
            CHECK(std::abs(q.values.sup_norm() - p.values.sup_norm()) < 1e-9 * p.values.sup_norm());
        }
    }

    TEST_CASE("psi satisfies the one-sided bound") {
        auto m = one_sided_margin(builtin_psi(), intro_spec());
        CHECK(m.holds());
        CHECK(m.samples > 1000);
    }
}
