#include <cmath>

#include "doctest.h"
#include "hkl/perturb.hpp"

using namespace hkl;
using namespace hkl::perturb;
using symbols::ItemStatus;
using symbols::PolySymbol;

namespace {

PolySymbol mono(std::vector<int> a, std::int64_t c = 1) {
    symbols::RationalPoly p(static_cast<int>(a.size()));
    p.add_term(a, Rational(c));
    return PolySymbol(p);
}

ItemStatus verdict(const Perturbation& R) {
    static const auto D = symbols::builtin_intro();
    static const auto rep = symbols::validate_decomposition(D);
    return subhomogeneity_probe(R, D, rep).verdict;
}

}  // namespace

TEST_CASE("probe verdicts on the worked example") {
    auto D = symbols::builtin_intro();
    auto P = symbols::assemble_symbol(D);
    auto R1 = mono({2, 2}) + mono({1, 4}, 2) + mono({0, 6});
    CHECK(verdict(Perturbation::polynomial(R1)) == ItemStatus::pass);
    CHECK(verdict(Perturbation::radial_power(2, 5)) == ItemStatus::pass);
    CHECK(verdict(Perturbation::composed(P, {Rational(1), Rational(1)})) == ItemStatus::pass);
    CHECK(verdict(Perturbation::polynomial(pow(mono({2, 0}) + mono({0, 2}), 5))) == ItemStatus::pass);
    CHECK(verdict(Perturbation::polynomial(mono({2, 4}))) == ItemStatus::fail);
    CHECK(verdict(Perturbation::polynomial(pow(mono({2, 0}) + mono({0, 2}), 2))) == ItemStatus::fail);
}

TEST_CASE("sheared R1 reduces to eta^2 zeta^2 and s(t) = t^{1/4} sup eta^2 zeta^2") {
    auto D = symbols::builtin_intro();
    auto R1 = Perturbation::polynomial(mono({2, 2}) + mono({1, 4}, 2) + mono({0, 6}));
    auto Rt = R1.sheared(D);
    CHECK(Rt.re().exact()->terms().size() == 1);
    CHECK(Rt.re().exact()->coeff({2, 2}) == Rational(1));
    auto r = subhomogeneity_probe(R1, D);
    for (std::size_t i = 0; i < r.t.size(); ++i) CHECK(r.s[i] == doctest::Approx(16.0 * std::pow(r.t[i], 0.25)).epsilon(1e-12));
    CHECK(r.slope == doctest::Approx(0.25).epsilon(1e-9));
}

TEST_CASE("monomial suite") {
    auto D = symbols::builtin_intro();
    auto out = monomial_suite(D, {{2, 6}, {3, 4}, {4, 4}, {5, 2}, {6, 0}, {8, 0}, {2, 4}, {0, 0}});
    REQUIRE(out.size() == 8);
    for (std::size_t i = 0; i < 6; ++i) CHECK(out[i].result.verdict == ItemStatus::pass);
    CHECK(out[6].result.verdict == ItemStatus::fail);
    CHECK(out[7].result.verdict == ItemStatus::pass);
    CHECK(out[7].result.s.front() == 0.0);
}

TEST_CASE("borderline radial power is inconclusive") {
    CHECK(verdict(Perturbation::radial_power(2, 4.5)) == ItemStatus::inconclusive);
}

TEST_CASE("fail is downgraded without a contracting difference") {
    // E1 = E2 on a Gaussian pair: difference is zero, not contracting
    symbols::SymbolDecomposition D;
    D.a = D.b = 1;
    D.P1 = mono({2});
    D.P2 = mono({2});
    D.Q.in_dim = 1;
    D.Q.components = {mono({1})};
    D.E1 = D.E2 = D.F1 = D.F2 = linops::ScalingMap::diagonal(std::vector<Rational>{Rational(1, 2)});
    auto rep = symbols::validate_decomposition(D);
    REQUIRE(rep.all_pass());
    REQUIRE_FALSE(rep.contracting_difference);
    auto r = subhomogeneity_probe(Perturbation::polynomial(mono({2, 0})), D, rep);
    CHECK(r.verdict == ItemStatus::inconclusive);
}

TEST_CASE("probe input errors") {
    auto D = symbols::builtin_intro();
    auto R = Perturbation::polynomial(mono({2, 2}));
    ProbeSpec bad;
    bad.t_grid = {1e-2, 1e-1};
    CHECK_THROWS_AS(subhomogeneity_probe(R, D, bad), InputError);
    ProbeSpec flat;
    flat.half_width = 0.0;
    CHECK_THROWS_AS(subhomogeneity_probe(R, D, flat), InputError);
    CHECK_THROWS_AS(subhomogeneity_probe(Perturbation::polynomial(mono({2})), D), InputError);
    auto S = D;
    S.F2 = linops::ScalingMap::diagonal(std::vector<double>{-0.125});
    CHECK_THROWS_AS(subhomogeneity_probe(R, S), DomainError);
    auto P = symbols::assemble_symbol(D);
    CHECK_THROWS_AS(Perturbation::composed(P, {Rational(2)}), InputError);
    CHECK_THROWS_AS(Perturbation::composed(P, {Rational(1), Rational(-1)}), InputError);
    CHECK_THROWS_AS(Perturbation::radial_power(2, -1.0), InputError);
}

TEST_CASE("perturbed kernel") {
    auto D = symbols::builtin_intro();
    auto P = symbols::assemble_symbol(D);
    auto z = perturbed_kernel(P, Perturbation::zero(2), 0.8, {0.4, -0.3});
    auto k = kernel::kernel_eval(P, 0.8, {0.4, -0.3});
    CHECK(std::abs(z.value - k.value) <= z.est_error + k.est_error + 1e-15);

    CHECK_THROWS_AS(perturbed_kernel(P, Perturbation::polynomial(mono({3, 0})), 1.0, {0.0, 0.0}), DomainError);
    CHECK_THROWS_AS(perturbed_phi(D, Perturbation::polynomial(mono({3, 0})), 10.0), DomainError);
    CHECK_THROWS_AS(perturbed_phi(D, Perturbation::zero(2), 0.5), DomainError);

    auto R = Perturbation::composed(P, {Rational(1), Rational(1)});
    for (double t : {1.0, 6.0}) {
        auto a = perturbed_kernel(P, R, t, {0.3, -0.2});
        auto b = perturbed_kernel_rescaled(D, R, t, {0.3, -0.2});
        CHECK(std::abs(a.value - b.value) < 1e-12 * std::abs(a.value));
    }
    // purely imaginary perturbation
    auto I = Perturbation::polynomial(PolySymbol(2), mono({1, 1}));
    auto ki = perturbed_kernel(P, I, 1.0, {0.0, 0.0});
    CHECK(std::abs(ki.value) <= kernel::phi_naive(P, 1.0).value + 1e-14);
}

TEST_CASE("perturbed large-time constant") {
    auto D = symbols::builtin_intro();
    auto R = Perturbation::composed(symbols::assemble_symbol(D), {Rational(1), Rational(1)});
    double c = std::pow(1e3, 0.625) * perturbed_phi(D, R, 1e3).value;
    CHECK(c == doctest::Approx(0.0845624).epsilon(0.02));
    double c5 = std::pow(1e5, 0.625) * perturbed_phi(D, Perturbation::radial_power(2, 5), 1e5).value;
    CHECK(c5 == doctest::Approx(0.0845624).epsilon(0.02));
}

TEST_SUITE("properties") {
    TEST_CASE("perturbed kernel is dominated by the unperturbed diagonal") {
        auto D = symbols::builtin_intro();
        auto P = symbols::assemble_symbol(D);
        std::vector<Perturbation> Rs = {Perturbation::composed(P, {Rational(1), Rational(1)}),
                                        Perturbation::radial_power(2, 5),
                                        Perturbation::polynomial(mono({2, 2}), mono({1, 3}))};
        for (const auto& R : Rs)
            for (double t : {0.2, 1.0, 5.0}) {
                auto p = kernel::phi_naive(P, t);
                for (double x1 : {-1.0, 0.0, 0.7})
                    for (double x2 : {-0.5, 0.0, 1.2}) {
                        auto k = perturbed_kernel(P, R, t, {x1, x2});
                        CHECK(std::abs(k.value) <= p.value + 2.0 * (k.est_error + p.est_error) + 1e-14);
                    }
            }
    }

    TEST_CASE("passing probes agree with a direct little-o check") {
        auto D = symbols::builtin_intro();
        auto P = symbols::assemble_symbol(D);
        std::vector<Perturbation> Rs = {Perturbation::polynomial(mono({2, 2}) + mono({1, 4}, 2) + mono({0, 6})),
                                        Perturbation::radial_power(2, 5),
                                        Perturbation::composed(P, {Rational(1), Rational(1)}),
                                        Perturbation::polynomial(mono({3, 4})),
                                        Perturbation::polynomial(mono({5, 2}))};
        for (const auto& R : Rs) {
            REQUIRE(verdict(R) == ItemStatus::pass);
            auto m = little_o_spot_check(R, D, {1e-2, 1e-4, 1e-6, 1e-8, 1e-10});
            for (std::size_t i = 1; i < m.size(); ++i) CHECK(m[i] < m[i - 1]);
            CHECK(m.back() < 1e-2 * m.front());
        }
        auto fail = little_o_spot_check(Perturbation::polynomial(mono({2, 4})), D, {1e-4, 1e-8});
        CHECK(fail.back() > 0.5 * fail.front());
    }

    TEST_CASE("Laplacian power threshold") {
        CHECK(verdict(Perturbation::radial_power(2, 5)) == ItemStatus::pass);
        CHECK(verdict(Perturbation::radial_power(2, 6)) == ItemStatus::pass);
        CHECK(verdict(Perturbation::radial_power(2, 2)) == ItemStatus::fail);
        CHECK(verdict(Perturbation::radial_power(2, 3)) == ItemStatus::fail);
    }

    TEST_CASE("uniform difference decays in the large-time scaling") {
        auto D = symbols::builtin_intro();
        auto R = Perturbation::composed(symbols::assemble_symbol(D), {Rational(1), Rational(1)});
        auto zero = Perturbation::zero(2);
        double prev = INFINITY;
        for (double t : {10.0, 100.0, 1000.0}) {
            // x on the natural scale t^{G*}
            linops::Matrix M = linops::group_element(D.G().transpose(), t);
            double m = 0.0;
            for (double a : {-2.0, -0.5, 0.0, 1.0, 2.5})
                for (double b : {-1.5, 0.0, 0.75}) {
                    Eigen::Vector2d x = M * Eigen::Vector2d(a, b);
                    auto h1 = perturbed_kernel_rescaled(D, R, t, {x[0], x[1]});
                    auto h0 = perturbed_kernel_rescaled(D, zero, t, {x[0], x[1]});
                    m = std::max(m, std::pow(t, 0.625) * std::abs(h1.value - h0.value));
                }
            CHECK(m < prev);
            prev = m;
        }
    }
}
