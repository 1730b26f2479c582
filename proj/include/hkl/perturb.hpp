#pragma once

#include <complex>
#include <string>
#include <vector>

#include "hkl/kernel.hpp"
#include "hkl/symbols.hpp"

namespace hkl::perturb {

enum class Kind { polynomial, radial_power, composed };
const char* to_string(Kind k);

/** \brief A perturbation R : R^d -> C of a symbol.
 *
 * Composed perturbations q(P) - P are expanded to polynomials at construction,
 * so only polynomial and radial kinds are evaluated. A radial perturbation may
 * carry a polynomial substitution applied before the power is taken.
 */
class Perturbation {
  public:
    static Perturbation zero(int dim);
    static Perturbation polynomial(symbols::PolySymbol re, symbols::PolySymbol im);
    static Perturbation polynomial(symbols::PolySymbol re);
    // (|xi|^2)^k
    static Perturbation radial_power(int dim, double k);
    // q(P) - P for q(l) = sum_j q[j-1] l^j; needs q(0) = 0, q'(0) = 1, q(l) >= l.
    static Perturbation composed(const symbols::PolySymbol& P, const std::vector<Rational>& q);

    Kind kind() const { return kind_; }
    int dim() const { return dim_; }
    double k() const { return k_; }
    const symbols::PolySymbol& re() const { return re_; }
    const symbols::PolySymbol& im() const { return im_; }
    const std::vector<Rational>& q() const { return q_; }
    bool is_zero() const;

    std::complex<double> operator()(const double* xi) const;
    double real_part(const double* xi) const;

    // R o T, exact for polynomial data.
    Perturbation sheared(const symbols::SymbolDecomposition& D) const;
    std::string str() const;

  private:
    Kind kind_ = Kind::polynomial;
    int dim_ = 0;
    symbols::PolySymbol re_, im_;
    double k_ = 0.0;
    std::vector<Rational> q_;
    std::vector<symbols::PolySymbol> pre_;  // radial substitution; empty = identity
};

struct ProbeSpec {
    double half_width = 2.0;  // K = [-h, h]^d
    int points = 21;          // per axis
    std::vector<double> t_grid;  // strictly decreasing; empty: 10^-1 ... 10^-20
    void check() const;
};

std::vector<double> default_t_grid();

struct ProbeResult {
    symbols::ItemStatus verdict = symbols::ItemStatus::inconclusive;
    std::vector<double> t, s;
    double slope = 0.0;  // log-log slope of s over the last decade
    bool contracting_difference = false;
    std::string detail;
};

// s(t) = sup_K |R~(t^G xi)| / t with verdict rules on its decay.
ProbeResult subhomogeneity_probe(const Perturbation& R, const symbols::SymbolDecomposition& D,
                                 const ProbeSpec& spec = {});
// Same with a validation report computed by the caller.
ProbeResult subhomogeneity_probe(const Perturbation& R, const symbols::SymbolDecomposition& D,
                                 const symbols::ValidationReport& report, const ProbeSpec& spec = {});

struct MonomialVerdict {
    symbols::MultiIndex alpha;
    ProbeResult result;
};
std::vector<MonomialVerdict> monomial_suite(const symbols::SymbolDecomposition& D,
                                            const std::vector<symbols::MultiIndex>& monomials,
                                            const ProbeSpec& spec = {});

// min Re R on a uniform grid over the box.
double min_real_part(const Perturbation& R, const std::vector<double>& half_widths, int points_per_axis);

// (2 pi)^-d int exp(-t(P + R)) exp(-i x.xi).
kernel::KernelSample perturbed_kernel(const symbols::PolySymbol& P, const Perturbation& R, double t,
                                      const std::vector<double>& x, const kernel::QuadratureSpec& spec = {});

// The same kernel for t >= 1 after xi = T(t^-G xi'):
// t^-mu_inf (2 pi)^-d int exp(-P1(eta') - P2(t^{E2-E1} eta' - Q(zeta')) - t R~(t^-G xi')) exp(-i x.T(t^-G xi')).
kernel::KernelSample perturbed_kernel_rescaled(const symbols::SymbolDecomposition& D, const Perturbation& R, double t,
                                               const std::vector<double>& x, const kernel::QuadratureSpec& spec = {});
kernel::Estimate perturbed_phi(const symbols::SymbolDecomposition& D, const Perturbation& R, double t,
                               const kernel::QuadratureSpec& spec = {});

// max over sampled xi' of |R(xi)| / P(xi) at xi = T(t^G xi'), one value per t.
std::vector<double> little_o_spot_check(const Perturbation& R, const symbols::SymbolDecomposition& D,
                                        const std::vector<double>& t_values, int paths = 50,
                                        std::uint64_t seed = symbols::kDefaultSeed);

}  // namespace hkl::perturb
