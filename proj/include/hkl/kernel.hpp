#pragma once

#include <complex>
#include <functional>
#include <optional>
#include <vector>

#include "hkl/symbols.hpp"

namespace hkl::kernel {

enum class Rule { gauss_legendre, trapezoid };

/** \brief Controls every continuous integral.
 *
 * Empty half_widths are derived from single-axis probes of the exponent
 * (smallest r with S(r e_j) >= ln(1/tail_tol), inflated by 1.5). The boundary
 * of the box is then sampled; faces where the tail bound fails are widened
 * when refine is set, otherwise the call fails.
 */
struct QuadratureSpec {
    std::vector<double> half_widths;
    std::vector<int> nodes_per_axis;  // empty: 96 per axis
    Rule rule = Rule::gauss_legendre;
    double tail_tol = 2.319522830243569e-16;  // e^-36
    bool refine = true;
    double rel_tol = 1e-10;  // convergence between successive node doublings
    int max_doublings = 12;

    void check(int dim) const;
};

struct KernelSample {
    double t = 0.0;
    std::vector<double> x;
    std::complex<double> value;
    double est_error = 0.0;
};

struct Estimate {
    double value = 0.0;
    double est_error = 0.0;
};

using RealFn = std::function<double(const double*)>;
using ComplexFn = std::function<std::complex<double>(const double*)>;

struct IntegralResult {
    std::complex<double> value;
    double est_error = 0.0;
    double abs_integral = 0.0;  // integral of |exp(-S)|
    std::vector<double> half_widths;
    std::vector<int> nodes;
};

// Gauss-Legendre nodes and weights on [-1, 1].
const std::pair<std::vector<double>, std::vector<double>>& gauss_legendre(int n);

// Box half-widths for exp(-re_S); see QuadratureSpec.
std::vector<double> choose_domain(int dim, const RealFn& re_S, const QuadratureSpec& spec);

// integral over R^dim of exp(-S(xi)) exp(-i x.xi) dxi (no 2 pi factors).
IntegralResult integrate_exp(int dim, const ComplexFn& S, const RealFn& re_S, const std::vector<double>& x,
                             const QuadratureSpec& spec);
IntegralResult integrate_exp(int dim, const RealFn& S, const std::vector<double>& x, const QuadratureSpec& spec);

struct GridResult {
    std::vector<std::vector<double>> axes;  // x coordinates per axis
    std::vector<std::complex<double>> values;  // row-major over axes
    double est_error = 0.0;                    // max over the grid
};

// Same integral on a tensor grid of x values, contracting one axis at a time.
GridResult integrate_exp_grid(int dim, const ComplexFn& S, const RealFn& re_S,
                              const std::vector<std::vector<double>>& axes, const QuadratureSpec& spec);

// (2 pi)^-d integral of exp(-t P) exp(-i x.xi).
KernelSample kernel_eval(const symbols::PolySymbol& P, double t, const std::vector<double>& x,
                         const QuadratureSpec& spec = {});
GridResult kernel_grid(const symbols::PolySymbol& P, double t, const std::vector<std::vector<double>>& axes,
                       const QuadratureSpec& spec = {});

// H_P^t(0); imaginary residue folded into est_error.
Estimate phi_naive(const symbols::PolySymbol& P, double t, const QuadratureSpec& spec = {});

// Rescaled representations. The decomposition is assumed validated.
// t >= 1: t^-mu_inf (2 pi)^-d int exp(-P1(eta) - P2(t^{E2-E1} eta - Q(zeta)))
Estimate phi_rescaled_large(const symbols::SymbolDecomposition& D, double t, const QuadratureSpec& spec = {});
// 0 < t <= 1: t^-mu0 (2 pi)^-d int exp(-P1(t^{E1-E2} eta + Q(zeta)) - P2(eta))
Estimate phi_rescaled_small(const symbols::SymbolDecomposition& D, double t, const QuadratureSpec& spec = {});
// Picks the representation by t.
Estimate phi(const symbols::SymbolDecomposition& D, double t, const QuadratureSpec& spec = {});

struct LimitConstant {
    double value = 0.0;
    double est_error = 0.0;
    std::optional<double> closed_form;  // sums of pure even powers only
};

// H^1_{P}(0) for a homogeneous limit symbol.
LimitConstant limit_constant(const symbols::PolySymbol& Plimit, const QuadratureSpec& spec = {});
// prod Gamma(1 + 1/m_j) c_j^{-1/m_j} / pi when P = sum c_j xi_j^{m_j} with even m_j.
std::optional<double> pure_power_constant(const symbols::PolySymbol& P);

struct MeasureEstimate {
    double value = 0.0;
    double coarse = 0.0, fine = 0.0;
    int cells_per_axis = 0;
};

// Lebesgue measure of {P < 1}: midpoint cell counting at two levels plus Richardson.
MeasureEstimate unit_ball_measure(const symbols::PolySymbol& P, double rel_tol = 1e-3);

struct IdentityReport {
    double lhs = 0.0, rhs = 0.0, rel_error = 0.0;
    double measure = 0.0, mu = 0.0;
};

// int exp(-eps P) against m(B_P) Gamma(mu + 1) / eps^mu with mu = tr E.
IdentityReport exp_integral_identity(const symbols::PolySymbol& P, const linops::ScalingMap& E, double eps,
                                     const QuadratureSpec& spec = {});

}  // namespace hkl::kernel
