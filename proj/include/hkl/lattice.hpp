#pragma once

#include <complex>
#include <map>
#include <optional>
#include <vector>

#include "hkl/kernel.hpp"
#include "hkl/rational.hpp"
#include "hkl/symbols.hpp"

namespace hkl::lattice {

using Point = std::vector<int>;
using cd = std::complex<double>;

struct ExactComplex {
    Rational re, im;
    cd to_complex() const { return {re.to_double(), im.to_double()}; }
};

/** \brief Finitely supported function Z^d -> C stored densely on its bounding box.
 *
 * Builtin datasets also keep their exact rational entries.
 */
class LatticeFunction {
  public:
    explicit LatticeFunction(int dim = 1);
    static LatticeFunction from_entries(int dim, const std::map<Point, cd>& entries);
    static LatticeFunction from_exact(int dim, const std::map<Point, ExactComplex>& entries);
    // Dense data on the box lo + [0, shape); zeros on the boundary are trimmed.
    static LatticeFunction from_dense(Point lo, std::vector<int> shape, std::vector<cd> data);
    static LatticeFunction delta(int dim, Point x0 = {});

    int dim() const { return dim_; }
    bool empty() const { return data_.empty(); }
    const Point& lo() const { return lo_; }
    const std::vector<int>& shape() const { return shape_; }
    const std::vector<cd>& data() const { return data_; }
    Point hi() const;  // inclusive
    const std::optional<std::map<Point, ExactComplex>>& exact() const { return exact_; }

    cd at(const Point& x) const;
    std::map<Point, cd> entries() const;  // nonzero values
    std::size_t support_size() const;
    double sup_norm() const;
    double l1_norm() const;
    cd sum() const;
    std::optional<ExactComplex> exact_sum() const;

  private:
    int dim_;
    Point lo_;
    std::vector<int> shape_;
    std::vector<cd> data_;
    std::optional<std::map<Point, ExactComplex>> exact_;
};

LatticeFunction builtin_phi();
LatticeFunction builtin_psi();

LatticeFunction convolve(const LatticeFunction& f, const LatticeFunction& g);

enum class Method { direct_binary, dft };

struct DftPower {
    LatticeFunction values;  // one period, laid out around n times the support centre
    std::vector<int> grid;   // N per axis
    double alias_change = 0.0;  // relative sup-norm change at the last doubling
    bool exact_period = false;  // grid covers the whole support of f^(n)
};

// f^(n) on a fixed torus grid (one period of the N-periodization).
DftPower conv_power_dft_fixed(const LatticeFunction& f, unsigned n, const std::vector<int>& grid);
// Doubles the grid until the sup-norm settles to 1e-9 relative.
DftPower conv_power_dft(const LatticeFunction& f, unsigned n, std::vector<int> grid = {});
LatticeFunction conv_power(const LatticeFunction& f, unsigned n, Method method = Method::dft,
                           const std::vector<int>& grid = {});

// sum_x f(x) e^{i x.xi}
cd fourier_eval(const LatticeFunction& f, const std::vector<double>& xi);

struct Maximizer {
    std::vector<double> xi;
    double modulus = 0.0;
};
// Global maximizers of |f-hat| on the torus (-pi, pi]^d.
std::vector<Maximizer> max_modulus_search(const LatticeFunction& f, int grid_per_axis = 64, int refine_iters = 60);

struct LLTSpec {
    symbols::SymbolDecomposition D;  // carries the scaled symbol
    std::vector<double> xi0, alpha;
    double mu = 0.0;  // 0: take mu_inf of D
    double mu_phi() const;
};

struct ShellReport {
    double t = 0.0;
    double max_ratio = 0.0;  // max |R| / P on the shell
};

struct ExpansionReport {
    std::vector<ShellReport> shells;
    bool pass = false;
};

// R = log(f-hat(xi + xi0) / f-hat(xi0)) - i alpha.xi + P(xi) on shells xi = T(t^G xi').
ExpansionReport expansion_residual(const LatticeFunction& f, const LLTSpec& spec, std::vector<double> shell_t = {},
                                   int samples = 200, std::uint64_t seed = symbols::kDefaultSeed);
// The complex R above at one point.
cd expansion_remainder(const LatticeFunction& f, const LLTSpec& spec, const std::vector<double>& xi);

struct OneSidedMargin {
    double delta = 0.0;  // min of 1 - Re R / P over the sampled region
    std::size_t samples = 0;
    bool holds() const { return delta > 0.0; }
};
// Re R <= (1 - delta) P on {0 < P < c}, sampled on a uniform grid.
OneSidedMargin one_sided_margin(const LatticeFunction& f, const LLTSpec& spec, double c = 1e-3, int points = 201);

struct Window {
    Point lo, hi;  // inclusive
};

struct LLTReport {
    unsigned n = 0;
    double mu = 0.0;
    double sup_residual = 0.0;
    double sup_residual_scaled = 0.0;
    double attractor_at_zero_scaled = 0.0;  // n^mu H_P^n(0) (real part)
    double clipped_mass = 0.0;               // relative l1 mass outside the window
    Window window;
    std::vector<std::vector<double>> axes;
    std::vector<cd> lattice_values, attractor_values;  // row-major over axes
};

LLTReport llt_compare(const LatticeFunction& f, const LLTSpec& spec, unsigned n, const kernel::QuadratureSpec& qspec = {},
                      std::optional<Window> window = std::nullopt);

struct CurvePoint {
    unsigned n = 0;
    double supnorm = 0.0, scaled = 0.0;
};
std::vector<CurvePoint> supnorm_curve(const LatticeFunction& f, const std::vector<unsigned>& n_list, double mu);

}  // namespace hkl::lattice
