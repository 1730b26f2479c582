#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hkl/linops.hpp"
#include "hkl/polynomial.hpp"

namespace hkl::symbols {

/** \brief Real polynomial symbol R^d -> R with optional exact coefficients.
 *
 * Evaluation runs over a flattened term list in lexicographic order with
 * per-axis power tables and Neumaier summation.
 */
class PolySymbol {
  public:
    explicit PolySymbol(int dim = 0);
    explicit PolySymbol(RationalPoly exact);
    explicit PolySymbol(RealPoly approx);

    int dim() const { return approx_.dim(); }
    bool has_exact() const { return exact_.has_value(); }
    const std::optional<RationalPoly>& exact() const { return exact_; }
    const RealPoly& terms() const { return approx_; }
    bool is_zero() const { return approx_.is_zero(); }

    double operator()(const double* x) const;
    double eval(const std::vector<double>& x) const;
    Rational eval_exact(const std::vector<Rational>& x) const;

    PolySymbol scaled(const Rational& c) const;
    PolySymbol scaled(double c) const;
    std::string str() const;

  private:
    void compile();
    RealPoly approx_;
    std::optional<RationalPoly> exact_;
    std::vector<double> coef_;
    std::vector<int> exps_;  // term-major, dim entries per term
    std::vector<int> max_exp_;
    std::vector<std::size_t> table_offset_;
    std::size_t table_size_ = 0;
};

PolySymbol operator+(const PolySymbol& a, const PolySymbol& b);
PolySymbol operator-(const PolySymbol& a, const PolySymbol& b);
PolySymbol operator*(const PolySymbol& a, const PolySymbol& b);
PolySymbol pow(const PolySymbol& a, unsigned e);
// Substitutes variable k of p by subs[k]; exact when every input is exact.
PolySymbol compose(const PolySymbol& p, const std::vector<PolySymbol>& subs);
PolySymbol embed(const PolySymbol& p, int new_dim, int offset);
PolySymbol variable(int dim, int k);
PolySymbol constant(int dim, const Rational& c);

/** \brief Polynomial map R^b -> R^a. */
struct PolyMap {
    int in_dim = 0;
    std::vector<PolySymbol> components;

    int out_dim() const { return static_cast<int>(components.size()); }
    void eval(const double* z, double* out) const;
    std::vector<double> eval(const std::vector<double>& z) const;
};

// Diagonal-family metadata: lambda_k,j and alpha_j, sigma a permutation.
struct DiagonalFamily {
    std::vector<Rational> lambda1, lambda2;
    std::vector<int> alpha;
    std::vector<int> sigma;  // zero-based
};

struct SymbolDecomposition {
    int a = 0, b = 0;
    PolySymbol P1, P2;
    PolyMap Q;
    linops::ScalingMap E1{linops::Matrix(0, 0)}, E2{linops::Matrix(0, 0)};
    linops::ScalingMap F1{linops::Matrix(0, 0)}, F2{linops::Matrix(0, 0)};
    std::optional<DiagonalFamily> family;

    int d() const { return a + b; }
    // Throws InputError on inconsistent dimensions.
    void check_shapes() const;
    // G = E1 (+) F2, the large-time scaling of the dual symbol.
    linops::ScalingMap G() const { return linops::direct_sum(E1, F2); }
    // E2 (+) F1, the small-time scaling.
    linops::ScalingMap G0() const { return linops::direct_sum(E2, F1); }
};

// P1 = eta^q, P2 = eta^l, Q = zeta^p on R x R with the diagonal exponents.
SymbolDecomposition pql_family(int p, int q, int l);
// a = b, Q(zeta) = (zeta_sigma(j)^alpha_j), P_k = sum_j eta_j^{m_kj} with lambda_kj = 1/m_kj.
SymbolDecomposition diagonal_family(const std::vector<int>& m1, const std::vector<int>& m2,
                                    const std::vector<int>& alpha, const std::vector<int>& sigma);
// The worked example P = (eta + zeta^2)^2 + eta^4, optionally divided by `scale`.
SymbolDecomposition builtin_intro(std::int64_t scale = 1);

// P1(eta + Q(zeta)) + P2(eta).
PolySymbol assemble_symbol(const SymbolDecomposition& D);
// P1(eta) + P2(eta - Q(zeta)).
PolySymbol dual_symbol(const SymbolDecomposition& D);
// The shear T(eta, zeta) = (eta - Q(zeta), zeta) as polynomial components in R^d.
std::vector<PolySymbol> shear(const SymbolDecomposition& D);
void apply_shear(const SymbolDecomposition& D, const double* xi, double* out);

struct LimitSymbols {
    PolySymbol P0, Pinf;
};
LimitSymbols limit_symbols(const SymbolDecomposition& D);

struct HomogeneityReport {
    double max_defect = 0.0;
    bool pass = false;
    std::string warning;
};

constexpr std::uint64_t kDefaultSeed = 42;

HomogeneityReport check_homogeneity(const PolySymbol& P, const linops::ScalingMap& E, double tol = 1e-8,
                                    std::uint64_t seed = kDefaultSeed);
HomogeneityReport check_pair_homogeneity(const PolyMap& Q, const linops::ScalingMap& E,
                                         const linops::ScalingMap& F, double tol = 1e-8,
                                         std::uint64_t seed = kDefaultSeed);

enum class ItemStatus { pass, fail, inconclusive };
const char* to_string(ItemStatus s);

struct ValidationItem {
    std::string name;
    ItemStatus status = ItemStatus::fail;
    double value = 0.0;
    std::string detail;
};

struct ValidationReport {
    std::vector<ValidationItem> items;
    bool contracting_difference = false;
    ItemStatus overall() const;
    bool all_pass() const { return overall() == ItemStatus::pass; }
    const ValidationItem* find(const std::string& name) const;
};

struct ValidationTolerances {
    double homogeneity = 1e-8;
    double commutator = 1e-10;
};

ValidationReport validate_decomposition(const SymbolDecomposition& D, const ValidationTolerances& tol = {},
                                        std::uint64_t seed = kDefaultSeed);

struct Exponents {
    double mu0 = 0.0, mu_inf = 0.0;
    std::optional<Rational> mu0_exact, mu_inf_exact;
    // closed-form values when D carries diagonal-family metadata
    std::optional<Rational> family_mu0, family_mu_inf;
};

Exponents exponents(const SymbolDecomposition& D);
// mu0 = sum(lambda2_j + lambda1_j/alpha_j), mu_inf = sum(lambda1_j + lambda2_j/alpha_j).
std::pair<Rational, Rational> diagonal_family_exponents(const std::vector<Rational>& lambda1,
                                                        const std::vector<Rational>& lambda2,
                                                        const std::vector<int>& alpha);

// Uniform points on the unit sphere of R^dim, fixed by seed.
std::vector<std::vector<double>> sphere_samples(int dim, std::size_t count, std::uint64_t seed);

}  // namespace hkl::symbols
