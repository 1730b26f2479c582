#include "hkl/symbols.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <sstream>

namespace hkl::symbols {

RealPoly to_real(const RationalPoly& p) {
    RealPoly r(p.dim());
    for (const auto& [a, c] : p.terms()) r.add_term(a, c.to_double());
    return r;
}

// ---------------------------------------------------------------- PolySymbol

PolySymbol::PolySymbol(int dim) : approx_(dim), exact_(RationalPoly(dim)) { compile(); }

PolySymbol::PolySymbol(RationalPoly exact) : approx_(to_real(exact)), exact_(std::move(exact)) { compile(); }

PolySymbol::PolySymbol(RealPoly approx) : approx_(std::move(approx)) { compile(); }

void PolySymbol::compile() {
    const int d = approx_.dim();
    max_exp_ = approx_.max_exponents();
    table_offset_.assign(static_cast<std::size_t>(d), 0);
    table_size_ = 0;
    for (int k = 0; k < d; ++k) {
        table_offset_[static_cast<std::size_t>(k)] = table_size_;
        table_size_ += static_cast<std::size_t>(max_exp_[static_cast<std::size_t>(k)]) + 1;
    }
    coef_.clear();
    exps_.clear();
    for (const auto& [a, c] : approx_.terms()) {
        coef_.push_back(c);
        for (int k = 0; k < d; ++k)
            exps_.push_back(static_cast<int>(table_offset_[static_cast<std::size_t>(k)]) + a[static_cast<std::size_t>(k)]);
    }
}

double PolySymbol::operator()(const double* x) const {
    double stack_tab[256];
    std::vector<double> heap_tab;
    double* tab = stack_tab;
    if (table_size_ > 256) {
        heap_tab.resize(table_size_);
        tab = heap_tab.data();
    }
    const std::size_t d = max_exp_.size();
    for (std::size_t k = 0; k < d; ++k) {
        double* t = tab + table_offset_[k];
        t[0] = 1.0;
        for (int e = 1; e <= max_exp_[k]; ++e) t[e] = t[e - 1] * x[k];
    }
    double sum = 0.0, comp = 0.0;
    const int* ex = exps_.data();
    for (double c : coef_) {
        double v = c;
        for (std::size_t k = 0; k < d; ++k) v *= tab[ex[k]];
        ex += d;
        double s = sum + v;
        if (std::abs(sum) >= std::abs(v))
            comp += (sum - s) + v;
        else
            comp += (v - s) + sum;
        sum = s;
    }
    return sum + comp;
}

double PolySymbol::eval(const std::vector<double>& x) const {
    if (static_cast<int>(x.size()) != dim()) throw InputError("evaluation point has wrong length");
    return (*this)(x.data());
}

Rational PolySymbol::eval_exact(const std::vector<Rational>& x) const {
    if (!exact_) throw DomainError("symbol has no exact coefficients");
    return exact_->eval(x);
}

PolySymbol PolySymbol::scaled(const Rational& c) const {
    if (exact_) return PolySymbol(exact_->scaled(c));
    return PolySymbol(approx_.scaled(c.to_double()));
}

PolySymbol PolySymbol::scaled(double c) const { return PolySymbol(approx_.scaled(c)); }

std::string PolySymbol::str() const {
    std::ostringstream os;
    bool first = true;
    auto emit = [&](const MultiIndex& a, const std::string& c) {
        if (!first) os << " + ";
        first = false;
        os << c;
        for (std::size_t k = 0; k < a.size(); ++k) {
            if (a[k] == 0) continue;
            os << "*x" << (k + 1);
            if (a[k] > 1) os << "^" << a[k];
        }
    };
    if (exact_)
        for (const auto& [a, c] : exact_->terms()) emit(a, c.str());
    else
        for (const auto& [a, c] : approx_.terms()) {
            std::ostringstream cs;
            cs.precision(17);
            cs << c;
            emit(a, cs.str());
        }
    if (first) os << "0";
    return os.str();
}

PolySymbol operator+(const PolySymbol& a, const PolySymbol& b) {
    if (a.exact() && b.exact()) return PolySymbol(*a.exact() + *b.exact());
    return PolySymbol(a.terms() + b.terms());
}

PolySymbol operator-(const PolySymbol& a, const PolySymbol& b) {
    if (a.exact() && b.exact()) return PolySymbol(*a.exact() - *b.exact());
    return PolySymbol(a.terms() - b.terms());
}

PolySymbol operator*(const PolySymbol& a, const PolySymbol& b) {
    if (a.exact() && b.exact()) return PolySymbol(*a.exact() * *b.exact());
    return PolySymbol(a.terms() * b.terms());
}

PolySymbol pow(const PolySymbol& a, unsigned e) {
    if (a.exact()) return PolySymbol(a.exact()->pow(e));
    return PolySymbol(a.terms().pow(e));
}

PolySymbol compose(const PolySymbol& p, const std::vector<PolySymbol>& subs) {
    bool exact = p.has_exact();
    for (const auto& s : subs) exact = exact && s.has_exact();
    if (exact) {
        std::vector<RationalPoly> e;
        e.reserve(subs.size());
        for (const auto& s : subs) e.push_back(*s.exact());
        return PolySymbol(p.exact()->compose(e));
    }
    std::vector<RealPoly> r;
    r.reserve(subs.size());
    for (const auto& s : subs) r.push_back(s.terms());
    return PolySymbol(p.terms().compose(r));
}

PolySymbol embed(const PolySymbol& p, int new_dim, int offset) {
    if (p.exact()) return PolySymbol(p.exact()->embed(new_dim, offset));
    return PolySymbol(p.terms().embed(new_dim, offset));
}

PolySymbol variable(int dim, int k) { return PolySymbol(RationalPoly::variable(dim, k)); }

PolySymbol constant(int dim, const Rational& c) { return PolySymbol(RationalPoly::constant(dim, c)); }

// ---------------------------------------------------------------- PolyMap

void PolyMap::eval(const double* z, double* out) const {
    for (std::size_t j = 0; j < components.size(); ++j) out[j] = components[j](z);
}

std::vector<double> PolyMap::eval(const std::vector<double>& z) const {
    if (static_cast<int>(z.size()) != in_dim) throw InputError("map argument has wrong length");
    std::vector<double> out(components.size());
    eval(z.data(), out.data());
    return out;
}

// ---------------------------------------------------------------- decompositions

void SymbolDecomposition::check_shapes() const {
    if (a <= 0 || b < 0) throw InputError("decomposition needs a > 0 and b >= 0");
    if (P1.dim() != a || P2.dim() != a) throw InputError("P1 and P2 must live on R^a");
    if (Q.in_dim != b || Q.out_dim() != a) throw InputError("Q must map R^b to R^a");
    for (const auto& c : Q.components)
        if (c.dim() != b) throw InputError("Q components must live on R^b");
    if (E1.dim() != a || E2.dim() != a) throw InputError("E1 and E2 must be a x a");
    if (F1.dim() != b || F2.dim() != b) throw InputError("F1 and F2 must be b x b");
}

SymbolDecomposition pql_family(int p, int q, int l) {
    if (p <= 0 || q <= 0 || l <= 0) throw InputError("p, q, l must be positive");
    SymbolDecomposition D;
    D.a = D.b = 1;
    D.P1 = pow(variable(1, 0), static_cast<unsigned>(q));
    D.P2 = pow(variable(1, 0), static_cast<unsigned>(l));
    D.Q.in_dim = 1;
    D.Q.components = {pow(variable(1, 0), static_cast<unsigned>(p))};
    D.E1 = linops::ScalingMap::diagonal(std::vector<Rational>{Rational(1, q)});
    D.E2 = linops::ScalingMap::diagonal(std::vector<Rational>{Rational(1, l)});
    D.F1 = linops::ScalingMap::diagonal(std::vector<Rational>{Rational(1, std::int64_t(q) * p)});
    D.F2 = linops::ScalingMap::diagonal(std::vector<Rational>{Rational(1, std::int64_t(l) * p)});
    D.family = DiagonalFamily{{Rational(1, q)}, {Rational(1, l)}, {p}, {0}};
    return D;
}

SymbolDecomposition diagonal_family(const std::vector<int>& m1, const std::vector<int>& m2,
                                    const std::vector<int>& alpha, const std::vector<int>& sigma) {
    const std::size_t a = m1.size();
    if (a == 0 || m2.size() != a || alpha.size() != a || sigma.size() != a)
        throw InputError("diagonal family needs equal-length m1, m2, alpha, sigma");
    std::vector<int> inv(a, -1);
    for (std::size_t j = 0; j < a; ++j) {
        int s = sigma[j];
        if (s < 0 || static_cast<std::size_t>(s) >= a || inv[static_cast<std::size_t>(s)] != -1)
            throw InputError("sigma must be a permutation");
        inv[static_cast<std::size_t>(s)] = static_cast<int>(j);
    }
    const int ai = static_cast<int>(a);
    SymbolDecomposition D;
    D.a = D.b = ai;
    D.P1 = PolySymbol(RationalPoly(ai));
    D.P2 = PolySymbol(RationalPoly(ai));
    std::vector<Rational> l1, l2, f1(a), f2(a);
    for (std::size_t j = 0; j < a; ++j) {
        D.P1 = D.P1 + pow(variable(ai, static_cast<int>(j)), static_cast<unsigned>(m1[j]));
        D.P2 = D.P2 + pow(variable(ai, static_cast<int>(j)), static_cast<unsigned>(m2[j]));
        l1.emplace_back(1, m1[j]);
        l2.emplace_back(1, m2[j]);
    }
    D.Q.in_dim = ai;
    for (std::size_t j = 0; j < a; ++j)
        D.Q.components.push_back(pow(variable(ai, sigma[j]), static_cast<unsigned>(alpha[j])));
    for (std::size_t i = 0; i < a; ++i) {
        std::size_t j = static_cast<std::size_t>(inv[i]);
        f1[i] = l1[j] / Rational(alpha[j]);
        f2[i] = l2[j] / Rational(alpha[j]);
    }
    D.E1 = linops::ScalingMap::diagonal(l1);
    D.E2 = linops::ScalingMap::diagonal(l2);
    D.F1 = linops::ScalingMap::diagonal(f1);
    D.F2 = linops::ScalingMap::diagonal(f2);
    D.family = DiagonalFamily{l1, l2, alpha, sigma};
    return D;
}

SymbolDecomposition builtin_intro(std::int64_t scale) {
    SymbolDecomposition D = pql_family(2, 2, 4);
    if (scale != 1) {
        D.P1 = D.P1.scaled(Rational(1, scale));
        D.P2 = D.P2.scaled(Rational(1, scale));
    }
    return D;
}

namespace {

std::vector<PolySymbol> eta_vars(const SymbolDecomposition& D) {
    std::vector<PolySymbol> v;
    for (int j = 0; j < D.a; ++j) v.push_back(variable(D.d(), j));
    return v;
}

std::vector<PolySymbol> q_embedded(const SymbolDecomposition& D) {
    std::vector<PolySymbol> v;
    for (const auto& c : D.Q.components) v.push_back(embed(c, D.d(), D.a));
    return v;
}

}  // namespace

PolySymbol assemble_symbol(const SymbolDecomposition& D) {
    D.check_shapes();
    auto eta = eta_vars(D);
    auto q = q_embedded(D);
    std::vector<PolySymbol> shifted;
    for (int j = 0; j < D.a; ++j) shifted.push_back(eta[static_cast<std::size_t>(j)] + q[static_cast<std::size_t>(j)]);
    return compose(D.P1, shifted) + embed(D.P2, D.d(), 0);
}

PolySymbol dual_symbol(const SymbolDecomposition& D) {
    D.check_shapes();
    auto eta = eta_vars(D);
    auto q = q_embedded(D);
    std::vector<PolySymbol> shifted;
    for (int j = 0; j < D.a; ++j) shifted.push_back(eta[static_cast<std::size_t>(j)] - q[static_cast<std::size_t>(j)]);
    return embed(D.P1, D.d(), 0) + compose(D.P2, shifted);
}

std::vector<PolySymbol> shear(const SymbolDecomposition& D) {
    D.check_shapes();
    auto eta = eta_vars(D);
    auto q = q_embedded(D);
    std::vector<PolySymbol> t;
    for (int j = 0; j < D.a; ++j) t.push_back(eta[static_cast<std::size_t>(j)] - q[static_cast<std::size_t>(j)]);
    for (int k = 0; k < D.b; ++k) t.push_back(variable(D.d(), D.a + k));
    return t;
}

void apply_shear(const SymbolDecomposition& D, const double* xi, double* out) {
    double qbuf[64];
    std::vector<double> qheap;
    double* q = qbuf;
    if (D.a > 64) {
        qheap.resize(static_cast<std::size_t>(D.a));
        q = qheap.data();
    }
    D.Q.eval(xi + D.a, q);
    for (int j = 0; j < D.a; ++j) out[j] = xi[j] - q[j];
    for (int k = 0; k < D.b; ++k) out[D.a + k] = xi[D.a + k];
}

LimitSymbols limit_symbols(const SymbolDecomposition& D) {
    D.check_shapes();
    auto q = q_embedded(D);
    std::vector<PolySymbol> neg;
    for (auto& c : q) neg.push_back(c.scaled(Rational(-1)));
    LimitSymbols L;
    L.P0 = compose(D.P1, q) + embed(D.P2, D.d(), 0);
    L.Pinf = embed(D.P1, D.d(), 0) + compose(D.P2, neg);
    return L;
}

// ---------------------------------------------------------------- sampling checks

std::vector<std::vector<double>> sphere_samples(int dim, std::size_t count, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd(0.0, 1.0);
    std::vector<std::vector<double>> out;
    out.reserve(count);
    std::vector<double> v(static_cast<std::size_t>(dim));
    while (out.size() < count) {
        double n2 = 0.0;
        for (auto& x : v) {
            x = nd(rng);
            n2 += x * x;
        }
        if (n2 < 1e-24) continue;
        double inv = 1.0 / std::sqrt(n2);
        for (auto& x : v) x *= inv;
        out.push_back(v);
    }
    return out;
}

namespace {

constexpr std::size_t kHomogeneitySamples = 500;

template <class F>
double max_sampled_defect(int dim, std::uint64_t seed, F&& defect) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ud(-3.0, 3.0);
    std::vector<double> ts(kHomogeneitySamples);
    for (auto& t : ts) t = std::pow(10.0, ud(rng));
    auto xs = sphere_samples(dim, kHomogeneitySamples, seed + 1);
    double worst = 0.0;
    for (std::size_t i = 0; i < kHomogeneitySamples; ++i) {
        double d = defect(ts[i], xs[i]);
        if (!(d <= worst)) worst = d;  // NaN propagates as failure
    }
    return worst;
}

}  // namespace

HomogeneityReport check_homogeneity(const PolySymbol& P, const linops::ScalingMap& E, double tol,
                                    std::uint64_t seed) {
    if (P.dim() != E.dim()) throw InputError("symbol and scaling map dimensions differ");
    HomogeneityReport r;
    if (P.is_zero()) {
        r.pass = true;
        r.warning = "zero symbol, homogeneity holds vacuously";
        return r;
    }
    if (P.dim() == 0) {
        r.pass = true;
        r.warning = "zero-dimensional symbol";
        return r;
    }
    r.max_defect = max_sampled_defect(P.dim(), seed, [&](double t, const std::vector<double>& xi) {
        Eigen::Map<const Eigen::VectorXd> x(xi.data(), static_cast<Eigen::Index>(xi.size()));
        Eigen::VectorXd y = linops::group_element(E, t) * x;
        double lhs = t * P(xi.data());
        double rhs = P(y.data());
        return std::abs(lhs - rhs) / (1.0 + std::abs(lhs));
    });
    r.pass = r.max_defect <= tol;
    return r;
}

HomogeneityReport check_pair_homogeneity(const PolyMap& Q, const linops::ScalingMap& E,
                                         const linops::ScalingMap& F, double tol, std::uint64_t seed) {
    if (Q.out_dim() != E.dim() || Q.in_dim != F.dim()) throw InputError("map and scaling dimensions differ");
    HomogeneityReport r;
    if (Q.in_dim == 0) {
        r.pass = true;
        r.warning = "map on R^0, homogeneity holds vacuously";
        return r;
    }
    r.max_defect = max_sampled_defect(Q.in_dim, seed, [&](double t, const std::vector<double>& z) {
        Eigen::Map<const Eigen::VectorXd> zv(z.data(), static_cast<Eigen::Index>(z.size()));
        Eigen::VectorXd q(Q.out_dim()), qs(Q.out_dim());
        Q.eval(z.data(), q.data());
        Eigen::VectorXd lhs = linops::group_element(E, t) * q;
        Eigen::VectorXd zs = linops::group_element(F, t) * zv;
        Q.eval(zs.data(), qs.data());
        return (lhs - qs).norm() / (1.0 + lhs.norm());
    });
    r.pass = r.max_defect <= tol;
    return r;
}

const char* to_string(ItemStatus s) {
    switch (s) {
        case ItemStatus::pass: return "pass";
        case ItemStatus::fail: return "fail";
        default: return "inconclusive";
    }
}

ItemStatus ValidationReport::overall() const {
    bool inconclusive = false;
    for (const auto& it : items) {
        if (it.status == ItemStatus::fail) return ItemStatus::fail;
        if (it.status == ItemStatus::inconclusive) inconclusive = true;
    }
    return inconclusive ? ItemStatus::inconclusive : ItemStatus::pass;
}

const ValidationItem* ValidationReport::find(const std::string& name) const {
    for (const auto& it : items)
        if (it.name == name) return &it;
    return nullptr;
}

namespace {

ItemStatus from_verdict(linops::Verdict v) {
    switch (v) {
        case linops::Verdict::yes: return ItemStatus::pass;
        case linops::Verdict::no: return ItemStatus::fail;
        default: return ItemStatus::inconclusive;
    }
}

double min_on_spheres(int dim, std::uint64_t seed, const std::function<double(const double*)>& f) {
    if (dim == 0) return std::numeric_limits<double>::infinity();
    auto xs = sphere_samples(dim, 10000, seed);
    double m = std::numeric_limits<double>::infinity();
    std::vector<double> y(static_cast<std::size_t>(dim));
    for (double radius : {1.0, 1e-2, 1e2}) {
        for (const auto& x : xs) {
            for (std::size_t k = 0; k < y.size(); ++k) y[k] = radius * x[k];
            m = std::min(m, f(y.data()));
        }
    }
    return m;
}

ValidationItem homogeneity_item(const std::string& name, const HomogeneityReport& h) {
    ValidationItem it{name, h.pass ? ItemStatus::pass : ItemStatus::fail, h.max_defect, h.warning};
    if (it.detail.empty()) it.detail = "max relative defect " + std::to_string(h.max_defect);
    return it;
}

}  // namespace

ValidationReport validate_decomposition(const SymbolDecomposition& D, const ValidationTolerances& tol,
                                        std::uint64_t seed) {
    D.check_shapes();
    ValidationReport rep;
    auto definite = [&](const std::string& name, const PolySymbol& P) {
        double m = min_on_spheres(P.dim(), seed, [&](const double* x) { return P(x); });
        rep.items.push_back({name, m > 0.0 ? ItemStatus::pass : ItemStatus::fail, m,
                             "min over sphere samples " + std::to_string(m)});
    };
    definite("P1 positive definite", D.P1);
    definite("P2 positive definite", D.P2);
    {
        std::vector<double> q(static_cast<std::size_t>(D.a));
        double m = min_on_spheres(D.b, seed, [&](const double* z) {
            D.Q.eval(z, q.data());
            double s = 0.0;
            for (double v : q) s += v * v;
            return std::sqrt(s);
        });
        rep.items.push_back({"Q nondegenerate", m > 0.0 ? ItemStatus::pass : ItemStatus::fail, m,
                             D.b == 0 ? "map on R^0" : "min |Q| over sphere samples " + std::to_string(m)});
    }
    rep.items.push_back(homogeneity_item("P1 homogeneous w.r.t. E1", check_homogeneity(D.P1, D.E1, tol.homogeneity, seed)));
    rep.items.push_back(homogeneity_item("P2 homogeneous w.r.t. E2", check_homogeneity(D.P2, D.E2, tol.homogeneity, seed)));
    rep.items.push_back(homogeneity_item("Q homogeneous w.r.t. (E1,F1)",
                                         check_pair_homogeneity(D.Q, D.E1, D.F1, tol.homogeneity, seed)));
    rep.items.push_back(homogeneity_item("Q homogeneous w.r.t. (E2,F2)",
                                         check_pair_homogeneity(D.Q, D.E2, D.F2, tol.homogeneity, seed)));
    double c = linops::commutator_norm(D.E1, D.E2);
    rep.items.push_back({"[E1,E2] = 0", c <= tol.commutator ? ItemStatus::pass : ItemStatus::fail, c,
                         "Frobenius norm " + std::to_string(c)});
    auto diff = D.E1 - D.E2;
    auto ne = linops::is_non_expanding(diff);
    rep.items.push_back({"E1-E2 non-expanding", from_verdict(ne.verdict), ne.min_real_part, ne.detail});
    auto c1 = linops::is_contracting(D.E1);
    rep.items.push_back({"E1 contracting", from_verdict(c1.verdict), c1.min_real_part, c1.detail});
    auto c2 = linops::is_contracting(D.F2);
    rep.items.push_back({"F2 contracting", from_verdict(c2.verdict), c2.min_real_part, c2.detail});
    rep.contracting_difference = linops::is_contracting(diff).verdict == linops::Verdict::yes;
    return rep;
}

// ---------------------------------------------------------------- exponents

std::pair<Rational, Rational> diagonal_family_exponents(const std::vector<Rational>& lambda1,
                                                        const std::vector<Rational>& lambda2,
                                                        const std::vector<int>& alpha) {
    if (lambda1.size() != lambda2.size() || lambda1.size() != alpha.size())
        throw InputError("family vectors must have equal length");
    Rational mu0(0), muinf(0);
    for (std::size_t j = 0; j < alpha.size(); ++j) {
        mu0 += lambda2[j] + lambda1[j] / Rational(alpha[j]);
        muinf += lambda1[j] + lambda2[j] / Rational(alpha[j]);
    }
    return {mu0, muinf};
}

Exponents exponents(const SymbolDecomposition& D) {
    D.check_shapes();
    Exponents e;
    e.mu0 = linops::trace(D.E2) + linops::trace(D.F1);
    e.mu_inf = linops::trace(D.E1) + linops::trace(D.F2);
    auto te1 = linops::exact_trace(D.E1), te2 = linops::exact_trace(D.E2);
    auto tf1 = linops::exact_trace(D.F1), tf2 = linops::exact_trace(D.F2);
    if (te2 && tf1) e.mu0_exact = *te2 + *tf1;
    if (te1 && tf2) e.mu_inf_exact = *te1 + *tf2;
    if (D.family) {
        auto [m0, mi] = diagonal_family_exponents(D.family->lambda1, D.family->lambda2, D.family->alpha);
        e.family_mu0 = m0;
        e.family_mu_inf = mi;
    }
    return e;
}

}  // namespace hkl::symbols
