#include "hkl/perturb.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "hkl/errors.hpp"
#include "hkl/workers.hpp"

namespace hkl::perturb {

using symbols::ItemStatus;
using symbols::PolySymbol;
using cd = std::complex<double>;

const char* to_string(Kind k) {
    switch (k) {
        case Kind::polynomial: return "polynomial";
        case Kind::radial_power: return "radial_power";
        case Kind::composed: return "composed";
    }
    return "?";
}

Perturbation Perturbation::zero(int dim) { return polynomial(PolySymbol(dim)); }

Perturbation Perturbation::polynomial(PolySymbol re, PolySymbol im) {
    if (re.dim() != im.dim()) throw InputError("real and imaginary parts differ in dimension");
    if (re.dim() <= 0) throw InputError("perturbation dimension must be positive");
    Perturbation p;
    p.kind_ = Kind::polynomial;
    p.dim_ = re.dim();
    p.re_ = std::move(re);
    p.im_ = std::move(im);
    return p;
}

Perturbation Perturbation::polynomial(PolySymbol re) {
    int d = re.dim();
    return polynomial(std::move(re), PolySymbol(d));
}

Perturbation Perturbation::radial_power(int dim, double k) {
    if (dim <= 0) throw InputError("perturbation dimension must be positive");
    if (!(k > 0.0) || !std::isfinite(k)) throw InputError("radial power needs k > 0");
    Perturbation p;
    p.kind_ = Kind::radial_power;
    p.dim_ = dim;
    p.re_ = PolySymbol(dim);
    p.im_ = PolySymbol(dim);
    p.k_ = k;
    return p;
}

Perturbation Perturbation::composed(const PolySymbol& P, const std::vector<Rational>& q) {
    if (q.empty() || q[0] != Rational(1)) throw InputError("composed perturbation needs q'(0) = 1");
    // q(l) - l = l^2 sum_{j>=2} q_j l^{j-2}, sampled on l > 0
    for (int e = -16; e <= 16; ++e) {
        double l = std::pow(10.0, e / 2.0), s = 0.0;
        for (std::size_t j = q.size(); j-- > 1;) s = s * l + q[j].to_double();
        if (s < 0.0) throw InputError("composed perturbation needs q(l) >= l for l >= 0");
    }
    PolySymbol r(P.dim());
    PolySymbol pj = P;
    for (std::size_t j = 1; j < q.size(); ++j) {
        pj = pj * P;
        if (q[j] != Rational(0)) r = r + pj.scaled(q[j]);
    }
    Perturbation p = polynomial(std::move(r));
    p.kind_ = Kind::composed;
    p.q_ = q;
    return p;
}

bool Perturbation::is_zero() const { return kind_ != Kind::radial_power && re_.is_zero() && im_.is_zero(); }

double Perturbation::real_part(const double* xi) const {
    if (kind_ != Kind::radial_power) return re_(xi);
    double r2 = 0.0;
    if (pre_.empty()) {
        for (int j = 0; j < dim_; ++j) r2 += xi[j] * xi[j];
    } else {
        for (const auto& c : pre_) {
            double y = c(xi);
            r2 += y * y;
        }
    }
    return std::pow(r2, k_);
}

cd Perturbation::operator()(const double* xi) const {
    if (kind_ == Kind::radial_power) return {real_part(xi), 0.0};
    return {re_(xi), im_.is_zero() ? 0.0 : im_(xi)};
}

Perturbation Perturbation::sheared(const symbols::SymbolDecomposition& D) const {
    if (D.d() != dim_) throw InputError("perturbation and decomposition dimensions differ");
    auto T = symbols::shear(D);
    Perturbation p = *this;
    if (kind_ == Kind::radial_power) {
        if (pre_.empty()) {
            p.pre_ = T;
        } else {
            for (auto& c : p.pre_) c = symbols::compose(c, T);
        }
        return p;
    }
    p.re_ = symbols::compose(re_, T);
    p.im_ = symbols::compose(im_, T);
    return p;
}

std::string Perturbation::str() const {
    std::ostringstream os;
    switch (kind_) {
        case Kind::radial_power: os << "|xi|^" << 2.0 * k_; break;
        case Kind::composed:
        case Kind::polynomial:
            os << re_.str();
            if (!im_.is_zero()) os << " + i(" << im_.str() << ")";
            break;
    }
    return os.str();
}

void ProbeSpec::check() const {
    if (!(half_width > 0.0) || points < 2) throw InputError("probe box is degenerate");
    for (std::size_t i = 0; i < t_grid.size(); ++i) {
        if (!(t_grid[i] > 0.0)) throw InputError("probe t grid must be positive");
        if (i > 0 && !(t_grid[i] < t_grid[i - 1])) throw InputError("probe t grid must be strictly decreasing");
    }
    if (t_grid.size() == 1) throw InputError("probe t grid needs at least two points");
}

std::vector<double> default_t_grid() {
    std::vector<double> t;
    for (int e = 1; e <= 20; ++e) t.push_back(std::pow(10.0, -e));
    return t;
}

namespace {

std::vector<std::vector<double>> box_grid(int d, double h, int m) {
    std::vector<std::vector<double>> pts;
    std::vector<int> idx(static_cast<std::size_t>(d), 0);
    while (true) {
        std::vector<double> p(static_cast<std::size_t>(d));
        for (int k = 0; k < d; ++k) p[static_cast<std::size_t>(k)] = -h + 2.0 * h * idx[static_cast<std::size_t>(k)] / (m - 1);
        pts.push_back(std::move(p));
        int k = d - 1;
        for (; k >= 0; --k) {
            if (++idx[static_cast<std::size_t>(k)] < m) break;
            idx[static_cast<std::size_t>(k)] = 0;
        }
        if (k < 0) return pts;
    }
}

}  // namespace

ProbeResult subhomogeneity_probe(const Perturbation& R, const symbols::SymbolDecomposition& D,
                                 const ProbeSpec& spec) {
    return subhomogeneity_probe(R, D, symbols::validate_decomposition(D), spec);
}

ProbeResult subhomogeneity_probe(const Perturbation& R, const symbols::SymbolDecomposition& D,
                                 const symbols::ValidationReport& report, const ProbeSpec& spec) {
    spec.check();
    if (R.dim() != D.d()) throw InputError("perturbation and decomposition dimensions differ");
    if (!report.all_pass()) throw DomainError("decomposition does not pass validation");
    ProbeResult res;
    res.contracting_difference = report.contracting_difference;
    res.t = spec.t_grid.empty() ? default_t_grid() : spec.t_grid;
    const Perturbation Rt = R.sheared(D);
    const auto G = D.G();
    const int d = D.d();
    const auto pts = box_grid(d, spec.half_width, spec.points);
    res.s.assign(res.t.size(), 0.0);
    for_each_tile(res.t.size(), [&](std::size_t i) {
        const double t = res.t[i];
        const linops::Matrix M = linops::group_element(G, t);
        std::vector<double> y(static_cast<std::size_t>(d));
        double s = 0.0;
        for (const auto& p : pts) {
            for (int r = 0; r < d; ++r) {
                double v = 0.0;
                for (int c = 0; c < d; ++c) v += M(r, c) * p[static_cast<std::size_t>(c)];
                y[static_cast<std::size_t>(r)] = v;
            }
            s = std::max(s, std::abs(Rt(y.data())));
        }
        res.s[i] = s / t;
    });

    const std::size_t n = res.t.size();
    const double s1 = res.s.front(), sl = res.s.back();
    std::size_t j = n - 2;
    for (std::size_t i = 0; i + 1 < n; ++i)
        if (res.t[i] >= 10.0 * res.t.back() * (1.0 - 1e-12)) j = i;
    const double sj = res.s[j];
    const double inf = std::numeric_limits<double>::infinity();
    if (sl == 0.0)
        res.slope = sj == 0.0 ? 0.0 : inf;
    else
        res.slope = sj == 0.0 ? -inf : std::log(sj / sl) / std::log(res.t[j] / res.t.back());

    std::ostringstream os;
    os.precision(4);
    if (s1 == 0.0 && sl == 0.0) {
        res.verdict = ItemStatus::pass;
        os << "s vanishes on the grid";
    } else if (sl < 1e-4 * s1 && res.slope >= 0.2) {
        res.verdict = ItemStatus::pass;
        os << "s decays like t^" << res.slope;
    } else if ((std::abs(res.slope) <= 0.05 || res.slope < 0.0) && sl >= 1e-3) {
        if (res.contracting_difference) {
            res.verdict = ItemStatus::fail;
            os << "s does not decay (slope " << res.slope << ", s_last " << sl << ")";
        } else {
            res.verdict = ItemStatus::inconclusive;
            os << "s does not decay but E1-E2 is not contracting";
        }
    } else {
        res.verdict = ItemStatus::inconclusive;
        os << "slope " << res.slope << ", s_last/s_first " << sl / s1;
    }
    res.detail = os.str();
    return res;
}

std::vector<MonomialVerdict> monomial_suite(const symbols::SymbolDecomposition& D,
                                            const std::vector<symbols::MultiIndex>& monomials,
                                            const ProbeSpec& spec) {
    auto report = symbols::validate_decomposition(D);
    std::vector<MonomialVerdict> out;
    for (const auto& a : monomials) {
        symbols::RationalPoly p(D.d());
        bool zero = true;
        for (int v : a) zero = zero && v == 0;
        // the all-zero index stands for the zero perturbation
        if (!zero || static_cast<int>(a.size()) != D.d()) p.add_term(a, Rational(1));
        out.push_back({a, subhomogeneity_probe(Perturbation::polynomial(PolySymbol(p)), D, report, spec)});
    }
    return out;
}

double min_real_part(const Perturbation& R, const std::vector<double>& half_widths, int points_per_axis) {
    const int d = static_cast<int>(half_widths.size());
    if (d != R.dim()) throw InputError("box and perturbation dimensions differ");
    const int m = points_per_axis;
    std::vector<double> mins(static_cast<std::size_t>(m), std::numeric_limits<double>::infinity());
    for_each_tile(static_cast<std::size_t>(m), [&](std::size_t i0) {
        std::vector<double> p(static_cast<std::size_t>(d));
        std::vector<int> idx(static_cast<std::size_t>(d), 0);
        auto coord = [&](int k, int i) {
            double h = half_widths[static_cast<std::size_t>(k)];
            return -h + 2.0 * h * i / (m - 1);
        };
        p[0] = coord(0, static_cast<int>(i0));
        double lo = std::numeric_limits<double>::infinity();
        while (true) {
            for (int k = 1; k < d; ++k) p[static_cast<std::size_t>(k)] = coord(k, idx[static_cast<std::size_t>(k)]);
            lo = std::min(lo, R.real_part(p.data()));
            int k = d - 1;
            for (; k >= 1; --k) {
                if (++idx[static_cast<std::size_t>(k)] < m) break;
                idx[static_cast<std::size_t>(k)] = 0;
            }
            if (k < 1) break;
        }
        mins[i0] = lo;
    });
    double lo = std::numeric_limits<double>::infinity();
    for (double v : mins) lo = std::min(lo, v);
    return lo;
}

namespace {

int check_points(int d) { return d == 1 ? 1001 : d == 2 ? 129 : d == 3 ? 33 : 9; }

void require_nonnegative(const Perturbation& R, const std::vector<double>& hw) {
    if (R.is_zero()) return;
    double lo = min_real_part(R, hw, check_points(R.dim()));
    if (lo < -1e-12) throw DomainError("Re R < 0 on the integration domain (min " + std::to_string(lo) + ")");
}

}  // namespace

kernel::KernelSample perturbed_kernel(const PolySymbol& P, const Perturbation& R, double t, const std::vector<double>& x,
                                      const kernel::QuadratureSpec& spec) {
    if (!(t > 0.0)) throw DomainError("kernel needs t > 0");
    if (R.dim() != P.dim()) throw InputError("perturbation and symbol dimensions differ");
    const int d = P.dim();
    kernel::RealFn base = [&](const double* xi) { return t * P(xi); };
    require_nonnegative(R, kernel::choose_domain(d, base, spec));
    kernel::ComplexFn S = [&](const double* xi) { return t * (P(xi) + R(xi)); };
    kernel::RealFn re_S = [&](const double* xi) { return t * (P(xi) + R.real_part(xi)); };
    auto r = kernel::integrate_exp(d, S, re_S, x, spec);
    double f = std::pow(2.0 * std::numbers::pi, -d);
    return {t, x, f * r.value, f * r.est_error};
}

kernel::KernelSample perturbed_kernel_rescaled(const symbols::SymbolDecomposition& D, const Perturbation& R, double t,
                                               const std::vector<double>& x, const kernel::QuadratureSpec& spec) {
    if (!(t >= 1.0)) throw DomainError("rescaled perturbed kernel needs t >= 1");
    D.check_shapes();
    const int d = D.d(), a = D.a;
    if (R.dim() != d) throw InputError("perturbation and decomposition dimensions differ");
    if (static_cast<int>(x.size()) != d) throw InputError("x has wrong length");
    const linops::Matrix M = linops::group_element(D.E2 - D.E1, t);
    const linops::Matrix N = linops::group_element(D.G(), 1.0 / t);
    const Perturbation Rt = R.sheared(D);
    bool has_phase = false;
    for (double v : x) has_phase = has_phase || v != 0.0;

    auto base = [&](const double* xi) {
        std::array<double, 64> q{}, u{};
        D.Q.eval(xi + a, q.data());
        for (int i = 0; i < a; ++i) {
            double v = -q[static_cast<std::size_t>(i)];
            for (int j = 0; j < a; ++j) v += M(i, j) * xi[j];
            u[static_cast<std::size_t>(i)] = v;
        }
        return D.P1(xi) + D.P2(u.data());
    };
    auto pull = [&](const double* xi, double* u) {
        for (int r = 0; r < d; ++r) {
            double v = 0.0;
            for (int c = 0; c < d; ++c) v += N(r, c) * xi[c];
            u[r] = v;
        }
    };
    const bool zero = R.is_zero();
    kernel::RealFn re_S = [&](const double* xi) {
        double s = base(xi);
        if (zero) return s;
        std::array<double, 64> u{};
        pull(xi, u.data());
        return s + t * Rt.real_part(u.data());
    };
    kernel::ComplexFn S = [&](const double* xi) {
        cd s(base(xi), 0.0);
        if (zero && !has_phase) return s;
        std::array<double, 64> u{}, w{};
        pull(xi, u.data());
        if (!zero) s += t * Rt(u.data());
        if (has_phase) {
            symbols::apply_shear(D, u.data(), w.data());
            double ph = 0.0;
            for (int k = 0; k < d; ++k) ph += x[static_cast<std::size_t>(k)] * w[static_cast<std::size_t>(k)];
            s += cd(0.0, ph);
        }
        return s;
    };
    if (!zero) {
        kernel::RealFn b = base;
        auto hw = kernel::choose_domain(d, b, spec);
        // Re R~(t^-G xi') on the rescaled box
        std::vector<double> probe(static_cast<std::size_t>(d));
        const int m = check_points(d);
        std::vector<int> idx(static_cast<std::size_t>(d), 0);
        while (true) {
            std::array<double, 64> u{};
            for (int k = 0; k < d; ++k) {
                double h = hw[static_cast<std::size_t>(k)];
                probe[static_cast<std::size_t>(k)] = -h + 2.0 * h * idx[static_cast<std::size_t>(k)] / (m - 1);
            }
            pull(probe.data(), u.data());
            double v = Rt.real_part(u.data());
            if (v < -1e-12) throw DomainError("Re R < 0 on the integration domain");
            int k = d - 1;
            for (; k >= 0; --k) {
                if (++idx[static_cast<std::size_t>(k)] < m) break;
                idx[static_cast<std::size_t>(k)] = 0;
            }
            if (k < 0) break;
        }
    }
    auto r = kernel::integrate_exp(d, S, re_S, std::vector<double>(static_cast<std::size_t>(d), 0.0), spec);
    double f = std::pow(2.0 * std::numbers::pi, -d) * std::pow(t, -linops::trace(D.G()));
    return {t, x, f * r.value, f * r.est_error};
}

kernel::Estimate perturbed_phi(const symbols::SymbolDecomposition& D, const Perturbation& R, double t,
                               const kernel::QuadratureSpec& spec) {
    auto k = perturbed_kernel_rescaled(D, R, t, std::vector<double>(static_cast<std::size_t>(D.d()), 0.0), spec);
    return {k.value.real(), k.est_error + std::abs(k.value.imag())};
}

std::vector<double> little_o_spot_check(const Perturbation& R, const symbols::SymbolDecomposition& D,
                                        const std::vector<double>& t_values, int paths, std::uint64_t seed) {
    const int d = D.d();
    const Perturbation Rt = R.sheared(D);
    const PolySymbol Pt = symbols::dual_symbol(D);
    const auto dirs = symbols::sphere_samples(d, static_cast<std::size_t>(paths), seed);
    std::vector<double> out;
    std::vector<double> u(static_cast<std::size_t>(d));
    for (double t : t_values) {
        const linops::Matrix M = linops::group_element(D.G(), t);
        double m = 0.0;
        for (const auto& p : dirs) {
            for (int r = 0; r < d; ++r) {
                double v = 0.0;
                for (int c = 0; c < d; ++c) v += M(r, c) * p[static_cast<std::size_t>(c)];
                u[static_cast<std::size_t>(r)] = v;
            }
            double den = Pt(u.data());
            if (den > 0.0) m = std::max(m, std::abs(Rt(u.data())) / den);
        }
        out.push_back(m);
    }
    return out;
}

}  // namespace hkl::perturb
