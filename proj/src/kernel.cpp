#include "hkl/kernel.hpp"

#include <array>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

#include "hkl/workers.hpp"

namespace hkl::kernel {

namespace {

constexpr int kDefaultNodes = 96;
constexpr int kMaxDim = 16;
constexpr double kNodeBudget = 67108864.0;  // 2^26 tensor nodes

using cd = std::complex<double>;

struct AxisRule {
    std::vector<double> x, w;
};

AxisRule axis_rule(Rule rule, int n, double h) {
    AxisRule r;
    if (rule == Rule::gauss_legendre) {
        const auto& [nodes, weights] = gauss_legendre(n);
        r.x.resize(nodes.size());
        r.w.resize(nodes.size());
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            r.x[i] = h * nodes[i];
            r.w[i] = h * weights[i];
        }
        return r;
    }
    if (n < 2) n = 2;
    double step = 2.0 * h / (n - 1);
    for (int i = 0; i < n; ++i) {
        r.x.push_back(-h + step * i);
        r.w.push_back((i == 0 || i == n - 1) ? 0.5 * step : step);
    }
    return r;
}

std::vector<AxisRule> make_rules(const QuadratureSpec& spec, const std::vector<double>& hw, const std::vector<int>& nodes) {
    std::vector<AxisRule> rules;
    for (std::size_t j = 0; j < hw.size(); ++j) rules.push_back(axis_rule(spec.rule, nodes[j], hw[j]));
    return rules;
}

double node_count(const std::vector<int>& nodes) {
    double c = 1.0;
    for (int n : nodes) c *= n;
    return c;
}

// Visits every tensor node with axis 0 fixed to i0; fn(xi, weight).
template <class F>
void visit_slice(const std::vector<AxisRule>& rules, std::size_t i0, F&& fn) {
    const std::size_t d = rules.size();
    std::array<std::size_t, kMaxDim> idx{};
    std::array<double, kMaxDim> xi{};
    xi[0] = rules[0].x[i0];
    while (true) {
        double w = rules[0].w[i0];
        for (std::size_t k = 1; k < d; ++k) {
            xi[k] = rules[k].x[idx[k]];
            w *= rules[k].w[idx[k]];
        }
        fn(xi.data(), w);
        std::size_t k = d;
        while (k > 1) {
            --k;
            if (++idx[k] < rules[k].x.size()) break;
            idx[k] = 0;
            if (k == 1) return;
        }
        if (d == 1) return;
    }
}

struct Sums {
    cd value;
    double abs = 0.0;
};

Sums tensor_sum(const std::vector<AxisRule>& rules, const ComplexFn& S, const RealFn& re_S, const std::vector<double>& x) {
    const std::size_t n0 = rules[0].x.size();
    const std::size_t d = rules.size();
    bool has_phase = false;
    for (double v : x) has_phase = has_phase || v != 0.0;
    std::vector<Sums> tiles(n0);
    for_each_tile(n0, [&](std::size_t i0) {
        Sums s;
        visit_slice(rules, i0, [&](const double* xi, double w) {
            cd e = std::exp(-S(xi));
            double a = std::exp(-re_S(xi));
            if (has_phase) {
                double ph = 0.0;
                for (std::size_t k = 0; k < d; ++k) ph += x[k] * xi[k];
                e *= cd(std::cos(ph), -std::sin(ph));
            }
            s.value += w * e;
            s.abs += w * a;
        });
        tiles[i0] = s;
    });
    Sums total;
    for (const auto& s : tiles) {
        total.value += s.value;
        total.abs += s.abs;
    }
    return total;
}

std::vector<int> initial_nodes(const QuadratureSpec& spec, int dim) {
    if (spec.nodes_per_axis.empty()) return std::vector<int>(static_cast<std::size_t>(dim), kDefaultNodes);
    return spec.nodes_per_axis;
}

std::vector<int> halved(const std::vector<int>& n) {
    std::vector<int> h;
    for (int v : n) h.push_back(std::max(2, v / 2));
    return h;
}

std::vector<int> doubled(const std::vector<int>& n) {
    std::vector<int> h;
    for (int v : n) h.push_back(2 * v);
    return h;
}

// Runs eval(nodes) at successive node doublings until two levels agree.
template <class Eval, class Diff>
auto refine_loop(const QuadratureSpec& spec, std::vector<int> nodes, Eval&& eval, Diff&& diff, double& est_error,
                 std::vector<int>& used) {
    if (!spec.refine) {
        auto coarse = eval(halved(nodes));
        auto fine = eval(nodes);
        est_error = diff(coarse, fine);
        used = nodes;
        return fine;
    }
    auto prev = eval(nodes);
    for (int k = 1; k <= spec.max_doublings; ++k) {
        nodes = doubled(nodes);
        if (node_count(nodes) > kNodeBudget) break;
        auto cur = eval(nodes);
        double err = diff(prev, cur);
        if (err <= spec.rel_tol * cur.abs) {
            est_error = err;
            used = nodes;
            return cur;
        }
        prev = std::move(cur);
    }
    throw ConvergenceError("quadrature did not converge within the node budget");
}

}  // namespace

void QuadratureSpec::check(int dim) const {
    if (dim <= 0 || dim > kMaxDim) throw InputError("quadrature dimension out of range");
    if (!half_widths.empty()) {
        if (static_cast<int>(half_widths.size()) != dim) throw InputError("half_widths length does not match dimension");
        for (double h : half_widths)
            if (!(h > 0.0)) throw InputError("half_widths must be positive");
    }
    if (!nodes_per_axis.empty()) {
        if (static_cast<int>(nodes_per_axis.size()) != dim) throw InputError("nodes_per_axis length does not match dimension");
        for (int n : nodes_per_axis)
            if (n <= 0) throw InputError("nodes_per_axis must be positive");
    }
    if (!(tail_tol > 0.0 && tail_tol < 1.0)) throw InputError("tail_tol must lie in (0, 1)");
    if (!(rel_tol > 0.0)) throw InputError("rel_tol must be positive");
}

const std::pair<std::vector<double>, std::vector<double>>& gauss_legendre(int n) {
    static std::mutex mu;
    static std::map<int, std::pair<std::vector<double>, std::vector<double>>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
    std::vector<double> x(static_cast<std::size_t>(n)), w(static_cast<std::size_t>(n));
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it2 = 0; it2 < 100; ++it2) {
            double p0 = 1.0, p1 = z;
            for (int k = 2; k <= n; ++k) {
                double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            if (n == 1) p0 = 1.0;
            dp = n * (z * p1 - p0) / (z * z - 1.0);
            double dz = p1 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-16) break;
        }
        {
            double p0 = 1.0, p1 = z;
            for (int k = 2; k <= n; ++k) {
                double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            if (n == 1) p0 = 1.0;
            dp = n * (z * p1 - p0) / (z * z - 1.0);
        }
        auto a = static_cast<std::size_t>(i), b = static_cast<std::size_t>(n - 1 - i);
        x[a] = -z;
        x[b] = z;
        w[a] = w[b] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    if (n % 2 == 1) x[static_cast<std::size_t>(n / 2)] = 0.0;
    return cache.emplace(n, std::make_pair(std::move(x), std::move(w))).first->second;
}

std::vector<double> choose_domain(int dim, const RealFn& re_S, const QuadratureSpec& spec) {
    spec.check(dim);
    const double L = -std::log(spec.tail_tol);
    std::vector<double> hw = spec.half_widths;
    std::array<double, kMaxDim> p{};
    if (hw.empty()) {
        for (int j = 0; j < dim; ++j) {
            auto along = [&](double r) {
                p.fill(0.0);
                p[static_cast<std::size_t>(j)] = r;
                double a = re_S(p.data());
                p[static_cast<std::size_t>(j)] = -r;
                return std::min(a, re_S(p.data()));
            };
            double hi = 1e-3;
            while (along(hi) < L) {
                hi *= 2.0;
                if (hi > 1e15) throw DomainError("integrand does not decay along axis " + std::to_string(j + 1));
            }
            double lo = hi / 2.0;
            for (int it = 0; it < 60; ++it) {
                double mid = 0.5 * (lo + hi);
                (along(mid) < L ? lo : hi) = mid;
            }
            hw.push_back(1.5 * hi);
        }
    }
    const int m = dim <= 1 ? 1 : dim == 2 ? 257 : dim == 3 ? 65 : dim == 4 ? 17 : 9;
    for (int iter = 0; iter < 80; ++iter) {
        std::vector<bool> bad(static_cast<std::size_t>(dim), false);
        for (int j = 0; j < dim; ++j) {
            std::vector<int> idx(static_cast<std::size_t>(dim), 0);
            bool done = false;
            while (!done && !bad[static_cast<std::size_t>(j)]) {
                for (int k = 0; k < dim; ++k) {
                    if (k == j) continue;
                    double h = hw[static_cast<std::size_t>(k)];
                    p[static_cast<std::size_t>(k)] = m == 1 ? 0.0 : -h + 2.0 * h * idx[static_cast<std::size_t>(k)] / (m - 1);
                }
                for (double sgn : {-1.0, 1.0}) {
                    p[static_cast<std::size_t>(j)] = sgn * hw[static_cast<std::size_t>(j)];
                    if (re_S(p.data()) < L) bad[static_cast<std::size_t>(j)] = true;
                }
                int k = 0;
                for (; k < dim; ++k) {
                    if (k == j) continue;
                    if (++idx[static_cast<std::size_t>(k)] < m) break;
                    idx[static_cast<std::size_t>(k)] = 0;
                }
                done = k == dim;
            }
        }
        bool any = false;
        for (int j = 0; j < dim; ++j) {
            if (!bad[static_cast<std::size_t>(j)]) continue;
            any = true;
            if (!spec.refine) throw DomainError("tail bound violated on the boundary of axis " + std::to_string(j + 1));
            hw[static_cast<std::size_t>(j)] *= 1.5;
        }
        if (!any) return hw;
    }
    throw ConvergenceError("could not find a box satisfying the tail bound");
}

IntegralResult integrate_exp(int dim, const ComplexFn& S, const RealFn& re_S, const std::vector<double>& x,
                             const QuadratureSpec& spec) {
    if (static_cast<int>(x.size()) != dim) throw InputError("x has wrong length");
    IntegralResult res;
    res.half_widths = choose_domain(dim, re_S, spec);
    auto eval = [&](const std::vector<int>& nodes) {
        return tensor_sum(make_rules(spec, res.half_widths, nodes), S, re_S, x);
    };
    auto diff = [](const Sums& a, const Sums& b) { return std::abs(a.value - b.value); };
    Sums s = refine_loop(spec, initial_nodes(spec, dim), eval, diff, res.est_error, res.nodes);
    res.value = s.value;
    res.abs_integral = s.abs;
    return res;
}

IntegralResult integrate_exp(int dim, const RealFn& S, const std::vector<double>& x, const QuadratureSpec& spec) {
    ComplexFn cs = [&S](const double* xi) { return cd(S(xi), 0.0); };
    return integrate_exp(dim, cs, S, x, spec);
}

namespace {

struct GridSums {
    std::vector<cd> values;
    double abs = 0.0;
};

GridSums grid_sum(const std::vector<AxisRule>& rules, const ComplexFn& S, const RealFn& re_S,
                  const std::vector<std::vector<double>>& axes) {
    using RMat = Eigen::Matrix<cd, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    const std::size_t d = rules.size();
    const std::size_t n0 = rules[0].x.size();
    std::size_t slice = 1;
    for (std::size_t k = 1; k < d; ++k) slice *= rules[k].x.size();
    std::vector<cd> tensor(n0 * slice);
    std::vector<double> abs_tiles(n0, 0.0);
    for_each_tile(n0, [&](std::size_t i0) {
        std::size_t off = i0 * slice;
        double a = 0.0;
        visit_slice(rules, i0, [&](const double* xi, double w) {
            tensor[off++] = w * std::exp(-S(xi));
            a += w * std::exp(-re_S(xi));
        });
        abs_tiles[i0] = a;
    });
    GridSums out;
    for (double a : abs_tiles) out.abs += a;

    std::vector<std::size_t> shape;
    for (const auto& r : rules) shape.push_back(r.x.size());
    for (std::size_t k = 0; k < d; ++k) {
        const std::size_t nk = shape[k], mk = axes[k].size();
        RMat A(static_cast<Eigen::Index>(mk), static_cast<Eigen::Index>(nk));
        for (std::size_t a = 0; a < mk; ++a)
            for (std::size_t i = 0; i < nk; ++i) {
                double ph = axes[k][a] * rules[k].x[i];
                A(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(i)) = cd(std::cos(ph), -std::sin(ph));
            }
        std::size_t outer = 1, inner = 1;
        for (std::size_t j = 0; j < k; ++j) outer *= shape[j];
        for (std::size_t j = k + 1; j < d; ++j) inner *= shape[j];
        std::vector<cd> next(outer * mk * inner);
        for (std::size_t o = 0; o < outer; ++o) {
            Eigen::Map<const RMat> T(tensor.data() + o * nk * inner, static_cast<Eigen::Index>(nk), static_cast<Eigen::Index>(inner));
            Eigen::Map<RMat> O(next.data() + o * mk * inner, static_cast<Eigen::Index>(mk), static_cast<Eigen::Index>(inner));
            O.noalias() = A * T;
        }
        tensor.swap(next);
        shape[k] = mk;
    }
    out.values = std::move(tensor);
    return out;
}

}  // namespace

GridResult integrate_exp_grid(int dim, const ComplexFn& S, const RealFn& re_S,
                              const std::vector<std::vector<double>>& axes, const QuadratureSpec& spec) {
    if (static_cast<int>(axes.size()) != dim) throw InputError("grid axes do not match dimension");
    for (const auto& a : axes)
        if (a.empty()) throw InputError("empty grid axis");
    auto hw = choose_domain(dim, re_S, spec);
    auto eval = [&](const std::vector<int>& nodes) { return grid_sum(make_rules(spec, hw, nodes), S, re_S, axes); };
    auto diff = [](const GridSums& a, const GridSums& b) {
        double m = 0.0;
        for (std::size_t i = 0; i < a.values.size(); ++i) m = std::max(m, std::abs(a.values[i] - b.values[i]));
        return m;
    };
    GridResult res;
    std::vector<int> used;
    GridSums g = refine_loop(spec, initial_nodes(spec, dim), eval, diff, res.est_error, used);
    res.axes = axes;
    res.values = std::move(g.values);
    return res;
}

namespace {

double two_pi_factor(int d) { return std::pow(2.0 * std::numbers::pi, -d); }

}  // namespace

KernelSample kernel_eval(const symbols::PolySymbol& P, double t, const std::vector<double>& x, const QuadratureSpec& spec) {
    if (!(t > 0.0)) throw DomainError("kernel needs t > 0");
    RealFn S = [&](const double* xi) { return t * P(xi); };
    auto r = integrate_exp(P.dim(), S, x, spec);
    double f = two_pi_factor(P.dim());
    return KernelSample{t, x, f * r.value, f * r.est_error};
}

GridResult kernel_grid(const symbols::PolySymbol& P, double t, const std::vector<std::vector<double>>& axes,
                       const QuadratureSpec& spec) {
    if (!(t > 0.0)) throw DomainError("kernel needs t > 0");
    RealFn S = [&](const double* xi) { return t * P(xi); };
    ComplexFn cs = [&](const double* xi) { return cd(S(xi), 0.0); };
    auto g = integrate_exp_grid(P.dim(), cs, S, axes, spec);
    double f = two_pi_factor(P.dim());
    for (auto& v : g.values) v *= f;
    g.est_error *= f;
    return g;
}

Estimate phi_naive(const symbols::PolySymbol& P, double t, const QuadratureSpec& spec) {
    auto k = kernel_eval(P, t, std::vector<double>(static_cast<std::size_t>(P.dim()), 0.0), spec);
    return {k.value.real(), k.est_error + std::abs(k.value.imag())};
}

namespace {

struct Scratch {
    std::array<double, kMaxDim> q{}, u{};
};

}  // namespace

Estimate phi_rescaled_large(const symbols::SymbolDecomposition& D, double t, const QuadratureSpec& spec) {
    if (!(t >= 1.0)) throw DomainError("large-time representation needs t >= 1");
    D.check_shapes();
    const linops::Matrix M = linops::group_element(D.E2 - D.E1, t);
    const int a = D.a;
    RealFn S = [&](const double* xi) {
        Scratch s;
        D.Q.eval(xi + a, s.q.data());
        for (int i = 0; i < a; ++i) {
            double v = -s.q[static_cast<std::size_t>(i)];
            for (int j = 0; j < a; ++j) v += M(i, j) * xi[j];
            s.u[static_cast<std::size_t>(i)] = v;
        }
        return D.P1(xi) + D.P2(s.u.data());
    };
    auto r = integrate_exp(D.d(), S, std::vector<double>(static_cast<std::size_t>(D.d()), 0.0), spec);
    double f = two_pi_factor(D.d()) * std::pow(t, -symbols::exponents(D).mu_inf);
    return {f * r.value.real(), f * (r.est_error + std::abs(r.value.imag()))};
}

Estimate phi_rescaled_small(const symbols::SymbolDecomposition& D, double t, const QuadratureSpec& spec) {
    if (!(t > 0.0 && t <= 1.0)) throw DomainError("small-time representation needs 0 < t <= 1");
    D.check_shapes();
    const linops::Matrix M = linops::group_element(D.E1 - D.E2, t);
    const int a = D.a;
    RealFn S = [&](const double* xi) {
        Scratch s;
        D.Q.eval(xi + a, s.q.data());
        for (int i = 0; i < a; ++i) {
            double v = s.q[static_cast<std::size_t>(i)];
            for (int j = 0; j < a; ++j) v += M(i, j) * xi[j];
            s.u[static_cast<std::size_t>(i)] = v;
        }
        return D.P1(s.u.data()) + D.P2(xi);
    };
    auto r = integrate_exp(D.d(), S, std::vector<double>(static_cast<std::size_t>(D.d()), 0.0), spec);
    double f = two_pi_factor(D.d()) * std::pow(t, -symbols::exponents(D).mu0);
    return {f * r.value.real(), f * (r.est_error + std::abs(r.value.imag()))};
}

Estimate phi(const symbols::SymbolDecomposition& D, double t, const QuadratureSpec& spec) {
    return t <= 1.0 ? phi_rescaled_small(D, t, spec) : phi_rescaled_large(D, t, spec);
}

std::optional<double> pure_power_constant(const symbols::PolySymbol& P) {
    const int d = P.dim();
    std::vector<bool> seen(static_cast<std::size_t>(d), false);
    double c = 1.0;
    for (const auto& [alpha, coef] : P.terms().terms()) {
        int axis = -1;
        for (int k = 0; k < d; ++k) {
            if (alpha[static_cast<std::size_t>(k)] == 0) continue;
            if (axis >= 0) return std::nullopt;
            axis = k;
        }
        if (axis < 0 || seen[static_cast<std::size_t>(axis)] || coef <= 0.0) return std::nullopt;
        int m = alpha[static_cast<std::size_t>(axis)];
        if (m % 2 != 0) return std::nullopt;
        seen[static_cast<std::size_t>(axis)] = true;
        c *= std::tgamma(1.0 + 1.0 / m) * std::pow(coef, -1.0 / m) / std::numbers::pi;
    }
    for (bool s : seen)
        if (!s) return std::nullopt;
    return c;
}

LimitConstant limit_constant(const symbols::PolySymbol& Plimit, const QuadratureSpec& spec) {
    auto k = phi_naive(Plimit, 1.0, spec);
    return {k.value, k.est_error, pure_power_constant(Plimit)};
}

MeasureEstimate unit_ball_measure(const symbols::PolySymbol& P, double rel_tol) {
    const int d = P.dim();
    QuadratureSpec box;
    box.tail_tol = std::exp(-1.0);
    RealFn f = [&](const double* xi) { return P(xi); };
    auto hw = choose_domain(d, f, box);
    auto count = [&](int n) {
        std::vector<double> h(static_cast<std::size_t>(d));
        double vol = 1.0;
        for (int k = 0; k < d; ++k) {
            h[static_cast<std::size_t>(k)] = 2.0 * hw[static_cast<std::size_t>(k)] / n;
            vol *= h[static_cast<std::size_t>(k)];
        }
        std::vector<std::size_t> tiles(static_cast<std::size_t>(n), 0);
        for_each_tile(static_cast<std::size_t>(n), [&](std::size_t i0) {
            std::array<double, kMaxDim> p{};
            std::array<int, kMaxDim> idx{};
            p[0] = -hw[0] + (static_cast<double>(i0) + 0.5) * h[0];
            std::size_t c = 0;
            while (true) {
                for (int k = 1; k < d; ++k)
                    p[static_cast<std::size_t>(k)] = -hw[static_cast<std::size_t>(k)] + (idx[static_cast<std::size_t>(k)] + 0.5) * h[static_cast<std::size_t>(k)];
                if (P(p.data()) < 1.0) ++c;
                int k = d - 1;
                for (; k >= 1; --k) {
                    if (++idx[static_cast<std::size_t>(k)] < n) break;
                    idx[static_cast<std::size_t>(k)] = 0;
                }
                if (k < 1) break;
            }
            tiles[i0] = c;
        });
        std::size_t total = 0;
        for (auto c : tiles) total += c;
        return vol * static_cast<double>(total);
    };
    int fine_n = 1 << std::max(3, 22 / d);
    MeasureEstimate m;
    m.cells_per_axis = fine_n;
    m.coarse = count(fine_n / 2);
    m.fine = count(fine_n);
    m.value = m.fine + (m.fine - m.coarse) / 3.0;
    if (!(std::abs(m.fine - m.coarse) <= rel_tol * m.fine))
        throw ConvergenceError("unit-ball measure did not settle between refinement levels");
    return m;
}

IdentityReport exp_integral_identity(const symbols::PolySymbol& P, const linops::ScalingMap& E, double eps,
                                     const QuadratureSpec& spec) {
    if (!(eps > 0.0)) throw DomainError("identity needs eps > 0");
    if (E.dim() != P.dim()) throw InputError("symbol and scaling map dimensions differ");
    RealFn S = [&](const double* xi) { return eps * P(xi); };
    IdentityReport r;
    r.lhs = integrate_exp(P.dim(), S, std::vector<double>(static_cast<std::size_t>(P.dim()), 0.0), spec).value.real();
    r.mu = linops::trace(E);
    r.measure = unit_ball_measure(P).value;
    r.rhs = r.measure * std::tgamma(r.mu + 1.0) / std::pow(eps, r.mu);
    r.rel_error = std::abs(r.lhs - r.rhs) / std::abs(r.rhs);
    return r;
}

}  // namespace hkl::kernel
