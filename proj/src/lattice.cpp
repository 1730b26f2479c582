#include "hkl/lattice.hpp"

#include <fftw3.h>

#include <cmath>
#include <limits>
#include <mutex>
#include <numbers>
#include <stdexcept>

#include "hkl/errors.hpp"
#include "hkl/workers.hpp"

namespace hkl::lattice {

namespace {

constexpr std::size_t kMaxTorusPoints = std::size_t{1} << 24;

std::vector<std::size_t> strides_of(const std::vector<int>& shape) {
    std::vector<std::size_t> s(shape.size(), 1);
    for (std::size_t k = shape.size(); k-- > 1;) s[k - 1] = s[k] * static_cast<std::size_t>(shape[k]);
    return s;
}

std::size_t volume(const std::vector<int>& shape) {
    std::size_t v = 1;
    for (int s : shape) v *= static_cast<std::size_t>(s);
    return v;
}

// Calls fn(point, flat) for each lattice point of the box lo + [0, shape).
template <class F>
void for_each_point(const Point& lo, const std::vector<int>& shape, F&& fn) {
    const std::size_t d = shape.size();
    if (d == 0 || volume(shape) == 0) return;
    Point x = lo;
    std::size_t flat = 0;
    while (true) {
        fn(x, flat++);
        std::size_t k = d;
        while (k > 0) {
            --k;
            if (++x[k] < lo[k] + shape[k]) break;
            x[k] = lo[k];
            if (k == 0) return;
        }
    }
}

// Neumaier accumulator
struct Acc {
    double s = 0.0, c = 0.0;
    void add(double v) {
        double t = s + v;
        c += std::abs(s) >= std::abs(v) ? (s - t) + v : (v - t) + s;
        s = t;
    }
    double value() const { return s + c; }
};

std::mutex& fftw_mutex() {
    static std::mutex m;
    return m;
}

cd ipow(cd z, unsigned n) {
    cd r(1.0, 0.0);
    while (n) {
        if (n & 1u) r *= z;
        z *= z;
        n >>= 1u;
    }
    return r;
}

int floor_mod(long long a, int m) {
    long long r = a % m;
    return static_cast<int>(r < 0 ? r + m : r);
}

int next_pow2(long long v) {
    int p = 1;
    while (p < v) p *= 2;
    return p;
}

}  // namespace

LatticeFunction::LatticeFunction(int dim) : dim_(dim) {
    if (dim <= 0) throw InputError("lattice dimension must be positive");
}

LatticeFunction LatticeFunction::from_dense(Point lo, std::vector<int> shape, std::vector<cd> data) {
    const int d = static_cast<int>(shape.size());
    if (d == 0 || lo.size() != shape.size() || data.size() != volume(shape))
        throw InputError("dense lattice data has inconsistent shape");
    LatticeFunction f(d);
    Point mn(static_cast<std::size_t>(d), std::numeric_limits<int>::max());
    Point mx(static_cast<std::size_t>(d), std::numeric_limits<int>::min());
    bool any = false;
    for_each_point(lo, shape, [&](const Point& x, std::size_t i) {
        if (data[i] == cd(0.0, 0.0)) return;
        any = true;
        for (int k = 0; k < d; ++k) {
            mn[static_cast<std::size_t>(k)] = std::min(mn[static_cast<std::size_t>(k)], x[static_cast<std::size_t>(k)]);
            mx[static_cast<std::size_t>(k)] = std::max(mx[static_cast<std::size_t>(k)], x[static_cast<std::size_t>(k)]);
        }
    });
    if (!any) return f;
    if (mn == lo) {
        bool same = true;
        for (int k = 0; k < d; ++k) same = same && mx[static_cast<std::size_t>(k)] == lo[static_cast<std::size_t>(k)] + shape[static_cast<std::size_t>(k)] - 1;
        if (same) {
            f.lo_ = std::move(lo);
            f.shape_ = std::move(shape);
            f.data_ = std::move(data);
            return f;
        }
    }
    f.lo_ = mn;
    for (int k = 0; k < d; ++k) f.shape_.push_back(mx[static_cast<std::size_t>(k)] - mn[static_cast<std::size_t>(k)] + 1);
    f.data_.assign(volume(f.shape_), cd(0.0, 0.0));
    auto src = strides_of(shape);
    for_each_point(f.lo_, f.shape_, [&](const Point& x, std::size_t i) {
        std::size_t j = 0;
        for (int k = 0; k < d; ++k) j += static_cast<std::size_t>(x[static_cast<std::size_t>(k)] - lo[static_cast<std::size_t>(k)]) * src[static_cast<std::size_t>(k)];
        f.data_[i] = data[j];
    });
    return f;
}

LatticeFunction LatticeFunction::from_entries(int dim, const std::map<Point, cd>& entries) {
    LatticeFunction f(dim);
    Point mn(static_cast<std::size_t>(dim), std::numeric_limits<int>::max());
    Point mx(static_cast<std::size_t>(dim), std::numeric_limits<int>::min());
    bool any = false;
    for (const auto& [x, v] : entries) {
        if (static_cast<int>(x.size()) != dim) throw InputError("lattice point has wrong dimension");
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) throw InputError("lattice value is not finite");
        if (v == cd(0.0, 0.0)) continue;
        any = true;
        for (int k = 0; k < dim; ++k) {
            mn[static_cast<std::size_t>(k)] = std::min(mn[static_cast<std::size_t>(k)], x[static_cast<std::size_t>(k)]);
            mx[static_cast<std::size_t>(k)] = std::max(mx[static_cast<std::size_t>(k)], x[static_cast<std::size_t>(k)]);
        }
    }
    if (!any) return f;
    f.lo_ = mn;
    for (int k = 0; k < dim; ++k) f.shape_.push_back(mx[static_cast<std::size_t>(k)] - mn[static_cast<std::size_t>(k)] + 1);
    f.data_.assign(volume(f.shape_), cd(0.0, 0.0));
    auto st = strides_of(f.shape_);
    for (const auto& [x, v] : entries) {
        std::size_t j = 0;
        for (int k = 0; k < dim; ++k) j += static_cast<std::size_t>(x[static_cast<std::size_t>(k)] - mn[static_cast<std::size_t>(k)]) * st[static_cast<std::size_t>(k)];
        f.data_[j] += v;
    }
    return f;
}

LatticeFunction LatticeFunction::from_exact(int dim, const std::map<Point, ExactComplex>& entries) {
    std::map<Point, cd> approx;
    std::map<Point, ExactComplex> kept;
    for (const auto& [x, v] : entries) {
        if (v.re == Rational(0) && v.im == Rational(0)) continue;
        approx[x] = v.to_complex();
        kept[x] = v;
    }
    LatticeFunction f = from_entries(dim, approx);
    f.exact_ = std::move(kept);
    return f;
}

LatticeFunction LatticeFunction::delta(int dim, Point x0) {
    if (x0.empty()) x0.assign(static_cast<std::size_t>(dim), 0);
    return from_exact(dim, {{x0, {Rational(1), Rational(0)}}});
}

Point LatticeFunction::hi() const {
    Point h = lo_;
    for (std::size_t k = 0; k < h.size(); ++k) h[k] += shape_[k] - 1;
    return h;
}

cd LatticeFunction::at(const Point& x) const {
    if (static_cast<int>(x.size()) != dim_) throw InputError("lattice point has wrong dimension");
    if (data_.empty()) return {0.0, 0.0};
    auto st = strides_of(shape_);
    std::size_t j = 0;
    for (int k = 0; k < dim_; ++k) {
        int r = x[static_cast<std::size_t>(k)] - lo_[static_cast<std::size_t>(k)];
        if (r < 0 || r >= shape_[static_cast<std::size_t>(k)]) return {0.0, 0.0};
        j += static_cast<std::size_t>(r) * st[static_cast<std::size_t>(k)];
    }
    return data_[j];
}

std::map<Point, cd> LatticeFunction::entries() const {
    std::map<Point, cd> out;
    for_each_point(lo_, shape_, [&](const Point& x, std::size_t i) {
        if (data_[i] != cd(0.0, 0.0)) out[x] = data_[i];
    });
    return out;
}

std::size_t LatticeFunction::support_size() const {
    std::size_t n = 0;
    for (const auto& v : data_) n += v != cd(0.0, 0.0);
    return n;
}

double LatticeFunction::sup_norm() const {
    double m = 0.0;
    for (const auto& v : data_) m = std::max(m, std::abs(v));
    return m;
}

double LatticeFunction::l1_norm() const {
    Acc a;
    for (const auto& v : data_) a.add(std::abs(v));
    return a.value();
}

cd LatticeFunction::sum() const {
    Acc re, im;
    for (const auto& v : data_) {
        re.add(v.real());
        im.add(v.imag());
    }
    return {re.value(), im.value()};
}

std::optional<ExactComplex> LatticeFunction::exact_sum() const {
    if (!exact_) return std::nullopt;
    ExactComplex s{Rational(0), Rational(0)};
    for (const auto& [x, v] : *exact_) {
        s.re = s.re + v.re;
        s.im = s.im + v.im;
    }
    return s;
}

namespace {

void put(std::map<Point, ExactComplex>& m, Point x, Rational re, Rational im) {
    auto& e = m[x];
    e.re = e.re + re;
    e.im = e.im + im;
}

void require_unit_sum(const LatticeFunction& f, const char* name) {
    auto s = f.exact_sum();
    if (!s || s->re != Rational(1) || s->im != Rational(0))
        throw std::logic_error(std::string("transcription checksum failed for ") + name);
}

}  // namespace

LatticeFunction builtin_phi() {
    std::map<Point, ExactComplex> m;
    const Rational w1(1, 12 * 3840000), w2(1, 8 * 3840000), w3(1, 3 * 3840000);
    auto re = [&](Point x, std::int64_t v, const Rational& w) { put(m, std::move(x), Rational(v) * w, Rational(0)); };
    auto im = [&](Point x, std::int64_t v, const Rational& w) { put(m, std::move(x), Rational(0), Rational(v) * w); };
    // phi_1
    re({0, 0}, 41375061, w1);
    re({1, 0}, 1080000, w1);
    im({1, 0}, 969232, w1);
    re({-1, 0}, 1080000, w1);
    im({-1, 0}, -969232, w1);
    for (int s : {-1, 1}) {
        re({2 * s, 0}, -165072, w1);
        re({3 * s, 0}, 72000, w1);
        im({3 * s, 0}, -9024 * s, w1);
        re({4 * s, 0}, -38256, w1);
    }
    // phi_2
    for (auto [y, v] : {std::pair{1, 1228800}, {2, -286328}, {4, -9524}, {6, 2232}, {8, -179}})
        for (int s : {-1, 1}) re({0, s * y}, v, w2);
    // phi_3
    for (int s : {-1, 1}) {
        im({-1, s}, 115200, w3);
        im({1, s}, -115200, w3);
        im({-1, 2 * s}, 6939, w3);
        im({1, 2 * s}, -6939, w3);
        im({3, 2 * s}, 1128, w3);
        im({-3, 2 * s}, -1128, w3);
        im({1, 4 * s}, 1062, w3);
        im({-1, 4 * s}, -1062, w3);
        im({-1, 6 * s}, 77, w3);
        im({1, 6 * s}, -77, w3);
        for (int r : {-1, 1}) {
            re({2 * r, 2 * s}, 216, w3);
            re({2 * r, 4 * s}, -54, w3);
        }
    }
    auto f = LatticeFunction::from_exact(2, m);
    require_unit_sum(f, "phi");
    return f;
}

LatticeFunction builtin_psi() {
    std::map<Point, ExactComplex> m;
    const Rational w(1, 960000);
    auto re = [&](Point x, std::int64_t v) { put(m, std::move(x), Rational(v) * w, Rational(0)); };
    auto im = [&](Point x, std::int64_t v) { put(m, std::move(x), Rational(0), Rational(v) * w); };
    re({0, 0}, 862318);
    re({1, 0}, 22500);
    im({1, 0}, 19200);
    re({-1, 0}, 22500);
    im({-1, 0}, -19200);
    for (int s : {-1, 1}) {
        re({2 * s, 0}, -3412);
        re({3 * s, 0}, 1500);
        re({4 * s, 0}, -797);
        re({0, s}, 38400);
        re({0, 2 * s}, -9225);
        re({0, 4 * s}, -150);
        re({0, 6 * s}, 25);
        im({-1, s}, 9600);
        im({1, s}, -9600);
    }
    auto f = LatticeFunction::from_exact(2, m);
    require_unit_sum(f, "psi");
    return f;
}

LatticeFunction convolve(const LatticeFunction& f, const LatticeFunction& g) {
    if (f.dim() != g.dim()) throw InputError("convolution of functions on different lattices");
    const int d = f.dim();
    if (f.empty() || g.empty()) return LatticeFunction(d);
    Point lo(static_cast<std::size_t>(d));
    std::vector<int> shape(static_cast<std::size_t>(d));
    for (std::size_t k = 0; k < lo.size(); ++k) {
        lo[k] = f.lo()[k] + g.lo()[k];
        shape[k] = f.shape()[k] + g.shape()[k] - 1;
    }
    const auto ost = strides_of(shape);
    const auto gst = strides_of(g.shape());
    // offsets of the g slice (axes 1..d-1) inside an output slice
    std::vector<std::size_t> goff;
    {
        std::vector<int> rest(g.shape().begin() + 1, g.shape().end());
        Point zero(rest.size(), 0);
        if (rest.empty()) {
            goff.push_back(0);
        } else {
            for_each_point(zero, rest, [&](const Point& b, std::size_t) {
                std::size_t o = 0;
                for (std::size_t k = 0; k < b.size(); ++k) o += static_cast<std::size_t>(b[k]) * ost[k + 1];
                goff.push_back(o);
            });
        }
    }
    struct Nz {
        int a0;
        std::size_t shift;
        cd v;
    };
    std::vector<Nz> fnz;
    Point zero(static_cast<std::size_t>(d), 0);
    for_each_point(zero, f.shape(), [&](const Point& a, std::size_t i) {
        cd v = f.data()[i];
        if (v == cd(0.0, 0.0)) return;
        std::size_t s = 0;
        for (int k = 1; k < d; ++k) s += static_cast<std::size_t>(a[static_cast<std::size_t>(k)]) * ost[static_cast<std::size_t>(k)];
        fnz.push_back({a[0], s, v});
    });
    std::vector<cd> out(volume(shape), cd(0.0, 0.0));
    const int g0 = g.shape()[0];
    const std::size_t gslice = gst[0];
    for_each_tile(static_cast<std::size_t>(shape[0]), [&](std::size_t i0) {
        cd* o = out.data() + i0 * ost[0];
        for (const auto& nz : fnz) {
            int b0 = static_cast<int>(i0) - nz.a0;
            if (b0 < 0 || b0 >= g0) continue;
            const cd* gs = g.data().data() + static_cast<std::size_t>(b0) * gslice;
            cd* os = o + nz.shift;
            for (std::size_t j = 0; j < gslice; ++j) os[goff[j]] += nz.v * gs[j];
        }
    });
    return LatticeFunction::from_dense(lo, shape, std::move(out));
}

DftPower conv_power_dft_fixed(const LatticeFunction& f, unsigned n, const std::vector<int>& grid) {
    if (n == 0) throw InputError("convolution power needs n >= 1");
    const int d = f.dim();
    if (static_cast<int>(grid.size()) != d) throw InputError("dft grid has wrong dimension");
    if (f.empty()) return {LatticeFunction(d), grid, 0.0, true};
    for (int k = 0; k < d; ++k)
        if (grid[static_cast<std::size_t>(k)] < f.shape()[static_cast<std::size_t>(k)])
            throw InputError("dft grid is smaller than the support of f");
    const std::size_t total = volume(grid);
    if (total > kMaxTorusPoints) throw ConvergenceError("dft grid exceeds the memory cap");
    const auto st = strides_of(grid);
    std::vector<cd> a(total, cd(0.0, 0.0));
    for_each_point(f.lo(), f.shape(), [&](const Point& x, std::size_t i) {
        std::size_t j = 0;
        for (int k = 0; k < d; ++k) j += static_cast<std::size_t>(floor_mod(x[static_cast<std::size_t>(k)], grid[static_cast<std::size_t>(k)])) * st[static_cast<std::size_t>(k)];
        a[j] += f.data()[i];
    });
    auto* buf = reinterpret_cast<fftw_complex*>(a.data());
    fftw_plan back, fwd;
    {
        std::lock_guard<std::mutex> lock(fftw_mutex());
        back = fftw_plan_dft(d, grid.data(), buf, buf, FFTW_BACKWARD, FFTW_ESTIMATE);
        fwd = fftw_plan_dft(d, grid.data(), buf, buf, FFTW_FORWARD, FFTW_ESTIMATE);
    }
    fftw_execute(back);
    for (auto& v : a) v = ipow(v, n);
    fftw_execute(fwd);
    {
        std::lock_guard<std::mutex> lock(fftw_mutex());
        fftw_destroy_plan(back);
        fftw_destroy_plan(fwd);
    }
    const double inv = 1.0 / static_cast<double>(total);

    DftPower res;
    res.grid = grid;
    res.exact_period = true;
    Point start(static_cast<std::size_t>(d));
    for (int k = 0; k < d; ++k) {
        auto kk = static_cast<std::size_t>(k);
        long long width = static_cast<long long>(n) * (f.shape()[kk] - 1);
        double centre = static_cast<double>(n) * (f.lo()[kk] + (f.shape()[kk] - 1) / 2.0);
        start[kk] = static_cast<int>(std::ceil(centre - (grid[kk] - 1) / 2.0));
        res.exact_period = res.exact_period && grid[kk] >= width + 1;
    }
    std::vector<cd> out(total);
    for_each_point(start, grid, [&](const Point& x, std::size_t i) {
        std::size_t j = 0;
        for (int k = 0; k < d; ++k) j += static_cast<std::size_t>(floor_mod(x[static_cast<std::size_t>(k)], grid[static_cast<std::size_t>(k)])) * st[static_cast<std::size_t>(k)];
        out[i] = a[j] * inv;
    });
    res.values = LatticeFunction::from_dense(start, grid, std::move(out));
    return res;
}

DftPower conv_power_dft(const LatticeFunction& f, unsigned n, std::vector<int> grid) {
    if (n == 0) throw InputError("convolution power needs n >= 1");
    const int d = f.dim();
    if (grid.empty()) {
        for (int k = 0; k < d; ++k) {
            int s = f.empty() ? 1 : f.shape()[static_cast<std::size_t>(k)];
            long long w = static_cast<long long>(n) * (s - 1) + 1;
            grid.push_back(next_pow2(std::max<long long>(s, std::min<long long>(w, 64))));
        }
    }
    DftPower cur = conv_power_dft_fixed(f, n, grid);
    while (!cur.exact_period) {
        std::vector<int> g2;
        for (int v : cur.grid) g2.push_back(2 * v);
        if (volume(g2) > kMaxTorusPoints) throw ConvergenceError("alias control needs a grid beyond the memory cap");
        DftPower next = conv_power_dft_fixed(f, n, g2);
        double a = cur.values.sup_norm(), b = next.values.sup_norm();
        next.alias_change = b > 0.0 ? std::abs(b - a) / b : std::abs(b - a);
        if (next.alias_change < 1e-9) return next;
        cur = std::move(next);
    }
    return cur;
}

LatticeFunction conv_power(const LatticeFunction& f, unsigned n, Method method, const std::vector<int>& grid) {
    if (n == 0) throw InputError("convolution power needs n >= 1");
    if (method == Method::dft) return conv_power_dft(f, n, grid).values;
    LatticeFunction result(f.dim());
    bool have = false;
    LatticeFunction base = f;
    while (n) {
        if (n & 1u) {
            result = have ? convolve(result, base) : base;
            have = true;
        }
        n >>= 1u;
        if (n) base = convolve(base, base);
    }
    return result;
}

cd fourier_eval(const LatticeFunction& f, const std::vector<double>& xi) {
    if (static_cast<int>(xi.size()) != f.dim()) throw InputError("frequency has wrong dimension");
    Acc re, im;
    for_each_point(f.lo(), f.shape(), [&](const Point& x, std::size_t i) {
        cd v = f.data()[i];
        if (v == cd(0.0, 0.0)) return;
        double th = 0.0;
        for (std::size_t k = 0; k < xi.size(); ++k) th += x[k] * xi[k];
        cd e = v * cd(std::cos(th), std::sin(th));
        re.add(e.real());
        im.add(e.imag());
    });
    return {re.value(), im.value()};
}

namespace {

double wrap_angle(double a) {
    const double tp = 2.0 * std::numbers::pi;
    a = std::fmod(a + std::numbers::pi, tp);
    if (a <= 0.0) a += tp;
    return a - std::numbers::pi;
}

double torus_distance(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(wrap_angle(a[k] - b[k])));
    return m;
}

}  // namespace

std::vector<Maximizer> max_modulus_search(const LatticeFunction& f, int grid_per_axis, int refine_iters) {
    if (grid_per_axis < 64) throw InputError("max modulus search needs at least 64 grid points per axis");
    if (f.empty()) throw DomainError("zero function has no maximizer");
    const int d = f.dim();
    const int G = grid_per_axis;
    const double h = 2.0 * std::numbers::pi / G;
    std::vector<int> shape(static_cast<std::size_t>(d), G);
    Point zero(static_cast<std::size_t>(d), 0);
    std::vector<double> vals(volume(shape));
    auto coord = [&](int i) { return -std::numbers::pi + h * (i + 1); };
    for_each_tile(static_cast<std::size_t>(G), [&](std::size_t i0) {
        std::vector<int> rest(shape.begin() + 1, shape.end());
        std::vector<double> xi(static_cast<std::size_t>(d));
        xi[0] = coord(static_cast<int>(i0));
        std::size_t base = i0 * (vals.size() / static_cast<std::size_t>(G));
        if (rest.empty()) {
            vals[base] = std::abs(fourier_eval(f, xi));
            return;
        }
        for_each_point(Point(rest.size(), 0), rest, [&](const Point& r, std::size_t j) {
            for (std::size_t k = 0; k < r.size(); ++k) xi[k + 1] = coord(r[k]);
            vals[base + j] = std::abs(fourier_eval(f, xi));
        });
    });
    double vmax = 0.0, vmin = INFINITY;
    for (double v : vals) {
        vmax = std::max(vmax, v);
        vmin = std::min(vmin, v);
    }
    if (vmax - vmin <= 1e-12 * std::max(1.0, vmax)) throw DomainError("degenerate maximum: |f-hat| is constant");

    // local maxima over the 3^d neighbourhood on the periodic grid
    const auto st = strides_of(shape);
    std::vector<std::pair<double, std::vector<double>>> cands;
    for_each_point(zero, shape, [&](const Point& p, std::size_t i) {
        double v = vals[i];
        Point off(static_cast<std::size_t>(d), -1);
        bool is_max = true;
        while (is_max) {
            bool centre = true;
            std::size_t j = 0;
            for (int k = 0; k < d; ++k) {
                auto kk = static_cast<std::size_t>(k);
                centre = centre && off[kk] == 0;
                j += static_cast<std::size_t>(floor_mod(p[kk] + off[kk], G)) * st[kk];
            }
            if (!centre && vals[j] > v) is_max = false;
            int k = d - 1;
            for (; k >= 0; --k) {
                if (++off[static_cast<std::size_t>(k)] <= 1) break;
                off[static_cast<std::size_t>(k)] = -1;
            }
            if (k < 0) break;
        }
        if (!is_max) return;
        std::vector<double> xi(static_cast<std::size_t>(d));
        for (int k = 0; k < d; ++k) xi[static_cast<std::size_t>(k)] = coord(p[static_cast<std::size_t>(k)]);
        cands.push_back({v, xi});
    });
    std::sort(cands.begin(), cands.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    if (cands.size() > 32) cands.resize(32);

    auto modulus = [&](const std::vector<double>& xi) { return std::abs(fourier_eval(f, xi)); };
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    std::vector<Maximizer> found;
    for (auto& [v0, xi] : cands) {
        double width = h;
        for (int it = 0; it < refine_iters; ++it) {
            double moved = 0.0;
            for (int k = 0; k < d; ++k) {
                auto kk = static_cast<std::size_t>(k);
                double c0 = xi[kk];
                double a = c0 - width, b = c0 + width;
                auto at = [&](double s) {
                    auto y = xi;
                    y[kk] = s;
                    return modulus(y);
                };
                double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
                double f1 = at(x1), f2 = at(x2);
                for (int g = 0; g < 80 && b - a > 1e-15; ++g) {
                    if (f1 < f2) {
                        a = x1;
                        x1 = x2;
                        f1 = f2;
                        x2 = a + gr * (b - a);
                        f2 = at(x2);
                    } else {
                        b = x2;
                        x2 = x1;
                        f2 = f1;
                        x1 = b - gr * (b - a);
                        f1 = at(x1);
                    }
                }
                double best = 0.5 * (a + b);
                // flat maxima: move only on an improvement above rounding
                double f0 = at(c0);
                if (at(best) > f0 + 4e-16 * f0) xi[kk] = best;
                moved = std::max(moved, std::abs(xi[kk] - c0));
            }
            width = std::max(0.5 * width, 4.0 * moved);
            if (moved < 1e-14) break;
        }
        for (auto& c : xi) c = wrap_angle(c);
        double m = modulus(xi);
        // plateau check at radius h/4
        bool flat = true;
        for (int k = 0; k < d && flat; ++k)
            for (double s : {-1.0, 1.0}) {
                auto y = xi;
                y[static_cast<std::size_t>(k)] += s * h / 4.0;
                if (std::abs(modulus(y) - m) > 1e-12) flat = false;
            }
        if (flat) throw DomainError("degenerate maximum: |f-hat| is flat near a maximizer");
        bool dup = false;
        for (auto& fm : found)
            if (torus_distance(fm.xi, xi) < 1e-6) {
                dup = true;
                if (m > fm.modulus) fm = {xi, m};
            }
        if (!dup) found.push_back({xi, m});
    }
    double best = 0.0;
    for (const auto& fm : found) best = std::max(best, fm.modulus);
    std::vector<Maximizer> out;
    for (const auto& fm : found)
        if (fm.modulus >= best - 1e-9) out.push_back(fm);
    return out;
}

double LLTSpec::mu_phi() const { return mu > 0.0 ? mu : symbols::exponents(D).mu_inf; }

namespace {

void check_spec(const LatticeFunction& f, const LLTSpec& spec) {
    spec.D.check_shapes();
    if (spec.D.d() != f.dim()) throw InputError("decomposition and lattice dimensions differ");
    if (static_cast<int>(spec.xi0.size()) != f.dim() || static_cast<int>(spec.alpha.size()) != f.dim())
        throw InputError("xi0 and alpha must match the lattice dimension");
    if (!(spec.mu_phi() > 0.0)) throw InputError("mu_phi must be positive");
}

}  // namespace

cd expansion_remainder(const LatticeFunction& f, const LLTSpec& spec, const std::vector<double>& xi) {
    const symbols::PolySymbol P = symbols::assemble_symbol(spec.D);
    const int d = f.dim();
    cd f0 = fourier_eval(f, spec.xi0);
    if (std::abs(f0) < 1e-300) throw DomainError("f-hat vanishes at xi0");
    Acc wr, wi;
    for_each_point(f.lo(), f.shape(), [&](const Point& x, std::size_t i) {
        cd v = f.data()[i];
        if (v == cd(0.0, 0.0)) return;
        double a0 = 0.0, th = 0.0;
        for (int k = 0; k < d; ++k) {
            a0 += x[static_cast<std::size_t>(k)] * spec.xi0[static_cast<std::size_t>(k)];
            th += x[static_cast<std::size_t>(k)] * xi[static_cast<std::size_t>(k)];
        }
        double sh = std::sin(0.5 * th);
        cd em1(-2.0 * sh * sh, std::sin(th));
        cd e = v * cd(std::cos(a0), std::sin(a0)) * em1;
        wr.add(e.real());
        wi.add(e.imag());
    });
    cd w = cd(wr.value(), wi.value()) / f0;
    double a = w.real(), b = w.imag();
    if (!(1.0 + a > 0.0)) throw DomainError("f-hat leaves the right half-plane near xi0");
    cd lg(0.5 * std::log1p(2.0 * a + a * a + b * b), std::atan2(b, 1.0 + a));
    double ax = 0.0;
    for (int k = 0; k < d; ++k) ax += spec.alpha[static_cast<std::size_t>(k)] * xi[static_cast<std::size_t>(k)];
    return lg - cd(0.0, ax) + P(xi.data());
}

ExpansionReport expansion_residual(const LatticeFunction& f, const LLTSpec& spec, std::vector<double> shell_t,
                                   int samples, std::uint64_t seed) {
    check_spec(f, spec);
    if (std::abs(std::abs(fourier_eval(f, spec.xi0)) - 1.0) > 1e-9)
        throw DomainError("f-hat is not normalized to modulus 1 at xi0");
    if (shell_t.empty())
        for (int e = 1; e <= 8; ++e) shell_t.push_back(std::pow(10.0, -e));
    const int d = f.dim();
    const auto dirs = symbols::sphere_samples(d, static_cast<std::size_t>(samples), seed);
    const symbols::PolySymbol Pt = symbols::dual_symbol(spec.D);
    const auto G = spec.D.G();
    ExpansionReport rep;
    std::vector<double> u(static_cast<std::size_t>(d)), xi(static_cast<std::size_t>(d));
    for (double t : shell_t) {
        const linops::Matrix M = linops::group_element(G, t);
        double m = 0.0;
        for (const auto& p : dirs) {
            for (int r = 0; r < d; ++r) {
                double v = 0.0;
                for (int c = 0; c < d; ++c) v += M(r, c) * p[static_cast<std::size_t>(c)];
                u[static_cast<std::size_t>(r)] = v;
            }
            symbols::apply_shear(spec.D, u.data(), xi.data());
            double Pv = Pt(u.data());
            if (!(Pv > 0.0)) continue;
            m = std::max(m, std::abs(expansion_remainder(f, spec, xi)) / Pv);
        }
        rep.shells.push_back({t, m});
    }
    rep.pass = !rep.shells.empty() && rep.shells.back().max_ratio < 0.05;
    return rep;
}

OneSidedMargin one_sided_margin(const LatticeFunction& f, const LLTSpec& spec, double c, int points) {
    check_spec(f, spec);
    if (!(c > 0.0) || points < 3) throw InputError("margin region is degenerate");
    const int d = f.dim();
    const symbols::PolySymbol P = symbols::assemble_symbol(spec.D);
    kernel::QuadratureSpec box;
    box.tail_tol = std::exp(-c);
    auto hw = kernel::choose_domain(d, [&](const double* x) { return P(x); }, box);
    OneSidedMargin out;
    out.delta = INFINITY;
    std::vector<int> shape(static_cast<std::size_t>(d), points);
    for_each_point(Point(static_cast<std::size_t>(d), 0), shape, [&](const Point& p, std::size_t) {
        std::vector<double> xi(static_cast<std::size_t>(d));
        for (int k = 0; k < d; ++k) {
            double h = hw[static_cast<std::size_t>(k)];
            xi[static_cast<std::size_t>(k)] = -h + 2.0 * h * p[static_cast<std::size_t>(k)] / (points - 1);
        }
        double Pv = P(xi.data());
        if (!(Pv > 0.0 && Pv < c)) return;
        double r = expansion_remainder(f, spec, xi).real();
        out.delta = std::min(out.delta, 1.0 - r / Pv);
        ++out.samples;
    });
    if (out.samples == 0) throw DomainError("no sample points inside {P < c}");
    return out;
}

namespace {

double clipped_fraction(const LatticeFunction& g, const Window& w) {
    Acc inside, total;
    for_each_point(g.lo(), g.shape(), [&](const Point& x, std::size_t i) {
        double a = std::abs(g.data()[i]);
        total.add(a);
        bool in = true;
        for (std::size_t k = 0; k < x.size(); ++k) in = in && x[k] >= w.lo[k] && x[k] <= w.hi[k];
        if (in) inside.add(a);
    });
    double t = total.value();
    return t > 0.0 ? std::max(0.0, (t - inside.value()) / t) : 0.0;
}

bool inside_grid(const LatticeFunction& g, const Window& w) {
    Point hi = g.hi();
    for (std::size_t k = 0; k < w.lo.size(); ++k)
        if (w.lo[k] < g.lo()[k] || w.hi[k] > hi[k]) return false;
    return true;
}

Window grow(const Window& w) {
    Window o = w;
    for (std::size_t k = 0; k < w.lo.size(); ++k) {
        int e = std::max(1, static_cast<int>(std::ceil(0.25 * (w.hi[k] - w.lo[k] + 1))));
        o.lo[k] -= e;
        o.hi[k] += e;
    }
    return o;
}

}  // namespace

LLTReport llt_compare(const LatticeFunction& f, const LLTSpec& spec, unsigned n, const kernel::QuadratureSpec& qspec,
                      std::optional<Window> window) {
    check_spec(f, spec);
    if (n == 0) throw InputError("llt needs n >= 1");
    if (!expansion_residual(f, spec).pass) throw DomainError("expansion residual does not vanish relative to P");
    const int d = f.dim();
    LLTReport rep;
    rep.n = n;
    rep.mu = spec.mu_phi();

    DftPower pw = conv_power_dft(f, n);
    Window w;
    if (window) {
        w = *window;
        if (static_cast<int>(w.lo.size()) != d || static_cast<int>(w.hi.size()) != d) throw InputError("window has wrong dimension");
        rep.clipped_mass = clipped_fraction(pw.values, w);
        if (rep.clipped_mass > 1e-6) throw DomainError("window clips more than 1e-6 of the l1 mass");
    } else {
        const LatticeFunction& g = pw.values;
        const double cut = 1e-3 * g.sup_norm();
        w.lo.assign(static_cast<std::size_t>(d), std::numeric_limits<int>::max());
        w.hi.assign(static_cast<std::size_t>(d), std::numeric_limits<int>::min());
        for_each_point(g.lo(), g.shape(), [&](const Point& x, std::size_t i) {
            if (std::abs(g.data()[i]) <= cut) return;
            for (std::size_t k = 0; k < x.size(); ++k) {
                w.lo[k] = std::min(w.lo[k], x[k]);
                w.hi[k] = std::max(w.hi[k], x[k]);
            }
        });
        w = grow(w);
        while (true) {
            while (!inside_grid(pw.values, w)) {
                std::vector<int> g2;
                for (int v : pw.grid) g2.push_back(2 * v);
                pw = conv_power_dft_fixed(f, n, g2);
            }
            rep.clipped_mass = clipped_fraction(pw.values, w);
            if (rep.clipped_mass <= 1e-6) break;
            w = grow(w);
        }
    }
    rep.window = w;

    const symbols::PolySymbol P = symbols::assemble_symbol(spec.D);
    std::vector<std::vector<double>> shifted(static_cast<std::size_t>(d));
    rep.axes.resize(static_cast<std::size_t>(d));
    for (int k = 0; k < d; ++k) {
        auto kk = static_cast<std::size_t>(k);
        for (int x = w.lo[kk]; x <= w.hi[kk]; ++x) {
            rep.axes[kk].push_back(x);
            shifted[kk].push_back(x - static_cast<double>(n) * spec.alpha[kk]);
        }
    }
    auto H = kernel::kernel_grid(P, static_cast<double>(n), shifted, qspec);
    const cd f0n = ipow(fourier_eval(f, spec.xi0), n);
    std::vector<int> shape;
    for (const auto& a : rep.axes) shape.push_back(static_cast<int>(a.size()));
    rep.lattice_values.resize(H.values.size());
    rep.attractor_values.resize(H.values.size());
    for_each_point(w.lo, shape, [&](const Point& x, std::size_t i) {
        double th = 0.0;
        for (int k = 0; k < d; ++k) th += x[static_cast<std::size_t>(k)] * spec.xi0[static_cast<std::size_t>(k)];
        cd att = f0n * cd(std::cos(th), -std::sin(th)) * H.values[i];
        cd lat = pw.values.at(x);
        rep.lattice_values[i] = lat;
        rep.attractor_values[i] = att;
        rep.sup_residual = std::max(rep.sup_residual, std::abs(lat - att));
    });
    const double scale = std::pow(static_cast<double>(n), rep.mu);
    rep.sup_residual_scaled = scale * rep.sup_residual;
    rep.attractor_at_zero_scaled = scale * kernel::phi_naive(P, static_cast<double>(n), qspec).value;
    return rep;
}

std::vector<CurvePoint> supnorm_curve(const LatticeFunction& f, const std::vector<unsigned>& n_list, double mu) {
    for (std::size_t i = 0; i < n_list.size(); ++i) {
        if (n_list[i] == 0) throw InputError("n must be positive");
        if (i > 0 && n_list[i] <= n_list[i - 1]) throw InputError("n list must be increasing");
    }
    std::vector<CurvePoint> out;
    std::vector<int> grid;
    for (unsigned n : n_list) {
        DftPower p = conv_power_dft(f, n, grid);
        grid = p.grid;
        double s = p.values.sup_norm();
        out.push_back({n, s, std::pow(static_cast<double>(n), mu) * s});
    }
    return out;
}

}  // namespace hkl::lattice
