#pragma once

#include <algorithm>
#include <map>
#include <vector>

#include "hkl/errors.hpp"
#include "hkl/rational.hpp"

namespace hkl::symbols {

using MultiIndex = std::vector<int>;

namespace detail {
inline bool is_zero(const Rational& r) { return r.is_zero(); }
inline bool is_zero(double x) { return x == 0.0; }
}  // namespace detail

/** \brief Sparse multivariate polynomial; terms kept in lexicographic multi-index order. */
template <class C>
class Polynomial {
  public:
    explicit Polynomial(int dim = 0) : dim_(dim) {}

    static Polynomial constant(int dim, const C& c) {
        Polynomial p(dim);
        p.add_term(MultiIndex(static_cast<std::size_t>(dim), 0), c);
        return p;
    }
    static Polynomial variable(int dim, int k) {
        MultiIndex a(static_cast<std::size_t>(dim), 0);
        a[static_cast<std::size_t>(k)] = 1;
        Polynomial p(dim);
        p.add_term(a, C(1));
        return p;
    }

    int dim() const { return dim_; }
    const std::map<MultiIndex, C>& terms() const { return terms_; }
    bool is_zero() const { return terms_.empty(); }

    void add_term(const MultiIndex& a, const C& c) {
        if (static_cast<int>(a.size()) != dim_) throw InputError("multi-index length does not match dimension");
        for (int e : a)
            if (e < 0) throw InputError("negative exponent in multi-index");
        if (detail::is_zero(c)) return;
        auto it = terms_.find(a);
        if (it == terms_.end()) {
            terms_.emplace(a, c);
            return;
        }
        it->second = it->second + c;
        if (detail::is_zero(it->second)) terms_.erase(it);
    }

    C coeff(const MultiIndex& a) const {
        auto it = terms_.find(a);
        return it == terms_.end() ? C(0) : it->second;
    }

    int degree() const {
        int d = 0;
        for (const auto& [a, c] : terms_) {
            int s = 0;
            for (int e : a) s += e;
            d = std::max(d, s);
        }
        return d;
    }

    std::vector<int> max_exponents() const {
        std::vector<int> m(static_cast<std::size_t>(dim_), 0);
        for (const auto& [a, c] : terms_)
            for (std::size_t k = 0; k < a.size(); ++k) m[k] = std::max(m[k], a[k]);
        return m;
    }

    Polynomial& operator+=(const Polynomial& o) {
        check_dim(o);
        for (const auto& [a, c] : o.terms_) add_term(a, c);
        return *this;
    }
    Polynomial& operator-=(const Polynomial& o) {
        check_dim(o);
        for (const auto& [a, c] : o.terms_) add_term(a, C(0) - c);
        return *this;
    }
    friend Polynomial operator+(Polynomial a, const Polynomial& b) { return a += b; }
    friend Polynomial operator-(Polynomial a, const Polynomial& b) { return a -= b; }
    friend Polynomial operator*(const Polynomial& a, const Polynomial& b) {
        a.check_dim(b);
        Polynomial r(a.dim_);
        MultiIndex s(static_cast<std::size_t>(a.dim_));
        for (const auto& [ia, ca] : a.terms_)
            for (const auto& [ib, cb] : b.terms_) {
                for (std::size_t k = 0; k < s.size(); ++k) s[k] = ia[k] + ib[k];
                r.add_term(s, ca * cb);
            }
        return r;
    }
    Polynomial scaled(const C& c) const {
        Polynomial r(dim_);
        for (const auto& [a, v] : terms_) r.add_term(a, v * c);
        return r;
    }

    Polynomial pow(unsigned e) const {
        Polynomial r = constant(dim_, C(1)), b = *this;
        while (e) {
            if (e & 1u) r = r * b;
            e >>= 1u;
            if (e) b = b * b;
        }
        return r;
    }

    // Substitutes variable k by subs[k]; all subs share one dimension.
    Polynomial compose(const std::vector<Polynomial>& subs) const {
        if (static_cast<int>(subs.size()) != dim_) throw InputError("composition needs one polynomial per variable");
        int out_dim = subs.empty() ? 0 : subs[0].dim();
        for (const auto& s : subs)
            if (s.dim() != out_dim) throw InputError("composition substitutes of different dimensions");
        std::vector<int> mx = max_exponents();
        std::vector<std::vector<Polynomial>> powers(subs.size());
        for (std::size_t k = 0; k < subs.size(); ++k) {
            powers[k].push_back(constant(out_dim, C(1)));
            for (int e = 1; e <= mx[k]; ++e) powers[k].push_back(powers[k].back() * subs[k]);
        }
        Polynomial r(out_dim);
        for (const auto& [a, c] : terms_) {
            Polynomial term = constant(out_dim, c);
            for (std::size_t k = 0; k < a.size(); ++k)
                if (a[k] > 0) term = term * powers[k][static_cast<std::size_t>(a[k])];
            r += term;
        }
        return r;
    }

    // Re-embeds into dimension new_dim with variable k mapped to k + offset.
    Polynomial embed(int new_dim, int offset) const {
        if (offset < 0 || offset + dim_ > new_dim) throw InputError("embedding does not fit");
        Polynomial r(new_dim);
        MultiIndex b(static_cast<std::size_t>(new_dim), 0);
        for (const auto& [a, c] : terms_) {
            std::fill(b.begin(), b.end(), 0);
            for (int k = 0; k < dim_; ++k) b[static_cast<std::size_t>(k + offset)] = a[static_cast<std::size_t>(k)];
            r.add_term(b, c);
        }
        return r;
    }

    template <class V>
    V eval(const std::vector<V>& x) const {
        if (static_cast<int>(x.size()) != dim_) throw InputError("evaluation point has wrong length");
        V s(0);
        for (const auto& [a, c] : terms_) {
            V m = V(c);
            for (std::size_t k = 0; k < a.size(); ++k)
                for (int e = 0; e < a[k]; ++e) m = m * x[k];
            s = s + m;
        }
        return s;
    }

    friend bool operator==(const Polynomial& a, const Polynomial& b) { return a.dim_ == b.dim_ && a.terms_ == b.terms_; }

  private:
    void check_dim(const Polynomial& o) const {
        if (o.dim_ != dim_) throw InputError("polynomial dimension mismatch");
    }
    int dim_;
    std::map<MultiIndex, C> terms_;
};

using RationalPoly = Polynomial<Rational>;
using RealPoly = Polynomial<double>;

RealPoly to_real(const RationalPoly& p);

}  // namespace hkl::symbols
