#include "hkl/linops.hpp"

#include <cmath>
#include <sstream>

#include "hkl/errors.hpp"

namespace hkl::linops {

namespace {

Matrix from_exact(int dim, const std::vector<Rational>& e) {
    Matrix m(dim, dim);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) m(i, j) = e[static_cast<std::size_t>(i * dim + j)].to_double();
    return m;
}

void check_finite_square(const Matrix& m) {
    if (m.rows() != m.cols()) throw InputError("scaling map must be square");
    if (!m.allFinite()) throw InputError("scaling map has non-finite entries");
}

}  // namespace

ScalingMap::ScalingMap(Matrix m) : m_(std::move(m)) { check_finite_square(m_); }

ScalingMap::ScalingMap(int dim, std::vector<Rational> exact_row_major) {
    if (dim < 0 || exact_row_major.size() != static_cast<std::size_t>(dim) * static_cast<std::size_t>(dim))
        throw InputError("scaling map must be square");
    m_ = from_exact(dim, exact_row_major);
    exact_ = std::move(exact_row_major);
}

ScalingMap ScalingMap::diagonal(const std::vector<double>& d) {
    Matrix m = Matrix::Zero(static_cast<Eigen::Index>(d.size()), static_cast<Eigen::Index>(d.size()));
    for (std::size_t i = 0; i < d.size(); ++i) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = d[i];
    return ScalingMap(m);
}

ScalingMap ScalingMap::diagonal(const std::vector<Rational>& d) {
    int n = static_cast<int>(d.size());
    std::vector<Rational> e(static_cast<std::size_t>(n * n), Rational(0));
    for (int i = 0; i < n; ++i) e[static_cast<std::size_t>(i * n + i)] = d[static_cast<std::size_t>(i)];
    return ScalingMap(n, e);
}

ScalingMap ScalingMap::zero(int dim) {
    return ScalingMap(dim, std::vector<Rational>(static_cast<std::size_t>(dim * dim), Rational(0)));
}

ScalingMap ScalingMap::operator-(const ScalingMap& o) const {
    if (dim() != o.dim()) throw InputError("dimension mismatch in scaling map difference");
    if (exact_ && o.exact_) {
        std::vector<Rational> e(exact_->size());
        for (std::size_t i = 0; i < e.size(); ++i) e[i] = (*exact_)[i] - (*o.exact_)[i];
        return ScalingMap(dim(), e);
    }
    return ScalingMap(Matrix(m_ - o.m_));
}

ScalingMap ScalingMap::operator+(const ScalingMap& o) const {
    if (dim() != o.dim()) throw InputError("dimension mismatch in scaling map sum");
    if (exact_ && o.exact_) {
        std::vector<Rational> e(exact_->size());
        for (std::size_t i = 0; i < e.size(); ++i) e[i] = (*exact_)[i] + (*o.exact_)[i];
        return ScalingMap(dim(), e);
    }
    return ScalingMap(Matrix(m_ + o.m_));
}

ScalingMap ScalingMap::transpose() const {
    if (exact_) {
        int n = dim();
        std::vector<Rational> e(exact_->size());
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) e[static_cast<std::size_t>(j * n + i)] = (*exact_)[static_cast<std::size_t>(i * n + j)];
        return ScalingMap(n, e);
    }
    return ScalingMap(Matrix(m_.transpose()));
}

ScalingMap direct_sum(const ScalingMap& a, const ScalingMap& b) {
    int na = a.dim(), nb = b.dim(), n = na + nb;
    if (a.exact() && b.exact()) {
        std::vector<Rational> e(static_cast<std::size_t>(n * n), Rational(0));
        for (int i = 0; i < na; ++i)
            for (int j = 0; j < na; ++j) e[static_cast<std::size_t>(i * n + j)] = (*a.exact())[static_cast<std::size_t>(i * na + j)];
        for (int i = 0; i < nb; ++i)
            for (int j = 0; j < nb; ++j)
                e[static_cast<std::size_t>((na + i) * n + na + j)] = (*b.exact())[static_cast<std::size_t>(i * nb + j)];
        return ScalingMap(n, e);
    }
    Matrix m = Matrix::Zero(n, n);
    m.topLeftCorner(na, na) = a.matrix();
    m.bottomRightCorner(nb, nb) = b.matrix();
    return ScalingMap(m);
}

Matrix expm(const Matrix& a) {
    const Eigen::Index n = a.rows();
    if (n == 0) return a;
    double norm = a.cwiseAbs().rowwise().sum().maxCoeff();
    int s = 0;
    if (norm > 0.5) s = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
    Matrix x = a / std::ldexp(1.0, s);

    constexpr int p = 6;
    double c = 1.0;
    Matrix id = Matrix::Identity(n, n);
    Matrix num = id, den = id, pw = id;
    for (int k = 1; k <= p; ++k) {
        c *= static_cast<double>(p - k + 1) / static_cast<double>(k * (2 * p - k + 1));
        pw = pw * x;
        num += c * pw;
        den += ((k % 2) ? -c : c) * pw;
    }
    Matrix r = den.partialPivLu().solve(num);
    for (int i = 0; i < s; ++i) r = r * r;
    return r;
}

Matrix group_element(const ScalingMap& e, double t) {
    if (!(t > 0.0) || !std::isfinite(t)) throw DomainError("group element needs t > 0");
    if (t == 1.0) return Matrix::Identity(e.dim(), e.dim());
    return expm(std::log(t) * e.matrix());
}

double trace(const ScalingMap& e) { return e.matrix().trace(); }

std::optional<Rational> exact_trace(const ScalingMap& e) {
    if (!e.exact()) return std::nullopt;
    Rational s(0);
    int n = e.dim();
    for (int i = 0; i < n; ++i) s += (*e.exact())[static_cast<std::size_t>(i * n + i)];
    return s;
}

double op_norm(const Matrix& m) {
    if (m.size() == 0) return 0.0;
    if (!m.allFinite()) return std::numeric_limits<double>::infinity();
    Eigen::JacobiSVD<Matrix> svd(m);
    return svd.singularValues()(0);
}

const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::yes: return "yes";
        case Verdict::no: return "no";
        default: return "inconclusive";
    }
}

namespace {

double min_real_eigen(const Matrix& m) {
    Eigen::EigenSolver<Matrix> es(m, false);
    return es.eigenvalues().real().minCoeff();
}

}  // namespace

GroupReport is_contracting(const ScalingMap& e) {
    GroupReport r;
    if (e.dim() == 0) {
        r.verdict = Verdict::yes;
        r.spectral = r.sampled = true;
        r.min_real_part = std::numeric_limits<double>::infinity();
        r.detail = "zero-dimensional group, vacuously contracting";
        return r;
    }
    r.min_real_part = min_real_eigen(e.matrix());
    r.spectral = r.min_real_part > 1e-9;
    for (int k = 1; k <= 8; ++k) r.norms.push_back(op_norm(group_element(e, std::pow(10.0, -k))));
    const auto& v = r.norms;
    std::size_t m = v.size();
    bool tail_decreasing = v[m - 3] > v[m - 2] && v[m - 2] > v[m - 1];
    r.sampled = tail_decreasing && v.back() < 1.0 && v.back() < v.front();
    if (r.spectral == r.sampled)
        r.verdict = r.spectral ? Verdict::yes : Verdict::no;
    else
        r.verdict = Verdict::inconclusive;
    std::ostringstream os;
    os << "min Re(lambda) = " << r.min_real_part << ", ||t^E|| at t=1e-8 is " << v.back()
       << (r.verdict == Verdict::inconclusive ? " (spectral and sampling checks disagree)" : "");
    r.detail = os.str();
    return r;
}

GroupReport is_non_expanding(const ScalingMap& e) {
    GroupReport r;
    if (e.dim() == 0) {
        r.verdict = Verdict::yes;
        r.spectral = r.sampled = true;
        r.min_real_part = std::numeric_limits<double>::infinity();
        r.detail = "zero-dimensional group";
        return r;
    }
    r.min_real_part = min_real_eigen(e.matrix());
    r.spectral = r.min_real_part >= -1e-9;
    // body: [1e-8, 1] at 8 and 16 points/decade; tail: (1e-16, 1e-8) at 16 points/decade
    double body_coarse = 0.0, body_fine = 0.0, tail = 0.0;
    for (int j = 0; j <= 256; ++j) {
        double n = op_norm(group_element(e, std::pow(10.0, -j / 16.0)));
        if (j <= 128) {
            body_fine = std::max(body_fine, n);
            if (j % 2 == 0) {
                body_coarse = std::max(body_coarse, n);
                r.norms.push_back(n);
            }
        } else {
            tail = std::max(tail, n);
        }
    }
    bool refined_stable = body_fine <= body_coarse * (1.0 + 1e-2);
    bool bounded = tail <= body_fine * (1.0 + 1e-6);
    r.sampled = std::isfinite(tail) && std::isfinite(body_fine) && refined_stable && bounded;
    if (r.spectral && r.sampled)
        r.verdict = Verdict::yes;
    else if (!r.sampled)
        r.verdict = Verdict::no;
    else
        r.verdict = Verdict::inconclusive;
    std::ostringstream os;
    os << "min Re(lambda) = " << r.min_real_part << ", sup ||t^E|| on [1e-8,1] = " << body_fine
       << ", on [1e-16,1e-8] = " << tail;
    if (r.verdict == Verdict::inconclusive) os << " (spectral and sampling checks disagree)";
    r.detail = os.str();
    return r;
}

double commutator_norm(const ScalingMap& e1, const ScalingMap& e2) {
    if (e1.dim() != e2.dim()) throw InputError("commutator of maps with different dimensions");
    const Matrix& a = e1.matrix();
    const Matrix& b = e2.matrix();
    return (a * b - b * a).norm();
}

}  // namespace hkl::linops
