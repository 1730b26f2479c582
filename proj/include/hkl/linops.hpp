#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "hkl/rational.hpp"

namespace hkl::linops {

using Matrix = Eigen::MatrixXd;

/** \brief Generator E of the one-parameter group t^E = exp((ln t) E).
 *
 * Immutable after construction. Optionally carries exact rational entries
 * (row-major) so traces of inputs like I/6 stay exact.
 */
class ScalingMap {
  public:
    explicit ScalingMap(Matrix m);
    ScalingMap(int dim, std::vector<Rational> exact_row_major);

    static ScalingMap diagonal(const std::vector<double>& d);
    static ScalingMap diagonal(const std::vector<Rational>& d);
    static ScalingMap zero(int dim);

    int dim() const { return static_cast<int>(m_.rows()); }
    const Matrix& matrix() const { return m_; }
    const std::optional<std::vector<Rational>>& exact() const { return exact_; }

    ScalingMap operator-(const ScalingMap& o) const;
    ScalingMap operator+(const ScalingMap& o) const;
    ScalingMap transpose() const;

  private:
    Matrix m_;
    std::optional<std::vector<Rational>> exact_;
};

ScalingMap direct_sum(const ScalingMap& a, const ScalingMap& b);

// exp(A) by scaling and squaring with a degree-6 Pade core.
Matrix expm(const Matrix& a);

// t^E; t must be positive. 1^E is the identity exactly.
Matrix group_element(const ScalingMap& e, double t);

double trace(const ScalingMap& e);
std::optional<Rational> exact_trace(const ScalingMap& e);

// Spectral (operator 2-) norm.
double op_norm(const Matrix& m);

enum class Verdict { yes, no, inconclusive };
const char* to_string(Verdict v);

struct GroupReport {
    Verdict verdict = Verdict::inconclusive;
    bool spectral = false;        // outcome of the eigenvalue test
    bool sampled = false;         // outcome of the sampling test
    double min_real_part = 0.0;   // min Re(lambda)
    std::vector<double> norms;    // ||t^E|| samples used by the sampling test
    std::string detail;
};

GroupReport is_contracting(const ScalingMap& e);
GroupReport is_non_expanding(const ScalingMap& e);

// Frobenius norm of [E1, E2].
double commutator_norm(const ScalingMap& e1, const ScalingMap& e2);

}  // namespace hkl::linops
