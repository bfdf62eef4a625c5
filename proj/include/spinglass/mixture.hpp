#pragma once

#include <span>
#include <stdexcept>
#include <vector>

namespace spinglass {

/// Covariance mixture xi(r) = sum_p a_p r^p with a_p >= 0 and a_0 = 0.
///
/// coefficients()[p - 1] holds a_p. The series is truncated at the highest
/// stored degree.
class Mixture {
public:
    explicit Mixture(std::vector<double> coefficients);

    /// xi(r) = r^2.
    static Mixture sk();
    /// xi(r) = r^p.
    static Mixture pure(int p);

    double operator()(double r) const;
    double derivative(double r) const;
    double second_derivative(double r) const;

    /// Convex dual xi*(s) = sup_{r >= 0} (r s - xi(r)).
    ///
    /// Throws std::domain_error when xi is linear and s exceeds its slope,
    /// where the supremum is infinite.
    double dual(double s) const;
    /// The maximizing r in dual(s); equals (xi')^{-1}(s) for s > xi'(0).
    double dual_argmax(double s) const;

    std::span<const double> coefficients() const noexcept { return coefficients_; }
    int degree() const noexcept { return static_cast<int>(coefficients_.size()); }
    double coefficient(int p) const noexcept;
    bool is_sk() const noexcept;
    /// True when some a_p > 0 with p >= 2, so xi is superlinear.
    bool superlinear() const noexcept;

    bool operator==(const Mixture&) const = default;

private:
    std::vector<double> coefficients_;
};

}  // namespace spinglass
