#include "spinglass/mixture.hpp"

#include <cmath>
#include <limits>

namespace spinglass {

Mixture::Mixture(std::vector<double> coefficients) : coefficients_(std::move(coefficients))
{
    for (double a : coefficients_) {
        if (!(a >= 0.0) || !std::isfinite(a))
            throw std::invalid_argument("mixture coefficients must be finite and nonnegative");
    }
    while (!coefficients_.empty() && coefficients_.back() == 0.0)
        coefficients_.pop_back();
}

Mixture Mixture::sk() { return Mixture({0.0, 1.0}); }

Mixture Mixture::pure(int p)
{
    if (p < 1)
        throw std::invalid_argument("mixture degree must be positive");
    std::vector<double> a(static_cast<std::size_t>(p), 0.0);
    a.back() = 1.0;
    return Mixture(std::move(a));
}

double Mixture::coefficient(int p) const noexcept
{
    if (p < 1 || p > degree())
        return 0.0;
    return coefficients_[static_cast<std::size_t>(p - 1)];
}

bool Mixture::is_sk() const noexcept
{
    return coefficients_.size() == 2 && coefficients_[0] == 0.0 && coefficients_[1] == 1.0;
}

bool Mixture::superlinear() const noexcept
{
    for (std::size_t i = 1; i < coefficients_.size(); ++i)
        if (coefficients_[i] > 0.0)
            return true;
    return false;
}

double Mixture::operator()(double r) const
{
    // Horner on sum_{p>=1} a_p r^p = r * (a_1 + r (a_2 + ...)).
    double acc = 0.0;
    for (auto it = coefficients_.rbegin(); it != coefficients_.rend(); ++it)
        acc = acc * r + *it;
    return acc * r;
}

double Mixture::derivative(double r) const
{
    double acc = 0.0;
    for (int p = degree(); p >= 1; --p)
        acc = acc * r + p * coefficients_[static_cast<std::size_t>(p - 1)];
    return acc;
}

double Mixture::second_derivative(double r) const
{
    double acc = 0.0;
    for (int p = degree(); p >= 2; --p)
        acc = acc * r + p * (p - 1) * coefficients_[static_cast<std::size_t>(p - 1)];
    return acc;
}

double Mixture::dual_argmax(double s) const
{
    if (!std::isfinite(s))
        throw std::invalid_argument("dual argument must be finite");
    // r s - xi(r) is concave on r >= 0 with slope s - xi'(r).
    if (s <= derivative(0.0))
        return 0.0;
    if (!superlinear())
        throw std::domain_error("dual is infinite");
    double hi = 1.0;
    while (derivative(hi) < s)
        hi *= 2.0;
    double lo = 0.0;
    double r = 0.5 * hi;
    // Safeguarded Newton on xi'(r) = s.
    for (int it = 0; it < 200; ++it) {
        const double g = derivative(r) - s;
        if (g > 0.0)
            hi = r;
        else
            lo = r;
        const double h = second_derivative(r);
        double next = h > 0.0 ? r - g / h : 0.5 * (lo + hi);
        if (!(next > lo && next < hi))
            next = 0.5 * (lo + hi);
        if (std::abs(next - r) <= 1e-16 * (1.0 + r)) {
            r = next;
            break;
        }
        r = next;
    }
    return r;
}

double Mixture::dual(double s) const
{
    const double r = dual_argmax(s);
    return r * s - (*this)(r);
}

}  // namespace spinglass
