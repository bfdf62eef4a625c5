#pragma once

#include <vector>

#include "spinglass/kernels.hpp"

namespace spinglass {

/// One Gaussian smoothing step of the backward recursion.
struct CascadeStep {
    double variance = 0.0;
    double zeta = 0.0;  // exponent; 0 means a plain expectation
};

struct CascadeGrid {
    double dx = 0.02;
    /// Gauss-Hermite order for every step; 0 selects per step: order 40 when the
    /// step sd is at most 0.6, otherwise a Gaussian-weighted trapezoid rule.
    int order = 0;
    double half_width = 0.0;  // 0 selects 6 * total sd + 6
};

/// Trapezoid rule on [-9, 9] with spacing min(0.2, 0.33 / sd), weights normalized.
kernels::NormalRule trapezoid_rule(double sd);

/// Backward recursion X_K = log cosh,
///   X_{k-1}(x) = (1/zeta_k) log E exp(zeta_k X_k(x + sqrt(v_k) Z)),
/// tabulated on a uniform grid that contains x = 0.
class Cascade {
public:
    explicit Cascade(std::vector<CascadeStep> steps, const CascadeGrid& grid = {});

    /// X_0(0).
    double value() const;
    /// Entry k-1 is E[X_k'(Y_k)^2] where Y is the path started at 0 under the
    /// measure tilted by exp(zeta_k (X_k(Y_k) - X_{k-1}(Y_{k-1}))) step by step.
    std::vector<double> squared_slope_means() const;

    const std::vector<CascadeStep>& steps() const noexcept { return steps_; }

private:
    std::vector<CascadeStep> steps_;
    std::vector<kernels::NormalRule> rules_;
    std::vector<kernels::GridTable> tables_;  // X_0 .. X_{K-1}
    std::size_t center_ = 0;

    kernels::GridTable terminal_table() const;
};

}  // namespace spinglass
