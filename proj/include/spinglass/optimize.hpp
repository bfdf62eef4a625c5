#pragma once

#include <functional>
#include <span>
#include <vector>

namespace spinglass {

struct NelderMeadOptions {
    int max_evaluations = 20000;
    double ftol = 1e-7;       // stop when the simplex values span less than this
    double initial_step = 0.5;
    int restarts = 2;         // fresh simplices around the best point after convergence
};

struct NelderMeadResult {
    std::vector<double> x;
    double value = 0.0;
    int evaluations = 0;
    bool converged = false;
};

/// Minimizes f with the adaptive-parameter Nelder-Mead simplex method.
NelderMeadResult nelder_mead(const std::function<double(std::span<const double>)>& f,
                             std::vector<double> x0, const NelderMeadOptions& opts = {});

/// Least-squares nondecreasing fit (pool adjacent violators), then clipped at zero.
std::vector<double> project_monotone_nonnegative(std::span<const double> x);

}  // namespace spinglass
