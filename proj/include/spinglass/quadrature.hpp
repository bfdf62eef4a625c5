#pragma once

#include "spinglass/kernels.hpp"

namespace spinglass {

/// Gauss-Hermite rule for E f(Z), Z ~ N(0,1): sum_k weights[k] f(nodes[k]).
///
/// Rules are computed once per order (Golub-Welsch) and cached; the returned
/// reference stays valid for the lifetime of the program.
const kernels::NormalRule& normal_rule(int order);

}  // namespace spinglass
