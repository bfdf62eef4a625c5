#pragma once

#include <span>
#include <vector>

#include "spinglass/model.hpp"

namespace spinglass {

/// H(sigma) for the sample's model; sigma has length config_length().
double hamiltonian(const CouplingSample& c, std::span<const Spin> sigma);

/// Spin configuration together with the local data needed for O(N) single-flip updates.
///
/// For SK and bipartite samples the local fields are kept up to date; p-spin
/// flips sum the tensor entries that touch the flipped index.
class FieldState {
public:
    FieldState(const CouplingSample& c, Configuration sigma);

    const Configuration& configuration() const noexcept { return sigma_; }
    double energy() const noexcept { return energy_; }

    /// H(sigma with spin k flipped) - H(sigma).
    double flip_delta(int k) const;
    /// Flips spin k and updates fields and energy.
    void flip(int k);
    /// Recomputes the energy from scratch (drift control).
    void refresh();

private:
    const CouplingSample* couplings_;
    Configuration sigma_;
    std::vector<double> field_;
    double energy_ = 0.0;
    double inv_sqrt_n_ = 1.0;

    void rebuild_fields();
};

}  // namespace spinglass
