#include "spinglass/energy.hpp"

#include <cmath>
#include <stdexcept>

namespace spinglass {

namespace {

void check_length(const CouplingSample& c, std::span<const Spin> sigma)
{
    if (sigma.size() != static_cast<std::size_t>(c.config_length()))
        throw std::invalid_argument("configuration length does not match the coupling sample");
}

// sum_J J * prod sigma over one tensor, entries row-major with the last index fastest.
double tensor_contraction(const CouplingTensor& t, int n, std::span<const Spin> sigma)
{
    const std::size_t size = t.entries.size();
    std::vector<int> digits(static_cast<std::size_t>(t.order), 0);
    double acc = 0.0;
    for (std::size_t e = 0; e < size; ++e) {
        int sign = 1;
        for (int d : digits)
            sign *= sigma[static_cast<std::size_t>(d)];
        acc += sign * t.entries[e];
        for (int pos = t.order - 1; pos >= 0; --pos) {
            auto& d = digits[static_cast<std::size_t>(pos)];
            if (++d < n)
                break;
            d = 0;
        }
    }
    return acc;
}

double tensor_scale(const CouplingTensor& t, int n)
{
    return t.weight * std::pow(static_cast<double>(n), 0.5 * (1 - t.order));
}

}  // namespace

double hamiltonian(const CouplingSample& c, std::span<const Spin> sigma)
{
    check_length(c, sigma);
    const int n = c.n();
    const auto nn = static_cast<std::size_t>(n);
    const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(n));

    if (c.is_sk()) {
        const auto w = c.matrix();
        double acc = 0.0;
        for (std::size_t i = 0; i < nn; ++i) {
            double row = 0.0;
            for (std::size_t j = 0; j < nn; ++j)
                row += w[i * nn + j] * sigma[j];
            acc += sigma[i] * row;
        }
        return acc * inv_sqrt_n;
    }
    if (c.is_bipartite()) {
        const auto w = c.matrix();
        double acc = 0.0;
        for (std::size_t i = 0; i < nn; ++i) {
            double row = 0.0;
            for (std::size_t j = 0; j < nn; ++j)
                row += w[i * nn + j] * sigma[nn + j];
            acc += sigma[i] * row;
        }
        return acc * inv_sqrt_n;
    }
    double acc = 0.0;
    for (const auto& t : c.pspin().tensors)
        acc += tensor_scale(t, n) * tensor_contraction(t, n, sigma);
    return acc;
}

FieldState::FieldState(const CouplingSample& c, Configuration sigma)
    : couplings_(&c), sigma_(std::move(sigma)),
      inv_sqrt_n_(1.0 / std::sqrt(static_cast<double>(c.n())))
{
    check_length(c, sigma_);
    refresh();
}

void FieldState::rebuild_fields()
{
    const auto nn = static_cast<std::size_t>(couplings_->n());
    field_.assign(sigma_.size(), 0.0);
    if (couplings_->is_sk()) {
        const auto w = couplings_->matrix();
        for (std::size_t k = 0; k < nn; ++k) {
            double acc = 0.0;
            for (std::size_t j = 0; j < nn; ++j)
                if (j != k)
                    acc += (w[k * nn + j] + w[j * nn + k]) * sigma_[j];
            field_[k] = acc * inv_sqrt_n_;
        }
    } else if (couplings_->is_bipartite()) {
        const auto w = couplings_->matrix();
        for (std::size_t i = 0; i < nn; ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < nn; ++j)
                acc += w[i * nn + j] * sigma_[nn + j];
            field_[i] = acc * inv_sqrt_n_;
        }
        for (std::size_t j = 0; j < nn; ++j) {
            double acc = 0.0;
            for (std::size_t i = 0; i < nn; ++i)
                acc += w[i * nn + j] * sigma_[i];
            field_[nn + j] = acc * inv_sqrt_n_;
        }
    }
}

void FieldState::refresh()
{
    energy_ = hamiltonian(*couplings_, sigma_);
    rebuild_fields();
}

double FieldState::flip_delta(int k) const
{
    const auto kk = static_cast<std::size_t>(k);
    if (couplings_->is_sk() || couplings_->is_bipartite())
        return -2.0 * sigma_[kk] * field_[kk];

    // Terms in which index k appears an odd number of times change sign.
    const int n = couplings_->n();
    double delta = 0.0;
    for (const auto& t : couplings_->pspin().tensors) {
        std::vector<int> digits(static_cast<std::size_t>(t.order), 0);
        double acc = 0.0;
        for (double entry : t.entries) {
            int sign = 1;
            int hits = 0;
            for (int d : digits) {
                sign *= sigma_[static_cast<std::size_t>(d)];
                hits += (d == k);
            }
            if (hits & 1)
                acc += sign * entry;
            for (int pos = t.order - 1; pos >= 0; --pos) {
                auto& d = digits[static_cast<std::size_t>(pos)];
                if (++d < n)
                    break;
                d = 0;
            }
        }
        delta -= 2.0 * tensor_scale(t, n) * acc;
    }
    return delta;
}

void FieldState::flip(int k)
{
    const auto kk = static_cast<std::size_t>(k);
    energy_ += flip_delta(k);
    const double old = sigma_[kk];
    sigma_[kk] = static_cast<Spin>(-sigma_[kk]);

    const auto nn = static_cast<std::size_t>(couplings_->n());
    if (couplings_->is_sk()) {
        const auto w = couplings_->matrix();
        const double c = -2.0 * old * inv_sqrt_n_;
        for (std::size_t j = 0; j < nn; ++j)
            if (j != kk)
                field_[j] += c * (w[j * nn + kk] + w[kk * nn + j]);
    } else if (couplings_->is_bipartite()) {
        const auto w = couplings_->matrix();
        const double c = -2.0 * old * inv_sqrt_n_;
        if (kk < nn) {
            for (std::size_t j = 0; j < nn; ++j)
                field_[nn + j] += c * w[kk * nn + j];
        } else {
            const std::size_t j = kk - nn;
            for (std::size_t i = 0; i < nn; ++i)
                field_[i] += c * w[i * nn + j];
        }
    }
}

}  // namespace spinglass
