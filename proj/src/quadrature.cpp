#include "spinglass/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace spinglass {

namespace {

kernels::NormalRule build_rule(int order)
{
    // Jacobi matrix of the probabilists' Hermite polynomials.
    Eigen::MatrixXd j = Eigen::MatrixXd::Zero(order, order);
    for (int k = 1; k < order; ++k) {
        j(k, k - 1) = std::sqrt(static_cast<double>(k));
        j(k - 1, k) = j(k, k - 1);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(j);
    kernels::NormalRule rule;
    rule.nodes.resize(static_cast<std::size_t>(order));
    rule.weights.resize(static_cast<std::size_t>(order));
    double total = 0.0;
    for (int k = 0; k < order; ++k) {
        rule.nodes[static_cast<std::size_t>(k)] = solver.eigenvalues()(k);
        const double v = solver.eigenvectors()(0, k);
        rule.weights[static_cast<std::size_t>(k)] = v * v;
        total += v * v;
    }
    for (auto& w : rule.weights)
        w /= total;
    // Symmetrize: the spectrum is symmetric about zero.
    for (int k = 0; k < order / 2; ++k) {
        auto a = static_cast<std::size_t>(k);
        auto b = static_cast<std::size_t>(order - 1 - k);
        const double x = 0.5 * (rule.nodes[b] - rule.nodes[a]);
        const double w = 0.5 * (rule.weights[a] + rule.weights[b]);
        rule.nodes[a] = -x;
        rule.nodes[b] = x;
        rule.weights[a] = w;
        rule.weights[b] = w;
    }
    if (order % 2 == 1)
        rule.nodes[static_cast<std::size_t>(order / 2)] = 0.0;
    return rule;
}

}  // namespace

const kernels::NormalRule& normal_rule(int order)
{
    if (order < 1 || order > 128)
        throw std::invalid_argument("quadrature order must be in [1, 128]");
    static std::mutex mutex;
    static std::map<int, kernels::NormalRule> cache;
    std::lock_guard lock(mutex);
    auto it = cache.find(order);
    if (it == cache.end())
        it = cache.emplace(order, build_rule(order)).first;
    return it->second;
}

}  // namespace spinglass
