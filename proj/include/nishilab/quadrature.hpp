#pragma once

#include <functional>
#include <span>
#include <vector>

namespace nishilab {

// Gauss-Hermite rule for the weight exp(-x^2): sum_i w_i f(x_i) approximates
// the integral over the real line. Nodes by Newton iteration on the
// orthonormal recurrence.
struct GaussHermite {
    explicit GaussHermite(int n = 64);

    std::vector<double> nodes;    // ascending
    std::vector<double> weights;

    // E[f(g)] for a standard normal g.
    double expect(const std::function<double(double)>& f) const;
};

// Tensor-product disorder expectation over at most three independent
// Gaussian couplings J_k = mean[k] + stddev[k] * g_k. Turns small-system
// identity checks into deterministic ~1e-10 assertions.
std::vector<double> quadrature_disorder_expectation(
    std::span<const double> means, std::span<const double> stddevs, std::size_t n_outputs,
    const std::function<std::vector<double>(std::span<const double>)>& f, int nodes = 64);

}  // namespace nishilab
