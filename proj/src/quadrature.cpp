#include "nishilab/quadrature.hpp"

#include <cmath>
#include <stdexcept>

#include "nishilab/stats.hpp"

namespace nishilab {

GaussHermite::GaussHermite(int n) {
    if (n < 1) throw std::invalid_argument("GaussHermite: need at least one node");
    nodes.assign(n, 0.0);
    weights.assign(n, 0.0);
    const double pim4 = 0.7511255444649425;  // pi^{-1/4}
    const int half = (n + 1) / 2;
    double z = 0.0;
    for (int i = 0; i < half; ++i) {
        // Stroud/Secrest initial guesses, largest root first.
        if (i == 0)
            z = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -1.0 / 6.0);
        else if (i == 1)
            z -= 1.14 * std::pow(n, 0.426) / z;
        else if (i == 2)
            z = 1.86 * z - 0.86 * nodes[n - 1];
        else if (i == 3)
            z = 1.91 * z - 0.91 * nodes[n - 2];
        else
            z = 2.0 * z - nodes[n - i + 1];

        double pp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p1 = pim4, p2 = 0.0;
            for (int j = 1; j <= n; ++j) {
                double p3 = p2;
                p2 = p1;
                p1 = z * std::sqrt(2.0 / j) * p2 - std::sqrt((j - 1.0) / j) * p3;
            }
            pp = std::sqrt(2.0 * n) * p2;
            double z1 = z;
            z = z1 - p1 / pp;
            if (std::abs(z - z1) <= 1e-15 * std::max(1.0, std::abs(z))) break;
        }
        nodes[n - 1 - i] = z;
        nodes[i] = -z;
        weights[n - 1 - i] = 2.0 / (pp * pp);
        weights[i] = weights[n - 1 - i];
    }
}

double GaussHermite::expect(const std::function<double(double)>& f) const {
    const double inv_sqrt_pi = 1.0 / std::sqrt(M_PI);
    const double sqrt2 = std::sqrt(2.0);
    KahanSum s;
    for (std::size_t i = 0; i < nodes.size(); ++i)
        s.add(weights[i] * inv_sqrt_pi * f(sqrt2 * nodes[i]));
    return s.value();
}

std::vector<double> quadrature_disorder_expectation(
    std::span<const double> means, std::span<const double> stddevs, std::size_t n_outputs,
    const std::function<std::vector<double>(std::span<const double>)>& f, int nodes) {
    if (means.size() != stddevs.size())
        throw std::invalid_argument("quadrature_disorder_expectation: size mismatch");
    const std::size_t dims = means.size();
    if (dims > 3)
        throw std::invalid_argument(
            "quadrature_disorder_expectation: tensor quadrature limited to 3 couplings");

    GaussHermite gh(nodes);
    const double inv_sqrt_pi = 1.0 / std::sqrt(M_PI);
    const double sqrt2 = std::sqrt(2.0);

    std::vector<KahanSum> acc(n_outputs);
    std::vector<double> j(dims);
    std::vector<std::size_t> idx(dims, 0);
    if (dims == 0) {
        auto v = f(j);
        return v;
    }
    while (true) {
        double weight = 1.0;
        for (std::size_t d = 0; d < dims; ++d) {
            weight *= gh.weights[idx[d]] * inv_sqrt_pi;
            j[d] = means[d] + stddevs[d] * sqrt2 * gh.nodes[idx[d]];
        }
        auto v = f(j);
        if (v.size() != n_outputs)
            throw std::invalid_argument("quadrature_disorder_expectation: output arity changed");
        for (std::size_t k = 0; k < n_outputs; ++k) acc[k].add(weight * v[k]);

        std::size_t d = 0;
        while (d < dims && ++idx[d] == gh.nodes.size()) idx[d++] = 0;
        if (d == dims) break;
    }
    std::vector<double> out(n_outputs);
    for (std::size_t k = 0; k < n_outputs; ++k) out[k] = acc[k].value();
    return out;
}

}  // namespace nishilab
