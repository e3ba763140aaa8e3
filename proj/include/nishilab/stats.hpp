#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace nishilab {

// Neumaier-compensated running sum. All disorder/thermal reductions go
// through this so that results are permutation-stable to ~1e-15.
class KahanSum {
public:
    void add(double x) {
        double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

inline double compensated_sum(std::span<const double> xs) {
    KahanSum s;
    for (double x : xs) s.add(x);
    return s.value();
}

struct MeanStderr {
    double mean = 0.0;
    double stderr_ = 0.0;  // standard error of the mean
    std::uint64_t n = 0;
};

// Two-pass mean/variance; deterministic for a fixed element order.
inline MeanStderr mean_stderr(std::span<const double> xs) {
    MeanStderr r;
    r.n = xs.size();
    if (r.n == 0) return r;
    r.mean = compensated_sum(xs) / static_cast<double>(r.n);
    if (r.n < 2) return r;
    KahanSum sq;
    for (double x : xs) {
        double d = x - r.mean;
        sq.add(d * d);
    }
    double var = sq.value() / static_cast<double>(r.n - 1);
    if (var < 0.0) var = 0.0;
    r.stderr_ = std::sqrt(var / static_cast<double>(r.n));
    return r;
}

// Sample covariance matrix of column vectors stored row-per-observation.
// cov[a][b] is the covariance of components a and b (divisor n-1).
inline std::vector<std::vector<double>> sample_covariance(
    const std::vector<std::vector<double>>& rows, std::span<const double> means) {
    std::size_t k = means.size();
    std::vector<std::vector<double>> cov(k, std::vector<double>(k, 0.0));
    if (rows.size() < 2) return cov;
    for (std::size_t a = 0; a < k; ++a) {
        for (std::size_t b = a; b < k; ++b) {
            KahanSum s;
            for (const auto& row : rows) s.add((row[a] - means[a]) * (row[b] - means[b]));
            double c = s.value() / static_cast<double>(rows.size() - 1);
            cov[a][b] = c;
            cov[b][a] = c;
        }
    }
    return cov;
}

// Integrated autocorrelation time using Geyer's initial positive sequence:
// tau_int = 1/2 + sum rho_k, truncated at the first negative pair sum
// Gamma_m = rho_{2m} + rho_{2m+1}.  Returns tau_int >= 0.5.
inline double integrated_autocorrelation_time(std::span<const double> xs) {
    std::size_t n = xs.size();
    if (n < 4) return 0.5;
    double mean = compensated_sum(xs) / static_cast<double>(n);
    std::vector<double> d(n);
    for (std::size_t i = 0; i < n; ++i) d[i] = xs[i] - mean;
    KahanSum c0s;
    for (double v : d) c0s.add(v * v);
    double c0 = c0s.value() / static_cast<double>(n);
    if (c0 <= 0.0) return 0.5;  // constant series
    auto acf = [&](std::size_t lag) {
        KahanSum s;
        for (std::size_t i = 0; i + lag < n; ++i) s.add(d[i] * d[i + lag]);
        return s.value() / static_cast<double>(n) / c0;
    };
    double tau = 0.5;
    for (std::size_t m = 1; 2 * m + 1 < n / 2; ++m) {
        double gamma = acf(2 * m - 1) + acf(2 * m);
        if (gamma <= 0.0) break;
        tau += gamma;
    }
    return tau;
}

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_stderr = 0.0;
};

// Ordinary least squares y = a + b x. Needs >= 3 points for an error bar.
inline LineFit fit_line(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("fit_line: need at least two matching points");
    std::size_t n = x.size();
    double xm = compensated_sum(x) / static_cast<double>(n);
    double ym = compensated_sum(y) / static_cast<double>(n);
    KahanSum sxx, sxy;
    for (std::size_t i = 0; i < n; ++i) {
        sxx.add((x[i] - xm) * (x[i] - xm));
        sxy.add((x[i] - xm) * (y[i] - ym));
    }
    if (sxx.value() == 0.0) throw std::invalid_argument("fit_line: degenerate abscissa");
    LineFit f;
    f.slope = sxy.value() / sxx.value();
    f.intercept = ym - f.slope * xm;
    if (n > 2) {
        KahanSum res;
        for (std::size_t i = 0; i < n; ++i) {
            double r = y[i] - (f.intercept + f.slope * x[i]);
            res.add(r * r);
        }
        double s2 = res.value() / static_cast<double>(n - 2);
        f.slope_stderr = std::sqrt(s2 / sxx.value());
    }
    return f;
}

}  // namespace nishilab
