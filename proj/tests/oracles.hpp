#pragma once

// Test-only reference computations, kept independent of the library's own
// evaluation paths: adaptive Simpson quadrature, a chi-square quantile
// solver built on it, and small helpers.

#include <cmath>
#include <functional>
#include <stdexcept>

namespace oracle {

inline double simpson(const std::function<double(double)>& f, double a, double b) {
    const double c = 0.5 * (a + b);
    return (b - a) / 6.0 * (f(a) + 4.0 * f(c) + f(b));
}

inline double adaptive_simpson_rec(const std::function<double(double)>& f, double a, double b,
                                   double whole, double eps, int depth) {
    const double c = 0.5 * (a + b);
    const double left = simpson(f, a, c);
    const double right = simpson(f, c, b);
    if (depth <= 0 || std::abs(left + right - whole) < 15.0 * eps)
        return left + right + (left + right - whole) / 15.0;
    return adaptive_simpson_rec(f, a, c, left, 0.5 * eps, depth - 1) +
           adaptive_simpson_rec(f, c, b, right, 0.5 * eps, depth - 1);
}

inline double integrate(const std::function<double(double)>& f, double a, double b,
                        double eps = 1e-12, int depth = 40) {
    // pre-split so narrow features cannot hide from the first probes
    const int panels = 16;
    const double h = (b - a) / panels;
    double total = 0.0;
    for (int i = 0; i < panels; ++i) {
        const double lo = a + i * h;
        const double hi = lo + h;
        total += adaptive_simpson_rec(f, lo, hi, simpson(f, lo, hi), eps / panels, depth);
    }
    return total;
}

inline double normal_pdf(double t) {
    return std::exp(-0.5 * t * t) / std::sqrt(2.0 * 3.14159265358979323846);
}

// E|Z|^p by direct quadrature on (0, 40).
inline double abs_moment_by_integration(double p) {
    auto f = [p](double t) { return 2.0 * std::pow(t, p) * normal_pdf(t); };
    // split near zero where t^p may have unbounded derivatives
    return integrate(f, 0.0, 1.0, 1e-13) + integrate(f, 1.0, 40.0, 1e-13);
}

inline double chi2_pdf(double x, int k) {
    if (x <= 0.0) return 0.0;
    const double kh = 0.5 * k;
    return std::exp((kh - 1.0) * std::log(x) - 0.5 * x - kh * std::log(2.0) - std::lgamma(kh));
}

inline double chi2_cdf(double x, int k) {
    if (x <= 0.0) return 0.0;
    auto f = [k](double t) { return chi2_pdf(t, k); };
    // integrand is smooth away from 0; for k = 1 the density has an
    // integrable singularity at 0, so substitute x = u^2 there
    if (k == 1) {
        auto g = [](double u) { return 2.0 * u * chi2_pdf(u * u, 1); };
        return integrate(g, 0.0, std::sqrt(x), 1e-13);
    }
    return integrate(f, 0.0, x, 1e-13);
}

inline double chi2_quantile(double p, int k) {
    if (p <= 0.0 || p >= 1.0) throw std::invalid_argument("chi2_quantile: p in (0,1)");
    double lo = 0.0, hi = 1.0;
    while (chi2_cdf(hi, k) < p) hi *= 2.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (chi2_cdf(mid, k) < p)
            lo = mid;
        else
            hi = mid;
        if (hi - lo < 1e-13 * std::max(1.0, hi)) break;
    }
    return 0.5 * (lo + hi);
}

}  // namespace oracle
