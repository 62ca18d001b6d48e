#include "qrisk/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace qrisk {

SymMatrix::SymMatrix(std::size_t dim) : dim_(dim), a_(dim * dim, 0.0) {
    if (dim == 0) throw invalid_input("SymMatrix: dimension must be positive");
}

SymMatrix SymMatrix::identity(std::size_t dim) {
    SymMatrix m(dim);
    for (std::size_t i = 0; i < dim; ++i) m.set(i, i, 1.0);
    return m;
}

bool SymMatrix::all_finite() const {
    for (double v : a_)
        if (!std::isfinite(v)) return false;
    return true;
}

double SymMatrix::max_abs() const {
    double m = 0.0;
    for (double v : a_) m = std::max(m, std::abs(v));
    return m;
}

double SymMatrix::trace() const {
    double t = 0.0;
    for (std::size_t i = 0; i < dim_; ++i) t += (*this)(i, i);
    return t;
}

namespace {

double off_diag_frobenius(const std::vector<double>& a, std::size_t d) {
    double s = 0.0;
    for (std::size_t p = 0; p < d; ++p)
        for (std::size_t q = p + 1; q < d; ++q) s += 2.0 * a[p * d + q] * a[p * d + q];
    return std::sqrt(s);
}

}  // namespace

Spectrum sym_eigen(const SymMatrix& input) {
    if (!input.all_finite()) throw invalid_input("sym_eigen: non-finite entry");
    const std::size_t d = input.dim();
    std::vector<double> a = input.data();
    std::vector<double> v(d * d, 0.0);
    for (std::size_t i = 0; i < d; ++i) v[i * d + i] = 1.0;

    double fro = 0.0;
    for (double x : a) fro += x * x;
    fro = std::sqrt(fro);
    const double threshold = 1e-12 * std::max(fro, std::numeric_limits<double>::min());

    const int max_sweeps = 100;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        if (off_diag_frobenius(a, d) <= threshold) break;
        for (std::size_t p = 0; p < d; ++p) {
            for (std::size_t q = p + 1; q < d; ++q) {
                const double apq = a[p * d + q];
                if (apq == 0.0) continue;
                const double app = a[p * d + p];
                const double aqq = a[q * d + q];
                const double theta = (aqq - app) / (2.0 * apq);
                // tan of the rotation angle, smaller root for stability
                double t;
                if (std::abs(theta) > 1e154) {
                    t = 0.5 / theta;
                } else {
                    t = 1.0 / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                    if (theta < 0.0) t = -t;
                }
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                const double tau = s / (1.0 + c);

                a[p * d + p] = app - t * apq;
                a[q * d + q] = aqq + t * apq;
                a[p * d + q] = 0.0;
                a[q * d + p] = 0.0;
                for (std::size_t i = 0; i < d; ++i) {
                    if (i != p && i != q) {
                        const double aip = a[i * d + p];
                        const double aiq = a[i * d + q];
                        a[i * d + p] = aip - s * (aiq + tau * aip);
                        a[p * d + i] = a[i * d + p];
                        a[i * d + q] = aiq + s * (aip - tau * aiq);
                        a[q * d + i] = a[i * d + q];
                    }
                    const double vip = v[i * d + p];
                    const double viq = v[i * d + q];
                    v[i * d + p] = vip - s * (viq + tau * vip);
                    v[i * d + q] = viq + s * (vip - tau * viq);
                }
            }
        }
    }

    std::vector<std::size_t> order(d);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t i, std::size_t j) { return a[i * d + i] < a[j * d + j]; });

    Spectrum spec;
    spec.dim = d;
    spec.eigenvalues.resize(d);
    spec.eigenvectors.assign(d * d, 0.0);
    for (std::size_t j = 0; j < d; ++j) {
        spec.eigenvalues[j] = a[order[j] * d + order[j]];
        for (std::size_t i = 0; i < d; ++i) spec.eigenvectors[i * d + j] = v[i * d + order[j]];
    }
    return spec;
}

std::vector<double> cholesky(const SymMatrix& m) {
    if (!m.all_finite()) throw invalid_input("cholesky: non-finite entry");
    const std::size_t d = m.dim();
    std::vector<double> l(d * d, 0.0);
    for (std::size_t j = 0; j < d; ++j) {
        double diag = m(j, j);
        for (std::size_t k = 0; k < j; ++k) diag -= l[j * d + k] * l[j * d + k];
        if (diag <= 0.0) throw not_pd("cholesky: pivot <= 0");
        l[j * d + j] = std::sqrt(diag);
        for (std::size_t i = j + 1; i < d; ++i) {
            double s = m(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= l[i * d + k] * l[j * d + k];
            l[i * d + j] = s / l[j * d + j];
        }
    }
    return l;
}

std::vector<double> solve_lower(const std::vector<double>& l, std::size_t d, const std::vector<double>& b) {
    std::vector<double> y(d);
    for (std::size_t i = 0; i < d; ++i) {
        double s = b[i];
        for (std::size_t k = 0; k < i; ++k) s -= l[i * d + k] * y[k];
        y[i] = s / l[i * d + i];
    }
    return y;
}

std::vector<double> solve_lower_transposed(const std::vector<double>& l, std::size_t d,
                                           const std::vector<double>& b) {
    std::vector<double> x(d);
    for (std::size_t ii = d; ii-- > 0;) {
        double s = b[ii];
        for (std::size_t k = ii + 1; k < d; ++k) s -= l[k * d + ii] * x[k];
        x[ii] = s / l[ii * d + ii];
    }
    return x;
}

SymMatrix inverse_sqrt(const SymMatrix& a, double rel_tol) {
    const Spectrum spec = sym_eigen(a);
    const std::size_t d = a.dim();
    if (spec.min() <= rel_tol * std::max(spec.max(), 0.0))
        throw not_pd("inverse_sqrt: matrix not positive definite within tolerance");
    SymMatrix r(d);
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = i; j < d; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < d; ++k)
                s += spec.vec(i, k) * spec.vec(j, k) / std::sqrt(spec.eigenvalues[k]);
            r.set(i, j, s);
        }
    }
    return r;
}

double log_gamma(double x) {
    // Lanczos, g = 7, 9 coefficients.
    static const double coef[9] = {
        0.99999999999980993,    676.5203681218851,     -1259.1392167224028,
        771.32342877765313,     -176.61502916214059,   12.507343278686905,
        -0.13857109526572012,   9.9843695780195716e-6, 1.5056327351493116e-7};
    if (x <= 0.0) throw invalid_input("log_gamma: requires x > 0");
    if (x < 0.5) {
        // reflection
        const double pi = 3.14159265358979323846;
        return std::log(pi / std::sin(pi * x)) - log_gamma(1.0 - x);
    }
    const double z = x - 1.0;
    double sum = coef[0];
    for (int i = 1; i < 9; ++i) sum += coef[i] / (z + i);
    const double t = z + 7.5;
    return 0.5 * std::log(2.0 * 3.14159265358979323846) + (z + 0.5) * std::log(t) - t + std::log(sum);
}

namespace {

double lower_gamma_series(double a, double x) {
    double term = 1.0 / a;
    double sum = term;
    for (int k = 1; k < 10000; ++k) {
        term *= x / (a + k);
        sum += term;
        if (std::abs(term) < std::abs(sum) * 1e-17) break;
    }
    return sum * std::exp(-x + a * std::log(x) - log_gamma(a));
}

double upper_gamma_cont_fraction(double a, double x) {
    // Lentz's algorithm for Q(a, x).
    const double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < 10000; ++i) {
        const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < 1e-16) break;
    }
    return std::exp(-x + a * std::log(x) - log_gamma(a)) * h;
}

}  // namespace

double reg_lower_gamma(double a, double x) {
    if (a <= 0.0) throw invalid_input("reg_lower_gamma: requires a > 0");
    if (x < 0.0) throw invalid_input("reg_lower_gamma: requires x >= 0");
    if (x == 0.0) return 0.0;
    if (x < a + 1.0) return lower_gamma_series(a, x);
    return 1.0 - upper_gamma_cont_fraction(a, x);
}

double inv_gamma_cdf(double x, double alpha, double beta) {
    if (x <= 0.0 || alpha <= 0.0 || beta <= 0.0)
        throw invalid_input("inv_gamma_cdf: requires x, alpha, beta > 0");
    return 1.0 - reg_lower_gamma(alpha, beta / x);
}

void gauss_hermite_rule(std::size_t n, std::vector<double>& x, std::vector<double>& w) {
    if (n < 1) throw invalid_input("gauss_hermite_rule: need at least one node");
    x.assign(n, 0.0);
    w.assign(n, 0.0);
    const double pim4 = 0.7511255444649425;  // pi^{-1/4}
    const std::size_t m = (n + 1) / 2;
    double z = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        // initial guesses per standard practice
        if (i == 0) {
            z = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -0.16667);
        } else if (i == 1) {
            z -= 1.14 * std::pow(static_cast<double>(n), 0.426) / z;
        } else if (i == 2) {
            z = 1.86 * z - 0.86 * x[0];
        } else if (i == 3) {
            z = 1.91 * z - 0.91 * x[1];
        } else {
            z = 2.0 * z - x[i - 2];
        }
        double pp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p1 = pim4;
            double p2 = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                const double p3 = p2;
                p2 = p1;
                p1 = z * std::sqrt(2.0 / (j + 1.0)) * p2 - std::sqrt(static_cast<double>(j) / (j + 1.0)) * p3;
            }
            pp = std::sqrt(2.0 * n) * p2;
            const double z1 = z;
            z = z1 - p1 / pp;
            if (std::abs(z - z1) <= 1e-15 * std::max(1.0, std::abs(z))) break;
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    // ascending nodes
    std::reverse(x.begin(), x.end());
    std::reverse(w.begin(), w.end());
}

double gauss_hermite_expectation(const std::function<double(double)>& f, double sigma, std::size_t nodes) {
    if (nodes < 8 || nodes > 256) throw invalid_input("gauss_hermite_expectation: nodes must lie in [8, 256]");
    if (!(sigma > 0.0)) throw invalid_input("gauss_hermite_expectation: sigma must be positive");
    std::vector<double> x, w;
    gauss_hermite_rule(nodes, x, w);
    const double scale = std::sqrt(2.0) * sigma;
    const double inv_sqrt_pi = 0.5641895835477562869480794515608;
    double s = 0.0;
    for (std::size_t i = 0; i < nodes; ++i) s += w[i] * f(scale * x[i]);
    return s * inv_sqrt_pi;
}

double std_normal_abs_moment(double p) {
    if (p < 0.0) throw invalid_input("std_normal_abs_moment: requires p >= 0");
    // E|Z|^p = 2^{p/2} Gamma((p+1)/2) / sqrt(pi)
    const double log_sqrt_pi = 0.57236494292470008707171367567653;
    return std::exp(0.5 * p * std::log(2.0) + log_gamma(0.5 * (p + 1.0)) - log_sqrt_pi);
}

}  // namespace qrisk
