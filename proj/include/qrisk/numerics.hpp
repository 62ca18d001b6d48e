#pragma once

#include <cstddef>
#include <functional>
#include <utility>
#include <vector>

#include "qrisk/common.hpp"

namespace qrisk {

// Dense symmetric matrix, full row-major storage kept exactly symmetric:
// set(i, j, v) writes both (i, j) and (j, i).
class SymMatrix {
  public:
    explicit SymMatrix(std::size_t dim);

    static SymMatrix identity(std::size_t dim);

    std::size_t dim() const { return dim_; }

    double operator()(std::size_t i, std::size_t j) const { return a_[i * dim_ + j]; }

    void set(std::size_t i, std::size_t j, double v) {
        a_[i * dim_ + j] = v;
        a_[j * dim_ + i] = v;
    }

    void add(std::size_t i, std::size_t j, double v) { set(i, j, (*this)(i, j) + v); }

    const std::vector<double>& data() const { return a_; }

    bool all_finite() const;
    double max_abs() const;
    double trace() const;

  private:
    std::size_t dim_;
    std::vector<double> a_;
};

// Eigendecomposition A = Q diag(eigenvalues) Q^T with ascending eigenvalues
// and orthonormal columns of Q (stored row-major, column j = eigenvector j).
struct Spectrum {
    std::vector<double> eigenvalues;    // ascending
    std::vector<double> eigenvectors;   // d x d row-major, column j <-> eigenvalue j
    std::size_t dim = 0;

    double vec(std::size_t i, std::size_t j) const { return eigenvectors[i * dim + j]; }
    double min() const { return eigenvalues.front(); }
    double max() const { return eigenvalues.back(); }
};

// Cyclic Jacobi; converges unconditionally for the d <= 64 sizes used here.
// Threshold: off-diagonal Frobenius norm <= 1e-12 * ||A||_F.
Spectrum sym_eigen(const SymMatrix& a);

// Lower-triangular L with L L^T = A (row-major d x d, upper part zero).
// Throws not_pd when a pivot is <= 0.
std::vector<double> cholesky(const SymMatrix& a);

// Solve L y = b (forward) and L^T x = b (backward) for lower-triangular L.
std::vector<double> solve_lower(const std::vector<double>& l, std::size_t d, const std::vector<double>& b);
std::vector<double> solve_lower_transposed(const std::vector<double>& l, std::size_t d, const std::vector<double>& b);

// A^{-1/2} from the eigendecomposition; throws not_pd if lambda_min <= tol * lambda_max.
SymMatrix inverse_sqrt(const SymMatrix& a, double rel_tol = 1e-12);

// Regularized lower incomplete gamma P(a, x): series for x < a + 1,
// continued fraction otherwise; absolute error <= 1e-12.
double reg_lower_gamma(double a, double x);

double log_gamma(double x);

// CDF of Inv-Gamma(alpha, beta) at x > 0, i.e. 1 - P(alpha, beta / x).
double inv_gamma_cdf(double x, double alpha, double beta);

// Physicists' Gauss-Hermite rule: nodes/weights for integral of e^{-t^2} f(t).
void gauss_hermite_rule(std::size_t nodes, std::vector<double>& x, std::vector<double>& w);

// E[f(eta)] with eta ~ N(0, sigma^2); exact up to rounding for polynomials
// of degree <= 2 * nodes - 1. nodes must lie in [8, 256].
double gauss_hermite_expectation(const std::function<double(double)>& f, double sigma, std::size_t nodes);

// E|Z|^p = 2^{p/2} Gamma((p+1)/2) / sqrt(pi) for Z standard normal.
double std_normal_abs_moment(double p);

}  // namespace qrisk
