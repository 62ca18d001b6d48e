#pragma once

#include <cstddef>
#include <span>

#include "qrisk/distributions.hpp"
#include "qrisk/numerics.hpp"
#include "qrisk/quantile.hpp"
#include "qrisk/rng.hpp"

namespace qrisk {

struct EigenQuantileReport {
    std::size_t n = 0;
    std::size_t d = 0;
    double delta = 0.0;
    double empirical_quantile = 0.0;  // of 1 - lambda_min(whitened sample cov)
    double upper_bound = 0.0;
    double trimmed_inf_quantile = 0.0;
    bool has_trimmed = false;
    std::size_t reps = 0;
    std::uint64_t seed = 0;
};

// Sigma^{-1/2} (sum_i x_i x_i^T / n) Sigma^{-1/2} for rows x_i.
SymMatrix whitened_sample_cov(std::span<const double> inputs, std::size_t n, const SymMatrix& sigma);

// Monte Carlo quantile of 1 - lambda_min over `reps` designs of size n.
QuantileEstimate min_eig_quantile_mc(const InputDist& input, std::size_t n, double delta,
                                     std::size_t reps, RngStream rng, std::size_t workers = 1);

// sqrt(8 lmax(S) log(3d) / n) + sqrt(2 R log(1/delta) / n)
//   + (2 log(3d) + 4 log(1/delta)) / (3n)
double upper_bound_eig(const MatrixParams& params, std::size_t n, std::size_t d, double delta);

// inf over unit directions of the middle-block mean n^{-1} sum_{i=k+1}^{n-k}
// of sorted <v, x~_i>^2. Multistart projected subgradient plus a local
// shrink polish; the returned value is the best direction found, an upper
// bound on the true infimum. k = 0 reduces to lambda_min.
double trimmed_directional_inf(std::span<const double> inputs, std::size_t n, const SymMatrix& sigma,
                               std::size_t k, std::size_t multistarts, RngStream rng,
                               std::size_t iterations = 200);

// Smallest n with Q_{1 - lambda_min}(1 - delta/2) <= 1/4, by doubling then
// bisection on Monte Carlo probes; the winner is re-verified with a fresh
// stream. Throws budget_exceeded if no bracket is found below max_n.
std::size_t critical_sample_size(const InputDist& input, double delta, std::size_t reps,
                                 RngStream rng, std::size_t max_n = (1u << 20),
                                 std::size_t workers = 1);

}  // namespace qrisk
