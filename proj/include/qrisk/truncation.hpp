#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "qrisk/common.hpp"

namespace qrisk {

// Trimming level for the clamped sum over n entries: the k smallest and k
// largest entries are clamped to the (1+k)-th and (n-k)-th order statistics.
// Requires 1 <= k and 2k < n so the clamp interval is well ordered.
struct TrimLevel {
    std::size_t k = 1;
    std::size_t n = 3;

    TrimLevel(std::size_t k_, std::size_t n_) : k(k_), n(n_) {
        if (k < 1 || 2 * k >= n) throw invalid_input("TrimLevel: requires 1 <= k and 2k < n");
    }
};

struct TrimmedSumBreakdown {
    std::vector<double> sorted;
    double lower_bound = 0.0;   // (1+k)-th order statistic
    double upper_bound = 0.0;   // (n-k)-th order statistic
    double clamped_total = 0.0;
    std::vector<std::size_t> sort_permutation;  // sorted[i] == a[perm[i]]
};

// min(max(x, alpha), beta); requires alpha <= beta.
double clamp(double x, double alpha, double beta);

// Stable ascending sort with its permutation (ties keep original order).
std::pair<std::vector<double>, std::vector<std::size_t>> sort_star(std::span<const double> a);

TrimmedSumBreakdown trimmed_sum(std::span<const double> a, TrimLevel trim);

// One Clarke subgradient of the clamped total: middle entries carry unit
// weight, the two boundary order statistics additionally carry the k
// clamped copies on their side. grads is n x d row-major per-sample
// gradients of a_i; the result has length d. Exact gradient wherever the
// sorted order is strict.
std::vector<double> trimmed_sum_subgradient(std::span<const double> a, std::span<const double> grads,
                                            std::size_t d, TrimLevel trim);

}  // namespace qrisk
