#include "qrisk/truncation.hpp"

#include <algorithm>
#include <numeric>

namespace qrisk {

double clamp(double x, double alpha, double beta) {
    if (!(alpha <= beta)) throw invalid_input("clamp: requires alpha <= beta");
    return std::min(std::max(x, alpha), beta);
}

std::pair<std::vector<double>, std::vector<std::size_t>> sort_star(std::span<const double> a) {
    if (a.empty()) throw invalid_input("sort_star: empty sequence");
    std::vector<std::size_t> perm(a.size());
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::stable_sort(perm.begin(), perm.end(),
                     [&](std::size_t i, std::size_t j) { return a[i] < a[j]; });
    std::vector<double> sorted(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) sorted[i] = a[perm[i]];
    return {std::move(sorted), std::move(perm)};
}

TrimmedSumBreakdown trimmed_sum(std::span<const double> a, TrimLevel trim) {
    if (a.size() != trim.n) throw invalid_input("trimmed_sum: sequence length does not match trim.n");
    const std::size_t n = trim.n;
    const std::size_t k = trim.k;

    TrimmedSumBreakdown out;
    auto [sorted, perm] = sort_star(a);
    out.lower_bound = sorted[k];          // (1+k)-th, 1-indexed
    out.upper_bound = sorted[n - k - 1];  // (n-k)-th, 1-indexed
    double total = 0.0;
    for (double x : a) total += clamp(x, out.lower_bound, out.upper_bound);
    out.clamped_total = total;
    out.sorted = std::move(sorted);
    out.sort_permutation = std::move(perm);
    return out;
}

std::vector<double> trimmed_sum_subgradient(std::span<const double> a, std::span<const double> grads,
                                            std::size_t d, TrimLevel trim) {
    if (a.size() != trim.n) throw invalid_input("trimmed_sum_subgradient: length mismatch");
    if (grads.size() != trim.n * d) throw invalid_input("trimmed_sum_subgradient: gradient shape mismatch");
    const std::size_t n = trim.n;
    const std::size_t k = trim.k;
    auto [sorted, perm] = sort_star(a);

    std::vector<double> g(d, 0.0);
    auto accumulate = [&](std::size_t sample, double weight) {
        for (std::size_t j = 0; j < d; ++j) g[j] += weight * grads[sample * d + j];
    };
    // middle block (sorted positions 1+k .. n-k, 1-indexed) at unit weight
    for (std::size_t i = k; i < n - k; ++i) accumulate(perm[i], 1.0);
    // the boundary order statistics carry the k clamped copies each
    accumulate(perm[k], static_cast<double>(k));
    accumulate(perm[n - k - 1], static_cast<double>(k));
    return g;
}

}  // namespace qrisk
