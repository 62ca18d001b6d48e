#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <vector>

#include "qrisk/common.hpp"

namespace qrisk {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Sample of loss draws. +inf is a legal sentinel for "infinite loss" and
// sorts last; -inf is rejected.
struct EmpiricalDistribution {
    std::vector<double> values;
    bool sorted = false;

    EmpiricalDistribution() = default;
    explicit EmpiricalDistribution(std::vector<double> v);

    void sort_values();
    std::size_t size() const { return values.size(); }
};

struct QuantileEstimate {
    double level = 0.0;
    double value = 0.0;       // may be +inf
    std::size_t replicates = 0;
    double se_proxy = 0.0;    // order-statistic CI width / (2 * 1.96)
};

// Right-continuous increasing step function. fs has one more entry than xs:
// f = fs[0] on (-inf, xs[0]), f = fs[i+1] on [xs[i], xs[i+1]).
struct StepFunction {
    std::vector<double> xs;
    std::vector<double> fs;

    double operator()(double x) const;
};

// inf{x : f(x) >= y} with inf(empty) = +inf and inf(R) = -inf.
double pseudo_inverse_point(const StepFunction& f, double y);

// Lower empirical quantile: the ceil(level * M)-th order statistic
// (1-indexed), the minimal sample point whose empirical CDF reaches the
// level. No interpolation.
QuantileEstimate empirical_quantile(const EmpiricalDistribution& sample, double level);

// Checks Q_{phi(X)}(p) == phi(Q_X(p)) exactly, for strictly increasing phi.
// The map must send +inf to +inf.
bool check_transform_invariance(const EmpiricalDistribution& sample,
                                const std::function<double(double)>& phi, double level);

}  // namespace qrisk
