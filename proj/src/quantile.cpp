#include "qrisk/quantile.hpp"

#include <algorithm>
#include <cmath>

namespace qrisk {

EmpiricalDistribution::EmpiricalDistribution(std::vector<double> v) : values(std::move(v)) {
    for (double x : values)
        if (std::isnan(x) || x == -kInf)
            throw invalid_input("EmpiricalDistribution: entries must be finite or +inf");
    if (values.empty()) throw invalid_input("EmpiricalDistribution: need at least one value");
}

void EmpiricalDistribution::sort_values() {
    if (!sorted) {
        std::sort(values.begin(), values.end());
        sorted = true;
    }
}

double StepFunction::operator()(double x) const {
    // index of the first breakpoint strictly above x; f takes the value
    // attached to the last breakpoint at or below x
    const auto it = std::upper_bound(xs.begin(), xs.end(), x);
    return fs[static_cast<std::size_t>(it - xs.begin())];
}

double pseudo_inverse_point(const StepFunction& f, double y) {
    if (f.fs.size() != f.xs.size() + 1)
        throw invalid_input("pseudo_inverse_point: fs must have xs.size() + 1 entries");
    if (!std::is_sorted(f.xs.begin(), f.xs.end()))
        throw invalid_input("pseudo_inverse_point: breakpoints must be sorted");
    if (!std::is_sorted(f.fs.begin(), f.fs.end()))
        throw invalid_input("pseudo_inverse_point: function must be nondecreasing");
    if (f.fs.front() >= y) return -kInf;
    for (std::size_t i = 0; i < f.xs.size(); ++i)
        if (f.fs[i + 1] >= y) return f.xs[i];
    return kInf;
}

namespace {

// 1-indexed order-statistic index ceil(level * m), guarded against the
// product landing a hair above an exact integer.
std::size_t order_index(double level, std::size_t m) {
    const double raw = level * static_cast<double>(m);
    auto k = static_cast<long long>(std::ceil(raw - 1e-9));
    if (k < 1) k = 1;
    if (k > static_cast<long long>(m)) k = static_cast<long long>(m);
    return static_cast<std::size_t>(k);
}

}  // namespace

QuantileEstimate empirical_quantile(const EmpiricalDistribution& sample, double level) {
    if (!(level > 0.0 && level < 1.0)) throw invalid_input("empirical_quantile: level must lie in (0,1)");
    if (sample.values.empty()) throw invalid_input("empirical_quantile: empty sample");

    EmpiricalDistribution local;
    const EmpiricalDistribution* s = &sample;
    if (!sample.sorted) {
        local = sample;
        local.sort_values();
        s = &local;
    }
    const std::size_t m = s->values.size();

    QuantileEstimate q;
    q.level = level;
    q.replicates = m;
    q.value = s->values[order_index(level, m) - 1];

    const double halfwidth = 1.959963984540054 * std::sqrt(level * (1.0 - level) / static_cast<double>(m));
    const double lo_level = std::max(level - halfwidth, 0.5 / static_cast<double>(m));
    const double hi_level = std::min(level + halfwidth, 1.0 - 1e-15);
    const double lo = s->values[order_index(lo_level, m) - 1];
    const double hi = s->values[order_index(hi_level, m) - 1];
    if (hi == kInf)
        q.se_proxy = (lo == kInf) ? 0.0 : kInf;
    else
        q.se_proxy = (hi - lo) / (2.0 * 1.959963984540054);
    return q;
}

bool check_transform_invariance(const EmpiricalDistribution& sample,
                                const std::function<double(double)>& phi, double level) {
    EmpiricalDistribution mapped;
    mapped.values.reserve(sample.values.size());
    for (double x : sample.values) mapped.values.push_back(phi(x));
    const double lhs = empirical_quantile(mapped, level).value;
    const double rhs = phi(empirical_quantile(sample, level).value);
    return lhs == rhs;
}

}  // namespace qrisk
