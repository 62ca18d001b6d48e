#include "qrisk/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "qrisk/numerics.hpp"

namespace qrisk {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

SymMatrix sample_second_moment(const Dataset& ds) {
    SymMatrix m(ds.d);
    for (std::size_t i = 0; i < ds.n; ++i)
        for (std::size_t a = 0; a < ds.d; ++a)
            for (std::size_t b = a; b < ds.d; ++b)
                m.add(a, b, ds.xat(i, a) * ds.xat(i, b) / static_cast<double>(ds.n));
    return m;
}

std::vector<double> xty_over_n(const Dataset& ds) {
    std::vector<double> b(ds.d, 0.0);
    for (std::size_t i = 0; i < ds.n; ++i)
        for (std::size_t a = 0; a < ds.d; ++a) b[a] += ds.xat(i, a) * ds.y[i] / static_cast<double>(ds.n);
    return b;
}

}  // namespace

FitResult ols_fit(const Dataset& ds) {
    if (ds.n == 0 || ds.d == 0) throw invalid_input("ols_fit: empty dataset");
    const SymMatrix cov = sample_second_moment(ds);
    const std::vector<double> rhs = xty_over_n(ds);
    FitResult out;

    const Spectrum spec = sym_eigen(cov);
    const double lmax = std::max(spec.max(), 0.0);
    if (spec.min() > 1e-10 * std::max(lmax, 1e-300)) {
        const auto l = cholesky(cov);
        out.w_hat = solve_lower_transposed(l, ds.d, solve_lower(l, ds.d, rhs));
    } else {
        // minimum-norm least squares through the spectral decomposition
        out.singular_design = true;
        out.w_hat.assign(ds.d, 0.0);
        const double cut = 1e-10 * std::max(lmax, 1e-300);
        for (std::size_t k = 0; k < ds.d; ++k) {
            if (spec.eigenvalues[k] <= cut) continue;
            double qb = 0.0;
            for (std::size_t i = 0; i < ds.d; ++i) qb += spec.vec(i, k) * rhs[i];
            const double coef = qb / spec.eigenvalues[k];
            for (std::size_t i = 0; i < ds.d; ++i) out.w_hat[i] += coef * spec.vec(i, k);
        }
    }
    // normal-equations residual
    std::vector<double> res(ds.d, 0.0);
    for (std::size_t i = 0; i < ds.d; ++i) {
        double s = -rhs[i];
        for (std::size_t j = 0; j < ds.d; ++j) s += cov(i, j) * out.w_hat[j];
        res[i] = s;
    }
    out.grad_norm_final = norm2(res);
    out.iterations = 1;
    return out;
}

double psi_k(std::span<const double> w, std::span<const double> v, const Dataset& ds,
             const ErrorFn& error, TrimLevel trim) {
    if (trim.n != ds.n) throw invalid_input("psi_k: trim level does not match dataset size");
    std::vector<double> diffs(ds.n);
    for (std::size_t i = 0; i < ds.n; ++i) {
        const double rw = dot(ds.row(i), w) - ds.y[i];
        const double rv = dot(ds.row(i), v) - ds.y[i];
        diffs[i] = error.value(rw) - error.value(rv);
    }
    return trimmed_sum(diffs, trim).clamped_total / static_cast<double>(ds.n);
}

std::size_t MinMaxConfig::k_for_delta(double delta, std::size_t n) {
    if (!(delta > 0.0 && delta < 1.0)) throw invalid_input("k_for_delta: delta in (0,1)");
    const auto raw = static_cast<long long>(std::llround(8.0 * std::log(4.0 / delta)));
    const long long cap = std::max<long long>(1, static_cast<long long>(n / 8));
    return static_cast<std::size_t>(std::clamp<long long>(raw, 1, cap));
}

namespace {

struct MinMaxWork {
    const Dataset& ds;
    const ErrorFn& error;
    TrimLevel trim;
    std::vector<double> resid_w;  // <w,x_i> - y_i
    std::vector<double> resid_v;
    std::vector<double> diffs;
    std::vector<double> grads;  // n x d

    explicit MinMaxWork(const Dataset& d, const ErrorFn& e, TrimLevel t)
        : ds(d), error(e), trim(t), resid_w(d.n), resid_v(d.n), diffs(d.n), grads(d.n * d.d) {}

    void residuals(std::span<const double> w, std::vector<double>& out) const {
        for (std::size_t i = 0; i < ds.n; ++i) out[i] = dot(ds.row(i), w) - ds.y[i];
    }

    double objective() {
        for (std::size_t i = 0; i < ds.n; ++i)
            diffs[i] = error.value(resid_w[i]) - error.value(resid_v[i]);
        return trimmed_sum(diffs, trim).clamped_total / static_cast<double>(ds.n);
    }

    // gradient of psi_k(w, v) in v (sign +) or w (sign -, negated diffs trick
    // not needed: d a_i / d w = e'(rw) x_i, d a_i / d v = -e'(rv) x_i)
    std::vector<double> grad(bool wrt_w) {
        for (std::size_t i = 0; i < ds.n; ++i)
            diffs[i] = error.value(resid_w[i]) - error.value(resid_v[i]);
        for (std::size_t i = 0; i < ds.n; ++i) {
            const double c = wrt_w ? error.deriv(resid_w[i]) : -error.deriv(resid_v[i]);
            for (std::size_t j = 0; j < ds.d; ++j) grads[i * ds.d + j] = c * ds.xat(i, j);
        }
        auto g = trimmed_sum_subgradient(diffs, grads, ds.d, trim);
        for (auto& x : g) x /= static_cast<double>(ds.n);
        return g;
    }
};

}  // namespace

FitResult minmax_fit(const Dataset& ds, const ErrorFn& error, const MinMaxConfig& config) {
    if (config.outer_steps < 1 || config.inner_steps < 1 || !(config.step_size > 0.0) ||
        !(config.tolerance > 0.0))
        throw invalid_input("minmax_fit: invalid config");
    const TrimLevel trim(config.k, ds.n);
    const std::size_t d = ds.d;

    std::vector<double> w;
    switch (config.init) {
        case MinMaxConfig::Init::ols: w = ols_fit(ds).w_hat; break;
        case MinMaxConfig::Init::zero: w.assign(d, 0.0); break;
        case MinMaxConfig::Init::given:
            if (config.init_w.size() != d) throw invalid_input("minmax_fit: init_w dimension mismatch");
            w = config.init_w;
            break;
    }

    // curvature scale: operator norm of the sample second moment
    const double op_norm = std::max(sym_eigen(sample_second_moment(ds)).max(), 1e-12);
    const bool square = error.kind() == ErrorFn::Kind::square;

    MinMaxWork work(ds, error, trim);
    FitResult out;
    out.w_hat = w;
    double best_surrogate = std::numeric_limits<double>::infinity();
    double grad_norm = std::numeric_limits<double>::infinity();
    std::size_t inner_total = 0;

    std::vector<double> v(d);
    for (std::size_t outer = 1; outer <= config.outer_steps; ++outer) {
        // adversary restarts at the current iterate
        v = w;
        work.residuals(w, work.resid_w);
        work.resid_v = work.resid_w;
        // best adversary along the ascent path; the start v = w is excluded
        // because every difference ties there and the subgradient tie-break
        // is arbitrary
        double adv_best = -std::numeric_limits<double>::infinity();
        std::vector<double> adv_v = v;
        for (std::size_t inner = 1; inner <= config.inner_steps; ++inner) {
            auto gv = work.grad(false);
            const double step = square ? config.step_size / op_norm
                                       : config.step_size / (op_norm * std::sqrt(static_cast<double>(inner)));
            for (std::size_t j = 0; j < d; ++j) v[j] += step * gv[j];
            work.residuals(v, work.resid_v);
            ++inner_total;
            const double val = work.objective();
            if (!std::isfinite(val))
                throw numeric_overflow("minmax_fit: objective overflowed, rescale the data");
            if (val > adv_best) {
                adv_best = val;
                adv_v = v;
            }
        }
        // psi_k(w, w) = 0, so the certified adversarial value is at least 0
        const double adv_value = std::max(adv_best, 0.0);
        // descend against the strongest adversary found
        work.residuals(adv_v, work.resid_v);
        auto gw = work.grad(true);
        grad_norm = norm2(gw);
        if (!std::isfinite(grad_norm))
            throw numeric_overflow("minmax_fit: gradient overflowed, rescale the data");

        if (adv_value <= best_surrogate) {  // ties prefer the later iterate
            best_surrogate = adv_value;
            out.w_hat = w;
        }
        if (config.record_trace) out.objective_trace.push_back(adv_value);
        out.iterations = outer;
        if (grad_norm <= config.tolerance) break;

        const double step = square ? config.step_size / op_norm
                                   : config.step_size / (op_norm * std::sqrt(static_cast<double>(outer)));
        for (std::size_t j = 0; j < d; ++j) w[j] -= step * gw[j];
        work.residuals(w, work.resid_w);
    }
    out.inner_iterations = inner_total;
    out.grad_norm_final = grad_norm;
    return out;
}

std::vector<double> sample_mean(std::span<const double> samples, std::size_t n, std::size_t d) {
    if (n < 1 || samples.size() != n * d) throw invalid_input("sample_mean: shape mismatch");
    std::vector<double> mean(d, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) mean[j] += samples[i * d + j];
    for (auto& m : mean) m /= static_cast<double>(n);
    return mean;
}

double p_alpha(double t, double alpha) {
    if (!(t > 0.0)) throw invalid_input("p_alpha: t must be positive");
    if (!(alpha > 0.0)) throw invalid_input("p_alpha: alpha must be positive");
    const double lo = -std::expm1(-2.0 * t) / (2.0 * t);
    const double hi = std::expm1(2.0 * t) / (2.0 * t);
    const double cdf_hi = std::isfinite(hi) ? inv_gamma_cdf(hi, alpha, alpha) : 1.0;
    const double cdf_lo = inv_gamma_cdf(lo, alpha, alpha);
    return cdf_hi - cdf_lo;
}

double p_alpha_inverse(double level, double alpha) {
    if (!(level > 0.0 && level < 1.0)) throw invalid_input("p_alpha_inverse: level in (0,1)");
    double lo = 1e-12, hi = 1.0;
    while (p_alpha(hi, alpha) < level) {
        hi *= 2.0;
        if (hi > 1e6) break;  // p is 1 to machine precision long before this
    }
    double mid = 0.5 * (lo + hi);
    for (int it = 0; it < 200; ++it) {
        mid = 0.5 * (lo + hi);
        const double p = p_alpha(mid, alpha);
        if (std::abs(p - level) <= 1e-11) return mid;
        if (p < level)
            lo = mid;
        else
            hi = mid;
    }
    return mid;
}

VarianceEstimate minimax_variance_estimate(std::span<const double> samples, double mu, double delta) {
    if (samples.empty()) throw invalid_input("minimax_variance_estimate: empty sample");
    if (!(delta > 0.0 && delta < 1.0)) throw invalid_input("minimax_variance_estimate: delta in (0,1)");
    double second = 0.0;
    for (double x : samples) second += (x - mu) * (x - mu);
    second /= static_cast<double>(samples.size());
    if (second == 0.0) return {0.0, true};
    const double t = p_alpha_inverse(1.0 - delta, 0.5 * static_cast<double>(samples.size()));
    const double weight = (t < 1e-8) ? 1.0 + t * t / 6.0 : std::sinh(t) / t;
    return {second * weight, false};
}

FitResult MinMaxEstimator::fit(const Dataset& ds, RngStream&) const {
    MinMaxConfig cfg = config_;
    if (use_delta_rule_) cfg.k = MinMaxConfig::k_for_delta(delta_, ds.n);
    return minmax_fit(ds, error_, cfg);
}

std::string MinMaxEstimator::id() const {
    std::ostringstream os;
    os << "minmax";
    if (use_delta_rule_)
        os << "-auto" << delta_;
    else
        os << "-k" << config_.k;
    return os.str();
}

}  // namespace qrisk
