#include "qrisk/risk.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <functional>

#include "qrisk/numerics.hpp"
#include "qrisk/parallel.hpp"

namespace qrisk {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

std::uint64_t spec_hash(const ProblemSpec& spec) {
    std::uint64_t h = 0x8000000000000001ULL;
    auto mix_in = [&h](std::uint64_t v) { h = RngStream::mix(h ^ RngStream::mix(v)); };
    const std::string id = spec.input.describe() + "|" + spec.noise.describe();
    for (char c : id) mix_in(static_cast<std::uint64_t>(static_cast<unsigned char>(c)));
    for (double w : spec.w_star) {
        std::uint64_t bits;
        static_assert(sizeof(bits) == sizeof(w));
        std::memcpy(&bits, &w, sizeof(bits));
        mix_in(bits);
    }
    mix_in(spec.error.kind() == ErrorFn::Kind::square ? 2 : 1000 + static_cast<std::uint64_t>(spec.error.p() * 64));
    return h;
}

}  // namespace

ExcessErrorOracle::ExcessErrorOracle(const ProblemSpec& spec, std::size_t quad_nodes,
                                     std::size_t panel_size)
    : spec_(spec), quad_nodes_(quad_nodes) {
    if (spec_.error.kind() == ErrorFn::Kind::square) return;  // closed form

    switch (spec_.noise.kind()) {
        case NoiseModel::Kind::gaussian:
            if (spec_.noise.sigma2() <= 0.0)
                throw invalid_input("ExcessErrorOracle: p-power requires positive noise");
            if (quad_nodes_ < 8 || quad_nodes_ > 256)
                throw invalid_input("ExcessErrorOracle: quadrature nodes in [8, 256]");
            gauss_hermite_rule(quad_nodes_, gh_x_, gh_w_);
            break;
        case NoiseModel::Kind::two_point:
            break;  // exact three-term sum
        case NoiseModel::Kind::student_t:
            throw invalid_input("ExcessErrorOracle: p-power with student-t noise is not supported");
    }

    if (spec_.input.kind() == InputDist::Kind::discrete) {
        panel_ = spec_.input.support();
        panel_wts_ = spec_.input.probs();
        panel_m_ = panel_wts_.size();
    } else {
        // frozen panel: deterministic function of the spec
        panel_m_ = panel_size;
        const std::size_t d = spec_.input.dim();
        panel_.resize(panel_m_ * d);
        panel_wts_.assign(panel_m_, 1.0 / static_cast<double>(panel_m_));
        RngStream rng(spec_hash(spec_), 0xE0C1);
        for (std::size_t i = 0; i < panel_m_; ++i)
            spec_.input.sample(rng, {panel_.data() + i * d, d});
    }

    std::vector<double> zero(spec_.input.dim(), 0.0);
    base_value_ = 0.0;  // so excess_delta(0) computes tilde E(0)
    base_value_ = excess_delta(zero);
}

double ExcessErrorOracle::noise_expectation(double u) const {
    const ErrorFn& e = spec_.error;
    switch (spec_.noise.kind()) {
        case NoiseModel::Kind::gaussian: {
            const double scale = std::sqrt(2.0 * spec_.noise.sigma2());
            const double inv_sqrt_pi = 0.5641895835477562869480794515608;
            double s = 0.0;
            for (std::size_t i = 0; i < gh_x_.size(); ++i) s += gh_w_[i] * e.value(u + scale * gh_x_[i]);
            return s * inv_sqrt_pi;
        }
        case NoiseModel::Kind::two_point: {
            const double a = spec_.noise.a();
            const double pr = spec_.noise.prob();
            return 0.5 * pr * (e.value(u + a) + e.value(u - a)) + (1.0 - pr) * e.value(u);
        }
        case NoiseModel::Kind::student_t:
            throw invalid_input("ExcessErrorOracle: unreachable noise kind");
    }
    return 0.0;
}

double ExcessErrorOracle::excess_delta(std::span<const double> delta) const {
    const std::size_t d = spec_.input.dim();
    if (delta.size() != d) throw invalid_input("ExcessErrorOracle: dimension mismatch");

    if (spec_.error.kind() == ErrorFn::Kind::square) {
        // (1/2) delta^T Sigma delta, valid for any centred independent noise
        const SymMatrix& sigma = spec_.input.covariance();
        double q = 0.0;
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = 0; j < d; ++j) q += delta[i] * sigma(i, j) * delta[j];
        return 0.5 * q;
    }

    double s = 0.0;
    for (std::size_t m = 0; m < panel_m_; ++m)
        s += panel_wts_[m] * noise_expectation(dot({panel_.data() + m * d, d}, delta));
    return s - base_value_;
}

double ExcessErrorOracle::excess(std::span<const double> w) const {
    std::vector<double> delta(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) delta[i] = w[i] - spec_.w_star[i];
    return excess_delta(delta);
}

RiskReport quantile_risk_mc(const ProblemSpec& spec, const Estimator& estimator, std::size_t n,
                            double delta, std::size_t reps, RngStream rng, std::size_t workers) {
    if (reps < 100) throw invalid_input("quantile_risk_mc: reps must be >= 100");
    if (!(delta > 0.0 && delta < 1.0)) throw invalid_input("quantile_risk_mc: delta in (0,1)");
    if (delta < 1.0 / static_cast<double>(reps))
        throw invalid_level("quantile_risk_mc: delta below 1/reps cannot be resolved");

    const ExcessErrorOracle oracle(spec);
    std::vector<double> values(reps);
    parallel_for(reps, workers, [&](std::size_t rep) {
        RngStream stream = rng.child(rep);
        const Dataset ds = sample_dataset(spec, n, stream);
        const FitResult fit = estimator.fit(ds, stream);
        values[rep] = fit.singular_design ? kInf : oracle.excess(fit.w_hat);
    });

    RiskReport report;
    report.estimator_id = estimator.id();
    report.spec_id = spec.input.describe() + "|" + spec.noise.describe();
    report.n = n;
    report.delta = delta;
    report.reps = reps;
    report.seed = rng.seed();
    report.quantile_risk = empirical_quantile(EmpiricalDistribution(std::move(values)), 1.0 - delta);
    return report;
}

QuantileEstimate gauss_minimax_exact_mc(const InputDist& input, const ErrorFn& error, double sigma2,
                                        std::size_t n, double delta, std::size_t reps, RngStream rng,
                                        std::size_t workers) {
    if (reps < 100) throw invalid_input("gauss_minimax_exact_mc: reps must be >= 100");
    if (!(delta > 0.0 && delta < 1.0)) throw invalid_input("gauss_minimax_exact_mc: delta in (0,1)");
    if (!(sigma2 > 0.0)) throw invalid_input("gauss_minimax_exact_mc: sigma2 must be positive");
    const std::size_t d = input.dim();
    const bool square = error.kind() == ErrorFn::Kind::square;

    // p-power path evaluates tilde E through the oracle of the Gaussian spec
    std::vector<double> w0(d, 0.0);
    const ProblemSpec gauss_spec(input, w0, NoiseModel::gaussian(sigma2), error);
    const ExcessErrorOracle oracle(gauss_spec);

    std::vector<double> values(reps);
    parallel_for(reps, workers, [&](std::size_t rep) {
        RngStream stream = rng.child(rep);
        SymMatrix cov(d);       // sample second moment of raw draws
        SymMatrix cov_white(d);  // and of whitened draws
        std::vector<double> x(d), xw(d);
        for (std::size_t i = 0; i < n; ++i) {
            input.sample(stream, x);
            for (std::size_t a = 0; a < d; ++a) {
                double s = 0.0;
                for (std::size_t b = 0; b < d; ++b) s += input.whitener()(a, b) * x[b];
                xw[a] = s;
            }
            for (std::size_t a = 0; a < d; ++a)
                for (std::size_t b = a; b < d; ++b) {
                    cov.add(a, b, x[a] * x[b] / static_cast<double>(n));
                    cov_white.add(a, b, xw[a] * xw[b] / static_cast<double>(n));
                }
        }
        const Spectrum spec_w = sym_eigen(cov_white);
        if (spec_w.min() <= 1e-12 * std::max(spec_w.max(), 1e-300)) {
            values[rep] = kInf;
            return;
        }
        std::vector<double> g(d);
        for (auto& z : g) z = stream.normal();
        if (square) {
            // A ~ N(0, cov_white^{-1}); value = sigma^2 |A|^2 / (2n)
            const auto l = cholesky(cov_white);
            const auto a = solve_lower_transposed(l, d, g);
            values[rep] = sigma2 * dot(a, a) / (2.0 * static_cast<double>(n));
        } else {
            // Z ~ N(0, (sigma^2/n) cov^{-1}) by triangular solve
            const auto l = cholesky(cov);
            auto z = solve_lower_transposed(l, d, g);
            const double c = std::sqrt(sigma2 / static_cast<double>(n));
            for (auto& v : z) v *= c;
            values[rep] = oracle.excess_delta(z);
        }
    });
    return empirical_quantile(EmpiricalDistribution(std::move(values)), 1.0 - delta);
}

double chi_square_quantile(double p, std::size_t d) {
    if (!(p > 0.0 && p < 1.0)) throw invalid_input("chi_square_quantile: p in (0,1)");
    if (d < 1) throw invalid_input("chi_square_quantile: d >= 1");
    const double a = 0.5 * static_cast<double>(d);
    double lo = 0.0, hi = std::max(4.0 * static_cast<double>(d), 16.0);
    while (reg_lower_gamma(a, 0.5 * hi) < p) hi *= 2.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (reg_lower_gamma(a, 0.5 * mid) < p)
            lo = mid;
        else
            hi = mid;
        if (hi - lo <= 1e-13 * std::max(1.0, hi)) break;
    }
    return 0.5 * (lo + hi);
}

double asymptotic_minimax(const ErrorFn& error, double sigma2, double delta, std::size_t d) {
    if (!(delta > 0.0 && delta < 1.0)) throw invalid_input("asymptotic_minimax: delta in (0,1)");
    double alpha;
    if (error.kind() == ErrorFn::Kind::square) {
        alpha = 0.5;
    } else {
        // E[e''(eta)] / 2 = m(p-2) sigma^{p-2} / 2
        alpha = 0.5 * std_normal_abs_moment(error.p() - 2.0) * std::pow(sigma2, 0.5 * (error.p() - 2.0));
    }
    return sigma2 * alpha * chi_square_quantile(1.0 - delta, d);
}

namespace {

// Per-design draws used by the square-error bounds and the quantile lemma
// checks: trace and extreme eigenvalues of the inverse whitened sample
// covariance, plus the conditional exponential W.
struct DesignDraws {
    std::vector<double> tr_inv;
    std::vector<double> lmax_inv;
    std::vector<double> w;
    std::size_t singular = 0;
};

DesignDraws design_draws(const InputDist& input, std::size_t n, std::size_t reps, RngStream rng,
                         std::size_t workers) {
    const std::size_t d = input.dim();
    DesignDraws out;
    out.tr_inv.resize(reps);
    out.lmax_inv.resize(reps);
    out.w.resize(reps);
    std::vector<int> singular_flags(reps, 0);
    parallel_for(reps, workers, [&](std::size_t rep) {
        RngStream stream = rng.child(rep);
        SymMatrix cov(d);
        std::vector<double> x(d);
        for (std::size_t i = 0; i < n; ++i) {
            input.sample_whitened(stream, x);
            for (std::size_t a = 0; a < d; ++a)
                for (std::size_t b = a; b < d; ++b) cov.add(a, b, x[a] * x[b] / static_cast<double>(n));
        }
        const Spectrum spec = sym_eigen(cov);
        const double u = stream.uniform();
        if (spec.min() <= 1e-12 * std::max(spec.max(), 1e-300)) {
            out.tr_inv[rep] = kInf;
            out.lmax_inv[rep] = kInf;
            out.w[rep] = kInf;  // Exp(0) is the unit mass at infinity
            singular_flags[rep] = 1;
            return;
        }
        double tr = 0.0;
        for (double ev : spec.eigenvalues) tr += 1.0 / ev;
        out.tr_inv[rep] = tr;
        out.lmax_inv[rep] = 1.0 / spec.min();
        out.w[rep] = -std::log(u) / spec.min();  // inverse-CDF exponential
    });
    for (int f : singular_flags) out.singular += f;
    return out;
}

double wilson_upper(std::size_t k, std::size_t m) {
    const double z = 1.959963984540054;
    const double kk = static_cast<double>(k), mm = static_cast<double>(m);
    const double center = (kk + z * z / 2.0) / (mm + z * z);
    const double hw = z * std::sqrt(kk * (mm - kk) / mm + z * z / 4.0) / (mm + z * z);
    return std::min(1.0, center + hw);
}

}  // namespace

SquareBounds square_bounds(const InputDist& input, double sigma2, std::size_t n, double delta,
                           std::size_t reps, RngStream rng, std::size_t workers) {
    if (reps < 100) throw invalid_input("square_bounds: reps must be >= 100");
    if (!(sigma2 > 0.0)) throw invalid_input("square_bounds: sigma2 must be positive");
    const DesignDraws draws = design_draws(input, n, reps, rng, workers);

    SquareBounds out;
    out.eps_hat = static_cast<double>(draws.singular) / static_cast<double>(reps);
    out.eps_hi = draws.singular == 0 && input.kind() == InputDist::Kind::gaussian && n >= input.dim()
                     ? 0.0
                     : wilson_upper(draws.singular, reps);
    if (!(delta > 0.0 && delta < (1.0 - out.eps_hi) / 4.0))
        throw invalid_level("square_bounds: delta must lie in (0, (1 - eps_n)/4)");

    const double up_level = 1.0 - out.eps_hi - delta / 2.0;
    const double lo_level = 1.0 - out.eps_hi - 4.0 * delta;
    if (up_level <= 0.0 || lo_level <= 0.0)
        throw invalid_level("square_bounds: level arithmetic left nothing to estimate");

    EmpiricalDistribution tr(draws.tr_inv);
    EmpiricalDistribution w(draws.w);
    out.q_tr_upper_level = empirical_quantile(tr, up_level).value;
    out.q_w_upper_level = empirical_quantile(w, up_level).value;
    out.q_tr_lower_level = empirical_quantile(tr, lo_level).value;
    out.q_w_lower_level = empirical_quantile(w, lo_level).value;

    const double nn = static_cast<double>(n);
    out.upper = 2.0 * sigma2 / nn * (out.q_tr_upper_level + out.q_w_upper_level);
    out.lower = sigma2 / (6428.0 * nn) * (out.q_tr_lower_level + out.q_w_lower_level);
    return out;
}

LemmaBoundsReport lemma_bounds_check(const InputDist& input, std::size_t n, double delta,
                                     std::size_t reps, RngStream rng, std::size_t workers) {
    if (reps < 100) throw invalid_input("lemma_bounds_check: reps must be >= 100");
    if (!(delta > 0.0 && delta < 1.0)) throw invalid_input("lemma_bounds_check: delta in (0,1)");
    const DesignDraws draws = design_draws(input, n, reps, rng, workers);
    const double eps_hat = static_cast<double>(draws.singular) / static_cast<double>(reps);
    if (delta <= eps_hat) throw invalid_level("lemma_bounds_check: requires delta > estimated eps_n");

    EmpiricalDistribution tr(draws.tr_inv);
    EmpiricalDistribution w(draws.w);
    EmpiricalDistribution lmax(draws.lmax_inv);

    LemmaBoundsReport rep;
    rep.q_tr = empirical_quantile(tr, 1.0 - delta).value;
    rep.q_w = empirical_quantile(w, 1.0 - delta).value;
    rep.q_lmax_inv = empirical_quantile(lmax, 1.0 - delta).value;
    rep.q_lmax_inv_half = empirical_quantile(lmax, 1.0 - delta / 2.0).value;

    const double dd = static_cast<double>(input.dim());
    rep.slack_tr_lower = rep.q_tr - dd * (1.0 - delta);
    rep.slack_tr_upper = dd * rep.q_lmax_inv - rep.q_tr;
    rep.slack_w_lower = rep.q_w - std::log(1.0 / delta);
    rep.slack_w_upper = rep.q_lmax_inv_half * std::log(2.0 / delta) - rep.q_w;
    return rep;
}

double pnorm_lower_bound(double p, double sigma2, std::size_t d, std::size_t n, double delta) {
    if (!(p > 2.0)) throw invalid_input("pnorm_lower_bound: requires p > 2");
    if (!(delta > 0.0 && delta < 0.5)) throw invalid_level("pnorm_lower_bound: delta in (0, 1/2)");
    const double m = std_normal_abs_moment(p - 2.0);
    return m / (16.0 * (p - 1.0)) * std::pow(sigma2, 0.5 * p) *
           (static_cast<double>(d) + std::log(1.0 / delta)) / static_cast<double>(n);
}

GuaranteeRhs guarantee_rhs(const ErrorFn& error, const MatrixParams& params,
                           const GuaranteeExtras& extras, std::size_t n, std::size_t d, double delta) {
    if (!(delta > 0.0 && delta < 1.0)) throw invalid_input("guarantee_rhs: delta in (0,1)");
    const double nn = static_cast<double>(n);
    const double dd = static_cast<double>(d);
    const double log1d = std::log(1.0 / delta);
    const double log6d = std::log(6.0 * dd);
    const double sigma2 = extras.sigma2;

    GuaranteeRhs out;
    if (error.kind() == ErrorFn::Kind::square) {
        out.risk_bound = 100.0 * 100.0 * sigma2 * (dd + log1d) / nn;
        out.min_n = 800.0 * 800.0 *
                    (8.0 * log6d * (params.lambda_max_S + 1.0) + (params.R + 1.0) * log1d);
        return out;
    }
    const double p = error.p();
    if (!(extras.mu > 0.0) || !(extras.norm_equiv >= 1.0))
        throw invalid_input("guarantee_rhs: p-power requires mu and the norm-equivalence constant");
    const double mr = std_normal_abs_moment(2.0 * p - 2.0) / std_normal_abs_moment(p - 2.0);
    const double r_p = mr * std::pow(sigma2, 0.5 * p);
    const double k_p = (p - 1.0) * (p - 1.0) * mr;
    out.risk_bound = 120.0 * 120.0 * k_p * std::pow(sigma2, 0.5 * p) * (dd + log1d) / nn;
    const double term1 = std::pow(r_p, (p - 2.0) / (p - 1.0)) * std::pow(extras.mu, -p / (p - 1.0)) *
                         (8.0 * log6d * (params.lambda_max_S + 1.0) + (params.R + 1.0) * log1d);
    const double term2 = 2400.0 * 2400.0 * r_p * std::pow(extras.mu, -p / (p - 2.0)) *
                         std::pow(p, 4.0) * std::pow(extras.norm_equiv, 2.0 * p / (p - 2.0)) *
                         (dd + std::log(4.0 / delta));
    out.min_n = term1 + term2;
    return out;
}

bool sufficiency_check(const InputDist& input, double /*sigma2*/, std::size_t n, double delta,
                       std::size_t mc_samples, RngStream rng) {
    if (!(delta > 0.0 && delta < 0.5)) throw invalid_input("sufficiency_check: delta in (0, 1/2)");
    const MatrixParams params = matrix_params(input, mc_samples, rng);
    const double dd = static_cast<double>(input.dim());
    const double log3d = std::log(3.0 * dd);
    const double log2d = std::log(2.0 / delta);
    const double t1 = 128.0 * (4.0 * log3d * params.lambda_max_S + params.R * log2d);
    const double t2 = params.lambda_max_S > 0.0 ? log3d / (18.0 * params.lambda_max_S) : kInf;
    const double t3 = params.R > 0.0 ? log2d / params.R : kInf;
    return static_cast<double>(n) >= std::max({t1, t2, t3});
}

}  // namespace qrisk
