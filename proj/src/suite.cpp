#include "qrisk/suite.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>

#include "qrisk/cov_eigen.hpp"
#include "qrisk/distributions.hpp"
#include "qrisk/estimators.hpp"
#include "qrisk/parallel.hpp"
#include "qrisk/quantile.hpp"
#include "qrisk/risk.hpp"
#include "qrisk/truncation.hpp"

namespace qrisk {

namespace {

// frozen chi-square quantiles, cross-checked against an independent
// quadrature solver in the unit tests
constexpr double kChi2_1_90 = 2.705543454095404;
constexpr double kChi2_2_90 = 4.605170185988092;

struct Ctx {
    bool quick = false;
    std::uint64_t seed = 20240501;
    std::size_t workers = 1;

    std::size_t reps(std::size_t full) const { return quick ? std::max<std::size_t>(200, full / 8) : full; }
    double tol(double full) const { return quick ? 1.8 * full : full; }
    RngStream stream(std::uint64_t salt) const { return RngStream(seed, salt); }
};

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

InputDist unit_point() { return InputDist::discrete({{1.0}}, {1.0}); }

double dyadic(RngStream& rng) {
    const auto m = static_cast<long long>(rng.next_u64() % (1ULL << 21)) - (1LL << 20);
    return static_cast<double>(m) / 1024.0;
}

// Simpson on a fixed fine grid, enough for the smooth absolute-moment
// integrands used below; independent of the library's gamma-based path.
double simpson_abs_moment(double p) {
    const int n = 200000;
    const double a = 0.0, b = 40.0;
    const double h = (b - a) / n;
    auto f = [p](double t) {
        return 2.0 * std::pow(t, p) * std::exp(-0.5 * t * t) / std::sqrt(2.0 * 3.14159265358979323846);
    };
    double s = f(a) + f(b);
    for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
    return s * h / 3.0;
}

// ---------------------------------------------------------------- criteria

CriterionResult c1_exact_minimax(const Ctx& ctx) {
    CriterionResult r{1, "exact Gaussian minimax risk, d=1 closed form"};
    const std::size_t reps = ctx.reps(50000);
    const auto q = gauss_minimax_exact_mc(unit_point(), ErrorFn::square(), 1.0, 50, 0.1, reps,
                                          ctx.stream(101), ctx.workers);
    const double target = kChi2_1_90 / 100.0;
    const double rel = std::abs(q.value - target) / target;
    r.pass = rel <= ctx.tol(0.02);
    r.detail = "rel err " + fmt(rel) + " vs " + fmt(ctx.tol(0.02)) + " (mc " + fmt(q.value) +
               ", target " + fmt(target) + ")";
    return r;
}

CriterionResult c2_ols_minimax(const Ctx& ctx) {
    CriterionResult r{2, "OLS attains the exact minimax risk, Gaussian d=2"};
    const std::size_t reps = ctx.reps(20000);
    ProblemSpec spec(InputDist::gaussian(SymMatrix::identity(2)), {0.0, 0.0},
                     NoiseModel::gaussian(1.0), ErrorFn::square());
    const OlsEstimator ols;
    const auto risk = quantile_risk_mc(spec, ols, 40, 0.1, reps, ctx.stream(201), ctx.workers);
    const auto exact = gauss_minimax_exact_mc(spec.input, ErrorFn::square(), 1.0, 40, 0.1, reps,
                                              ctx.stream(202), ctx.workers);
    const double combined = std::hypot(risk.quantile_risk.se_proxy, exact.se_proxy);
    const double gap = std::abs(risk.quantile_risk.value - exact.value);
    r.pass = gap <= 3.0 * combined;
    r.detail = "|ols - exact| " + fmt(gap) + " vs 3 se " + fmt(3.0 * combined);
    return r;
}

CriterionResult c3_asymptotic(const Ctx& ctx) {
    CriterionResult r{3, "asymptotic minimax formula at n=4000, d=2"};
    const std::size_t reps = ctx.reps(20000);
    const std::size_t n = 4000;
    const auto exact = gauss_minimax_exact_mc(InputDist::gaussian(SymMatrix::identity(2)),
                                              ErrorFn::square(), 1.0, n, 0.1, reps, ctx.stream(301),
                                              ctx.workers);
    const double asym = 0.5 * kChi2_2_90;
    const double rel = std::abs(static_cast<double>(n) * exact.value - asym) / asym;
    r.pass = rel <= ctx.tol(0.10);
    r.detail = "rel gap " + fmt(rel) + " vs " + fmt(ctx.tol(0.10)) + " (n*mc " +
               fmt(n * exact.value) + ", limit " + fmt(asym) + ")";
    return r;
}

CriterionResult c4_bounds_sandwich(const Ctx& ctx) {
    CriterionResult r{4, "square-error bounds sandwich + quantile lemma"};
    const std::size_t reps = ctx.reps(20000);
    const auto g2 = InputDist::gaussian(SymMatrix::identity(2));
    const auto b = square_bounds(g2, 1.0, 100, 0.05, reps, ctx.stream(401), ctx.workers);
    const auto exact = gauss_minimax_exact_mc(g2, ErrorFn::square(), 1.0, 100, 0.05, reps,
                                              ctx.stream(402), ctx.workers);
    const double slack = 3.0 * exact.se_proxy;
    const bool sandwich = b.lower <= exact.value + slack && exact.value <= b.upper + slack;

    const auto lem = lemma_bounds_check(g2, 100, 0.05, reps, ctx.stream(403), ctx.workers);
    const double lt = -ctx.tol(0.05);
    const bool lemma_ok = lem.slack_tr_lower >= lt && lem.slack_tr_upper >= lt &&
                          lem.slack_w_lower >= lt && lem.slack_w_upper >= lt;
    r.pass = sandwich && lemma_ok;
    r.detail = "lower " + fmt(b.lower) + " <= exact " + fmt(exact.value) + " <= upper " +
               fmt(b.upper) + "; lemma slacks " + fmt(lem.slack_tr_lower) + "/" +
               fmt(lem.slack_tr_upper) + "/" + fmt(lem.slack_w_lower) + "/" + fmt(lem.slack_w_upper);
    return r;
}

CriterionResult c5_truncation(const Ctx& ctx) {
    CriterionResult r{5, "truncation calculus identities"};
    RngStream rng = ctx.stream(501);
    std::size_t bad = 0;
    for (int rep = 0; rep < 1000; ++rep) {
        const std::size_t n = 3 + rng.next_u64() % 14;
        const std::size_t k = 1 + rng.next_u64() % ((n - 1) / 2);
        std::vector<double> a(n), b(n), apb(n);
        for (auto& x : a) x = dyadic(rng);
        for (std::size_t i = 0; i < n; ++i) {
            b[i] = std::abs(dyadic(rng));
            apb[i] = a[i] + b[i];
        }
        const double c2 = (rng.next_u64() % 2 ? 1.0 : -1.0) *
                          std::ldexp(1.0, static_cast<int>(rng.next_u64() % 7) - 3);
        const double shift = dyadic(rng);

        // clamp identities
        double alpha = dyadic(rng), beta = dyadic(rng);
        if (alpha > beta) std::swap(alpha, beta);
        const double x = dyadic(rng);
        const double cpos = std::abs(c2);
        if (cpos * clamp(x, alpha, beta) != clamp(cpos * x, cpos * alpha, cpos * beta)) ++bad;
        if (-clamp(x, alpha, beta) != clamp(-x, -beta, -alpha)) ++bad;
        if (clamp(x, alpha, beta) + shift != clamp(x + shift, alpha + shift, beta + shift)) ++bad;

        // sorted-order monotonicity
        auto sa = sort_star(a).first;
        auto sb = sort_star(apb).first;
        for (std::size_t i = 0; i < n; ++i)
            if (sa[i] > sb[i]) ++bad;

        const TrimLevel trim(k, n);
        const double base = trimmed_sum(a, trim).clamped_total;

        // scaling: bitwise on dyadics
        std::vector<double> ca(n);
        for (std::size_t i = 0; i < n; ++i) ca[i] = c2 * a[i];
        if (c2 * base != trimmed_sum(ca, trim).clamped_total) ++bad;

        // shift: bitwise on dyadics
        std::vector<double> ash(n);
        for (std::size_t i = 0; i < n; ++i) ash[i] = a[i] + shift;
        if (base + static_cast<double>(n) * shift != trimmed_sum(ash, trim).clamped_total) ++bad;

        // monotonicity and superadditivity (exact on dyadics)
        const double upper = trimmed_sum(apb, trim).clamped_total;
        if (base > upper) ++bad;
        auto bs = sort_star(b).first;
        double small = 0.0;
        for (std::size_t i = 0; i < n - 2 * k; ++i) small += bs[i];
        if (upper < base + small) ++bad;
    }
    r.pass = bad == 0;
    r.detail = std::to_string(bad) + " violations in 1000 random cases";
    return r;
}

CriterionResult c6_quantile_calculus(const Ctx& ctx) {
    CriterionResult r{6, "pseudo-inverse and transform invariance"};
    RngStream rng = ctx.stream(601);
    std::size_t bad = 0;
    for (int rep = 0; rep < 1000; ++rep) {
        // random increasing step function
        const std::size_t m = 1 + rng.next_u64() % 10;
        StepFunction f;
        double x = -4.0 + rng.uniform();
        double y = -2.0 + rng.uniform();
        f.fs.push_back(y);
        for (std::size_t i = 0; i < m; ++i) {
            x += 0.05 + rng.uniform();
            y += rng.uniform();
            f.xs.push_back(x);
            f.fs.push_back(y);
        }
        const double probe = -5.0 + 12.0 * rng.uniform();
        if (pseudo_inverse_point(f, f(probe)) > probe) ++bad;

        StepFunction g = f;
        for (auto& v : g.fs) v += 0.25;
        const double yq = f.fs.front() + (f.fs.back() - f.fs.front() + 0.5) * rng.uniform();
        if (pseudo_inverse_point(g, yq) > pseudo_inverse_point(f, yq)) ++bad;

        // transform invariance on a random sample and increasing map
        const std::size_t sz = 1 + rng.next_u64() % 20;
        std::vector<double> vals(sz);
        for (auto& v : vals) v = 8.0 * (rng.uniform() - 0.5);
        if (rng.next_u64() % 8 == 0) vals[0] = kInf;  // exercise the sentinel
        EmpiricalDistribution sample(vals);
        const double s0 = 0.1 + rng.uniform(), s1 = 0.1 + rng.uniform(), b0 = rng.normal();
        auto phi = [=](double t) {
            if (t == kInf) return kInf;
            return t < 0.0 ? b0 + s0 * t : b0 + s1 * t;
        };
        const double level = 0.02 + 0.96 * rng.uniform();
        if (!check_transform_invariance(sample, phi, level)) ++bad;
    }
    r.pass = bad == 0;
    r.detail = std::to_string(bad) + " violations in 1000 random cases";
    return r;
}

CriterionResult c7_abs_gaussian_cdf(const Ctx&) {
    CriterionResult r{7, "|Z| CDF squeezed between the exponential bounds"};
    std::size_t bad = 0;
    double min_gap = 1.0;
    for (double sigma : {0.5, 1.0, 2.0}) {
        for (int i = 1; i <= 30; ++i) {
            const double rr = 0.1 * i;
            const double cdf = std::erf(rr / (sigma * std::sqrt(2.0)));
            const double lo = std::sqrt(-std::expm1(-rr * rr / (2.0 * sigma * sigma)));
            const double hi = std::sqrt(-std::expm1(-2.0 * rr * rr /
                                                    (3.14159265358979323846 * sigma * sigma)));
            if (!(lo - 1e-12 <= cdf && cdf <= hi + 1e-12)) ++bad;
            min_gap = std::min({min_gap, cdf - lo, hi - cdf});
        }
    }
    r.pass = bad == 0;
    r.detail = std::to_string(bad) + " violations; smallest margin " + fmt(min_gap);
    return r;
}

CriterionResult c8_eigen_upper_bound(const Ctx& ctx) {
    CriterionResult r{8, "smallest-eigenvalue quantile under its upper bound"};
    const std::size_t reps = ctx.reps(5000);
    std::size_t bad = 0;
    std::ostringstream os;
    RngStream pr = ctx.stream(801);
    std::uint64_t salt = 0;
    for (std::size_t d : {2ul, 5ul}) {
        const auto input = InputDist::gaussian(SymMatrix::identity(d));
        const auto params = matrix_params(input, 0, pr);
        for (std::size_t n : {100ul, 1000ul}) {
            for (double delta : {0.05, 0.2}) {
                const auto q = min_eig_quantile_mc(input, n, delta, reps,
                                                   ctx.stream(810 + salt), ctx.workers);
                const double bound = upper_bound_eig(params, n, d, delta);
                if (q.value > bound + 3.0 * q.se_proxy) ++bad;
                os << " d" << d << "/n" << n << "/" << delta << ": " << fmt(q.value) << "<="
                   << fmt(bound) << ";";
                ++salt;
            }
        }
    }
    r.pass = bad == 0;
    r.detail = std::to_string(bad) + " violations;" + os.str();
    return r;
}

CriterionResult c9_trimmed_inf(const Ctx& ctx) {
    CriterionResult r{9, "trimmed directional infimum: grid oracle + quantile bound"};
    // (a) agreement with the dense angular grid at d=2
    const std::size_t datasets = ctx.quick ? 10 : 50;
    RngStream rng = ctx.stream(901);
    std::size_t bad = 0;
    double worst = 0.0;
    for (std::size_t rep = 0; rep < datasets; ++rep) {
        const std::size_t n = 100, k = 5;
        RngStream data = rng.child(rep);
        std::vector<double> xs(n * 2);
        for (auto& v : xs) v = data.normal();
        const double mine =
            trimmed_directional_inf(xs, n, SymMatrix::identity(2), k, 16, rng.child(5000 + rep));
        double grid = kInf;
        std::vector<double> sq(n);
        for (int a = 0; a < 4096; ++a) {
            const double th = 2.0 * 3.14159265358979323846 * a / 4096.0;
            const double c = std::cos(th), s = std::sin(th);
            for (std::size_t i = 0; i < n; ++i) {
                const double t = c * xs[2 * i] + s * xs[2 * i + 1];
                sq[i] = t * t;
            }
            std::sort(sq.begin(), sq.end());
            double sum = 0.0;
            for (std::size_t i = k; i < n - k; ++i) sum += sq[i];
            grid = std::min(grid, sum / static_cast<double>(n));
        }
        worst = std::max(worst, std::abs(mine - grid));
        if (std::abs(mine - grid) > 1e-3) ++bad;
    }

    // (b) displayed quantile bound at n = 4096 with k = 8 ln(2/delta) = 24
    const std::size_t n = 4096, k = 24, d = 2;
    const double delta = 2.0 * std::exp(-static_cast<double>(k) / 8.0);
    const std::size_t reps = ctx.quick ? 200 : 1000;
    std::vector<double> vals(reps);
    RngStream brng = ctx.stream(902);
    parallel_for(reps, ctx.workers, [&](std::size_t rep) {
        RngStream stream = brng.child(rep);
        std::vector<double> xs(n * d);
        for (auto& v : xs) v = stream.normal();
        const double lam_bar = trimmed_directional_inf(xs, n, SymMatrix::identity(d), k, 4,
                                                       brng.child(70000 + rep), 60);
        vals[rep] = (1.0 - 2.0 * static_cast<double>(k) / n) - lam_bar;
    });
    const auto q = empirical_quantile(EmpiricalDistribution(std::move(vals)), 1.0 - delta);
    const double rhs = 100.0 * (std::sqrt(8.0 * std::log(6.0 * d) * (3.0 + 1.0) / n) +
                                std::sqrt((2.0 + 1.0) * std::log(1.0 / delta) / n));
    const bool bound_ok = q.value <= rhs;
    r.pass = bad == 0 && bound_ok;
    r.detail = std::to_string(bad) + " grid mismatches (worst " + fmt(worst) + "); quantile " +
               fmt(q.value) + " <= " + fmt(rhs);
    return r;
}

CriterionResult c10_variance_estimator(const Ctx& ctx) {
    CriterionResult r{10, "minimax variance estimator beats the sample variance"};
    const std::size_t n = 10;
    const double delta = 0.05;
    const std::size_t reps = ctx.reps(100000);

    // exact scale equivariance (dyadic factor)
    std::vector<double> probe{0.5, -1.25, 2.0, 0.75, -0.5, 1.5, -2.25, 0.25, 1.0, -0.75};
    std::vector<double> scaled;
    for (double v : probe) scaled.push_back(2.0 * v);
    const bool equivariant = minimax_variance_estimate(scaled, 0.0, delta).value ==
                             4.0 * minimax_variance_estimate(probe, 0.0, delta).value;

    auto mm = [&](std::span<const double> s) { return minimax_variance_estimate(s, 0.0, delta).value; };
    auto plain = [&](std::span<const double> s) {
        double second = 0.0;
        for (double v : s) second += v * v;
        return second / static_cast<double>(s.size());
    };
    const auto risk_mm =
        variance_loss_quantile(n, 1.0, 0.0, 1.0 - delta, reps, ctx.stream(1001), mm);
    const auto risk_plain =
        variance_loss_quantile(n, 1.0, 0.0, 1.0 - delta, reps, ctx.stream(1001), plain);
    const double target = p_alpha_inverse(1.0 - delta, 0.5 * n);
    const double rel = std::abs(risk_mm.value - target) / target;
    const double gap = risk_plain.value - risk_mm.value;
    const double combined = std::hypot(risk_mm.se_proxy, risk_plain.se_proxy);

    // round trips
    RngStream rng = ctx.stream(1002);
    std::size_t bad_rt = 0;
    for (int i = 0; i < 20; ++i) {
        const double alpha = 0.5 + 40.0 * rng.uniform();
        const double level = 0.02 + 0.96 * rng.uniform();
        if (std::abs(p_alpha(p_alpha_inverse(level, alpha), alpha) - level) > 1e-10) ++bad_rt;
    }

    r.pass = equivariant && rel <= ctx.tol(0.02) && gap >= 3.0 * combined && bad_rt == 0;
    r.detail = "rel " + fmt(rel) + " vs " + fmt(ctx.tol(0.02)) + "; plain - minimax " + fmt(gap) +
               " vs 3 se " + fmt(3.0 * combined) + "; " + std::to_string(bad_rt) +
               " round-trip failures; equivariant " + (equivariant ? "yes" : "no");
    return r;
}

CriterionResult c11_robustness(const Ctx& ctx) {
    CriterionResult r{11, "min-max procedure robustness (outliers + heavy tails)"};
    // planted outliers: n = 64, x = 1, four labels at 1e6
    Dataset planted;
    planted.n = 64;
    planted.d = 1;
    planted.x.assign(64, 1.0);
    planted.y.assign(64, 1.0);
    planted.y[5] = planted.y[21] = planted.y[40] = planted.y[59] = 1e6;
    const auto ols_fit_res = ols_fit(planted);
    MinMaxConfig cfg;
    cfg.k = 5;
    const auto mm_fit = minmax_fit(planted, ErrorFn::square(), cfg);
    const bool planted_ok =
        std::abs(mm_fit.w_hat[0] - 1.0) < 0.05 && std::abs(ols_fit_res.w_hat[0] - 1.0) > 1e4;

    // Student-t(3) noise in P_2(P_X, 1): paired risk comparison at n = 5000
    const std::size_t n = 5000;
    const double delta = 0.05;
    const std::size_t reps = ctx.quick ? 300 : 1500;
    ProblemSpec spec(InputDist::gaussian(SymMatrix::identity(2)), {0.0, 0.0},
                     NoiseModel::student_t(3.0, 1.0), ErrorFn::square());
    const bool member = class_membership_check(spec, ClassSpec::p2_class(1.0)).member;

    const OlsEstimator ols;
    MinMaxConfig base;
    base.outer_steps = 300;
    const MinMaxEstimator minmax(ErrorFn::square(), delta, base);
    const auto risk_mm = quantile_risk_mc(spec, minmax, n, delta, reps, ctx.stream(1101), ctx.workers);
    const auto risk_ols = quantile_risk_mc(spec, ols, n, delta, reps, ctx.stream(1101), ctx.workers);

    RngStream pr = ctx.stream(1102);
    const auto params = matrix_params(spec.input, 0, pr);
    GuaranteeExtras extras;
    extras.sigma2 = 1.0;
    const auto rhs = guarantee_rhs(ErrorFn::square(), params, extras, n, 2, delta);

    const bool under_bound = risk_mm.quantile_risk.value <= rhs.risk_bound;
    const bool beats_ols = risk_mm.quantile_risk.value <= risk_ols.quantile_risk.value;
    r.pass = planted_ok && member && under_bound && beats_ols;
    r.detail = std::string("planted ") + (planted_ok ? "ok" : "FAIL") + "; minmax risk " +
               fmt(risk_mm.quantile_risk.value) + " <= bound " + fmt(rhs.risk_bound) +
               " and <= ols " + fmt(risk_ols.quantile_risk.value);
    return r;
}

CriterionResult c12_infinite_risk(const Ctx& ctx) {
    CriterionResult r{12, "infinite-risk regime around eps_n"};
    const auto zero_one = InputDist::discrete({{0.0}, {1.0}}, {0.5, 0.5});
    RngStream rng = ctx.stream(1201);
    const auto eps = singularity_prob(zero_one, 6, 0, rng);
    const bool eps_exact = eps.exact && eps.estimate == std::pow(0.5, 6.0);

    const std::size_t reps = ctx.reps(50000);
    const auto below = gauss_minimax_exact_mc(zero_one, ErrorFn::square(), 1.0, 6, 0.01, reps,
                                              ctx.stream(1202), ctx.workers);
    const auto above = gauss_minimax_exact_mc(zero_one, ErrorFn::square(), 1.0, 6, 0.1, reps,
                                              ctx.stream(1203), ctx.workers);
    r.pass = eps_exact && below.value == kInf && std::isfinite(above.value);
    r.detail = "eps_6 = " + fmt(eps.estimate) + " (2^-6 = " + fmt(std::pow(0.5, 6.0)) +
               "); risk(delta=0.01) = " + (below.value == kInf ? "inf" : fmt(below.value)) +
               ", risk(delta=0.1) = " + fmt(above.value);
    return r;
}

CriterionResult c13_pnorm_lower_bound(const Ctx& ctx) {
    CriterionResult r{13, "p-power minimax risk exceeds its lower bound"};
    const std::size_t reps = ctx.reps(20000);
    const auto exact = gauss_minimax_exact_mc(unit_point(), ErrorFn::ppower(4.0), 1.0, 400, 0.1,
                                              reps, ctx.stream(1301), ctx.workers);
    const double bound = pnorm_lower_bound(4.0, 1.0, 1, 400, 0.1);
    const bool above = exact.value >= bound - 3.0 * exact.se_proxy;

    // m-values against fixed-grid Simpson and the K(4) constant
    const double m2 = simpson_abs_moment(2.0);
    const double m6 = simpson_abs_moment(6.0);
    const bool m_ok = std::abs(std_normal_abs_moment(2.0) - m2) < 1e-8 &&
                      std::abs(std_normal_abs_moment(6.0) - m6) < 1e-6 * 15.0;
    const double k4 = 9.0 * std_normal_abs_moment(6.0) / std_normal_abs_moment(2.0);
    const bool k_ok = std::abs(k4 - 135.0) < 1e-9;

    r.pass = above && m_ok && k_ok;
    r.detail = "mc " + fmt(exact.value) + " >= bound " + fmt(bound) + "; K(4) = " + fmt(k4) +
               "; m(2), m(6) quadrature gaps " + fmt(std::abs(std_normal_abs_moment(2.0) - m2)) +
               ", " + fmt(std::abs(std_normal_abs_moment(6.0) - m6));
    return r;
}

}  // namespace

std::vector<CriterionResult> run_acceptance_suite(bool quick, std::uint64_t seed,
                                                  std::size_t workers, std::ostream& log) {
    const Ctx ctx{quick, seed, workers};
    const std::vector<std::function<CriterionResult(const Ctx&)>> criteria = {
        c1_exact_minimax, c2_ols_minimax,       c3_asymptotic,       c4_bounds_sandwich,
        c5_truncation,    c6_quantile_calculus, c7_abs_gaussian_cdf, c8_eigen_upper_bound,
        c9_trimmed_inf,   c10_variance_estimator, c11_robustness,    c12_infinite_risk,
        c13_pnorm_lower_bound};

    std::vector<CriterionResult> results;
    results.reserve(criteria.size());
    for (const auto& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        CriterionResult res = c(ctx);
        res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        log << (res.pass ? "[PASS] " : "[FAIL] ") << "criterion " << res.index << ": " << res.name
            << " -- " << res.detail << " (" << fmt(res.seconds) << " s)\n";
        log.flush();
        results.push_back(std::move(res));
    }
    std::size_t passed = 0;
    for (const auto& res : results) passed += res.pass;
    log << passed << "/" << results.size() << " criteria passed"
        << (quick ? " (quick mode: reduced replicates, widened tolerances)" : "") << "\n";
    return results;
}

}  // namespace qrisk
