#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "qrisk/distributions.hpp"

using namespace qrisk;

namespace {

InputDist axes_uniform(std::size_t d) {
    // uniform on {+- sqrt(d) e_j}: identity covariance
    std::vector<std::vector<double>> pts;
    std::vector<double> probs;
    for (std::size_t j = 0; j < d; ++j) {
        for (double s : {1.0, -1.0}) {
            std::vector<double> p(d, 0.0);
            p[j] = s * std::sqrt(static_cast<double>(d));
            pts.push_back(p);
            probs.push_back(1.0 / (2.0 * d));
        }
    }
    return InputDist::discrete(pts, probs);
}

InputDist unit_point() { return InputDist::discrete({{1.0}}, {1.0}); }

}  // namespace

TEST_CASE("input validation") {
    CHECK_THROWS_AS(InputDist::discrete({{1.0, 0.0}, {-1.0, 0.0}}, {0.5, 0.5}), not_full_rank);
    CHECK_THROWS_AS(InputDist::discrete({{1.0}}, {0.9}), invalid_input);
    CHECK_THROWS_AS(InputDist::coord_kurtosis(2, 0.5), invalid_input);
    CHECK_THROWS_AS(NoiseModel::student_t(2.0, 1.0), invalid_input);

    SymMatrix singular(2);
    singular.set(0, 0, 1.0);
    CHECK_THROWS_AS(InputDist::gaussian(singular), not_pd);
}

TEST_CASE("sample_dataset basics") {
    // zero noise: y = <w*, x> exactly
    ProblemSpec clean(axes_uniform(2), {1.5, -2.0}, NoiseModel::gaussian(0.0), ErrorFn::square());
    RngStream rng(100, 0);
    const Dataset ds = sample_dataset(clean, 64, rng);
    for (std::size_t i = 0; i < ds.n; ++i) {
        const double pred = 1.5 * ds.xat(i, 0) - 2.0 * ds.xat(i, 1);
        CHECK(ds.y[i] == pred);
    }

    // w* = 0, Gaussian noise: mean(y) within 4 sigma / sqrt(n)
    ProblemSpec noisy(InputDist::gaussian(SymMatrix::identity(2)), {0.0, 0.0},
                      NoiseModel::gaussian(1.0), ErrorFn::square());
    RngStream rng2(100, 1);
    const Dataset ds2 = sample_dataset(noisy, 10000, rng2);
    double mean = 0.0;
    for (double y : ds2.y) mean += y;
    mean /= static_cast<double>(ds2.n);
    CHECK(std::abs(mean) < 4.0 / std::sqrt(10000.0));

    // reproducibility
    RngStream a(7, 3), b(7, 3);
    const Dataset d1 = sample_dataset(noisy, 50, a);
    const Dataset d2 = sample_dataset(noisy, 50, b);
    CHECK(d1.x == d2.x);
    CHECK(d1.y == d2.y);
}

TEST_CASE("noise moments closed forms") {
    const NoiseModel g = NoiseModel::gaussian(4.0);
    CHECK(g.abs_moment(2.0) == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(g.abs_moment(4.0) == doctest::Approx(3.0 * 16.0).epsilon(1e-12));

    const NoiseModel t3 = NoiseModel::student_t(3.0, 1.0);
    CHECK(t3.variance() == doctest::Approx(1.0));
    CHECK(t3.abs_moment(2.0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(t3.abs_moment(4.0) == std::numeric_limits<double>::infinity());

    const NoiseModel tp = NoiseModel::two_point(2.0, 0.5);
    CHECK(tp.abs_moment(2.0) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(tp.abs_moment(3.0) == doctest::Approx(4.0).epsilon(1e-12));

    // sampled variance agrees
    RngStream rng(101, 0);
    double var = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double xi = t3.sample(rng);
        var += xi * xi;
    }
    var /= n;
    CHECK(var == doctest::Approx(1.0).epsilon(0.1));
}

TEST_CASE("matrix_params closed forms") {
    RngStream rng(102, 0);

    // Gaussian N(0, I_d): S = (d+1) I, R = 2
    const auto gp = matrix_params(InputDist::gaussian(SymMatrix::identity(3)), 0, rng);
    CHECK(gp.lambda_max_S == doctest::Approx(4.0));
    CHECK(gp.R == doctest::Approx(2.0));

    // whitening makes the answer covariance-free
    SymMatrix sig(2);
    sig.set(0, 0, 3.0);
    sig.set(1, 1, 0.5);
    sig.set(0, 1, 0.2);
    const auto gp2 = matrix_params(InputDist::gaussian(sig), 0, rng);
    CHECK(gp2.lambda_max_S == doctest::Approx(3.0));
    CHECK(gp2.R == doctest::Approx(2.0));

    // uniform on +-sqrt(d) e_j: S = (d-1) I, R = d-1
    for (std::size_t d : {2ul, 4ul}) {
        const auto dp = matrix_params(axes_uniform(d), 0, rng);
        CHECK(dp.lambda_max_S == doctest::Approx(static_cast<double>(d) - 1.0).epsilon(1e-9));
        CHECK(dp.R == doctest::Approx(static_cast<double>(d) - 1.0).epsilon(1e-6));
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = 0; j < d; ++j)
                CHECK(dp.S(i, j) == doctest::Approx(i == j ? d - 1.0 : 0.0).epsilon(1e-9));
    }

    // deterministic unit input: S = 0, R = 0
    const auto up = matrix_params(unit_point(), 0, rng);
    CHECK(up.lambda_max_S == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(up.R == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("matrix_params Monte Carlo vs coordinate-kurtosis closed form") {
    // independent unit-variance coordinates: S = diag(kappa_j + d - 2),
    // R = max(kappa_1, 3) - 1 with Gaussian tails on the other coordinates
    const double kappa = 6.0;
    const std::size_t d = 3;
    RngStream rng(103, 0);
    const auto mp = matrix_params(InputDist::coord_kurtosis(d, kappa), 400000, rng);
    const double lam_expected = kappa + static_cast<double>(d) - 2.0;
    const double r_expected = kappa - 1.0;
    CHECK(mp.lambda_max_S == doctest::Approx(lam_expected).epsilon(0.05));
    CHECK(mp.R == doctest::Approx(r_expected).epsilon(0.05));
}

TEST_CASE("Jensen relation lambda_max(S) <= R d") {
    RngStream rng(104, 0);
    for (const auto& input :
         {InputDist::gaussian(SymMatrix::identity(2)), axes_uniform(3),
          InputDist::coord_kurtosis(2, 5.0)}) {
        const auto mp = matrix_params(input, 100000, rng);
        CHECK(mp.lambda_max_S <= mp.R * static_cast<double>(input.dim()) * 1.05 + 1e-9);
    }
}

TEST_CASE("hyperplane_mass") {
    CHECK(hyperplane_mass(InputDist::gaussian(SymMatrix::identity(3))) == 0.0);

    for (std::size_t d : {2ul, 3ul, 5ul}) {
        CHECK(hyperplane_mass(axes_uniform(d)) ==
              doctest::Approx((static_cast<double>(d) - 1.0) / static_cast<double>(d)).epsilon(1e-12));
    }

    // d = 1, X in {0, 1} with P(0) = rho: the only hyperplane is {0}
    const auto zero_one = InputDist::discrete({{0.0}, {1.0}}, {0.3, 0.7});
    CHECK(hyperplane_mass(zero_one) == doctest::Approx(0.3).epsilon(1e-12));

    CHECK(hyperplane_mass(InputDist::coord_kurtosis(2, 4.0)) == doctest::Approx(0.75));
}

TEST_CASE("singularity_prob exact and Monte Carlo") {
    RngStream rng(105, 0);
    const auto zero_one = InputDist::discrete({{0.0}, {1.0}}, {0.5, 0.5});
    const auto e6 = singularity_prob(zero_one, 6, 0, rng);
    CHECK(e6.exact);
    CHECK(e6.estimate == doctest::Approx(std::pow(0.5, 6.0)).epsilon(1e-15));

    const auto g = InputDist::gaussian(SymMatrix::identity(3));
    CHECK(singularity_prob(g, 3, 0, rng).estimate == 0.0);
    CHECK(singularity_prob(g, 2, 0, rng).estimate == 1.0);

    // Lemma-style bracket rho^n <= eps_n <= C(n, d-1) rho^{n-d-1} at d = 2
    const auto diag2 = InputDist::discrete(
        {{1.0, 0.0}, {-1.0, 0.0}, {0.0, 1.0}, {0.0, -1.0}}, {0.25, 0.25, 0.25, 0.25});
    const double rho = hyperplane_mass(diag2);
    CHECK(rho == doctest::Approx(0.5));
    const std::size_t n = 8;
    const auto est = singularity_prob(diag2, n, 40000, rng);
    const double lower = std::pow(rho, static_cast<double>(n));
    const double upper = static_cast<double>(n) * std::pow(rho, static_cast<double>(n) - 3.0);
    CHECK(est.wilson_hi >= lower);
    CHECK(est.wilson_lo <= upper);
}

TEST_CASE("norm_equivalence") {
    RngStream rng(106, 0);
    const auto g = InputDist::gaussian(SymMatrix::identity(2));
    CHECK(norm_equivalence(g, 4.0, 0, rng) == doctest::Approx(std::pow(3.0, 0.25)).epsilon(1e-12));

    CHECK(norm_equivalence(unit_point(), 4.0, 0, rng) == doctest::Approx(1.0).epsilon(1e-12));

    // p -> 2+ gives 1 for any input
    CHECK(norm_equivalence(axes_uniform(3), 2.0 + 1e-9, 0, rng) == doctest::Approx(1.0).epsilon(1e-6));

    // axes design: mass concentrates on coordinates; N = d^{(p-2)/(2p)}
    const double n4 = norm_equivalence(axes_uniform(2), 4.0, 0, rng);
    CHECK(n4 == doctest::Approx(std::pow(2.0, 0.25)).epsilon(1e-6));
}

TEST_CASE("small_ball_ratio") {
    RngStream rng(107, 0);
    CHECK(small_ball_ratio(InputDist::gaussian(SymMatrix::identity(4)), 0, rng) ==
          doctest::Approx(std::sqrt(3.14159265358979323846 / 2.0)).epsilon(1e-12));
    CHECK(small_ball_ratio(unit_point(), 0, rng) == doctest::Approx(1.0).epsilon(1e-12));
    const auto pm1 = InputDist::discrete({{1.0}, {-1.0}}, {0.5, 0.5});
    CHECK(small_ball_ratio(pm1, 0, rng) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("class membership checks") {
    const auto g = InputDist::gaussian(SymMatrix::identity(2));

    ProblemSpec gauss_spec(g, {0.0, 0.0}, NoiseModel::gaussian(1.0), ErrorFn::square());
    CHECK(class_membership_check(gauss_spec, ClassSpec::gauss_class(1.0)).member);
    CHECK(class_membership_check(gauss_spec, ClassSpec::p2_class(1.0)).member);

    // Gaussian noise inside the p-power class for a legal mu
    ProblemSpec gauss_p(g, {0.0, 0.0}, NoiseModel::gaussian(1.0), ErrorFn::ppower(4.0));
    const double mu_small = 0.5;  // below E|xi|^{p-2} = 1
    CHECK(class_membership_check(gauss_p, ClassSpec::pp_class(1.0, mu_small, 4.0)).member);

    // scaled Student-t(3) with unit variance: P2(1) membership with slack 0
    ProblemSpec t_spec(g, {0.0, 0.0}, NoiseModel::student_t(3.0, 1.0), ErrorFn::square());
    const auto t_rep = class_membership_check(t_spec, ClassSpec::p2_class(1.0));
    CHECK(t_rep.member);
    CHECK(std::abs(t_rep.slacks[0].second) < 1e-12);

    // too-large sigma2 fails, too-large mu is rejected as illegal
    ProblemSpec loud(g, {0.0, 0.0}, NoiseModel::gaussian(2.0), ErrorFn::square());
    CHECK_FALSE(class_membership_check(loud, ClassSpec::p2_class(1.0)).member);
    CHECK_THROWS_AS(class_membership_check(gauss_p, ClassSpec::pp_class(1.0, 10.0, 4.0)),
                    invalid_input);
}

TEST_CASE("whitening consistency: empirical second moment of whitened draws is I") {
    RngStream rng(108, 0);
    SymMatrix sig(2);
    sig.set(0, 0, 2.0);
    sig.set(1, 1, 0.7);
    sig.set(0, 1, -0.4);
    for (const auto& input : {InputDist::gaussian(sig), axes_uniform(2),
                              InputDist::coord_kurtosis(2, 4.0)}) {
        const std::size_t m = 200000;
        SymMatrix acc(2);
        std::vector<double> x(2);
        for (std::size_t i = 0; i < m; ++i) {
            input.sample_whitened(rng, x);
            for (std::size_t a = 0; a < 2; ++a)
                for (std::size_t b = a; b < 2; ++b) acc.add(a, b, x[a] * x[b] / m);
        }
        // entries of xx^T have variance O(kurtosis); 5 se with a safe constant
        const double tol = 5.0 * std::sqrt(10.0 / static_cast<double>(m));
        for (std::size_t a = 0; a < 2; ++a)
            for (std::size_t b = 0; b < 2; ++b)
                CHECK(std::abs(acc(a, b) - (a == b ? 1.0 : 0.0)) < tol);
    }
}
