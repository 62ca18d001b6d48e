#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "qrisk/rng.hpp"
#include "qrisk/truncation.hpp"

using namespace qrisk;

namespace {

// dyadic rationals m / 2^10 with |m| <= 2^20: sums and small-power-of-two
// scalings are exact in double
double dyadic(RngStream& rng) {
    const auto m = static_cast<long long>(rng.next_u64() % (1ULL << 21)) - (1LL << 20);
    return static_cast<double>(m) / 1024.0;
}

std::vector<double> dyadic_seq(std::size_t n, RngStream& rng) {
    std::vector<double> a(n);
    for (auto& x : a) x = dyadic(rng);
    return a;
}

double phi_k(const std::vector<double>& a, std::size_t k) {
    return trimmed_sum(a, TrimLevel(k, a.size())).clamped_total;
}

}  // namespace

TEST_CASE("clamp basics") {
    CHECK(clamp(5.0, 0.0, 3.0) == 3.0);
    CHECK(clamp(2.0, 0.0, 3.0) == 2.0);
    CHECK(clamp(-7.0, 1.0, 3.0) == 1.0);
    CHECK_THROWS_AS(clamp(0.0, 2.0, 1.0), invalid_input);
}

TEST_CASE("clamp identities on 1000 random triples") {
    RngStream rng(31, 0);
    for (int rep = 0; rep < 1000; ++rep) {
        const double x = dyadic(rng);
        double alpha = dyadic(rng), beta = dyadic(rng);
        if (alpha > beta) std::swap(alpha, beta);
        const double y = dyadic(rng);
        const double c = std::ldexp(1.0, static_cast<int>(rng.next_u64() % 7) - 3);

        CHECK(c * clamp(x, alpha, beta) == clamp(c * x, c * alpha, c * beta));
        CHECK(-clamp(x, alpha, beta) == clamp(-x, -beta, -alpha));
        CHECK(clamp(x, alpha, beta) + y == clamp(x + y, alpha + y, beta + y));
    }
}

TEST_CASE("sort_star is stable") {
    std::vector<double> a{3.0, 1.0, 2.0};
    auto [s1, p1] = sort_star(a);
    CHECK(s1 == std::vector<double>{1.0, 2.0, 3.0});

    std::vector<double> ties{5.0, 5.0, 1.0};
    auto [s2, p2] = sort_star(ties);
    CHECK(s2 == std::vector<double>{1.0, 5.0, 5.0});
    CHECK(p2 == std::vector<std::size_t>{2, 0, 1});

    std::vector<double> one{4.5};
    auto [s3, p3] = sort_star(one);
    CHECK(s3 == one);
}

TEST_CASE("trimmed_sum hand examples") {
    std::vector<double> a{10.0, 1.0, 2.0, 3.0, -7.0};
    const auto b = trimmed_sum(a, TrimLevel(1, 5));
    CHECK(b.lower_bound == 1.0);
    CHECK(b.upper_bound == 3.0);
    CHECK(b.clamped_total == 10.0);  // 3 + 1 + 2 + 3 + 1

    std::vector<double> c(6, 2.5);
    CHECK(phi_k(c, 2) == 15.0);

    std::vector<double> z{0.0, 0.0, 0.0, 100.0};
    const auto bz = trimmed_sum(z, TrimLevel(1, 4));
    CHECK(bz.lower_bound == 0.0);
    CHECK(bz.upper_bound == 0.0);
    CHECK(bz.clamped_total == 0.0);

    CHECK_THROWS_AS(TrimLevel(0, 5), invalid_input);
    CHECK_THROWS_AS(TrimLevel(3, 6), invalid_input);
}

TEST_CASE("scaling equivariance exact on dyadics, all real c") {
    RngStream rng(32, 0);
    for (int rep = 0; rep < 1000; ++rep) {
        const std::size_t n = 3 + rng.next_u64() % 14;
        const std::size_t k = 1 + rng.next_u64() % ((n - 1) / 2);
        const auto a = dyadic_seq(n, rng);
        const double c = (rng.next_u64() % 2 ? 1.0 : -1.0) *
                         std::ldexp(1.0, static_cast<int>(rng.next_u64() % 7) - 3);
        std::vector<double> ca(n);
        for (std::size_t i = 0; i < n; ++i) ca[i] = c * a[i];
        CHECK(c * phi_k(a, k) == phi_k(ca, k));  // bitwise
    }
}

TEST_CASE("shift identity exact on dyadics") {
    RngStream rng(33, 0);
    for (int rep = 0; rep < 1000; ++rep) {
        const std::size_t n = 3 + rng.next_u64() % 14;
        const std::size_t k = 1 + rng.next_u64() % ((n - 1) / 2);
        const auto a = dyadic_seq(n, rng);
        const double c = dyadic(rng);
        std::vector<double> shifted(n);
        for (std::size_t i = 0; i < n; ++i) shifted[i] = a[i] + c;
        CHECK(phi_k(a, k) + static_cast<double>(n) * c == phi_k(shifted, k));  // bitwise
    }
}

TEST_CASE("monotonicity in the sequence") {
    RngStream rng(34, 0);
    for (int rep = 0; rep < 1000; ++rep) {
        const std::size_t n = 3 + rng.next_u64() % 14;
        const std::size_t k = 1 + rng.next_u64() % ((n - 1) / 2);
        std::vector<double> a(n), b(n);
        for (std::size_t i = 0; i < n; ++i) {
            a[i] = rng.normal();
            b[i] = a[i] + 2.0 * rng.uniform();
        }
        CHECK(phi_k(a, k) <= phi_k(b, k) + 1e-12);

        // sorted sequences dominate entrywise too
        auto sa = sort_star(a).first;
        auto sb = sort_star(b).first;
        for (std::size_t i = 0; i < n; ++i) CHECK(sa[i] <= sb[i]);
    }
}

TEST_CASE("superadditivity over nonnegative perturbations") {
    RngStream rng(35, 0);
    for (int rep = 0; rep < 1000; ++rep) {
        const std::size_t n = 3 + rng.next_u64() % 14;
        const std::size_t k = 1 + rng.next_u64() % ((n - 1) / 2);
        std::vector<double> a(n), b(n), apb(n);
        for (std::size_t i = 0; i < n; ++i) {
            a[i] = rng.normal();
            b[i] = rng.uniform();
            apb[i] = a[i] + b[i];
        }
        auto bs = sort_star(b).first;
        double small_b = 0.0;
        for (std::size_t i = 0; i < n - 2 * k; ++i) small_b += bs[i];
        CHECK(phi_k(apb, k) >= phi_k(a, k) + small_b - 1e-10);
    }
}

TEST_CASE("subgradient weights and closed forms") {
    // all distinct entries, d = 1, unit gradients: weights sum to n
    RngStream rng(36, 0);
    for (int rep = 0; rep < 200; ++rep) {
        const std::size_t n = 3 + rng.next_u64() % 14;
        const std::size_t k = 1 + rng.next_u64() % ((n - 1) / 2);
        std::vector<double> a(n), ones(n, 1.0);
        for (auto& x : a) x = rng.normal();
        const auto g = trimmed_sum_subgradient(a, ones, 1, TrimLevel(k, n));
        CHECK(g[0] == doctest::Approx(static_cast<double>(n)).epsilon(1e-12));
    }

    // n = 3, k = 1: everything lands on the middle entry
    std::vector<double> a{5.0, -1.0, 2.0};
    std::vector<double> grads{10.0, 20.0, 30.0};
    const auto g = trimmed_sum_subgradient(a, grads, 1, TrimLevel(1, 3));
    CHECK(g[0] == 3.0 * 30.0);  // middle entry is a[2] = 2.0

    // constant gradient vector g0: output n * g0
    std::vector<double> b{1.0, 7.0, 3.0, 4.0, 2.0};
    std::vector<double> gconst(5 * 2);
    for (std::size_t i = 0; i < 5; ++i) {
        gconst[2 * i] = 1.5;
        gconst[2 * i + 1] = -2.0;
    }
    const auto g2 = trimmed_sum_subgradient(b, gconst, 2, TrimLevel(1, 5));
    CHECK(g2[0] == doctest::Approx(5 * 1.5).epsilon(1e-12));
    CHECK(g2[1] == doctest::Approx(5 * -2.0).epsilon(1e-12));

    CHECK_THROWS_AS(trimmed_sum_subgradient(b, gconst, 3, TrimLevel(1, 5)), invalid_input);
}

TEST_CASE("subgradient matches finite differences away from ties") {
    RngStream rng(37, 0);
    for (int rep = 0; rep < 100; ++rep) {
        const std::size_t n = 5 + rng.next_u64() % 10;
        const std::size_t k = 1 + rng.next_u64() % ((n - 1) / 2);
        // a_i = <w, x_i> as a function of scalar w around w0 = 1
        std::vector<double> x(n), a(n);
        for (std::size_t i = 0; i < n; ++i) x[i] = rng.normal();
        const double w0 = 1.0;
        for (std::size_t i = 0; i < n; ++i) a[i] = w0 * x[i];
        const auto g = trimmed_sum_subgradient(a, x, 1, TrimLevel(k, n));
        const double h = 1e-7;
        std::vector<double> ap(n), am(n);
        for (std::size_t i = 0; i < n; ++i) {
            ap[i] = (w0 + h) * x[i];
            am[i] = (w0 - h) * x[i];
        }
        const double fd = (phi_k(ap, k) - phi_k(am, k)) / (2.0 * h);
        CHECK(std::abs(g[0] - fd) <= 1e-4 * std::max(1.0, std::abs(g[0])));
    }
}
