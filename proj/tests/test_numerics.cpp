#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "qrisk/numerics.hpp"
#include "qrisk/rng.hpp"

using namespace qrisk;

namespace {

SymMatrix from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    SymMatrix m(rows.size());
    std::size_t i = 0;
    for (const auto& r : rows) {
        std::size_t j = 0;
        for (double v : r) {
            if (j >= i) m.set(i, j, v);
            ++j;
        }
        ++i;
    }
    return m;
}

SymMatrix random_spd(std::size_t d, RngStream& rng) {
    // B B^T + small ridge
    std::vector<double> b(d * d);
    for (auto& v : b) v = rng.normal();
    SymMatrix m(d);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = i; j < d; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < d; ++k) s += b[i * d + k] * b[j * d + k];
            m.set(i, j, s + (i == j ? 0.05 : 0.0));
        }
    return m;
}

}  // namespace

TEST_CASE("sym_eigen on identity and diagonal") {
    const Spectrum id = sym_eigen(SymMatrix::identity(3));
    for (double ev : id.eigenvalues) CHECK(ev == doctest::Approx(1.0).epsilon(1e-12));

    const Spectrum diag = sym_eigen(from_rows({{2.0, 0.0}, {0.0, 5.0}}));
    CHECK(diag.eigenvalues[0] == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(diag.eigenvalues[1] == doctest::Approx(5.0).epsilon(1e-12));
    // axis-aligned eigenvectors
    CHECK(std::abs(diag.vec(0, 0)) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(std::abs(diag.vec(1, 1)) == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("sym_eigen 2x2 against characteristic polynomial") {
    // [[2,1],[1,2]]: roots of (2-l)^2 - 1 are 1 and 3
    const Spectrum s = sym_eigen(from_rows({{2.0, 1.0}, {1.0, 2.0}}));
    CHECK(s.eigenvalues[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(s.eigenvalues[1] == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("sym_eigen rejects non-finite input") {
    SymMatrix m(2);
    m.set(0, 1, std::numeric_limits<double>::quiet_NaN());
    CHECK_THROWS_AS(sym_eigen(m), invalid_input);
}

TEST_CASE("sym_eigen invariants on random matrices") {
    RngStream rng(11, 0);
    for (int rep = 0; rep < 50; ++rep) {
        const std::size_t d = 2 + static_cast<std::size_t>(rng.next_u64() % 8);
        SymMatrix a(d);
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = i; j < d; ++j) a.set(i, j, rng.normal());
        const Spectrum s = sym_eigen(a);

        double trace_sum = 0.0;
        for (double ev : s.eigenvalues) trace_sum += ev;
        CHECK(trace_sum == doctest::Approx(a.trace()).epsilon(1e-9));

        // reconstruction and orthonormality
        const double scale = std::max(1.0, a.max_abs());
        for (std::size_t i = 0; i < d; ++i) {
            for (std::size_t j = 0; j < d; ++j) {
                double rec = 0.0;
                double dot = 0.0;
                for (std::size_t k = 0; k < d; ++k) {
                    rec += s.vec(i, k) * s.eigenvalues[k] * s.vec(j, k);
                    dot += s.vec(k, i) * s.vec(k, j);
                }
                CHECK(std::abs(rec - a(i, j)) <= 1e-10 * scale);
                CHECK(std::abs(dot - (i == j ? 1.0 : 0.0)) <= 1e-10);
            }
        }
    }
}

TEST_CASE("eigenvalue product matches 2x2 determinant closed form") {
    RngStream rng(12, 0);
    for (int rep = 0; rep < 100; ++rep) {
        const double a = rng.normal(), b = rng.normal(), c = rng.normal();
        const Spectrum s = sym_eigen(from_rows({{a, b}, {b, c}}));
        CHECK(s.eigenvalues[0] * s.eigenvalues[1] ==
              doctest::Approx(a * c - b * b).epsilon(1e-9));
    }
}

TEST_CASE("cholesky examples") {
    const auto id = cholesky(SymMatrix::identity(3));
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j)
            CHECK(id[i * 3 + j] == doctest::Approx(i == j ? 1.0 : 0.0));

    const auto diag = cholesky(from_rows({{4.0, 0.0}, {0.0, 9.0}}));
    CHECK(diag[0] == doctest::Approx(2.0));
    CHECK(diag[3] == doctest::Approx(3.0));

    // [[2,1],[1,2]] by forward substitution
    const auto l = cholesky(from_rows({{2.0, 1.0}, {1.0, 2.0}}));
    CHECK(l[0] == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
    CHECK(l[2] == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
    CHECK(l[3] == doctest::Approx(std::sqrt(1.5)).epsilon(1e-12));
}

TEST_CASE("cholesky reconstructs 500 random SPD matrices") {
    RngStream rng(13, 0);
    for (int rep = 0; rep < 500; ++rep) {
        const std::size_t d = 1 + static_cast<std::size_t>(rng.next_u64() % 16);
        const SymMatrix a = random_spd(d, rng);
        const auto l = cholesky(a);
        const double scale = a.max_abs();
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = 0; j <= i; ++j) {
                double s = 0.0;
                for (std::size_t k = 0; k < d; ++k) s += l[i * d + k] * l[j * d + k];
                CHECK(std::abs(s - a(i, j)) <= 1e-10 * scale);
            }
    }
}

TEST_CASE("cholesky rejects non-PD") {
    CHECK_THROWS_AS(cholesky(from_rows({{1.0, 2.0}, {2.0, 1.0}})), not_pd);
}

TEST_CASE("triangular solves invert L L^T") {
    RngStream rng(14, 0);
    const SymMatrix a = random_spd(5, rng);
    const auto l = cholesky(a);
    std::vector<double> b(5);
    for (auto& v : b) v = rng.normal();
    const auto y = solve_lower(l, 5, b);
    const auto x = solve_lower_transposed(l, 5, y);
    // A x should equal b
    for (std::size_t i = 0; i < 5; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < 5; ++j) s += a(i, j) * x[j];
        CHECK(s == doctest::Approx(b[i]).epsilon(1e-8));
    }
}

TEST_CASE("reg_lower_gamma closed forms") {
    CHECK(reg_lower_gamma(1.0, 1.0) == doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-12));
    CHECK(reg_lower_gamma(2.5, 0.0) == 0.0);
    CHECK(reg_lower_gamma(0.5, 1.0) == doctest::Approx(std::erf(1.0)).epsilon(1e-12));
    CHECK_THROWS_AS(reg_lower_gamma(0.0, 1.0), invalid_input);
}

TEST_CASE("reg_lower_gamma monotone in x") {
    for (double a : {0.3, 1.0, 4.7, 25.0}) {
        double prev = -1.0;
        for (double x = 0.0; x <= 80.0; x += 0.37) {
            const double p = reg_lower_gamma(a, x);
            CHECK(p >= prev);
            CHECK(p >= 0.0);
            CHECK(p <= 1.0);
            prev = p;
        }
        CHECK(reg_lower_gamma(a, 1e4) == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("inv_gamma_cdf closed form and scale family") {
    CHECK(inv_gamma_cdf(1.0, 1.0, 1.0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
    // median of Inv-Gamma(1,1) is 1/ln 2
    CHECK(inv_gamma_cdf(1.0 / std::log(2.0), 1.0, 1.0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(inv_gamma_cdf(1e12, 1.0, 1.0) == doctest::Approx(1.0).epsilon(1e-11));
    CHECK_THROWS_AS(inv_gamma_cdf(-1.0, 1.0, 1.0), invalid_input);

    // cX ~ Inv-Gamma(alpha, c beta): F(x; a, c b) = F(x/c; a, b)
    RngStream rng(15, 0);
    for (int rep = 0; rep < 200; ++rep) {
        const double alpha = 0.2 + 5.0 * rng.uniform();
        const double beta = 0.2 + 5.0 * rng.uniform();
        const double c = 0.1 + 3.0 * rng.uniform();
        const double x = 0.05 + 10.0 * rng.uniform();
        CHECK(inv_gamma_cdf(x, alpha, c * beta) ==
              doctest::Approx(inv_gamma_cdf(x / c, alpha, beta)).epsilon(1e-11));
    }
}

TEST_CASE("gauss_hermite_expectation moments") {
    auto sq = [](double t) { return t * t; };
    auto abs1 = [](double t) { return std::abs(t); };
    auto p4 = [](double t) { return t * t * t * t; };
    CHECK(gauss_hermite_expectation(sq, 1.0, 32) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(gauss_hermite_expectation(abs1, 1.0, 128) ==
          doctest::Approx(std::sqrt(2.0 / 3.14159265358979323846)).epsilon(5e-3));
    CHECK(gauss_hermite_expectation(p4, 1.0, 32) == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(gauss_hermite_expectation(sq, 2.0, 32) == doctest::Approx(4.0).epsilon(1e-12));
    CHECK_THROWS_AS(gauss_hermite_expectation(sq, 1.0, 4), invalid_input);
}

TEST_CASE("std_normal_abs_moment against integration oracle") {
    CHECK(std_normal_abs_moment(2.0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std_normal_abs_moment(1.0) ==
          doctest::Approx(std::sqrt(2.0 / 3.14159265358979323846)).epsilon(1e-12));
    CHECK(std_normal_abs_moment(4.0) == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(std_normal_abs_moment(6.0) == doctest::Approx(15.0).epsilon(1e-12));
    CHECK_THROWS_AS(std_normal_abs_moment(-0.5), invalid_input);

    for (double p : {1.0, 2.0, 2.5, 3.0, 4.0, 6.0}) {
        const double ref = oracle::abs_moment_by_integration(p);
        CHECK(std_normal_abs_moment(p) == doctest::Approx(ref).epsilon(1e-8));
    }
}

TEST_CASE("rng streams reproduce and decorrelate") {
    RngStream a(42, 7);
    RngStream b(42, 7);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

    RngStream c(42, 8);
    int equal = 0;
    RngStream a2(42, 7);
    for (int i = 0; i < 1000; ++i) equal += (a2.next_u64() == c.next_u64());
    CHECK(equal == 0);

    // children with distinct indices are distinct streams
    RngStream parent(1, 2);
    CHECK(parent.child(0).stream_id() != parent.child(1).stream_id());

    // uniform in (0, 1]
    RngStream u(5, 5);
    for (int i = 0; i < 10000; ++i) {
        const double v = u.uniform();
        CHECK(v > 0.0);
        CHECK(v <= 1.0);
    }

    // crude normal moment check
    RngStream g(6, 6);
    double mean = 0.0, var = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double z = g.normal();
        mean += z;
        var += z * z;
    }
    mean /= n;
    var /= n;
    CHECK(std::abs(mean) < 0.01);
    CHECK(var == doctest::Approx(1.0).epsilon(0.02));
}
