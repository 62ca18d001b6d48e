#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "qrisk/distributions.hpp"
#include "qrisk/error_fn.hpp"
#include "qrisk/rng.hpp"
#include "qrisk/truncation.hpp"

namespace qrisk {

struct FitResult {
    std::vector<double> w_hat;
    std::size_t iterations = 0;
    std::size_t inner_iterations = 0;
    double grad_norm_final = 0.0;
    std::vector<double> objective_trace;
    bool singular_design = false;
};

// Least squares via the normal equations; Cholesky on the sample second
// moment when it is nonsingular, otherwise the minimum-norm solution from
// the eigendecomposition with singular_design flagged (never fatal).
FitResult ols_fit(const Dataset& ds);

// psi_k(w, v) = trimmed sum of per-sample error differences, divided by n.
double psi_k(std::span<const double> w, std::span<const double> v, const Dataset& ds,
             const ErrorFn& error, TrimLevel trim);

struct MinMaxConfig {
    std::size_t k = 1;
    std::size_t outer_steps = 500;
    std::size_t inner_steps = 20;
    double step_size = 0.5;
    double tolerance = 1e-7;
    enum class Init { ols, zero, given } init = Init::ols;
    std::vector<double> init_w;
    bool record_trace = false;

    // k = clamp(round(8 ln(4/delta)), 1, floor(n/8)), natural log
    static std::size_t k_for_delta(double delta, std::size_t n);
};

// Alternating subgradient descent-ascent for argmin_w max_v psi_k(w, v).
// Each outer step restarts the adversary at v = w, runs inner_steps of
// ascent on psi_k(w, .), then takes one descent step on psi_k(., v).
// Returns the iterate with the smallest adversarial surrogate seen.
FitResult minmax_fit(const Dataset& ds, const ErrorFn& error, const MinMaxConfig& config);

std::vector<double> sample_mean(std::span<const double> samples, std::size_t n, std::size_t d);

// P(lo(t) <= Z <= hi(t)) for Z ~ Inv-Gamma(alpha, alpha) with
// lo = (1 - e^{-2t})/(2t), hi = (e^{2t} - 1)/(2t); strictly increasing in t
// with range (0, 1).
double p_alpha(double t, double alpha);

// Inverse of p_alpha by bisection: |p_alpha(result) - level| <= 1e-10.
double p_alpha_inverse(double level, double alpha);

struct VarianceEstimate {
    double value = 0.0;
    bool degenerate = false;  // all samples equal mu
};

// (sum (x_i - mu)^2 / n) * sinh(t)/t at t = p_{n/2}^{-}(1 - delta).
VarianceEstimate minimax_variance_estimate(std::span<const double> samples, double mu, double delta);

// Regression estimator interface for the risk pipelines.
class Estimator {
  public:
    virtual ~Estimator() = default;
    virtual FitResult fit(const Dataset& ds, RngStream& rng) const = 0;
    virtual std::string id() const = 0;
};

class OlsEstimator final : public Estimator {
  public:
    FitResult fit(const Dataset& ds, RngStream&) const override { return ols_fit(ds); }
    std::string id() const override { return "ols"; }
};

// Min-max fit with either a fixed k or the delta rule applied per dataset.
class MinMaxEstimator final : public Estimator {
  public:
    MinMaxEstimator(ErrorFn error, MinMaxConfig config)
        : error_(error), config_(config), use_delta_rule_(false) {}

    MinMaxEstimator(ErrorFn error, double delta, MinMaxConfig base = {})
        : error_(error), config_(base), use_delta_rule_(true), delta_(delta) {}

    FitResult fit(const Dataset& ds, RngStream&) const override;
    std::string id() const override;

  private:
    ErrorFn error_;
    MinMaxConfig config_;
    bool use_delta_rule_;
    double delta_ = 0.1;
};

}  // namespace qrisk
