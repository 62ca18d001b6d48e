#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "qrisk/distributions.hpp"
#include "qrisk/estimators.hpp"
#include "qrisk/quantile.hpp"
#include "qrisk/rng.hpp"

namespace qrisk {

// Evaluates the excess expected error E(w) - E(w*). Square error has the
// closed form (1/2)(w - w*)^T Sigma (w - w*) for any centred symmetric
// noise independent of X. The p-power path integrates e(<delta,x> + eta)
// over the noise by Gauss-Hermite quadrature (Gaussian noise) or an exact
// finite sum (two-point noise), and over X exactly for discrete inputs or
// through a frozen Monte Carlo panel whose seed derives from the spec, so
// evaluations are deterministic.
class ExcessErrorOracle {
  public:
    explicit ExcessErrorOracle(const ProblemSpec& spec, std::size_t quad_nodes = 64,
                               std::size_t panel_size = 100000);

    double excess(std::span<const double> w) const;
    double excess_delta(std::span<const double> delta) const;

    const ProblemSpec& spec() const { return spec_; }

  private:
    double noise_expectation(double u) const;  // E_eta e(u + eta)

    ProblemSpec spec_;
    std::size_t quad_nodes_;
    std::vector<double> gh_x_, gh_w_;    // Gauss-Hermite rule (gaussian noise)
    std::vector<double> panel_;          // X panel, m x d (non-discrete inputs)
    std::vector<double> panel_wts_;
    std::size_t panel_m_ = 0;
    double base_value_ = 0.0;            // tilde E(0)
};

struct RiskReport {
    std::string estimator_id;
    std::string spec_id;
    std::size_t n = 0;
    double delta = 0.0;
    QuantileEstimate quantile_risk;
    std::size_t reps = 0;
    std::uint64_t seed = 0;
};

// Monte Carlo quantile risk of an estimator: fit on `reps` independent
// datasets, evaluate the excess error, take the lower empirical quantile
// at 1 - delta. Singular designs flagged by the estimator contribute +inf.
RiskReport quantile_risk_mc(const ProblemSpec& spec, const Estimator& estimator, std::size_t n,
                            double delta, std::size_t reps, RngStream rng, std::size_t workers = 1);

// Exact Gaussian-class minimax risk by Monte Carlo: per design draw the
// conditional Gaussian (via Cholesky and triangular solves, never an
// explicit inverse) and evaluate the excess error; singular designs give
// +inf. Square error uses the whitened norm form (sigma^2 / 2n) |A|^2 with
// A ~ N(0, whitened_cov^{-1}), algebraically identical and cheaper.
QuantileEstimate gauss_minimax_exact_mc(const InputDist& input, const ErrorFn& error, double sigma2,
                                        std::size_t n, double delta, std::size_t reps, RngStream rng,
                                        std::size_t workers = 1);

// Q_{chi^2_d}(p) by bisection on the regularized incomplete gamma.
double chi_square_quantile(double p, std::size_t d);

// sigma^2 alpha Q_{chi^2_d}(1 - delta) with alpha = E[e''(eta)] / 2.
double asymptotic_minimax(const ErrorFn& error, double sigma2, double delta, std::size_t d);

struct SquareBounds {
    double lower = 0.0;
    double upper = 0.0;
    double eps_hat = 0.0;   // estimated singularity mass
    double eps_hi = 0.0;    // conservative Wilson edge used in the levels
    double q_tr_upper_level = 0.0;
    double q_w_upper_level = 0.0;
    double q_tr_lower_level = 0.0;
    double q_w_lower_level = 0.0;
};

// Upper/lower bounds on the square-error minimax risk at total failure
// level eps_n + delta:
//   upper = 2 sigma^2/n [Q_Tr(1 - eps - delta/2) + Q_W(1 - eps - delta/2)]
//   lower = sigma^2/(6428 n) [Q_Tr(1 - eps - 4 delta) + Q_W(1 - eps - 4 delta)]
// with Tr the trace of the inverse whitened sample covariance and W
// exponential with rate lambda_min (rate 0 = unit mass at infinity).
SquareBounds square_bounds(const InputDist& input, double sigma2, std::size_t n, double delta,
                           std::size_t reps, RngStream rng, std::size_t workers = 1);

struct LemmaBoundsReport {
    double q_tr = 0.0;
    double q_w = 0.0;
    double q_lmax_inv = 0.0;
    double q_lmax_inv_half = 0.0;
    // rhs - lhs for each displayed inequality; nonnegative = satisfied
    double slack_tr_lower = 0.0;
    double slack_tr_upper = 0.0;
    double slack_w_lower = 0.0;
    double slack_w_upper = 0.0;
};

LemmaBoundsReport lemma_bounds_check(const InputDist& input, std::size_t n, double delta,
                                     std::size_t reps, RngStream rng, std::size_t workers = 1);

// m(p-2)/(16(p-1)) sigma^p [d + log(1/delta)] / n, delta in (0, 1/2).
double pnorm_lower_bound(double p, double sigma2, std::size_t d, std::size_t n, double delta);

struct GuaranteeExtras {
    double sigma2 = 1.0;
    double mu = 0.0;          // p-power only
    double norm_equiv = 0.0;  // N(P_X, p), p-power only
};

struct GuaranteeRhs {
    double risk_bound = 0.0;
    double min_n = 0.0;
};

// Displayed right-hand sides of the min-max procedure guarantees: the risk
// bound and the sample-size threshold, square and p-power variants.
GuaranteeRhs guarantee_rhs(const ErrorFn& error, const MatrixParams& params,
                           const GuaranteeExtras& extras, std::size_t n, std::size_t d, double delta);

// n >= max{128 [4 log(3d) lmax(S) + R log(2/delta)], log(3d)/(18 lmax(S)),
//          log(2/delta)/R}
bool sufficiency_check(const InputDist& input, double sigma2, std::size_t n, double delta,
                       std::size_t mc_samples = 200000, RngStream rng = RngStream(0, 999));

// Quantile of the relative-error variance loss |log(sigma2 / est)| over
// reps draws of n Gaussians; est is any variance estimator of the samples.
template <typename VarEstimator>
QuantileEstimate variance_loss_quantile(std::size_t n, double sigma2, double mu, double level,
                                        std::size_t reps, RngStream rng, VarEstimator est) {
    std::vector<double> losses(reps);
    const double sd = std::sqrt(sigma2);
    std::vector<double> sample(n);
    for (std::size_t rep = 0; rep < reps; ++rep) {
        RngStream stream = rng.child(rep);
        for (auto& x : sample) x = mu + sd * stream.normal();
        const double hat = est(std::span<const double>(sample));
        losses[rep] = std::abs(std::log(sigma2 / hat));
    }
    return empirical_quantile(EmpiricalDistribution(std::move(losses)), level);
}

}  // namespace qrisk
