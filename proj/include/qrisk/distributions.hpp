#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qrisk/error_fn.hpp"
#include "qrisk/numerics.hpp"
#include "qrisk/rng.hpp"

namespace qrisk {

// Input law of the regressors. Three kinds:
//   gaussian(Sigma)            centred Gaussian with covariance Sigma
//   discrete(points, probs)    finite support, exact moments
//   coord_kurtosis(d, kappa1)  independent centred unit-variance coordinates;
//                              the first is a symmetric three-point law with
//                              normalized fourth moment kappa1, the rest are
//                              standard Gaussian
// The support must not lie in a hyperplane (covariance positive definite).
class InputDist {
  public:
    enum class Kind { gaussian, discrete, coord_kurtosis };

    static InputDist gaussian(SymMatrix sigma);
    static InputDist discrete(std::vector<std::vector<double>> points, std::vector<double> probs);
    static InputDist coord_kurtosis(std::size_t d, double kappa1);

    Kind kind() const { return kind_; }
    std::size_t dim() const { return dim_; }
    const SymMatrix& covariance() const { return sigma_; }
    const SymMatrix& whitener() const { return sigma_inv_sqrt_; }  // Sigma^{-1/2}
    double kappa1() const { return kappa1_; }

    void sample(RngStream& rng, std::span<double> out) const;
    void sample_whitened(RngStream& rng, std::span<double> out) const;

    // finite support in whitened coordinates (discrete kind only)
    const std::vector<double>& support_whitened() const { return support_whitened_; }
    const std::vector<double>& support() const { return support_; }
    const std::vector<double>& probs() const { return probs_; }

    std::string describe() const;

  private:
    InputDist() : sigma_(1), sigma_inv_sqrt_(1) {}

    Kind kind_ = Kind::gaussian;
    std::size_t dim_ = 1;
    SymMatrix sigma_;
    SymMatrix sigma_inv_sqrt_;
    std::vector<double> chol_;  // for gaussian sampling
    std::vector<double> support_;           // m x d row-major (discrete)
    std::vector<double> support_whitened_;  // m x d row-major (discrete)
    std::vector<double> probs_;
    std::vector<double> cum_probs_;
    double kappa1_ = 1.0;  // coord_kurtosis parameter
};

// Symmetric noise, independent of X.
//   gaussian(sigma2)            N(0, sigma2)
//   student_t(nu, sigma2)       scaled t with nu > 2 and variance sigma2
//   two_point(a, prob)          +-a with probability prob/2 each, else 0
class NoiseModel {
  public:
    enum class Kind { gaussian, student_t, two_point };

    static NoiseModel gaussian(double sigma2);
    static NoiseModel student_t(double nu, double sigma2);
    static NoiseModel two_point(double a, double prob);

    Kind kind() const { return kind_; }
    double variance() const;
    // E|xi|^q in closed form; +inf when the moment does not exist.
    double abs_moment(double q) const;
    double sample(RngStream& rng) const;

    double sigma2() const { return sigma2_; }
    double nu() const { return nu_; }
    double a() const { return a_; }
    double prob() const { return prob_; }

    std::string describe() const;

  private:
    Kind kind_ = Kind::gaussian;
    double sigma2_ = 1.0;
    double nu_ = 3.0;
    double scale_ = 1.0;  // student_t multiplier
    double a_ = 1.0;
    double prob_ = 1.0;
};

struct ProblemSpec {
    InputDist input;
    std::vector<double> w_star;
    NoiseModel noise;
    ErrorFn error;

    ProblemSpec(InputDist in, std::vector<double> w, NoiseModel nm, ErrorFn err);
};

struct Dataset {
    std::size_t n = 0;
    std::size_t d = 0;
    std::vector<double> x;  // n x d row-major
    std::vector<double> y;  // n

    double xat(std::size_t i, std::size_t j) const { return x[i * d + j]; }
    std::span<const double> row(std::size_t i) const { return {x.data() + i * d, d}; }
};

Dataset sample_dataset(const ProblemSpec& spec, std::size_t n, RngStream& rng);

// Fourth-moment geometry of the whitened input:
//   S = E[(XX^T - I)^2],  R = sup_{|v|=1} E[(<v,X>^2 - 1)^2]
// Exact for gaussian and discrete kinds; Monte Carlo panel otherwise. R is
// a certified lower bound obtained by candidate-direction maximization plus
// projected-gradient polish (exact for Gaussian by symmetry).
struct MatrixParams {
    SymMatrix S;
    double lambda_max_S = 0.0;
    double R = 0.0;

    MatrixParams() : S(1) {}
};

MatrixParams matrix_params(const InputDist& input, std::size_t mc_samples, RngStream& rng);

// rho(P_X) = sup_w P(<w, X> = 0); exact for every supported kind.
double hyperplane_mass(const InputDist& input);

struct SingularityEstimate {
    double estimate = 0.0;
    double wilson_lo = 0.0;
    double wilson_hi = 0.0;
    bool exact = false;
    std::size_t reps = 0;
};

// eps_n = P(rank of the sample covariance < d). Exact combinatorics for
// d = 1 discrete and for Gaussian inputs; Monte Carlo with a Wilson
// interval otherwise.
SingularityEstimate singularity_prob(const InputDist& input, std::size_t n, std::size_t mc_reps,
                                     RngStream& rng);

// N(P_X, p) = sup_w E|<w,X>|^p^{1/p} / E<w,X>^2^{1/2}; >= 1, lower bound
// by construction except for the Gaussian closed form.
double norm_equivalence(const InputDist& input, double p, std::size_t mc_samples, RngStream& rng);

// theta(P_X) = sup_w E[<w,X>^2]^{1/2} / E|<w,X>|; same maximization scheme.
double small_ball_ratio(const InputDist& input, std::size_t mc_samples, RngStream& rng);

// Distribution-class membership with per-inequality slack.
struct ClassSpec {
    enum class Kind { p_gauss, p2, p_p };
    Kind kind = Kind::p2;
    double sigma2 = 1.0;
    double mu = 0.0;  // p_p only
    double p = 4.0;   // p_p only

    static ClassSpec gauss_class(double sigma2) { return {Kind::p_gauss, sigma2, 0.0, 2.0}; }
    static ClassSpec p2_class(double sigma2) { return {Kind::p2, sigma2, 0.0, 2.0}; }
    static ClassSpec pp_class(double sigma2, double mu, double p) { return {Kind::p_p, sigma2, mu, p}; }
};

struct MembershipReport {
    bool member = false;
    std::vector<std::pair<std::string, double>> slacks;  // nonnegative slack = satisfied
};

MembershipReport class_membership_check(const ProblemSpec& spec, const ClassSpec& cls);

}  // namespace qrisk
