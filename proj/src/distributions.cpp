#include "qrisk/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <sstream>

namespace qrisk {

namespace {

constexpr double kPi = 3.14159265358979323846;

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

void normalize(std::vector<double>& v) {
    double n = std::sqrt(dot(v, v));
    if (n == 0.0) {
        v[0] = 1.0;
        return;
    }
    for (auto& x : v) x /= n;
}

// Marsaglia-Tsang Gamma(a, 1) sampler, a > 1.
double gamma_sample(double a, RngStream& rng) {
    const double d = a - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x = rng.normal();
        double v = 1.0 + c * x;
        if (v <= 0.0) continue;
        v = v * v * v;
        const double u = rng.uniform();
        if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) return d * v;
    }
}

}  // namespace

InputDist InputDist::gaussian(SymMatrix sigma) {
    if (!sigma.all_finite()) throw invalid_input("InputDist: covariance must be finite");
    InputDist in;
    in.kind_ = Kind::gaussian;
    in.dim_ = sigma.dim();
    in.sigma_ = sigma;
    in.sigma_inv_sqrt_ = inverse_sqrt(sigma);  // throws not_pd when degenerate
    in.chol_ = cholesky(sigma);
    return in;
}

InputDist InputDist::discrete(std::vector<std::vector<double>> points, std::vector<double> probs) {
    if (points.empty() || points.size() != probs.size())
        throw invalid_input("InputDist: need matching nonempty points and probs");
    const std::size_t d = points.front().size();
    if (d == 0) throw invalid_input("InputDist: zero-dimensional points");
    double total = 0.0;
    for (double p : probs) {
        if (!(p >= 0.0)) throw invalid_input("InputDist: negative probability");
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-12) throw invalid_input("InputDist: probabilities must sum to 1");

    InputDist in;
    in.kind_ = Kind::discrete;
    in.dim_ = d;
    in.probs_ = probs;
    in.support_.reserve(points.size() * d);
    for (const auto& pt : points) {
        if (pt.size() != d) throw invalid_input("InputDist: ragged point list");
        in.support_.insert(in.support_.end(), pt.begin(), pt.end());
    }
    SymMatrix sigma(d);
    for (std::size_t m = 0; m < points.size(); ++m)
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = i; j < d; ++j)
                sigma.add(i, j, probs[m] * points[m][i] * points[m][j]);
    in.sigma_ = sigma;
    try {
        in.sigma_inv_sqrt_ = inverse_sqrt(sigma);
    } catch (const not_pd&) {
        throw not_full_rank("InputDist: discrete support lies in a hyperplane");
    }
    in.support_whitened_.assign(in.support_.size(), 0.0);
    for (std::size_t m = 0; m < points.size(); ++m)
        for (std::size_t i = 0; i < d; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < d; ++j) s += in.sigma_inv_sqrt_(i, j) * in.support_[m * d + j];
            in.support_whitened_[m * d + i] = s;
        }
    in.cum_probs_.resize(probs.size());
    std::partial_sum(probs.begin(), probs.end(), in.cum_probs_.begin());
    in.cum_probs_.back() = 1.0;
    return in;
}

InputDist InputDist::coord_kurtosis(std::size_t d, double kappa1) {
    if (d == 0) throw invalid_input("InputDist: dimension must be positive");
    if (!(kappa1 >= 1.0)) throw invalid_input("InputDist: kappa1 must be >= 1");
    InputDist in;
    in.kind_ = Kind::coord_kurtosis;
    in.dim_ = d;
    in.kappa1_ = kappa1;
    in.sigma_ = SymMatrix::identity(d);
    in.sigma_inv_sqrt_ = SymMatrix::identity(d);
    return in;
}

void InputDist::sample(RngStream& rng, std::span<double> out) const {
    switch (kind_) {
        case Kind::gaussian: {
            std::vector<double> g(dim_);
            for (auto& z : g) z = rng.normal();
            for (std::size_t i = 0; i < dim_; ++i) {
                double s = 0.0;
                for (std::size_t j = 0; j <= i; ++j) s += chol_[i * dim_ + j] * g[j];
                out[i] = s;
            }
            break;
        }
        case Kind::discrete: {
            const double u = rng.uniform();
            const auto it = std::lower_bound(cum_probs_.begin(), cum_probs_.end(), u);
            const auto m = static_cast<std::size_t>(it - cum_probs_.begin());
            for (std::size_t j = 0; j < dim_; ++j) out[j] = support_[m * dim_ + j];
            break;
        }
        case Kind::coord_kurtosis: {
            // first coordinate: 0 w.p. 1 - 1/kappa1, +-sqrt(kappa1) w.p. 1/(2 kappa1)
            const double q = 1.0 / kappa1_;
            const double u = rng.uniform();
            const double sign = (rng.next_u64() & 1) ? 1.0 : -1.0;
            out[0] = (u <= q) ? sign * std::sqrt(kappa1_) : 0.0;
            for (std::size_t j = 1; j < dim_; ++j) out[j] = rng.normal();
            break;
        }
    }
}

void InputDist::sample_whitened(RngStream& rng, std::span<double> out) const {
    if (kind_ == Kind::coord_kurtosis) {
        sample(rng, out);  // already white
        return;
    }
    std::vector<double> raw(dim_);
    sample(rng, raw);
    for (std::size_t i = 0; i < dim_; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < dim_; ++j) s += sigma_inv_sqrt_(i, j) * raw[j];
        out[i] = s;
    }
}

std::string InputDist::describe() const {
    std::ostringstream os;
    switch (kind_) {
        case Kind::gaussian: os << "gaussian-d" << dim_; break;
        case Kind::discrete: os << "discrete-d" << dim_ << "-m" << probs_.size(); break;
        case Kind::coord_kurtosis: os << "coordkurt-d" << dim_ << "-k" << kappa1_; break;
    }
    return os.str();
}

NoiseModel NoiseModel::gaussian(double sigma2) {
    if (!(sigma2 >= 0.0)) throw invalid_input("NoiseModel: sigma2 must be nonnegative");
    NoiseModel nm;
    nm.kind_ = Kind::gaussian;
    nm.sigma2_ = sigma2;
    return nm;
}

NoiseModel NoiseModel::student_t(double nu, double sigma2) {
    if (!(nu > 2.0)) throw invalid_input("NoiseModel: student_t requires nu > 2");
    if (!(sigma2 > 0.0)) throw invalid_input("NoiseModel: sigma2 must be positive");
    NoiseModel nm;
    nm.kind_ = Kind::student_t;
    nm.nu_ = nu;
    nm.sigma2_ = sigma2;
    nm.scale_ = std::sqrt(sigma2 * (nu - 2.0) / nu);
    return nm;
}

NoiseModel NoiseModel::two_point(double a, double prob) {
    if (!(a > 0.0) || !(prob > 0.0) || prob > 1.0)
        throw invalid_input("NoiseModel: two_point requires a > 0 and prob in (0, 1]");
    NoiseModel nm;
    nm.kind_ = Kind::two_point;
    nm.a_ = a;
    nm.prob_ = prob;
    nm.sigma2_ = a * a * prob;
    return nm;
}

double NoiseModel::variance() const { return sigma2_; }

double NoiseModel::abs_moment(double q) const {
    if (q < 0.0) throw invalid_input("NoiseModel: moment order must be >= 0");
    if (q == 0.0) return 1.0;
    switch (kind_) {
        case Kind::gaussian:
            return std::pow(sigma2_, 0.5 * q) * std_normal_abs_moment(q);
        case Kind::student_t: {
            if (q >= nu_) return std::numeric_limits<double>::infinity();
            // E|T_nu|^q = nu^{q/2} Gamma((q+1)/2) Gamma((nu-q)/2) / (sqrt(pi) Gamma(nu/2))
            const double log_m = 0.5 * q * std::log(nu_) + log_gamma(0.5 * (q + 1.0)) +
                                 log_gamma(0.5 * (nu_ - q)) - 0.5 * std::log(kPi) - log_gamma(0.5 * nu_);
            return std::pow(scale_, q) * std::exp(log_m);
        }
        case Kind::two_point:
            return std::pow(a_, q) * prob_;
    }
    return 0.0;
}

double NoiseModel::sample(RngStream& rng) const {
    switch (kind_) {
        case Kind::gaussian:
            return sigma2_ == 0.0 ? 0.0 : std::sqrt(sigma2_) * rng.normal();
        case Kind::student_t: {
            const double z = rng.normal();
            const double g = gamma_sample(0.5 * nu_, rng);  // chi2_nu = 2 g
            return scale_ * z * std::sqrt(nu_ / (2.0 * g));
        }
        case Kind::two_point: {
            const double u = rng.uniform();
            if (u > prob_) return 0.0;
            return (rng.next_u64() & 1) ? a_ : -a_;
        }
    }
    return 0.0;
}

std::string NoiseModel::describe() const {
    std::ostringstream os;
    switch (kind_) {
        case Kind::gaussian: os << "gaussian-s2=" << sigma2_; break;
        case Kind::student_t: os << "student-t-nu=" << nu_ << "-s2=" << sigma2_; break;
        case Kind::two_point: os << "two-point-a=" << a_ << "-p=" << prob_; break;
    }
    return os.str();
}

ProblemSpec::ProblemSpec(InputDist in, std::vector<double> w, NoiseModel nm, ErrorFn err)
    : input(std::move(in)), w_star(std::move(w)), noise(nm), error(err) {
    if (w_star.size() != input.dim()) throw invalid_input("ProblemSpec: w_star dimension mismatch");
}

Dataset sample_dataset(const ProblemSpec& spec, std::size_t n, RngStream& rng) {
    if (n < 1) throw invalid_input("sample_dataset: n must be positive");
    const std::size_t d = spec.input.dim();
    Dataset ds;
    ds.n = n;
    ds.d = d;
    ds.x.resize(n * d);
    ds.y.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::span<double> row(ds.x.data() + i * d, d);
        spec.input.sample(rng, row);
        ds.y[i] = dot(row, spec.w_star) + spec.noise.sample(rng);
    }
    return ds;
}

namespace {

// Weighted whitened point cloud: exact support for discrete inputs, a
// Monte Carlo panel otherwise.
struct PointCloud {
    std::vector<double> pts;  // m x d
    std::vector<double> wts;  // m, sums to 1
    std::size_t m = 0;
    std::size_t d = 0;
};

PointCloud whitened_cloud(const InputDist& input, std::size_t mc_samples, RngStream& rng) {
    PointCloud pc;
    pc.d = input.dim();
    if (input.kind() == InputDist::Kind::discrete) {
        pc.pts = input.support_whitened();
        pc.wts = input.probs();
        pc.m = pc.wts.size();
        return pc;
    }
    if (mc_samples < 2) throw invalid_input("whitened panel: mc_samples too small");
    pc.m = mc_samples;
    pc.pts.resize(mc_samples * pc.d);
    pc.wts.assign(mc_samples, 1.0 / static_cast<double>(mc_samples));
    for (std::size_t i = 0; i < mc_samples; ++i)
        input.sample_whitened(rng, {pc.pts.data() + i * pc.d, pc.d});
    return pc;
}

// Maximize an objective over the unit sphere: candidate directions, then
// projected gradient ascent with diminishing steps from the best one.
template <typename Value, typename Grad>
double maximize_sphere(const PointCloud& pc, Value value, Grad grad,
                       const std::vector<std::vector<double>>& seed_candidates, RngStream& rng) {
    const std::size_t d = pc.d;
    std::vector<std::vector<double>> candidates = seed_candidates;
    for (std::size_t j = 0; j < d; ++j) {
        std::vector<double> e(d, 0.0);
        e[j] = 1.0;
        candidates.push_back(e);
    }
    const std::size_t extra = std::min<std::size_t>(pc.m, 16);
    for (std::size_t t = 0; t < extra; ++t) {
        const std::size_t i = (pc.m <= 16) ? t : rng.next_u64() % pc.m;
        std::vector<double> v(pc.pts.begin() + i * d, pc.pts.begin() + (i + 1) * d);
        if (dot(v, v) > 0.0) {
            normalize(v);
            candidates.push_back(v);
        }
    }
    for (int t = 0; t < 4; ++t) {
        std::vector<double> v(d);
        for (auto& x : v) x = rng.normal();
        normalize(v);
        candidates.push_back(v);
    }

    double best = -std::numeric_limits<double>::infinity();
    std::vector<double> best_v;
    for (const auto& c : candidates) {
        const double f = value(c);
        if (f > best) {
            best = f;
            best_v = c;
        }
    }
    std::vector<double> v = best_v;
    std::vector<double> g(d);
    for (int it = 1; it <= 200; ++it) {
        grad(v, g);
        const double vg = dot(v, g);
        double gnorm = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            g[j] -= vg * v[j];  // tangent projection
            gnorm += g[j] * g[j];
        }
        gnorm = std::sqrt(gnorm);
        if (gnorm < 1e-14) break;
        const double step = 0.5 / std::sqrt(static_cast<double>(it));
        for (std::size_t j = 0; j < d; ++j) v[j] += step * g[j] / gnorm;
        normalize(v);
        const double f = value(v);
        if (f > best) {
            best = f;
            best_v = v;
        }
    }
    return best;
}

}  // namespace

MatrixParams matrix_params(const InputDist& input, std::size_t mc_samples, RngStream& rng) {
    const std::size_t d = input.dim();
    MatrixParams out;

    if (input.kind() == InputDist::Kind::gaussian) {
        // whitened law is N(0, I): S = (d+1) I by the fourth-moment identity
        // E[|X|^2 XX^T] = (d+2) I, and R = E[(Z^2-1)^2] = 2
        SymMatrix s(d);
        for (std::size_t i = 0; i < d; ++i) s.set(i, i, static_cast<double>(d) + 1.0);
        out.S = s;
        out.lambda_max_S = static_cast<double>(d) + 1.0;
        out.R = 2.0;
        return out;
    }

    const PointCloud pc = whitened_cloud(input, mc_samples, rng);

    // S = E[(xx^T - I)^2] = E[|x|^2 xx^T] - 2 E[xx^T] + I
    SymMatrix second(d);
    SymMatrix fourth(d);
    for (std::size_t m = 0; m < pc.m; ++m) {
        std::span<const double> x(pc.pts.data() + m * d, d);
        const double nx2 = dot(x, x);
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = i; j < d; ++j) {
                second.add(i, j, pc.wts[m] * x[i] * x[j]);
                fourth.add(i, j, pc.wts[m] * nx2 * x[i] * x[j]);
            }
    }
    SymMatrix s(d);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = i; j < d; ++j)
            s.set(i, j, fourth(i, j) - 2.0 * second(i, j) + (i == j ? 1.0 : 0.0));
    out.S = s;
    const Spectrum spec = sym_eigen(s);
    out.lambda_max_S = spec.max();

    auto value = [&](const std::vector<double>& v) {
        double f = 0.0;
        for (std::size_t m = 0; m < pc.m; ++m) {
            const double t = dot({pc.pts.data() + m * d, d}, v);
            const double e = t * t - 1.0;
            f += pc.wts[m] * e * e;
        }
        return f;
    };
    auto grad = [&](const std::vector<double>& v, std::vector<double>& g) {
        std::fill(g.begin(), g.end(), 0.0);
        for (std::size_t m = 0; m < pc.m; ++m) {
            std::span<const double> x(pc.pts.data() + m * d, d);
            const double t = dot(x, v);
            const double c = 4.0 * (t * t - 1.0) * t * pc.wts[m];
            for (std::size_t j = 0; j < d; ++j) g[j] += c * x[j];
        }
    };
    std::vector<std::vector<double>> seeds;
    for (std::size_t k = 0; k < d; ++k) {
        std::vector<double> v(d);
        for (std::size_t i = 0; i < d; ++i) v[i] = spec.vec(i, k);
        seeds.push_back(v);
    }
    out.R = maximize_sphere(pc, value, grad, seeds, rng);
    return out;
}

namespace {

// rank via Gaussian elimination with partial pivoting
std::size_t matrix_rank(std::vector<double> a, std::size_t rows, std::size_t cols) {
    double scale = 0.0;
    for (double v : a) scale = std::max(scale, std::abs(v));
    if (scale == 0.0) return 0;
    const double tol = 1e-10 * scale;
    std::size_t rank = 0;
    for (std::size_t c = 0; c < cols && rank < rows; ++c) {
        std::size_t piv = rank;
        for (std::size_t r = rank + 1; r < rows; ++r)
            if (std::abs(a[r * cols + c]) > std::abs(a[piv * cols + c])) piv = r;
        if (std::abs(a[piv * cols + c]) <= tol) continue;
        for (std::size_t j = 0; j < cols; ++j) std::swap(a[rank * cols + j], a[piv * cols + j]);
        for (std::size_t r = rank + 1; r < rows; ++r) {
            const double f = a[r * cols + c] / a[rank * cols + c];
            for (std::size_t j = c; j < cols; ++j) a[r * cols + j] -= f * a[rank * cols + j];
        }
        ++rank;
    }
    return rank;
}

// mass of the support inside span(subset)
double span_mass(const std::vector<double>& pts, const std::vector<double>& probs, std::size_t d,
                 const std::vector<std::size_t>& subset) {
    const std::size_t m = probs.size();
    std::vector<double> base;
    base.reserve(subset.size() * d);
    for (std::size_t idx : subset)
        base.insert(base.end(), pts.begin() + idx * d, pts.begin() + (idx + 1) * d);
    const std::size_t base_rank = matrix_rank(base, subset.size(), d);
    if (base_rank >= d) return 0.0;  // spans everything, not a proper subspace
    double mass = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        std::vector<double> aug = base;
        aug.insert(aug.end(), pts.begin() + i * d, pts.begin() + (i + 1) * d);
        if (matrix_rank(aug, subset.size() + 1, d) == base_rank) mass += probs[i];
    }
    return mass;
}

void enumerate_subsets(std::size_t m, std::size_t max_size, std::vector<std::size_t>& current,
                       std::size_t start,
                       const std::function<void(const std::vector<std::size_t>&)>& visit) {
    visit(current);
    if (current.size() == max_size) return;
    for (std::size_t i = start; i < m; ++i) {
        current.push_back(i);
        enumerate_subsets(m, max_size, current, i + 1, visit);
        current.pop_back();
    }
}

}  // namespace

double hyperplane_mass(const InputDist& input) {
    switch (input.kind()) {
        case InputDist::Kind::gaussian:
            return 0.0;  // absolutely continuous law
        case InputDist::Kind::coord_kurtosis:
            // any direction touching a Gaussian coordinate has mass 0; the
            // e_1 direction captures P(X_1 = 0) = 1 - 1/kappa1
            return 1.0 - 1.0 / input.kappa1();
        case InputDist::Kind::discrete: {
            // the maximizing hyperplane contains the span of some subset of
            // support points with dim <= d - 1, so subset spans are exhaustive
            const std::size_t d = input.dim();
            const std::size_t m = input.probs().size();
            double best = 0.0;
            std::vector<std::size_t> current;
            enumerate_subsets(m, d - 1, current, 0, [&](const std::vector<std::size_t>& subset) {
                best = std::max(best, span_mass(input.support(), input.probs(), d, subset));
            });
            return best;
        }
    }
    return 0.0;
}

SingularityEstimate singularity_prob(const InputDist& input, std::size_t n, std::size_t mc_reps,
                                     RngStream& rng) {
    if (n < 1) throw invalid_input("singularity_prob: n must be positive");
    const std::size_t d = input.dim();
    SingularityEstimate est;

    if (input.kind() == InputDist::Kind::gaussian) {
        est.exact = true;
        est.estimate = (n >= d) ? 0.0 : 1.0;  // a.s. full rank iff n >= d
        est.wilson_lo = est.wilson_hi = est.estimate;
        return est;
    }
    if (input.kind() == InputDist::Kind::discrete && d == 1) {
        double p0 = 0.0;
        for (std::size_t m = 0; m < input.probs().size(); ++m)
            if (input.support()[m] == 0.0) p0 += input.probs()[m];
        est.exact = true;
        est.estimate = std::pow(p0, static_cast<double>(n));
        est.wilson_lo = est.wilson_hi = est.estimate;
        return est;
    }

    if (mc_reps < 16) throw invalid_input("singularity_prob: mc_reps too small");
    std::size_t singular = 0;
    std::vector<double> xi(d);
    for (std::size_t rep = 0; rep < mc_reps; ++rep) {
        SymMatrix cov(d);
        for (std::size_t i = 0; i < n; ++i) {
            input.sample(rng, xi);
            for (std::size_t a = 0; a < d; ++a)
                for (std::size_t b = a; b < d; ++b) cov.add(a, b, xi[a] * xi[b]);
        }
        const Spectrum spec = sym_eigen(cov);
        if (spec.min() <= 1e-10 * std::max(1.0, spec.max())) ++singular;
    }
    const double z = 1.959963984540054;
    const double mm = static_cast<double>(mc_reps);
    const double k = static_cast<double>(singular);
    const double center = (k + z * z / 2.0) / (mm + z * z);
    const double hw = z * std::sqrt(k * (mm - k) / mm + z * z / 4.0) / (mm + z * z);
    est.estimate = k / mm;
    est.wilson_lo = std::max(0.0, center - hw);
    est.wilson_hi = std::min(1.0, center + hw);
    est.reps = mc_reps;
    return est;
}

double norm_equivalence(const InputDist& input, double p, std::size_t mc_samples, RngStream& rng) {
    if (!(p > 2.0)) throw invalid_input("norm_equivalence: requires p > 2");
    if (input.kind() == InputDist::Kind::gaussian)
        return std::pow(std_normal_abs_moment(p), 1.0 / p);

    const PointCloud pc = whitened_cloud(input, mc_samples, rng);
    const std::size_t d = pc.d;
    // maximize (1/p) log A - (1/2) log B with A = E|<v,x>|^p, B = E<v,x>^2;
    // dividing by B keeps the panel's empirical second moment honest
    auto parts = [&](const std::vector<double>& v, double& A, double& B) {
        A = 0.0;
        B = 0.0;
        for (std::size_t m = 0; m < pc.m; ++m) {
            const double t = dot({pc.pts.data() + m * d, d}, v);
            A += pc.wts[m] * std::pow(std::abs(t), p);
            B += pc.wts[m] * t * t;
        }
    };
    auto value = [&](const std::vector<double>& v) {
        double A, B;
        parts(v, A, B);
        if (A <= 0.0 || B <= 0.0) return -1e300;
        return std::log(A) / p - 0.5 * std::log(B);
    };
    auto grad = [&](const std::vector<double>& v, std::vector<double>& g) {
        double A, B;
        parts(v, A, B);
        std::vector<double> ga(d, 0.0), gb(d, 0.0);
        for (std::size_t m = 0; m < pc.m; ++m) {
            std::span<const double> x(pc.pts.data() + m * d, d);
            const double t = dot(x, v);
            const double ca = pc.wts[m] * p * std::copysign(std::pow(std::abs(t), p - 1.0), t);
            const double cb = pc.wts[m] * 2.0 * t;
            for (std::size_t j = 0; j < d; ++j) {
                ga[j] += ca * x[j];
                gb[j] += cb * x[j];
            }
        }
        for (std::size_t j = 0; j < d; ++j)
            g[j] = ga[j] / (p * std::max(A, 1e-300)) - gb[j] / (2.0 * std::max(B, 1e-300));
    };
    const double best_log = maximize_sphere(pc, value, grad, {}, rng);
    return std::max(1.0, std::exp(best_log));
}

double small_ball_ratio(const InputDist& input, std::size_t mc_samples, RngStream& rng) {
    if (input.kind() == InputDist::Kind::gaussian) return std::sqrt(kPi / 2.0);

    const PointCloud pc = whitened_cloud(input, mc_samples, rng);
    const std::size_t d = pc.d;
    auto parts = [&](const std::vector<double>& v, double& B, double& C) {
        B = 0.0;
        C = 0.0;
        for (std::size_t m = 0; m < pc.m; ++m) {
            const double t = dot({pc.pts.data() + m * d, d}, v);
            B += pc.wts[m] * t * t;
            C += pc.wts[m] * std::abs(t);
        }
    };
    auto value = [&](const std::vector<double>& v) {
        double B, C;
        parts(v, B, C);
        if (B <= 0.0 || C <= 0.0) return -1e300;
        return 0.5 * std::log(B) - std::log(C);
    };
    auto grad = [&](const std::vector<double>& v, std::vector<double>& g) {
        double B, C;
        parts(v, B, C);
        std::vector<double> gb(d, 0.0), gc(d, 0.0);
        for (std::size_t m = 0; m < pc.m; ++m) {
            std::span<const double> x(pc.pts.data() + m * d, d);
            const double t = dot(x, v);
            for (std::size_t j = 0; j < d; ++j) {
                gb[j] += pc.wts[m] * 2.0 * t * x[j];
                gc[j] += pc.wts[m] * ((t > 0.0) - (t < 0.0)) * x[j];
            }
        }
        for (std::size_t j = 0; j < d; ++j)
            g[j] = gb[j] / (2.0 * std::max(B, 1e-300)) - gc[j] / std::max(C, 1e-300);
    };
    const double best_log = maximize_sphere(pc, value, grad, {}, rng);
    return std::max(1.0, std::exp(best_log));
}

MembershipReport class_membership_check(const ProblemSpec& spec, const ClassSpec& cls) {
    MembershipReport rep;
    const NoiseModel& nm = spec.noise;
    const double tol = 1e-12;
    switch (cls.kind) {
        case ClassSpec::Kind::p_gauss: {
            const double gap = cls.sigma2 - nm.variance();
            rep.slacks.emplace_back("variance_matches", -std::abs(gap));
            rep.member = nm.kind() == NoiseModel::Kind::gaussian &&
                         std::abs(gap) <= tol * std::max(1.0, cls.sigma2);
            break;
        }
        case ClassSpec::Kind::p2: {
            // conditional second moment equals the marginal one: noise is X-free
            const double slack = cls.sigma2 - nm.abs_moment(2.0);
            rep.slacks.emplace_back("second_moment", slack);
            rep.member = slack >= -tol * std::max(1.0, cls.sigma2);
            break;
        }
        case ClassSpec::Kind::p_p: {
            const double p = cls.p;
            if (!(p > 2.0)) throw invalid_input("class_membership_check: p_p requires p > 2");
            const double mu_cap = std_normal_abs_moment(p) * std::pow(cls.sigma2, 0.5 * (p - 2.0));
            if (!(cls.mu > 0.0) || cls.mu > mu_cap * (1.0 + 1e-12))
                throw invalid_input("class_membership_check: mu outside its legal range");
            const double c = nm.abs_moment(p - 2.0);
            const double C = nm.abs_moment(2.0 * (p - 1.0));
            const double r = std_normal_abs_moment(2.0 * p - 2.0) / std_normal_abs_moment(p - 2.0) *
                             std::pow(cls.sigma2, 0.5 * p);
            const double ratio_slack =
                std::isfinite(C) ? r - C / c : -std::numeric_limits<double>::infinity();
            rep.slacks.emplace_back("moment_ratio", ratio_slack);
            rep.slacks.emplace_back("mu_floor", c - cls.mu);
            rep.member = ratio_slack >= -tol * std::max(1.0, r) && (c - cls.mu) >= -tol;
            break;
        }
    }
    return rep;
}

}  // namespace qrisk
