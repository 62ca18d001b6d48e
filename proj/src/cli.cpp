#include "qrisk/cli.hpp"

#include <CLI11.hpp>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>

#include "qrisk/cov_eigen.hpp"
#include "qrisk/parallel.hpp"
#include "qrisk/risk.hpp"
#include "qrisk/suite.hpp"

namespace qrisk::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// 17 significant digits round-trip doubles exactly; infinities print as a
// bare `inf` token
std::string csv_num(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void expect_keys(const json& obj, const std::vector<std::string>& allowed, const std::string& where) {
    for (const auto& [key, _] : obj.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
            throw invalid_config("unknown key '" + key + "' in " + where);
    }
}

struct OutputWriter {
    fs::path dir;
    std::vector<std::string> written;

    explicit OutputWriter(const std::string& out) : dir(out.empty() ? "qrisk_out" : out) {
        fs::create_directories(dir);
    }

    fs::path csv_path(const std::string& stem) const { return dir / (stem + ".csv"); }

    void write_csv(const std::string& stem, const std::string& header,
                   const std::vector<std::string>& rows) {
        const fs::path path = csv_path(stem);
        std::ofstream out(path, std::ios::binary);
        if (!out) throw error("cannot open output file " + path.string());
        out << header << "\n";
        for (const auto& row : rows) out << row << "\n";
        written.push_back(path.string());
    }
};

void write_manifest(const ExperimentConfig& cfg, const OutputWriter& out, double wall_seconds) {
    json manifest;
    {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%016llx",
                      static_cast<unsigned long long>(cfg.config_hash()));
        manifest["config_hash"] = buf;
    }
    manifest["seed"] = cfg.seed;
    manifest["library_version"] = kVersion;
    manifest["wall_time_seconds"] = wall_seconds;
    manifest["outputs"] = out.written;
    manifest["config"] = json::parse(cfg.canonical_json());
    std::ofstream file(out.dir / "manifest.json", std::ios::binary);
    file << manifest.dump(2) << "\n";
}

}  // namespace

InputDist ExperimentConfig::build_input() const {
    if (input_kind == "gaussian") {
        SymMatrix sigma = SymMatrix::identity(d);
        if (!covariance.empty()) {
            if (covariance.size() != d) throw invalid_config("covariance dimension mismatch");
            for (std::size_t i = 0; i < d; ++i) {
                if (covariance[i].size() != d) throw invalid_config("covariance must be square");
                for (std::size_t j = i; j < d; ++j) sigma.set(i, j, covariance[i][j]);
            }
        }
        return InputDist::gaussian(sigma);
    }
    if (input_kind == "discrete") return InputDist::discrete(points, probs);
    if (input_kind == "coord_kurtosis") return InputDist::coord_kurtosis(d, kappa1);
    throw invalid_config("unknown input kind '" + input_kind + "'");
}

ErrorFn ExperimentConfig::build_error() const {
    if (p == 0.0) return ErrorFn::square();
    return ErrorFn::ppower(p);
}

NoiseModel ExperimentConfig::build_noise() const {
    if (noise == "gaussian") return NoiseModel::gaussian(sigma2);
    if (noise.rfind("student-t:", 0) == 0) {
        const double nu = std::stod(noise.substr(10));
        return NoiseModel::student_t(nu, sigma2);
    }
    if (noise.rfind("two-point:", 0) == 0) {
        const std::string rest = noise.substr(10);
        const auto colon = rest.find(':');
        if (colon == std::string::npos) throw invalid_config("two-point noise needs a:prob");
        return NoiseModel::two_point(std::stod(rest.substr(0, colon)),
                                     std::stod(rest.substr(colon + 1)));
    }
    throw invalid_config("unknown noise '" + noise + "'");
}

ProblemSpec ExperimentConfig::build_spec() const {
    InputDist input = build_input();
    std::vector<double> w = w_star;
    if (w.empty()) w.assign(input.dim(), 0.0);
    return ProblemSpec(std::move(input), std::move(w), build_noise(), build_error());
}

std::string ExperimentConfig::canonical_json() const {
    json j;
    j["command"] = command;
    j["input"] = {{"kind", input_kind}, {"d", d}};
    if (input_kind == "coord_kurtosis") j["input"]["kappa1"] = kappa1;
    if (!points.empty()) {
        j["input"]["points"] = points;
        j["input"]["probs"] = probs;
    }
    if (!covariance.empty()) j["input"]["covariance"] = covariance;
    if (!w_star.empty()) j["w_star"] = w_star;
    j["noise"] = noise;
    j["sigma2"] = sigma2;
    j["p"] = p;
    j["n"] = n;
    j["delta"] = delta;
    j["reps"] = reps;
    j["seed"] = seed;
    j["estimator"] = estimator;
    j["minmax"] = {{"k", minmax_k},
                   {"outer_steps", outer_steps},
                   {"inner_steps", inner_steps},
                   {"step_size", step_size},
                   {"tolerance", tolerance}};
    j["trim_k"] = trim_k;
    j["mu"] = mu;
    j["quick"] = quick;
    return j.dump();
}

std::uint64_t ExperimentConfig::config_hash() const {
    // FNV-1a over the canonical serialization
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : canonical_json()) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw invalid_config("cannot read config file " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw invalid_config(std::string("config parse error: ") + e.what());
    }

    expect_keys(j, {"command", "spec", "n", "delta", "reps", "seed", "workers", "quick", "estimator",
                    "minmax", "out", "trim_k", "mu"},
                "config root");
    ExperimentConfig cfg;
    cfg.command = j.value("command", "");
    cfg.n = j.value("n", cfg.n);
    cfg.delta = j.value("delta", cfg.delta);
    cfg.reps = j.value("reps", cfg.reps);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.workers = j.value("workers", cfg.workers);
    cfg.quick = j.value("quick", cfg.quick);
    cfg.estimator = j.value("estimator", cfg.estimator);
    cfg.out = j.value("out", cfg.out);
    cfg.trim_k = j.value("trim_k", cfg.trim_k);
    cfg.mu = j.value("mu", cfg.mu);

    if (j.contains("spec")) {
        const json& spec = j["spec"];
        expect_keys(spec, {"input", "w_star", "noise", "sigma2", "error"}, "spec");
        if (spec.contains("input")) {
            const json& input = spec["input"];
            expect_keys(input, {"kind", "dim", "kappa1", "points", "probs", "covariance"},
                        "spec.input");
            cfg.input_kind = input.value("kind", cfg.input_kind);
            cfg.d = input.value("dim", cfg.d);
            cfg.kappa1 = input.value("kappa1", cfg.kappa1);
            if (input.contains("points")) cfg.points = input["points"].get<std::vector<std::vector<double>>>();
            if (input.contains("probs")) cfg.probs = input["probs"].get<std::vector<double>>();
            if (input.contains("covariance"))
                cfg.covariance = input["covariance"].get<std::vector<std::vector<double>>>();
        }
        if (spec.contains("w_star")) cfg.w_star = spec["w_star"].get<std::vector<double>>();
        if (spec.contains("noise")) {
            const json& noise = spec["noise"];
            expect_keys(noise, {"kind", "sigma2", "nu", "a", "prob"}, "spec.noise");
            const std::string kind = noise.value("kind", "gaussian");
            cfg.sigma2 = noise.value("sigma2", cfg.sigma2);
            if (kind == "gaussian")
                cfg.noise = "gaussian";
            else if (kind == "student_t")
                cfg.noise = "student-t:" + std::to_string(noise.value("nu", 3.0));
            else if (kind == "two_point")
                cfg.noise = "two-point:" + std::to_string(noise.value("a", 1.0)) + ":" +
                            std::to_string(noise.value("prob", 1.0));
            else
                throw invalid_config("unknown noise kind '" + kind + "'");
        }
        if (spec.contains("sigma2")) cfg.sigma2 = spec["sigma2"].get<double>();
        if (spec.contains("error")) {
            const json& err = spec["error"];
            expect_keys(err, {"kind", "p"}, "spec.error");
            const std::string kind = err.value("kind", "square");
            if (kind == "square")
                cfg.p = 0.0;
            else if (kind == "ppower")
                cfg.p = err.value("p", 4.0);
            else
                throw invalid_config("unknown error kind '" + kind + "'");
        }
    }
    if (j.contains("minmax")) {
        const json& mm = j["minmax"];
        expect_keys(mm, {"k", "outer_steps", "inner_steps", "step_size", "tolerance"}, "minmax");
        cfg.minmax_k = mm.value("k", cfg.minmax_k);
        cfg.outer_steps = mm.value("outer_steps", cfg.outer_steps);
        cfg.inner_steps = mm.value("inner_steps", cfg.inner_steps);
        cfg.step_size = mm.value("step_size", cfg.step_size);
        cfg.tolerance = mm.value("tolerance", cfg.tolerance);
    }
    return cfg;
}

namespace {

std::unique_ptr<Estimator> make_estimator(const ExperimentConfig& cfg) {
    if (cfg.estimator == "ols") return std::make_unique<OlsEstimator>();
    if (cfg.estimator == "minmax") {
        MinMaxConfig mm;
        mm.outer_steps = cfg.outer_steps;
        mm.inner_steps = cfg.inner_steps;
        mm.step_size = cfg.step_size;
        mm.tolerance = cfg.tolerance;
        if (cfg.minmax_k > 0) {
            mm.k = cfg.minmax_k;
            return std::make_unique<MinMaxEstimator>(cfg.build_error(), mm);
        }
        return std::make_unique<MinMaxEstimator>(cfg.build_error(), cfg.delta, mm);
    }
    throw invalid_config("unknown estimator '" + cfg.estimator + "'");
}

int cmd_fit(const ExperimentConfig& cfg, OutputWriter& out) {
    const ProblemSpec spec = cfg.build_spec();
    RngStream rng(cfg.seed, 0);
    const Dataset ds = sample_dataset(spec, cfg.n, rng);
    const auto est = make_estimator(cfg);
    RngStream fit_rng = rng.child(1);
    const FitResult fit = est->fit(ds, fit_rng);

    std::ostringstream header;
    header << "estimator,n,d,seed,singular,iterations,grad_norm";
    for (std::size_t j = 0; j < ds.d; ++j) header << ",w" << j;
    std::ostringstream row;
    row << est->id() << "," << cfg.n << "," << ds.d << "," << cfg.seed << ","
        << (fit.singular_design ? 1 : 0) << "," << fit.iterations << ","
        << csv_num(fit.grad_norm_final);
    for (double w : fit.w_hat) row << "," << csv_num(w);
    out.write_csv("fit", header.str(), {row.str()});
    return 0;
}

int cmd_risk(const ExperimentConfig& cfg, OutputWriter& out, std::size_t workers) {
    const ProblemSpec spec = cfg.build_spec();
    const auto est = make_estimator(cfg);
    const RiskReport report =
        quantile_risk_mc(spec, *est, cfg.n, cfg.delta, cfg.reps, RngStream(cfg.seed, 0), workers);
    std::ostringstream row;
    row << report.estimator_id << "," << report.spec_id << "," << report.n << ","
        << csv_num(report.delta) << "," << report.reps << "," << report.seed << ","
        << csv_num(report.quantile_risk.value) << "," << csv_num(report.quantile_risk.se_proxy);
    out.write_csv("risk", "estimator,spec,n,delta,reps,seed,risk,se_proxy", {row.str()});
    return 0;
}

int cmd_minimax(const ExperimentConfig& cfg, OutputWriter& out, std::size_t workers) {
    const InputDist input = cfg.build_input();
    const ErrorFn error = cfg.build_error();
    const auto exact = gauss_minimax_exact_mc(input, error, cfg.sigma2, cfg.n, cfg.delta, cfg.reps,
                                              RngStream(cfg.seed, 0), workers);
    const double asym = asymptotic_minimax(error, cfg.sigma2, cfg.delta, input.dim());

    double lower = kInf, upper = kInf, pnorm_lb = kInf;
    if (error.kind() == ErrorFn::Kind::square) {
        try {
            const auto b = square_bounds(input, cfg.sigma2, cfg.n, cfg.delta, cfg.reps,
                                         RngStream(cfg.seed, 1), workers);
            lower = b.lower;
            upper = b.upper;
        } catch (const invalid_level&) {
            lower = upper = kInf;  // level arithmetic infeasible at this delta
        }
    } else if (cfg.delta < 0.5) {
        pnorm_lb = pnorm_lower_bound(error.p(), cfg.sigma2, input.dim(), cfg.n, cfg.delta);
    }

    // smallest n meeting the sufficiency display
    RngStream prng(cfg.seed, 2);
    const auto params = matrix_params(input, 200000, prng);
    const double log3d = std::log(3.0 * static_cast<double>(input.dim()));
    const double log2d = std::log(2.0 / cfg.delta);
    double sufficient_n = 128.0 * (4.0 * log3d * params.lambda_max_S + params.R * log2d);
    if (params.lambda_max_S > 0.0) sufficient_n = std::max(sufficient_n, log3d / (18.0 * params.lambda_max_S));
    if (params.R > 0.0) sufficient_n = std::max(sufficient_n, log2d / params.R);

    std::ostringstream row;
    row << cfg.n << "," << input.dim() << "," << csv_num(cfg.delta) << "," << csv_num(cfg.sigma2)
        << "," << cfg.reps << "," << cfg.seed << "," << csv_num(exact.value) << ","
        << csv_num(exact.se_proxy) << "," << csv_num(asym) << "," << csv_num(lower) << ","
        << csv_num(upper) << "," << csv_num(pnorm_lb) << "," << csv_num(std::ceil(sufficient_n));
    out.write_csv("minimax",
                  "n,d,delta,sigma2,reps,seed,exact_mc,se_proxy,asymptotic,bound_lower,bound_upper,"
                  "pnorm_lower,sufficient_n",
                  {row.str()});
    return 0;
}

int cmd_eigen(const ExperimentConfig& cfg, OutputWriter& out, std::size_t workers) {
    const InputDist input = cfg.build_input();
    const auto q =
        min_eig_quantile_mc(input, cfg.n, cfg.delta, cfg.reps, RngStream(cfg.seed, 0), workers);
    RngStream prng(cfg.seed, 1);
    const auto params = matrix_params(input, 200000, prng);
    const double bound = upper_bound_eig(params, cfg.n, input.dim(), cfg.delta);

    EigenQuantileReport report;
    report.n = cfg.n;
    report.d = input.dim();
    report.delta = cfg.delta;
    report.empirical_quantile = q.value;
    report.upper_bound = bound;
    report.reps = cfg.reps;
    report.seed = cfg.seed;
    if (cfg.trim_k > 0) {
        // trimmed infimum on one generated design at the requested level
        RngStream data(cfg.seed, 2);
        std::vector<double> xs(cfg.n * input.dim());
        for (std::size_t i = 0; i < cfg.n; ++i)
            input.sample(data, {xs.data() + i * input.dim(), input.dim()});
        report.trimmed_inf_quantile = trimmed_directional_inf(xs, cfg.n, input.covariance(),
                                                              cfg.trim_k, 16, RngStream(cfg.seed, 3));
        report.has_trimmed = true;
    }

    std::ostringstream row;
    row << report.n << "," << report.d << "," << csv_num(report.delta) << "," << report.reps << ","
        << csv_num(report.empirical_quantile) << "," << csv_num(report.upper_bound) << ","
        << report.seed;
    if (report.has_trimmed) row << "," << csv_num(report.trimmed_inf_quantile);
    out.write_csv("eigen",
                  report.has_trimmed ? "n,d,delta,reps,quantile,bound,seed,trimmed_inf"
                                     : "n,d,delta,reps,quantile,bound,seed",
                  {row.str()});
    return 0;
}

int cmd_var_est(const ExperimentConfig& cfg, OutputWriter& out, std::size_t) {
    const double t_star = p_alpha_inverse(1.0 - cfg.delta, 0.5 * static_cast<double>(cfg.n));
    const double weight = std::sinh(t_star) / t_star;
    auto mm = [&](std::span<const double> s) {
        return minimax_variance_estimate(s, 0.0, cfg.delta).value;
    };
    auto plain = [&](std::span<const double> s) {
        double second = 0.0;
        for (double v : s) second += v * v;
        return second / static_cast<double>(s.size());
    };
    const auto risk_mm = variance_loss_quantile(cfg.n, cfg.sigma2, 0.0, 1.0 - cfg.delta, cfg.reps,
                                                RngStream(cfg.seed, 0), mm);
    const auto risk_plain = variance_loss_quantile(cfg.n, cfg.sigma2, 0.0, 1.0 - cfg.delta,
                                                   cfg.reps, RngStream(cfg.seed, 0), plain);
    std::ostringstream row;
    row << cfg.n << "," << csv_num(cfg.delta) << "," << csv_num(cfg.sigma2) << "," << cfg.reps
        << "," << cfg.seed << "," << csv_num(t_star) << "," << csv_num(weight) << ","
        << csv_num(risk_mm.value) << "," << csv_num(risk_plain.value);
    out.write_csv("var_est", "n,delta,sigma2,reps,seed,t_star,weight,risk_minimax,risk_plain",
                  {row.str()});
    return 0;
}

int cmd_bounds(const ExperimentConfig& cfg, OutputWriter& out, std::size_t workers) {
    const InputDist input = cfg.build_input();
    const auto b = square_bounds(input, cfg.sigma2, cfg.n, cfg.delta, cfg.reps,
                                 RngStream(cfg.seed, 0), workers);
    const auto lem =
        lemma_bounds_check(input, cfg.n, cfg.delta, cfg.reps, RngStream(cfg.seed, 1), workers);
    std::ostringstream row;
    row << cfg.n << "," << input.dim() << "," << csv_num(cfg.delta) << "," << csv_num(cfg.sigma2)
        << "," << cfg.reps << "," << cfg.seed << "," << csv_num(b.lower) << "," << csv_num(b.upper)
        << "," << csv_num(b.eps_hat) << "," << csv_num(lem.q_tr) << "," << csv_num(lem.q_w) << ","
        << csv_num(lem.slack_tr_lower) << "," << csv_num(lem.slack_tr_upper) << ","
        << csv_num(lem.slack_w_lower) << "," << csv_num(lem.slack_w_upper);
    out.write_csv("bounds",
                  "n,d,delta,sigma2,reps,seed,lower,upper,eps_hat,q_tr,q_w,slack_tr_lower,"
                  "slack_tr_upper,slack_w_lower,slack_w_upper",
                  {row.str()});
    return 0;
}

int cmd_suite(const ExperimentConfig& cfg, OutputWriter& out, std::size_t workers) {
    const auto results = run_acceptance_suite(cfg.quick, cfg.seed, workers, std::cout);
    std::vector<std::string> rows;
    bool all_pass = true;
    for (const auto& r : results) {
        std::ostringstream row;
        std::string detail = r.detail;
        std::replace(detail.begin(), detail.end(), ',', ';');
        row << r.index << "," << (r.pass ? 1 : 0) << "," << csv_num(r.seconds) << "," << r.name
            << "," << detail;
        rows.push_back(row.str());
        all_pass = all_pass && r.pass;
    }
    out.write_csv("suite", "criterion,pass,seconds,name,detail", rows);
    return all_pass ? 0 : 1;
}

}  // namespace

int run(const ExperimentConfig& cfg) {
    const auto start = std::chrono::steady_clock::now();
    const std::size_t workers = cfg.workers == 0 ? default_workers() : cfg.workers;
    OutputWriter out(cfg.out);
    int code = 0;
    if (cfg.command == "fit")
        code = cmd_fit(cfg, out);
    else if (cfg.command == "risk")
        code = cmd_risk(cfg, out, workers);
    else if (cfg.command == "minimax")
        code = cmd_minimax(cfg, out, workers);
    else if (cfg.command == "eigen")
        code = cmd_eigen(cfg, out, workers);
    else if (cfg.command == "var-est")
        code = cmd_var_est(cfg, out, workers);
    else if (cfg.command == "bounds")
        code = cmd_bounds(cfg, out, workers);
    else if (cfg.command == "suite")
        code = cmd_suite(cfg, out, workers);
    else
        throw invalid_config("unknown command '" + cfg.command + "'");
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_manifest(cfg, out, wall);
    return code;
}

int run_main(int argc, char** argv) {
    CLI::App app{"quantile-risk experiments for robust linear regression"};
    app.require_subcommand(0);

    std::string config_path;
    ExperimentConfig cfg;
    std::string command;
    app.add_option("command", command,
                   "one of: fit, risk, minimax, eigen, var-est, bounds, suite")
        ->required();
    app.add_option("--config", config_path, "JSON config file; flags override its values");
    auto* seed_opt = app.add_option("--seed", cfg.seed, "rng seed");
    auto* reps_opt = app.add_option("--reps", cfg.reps, "Monte Carlo replicates");
    auto* delta_opt = app.add_option("--delta", cfg.delta, "failure probability");
    auto* n_opt = app.add_option("--n", cfg.n, "sample size");
    auto* d_opt = app.add_option("--d", cfg.d, "input dimension");
    auto* sigma2_opt = app.add_option("--sigma2", cfg.sigma2, "noise level");
    auto* p_opt = app.add_option("--p", cfg.p, "p-power error exponent (0 = square)");
    auto* est_opt = app.add_option("--estimator", cfg.estimator, "ols or minmax");
    auto* noise_opt =
        app.add_option("--noise", cfg.noise, "gaussian | student-t:NU | two-point:A:PROB");
    auto* out_opt = app.add_option("--out", cfg.out, "output directory (default qrisk_out)");
    auto* workers_opt = app.add_option("--workers", cfg.workers, "worker threads (0 = cores)");
    auto* k_opt = app.add_option("--k", cfg.minmax_k, "trim level (0 = delta rule)");
    auto* mu_opt = app.add_option("--mu", cfg.mu, "p-power class floor parameter");
    auto* quick_flag = app.add_flag("--quick", cfg.quick, "reduced replicates, widened tolerances");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        ExperimentConfig merged;
        if (!config_path.empty()) merged = load_config(config_path);
        // flags win over the file
        merged.command = command;
        if (*seed_opt) merged.seed = cfg.seed;
        if (*reps_opt) merged.reps = cfg.reps;
        if (*delta_opt) merged.delta = cfg.delta;
        if (*n_opt) merged.n = cfg.n;
        if (*d_opt) merged.d = cfg.d;
        if (*sigma2_opt) merged.sigma2 = cfg.sigma2;
        if (*p_opt) merged.p = cfg.p;
        if (*est_opt) merged.estimator = cfg.estimator;
        if (*noise_opt) merged.noise = cfg.noise;
        if (*out_opt) merged.out = cfg.out;
        if (*workers_opt) merged.workers = cfg.workers;
        if (*k_opt) merged.minmax_k = cfg.minmax_k;
        if (*mu_opt) merged.mu = cfg.mu;
        if (*quick_flag) merged.quick = cfg.quick;
        if (!*seed_opt && config_path.empty()) {
            if (const char* env = std::getenv("QRISK_SEED")) merged.seed = std::stoull(env);
        }
        return run(merged);
    } catch (const invalid_config& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const error& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}

}  // namespace qrisk::cli
