#include "funcirc/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <numeric>
#include <ostream>
#include <set>
#include <thread>

#include "funcirc/curve_io.hpp"
#include "funcirc/errors.hpp"

namespace funcirc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Neumaier-compensated running sum.
class CompensatedSum {
public:
    void add(double x) {
        const double t = sum_ + x;
        comp_ += std::fabs(sum_) >= std::fabs(x) ? (sum_ - t) + x : (x - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

}  // namespace

std::string_view regression_kind_name(RegressionKind k) { return k == RegressionKind::r1 ? "r1" : "r2"; }

RegressionKind parse_regression_kind(std::string_view name) {
    if (name == "r1") {
        return RegressionKind::r1;
    }
    if (name == "r2") {
        return RegressionKind::r2;
    }
    throw InvalidArgument("unknown regression function '" + std::string(name) + "' (expected r1 or r2)");
}

void ScenarioConfig::validate() const {
    if (n < 2) {
        throw InvalidArgument("scenario needs n >= 2");
    }
    if (!(kappa >= 0.0) || !std::isfinite(kappa)) {
        throw InvalidArgument("scenario needs a finite kappa >= 0");
    }
    if (replicates < 1) {
        throw InvalidArgument("scenario needs at least one replicate");
    }
    if (grid_size < 2) {
        throw InvalidArgument("scenario needs grid_size >= 2");
    }
}

Angle regression_truth_from_integral(RegressionKind kind, double integral) {
    if (kind == RegressionKind::r1) {
        return atan2_dir(0.5 + integral, integral);
    }
    // Trapezoid error can push 0.4 * 2.5 a hair past 1.
    constexpr double slack = 1e-9;
    auto safe_acos = [&](double x) {
        if (!(std::fabs(x) <= 1.0 + slack)) {
            throw InvalidArgument("r2 is undefined for curve integral " + format_double(integral) +
                                  ": acos argument " + format_double(x) + " outside [-1, 1]");
        }
        return std::acos(std::clamp(x, -1.0, 1.0));
    };
    return Angle::from_radians(safe_acos(-0.3 * integral) + 1.5 * safe_acos(0.4 * integral));
}

Angle regression_truth(RegressionKind kind, const Curve& c) {
    return regression_truth_from_integral(kind, integrate_curve(c));
}

SimulatedSample generate_dataset(const ScenarioConfig& cfg, Rng& rng) {
    cfg.validate();
    const GridPtr grid = Grid::uniform(cfg.grid_size);
    std::vector<Curve> curves;
    std::vector<Angle> responses;
    std::vector<Angle> truth;
    curves.reserve(cfg.n);
    for (std::size_t i = 0; i < cfg.n; ++i) {
        // uniform() is open on (0, 1); the curve parameter lives on [0, 1].
        Curve c = simulate_curve(rng.uniform(), grid);
        const Angle m = regression_truth(cfg.regression_kind, c);
        const Angle eps = sample_von_mises(Angle{}, cfg.kappa, rng);
        curves.push_back(std::move(c));
        truth.push_back(m);
        responses.push_back(m + eps);
    }
    return {Dataset(std::move(curves), std::move(responses)), std::move(truth)};
}

namespace {

/// CASE of the full-sample NW fit at the training curves; +inf if any fit is degenerate.
double nw_fitted_case(const DistanceMatrix& dm, std::span<const double> s, std::span<const double> c,
                      std::span<const Angle> truth, Kernel k, double h) {
    const std::size_t n = dm.size();
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double w = 0.0;
        double ss = 0.0;
        double cc = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double kv = kernel_eval(k, dm(i, j) / h);
            w += kv;
            ss += kv * s[j];
            cc += kv * c[j];
        }
        if (!(w > 0.0) || (ss == 0.0 && cc == 0.0)) {
            return kInf;
        }
        total += 1.0 - std::cos(truth[i].radians() - std::atan2(ss / w, cc / w));
    }
    return total / static_cast<double>(n);
}

/// CASE of full-sample kNN fits (self included, ties at the k-th distance included) for each k.
std::vector<double> knn_fitted_case(const DistanceMatrix& dm, std::span<const double> s, std::span<const double> c,
                                    std::span<const Angle> truth, std::span<const std::size_t> ks) {
    const std::size_t n = dm.size();
    std::vector<double> totals(ks.size(), 0.0);
    std::vector<std::size_t> order(n);
    std::vector<double> ps(n + 1);
    std::vector<double> pc(n + 1);
    std::vector<std::size_t> tie_end(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        const auto row = dm.row(i);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return row[a] < row[b]; });
        for (std::size_t p = 0; p < n; ++p) {
            ps[p + 1] = ps[p] + s[order[p]];
            pc[p + 1] = pc[p] + c[order[p]];
        }
        for (std::size_t p = n; p-- > 0;) {
            tie_end[p] = (p + 1 < n && row[order[p + 1]] == row[order[p]]) ? tie_end[p + 1] : p + 1;
        }
        for (std::size_t g = 0; g < ks.size(); ++g) {
            const std::size_t count = tie_end[ks[g] - 1];
            const double ms = ps[count] / static_cast<double>(count);
            const double mc = pc[count] / static_cast<double>(count);
            if (ms == 0.0 && mc == 0.0) {
                totals[g] = kInf;
            } else {
                totals[g] += 1.0 - std::cos(truth[i].radians() - std::atan2(ms, mc));
            }
        }
    }
    for (double& t : totals) {
        t /= static_cast<double>(n);
    }
    return totals;
}

}  // namespace

ReplicateResult run_replicate(const ScenarioConfig& cfg, const BandwidthGridParams& grid_params, std::size_t index) {
    Rng rng = Rng::stream(cfg.seed, index);
    const SimulatedSample sample = generate_dataset(cfg, rng);
    const LoocvProblem problem(sample.data);
    std::vector<double> s;
    std::vector<double> c;
    for (Angle a : sample.data.responses()) {
        s.push_back(std::sin(a.radians()));
        c.push_back(std::cos(a.radians()));
    }

    ReplicateResult out;
    std::vector<double> cv;
    std::vector<double> fitted;
    std::vector<double> params;
    if (cfg.estimator == EstimatorMode::nw) {
        try {
            params = bandwidth_grid(problem.distances(), grid_params);
        } catch (const DegenerateDataset&) {
            out.excluded = true;
            return out;
        }
        for (double h : params) {
            cv.push_back(problem.nw_score(cfg.kernel, h));
            fitted.push_back(nw_fitted_case(problem.distances(), s, c, sample.truth, cfg.kernel, h));
        }
    } else {
        std::vector<std::size_t> ks(cfg.n - 1);
        std::iota(ks.begin(), ks.end(), std::size_t{1});
        cv = problem.knn_scores(ks);
        fitted = knn_fitted_case(problem.distances(), s, c, sample.truth, ks);
        params.assign(ks.begin(), ks.end());
    }

    const std::size_t best_cv = argmin_finite(cv);
    const std::size_t best_oracle = argmin_finite(fitted);
    if (best_cv == static_cast<std::size_t>(-1) || !std::isfinite(fitted[best_cv])) {
        out.excluded = true;
        return out;
    }
    out.case_cv = fitted[best_cv];
    out.case_oracle = fitted[best_oracle];
    out.param_cv = params[best_cv];
    out.param_oracle = params[best_oracle];
    return out;
}

unsigned default_thread_count() {
    if (const char* env = std::getenv("FUNC_CIRC_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v >= 1) {
            return static_cast<unsigned>(v);
        }
    }
    return 1;
}

AggregateRow run_replicates(const ScenarioConfig& cfg, const BandwidthGridParams& grid, unsigned threads) {
    cfg.validate();
    if (threads == 0) {
        threads = default_thread_count();
    }
    AggregateRow row;
    row.config = cfg;
    row.replicates.resize(cfg.replicates);

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t r = next++; r < cfg.replicates; r = next++) {
            row.replicates[r] = run_replicate(cfg, grid, r);
        }
    };
    const unsigned workers = std::min<std::size_t>(threads, cfg.replicates);
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < workers; ++t) {
            pool.emplace_back(worker);
        }
    }

    CompensatedSum cv;
    CompensatedSum oracle;
    std::size_t used = 0;
    for (const ReplicateResult& r : row.replicates) {
        if (r.excluded) {
            ++row.excluded;
            continue;
        }
        cv.add(r.case_cv);
        oracle.add(r.case_oracle);
        ++used;
    }
    if (used > 0) {
        row.mean_case_cv = cv.value() / static_cast<double>(used);
        row.mean_case_oracle = oracle.value() / static_cast<double>(used);
    } else {
        row.mean_case_cv = std::numeric_limits<double>::quiet_NaN();
        row.mean_case_oracle = std::numeric_limits<double>::quiet_NaN();
    }
    return row;
}

namespace {

struct Moments {
    double mean = 0.0;
    double var = 0.0;
};

Moments moments(std::span<const double> x) {
    CompensatedSum s;
    for (double v : x) {
        s.add(v);
    }
    Moments m;
    m.mean = s.value() / static_cast<double>(x.size());
    CompensatedSum q;
    for (double v : x) {
        q.add((v - m.mean) * (v - m.mean));
    }
    m.var = q.value() / static_cast<double>(x.size() - 1);
    return m;
}

/// Sample variances of a and b, plus the standard error of their sum.
struct PairVariance {
    double var_a = 0.0;
    double var_b = 0.0;
    double se_sum = 0.0;
};

PairVariance pair_variance(std::span<const double> a, std::span<const double> b) {
    const Moments ma = moments(a);
    const Moments mb = moments(b);
    std::vector<double> contrib(a.size());
    for (std::size_t j = 0; j < a.size(); ++j) {
        contrib[j] = (a[j] - ma.mean) * (a[j] - ma.mean) + (b[j] - mb.mean) * (b[j] - mb.mean);
    }
    const Moments mc = moments(contrib);
    return {ma.var, mb.var, std::sqrt(mc.var / static_cast<double>(a.size()))};
}

}  // namespace

VarianceIdentityDiagnostic verify_variance_identity(double kappa, Angle direction, std::size_t n_mc,
                                                    std::uint64_t seed) {
    if (n_mc < 10000) {
        throw InvalidArgument("variance identity check needs at least 10^4 draws");
    }
    Rng eps_rng = Rng::stream(seed, 0);
    Rng theta_rng = Rng::stream(seed, 1);
    std::vector<double> se(n_mc), ce(n_mc), st(n_mc), ct(n_mc);
    for (std::size_t j = 0; j < n_mc; ++j) {
        const Angle e = sample_von_mises(Angle{}, kappa, eps_rng);
        se[j] = std::sin(e.radians());
        ce[j] = std::cos(e.radians());
        const Angle t = direction + sample_von_mises(Angle{}, kappa, theta_rng);
        st[j] = std::sin(t.radians());
        ct[j] = std::cos(t.radians());
    }
    const PairVariance eps = pair_variance(se, ce);
    const PairVariance theta = pair_variance(st, ct);

    VarianceIdentityDiagnostic d;
    d.n_mc = n_mc;
    d.sigma1_sq = eps.var_a;
    d.sigma2_sq = eps.var_b;
    const Moments ms = moments(se);
    const Moments mc = moments(ce);
    CompensatedSum cross;
    for (std::size_t j = 0; j < n_mc; ++j) {
        cross.add((se[j] - ms.mean) * (ce[j] - mc.mean));
    }
    d.sigma12 = cross.value() / static_cast<double>(n_mc - 1);
    d.s1_sq = theta.var_a;
    d.s2_sq = theta.var_b;
    const double f1 = std::sin(direction.radians());
    const double f2 = std::cos(direction.radians());
    d.s1_sq_from_sigmas = f1 * f1 * d.sigma2_sq + 2.0 * f1 * f2 * d.sigma12 + f2 * f2 * d.sigma1_sq;
    d.s2_sq_from_sigmas = f2 * f2 * d.sigma2_sq - 2.0 * f2 * f1 * d.sigma12 + f1 * f1 * d.sigma1_sq;
    d.gap = std::fabs((d.s1_sq + d.s2_sq) - (d.sigma1_sq + d.sigma2_sq));
    d.gap_se = std::hypot(eps.se_sum, theta.se_sum);
    return d;
}

StandardizedErrors standardized_error_sample(const ScenarioConfig& cfg, const Curve& chi, std::size_t replicates,
                                             const BandwidthGridParams& grid) {
    cfg.validate();
    if (cfg.kernel != Kernel::uniform || cfg.estimator != EstimatorMode::nw) {
        throw UnsupportedKernel("standardized errors are defined for the uniform-kernel NW estimator");
    }
    const Angle truth = regression_truth(cfg.regression_kind, chi);
    StandardizedErrors out;
    for (std::size_t r = 0; r < replicates; ++r) {
        Rng rng = Rng::stream(cfg.seed, r);
        const SimulatedSample sample = generate_dataset(cfg, rng);
        try {
            const LoocvProblem problem(sample.data);
            const auto candidates = bandwidth_grid(problem.distances(), grid);
            const BandwidthSelection sel = select_bandwidth_cv(problem, cfg.kernel, candidates);
            const FittedModel model = fit(sample.data, cfg.kernel, Bandwidth{sel.bandwidth});
            const CiEstimate ci = confidence_interval(model, chi, 0.05, default_pilots(model));
            if (!(ci.sigma1_hat > 0.0)) {
                ++out.degenerate;
                continue;
            }
            const double raw = signed_deviation(ci.center, truth);
            out.raw_errors.push_back(raw);
            out.values.push_back(std::sqrt(static_cast<double>(ci.n) * ci.f_hat) * ci.ell_hat /
                                 std::sqrt(ci.sigma1_hat) * raw);
        } catch (const Error&) {
            ++out.degenerate;
        }
    }
    if (out.values.size() >= 2) {
        const Moments m = moments(out.values);
        out.mean = m.mean;
        out.variance = m.var;
    }
    return out;
}

namespace {

template <typename T, typename Parse>
std::vector<T> scalar_or_list(const nlohmann::json& j, const char* key, std::vector<T> fallback, Parse parse) {
    if (!j.contains(key)) {
        return fallback;
    }
    const auto& v = j.at(key);
    std::vector<T> out;
    if (v.is_array()) {
        if (v.empty()) {
            throw FormatError(std::string("scenario field '") + key + "' is an empty list");
        }
        for (const auto& e : v) {
            out.push_back(parse(e));
        }
    } else {
        out.push_back(parse(v));
    }
    return out;
}

}  // namespace

Scenario parse_scenario(const nlohmann::json& j) {
    static const std::set<std::string> known{"regression_kind", "n",    "kappa",  "replicates",    "grid_size",
                                             "seed",            "estimator", "kernel", "bandwidth_grid"};
    if (!j.is_object()) {
        throw FormatError("scenario must be a JSON object");
    }
    for (const auto& [key, value] : j.items()) {
        if (!known.contains(key)) {
            throw FormatError("unknown scenario field '" + key + "'");
        }
    }
    try {
        const ScenarioConfig defaults;
        const auto kinds = scalar_or_list<RegressionKind>(
            j, "regression_kind", {defaults.regression_kind},
            [](const nlohmann::json& e) { return parse_regression_kind(e.get<std::string>()); });
        const auto ns = scalar_or_list<std::size_t>(j, "n", {defaults.n},
                                                    [](const nlohmann::json& e) { return e.get<std::size_t>(); });
        const auto kappas = scalar_or_list<double>(j, "kappa", {defaults.kappa},
                                                   [](const nlohmann::json& e) { return e.get<double>(); });
        const auto estimators = scalar_or_list<EstimatorMode>(
            j, "estimator", {defaults.estimator},
            [](const nlohmann::json& e) { return parse_mode(e.get<std::string>()); });

        ScenarioConfig base;
        base.replicates = j.value("replicates", defaults.replicates);
        base.grid_size = j.value("grid_size", defaults.grid_size);
        base.seed = j.value("seed", defaults.seed);
        base.kernel = parse_kernel(j.value("kernel", std::string(kernel_name(defaults.kernel))));

        Scenario s;
        if (j.contains("bandwidth_grid")) {
            const auto& g = j.at("bandwidth_grid");
            s.grid.size = g.value("size", s.grid.size);
            s.grid.lo_q = g.value("lo_q", s.grid.lo_q);
            s.grid.hi_q = g.value("hi_q", s.grid.hi_q);
        }
        for (RegressionKind kind : kinds) {
            for (EstimatorMode est : estimators) {
                for (std::size_t n : ns) {
                    for (double kappa : kappas) {
                        ScenarioConfig cell = base;
                        cell.regression_kind = kind;
                        cell.estimator = est;
                        cell.n = n;
                        cell.kappa = kappa;
                        cell.validate();
                        s.cells.push_back(cell);
                    }
                }
            }
        }
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("malformed scenario: ") + e.what());
    } catch (const InvalidArgument& e) {
        throw FormatError(std::string("invalid scenario: ") + e.what());
    }
}

void write_results_header(std::ostream& out) {
    out << "kind,estimator,n,kappa,replicates,mean_case_cv,mean_case_oracle,excluded\n";
}

void write_results_row(std::ostream& out, const AggregateRow& row) {
    const ScenarioConfig& c = row.config;
    out << regression_kind_name(c.regression_kind) << ',' << mode_name(c.estimator) << ',' << c.n << ','
        << format_double(c.kappa) << ',' << c.replicates << ',' << format_double(row.mean_case_cv) << ','
        << format_double(row.mean_case_oracle) << ',' << row.excluded << '\n';
}

}  // namespace funcirc
