#ifndef FUNCIRC_SIMULATION_HPP
#define FUNCIRC_SIMULATION_HPP

#include <cstdint>
#include <iosfwd>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "funcirc/kernel.hpp"
#include "funcirc/random.hpp"
#include "funcirc/regression.hpp"

namespace funcirc {

enum class RegressionKind { r1, r2 };

std::string_view regression_kind_name(RegressionKind k);
RegressionKind parse_regression_kind(std::string_view name);

struct ScenarioConfig {
    RegressionKind regression_kind = RegressionKind::r1;
    std::size_t n = 50;
    double kappa = 5.0;
    std::size_t replicates = 100;
    std::size_t grid_size = 101;
    std::uint64_t seed = 1;
    EstimatorMode estimator = EstimatorMode::nw;
    Kernel kernel = Kernel::quadratic;

    /// Throws InvalidArgument when n < 2, kappa < 0, replicates < 1 or grid_size < 2.
    void validate() const;
};

/// r1: atan2(0.5 + I, I); r2: acos(-0.3 I) + 1.5 acos(0.4 I), with I the integral of the curve.
Angle regression_truth_from_integral(RegressionKind kind, double integral);
Angle regression_truth(RegressionKind kind, const Curve& c);

struct SimulatedSample {
    Dataset data;
    std::vector<Angle> truth;
};

/// Curves X_i = 30 U_i (1 - t) t^(1 + U_i), responses wrap(m(X_i) + eps_i), eps_i ~ vM(0, kappa).
SimulatedSample generate_dataset(const ScenarioConfig& cfg, Rng& rng);

struct ReplicateResult {
    bool excluded = false;
    double case_cv = 0.0;
    double case_oracle = 0.0;
    /// Bandwidths in NW mode, neighbor counts (as doubles) in kNN mode.
    double param_cv = 0.0;
    double param_oracle = 0.0;
};

struct AggregateRow {
    ScenarioConfig config;
    double mean_case_cv = 0.0;
    double mean_case_oracle = 0.0;
    std::size_t excluded = 0;
    std::vector<ReplicateResult> replicates;
};

/// One replicate on stream (cfg.seed, index): CV choice and grid-oracle choice of the smoothing parameter.
ReplicateResult run_replicate(const ScenarioConfig& cfg, const BandwidthGridParams& grid, std::size_t index);

/// Replicates run on up to `threads` workers; 0 means the FUNC_CIRC_THREADS default.
AggregateRow run_replicates(const ScenarioConfig& cfg, const BandwidthGridParams& grid = {}, unsigned threads = 0);

/// Worker count from FUNC_CIRC_THREADS, else 1.
unsigned default_thread_count();

struct VarianceIdentityDiagnostic {
    std::size_t n_mc = 0;
    double sigma1_sq = 0.0;  ///< Var sin(eps)
    double sigma2_sq = 0.0;  ///< Var cos(eps)
    double sigma12 = 0.0;    ///< Cov(sin eps, cos eps)
    double s1_sq = 0.0;      ///< Var sin(Theta), Theta = direction + eps'
    double s2_sq = 0.0;      ///< Var cos(Theta)
    double s1_sq_from_sigmas = 0.0;
    double s2_sq_from_sigmas = 0.0;
    double gap = 0.0;        ///< |(s1^2 + s2^2) - (sigma1^2 + sigma2^2)|
    double gap_se = 0.0;     ///< Monte Carlo standard error of the gap
};

/// Independent draws for eps and Theta, so the identity is checked statistically.
VarianceIdentityDiagnostic verify_variance_identity(double kappa, Angle direction, std::size_t n_mc,
                                                    std::uint64_t seed = 1);

struct StandardizedErrors {
    std::vector<double> values;
    std::vector<double> raw_errors;
    std::size_t degenerate = 0;
    double mean = 0.0;
    double variance = 0.0;
};

/**
 * sqrt(n F(h)) ell / sqrt(sigma1^2) (m_h(chi) - m(chi)) per replicate, with
 * plug-in estimates and the CV bandwidth. The scenario kernel must be uniform.
 */
StandardizedErrors standardized_error_sample(const ScenarioConfig& cfg, const Curve& chi, std::size_t replicates,
                                             const BandwidthGridParams& grid = {});

struct Scenario {
    std::vector<ScenarioConfig> cells;
    BandwidthGridParams grid;
};

/**
 * Scenario document. Any of regression_kind, n, kappa and estimator may be a
 * list; cells are their cartesian product.
 *
 *   { "regression_kind": "r1", "n": [50, 100], "kappa": 5, "replicates": 100,
 *     "grid_size": 101, "seed": 7, "estimator": "nw", "kernel": "quadratic",
 *     "bandwidth_grid": { "size": 25, "lo_q": 0.05, "hi_q": 1.0 } }
 */
Scenario parse_scenario(const nlohmann::json& j);

void write_results_header(std::ostream& out);
void write_results_row(std::ostream& out, const AggregateRow& row);

}  // namespace funcirc

#endif
