#ifndef FUNCIRC_REGRESSION_HPP
#define FUNCIRC_REGRESSION_HPP

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "funcirc/circular.hpp"
#include "funcirc/functional.hpp"
#include "funcirc/kernel.hpp"

namespace funcirc {

struct Bandwidth {
    double value = 0.0;
};

struct NeighborCount {
    std::size_t value = 0;
};

using Smoothing = std::variant<Bandwidth, NeighborCount>;

enum class EstimatorMode { nw, knn };

std::string_view mode_name(EstimatorMode m);
EstimatorMode parse_mode(std::string_view name);

/**
 * Training data plus the smoothing choice of a functional-circular
 * regression. Nothing is estimated at fit time; sines and cosines of the
 * responses are cached for prediction.
 */
class FittedModel {
public:
    FittedModel(Dataset training, Kernel kernel, Smoothing smoothing);

    const Dataset& training() const noexcept { return training_; }
    Kernel kernel() const noexcept { return kernel_; }
    const Smoothing& smoothing() const noexcept { return smoothing_; }
    EstimatorMode mode() const noexcept;

    /// Throws InvalidArgument in kNN mode.
    double bandwidth() const;
    /// Throws InvalidArgument in NW mode.
    std::size_t neighbors() const;

    std::span<const double> response_sin() const noexcept { return sin_; }
    std::span<const double> response_cos() const noexcept { return cos_; }

private:
    Dataset training_;
    Kernel kernel_;
    Smoothing smoothing_;
    std::vector<double> sin_;
    std::vector<double> cos_;
};

FittedModel fit(Dataset d, Kernel k, Smoothing smoothing);

/// Estimates of E[sin Theta | X] and E[cos Theta | X].
struct Components {
    double sin = 0.0;
    double cos = 0.0;
};

struct PredictOptions {
    /// Return the global circular mean of the responses when both components vanish.
    bool fallback_to_global_mean = false;
};

/// Uniform weights over the k nearest distances, all ties at the k-th distance included.
std::vector<double> knn_weights(std::span<const double> distances, std::size_t k);

/// Weighted means of (sin, cos) for precomputed distances to the training curves.
Components components_from_distances(const FittedModel& m, std::span<const double> distances,
                                     std::string_view label = {});

Components predict_components(const FittedModel& m, const Curve& x, std::string_view label = {});
Angle predict(const FittedModel& m, const Curve& x, std::string_view label = {}, const PredictOptions& opts = {});

/// Mean resultant length estimate sqrt(m1^2 + m2^2) at x.
double estimate_ell(const FittedModel& m, const Curve& x);

struct PilotBandwidths {
    double residual = 0.0;  ///< bandwidth of the first-stage fit producing residuals
    double variance = 0.0;  ///< bandwidth of the regression of sin^2(residual)
};

/// Fitted bandwidth for residuals, median positive pairwise distance for the variance step.
PilotBandwidths default_pilots(const FittedModel& m);

/**
 * Two-step estimate of Var[sin(eps) | X = x]: circular residuals from an NW
 * fit with the residual pilot, then NW regression of their squared sines with
 * the variance pilot. Clamped to [0, 1].
 */
double estimate_sigma1(const FittedModel& m, const Curve& x, const PilotBandwidths& pilots);

/// estimate_sigma1 with the first-stage residuals computed once, for many query curves.
class SineVarianceEstimator {
public:
    SineVarianceEstimator(const FittedModel& m, const PilotBandwidths& pilots);

    double at(const Curve& x) const;
    /// Same, from precomputed distances to the training curves.
    double at_distances(std::span<const double> distances) const;

private:
    Kernel kernel_;
    const Dataset* training_;
    double variance_pilot_;
    std::vector<double> squared_sines_;
};

struct CiEstimate {
    Angle center;
    double half_width = 0.0;
    double level = 0.0;
    double sigma1_hat = 0.0;
    double ell_hat = 0.0;
    double f_hat = 0.0;
    std::size_t n = 0;

    double lower() const { return center.radians() - half_width; }
    double upper() const { return center.radians() + half_width; }
};

/// Two-sided standard normal critical value z with P(|Z| > z) = alpha.
double normal_critical_value(double alpha);

/// z * sqrt(sigma1) / (ell * sqrt(n * f)).
double ci_half_width(double alpha, double sigma1_hat, double ell_hat, std::size_t n, double f_hat);

/// Asymptotic interval for the regression direction at x. Requires an NW model with the uniform kernel.
CiEstimate confidence_interval(const FittedModel& m, const Curve& x, double alpha, const PilotBandwidths& pilots);
CiEstimate confidence_interval(const FittedModel& m, const Curve& x, double alpha,
                               const SineVarianceEstimator& variance);

/**
 * Leave-one-out cross-validation on one dataset, with the distance matrix
 * computed once and shared between candidate bandwidths or neighbor counts.
 */
class LoocvProblem {
public:
    explicit LoocvProblem(const Dataset& d);
    LoocvProblem(const Dataset& d, DistanceMatrix dm);

    std::size_t size() const noexcept { return responses_.size(); }
    const DistanceMatrix& distances() const noexcept { return dm_; }

    /// sum_i 1 - cos(theta_i - m_h^(-i)(X_i)); +inf if any fold is empty or degenerate.
    double nw_score(Kernel k, double h) const;
    std::vector<double> knn_scores(std::span<const std::size_t> ks) const;

private:
    DistanceMatrix dm_;
    std::vector<Angle> responses_;
    std::vector<double> sin_;
    std::vector<double> cos_;
};

double loocv_score(const Dataset& d, Kernel k, double h);

struct BandwidthSelection {
    double bandwidth = 0.0;
    std::size_t index = 0;
    std::vector<double> candidates;
    std::vector<double> scores;
};

struct NeighborSelection {
    std::size_t neighbors = 0;
    std::size_t index = 0;
    std::vector<std::size_t> candidates;
    std::vector<double> scores;
};

/// Position of the smallest finite score, earliest on ties; npos if none is finite.
std::size_t argmin_finite(std::span<const double> scores);

/// Throws NoFeasibleBandwidth when every candidate scores +inf.
BandwidthSelection select_bandwidth_cv(const LoocvProblem& problem, Kernel k, std::span<const double> grid);
BandwidthSelection select_bandwidth_cv(const Dataset& d, Kernel k, std::span<const double> grid);

NeighborSelection select_k_cv(const LoocvProblem& problem, std::span<const std::size_t> k_grid);
NeighborSelection select_k_cv(const Dataset& d, std::span<const std::size_t> k_grid);

/// Circular average squared error, mean of 1 - cos(truth - prediction).
double case_error(std::span<const Angle> predictions, std::span<const Angle> truth);

/**
 * Circular average prediction error per group label. Every label listed in
 * `required_groups` must have at least one pair.
 */
std::map<std::string, double> cape(std::span<const Angle> observed, std::span<const Angle> predicted,
                                   std::span<const std::string> groups,
                                   std::span<const std::string> required_groups = {});

}  // namespace funcirc

#endif
