#include "funcirc/regression.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <boost/math/distributions/normal.hpp>

#include "funcirc/errors.hpp"

namespace funcirc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_smoothing(const Smoothing& s, std::size_t n) {
    if (const auto* h = std::get_if<Bandwidth>(&s)) {
        if (!(h->value > 0.0) || !std::isfinite(h->value)) {
            throw InvalidArgument("bandwidth must be finite and > 0");
        }
    } else {
        const std::size_t k = std::get<NeighborCount>(s).value;
        if (k < 1 || k > n) {
            throw InvalidArgument("neighbor count " + std::to_string(k) + " outside [1, " + std::to_string(n) + "]");
        }
    }
}

Components weighted_mean(std::span<const double> w, std::span<const double> s, std::span<const double> c) {
    Components out;
    for (std::size_t i = 0; i < w.size(); ++i) {
        out.sin += w[i] * s[i];
        out.cos += w[i] * c[i];
    }
    return out;
}

}  // namespace

std::string_view mode_name(EstimatorMode m) { return m == EstimatorMode::nw ? "nw" : "knn"; }

EstimatorMode parse_mode(std::string_view name) {
    if (name == "nw") {
        return EstimatorMode::nw;
    }
    if (name == "knn") {
        return EstimatorMode::knn;
    }
    throw InvalidArgument("unknown estimator '" + std::string(name) + "' (expected nw or knn)");
}

FittedModel::FittedModel(Dataset training, Kernel kernel, Smoothing smoothing)
    : training_(std::move(training)), kernel_(kernel), smoothing_(smoothing) {
    check_smoothing(smoothing_, training_.size());
    sin_.reserve(training_.size());
    cos_.reserve(training_.size());
    for (Angle a : training_.responses()) {
        sin_.push_back(std::sin(a.radians()));
        cos_.push_back(std::cos(a.radians()));
    }
}

EstimatorMode FittedModel::mode() const noexcept {
    return std::holds_alternative<Bandwidth>(smoothing_) ? EstimatorMode::nw : EstimatorMode::knn;
}

double FittedModel::bandwidth() const {
    if (const auto* h = std::get_if<Bandwidth>(&smoothing_)) {
        return h->value;
    }
    throw InvalidArgument("kNN model has no bandwidth");
}

std::size_t FittedModel::neighbors() const {
    if (const auto* k = std::get_if<NeighborCount>(&smoothing_)) {
        return k->value;
    }
    throw InvalidArgument("NW model has no neighbor count");
}

FittedModel fit(Dataset d, Kernel k, Smoothing smoothing) { return FittedModel(std::move(d), k, smoothing); }

std::vector<double> knn_weights(std::span<const double> distances, std::size_t k) {
    if (k < 1 || k > distances.size()) {
        throw InvalidArgument("neighbor count " + std::to_string(k) + " outside [1, " +
                              std::to_string(distances.size()) + "]");
    }
    std::vector<double> sorted(distances.begin(), distances.end());
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(k - 1), sorted.end());
    const double radius = sorted[k - 1];
    const auto count = std::count_if(distances.begin(), distances.end(), [radius](double d) { return d <= radius; });
    std::vector<double> w(distances.size(), 0.0);
    const double each = 1.0 / static_cast<double>(count);
    for (std::size_t i = 0; i < distances.size(); ++i) {
        if (distances[i] <= radius) {
            w[i] = each;
        }
    }
    return w;
}

Components components_from_distances(const FittedModel& m, std::span<const double> distances,
                                     std::string_view label) {
    if (distances.size() != m.training().size()) {
        throw InvalidArgument("expected one distance per training curve");
    }
    std::vector<double> w;
    if (m.mode() == EstimatorMode::nw) {
        try {
            w = nw_weights(distances, m.bandwidth(), m.kernel());
        } catch (const EmptyNeighborhood&) {
            throw EmptyNeighborhood(std::string(label));
        }
    } else {
        w = knn_weights(distances, m.neighbors());
    }
    return weighted_mean(w, m.response_sin(), m.response_cos());
}

Components predict_components(const FittedModel& m, const Curve& x, std::string_view label) {
    const auto d = distances_to(m.training(), x);
    return components_from_distances(m, d, label);
}

Angle predict(const FittedModel& m, const Curve& x, std::string_view label, const PredictOptions& opts) {
    const Components c = predict_components(m, x, label);
    if (c.sin == 0.0 && c.cos == 0.0 && opts.fallback_to_global_mean) {
        return circ_mean(m.training().responses());
    }
    return atan2_dir(c.sin, c.cos);
}

double estimate_ell(const FittedModel& m, const Curve& x) {
    const Components c = predict_components(m, x);
    return std::min(1.0, std::hypot(c.sin, c.cos));
}

PilotBandwidths default_pilots(const FittedModel& m) {
    const DistanceMatrix dm = distance_matrix(m.training());
    std::vector<double> positive;
    for (std::size_t i = 0; i < dm.size(); ++i) {
        for (std::size_t j = i + 1; j < dm.size(); ++j) {
            if (dm(i, j) > 0.0) {
                positive.push_back(dm(i, j));
            }
        }
    }
    if (positive.empty()) {
        throw DegenerateDataset("no positive pairwise distance to derive a pilot bandwidth");
    }
    const double median = quantile(std::move(positive), 0.5);
    PilotBandwidths p;
    p.residual = m.mode() == EstimatorMode::nw ? m.bandwidth() : median;
    p.variance = median;
    return p;
}

namespace {

/// Squared sines of the first-stage circular residuals at every training curve.
std::vector<double> squared_sine_residuals(const FittedModel& m, double pilot) {
    const Dataset& d = m.training();
    const DistanceMatrix dm = distance_matrix(d);
    std::vector<double> out(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) {
        std::vector<double> w;
        try {
            w = nw_weights(dm.row(i), pilot, m.kernel());
        } catch (const EmptyNeighborhood&) {
            throw EmptyNeighborhood(d.has_ids() ? d.ids()[i] : "training curve " + std::to_string(i));
        }
        const Components c = weighted_mean(w, m.response_sin(), m.response_cos());
        const Angle fitted = atan2_dir(c.sin, c.cos);
        const double s = std::sin((d.responses()[i] - fitted).radians());
        out[i] = s * s;
    }
    return out;
}

void check_pilots(const PilotBandwidths& p) {
    if (!(p.residual > 0.0) || !(p.variance > 0.0)) {
        throw InvalidArgument("pilot bandwidths must be > 0");
    }
}

}  // namespace

SineVarianceEstimator::SineVarianceEstimator(const FittedModel& m, const PilotBandwidths& pilots)
    : kernel_(m.kernel()), training_(&m.training()), variance_pilot_(pilots.variance) {
    check_pilots(pilots);
    squared_sines_ = squared_sine_residuals(m, pilots.residual);
}

double SineVarianceEstimator::at(const Curve& x) const { return at_distances(distances_to(*training_, x)); }

double SineVarianceEstimator::at_distances(std::span<const double> distances) const {
    std::vector<double> w;
    try {
        w = nw_weights(distances, variance_pilot_, kernel_);
    } catch (const EmptyNeighborhood&) {
        throw EmptyNeighborhood("variance pilot at query curve");
    }
    double v = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        v += w[i] * squared_sines_[i];
    }
    return std::clamp(v, 0.0, 1.0);
}

double estimate_sigma1(const FittedModel& m, const Curve& x, const PilotBandwidths& pilots) {
    return SineVarianceEstimator(m, pilots).at(x);
}

double normal_critical_value(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw InvalidArgument("alpha must lie in (0, 1)");
    }
    return boost::math::quantile(boost::math::normal_distribution<double>(), 1.0 - alpha / 2.0);
}

double ci_half_width(double alpha, double sigma1_hat, double ell_hat, std::size_t n, double f_hat) {
    if (!(ell_hat > 0.0)) {
        throw DegenerateDirection("estimated mean resultant length is zero");
    }
    if (!(f_hat > 0.0) || n == 0) {
        throw EmptyNeighborhood("small-ball estimate is zero");
    }
    return normal_critical_value(alpha) * std::sqrt(sigma1_hat) / (ell_hat * std::sqrt(static_cast<double>(n) * f_hat));
}

CiEstimate confidence_interval(const FittedModel& m, const Curve& x, double alpha, const PilotBandwidths& pilots) {
    if (m.mode() != EstimatorMode::nw || m.kernel() != Kernel::uniform) {
        throw UnsupportedKernel("confidence intervals need a Nadaraya-Watson model with the uniform kernel");
    }
    return confidence_interval(m, x, alpha, SineVarianceEstimator(m, pilots));
}

CiEstimate confidence_interval(const FittedModel& m, const Curve& x, double alpha,
                               const SineVarianceEstimator& variance) {
    if (m.mode() != EstimatorMode::nw || m.kernel() != Kernel::uniform) {
        throw UnsupportedKernel("confidence intervals need a Nadaraya-Watson model with the uniform kernel");
    }
    const auto dist = distances_to(m.training(), x);
    CiEstimate ci;
    ci.n = m.training().size();
    ci.level = 1.0 - alpha;
    ci.f_hat = small_ball_estimate(dist, m.bandwidth());
    if (!(ci.f_hat > 0.0)) {
        throw EmptyNeighborhood("confidence interval query curve");
    }
    const Components c = components_from_distances(m, dist);
    ci.ell_hat = std::min(1.0, std::hypot(c.sin, c.cos));
    if (!(ci.ell_hat > 0.0)) {
        throw DegenerateDirection("estimated mean resultant length is zero");
    }
    ci.center = atan2_dir(c.sin, c.cos);
    ci.sigma1_hat = variance.at_distances(dist);
    ci.half_width = ci_half_width(alpha, ci.sigma1_hat, ci.ell_hat, ci.n, ci.f_hat);
    return ci;
}

LoocvProblem::LoocvProblem(const Dataset& d) : LoocvProblem(d, distance_matrix(d)) {}

LoocvProblem::LoocvProblem(const Dataset& d, DistanceMatrix dm) : dm_(std::move(dm)), responses_(d.responses()) {
    if (d.size() < 2) {
        throw InvalidArgument("leave-one-out cross-validation needs n >= 2");
    }
    if (dm_.size() != d.size()) {
        throw InvalidArgument("distance matrix does not match the dataset");
    }
    for (Angle a : responses_) {
        sin_.push_back(std::sin(a.radians()));
        cos_.push_back(std::cos(a.radians()));
    }
}

double LoocvProblem::nw_score(Kernel k, double h) const {
    if (!(h > 0.0) || !std::isfinite(h)) {
        throw InvalidArgument("bandwidth must be finite and > 0");
    }
    const std::size_t n = size();
    double score = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double w = 0.0;
        double s = 0.0;
        double c = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) {
                continue;
            }
            const double kv = kernel_eval(k, dm_(i, j) / h);
            w += kv;
            s += kv * sin_[j];
            c += kv * cos_[j];
        }
        if (!(w > 0.0) || (s == 0.0 && c == 0.0)) {
            return kInf;
        }
        score += 1.0 - std::cos(responses_[i].radians() - std::atan2(s / w, c / w));
    }
    return score;
}

std::vector<double> LoocvProblem::knn_scores(std::span<const std::size_t> ks) const {
    const std::size_t n = size();
    for (std::size_t k : ks) {
        if (k < 1 || k > n - 1) {
            throw InvalidArgument("leave-one-out neighbor count " + std::to_string(k) + " outside [1, " +
                                  std::to_string(n - 1) + "]");
        }
    }
    std::vector<double> scores(ks.size(), 0.0);
    std::vector<std::size_t> order;
    std::vector<double> prefix_s(n);
    std::vector<double> prefix_c(n);
    std::vector<std::size_t> tie_end(n - 1);
    for (std::size_t i = 0; i < n; ++i) {
        order.clear();
        for (std::size_t j = 0; j < n; ++j) {
            if (j != i) {
                order.push_back(j);
            }
        }
        const auto row = dm_.row(i);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return row[a] < row[b]; });
        prefix_s[0] = 0.0;
        prefix_c[0] = 0.0;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            prefix_s[p + 1] = prefix_s[p] + sin_[order[p]];
            prefix_c[p + 1] = prefix_c[p] + cos_[order[p]];
        }
        // tie_end[p]: number of neighbors within the distance of the (p+1)-th nearest.
        for (std::size_t p = n - 1; p-- > 0;) {
            tie_end[p] = (p + 2 < n && row[order[p + 1]] == row[order[p]]) ? tie_end[p + 1] : p + 1;
        }
        for (std::size_t g = 0; g < ks.size(); ++g) {
            if (std::isinf(scores[g])) {
                continue;
            }
            const std::size_t count = tie_end[ks[g] - 1];
            const double s = prefix_s[count] / static_cast<double>(count);
            const double c = prefix_c[count] / static_cast<double>(count);
            if (s == 0.0 && c == 0.0) {
                scores[g] = kInf;
                continue;
            }
            scores[g] += 1.0 - std::cos(responses_[i].radians() - std::atan2(s, c));
        }
    }
    return scores;
}

double loocv_score(const Dataset& d, Kernel k, double h) { return LoocvProblem(d).nw_score(k, h); }

std::size_t argmin_finite(std::span<const double> scores) {
    std::size_t best = static_cast<std::size_t>(-1);
    for (std::size_t g = 0; g < scores.size(); ++g) {
        if (std::isfinite(scores[g]) && (best == static_cast<std::size_t>(-1) || scores[g] < scores[best])) {
            best = g;
        }
    }
    return best;
}

namespace {

/// Candidate order sorted ascending, so "earliest" in argmin means "smallest".
template <typename T>
std::vector<T> sorted_candidates(std::span<const T> grid) {
    std::vector<T> out(grid.begin(), grid.end());
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace

BandwidthSelection select_bandwidth_cv(const LoocvProblem& problem, Kernel k, std::span<const double> grid) {
    if (grid.empty()) {
        throw InvalidArgument("bandwidth grid is empty");
    }
    BandwidthSelection sel;
    sel.candidates = sorted_candidates(grid);
    for (double h : sel.candidates) {
        sel.scores.push_back(problem.nw_score(k, h));
    }
    sel.index = argmin_finite(sel.scores);
    if (sel.index == static_cast<std::size_t>(-1)) {
        throw NoFeasibleBandwidth("every candidate bandwidth leaves some curve with an empty neighborhood");
    }
    sel.bandwidth = sel.candidates[sel.index];
    return sel;
}

BandwidthSelection select_bandwidth_cv(const Dataset& d, Kernel k, std::span<const double> grid) {
    return select_bandwidth_cv(LoocvProblem(d), k, grid);
}

NeighborSelection select_k_cv(const LoocvProblem& problem, std::span<const std::size_t> k_grid) {
    if (k_grid.empty()) {
        throw InvalidArgument("neighbor grid is empty");
    }
    NeighborSelection sel;
    sel.candidates = sorted_candidates(k_grid);
    sel.scores = problem.knn_scores(sel.candidates);
    sel.index = argmin_finite(sel.scores);
    if (sel.index == static_cast<std::size_t>(-1)) {
        throw NoFeasibleBandwidth("every neighbor count yields a degenerate direction");
    }
    sel.neighbors = sel.candidates[sel.index];
    return sel;
}

NeighborSelection select_k_cv(const Dataset& d, std::span<const std::size_t> k_grid) {
    return select_k_cv(LoocvProblem(d), k_grid);
}

double case_error(std::span<const Angle> predictions, std::span<const Angle> truth) {
    if (predictions.empty() || predictions.size() != truth.size()) {
        throw InvalidArgument("CASE needs equal, nonempty prediction and truth lists");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        sum += cos_dissimilarity(truth[i], predictions[i]);
    }
    return sum / static_cast<double>(truth.size());
}

std::map<std::string, double> cape(std::span<const Angle> observed, std::span<const Angle> predicted,
                                   std::span<const std::string> groups,
                                   std::span<const std::string> required_groups) {
    if (observed.size() != predicted.size() || observed.size() != groups.size()) {
        throw InvalidArgument("CAPE needs one group label per observed/predicted pair");
    }
    std::map<std::string, std::pair<double, std::size_t>> acc;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        auto& [sum, count] = acc[groups[i]];
        sum += cos_dissimilarity(observed[i], predicted[i]);
        ++count;
    }
    for (const auto& g : required_groups) {
        if (!acc.contains(g)) {
            throw InvalidArgument("group '" + g + "' has no observations");
        }
    }
    std::map<std::string, double> out;
    for (const auto& [g, v] : acc) {
        out[g] = v.first / static_cast<double>(v.second);
    }
    return out;
}

}  // namespace funcirc
