#include "funcirc/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "funcirc/errors.hpp"

namespace funcirc {

std::string_view kernel_name(Kernel k) {
    switch (k) {
        case Kernel::uniform:
            return "uniform";
        case Kernel::quadratic:
            return "quadratic";
    }
    return "unknown";
}

Kernel parse_kernel(std::string_view name) {
    if (name == "uniform") {
        return Kernel::uniform;
    }
    if (name == "quadratic") {
        return Kernel::quadratic;
    }
    throw InvalidArgument("unknown kernel '" + std::string(name) + "' (expected uniform or quadratic)");
}

double kernel_eval(Kernel k, double u) {
    if (!(u >= 0.0)) {
        throw InvalidArgument("kernel argument must be >= 0");
    }
    switch (k) {
        case Kernel::uniform:
            return u <= 1.0 ? 1.0 : 0.0;
        case Kernel::quadratic:
            return u < 1.0 ? 1.0 - u * u : 0.0;
    }
    return 0.0;
}

std::vector<double> nw_weights(std::span<const double> distances, double h, Kernel k) {
    if (!(h > 0.0) || !std::isfinite(h)) {
        throw InvalidArgument("bandwidth must be finite and > 0");
    }
    std::vector<double> w;
    w.reserve(distances.size());
    double total = 0.0;
    for (double d : distances) {
        w.push_back(kernel_eval(k, d / h));
        total += w.back();
    }
    if (!(total > 0.0)) {
        throw EmptyNeighborhood("");
    }
    for (double& x : w) {
        x /= total;
    }
    return w;
}

double small_ball_estimate(std::span<const double> distances, double h) {
    if (distances.empty()) {
        throw InvalidArgument("small-ball estimate needs at least one distance");
    }
    const auto inside = std::count_if(distances.begin(), distances.end(), [h](double d) { return d <= h; });
    return static_cast<double>(inside) / static_cast<double>(distances.size());
}

double quantile(std::vector<double> values, double q) {
    if (values.empty() || !(q >= 0.0 && q <= 1.0)) {
        throw InvalidArgument("quantile needs a nonempty sample and q in [0, 1]");
    }
    std::sort(values.begin(), values.end());
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

std::vector<double> bandwidth_grid(const DistanceMatrix& dm, const BandwidthGridParams& params) {
    if (params.size < 2 || !(params.lo_q > 0.0) || !(params.lo_q < params.hi_q) || params.hi_q > 1.0) {
        throw InvalidArgument("bandwidth grid needs size >= 2 and 0 < lo_q < hi_q <= 1");
    }
    if (dm.size() < 2) {
        throw InvalidArgument("bandwidth grid needs at least two curves");
    }
    std::vector<double> positive;
    for (std::size_t i = 0; i < dm.size(); ++i) {
        for (std::size_t j = i + 1; j < dm.size(); ++j) {
            if (dm(i, j) > 0.0) {
                positive.push_back(dm(i, j));
            }
        }
    }
    if (positive.empty()) {
        throw DegenerateDataset("all pairwise curve distances are zero");
    }
    const double lo = quantile(positive, params.lo_q);
    const double hi = quantile(std::move(positive), params.hi_q);
    std::vector<double> grid(params.size);
    const double ratio = hi / lo;
    for (std::size_t g = 0; g < params.size; ++g) {
        grid[g] = lo * std::pow(ratio, static_cast<double>(g) / static_cast<double>(params.size - 1));
    }
    grid.front() = lo;
    grid.back() = hi;
    return grid;
}

}  // namespace funcirc
