#ifndef FUNCIRC_KERNEL_HPP
#define FUNCIRC_KERNEL_HPP

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "funcirc/functional.hpp"

namespace funcirc {

/// Kernels supported on [0, 1].
enum class Kernel {
    uniform,    ///< K(u) = 1 on [0, 1]
    quadratic,  ///< K(u) = 1 - u^2 on [0, 1)
};

std::string_view kernel_name(Kernel k);
/// Throws InvalidArgument for unknown names.
Kernel parse_kernel(std::string_view name);

/// Throws InvalidArgument for negative or NaN u.
double kernel_eval(Kernel k, double u);

/// Normalised Nadaraya-Watson weights K(d_i / h) / sum_j K(d_j / h).
/// Throws EmptyNeighborhood when every kernel value is zero.
std::vector<double> nw_weights(std::span<const double> distances, double h, Kernel k);

/// Fraction of distances that are <= h.
double small_ball_estimate(std::span<const double> distances, double h);

/// Sample quantile with linear interpolation between order statistics.
double quantile(std::vector<double> values, double q);

struct BandwidthGridParams {
    std::size_t size = 25;
    double lo_q = 0.05;
    double hi_q = 1.0;
};

/**
 * Geometric bandwidth ladder between the lo_q and hi_q quantiles of the
 * strictly positive off-diagonal distances. Throws DegenerateDataset when no
 * positive distance exists.
 */
std::vector<double> bandwidth_grid(const DistanceMatrix& dm, const BandwidthGridParams& params = {});

}  // namespace funcirc

#endif
