#include "funcirc/random.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "funcirc/errors.hpp"

namespace funcirc {

std::uint64_t mix_seed(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// The seed is mixed before the xor so that runs with nearby seeds do not share replicates.
Rng Rng::stream(std::uint64_t seed, std::uint64_t index) { return Rng(mix_seed(mix_seed(seed) ^ index)); }

double Rng::uniform() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
}

double Rng::normal() {
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
}

Angle sample_von_mises(Angle mu, double kappa, Rng& rng) {
    if (!(kappa >= 0.0) || !std::isfinite(kappa)) {
        throw InvalidArgument("von Mises concentration must be finite and >= 0");
    }
    if (kappa < 1e-8) {
        return Angle::from_radians(kTwoPi * rng.uniform());
    }
    if (kappa > 1e6) {
        return Angle::from_radians(mu.radians() + rng.normal() / std::sqrt(kappa));
    }

    double s = 0.0;
    if (kappa < 1e-5) {
        s = 1.0 / kappa + kappa;
    } else {
        const double tau = 1.0 + std::sqrt(1.0 + 4.0 * kappa * kappa);
        const double rho = (tau - std::sqrt(2.0 * tau)) / (2.0 * kappa);
        s = (1.0 + rho * rho) / (2.0 * rho);
    }

    double w = 0.0;
    while (true) {
        const double z = std::cos(std::numbers::pi * rng.uniform());
        w = (1.0 + s * z) / (s + z);
        const double y = kappa * (s - w);
        const double v = rng.uniform();
        if (y * (2.0 - y) - v >= 0.0 || std::log(y / v) + 1.0 - y >= 0.0) {
            break;
        }
    }
    const double theta = std::acos(std::clamp(w, -1.0, 1.0));
    return Angle::from_radians(rng.uniform() < 0.5 ? mu.radians() - theta : mu.radians() + theta);
}

}  // namespace funcirc
