#ifndef FUNCIRC_RANDOM_HPP
#define FUNCIRC_RANDOM_HPP

#include <cstdint>
#include <random>

#include "funcirc/circular.hpp"

namespace funcirc {

/**
 * Seeded generator used by every stochastic routine.
 *
 * The engine is std::mt19937_64, whose output sequence is fixed by the C++
 * standard; conversions to real numbers are done here rather than through
 * <random> distributions so draws are identical across standard libraries.
 */
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Independent stream for replicate `index` of a run seeded with `seed`.
    static Rng stream(std::uint64_t seed, std::uint64_t index);

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform on the open interval (0, 1).
    double uniform();

    /// Standard normal via Box-Muller.
    double normal();

private:
    std::mt19937_64 engine_;
};

/// splitmix64 finaliser, used to decorrelate nearby seeds.
std::uint64_t mix_seed(std::uint64_t x);

/**
 * One draw from the von Mises law vM(mu, kappa).
 *
 * Best-Fisher wrapped-Cauchy rejection sampler. kappa == 0 gives the uniform
 * law; very large kappa falls back to a wrapped normal with variance 1/kappa.
 */
Angle sample_von_mises(Angle mu, double kappa, Rng& rng);

}  // namespace funcirc

#endif
