#ifndef FUNCIRC_CIRCULAR_HPP
#define FUNCIRC_CIRCULAR_HPP

#include <numbers>
#include <span>
#include <vector>

namespace funcirc {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/**
 * A direction on the unit circle, stored as radians in [0, 2pi).
 *
 * The only way to build an Angle from an arbitrary real is through wrapping,
 * so every instance satisfies the range invariant.
 */
class Angle {
public:
    constexpr Angle() = default;

    /// Wraps `radians` into [0, 2pi). Throws InvalidArgument if not finite.
    static Angle from_radians(double radians);

    constexpr double radians() const noexcept { return value_; }

    Angle operator+(Angle other) const { return from_radians(value_ + other.value_); }
    Angle operator-(Angle other) const { return from_radians(value_ - other.value_); }

    friend constexpr bool operator==(Angle, Angle) = default;

private:
    explicit constexpr Angle(double v) : value_(v) {}
    double value_ = 0.0;
};

using CircularSample = std::vector<Angle>;

Angle wrap_angle(double radians);

/// Direction of the vector (c, s). Throws DegenerateDirection for (0, 0).
Angle atan2_dir(double s, double c);

Angle circ_mean(std::span<const Angle> sample);
double mean_resultant_length(std::span<const Angle> sample);

/// 1 - cos(a - b), in [0, 2].
double cos_dissimilarity(Angle a, Angle b);

/// Arc length between a and b, in [0, pi].
double circular_distance(Angle a, Angle b);

/// a - b expressed in (-pi, pi].
double signed_deviation(Angle a, Angle b);

struct CircularSummary {
    Angle median;
    double lower_quartile_offset = 0.0;
    double upper_quartile_offset = 0.0;
    double mean_cosine_error = 0.0;
    std::size_t count = 0;
};

/**
 * Summary of a sample of circular prediction errors.
 *
 * The median is the sample point minimising sum(1 - cos(x_i - m)); ties keep
 * the earliest point. Quartile offsets are nearest-rank quantiles of the
 * signed deviations from that median. mean_cosine_error is mean(1 - cos x_i).
 */
CircularSummary circ_error_summary(std::span<const Angle> errors);

}  // namespace funcirc

#endif
