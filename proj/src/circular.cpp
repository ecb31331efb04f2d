#include "funcirc/circular.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "funcirc/errors.hpp"

namespace funcirc {

Angle Angle::from_radians(double radians) {
    if (!std::isfinite(radians)) {
        throw InvalidArgument("angle must be finite, got " + std::to_string(radians));
    }
    double r = std::fmod(radians, kTwoPi);
    if (r < 0.0) {
        r += kTwoPi;
    }
    // r + 2pi can round up to exactly 2pi for tiny negative r.
    if (r >= kTwoPi) {
        r = 0.0;
    }
    return Angle(r);
}

Angle wrap_angle(double radians) { return Angle::from_radians(radians); }

Angle atan2_dir(double s, double c) {
    if (s == 0.0 && c == 0.0) {
        throw DegenerateDirection("atan2 of the zero vector is undefined");
    }
    return Angle::from_radians(std::atan2(s, c));
}

namespace {

struct Resultant {
    double mean_sin = 0.0;
    double mean_cos = 0.0;
};

Resultant resultant(std::span<const Angle> sample) {
    if (sample.empty()) {
        throw InvalidArgument("circular sample is empty");
    }
    double s = 0.0;
    double c = 0.0;
    for (Angle a : sample) {
        s += std::sin(a.radians());
        c += std::cos(a.radians());
    }
    const auto n = static_cast<double>(sample.size());
    return {s / n, c / n};
}

}  // namespace

Angle circ_mean(std::span<const Angle> sample) {
    const Resultant r = resultant(sample);
    if (std::hypot(r.mean_sin, r.mean_cos) <= 1e-15) {
        throw DegenerateDirection("zero resultant length, mean direction undefined");
    }
    return atan2_dir(r.mean_sin, r.mean_cos);
}

double mean_resultant_length(std::span<const Angle> sample) {
    const Resultant r = resultant(sample);
    return std::min(1.0, std::hypot(r.mean_sin, r.mean_cos));
}

double cos_dissimilarity(Angle a, Angle b) { return 1.0 - std::cos(a.radians() - b.radians()); }

double circular_distance(Angle a, Angle b) {
    const double d = std::fabs(a.radians() - b.radians());
    return std::min(d, kTwoPi - d);
}

double signed_deviation(Angle a, Angle b) {
    double d = (a - b).radians();
    if (d > std::numbers::pi) {
        d -= kTwoPi;
    }
    return d;
}

CircularSummary circ_error_summary(std::span<const Angle> errors) {
    if (errors.empty()) {
        throw InvalidArgument("error sample is empty");
    }
    CircularSummary out;
    out.count = errors.size();

    double best = 0.0;
    for (std::size_t c = 0; c < errors.size(); ++c) {
        double loss = 0.0;
        for (Angle e : errors) {
            loss += cos_dissimilarity(e, errors[c]);
        }
        if (c == 0 || loss < best) {
            best = loss;
            out.median = errors[c];
        }
    }

    std::vector<double> dev;
    dev.reserve(errors.size());
    double cos_loss = 0.0;
    for (Angle e : errors) {
        dev.push_back(signed_deviation(e, out.median));
        cos_loss += 1.0 - std::cos(e.radians());
    }
    std::sort(dev.begin(), dev.end());
    auto nearest_rank = [&](double p) {
        const auto n = static_cast<double>(dev.size());
        auto rank = static_cast<std::size_t>(std::ceil(p * n));
        rank = std::clamp<std::size_t>(rank, 1, dev.size());
        return dev[rank - 1];
    };
    out.lower_quartile_offset = nearest_rank(0.25);
    out.upper_quartile_offset = nearest_rank(0.75);
    out.mean_cosine_error = cos_loss / static_cast<double>(errors.size());
    return out;
}

}  // namespace funcirc
