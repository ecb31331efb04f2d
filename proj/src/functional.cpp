#include "funcirc/functional.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <string>

#include "funcirc/errors.hpp"

namespace funcirc {

Grid::Grid(std::vector<double> points) : points_(std::move(points)) {
    if (points_.size() < 2) {
        throw InvalidArgument("grid needs at least two points");
    }
    for (std::size_t j = 0; j < points_.size(); ++j) {
        if (!std::isfinite(points_[j])) {
            throw InvalidArgument("grid points must be finite");
        }
        if (j > 0 && !(points_[j] > points_[j - 1])) {
            throw InvalidArgument("grid points must be strictly increasing");
        }
    }
    const std::size_t p = points_.size();
    weights_.assign(p, 0.0);
    for (std::size_t j = 0; j + 1 < p; ++j) {
        const double half = 0.5 * (points_[j + 1] - points_[j]);
        weights_[j] += half;
        weights_[j + 1] += half;
    }
}

GridPtr Grid::uniform(std::size_t size, double lo, double hi) {
    if (size < 2 || !(hi > lo)) {
        throw InvalidArgument("uniform grid needs size >= 2 and hi > lo");
    }
    std::vector<double> t(size);
    const double step = (hi - lo) / static_cast<double>(size - 1);
    for (std::size_t j = 0; j < size; ++j) {
        t[j] = lo + step * static_cast<double>(j);
    }
    t.back() = hi;
    return std::make_shared<const Grid>(std::move(t));
}

bool same_grid(const GridPtr& a, const GridPtr& b) { return a == b || (a && b && *a == *b); }

Curve::Curve(GridPtr grid, std::vector<double> values) : grid_(std::move(grid)), values_(std::move(values)) {
    if (!grid_) {
        throw InvalidArgument("curve requires a grid");
    }
    if (values_.size() != grid_->size()) {
        throw InvalidArgument("curve has " + std::to_string(values_.size()) + " values for a grid of " +
                              std::to_string(grid_->size()) + " points");
    }
    for (double v : values_) {
        if (!std::isfinite(v)) {
            throw InvalidArgument("curve values must be finite");
        }
    }
}

Dataset::Dataset(std::vector<Curve> curves, std::vector<Angle> responses, std::vector<std::string> ids)
    : curves_(std::move(curves)), responses_(std::move(responses)), ids_(std::move(ids)) {
    if (curves_.empty()) {
        throw InvalidArgument("dataset needs at least one observation");
    }
    if (responses_.size() != curves_.size()) {
        throw InvalidArgument("dataset has " + std::to_string(curves_.size()) + " curves but " +
                              std::to_string(responses_.size()) + " responses");
    }
    if (!ids_.empty() && ids_.size() != curves_.size()) {
        throw InvalidArgument("dataset ids must match the number of curves");
    }
    const GridPtr& g = curves_.front().grid();
    for (const Curve& c : curves_) {
        if (!same_grid(g, c.grid())) {
            throw IncompatibleGrids("dataset curves must share one grid");
        }
    }
}

Dataset Dataset::with_responses(std::vector<Angle> responses) const {
    return Dataset(curves_, std::move(responses), ids_);
}

Dataset Dataset::without(std::size_t index) const {
    if (index >= size() || size() < 2) {
        throw InvalidArgument("cannot drop observation " + std::to_string(index));
    }
    std::vector<Curve> c;
    std::vector<Angle> r;
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < size(); ++i) {
        if (i == index) {
            continue;
        }
        c.push_back(curves_[i]);
        r.push_back(responses_[i]);
        if (has_ids()) {
            ids.push_back(ids_[i]);
        }
    }
    return Dataset(std::move(c), std::move(r), std::move(ids));
}

double integrate_curve(const Curve& c) {
    const auto w = c.grid()->weights();
    const auto v = c.values();
    double sum = 0.0;
    for (std::size_t j = 0; j < v.size(); ++j) {
        sum += w[j] * v[j];
    }
    return sum;
}

double l2_distance(const Curve& a, const Curve& b) {
    if (!same_grid(a.grid(), b.grid())) {
        throw IncompatibleGrids("curves are observed on different grids");
    }
    const auto w = a.grid()->weights();
    const auto x = a.values();
    const auto y = b.values();
    double sum = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
        const double diff = x[j] - y[j];
        sum += w[j] * diff * diff;
    }
    return std::sqrt(sum);
}

DistanceMatrix distance_matrix(std::span<const Curve> curves) {
    DistanceMatrix dm(curves.size());
    for (std::size_t i = 0; i < curves.size(); ++i) {
        for (std::size_t j = i + 1; j < curves.size(); ++j) {
            const double d = l2_distance(curves[i], curves[j]);
            dm(i, j) = d;
            dm(j, i) = d;
        }
    }
    return dm;
}

DistanceMatrix distance_matrix(const Dataset& d) { return distance_matrix(d.curves()); }

std::vector<double> distances_to(const Dataset& d, const Curve& query) {
    std::vector<double> out;
    out.reserve(d.size());
    for (const Curve& c : d.curves()) {
        out.push_back(l2_distance(c, query));
    }
    return out;
}

Curve simulate_curve(double u, const GridPtr& grid, double amplitude) {
    if (!(u >= 0.0 && u <= 1.0)) {
        throw InvalidArgument("curve parameter u must lie in [0, 1]");
    }
    if (!grid) {
        throw InvalidArgument("simulate_curve requires a grid");
    }
    std::vector<double> values;
    values.reserve(grid->size());
    for (double t : grid->points()) {
        if (t < 0.0 || t > 1.0) {
            throw InvalidArgument("simulated curves live on [0, 1]");
        }
        values.push_back(amplitude * u * (1.0 - t) * std::pow(t, 1.0 + u));
    }
    return Curve(grid, std::move(values));
}

Angle day_to_angle(double day_index, int year_length) {
    if (year_length < 1 || !(day_index >= 1.0) || day_index > year_length) {
        throw InvalidArgument("day " + std::to_string(day_index) + " outside a year of " +
                              std::to_string(year_length) + " days");
    }
    return Angle::from_radians(kTwoPi * (day_index - 1.0) / static_cast<double>(year_length));
}

double angle_to_day(Angle a, int year_length) {
    return 1.0 + static_cast<double>(year_length) * a.radians() / kTwoPi;
}

bool parse_iso_date(std::string_view text, CalendarDate& out) {
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') {
        return false;
    }
    auto field = [&](std::size_t pos, std::size_t len, int& value) {
        const char* first = text.data() + pos;
        const char* last = first + len;
        auto [ptr, ec] = std::from_chars(first, last, value);
        return ec == std::errc() && ptr == last;
    };
    int y = 0;
    int m = 0;
    int d = 0;
    if (!field(0, 4, y) || !field(5, 2, m) || !field(8, 2, d) || m < 1 || d < 1) {
        return false;
    }
    const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(m)},
                                          std::chrono::day{static_cast<unsigned>(d)}};
    if (!ymd.ok()) {
        return false;
    }
    out = {y, static_cast<unsigned>(m), static_cast<unsigned>(d)};
    return true;
}

int day_of_year(const CalendarDate& date) {
    using namespace std::chrono;
    const sys_days day{year{date.year} / month{date.month} / std::chrono::day{date.day}};
    const sys_days first{year{date.year} / January / 1};
    return static_cast<int>((day - first).count()) + 1;
}

int year_length(int y) { return std::chrono::year{y}.is_leap() ? 366 : 365; }

Angle date_to_angle(const CalendarDate& date) { return day_to_angle(day_of_year(date), year_length(date.year)); }

}  // namespace funcirc
