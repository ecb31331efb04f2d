#ifndef FUNCIRC_FUNCTIONAL_HPP
#define FUNCIRC_FUNCTIONAL_HPP

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "funcirc/circular.hpp"

namespace funcirc {

/// Strictly increasing abscissae shared by a family of curves.
class Grid {
public:
    explicit Grid(std::vector<double> points);

    /// `size` equispaced points covering [lo, hi].
    static std::shared_ptr<const Grid> uniform(std::size_t size, double lo = 0.0, double hi = 1.0);

    std::size_t size() const noexcept { return points_.size(); }
    std::span<const double> points() const noexcept { return points_; }

    /// Trapezoid weights: integral of f ~ sum_j weight_j * f(t_j).
    std::span<const double> weights() const noexcept { return weights_; }

    bool operator==(const Grid& other) const { return points_ == other.points_; }

private:
    std::vector<double> points_;
    std::vector<double> weights_;
};

using GridPtr = std::shared_ptr<const Grid>;

bool same_grid(const GridPtr& a, const GridPtr& b);

class Curve {
public:
    Curve(GridPtr grid, std::vector<double> values);

    const GridPtr& grid() const noexcept { return grid_; }
    std::span<const double> values() const noexcept { return values_; }
    std::size_t size() const noexcept { return values_.size(); }

private:
    GridPtr grid_;
    std::vector<double> values_;
};

/// Paired (curve, angle) observations on one common grid.
class Dataset {
public:
    Dataset(std::vector<Curve> curves, std::vector<Angle> responses, std::vector<std::string> ids = {});

    std::size_t size() const noexcept { return curves_.size(); }
    const GridPtr& grid() const noexcept { return curves_.front().grid(); }
    const std::vector<Curve>& curves() const noexcept { return curves_; }
    const std::vector<Angle>& responses() const noexcept { return responses_; }
    const std::vector<std::string>& ids() const noexcept { return ids_; }
    bool has_ids() const noexcept { return !ids_.empty(); }

    /// Same curves and ids with responses replaced.
    Dataset with_responses(std::vector<Angle> responses) const;
    /// Copy without observation `index`.
    Dataset without(std::size_t index) const;

private:
    std::vector<Curve> curves_;
    std::vector<Angle> responses_;
    std::vector<std::string> ids_;
};

double integrate_curve(const Curve& c);

/// L2 distance by trapezoidal quadrature. Throws IncompatibleGrids.
double l2_distance(const Curve& a, const Curve& b);

/// Dense symmetric matrix of pairwise curve distances.
class DistanceMatrix {
public:
    DistanceMatrix() = default;
    explicit DistanceMatrix(std::size_t n) : n_(n), data_(n * n, 0.0) {}

    std::size_t size() const noexcept { return n_; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * n_ + j]; }
    double& operator()(std::size_t i, std::size_t j) { return data_[i * n_ + j]; }
    std::span<const double> row(std::size_t i) const { return {data_.data() + i * n_, n_}; }

private:
    std::size_t n_ = 0;
    std::vector<double> data_;
};

DistanceMatrix distance_matrix(std::span<const Curve> curves);
DistanceMatrix distance_matrix(const Dataset& d);

/// Distances from `query` to every training curve of `d`.
std::vector<double> distances_to(const Dataset& d, const Curve& query);

/// X(t) = amplitude * u * (1 - t) * t^(1 + u).
Curve simulate_curve(double u, const GridPtr& grid, double amplitude = 30.0);

/// 2pi (day - 1) / year_length for a 1-based day index.
Angle day_to_angle(double day_index, int year_length);
double angle_to_day(Angle a, int year_length);

struct CalendarDate {
    int year = 0;
    unsigned month = 0;
    unsigned day = 0;
};

/// Strict YYYY-MM-DD parse; returns false on anything else or an invalid date.
bool parse_iso_date(std::string_view text, CalendarDate& out);
int day_of_year(const CalendarDate& date);
int year_length(int year);
Angle date_to_angle(const CalendarDate& date);

}  // namespace funcirc

#endif
