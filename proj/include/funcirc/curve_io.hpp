#ifndef FUNCIRC_CURVE_IO_HPP
#define FUNCIRC_CURVE_IO_HPP

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "funcirc/functional.hpp"

namespace funcirc {

/*
 * Wide curve files:
 *
 *   id,v0,v1,...,v{p-1}
 *   grid,t0,t1,...,t{p-1}      (optional; default is uniform on [0, 1])
 *   2003-01-01,8.1,8.0,...
 *
 * Response files, when responses are not implied by date ids:
 *
 *   id,angle_rad
 */

struct CurveCsvOptions {
    /// Drop rows with missing cells instead of failing.
    bool drop_incomplete = false;
    /// Required number of value columns, if any.
    std::optional<std::size_t> expected_points;
};

struct CurveTable {
    GridPtr grid;
    std::vector<Curve> curves;
    std::vector<std::string> ids;
    /// 1-based line numbers of rows dropped under drop_incomplete.
    std::vector<std::size_t> dropped_lines;
};

CurveTable read_curve_table(std::istream& in, const CurveCsvOptions& options = {});

/// Curves plus responses derived from ISO-date ids via the day of the year.
Dataset read_curves_csv(std::istream& in, const CurveCsvOptions& options = {});

/// Responses from date ids; throws ParseError naming the first non-date id.
std::vector<Angle> responses_from_dates(const std::vector<std::string>& ids);

std::map<std::string, Angle> read_responses_csv(std::istream& in);

/// Joins a response file onto a curve table by id.
Dataset attach_responses(const CurveTable& table, const std::map<std::string, Angle>& responses);

void write_curves_csv(std::ostream& out, const std::vector<Curve>& curves, const std::vector<std::string>& ids,
                      bool write_grid_line);

/// Splits one CSV line on commas and trims surrounding blanks from each cell.
std::vector<std::string> split_csv_line(const std::string& line);

/// Parses a complete decimal number; nullopt if the cell is not a finite number.
std::optional<double> parse_double(std::string_view cell);

/// Shortest decimal string that reads back to exactly `x`.
std::string format_double(double x);

}  // namespace funcirc

#endif
