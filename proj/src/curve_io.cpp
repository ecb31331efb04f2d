#include "funcirc/curve_io.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>

#include "funcirc/errors.hpp"

namespace funcirc {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        std::string cell = line.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
        const auto first = cell.find_first_not_of(" \t\r");
        const auto last = cell.find_last_not_of(" \t\r");
        cells.push_back(first == std::string::npos ? std::string() : cell.substr(first, last - first + 1));
        if (comma == std::string::npos) {
            break;
        }
        start = comma + 1;
    }
    return cells;
}

std::optional<double> parse_double(std::string_view cell) {
    if (!cell.empty() && cell.front() == '+') {
        cell.remove_prefix(1);
    }
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
    if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(value)) {
        return std::nullopt;
    }
    return value;
}

std::string format_double(double x) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, ptr);
}

namespace {

bool is_missing(const std::string& cell) { return cell.empty() || cell == "NA" || cell == "NaN" || cell == "nan"; }

bool next_content_line(std::istream& in, std::string& line, std::size_t& line_no) {
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") != std::string::npos) {
            return true;
        }
    }
    return false;
}

}  // namespace

CurveTable read_curve_table(std::istream& in, const CurveCsvOptions& options) {
    std::string line;
    std::size_t line_no = 0;
    if (!next_content_line(in, line, line_no)) {
        throw FormatError("curve file is empty: missing header");
    }
    const auto header = split_csv_line(line);
    if (header.empty() || header[0] != "id") {
        throw FormatError("curve file must start with an 'id,v0,...' header");
    }
    const std::size_t p = header.size() - 1;
    for (std::size_t j = 0; j < p; ++j) {
        if (header[j + 1] != "v" + std::to_string(j)) {
            throw FormatError("header column " + std::to_string(j + 2) + " should be 'v" + std::to_string(j) +
                              "', found '" + header[j + 1] + "'");
        }
    }
    if (p < 2) {
        throw FormatError("curve file needs at least two value columns");
    }
    if (options.expected_points && *options.expected_points != p) {
        throw FormatError("curve file has " + std::to_string(p) + " value columns, expected " +
                          std::to_string(*options.expected_points));
    }

    CurveTable table;
    bool have_line = next_content_line(in, line, line_no);
    if (have_line && split_csv_line(line).front() == "grid") {
        const auto cells = split_csv_line(line);
        if (cells.size() != p + 1) {
            throw ParseError("grid line has " + std::to_string(cells.size()) + " cells, expected " +
                                 std::to_string(p + 1) + " (line " + std::to_string(line_no) + ")",
                             line_no, 0);
        }
        std::vector<double> t(p);
        for (std::size_t j = 0; j < p; ++j) {
            const auto v = parse_double(cells[j + 1]);
            if (!v) {
                throw ParseError("non-numeric grid value at line " + std::to_string(line_no) + ", column " +
                                     std::to_string(j + 2),
                                 line_no, j + 2);
            }
            t[j] = *v;
        }
        try {
            table.grid = std::make_shared<const Grid>(std::move(t));
        } catch (const InvalidArgument& e) {
            throw FormatError(std::string("invalid grid line: ") + e.what());
        }
        have_line = next_content_line(in, line, line_no);
    } else {
        table.grid = Grid::uniform(p);
    }

    for (; have_line; have_line = next_content_line(in, line, line_no)) {
        const auto cells = split_csv_line(line);
        if (cells.size() != p + 1) {
            throw ParseError("line " + std::to_string(line_no) + " has " + std::to_string(cells.size()) +
                                 " cells, expected " + std::to_string(p + 1),
                             line_no, 0);
        }
        std::vector<double> values(p);
        bool incomplete = false;
        for (std::size_t j = 0; j < p && !incomplete; ++j) {
            const std::string& cell = cells[j + 1];
            if (is_missing(cell)) {
                if (!options.drop_incomplete) {
                    throw ParseError("missing value at line " + std::to_string(line_no) + ", column " +
                                         std::to_string(j + 2) + " (" + header[j + 1] + ")",
                                     line_no, j + 2);
                }
                incomplete = true;
                break;
            }
            const auto v = parse_double(cell);
            if (!v) {
                throw ParseError("non-numeric value '" + cell + "' at line " + std::to_string(line_no) +
                                     ", column " + std::to_string(j + 2) + " (" + header[j + 1] + ")",
                                 line_no, j + 2);
            }
            values[j] = *v;
        }
        if (incomplete) {
            table.dropped_lines.push_back(line_no);
            continue;
        }
        table.ids.push_back(cells[0]);
        table.curves.emplace_back(table.grid, std::move(values));
    }
    if (table.curves.empty()) {
        throw FormatError("curve file contains no complete rows");
    }
    return table;
}

std::vector<Angle> responses_from_dates(const std::vector<std::string>& ids) {
    std::vector<Angle> out;
    out.reserve(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) {
        CalendarDate date;
        if (!parse_iso_date(ids[i], date)) {
            throw ParseError("id '" + ids[i] + "' of row " + std::to_string(i + 1) +
                                 " is not a YYYY-MM-DD date; supply a response file",
                             i + 1, 1);
        }
        out.push_back(date_to_angle(date));
    }
    return out;
}

Dataset read_curves_csv(std::istream& in, const CurveCsvOptions& options) {
    CurveTable table = read_curve_table(in, options);
    auto responses = responses_from_dates(table.ids);
    return Dataset(std::move(table.curves), std::move(responses), std::move(table.ids));
}

std::map<std::string, Angle> read_responses_csv(std::istream& in) {
    std::string line;
    std::size_t line_no = 0;
    if (!next_content_line(in, line, line_no)) {
        throw FormatError("response file is empty: missing header");
    }
    const auto header = split_csv_line(line);
    if (header.size() != 2 || header[0] != "id" || header[1] != "angle_rad") {
        throw FormatError("response file header must be 'id,angle_rad'");
    }
    std::map<std::string, Angle> out;
    while (next_content_line(in, line, line_no)) {
        const auto cells = split_csv_line(line);
        if (cells.size() != 2) {
            throw ParseError("line " + std::to_string(line_no) + " of response file needs 2 cells", line_no, 0);
        }
        const auto v = parse_double(cells[1]);
        if (!v) {
            throw ParseError("non-numeric angle at line " + std::to_string(line_no), line_no, 2);
        }
        if (!out.emplace(cells[0], Angle::from_radians(*v)).second) {
            throw ParseError("duplicate response id '" + cells[0] + "'", line_no, 1);
        }
    }
    return out;
}

Dataset attach_responses(const CurveTable& table, const std::map<std::string, Angle>& responses) {
    std::vector<Angle> r;
    r.reserve(table.ids.size());
    for (const auto& id : table.ids) {
        const auto it = responses.find(id);
        if (it == responses.end()) {
            throw FormatError("no response for curve id '" + id + "'");
        }
        r.push_back(it->second);
    }
    return Dataset(table.curves, std::move(r), table.ids);
}

void write_curves_csv(std::ostream& out, const std::vector<Curve>& curves, const std::vector<std::string>& ids,
                      bool write_grid_line) {
    if (curves.empty() || ids.size() != curves.size()) {
        throw InvalidArgument("write_curves_csv needs one id per curve");
    }
    const GridPtr& grid = curves.front().grid();
    out << "id";
    for (std::size_t j = 0; j < grid->size(); ++j) {
        out << ",v" << j;
    }
    out << '\n';
    if (write_grid_line) {
        out << "grid";
        for (double t : grid->points()) {
            out << ',' << format_double(t);
        }
        out << '\n';
    }
    for (std::size_t i = 0; i < curves.size(); ++i) {
        out << ids[i];
        for (double v : curves[i].values()) {
            out << ',' << format_double(v);
        }
        out << '\n';
    }
}

}  // namespace funcirc
