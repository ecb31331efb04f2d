#ifndef FUNCIRC_ERRORS_HPP
#define FUNCIRC_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace funcirc {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// atan2 of a zero vector, or a zero resultant.
class DegenerateDirection : public Error {
public:
    using Error::Error;
};

class IncompatibleGrids : public Error {
public:
    using Error::Error;
};

/// No training curve receives positive kernel weight at the query point.
class EmptyNeighborhood : public Error {
public:
    explicit EmptyNeighborhood(std::string subject)
        : Error("empty neighborhood at " + (subject.empty() ? std::string("<unnamed curve>") : subject)),
          subject_(std::move(subject)) {}

    const std::string& subject() const noexcept { return subject_; }

private:
    std::string subject_;
};

class DegenerateDataset : public Error {
public:
    using Error::Error;
};

class UnsupportedKernel : public Error {
public:
    using Error::Error;
};

class NoFeasibleBandwidth : public Error {
public:
    using Error::Error;
};

/// Malformed file layout (missing header, wrong column count, bad version).
class FormatError : public Error {
public:
    using Error::Error;
};

/// Bad cell content; carries 1-based row and column (0 when not applicable).
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t row, std::size_t column)
        : Error(what), row_(row), column_(column) {}

    std::size_t row() const noexcept { return row_; }
    std::size_t column() const noexcept { return column_; }

private:
    std::size_t row_;
    std::size_t column_;
};

}  // namespace funcirc

#endif
