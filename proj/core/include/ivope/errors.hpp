#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace ivope {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// The instrument is too weak at an evaluation point: |E[A|Z=1,s] - E[A|Z=0,s]| < δ_min.
class IvWeakError : public Error {
public:
    IvWeakError(double gap, double floor)
        : Error("weak instrument: |p1A - p0A| = " + std::to_string(gap) + " < " + std::to_string(floor)),
          gap_(gap) {}
    double gap() const noexcept { return gap_; }

private:
    double gap_;
};

/// An iterative solver stopped without meeting its tolerance.
class NonConvergence : public Error {
public:
    NonConvergence(const std::string& what, std::vector<double> history)
        : Error(what), history_(std::move(history)) {}
    const std::vector<double>& history() const noexcept { return history_; }

private:
    std::vector<double> history_;
};

/// A linear system is rank deficient.
class SingularSystem : public Error {
public:
    using Error::Error;
};

/// An importance weight denominator fell below the overlap floor.
class OverlapError : public Error {
public:
    using Error::Error;
};

/// Malformed input file.
class ParseError : public Error {
public:
    ParseError(const std::string& what, int line)
        : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
    int line() const noexcept { return line_; }

private:
    int line_;
};

}  // namespace ivope
