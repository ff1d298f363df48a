#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace mapfuse {

// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Malformed or inconsistent input data (bad files, duplicate ids, NaN coordinates).
class DataError : public Error {
public:
    explicit DataError(const std::string& what) : Error(what) {}
};

// Geometry that admits no solution (collinear point sets, coincident landmarks,
// unobservable rotation).
class DegenerateGeometryError : public Error {
public:
    explicit DegenerateGeometryError(const std::string& what) : Error(what) {}
};

// The matching pipeline could not find a cluster of mutually consistent
// transform estimates. Distinct from DataError so callers can tell an
// unfusable environment apart from malformed input.
class NoConsensusError : public Error {
public:
    explicit NoConsensusError(const std::string& what) : Error(what) {}
};

inline bool is_finite(double v) { return std::isfinite(v); }

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw DataError(msg);
}

} // namespace mapfuse
