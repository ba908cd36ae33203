#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

namespace mvlab {

using Vec = std::vector<double>;

// Thrown for malformed arguments and config files. The CLI maps this to exit code 2.
struct ArgumentError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Thrown when an iteration fails to converge or a trajectory blows up. Exit code 3.
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Thrown for model families outside the supported class (wrong tail sign, even degree).
struct UnsupportedModelError : ArgumentError {
    using ArgumentError::ArgumentError;
};

inline double sq(double x) { return x * x; }

inline double dot(const double* a, const double* b, std::size_t d) {
    double s = 0.0;
    for (std::size_t i = 0; i < d; ++i) s += a[i] * b[i];
    return s;
}

inline double norm2_sq(const double* a, std::size_t d) { return dot(a, a, d); }

// Euclidean distance between two points of dimension d.
inline double dist(const double* a, const double* b, std::size_t d) {
    double s = 0.0;
    for (std::size_t i = 0; i < d; ++i) s += sq(a[i] - b[i]);
    return std::sqrt(s);
}

inline double norm2_sq(const Vec& a) { return norm2_sq(a.data(), a.size()); }

inline double dist(const Vec& a, const Vec& b) {
    if (a.size() != b.size()) throw ArgumentError("dimension mismatch");
    return dist(a.data(), b.data(), a.size());
}

// Componentwise x <= y.
inline bool leq_componentwise(const double* x, const double* y, std::size_t d) {
    for (std::size_t i = 0; i < d; ++i)
        if (x[i] > y[i]) return false;
    return true;
}

// Shortest-footprint decimal form that reloads to the identical double when
// significant == 17; significant == 6 gives the human-facing rounding.
inline std::string format_double(double v, int significant = 17) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*g", significant, v);
    return std::string(buf);
}

}  // namespace mvlab
