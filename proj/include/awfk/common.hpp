#pragma once

#include <cmath>
#include <cstddef>
#include <cstdio>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace awfk {

/// Raised for invalid configuration: bad hyperparameters, bad flags,
/// inconsistent shapes requested by the caller.
class config_error : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised for bad data: unreadable files, parse failures, non-finite inputs.
class data_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Non-owning view of a row-major matrix.
struct MatrixView {
    const double* data = nullptr;
    std::size_t rows = 0;
    std::size_t cols = 0;

    std::span<const double> row(std::size_t i) const {
        return {data + i * cols, cols};
    }
};

inline void require_finite(std::span<const double> x, const char* what) {
    for (double v : x) {
        if (!std::isfinite(v)) {
            throw data_error(std::string(what) + ": non-finite value");
        }
    }
}

/// Shortest round-trippable decimal representation, 17 significant digits.
inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
    double d2 = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        const double d = a[k] - b[k];
        d2 += d * d;
    }
    return d2;
}

inline double squared_norm(std::span<const double> x) {
    double n2 = 0.0;
    for (double v : x) n2 += v * v;
    return n2;
}

} // namespace awfk
