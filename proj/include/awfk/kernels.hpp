#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <thread>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "awfk/common.hpp"

namespace awfk {

enum class Deformation {
    Arcsinh,  // elementwise arcsinh, compresses extreme coordinates
    Identity  // ablation: no deformation
};

/// Parameters of the amnesia-weighted heavy-tailed kernel
///   K(x, y) = w(x) w(y) (1 + ||phi(x) - phi(y)||^2 / lambda)^-(1+s)
/// with w(x) = exp(-eta ||x||^2) and phi applied elementwise.
struct AwfkParams {
    double s = 0.5;        // fractional order, tail heaviness, in (0, 1]
    double lambda = 1.0;   // characteristic scale, > 0
    double eta = 0.0;      // amnesia rate, >= 0; 0 disables the weight
    Deformation deformation = Deformation::Arcsinh;

    void validate() const {
        if (!(s > 0.0 && s <= 1.0)) {
            throw config_error("awfk: fractional order s must satisfy 0 < s <= 1, got " +
                               format_double(s));
        }
        if (!(lambda > 0.0)) {
            throw config_error("awfk: scale lambda must be > 0, got " + format_double(lambda));
        }
        if (!(eta >= 0.0)) {
            throw config_error("awfk: amnesia rate eta must be >= 0, got " + format_double(eta));
        }
    }
};

struct RbfParams {
    double gamma = 1.0;  // inverse squared length-scale, > 0

    void validate() const {
        if (!(gamma > 0.0)) {
            throw config_error("rbf: gamma must be > 0, got " + format_double(gamma));
        }
    }
};

/// Tagged union selecting the kernel and its hyperparameters.
struct KernelSpec {
    std::variant<RbfParams, AwfkParams> variant;

    static KernelSpec rbf(double gamma) {
        KernelSpec k{RbfParams{gamma}};
        k.validate();
        return k;
    }
    static KernelSpec awfk(double s, double lambda, double eta,
                           Deformation d = Deformation::Arcsinh) {
        KernelSpec k{AwfkParams{s, lambda, eta, d}};
        k.validate();
        return k;
    }

    bool is_awfk() const { return std::holds_alternative<AwfkParams>(variant); }
    const AwfkParams& awfk_params() const { return std::get<AwfkParams>(variant); }
    const RbfParams& rbf_params() const { return std::get<RbfParams>(variant); }

    void validate() const {
        std::visit([](const auto& p) { p.validate(); }, variant);
    }
};

/// Elementwise geometric deformation phi(x)_k = arcsinh(x_k).
inline std::vector<double> deform(std::span<const double> x) {
    require_finite(x, "deform");
    std::vector<double> out(x.size());
    std::transform(x.begin(), x.end(), out.begin(),
                   [](double v) { return std::asinh(v); });
    return out;
}

/// Amnesia weight w(x) = exp(-eta ||x||^2), in (0, 1].
inline double amnesia_weight(std::span<const double> x, double eta) {
    if (!(eta >= 0.0)) throw config_error("amnesia_weight: eta must be >= 0");
    require_finite(x, "amnesia_weight");
    return std::exp(-eta * squared_norm(x));
}

namespace detail {

inline double deformed_sqdist(std::span<const double> x, std::span<const double> y,
                              Deformation d) {
    double d2 = 0.0;
    if (d == Deformation::Arcsinh) {
        for (std::size_t k = 0; k < x.size(); ++k) {
            const double diff = std::asinh(x[k]) - std::asinh(y[k]);
            d2 += diff * diff;
        }
    } else {
        d2 = squared_distance(x, y);
    }
    return d2;
}

// Kernel evaluation without input validation, for inner loops.
inline double awfk_unchecked(std::span<const double> x, std::span<const double> y,
                             const AwfkParams& p) {
    const double d2 = deformed_sqdist(x, y, p.deformation);
    double k = std::pow(1.0 + d2 / p.lambda, -(1.0 + p.s));
    if (p.eta > 0.0) {
        k *= std::exp(-p.eta * (squared_norm(x) + squared_norm(y)));
    }
    return k;
}

inline double rbf_unchecked(std::span<const double> x, std::span<const double> y,
                            const RbfParams& p) {
    return std::exp(-p.gamma * squared_distance(x, y));
}

inline double kernel_unchecked(std::span<const double> x, std::span<const double> y,
                               const KernelSpec& spec) {
    if (const auto* p = std::get_if<AwfkParams>(&spec.variant)) {
        return awfk_unchecked(x, y, *p);
    }
    return rbf_unchecked(x, y, std::get<RbfParams>(spec.variant));
}

inline void check_pair(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) {
        throw config_error("kernel: dimension mismatch (" + std::to_string(x.size()) +
                           " vs " + std::to_string(y.size()) + ")");
    }
    require_finite(x, "kernel");
    require_finite(y, "kernel");
}

} // namespace detail

inline double awfk(std::span<const double> x, std::span<const double> y, const AwfkParams& p) {
    p.validate();
    detail::check_pair(x, y);
    return detail::awfk_unchecked(x, y, p);
}

inline double rbf(std::span<const double> x, std::span<const double> y, const RbfParams& p) {
    p.validate();
    detail::check_pair(x, y);
    return detail::rbf_unchecked(x, y, p);
}

inline double kernel_value(std::span<const double> x, std::span<const double> y,
                           const KernelSpec& spec) {
    spec.validate();
    detail::check_pair(x, y);
    return detail::kernel_unchecked(x, y, spec);
}

/// Symmetric N x N kernel cache with provenance.
struct GramMatrix {
    std::vector<double> values;  // row-major n x n
    std::size_t n = 0;
    KernelSpec spec;
    bool symmetrized = false;

    double operator()(std::size_t i, std::size_t j) const { return values[i * n + j]; }
    double max_abs() const {
        double m = 0.0;
        for (double v : values) m = std::max(m, std::abs(v));
        return m;
    }
};

namespace detail {

// Splits [0, n) into contiguous chunks and runs fn(begin, end) on each.
// Entries are written independently, so results do not depend on the
// number of threads.
template <typename Fn>
void parallel_rows(std::size_t n, unsigned n_threads, Fn&& fn) {
    if (n_threads <= 1 || n < 64) {
        fn(std::size_t{0}, n);
        return;
    }
    const std::size_t chunk = (n + n_threads - 1) / n_threads;
    std::vector<std::thread> pool;
    for (std::size_t begin = 0; begin < n; begin += chunk) {
        const std::size_t end = std::min(begin + chunk, n);
        pool.emplace_back([&fn, begin, end] { fn(begin, end); });
    }
    for (auto& t : pool) t.join();
}

} // namespace detail

inline unsigned default_threads() {
    const unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : hc;
}

/// Full N x N kernel matrix; O(N^2 D). A symmetrization pass averages (i,j)
/// and (j,i) so eigensolvers see an exactly symmetric matrix.
inline GramMatrix gram(MatrixView data, const KernelSpec& spec,
                       unsigned n_threads = default_threads()) {
    spec.validate();
    if (data.rows == 0) throw config_error("gram: need at least one row");
    for (std::size_t i = 0; i < data.rows; ++i) {
        require_finite(data.row(i), "gram");
    }
    const std::size_t n = data.rows;
    GramMatrix g{std::vector<double>(n * n), n, spec, false};
    detail::parallel_rows(n, n_threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const auto xi = data.row(i);
            for (std::size_t j = 0; j < n; ++j) {
                g.values[i * n + j] = detail::kernel_unchecked(xi, data.row(j), spec);
            }
        }
    });
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double avg = 0.5 * (g.values[i * n + j] + g.values[j * n + i]);
            g.values[i * n + j] = avg;
            g.values[j * n + i] = avg;
        }
    }
    g.symmetrized = true;
    return g;
}

/// Rectangular kernel matrix, entry (i, j) = K(test_i, train_j). Row-major
/// test.rows x train.rows.
inline std::vector<double> cross_gram(MatrixView train, MatrixView test,
                                      const KernelSpec& spec,
                                      unsigned n_threads = default_threads()) {
    spec.validate();
    if (train.cols != test.cols) {
        throw config_error("cross_gram: dimension mismatch (" + std::to_string(train.cols) +
                           " vs " + std::to_string(test.cols) + ")");
    }
    for (std::size_t i = 0; i < train.rows; ++i) require_finite(train.row(i), "cross_gram");
    for (std::size_t i = 0; i < test.rows; ++i) require_finite(test.row(i), "cross_gram");
    std::vector<double> out(test.rows * train.rows);
    detail::parallel_rows(test.rows, n_threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const auto xi = test.row(i);
            for (std::size_t j = 0; j < train.rows; ++j) {
                out[i * train.rows + j] = detail::kernel_unchecked(xi, train.row(j), spec);
            }
        }
    });
    return out;
}

struct PsdReport {
    double min_eigenvalue = 0.0;
    bool is_psd = false;
};

/// Empirical Mercer check: smallest eigenvalue of the Gram matrix against a
/// relative tolerance of tol * N * max|entry|.
inline PsdReport check_psd(const GramMatrix& g, double tol) {
    if (!(tol >= 0.0)) throw config_error("check_psd: tol must be >= 0");
    require_finite(g.values, "check_psd");
    using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    Eigen::Map<const Mat> m(g.values.data(), static_cast<Eigen::Index>(g.n),
                            static_cast<Eigen::Index>(g.n));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) {
        throw data_error("check_psd: eigensolver failed to converge");
    }
    PsdReport r;
    r.min_eigenvalue = solver.eigenvalues().minCoeff();
    r.is_psd = r.min_eigenvalue >= -tol * static_cast<double>(g.n) * g.max_abs();
    return r;
}

} // namespace awfk
