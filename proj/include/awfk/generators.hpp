#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

#include "awfk/dataset.hpp"
#include "awfk/rng.hpp"

namespace awfk {

/// Two isotropic unit-variance Gaussian clusters centered at
/// (-separation/2, 0, ...) for class -1 and (+separation/2, 0, ...) for
/// class +1, plus n_outliers points at radius outlier_radius in random
/// directions. Outliers are labeled opposite to the nearest cluster, the
/// worst case for boundary stability.
inline Dataset make_gaussians_with_outliers(std::size_t n_per_class, std::size_t d,
                                            double separation, std::size_t n_outliers,
                                            double outlier_radius, std::uint64_t seed) {
    Rng rng(seed);
    Dataset ds;
    ds.tag = Dataset::next_tag();
    ds.dim = d;
    for (int label : {-1, +1}) {
        const double cx = (label > 0 ? +0.5 : -0.5) * separation;
        for (std::size_t i = 0; i < n_per_class; ++i) {
            for (std::size_t k = 0; k < d; ++k) {
                ds.features.push_back(rng.normal() + (k == 0 ? cx : 0.0));
            }
            ds.labels.push_back(label);
            ++ds.n;
        }
    }
    for (std::size_t i = 0; i < n_outliers; ++i) {
        std::vector<double> dir(d);
        double norm2 = 0.0;
        do {
            norm2 = 0.0;
            for (auto& v : dir) {
                v = rng.normal();
                norm2 += v * v;
            }
        } while (norm2 == 0.0);
        const double scale = outlier_radius / std::sqrt(norm2);
        for (double v : dir) ds.features.push_back(v * scale);
        // Adversarial label: opposite the nearest cluster center.
        const int nearest = dir[0] * scale >= 0.0 ? +1 : -1;
        ds.labels.push_back(-nearest);
        ++ds.n;
    }
    return ds;
}

/// Interleaved half circles: the first moon is the upper unit half circle,
/// the second is the lower half circle shifted by (1, -0.5). Gaussian noise
/// with stddev noise_sigma is added to both coordinates.
inline Dataset make_two_moons(std::size_t n, double noise_sigma, std::uint64_t seed) {
    if (n < 2) throw config_error("make_two_moons: need n >= 2");
    Rng rng(seed);
    Dataset ds;
    ds.tag = Dataset::next_tag();
    ds.dim = 2;
    ds.n = n;
    const std::size_t n_outer = (n + 1) / 2;  // class -1; odd n puts the extra point here
    const std::size_t n_inner = n - n_outer;
    for (std::size_t i = 0; i < n_outer; ++i) {
        const double t = std::numbers::pi * static_cast<double>(i) /
                         static_cast<double>(n_outer > 1 ? n_outer - 1 : 1);
        ds.features.push_back(std::cos(t) + noise_sigma * rng.normal());
        ds.features.push_back(std::sin(t) + noise_sigma * rng.normal());
        ds.labels.push_back(-1);
    }
    for (std::size_t i = 0; i < n_inner; ++i) {
        const double t = std::numbers::pi * static_cast<double>(i) /
                         static_cast<double>(n_inner > 1 ? n_inner - 1 : 1);
        ds.features.push_back(1.0 - std::cos(t) + noise_sigma * rng.normal());
        ds.features.push_back(0.5 - std::sin(t) + noise_sigma * rng.normal());
        ds.labels.push_back(+1);
    }
    return ds;
}

/// Uniform features in [-1, 1] with balanced random labels.
inline Dataset make_random_dense(std::size_t n, std::size_t d, std::uint64_t seed) {
    if (n == 0 || d == 0) throw config_error("make_random_dense: need n, d >= 1");
    Rng rng(seed);
    Dataset ds;
    ds.tag = Dataset::next_tag();
    ds.n = n;
    ds.dim = d;
    ds.features.resize(n * d);
    for (auto& v : ds.features) v = rng.uniform(-1.0, 1.0);
    ds.labels.resize(n);
    // Balanced assignment, then shuffled, so class counts differ by at most 1.
    for (std::size_t i = 0; i < n; ++i) ds.labels[i] = (i % 2 == 0) ? +1 : -1;
    rng.shuffle(ds.labels);
    return ds;
}

} // namespace awfk
