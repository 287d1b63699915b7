#pragma once

#include <array>
#include <chrono>
#include <cmath>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "awfk/dataset.hpp"
#include "awfk/generators.hpp"
#include "awfk/kernels.hpp"
#include "awfk/solver.hpp"

namespace awfk {

/// One (kernel, dataset, split) run. Confusion rows are true class, columns
/// predicted class, both ordered (-1, +1).
struct EvalReport {
    double accuracy = 0.0;
    double f1_neg = 0.0;
    double f1_pos = 0.0;
    std::array<std::array<std::size_t, 2>, 2> confusion{};
    double train_seconds = 0.0;
    double gram_seconds = 0.0;
    KernelSpec spec;
    double c = 1.0;
    std::optional<SplitSpec> split;
    bool converged = true;
    std::size_t n_sv = 0;
};

namespace detail {

inline double f1_from_counts(std::size_t tp, std::size_t fp, std::size_t fn) {
    const std::size_t denom = 2 * tp + fp + fn;
    if (denom == 0) return 0.0;  // 0/0 convention
    return 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
}

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

} // namespace detail

/// Fills accuracy, per-class F1 and the confusion matrix from predictions.
inline void fill_metrics(EvalReport& r, const std::vector<int>& truth,
                         const std::vector<int>& predicted) {
    r.confusion = {};
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const std::size_t row = truth[i] > 0 ? 1 : 0;
        const std::size_t col = predicted[i] > 0 ? 1 : 0;
        ++r.confusion[row][col];
    }
    const auto& c = r.confusion;
    const std::size_t total = c[0][0] + c[0][1] + c[1][0] + c[1][1];
    r.accuracy = total == 0 ? 0.0
                            : static_cast<double>(c[0][0] + c[1][1]) / static_cast<double>(total);
    // Negative class: tp = c[0][0], fp = c[1][0], fn = c[0][1].
    r.f1_neg = detail::f1_from_counts(c[0][0], c[1][0], c[0][1]);
    r.f1_pos = detail::f1_from_counts(c[1][1], c[0][1], c[1][0]);
}

/// Fits on the training set and scores the test set. Both datasets are
/// expected to be in the same (already standardized) feature space.
inline EvalReport evaluate(const Dataset& train_ds, const Dataset& test_ds,
                           const KernelSpec& spec, double c,
                           unsigned n_threads = default_threads()) {
    EvalReport r;
    r.spec = spec;
    r.c = c;
    SvmConfig cfg;
    cfg.c = c;

    auto t0 = std::chrono::steady_clock::now();
    const GramMatrix g = gram(train_ds.view(), spec, n_threads);
    r.gram_seconds = detail::seconds_since(t0);

    t0 = std::chrono::steady_clock::now();
    const SvmModel model = train(g, train_ds.labels, cfg, train_ds.view());
    r.train_seconds = detail::seconds_since(t0);
    r.converged = model.meta.converged;
    r.n_sv = model.n_sv;

    const DecisionValues dv = decision_function(model, test_ds.view(), n_threads);
    fill_metrics(r, test_ds.labels, dv.labels);
    return r;
}

struct CvResult {
    double mean_accuracy = 0.0;
    std::vector<double> fold_accuracies;
};

namespace detail {

// Stratified fold assignment: per-class shuffle, then round-robin deal.
inline std::vector<std::size_t> fold_assignment(const Dataset& ds, std::size_t k,
                                                std::uint64_t seed) {
    std::vector<std::size_t> fold_of(ds.n);
    Rng rng(seed);
    std::vector<std::size_t> neg, pos;
    for (std::size_t i = 0; i < ds.n; ++i) (ds.labels[i] > 0 ? pos : neg).push_back(i);
    rng.shuffle(neg);
    rng.shuffle(pos);
    std::size_t next = 0;
    for (std::size_t i : neg) fold_of[i] = next++ % k;
    for (std::size_t i : pos) fold_of[i] = next++ % k;
    return fold_of;
}

} // namespace detail

/// Stratified k-fold cross validation. Standardization is refit on each
/// fold's training part, so no statistics leak into the held-out part.
inline CvResult cross_validate(const Dataset& ds, const KernelSpec& spec, double c,
                               std::size_t k_folds, std::uint64_t seed,
                               unsigned n_threads = default_threads()) {
    if (k_folds < 2) throw config_error("cross_validate: need k_folds >= 2");
    if (k_folds > ds.n) throw config_error("cross_validate: more folds than samples");
    const auto fold_of = detail::fold_assignment(ds, k_folds, seed);

    CvResult result;
    for (std::size_t fold = 0; fold < k_folds; ++fold) {
        std::vector<std::size_t> train_idx, val_idx;
        for (std::size_t i = 0; i < ds.n; ++i) {
            (fold_of[i] == fold ? val_idx : train_idx).push_back(i);
        }
        Dataset train_part = detail::take_rows(ds, train_idx);
        Dataset val_part = detail::take_rows(ds, val_idx);
        bool has_pos = false, has_neg = false;
        for (int y : train_part.labels) (y > 0 ? has_pos : has_neg) = true;
        if (!has_pos || !has_neg || val_part.n == 0) {
            throw config_error("cross_validate: fold " + std::to_string(fold) +
                               " is missing a class");
        }
        train_part = standardize(train_part);
        val_part = apply_standardization(val_part, *train_part.standardization);
        const EvalReport r = evaluate(train_part, val_part, spec, c, n_threads);
        result.fold_accuracies.push_back(r.accuracy);
    }
    double sum = 0.0;
    for (double a : result.fold_accuracies) sum += a;
    result.mean_accuracy = sum / static_cast<double>(result.fold_accuracies.size());
    return result;
}

enum class KernelFamily { Rbf, Awfk };

struct GridAxis {
    std::string name;  // "s", "lambda", "eta", "gamma" or "C"
    std::vector<double> values;
};

struct GridResult {
    std::vector<GridAxis> axes;
    std::vector<double> scores;         // row-major over axes, mean CV accuracy
    std::vector<std::size_t> best_cell; // coordinates, lexicographic tie-break
    double best_score = 0.0;

    std::size_t flat_index(const std::vector<std::size_t>& cell) const {
        std::size_t idx = 0;
        for (std::size_t a = 0; a < axes.size(); ++a) idx = idx * axes[a].values.size() + cell[a];
        return idx;
    }
};

namespace detail {

inline KernelSpec spec_from_cell(KernelFamily family, const std::vector<GridAxis>& axes,
                                 const std::vector<std::size_t>& cell, double& c_out) {
    AwfkParams ap;
    RbfParams rp;
    c_out = 1.0;
    for (std::size_t a = 0; a < axes.size(); ++a) {
        const double v = axes[a].values[cell[a]];
        const std::string& name = axes[a].name;
        if (name == "s") ap.s = v;
        else if (name == "lambda") ap.lambda = v;
        else if (name == "eta") ap.eta = v;
        else if (name == "gamma") rp.gamma = v;
        else if (name == "C") c_out = v;
        else throw config_error("grid_search: unknown axis '" + name + "'");
    }
    return family == KernelFamily::Awfk ? KernelSpec{ap} : KernelSpec{rp};
}

} // namespace detail

/// Exhaustive Cartesian sweep scored by stratified k-fold CV. The best cell
/// is the highest mean accuracy; exact ties keep the lexicographically
/// smallest coordinates, independent of evaluation order.
inline GridResult grid_search(const Dataset& ds, KernelFamily family,
                              std::vector<GridAxis> axes, const std::vector<double>& c_values,
                              std::size_t k_folds, std::uint64_t seed,
                              unsigned n_threads = default_threads()) {
    if (axes.empty() && c_values.empty()) throw config_error("grid_search: empty grid");
    if (!c_values.empty()) axes.push_back({"C", c_values});
    for (const auto& axis : axes) {
        if (axis.values.empty()) throw config_error("grid_search: empty axis " + axis.name);
    }

    GridResult result;
    result.axes = axes;
    std::size_t n_cells = 1;
    for (const auto& axis : axes) n_cells *= axis.values.size();
    result.scores.assign(n_cells, 0.0);

    std::vector<std::size_t> cell(axes.size(), 0);
    result.best_score = -1.0;
    for (std::size_t flat = 0; flat < n_cells; ++flat) {
        double c = 1.0;
        const KernelSpec spec = detail::spec_from_cell(family, axes, cell, c);
        spec.validate();
        const CvResult cv = cross_validate(ds, spec, c, k_folds, seed, n_threads);
        result.scores[flat] = cv.mean_accuracy;
        if (cv.mean_accuracy > result.best_score) {
            result.best_score = cv.mean_accuracy;
            result.best_cell = cell;
        }
        // Advance odometer, last axis fastest; lexicographic visit order makes
        // strict improvement the correct tie-break.
        for (std::size_t a = axes.size(); a-- > 0;) {
            if (++cell[a] < axes[a].values.size()) break;
            cell[a] = 0;
        }
    }
    return result;
}

/// 2-D (s, eta) slice of grid_search at fixed lambda and C.
inline GridResult sensitivity_heatmap(const Dataset& ds, const std::vector<double>& s_values,
                                      const std::vector<double>& eta_values, double lambda,
                                      double c, std::size_t k_folds, std::uint64_t seed,
                                      unsigned n_threads = default_threads()) {
    std::vector<GridAxis> axes{{"s", s_values}, {"eta", eta_values}, {"lambda", {lambda}}};
    return grid_search(ds, KernelFamily::Awfk, std::move(axes), {c}, k_folds, seed, n_threads);
}

/// Writes heatmap rows "s,eta,mean_accuracy". Axis order in the file follows
/// the s axis outer, eta inner.
inline void write_heatmap_csv(const GridResult& grid, const std::string& path) {
    if (grid.axes.size() < 2 || grid.axes[0].name != "s" || grid.axes[1].name != "eta") {
        throw config_error("write_heatmap_csv: expected s and eta axes");
    }
    std::ofstream out(path);
    if (!out) throw data_error("write_heatmap_csv: cannot write " + path);
    out << "s,eta,mean_accuracy\n";
    std::vector<std::size_t> cell(grid.axes.size(), 0);
    for (std::size_t i = 0; i < grid.axes[0].values.size(); ++i) {
        for (std::size_t j = 0; j < grid.axes[1].values.size(); ++j) {
            cell[0] = i;
            cell[1] = j;
            out << format_double(grid.axes[0].values[i]) << ','
                << format_double(grid.axes[1].values[j]) << ','
                << format_double(grid.scores[grid.flat_index(cell)]) << '\n';
        }
    }
}

struct BoundaryGrid {
    double x_min = 0.0, x_max = 0.0, y_min = 0.0, y_max = 0.0;
    std::size_t resolution = 0;
    std::vector<double> scores;  // row-major, x index outer, y index inner

    double x_at(std::size_t i) const {
        return resolution == 1 ? x_min
                               : x_min + (x_max - x_min) * static_cast<double>(i) /
                                             static_cast<double>(resolution - 1);
    }
    double y_at(std::size_t j) const {
        return resolution == 1 ? y_min
                               : y_min + (y_max - y_min) * static_cast<double>(j) /
                                             static_cast<double>(resolution - 1);
    }
};

/// Decision scores over a regular grid in raw (unstandardized) coordinates.
/// Nodes are standardized with the training statistics before scoring, since
/// the model lives in standardized space.
inline BoundaryGrid export_boundary(const SvmModel& model,
                                    const std::optional<Standardization>& train_stats,
                                    std::pair<double, double> x_range,
                                    std::pair<double, double> y_range, std::size_t resolution,
                                    unsigned n_threads = default_threads()) {
    if (model.dim != 2) throw config_error("export_boundary: model must be 2-D");
    if (resolution < 1) throw config_error("export_boundary: resolution must be >= 1");

    BoundaryGrid grid;
    grid.x_min = x_range.first;
    grid.x_max = x_range.second;
    grid.y_min = y_range.first;
    grid.y_max = y_range.second;
    grid.resolution = resolution;

    std::vector<double> nodes;
    nodes.reserve(resolution * resolution * 2);
    for (std::size_t i = 0; i < resolution; ++i) {
        for (std::size_t j = 0; j < resolution; ++j) {
            double x = grid.x_at(i), y = grid.y_at(j);
            if (train_stats) {
                x = (x - train_stats->mean[0]) / train_stats->stddev[0];
                y = (y - train_stats->mean[1]) / train_stats->stddev[1];
            }
            nodes.push_back(x);
            nodes.push_back(y);
        }
    }
    const MatrixView node_view{nodes.data(), resolution * resolution, 2};
    grid.scores = decision_function(model, node_view, n_threads).scores;
    return grid;
}

/// Writes boundary rows "x,y,score", x outer.
inline void write_boundary_csv(const BoundaryGrid& grid, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw data_error("write_boundary_csv: cannot write " + path);
    out << "x,y,score\n";
    for (std::size_t i = 0; i < grid.resolution; ++i) {
        for (std::size_t j = 0; j < grid.resolution; ++j) {
            out << format_double(grid.x_at(i)) << ',' << format_double(grid.y_at(j)) << ','
                << format_double(grid.scores[i * grid.resolution + j]) << '\n';
        }
    }
}

struct TimingReport {
    double gram_seconds = 0.0;
    double train_seconds = 0.0;
};

/// Times Gram construction and SMO training separately on random data.
inline TimingReport timing_bench(std::size_t n, std::size_t d, const KernelSpec& spec,
                                 std::uint64_t seed, double c = 1.0,
                                 unsigned n_threads = default_threads()) {
    const Dataset ds = make_random_dense(n, d, seed);
    TimingReport report;

    auto t0 = std::chrono::steady_clock::now();
    const GramMatrix g = gram(ds.view(), spec, n_threads);
    report.gram_seconds = detail::seconds_since(t0);

    SvmConfig cfg;
    cfg.c = c;
    t0 = std::chrono::steady_clock::now();
    const SvmModel model = train(g, ds.labels, cfg, ds.view());
    report.train_seconds = detail::seconds_since(t0);
    (void)model;
    return report;
}

/// 1 - (1 - acc_new) / (1 - acc_baseline). Computed from measured values,
/// never from published point estimates.
inline double error_rate_reduction(double acc_new, double acc_baseline) {
    const double base_err = 1.0 - acc_baseline;
    if (base_err <= 0.0) return 0.0;
    return 1.0 - (1.0 - acc_new) / base_err;
}

} // namespace awfk
