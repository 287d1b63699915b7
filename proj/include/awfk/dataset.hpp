#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "awfk/common.hpp"
#include "awfk/rng.hpp"

namespace awfk {

/// Per-feature statistics recorded when a dataset is standardized. The tag
/// identifies which dataset the statistics were fitted on, so leakage of
/// test-set statistics can be asserted against.
struct Standardization {
    std::vector<double> mean;
    std::vector<double> stddev;  // 1.0 for zero-variance features
    std::uint64_t fitted_on_tag = 0;
};

struct Dataset {
    std::vector<double> features;  // row-major n x dim
    std::size_t n = 0;
    std::size_t dim = 0;
    std::vector<int> labels;  // each -1 or +1
    std::vector<std::string> feature_names;
    std::optional<Standardization> standardization;
    std::uint64_t tag = 0;  // provenance id, assigned at construction

    MatrixView view() const { return {features.data(), n, dim}; }
    std::span<const double> row(std::size_t i) const { return {features.data() + i * dim, dim}; }

    static std::uint64_t next_tag() {
        static std::uint64_t counter = 0;
        return ++counter;
    }
};

namespace detail {

inline bool parse_double(const std::string& s, double& out) {
    if (s.empty()) return false;
    std::size_t pos = 0;
    try {
        out = std::stod(s, &pos);
    } catch (const std::exception&) {
        return false;
    }
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    return pos == s.size();
}

inline std::vector<std::string> split_line(const std::string& line, char sep) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, sep)) cells.push_back(cell);
    if (!line.empty() && line.back() == sep) cells.emplace_back();
    return cells;
}

inline std::string strip_cr(std::string s) {
    if (!s.empty() && s.back() == '\r') s.pop_back();
    return s;
}

} // namespace detail

/// Reads a comma-separated file with the label in one column. The positive
/// token maps to +1, every other token to -1. A non-numeric first row is
/// treated as a header. Columns listed in drop_columns (e.g. record ids)
/// are excluded from the features.
inline Dataset load_csv(const std::string& path, std::size_t label_column,
                        const std::string& positive_label_token,
                        const std::set<std::size_t>& drop_columns = {}) {
    std::ifstream in(path);
    if (!in) throw data_error("load_csv: cannot open " + path);

    Dataset ds;
    ds.tag = Dataset::next_tag();
    std::string line;
    std::size_t line_no = 0;
    bool first_row = true;
    std::size_t arity = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = detail::strip_cr(line);
        if (line.empty()) continue;
        auto cells = detail::split_line(line, ',');
        if (first_row) {
            arity = cells.size();
            if (label_column >= arity) {
                throw config_error("load_csv: label column " + std::to_string(label_column) +
                                   " out of range for " + std::to_string(arity) + " columns");
            }
            // Header detection: any non-numeric cell outside label/dropped columns.
            bool header = false;
            for (std::size_t c = 0; c < cells.size(); ++c) {
                if (c == label_column || drop_columns.count(c)) continue;
                double v;
                if (!detail::parse_double(cells[c], v)) header = true;
            }
            first_row = false;
            if (header) {
                for (std::size_t c = 0; c < cells.size(); ++c) {
                    if (c == label_column || drop_columns.count(c)) continue;
                    ds.feature_names.push_back(cells[c]);
                }
                continue;
            }
        }
        if (cells.size() != arity) {
            throw data_error("load_csv: row " + std::to_string(line_no) + " has " +
                             std::to_string(cells.size()) + " cells, expected " +
                             std::to_string(arity));
        }
        std::size_t d = 0;
        for (std::size_t c = 0; c < cells.size(); ++c) {
            if (c == label_column) {
                ds.labels.push_back(cells[c] == positive_label_token ? +1 : -1);
                continue;
            }
            if (drop_columns.count(c)) continue;
            double v;
            if (!detail::parse_double(cells[c], v)) {
                throw data_error("load_csv: non-numeric cell at row " + std::to_string(line_no) +
                                 ", column " + std::to_string(c) + ": '" + cells[c] + "'");
            }
            ds.features.push_back(v);
            ++d;
        }
        if (ds.dim == 0) ds.dim = d;
        ++ds.n;
    }
    if (ds.n == 0) throw data_error("load_csv: no data rows in " + path);
    return ds;
}

/// Sparse "label index:value ..." lines, 1-based strictly increasing indices,
/// densified with zeros.
inline Dataset load_libsvm(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw data_error("load_libsvm: cannot open " + path);

    std::vector<int> labels;
    std::vector<std::vector<std::pair<std::size_t, double>>> rows;
    std::size_t max_index = 0;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = detail::strip_cr(line);
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string token;
        if (!(ss >> token)) continue;
        double lab;
        if (!detail::parse_double(token, lab) || (lab != 1.0 && lab != -1.0)) {
            throw data_error("load_libsvm: row " + std::to_string(line_no) +
                             ": label must be +1 or -1, got '" + token + "'");
        }
        labels.push_back(static_cast<int>(lab));
        std::vector<std::pair<std::size_t, double>> entries;
        std::size_t prev_index = 0;
        while (ss >> token) {
            const auto colon = token.find(':');
            if (colon == std::string::npos) {
                throw data_error("load_libsvm: row " + std::to_string(line_no) +
                                 ": malformed entry '" + token + "'");
            }
            std::size_t index = 0;
            double value;
            try {
                index = std::stoul(token.substr(0, colon));
            } catch (const std::exception&) {
                throw data_error("load_libsvm: row " + std::to_string(line_no) +
                                 ": bad index in '" + token + "'");
            }
            if (index == 0 || index <= prev_index) {
                throw data_error("load_libsvm: row " + std::to_string(line_no) +
                                 ": indices must be 1-based and strictly increasing");
            }
            if (!detail::parse_double(token.substr(colon + 1), value)) {
                throw data_error("load_libsvm: row " + std::to_string(line_no) +
                                 ": bad value in '" + token + "'");
            }
            entries.emplace_back(index, value);
            prev_index = index;
            max_index = std::max(max_index, index);
        }
        rows.push_back(std::move(entries));
    }
    if (labels.empty()) throw data_error("load_libsvm: no data rows in " + path);

    Dataset ds;
    ds.tag = Dataset::next_tag();
    ds.n = labels.size();
    ds.dim = max_index;
    ds.labels = std::move(labels);
    ds.features.assign(ds.n * ds.dim, 0.0);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (const auto& [index, value] : rows[i]) {
            ds.features[i * ds.dim + (index - 1)] = value;
        }
    }
    return ds;
}

inline void save_libsvm(const Dataset& ds, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw data_error("save_libsvm: cannot write " + path);
    for (std::size_t i = 0; i < ds.n; ++i) {
        out << (ds.labels[i] > 0 ? "+1" : "-1");
        for (std::size_t k = 0; k < ds.dim; ++k) {
            const double v = ds.features[i * ds.dim + k];
            if (v != 0.0) out << ' ' << (k + 1) << ':' << format_double(v);
        }
        out << '\n';
    }
}

/// Fits per-feature (mean, population stddev) and transforms to zero mean,
/// unit variance. Zero-variance features pass through with stddev recorded
/// as 1.
inline Dataset standardize(const Dataset& ds) {
    if (ds.n < 2) throw config_error("standardize: need at least 2 rows to fit");
    Standardization st;
    st.mean.assign(ds.dim, 0.0);
    st.stddev.assign(ds.dim, 1.0);
    st.fitted_on_tag = ds.tag;
    for (std::size_t k = 0; k < ds.dim; ++k) {
        double sum = 0.0;
        for (std::size_t i = 0; i < ds.n; ++i) sum += ds.features[i * ds.dim + k];
        const double mean = sum / static_cast<double>(ds.n);
        double var = 0.0;
        for (std::size_t i = 0; i < ds.n; ++i) {
            const double d = ds.features[i * ds.dim + k] - mean;
            var += d * d;
        }
        var /= static_cast<double>(ds.n);  // population variance
        const double sd = std::sqrt(var);
        st.mean[k] = mean;
        st.stddev[k] = sd > 0.0 ? sd : 1.0;
        if (sd == 0.0) st.mean[k] = 0.0;  // constant feature passes through
    }
    Dataset out = ds;
    for (std::size_t i = 0; i < out.n; ++i) {
        for (std::size_t k = 0; k < out.dim; ++k) {
            out.features[i * out.dim + k] =
                (out.features[i * out.dim + k] - st.mean[k]) / st.stddev[k];
        }
    }
    out.standardization = std::move(st);
    return out;
}

/// Applies previously fitted statistics (train-set provenance) to new data.
inline Dataset apply_standardization(const Dataset& ds, const Standardization& st) {
    if (st.mean.size() != ds.dim) {
        throw config_error("apply_standardization: dimension mismatch");
    }
    Dataset out = ds;
    for (std::size_t i = 0; i < out.n; ++i) {
        for (std::size_t k = 0; k < out.dim; ++k) {
            out.features[i * out.dim + k] =
                (out.features[i * out.dim + k] - st.mean[k]) / st.stddev[k];
        }
    }
    out.standardization = st;
    return out;
}

struct SplitSpec {
    double test_fraction = 0.3;
    std::uint64_t seed = 0;
    bool stratified = true;

    void validate() const {
        if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
            throw config_error("split: test_fraction must be in (0,1), got " +
                               format_double(test_fraction));
        }
    }
};

namespace detail {

inline Dataset take_rows(const Dataset& ds, const std::vector<std::size_t>& idx) {
    Dataset out;
    out.tag = Dataset::next_tag();
    out.n = idx.size();
    out.dim = ds.dim;
    out.feature_names = ds.feature_names;
    out.features.reserve(out.n * out.dim);
    out.labels.reserve(out.n);
    for (std::size_t i : idx) {
        const auto r = ds.row(i);
        out.features.insert(out.features.end(), r.begin(), r.end());
        out.labels.push_back(ds.labels[i]);
    }
    return out;
}

} // namespace detail

/// Deterministic train/test partition. Test size is round(N * fraction);
/// stratified mode allocates per class by largest remainder, so class ratios
/// are preserved within one sample.
inline std::pair<Dataset, Dataset> split(const Dataset& ds, const SplitSpec& spec) {
    spec.validate();
    const auto n_test_total = static_cast<std::size_t>(
        std::llround(static_cast<double>(ds.n) * spec.test_fraction));
    if (n_test_total == 0 || n_test_total >= ds.n) {
        throw config_error("split: test_fraction " + format_double(spec.test_fraction) +
                           " yields an empty side for N=" + std::to_string(ds.n));
    }

    Rng rng(spec.seed);
    std::vector<std::size_t> test_idx;
    if (spec.stratified) {
        std::vector<std::size_t> neg, pos;
        for (std::size_t i = 0; i < ds.n; ++i) {
            (ds.labels[i] > 0 ? pos : neg).push_back(i);
        }
        if (neg.empty() || pos.empty()) {
            throw config_error("split: stratified split requires both classes");
        }
        // Largest-remainder allocation of the test quota over classes.
        const double qn = static_cast<double>(neg.size()) * spec.test_fraction;
        const double qp = static_cast<double>(pos.size()) * spec.test_fraction;
        std::size_t tn = static_cast<std::size_t>(std::floor(qn));
        std::size_t tp = static_cast<std::size_t>(std::floor(qp));
        std::size_t remaining = n_test_total - tn - tp;  // 0, 1 or 2
        if (remaining >= 2) {
            ++tn;
            ++tp;
            remaining -= 2;
        }
        if (remaining == 1) {
            // Larger fractional remainder wins; ties go to the negative class.
            if (qn - std::floor(qn) >= qp - std::floor(qp)) {
                ++tn;
            } else {
                ++tp;
            }
        }
        if (tn == 0 || tp == 0 || tn >= neg.size() || tp >= pos.size()) {
            throw config_error("split: a class would be missing from one side");
        }
        rng.shuffle(neg);
        rng.shuffle(pos);
        test_idx.assign(neg.begin(), neg.begin() + static_cast<std::ptrdiff_t>(tn));
        test_idx.insert(test_idx.end(), pos.begin(),
                        pos.begin() + static_cast<std::ptrdiff_t>(tp));
    } else {
        std::vector<std::size_t> all(ds.n);
        std::iota(all.begin(), all.end(), std::size_t{0});
        rng.shuffle(all);
        test_idx.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n_test_total));
    }
    std::sort(test_idx.begin(), test_idx.end());
    std::vector<std::size_t> train_idx;
    train_idx.reserve(ds.n - test_idx.size());
    std::size_t t = 0;
    for (std::size_t i = 0; i < ds.n; ++i) {
        if (t < test_idx.size() && test_idx[t] == i) {
            ++t;
        } else {
            train_idx.push_back(i);
        }
    }
    return {detail::take_rows(ds, train_idx), detail::take_rows(ds, test_idx)};
}

} // namespace awfk
