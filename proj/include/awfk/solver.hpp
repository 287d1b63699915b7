#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "awfk/common.hpp"
#include "awfk/kernels.hpp"

namespace awfk {

struct SvmConfig {
    double c = 1.0;           // box constraint
    double kkt_tol = 1e-3;    // stopping tolerance on the max KKT violation
    std::size_t max_iter = 10'000'000;  // pair updates before giving up
    bool shrink = true;

    void validate() const {
        if (!(c > 0.0)) throw config_error("svm: C must be > 0, got " + format_double(c));
        if (!(kkt_tol > 0.0)) throw config_error("svm: kkt_tol must be > 0");
        if (max_iter < 1) throw config_error("svm: max_iter must be >= 1");
    }
};

struct TrainingMeta {
    std::size_t iterations = 0;
    double objective = 0.0;  // final dual objective (maximization form)
    bool converged = false;
};

/// Trained classifier. Only support vectors (alpha > 0) are retained;
/// dual_coefs holds the signed weights alpha_i * y_i.
struct SvmModel {
    std::vector<double> support_vectors;  // row-major n_sv x dim
    std::size_t n_sv = 0;
    std::size_t dim = 0;
    std::vector<double> dual_coefs;
    double bias = 0.0;
    KernelSpec spec;
    TrainingMeta meta;

    MatrixView sv_view() const { return {support_vectors.data(), n_sv, dim}; }
};

struct DecisionValues {
    std::vector<double> scores;
    std::vector<int> labels;  // sign of score, +1 at zero
};

/// Dual objective sum(a) - 1/2 sum_ij a_i a_j y_i y_j K_ij.
inline double dual_objective(const GramMatrix& g, const std::vector<int>& labels,
                             const std::vector<double>& alphas) {
    const std::size_t n = alphas.size();
    double linear = 0.0, quad = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        linear += alphas[i];
        const double ai_yi = alphas[i] * labels[i];
        for (std::size_t j = 0; j < n; ++j) {
            quad += ai_yi * alphas[j] * labels[j] * g(i, j);
        }
    }
    return linear - 0.5 * quad;
}

namespace detail {

// SMO working state: gradient of 1/2 a'Qa - e'a with Q_ij = y_i y_j K_ij,
// maximal-violating-pair selection, LIBSVM-style shrinking.
class SmoSolver {
public:
    SmoSolver(const GramMatrix& g, const std::vector<int>& y, const SvmConfig& cfg)
        : g_(g), y_(y), cfg_(cfg), n_(y.size()), alpha_(n_, 0.0), grad_(n_, -1.0) {
        active_.resize(n_);
        for (std::size_t i = 0; i < n_; ++i) active_[i] = i;
    }

    void solve(std::vector<double>* objective_trace) {
        const std::size_t shrink_interval = std::max<std::size_t>(std::min<std::size_t>(n_, 1000), 1);
        std::size_t counter = shrink_interval;
        bool unshrunk = false;
        while (iterations_ < cfg_.max_iter) {
            if (cfg_.shrink && --counter == 0) {
                do_shrinking();
                counter = shrink_interval;
            }
            auto [i, j, violation] = select_pair();
            if (violation <= cfg_.kkt_tol) {
                if (active_.size() == n_) {
                    converged_ = true;
                    break;
                }
                // Stopping held only on the shrunk set; verify on the full set.
                reconstruct_gradient();
                unshrunk = true;
                counter = 1;  // reshrink immediately next round
                auto [fi, fj, fv] = select_pair();
                if (fv <= cfg_.kkt_tol) {
                    converged_ = true;
                    break;
                }
                i = fi;
                j = fj;
            }
            update_pair(i, j);
            ++iterations_;
            if (objective_trace) objective_trace->push_back(objective());
        }
        if (!converged_ && active_.size() != n_) reconstruct_gradient();
        (void)unshrunk;
    }

    double objective() const {
        double obj = 0.0;
        for (std::size_t i = 0; i < n_; ++i) obj += alpha_[i] * (grad_[i] - 1.0);
        return -0.5 * obj;
    }

    double bias() const {
        // u_i = sum_j a_j y_j K_ij = y_i (grad_i + 1); free SVs pin b exactly.
        double sum = 0.0;
        std::size_t n_free = 0;
        double lower = -std::numeric_limits<double>::infinity();
        double upper = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n_; ++i) {
            const double u = y_[i] * (grad_[i] + 1.0);
            const double cand = y_[i] - u;
            if (alpha_[i] > 0.0 && alpha_[i] < cfg_.c) {
                sum += cand;
                ++n_free;
            } else if ((y_[i] > 0 && alpha_[i] == 0.0) || (y_[i] < 0 && alpha_[i] >= cfg_.c)) {
                lower = std::max(lower, cand);
            } else {
                upper = std::min(upper, cand);
            }
        }
        if (n_free > 0) return sum / static_cast<double>(n_free);
        if (std::isinf(lower)) return upper;
        if (std::isinf(upper)) return lower;
        return 0.5 * (lower + upper);
    }

    const std::vector<double>& alphas() const { return alpha_; }
    std::size_t iterations() const { return iterations_; }
    bool converged() const { return converged_; }

private:
    double q(std::size_t i, std::size_t j) const {
        return y_[i] * y_[j] * g_(i, j);
    }

    bool in_i_up(std::size_t i) const {
        return (y_[i] > 0 && alpha_[i] < cfg_.c) || (y_[i] < 0 && alpha_[i] > 0.0);
    }
    bool in_i_low(std::size_t i) const {
        return (y_[i] > 0 && alpha_[i] > 0.0) || (y_[i] < 0 && alpha_[i] < cfg_.c);
    }

    // Maximal violating pair over the active set. Returns (i, j, m - M).
    std::tuple<std::size_t, std::size_t, double> select_pair() const {
        double m = -std::numeric_limits<double>::infinity();
        double big_m = std::numeric_limits<double>::infinity();
        std::size_t i_sel = n_, j_sel = n_;
        for (std::size_t i : active_) {
            const double v = -y_[i] * grad_[i];
            if (in_i_up(i) && v > m) {
                m = v;
                i_sel = i;
            }
            if (in_i_low(i) && v < big_m) {
                big_m = v;
                j_sel = i;
            }
        }
        if (i_sel == n_ || j_sel == n_) return {0, 0, 0.0};
        return {i_sel, j_sel, m - big_m};
    }

    void update_pair(std::size_t i, std::size_t j) {
        constexpr double tau = 1e-12;
        const double c = cfg_.c;
        const double old_ai = alpha_[i], old_aj = alpha_[j];
        if (y_[i] != y_[j]) {
            double quad = q(i, i) + q(j, j) + 2.0 * q(i, j);
            if (quad <= 0.0) quad = tau;
            const double delta = (-grad_[i] - grad_[j]) / quad;
            const double diff = alpha_[i] - alpha_[j];
            alpha_[i] += delta;
            alpha_[j] += delta;
            if (diff > 0.0) {
                if (alpha_[j] < 0.0) {
                    alpha_[j] = 0.0;
                    alpha_[i] = diff;
                }
            } else {
                if (alpha_[i] < 0.0) {
                    alpha_[i] = 0.0;
                    alpha_[j] = -diff;
                }
            }
            if (diff > 0.0) {
                if (alpha_[i] > c) {
                    alpha_[i] = c;
                    alpha_[j] = c - diff;
                }
            } else {
                if (alpha_[j] > c) {
                    alpha_[j] = c;
                    alpha_[i] = c + diff;
                }
            }
        } else {
            double quad = q(i, i) + q(j, j) - 2.0 * q(i, j);
            if (quad <= 0.0) quad = tau;
            const double delta = (grad_[i] - grad_[j]) / quad;
            const double sum = alpha_[i] + alpha_[j];
            alpha_[i] -= delta;
            alpha_[j] += delta;
            if (sum > c) {
                if (alpha_[i] > c) {
                    alpha_[i] = c;
                    alpha_[j] = sum - c;
                }
            } else {
                if (alpha_[j] < 0.0) {
                    alpha_[j] = 0.0;
                    alpha_[i] = sum;
                }
            }
            if (sum > c) {
                if (alpha_[j] > c) {
                    alpha_[j] = c;
                    alpha_[i] = sum - c;
                }
            } else {
                if (alpha_[i] < 0.0) {
                    alpha_[i] = 0.0;
                    alpha_[j] = sum;
                }
            }
        }
        const double dai = alpha_[i] - old_ai;
        const double daj = alpha_[j] - old_aj;
        for (std::size_t k : active_) {
            grad_[k] += q(i, k) * dai + q(j, k) * daj;
        }
    }

    void reconstruct_gradient() {
        for (std::size_t k = 0; k < n_; ++k) grad_[k] = -1.0;
        for (std::size_t j = 0; j < n_; ++j) {
            if (alpha_[j] == 0.0) continue;
            for (std::size_t k = 0; k < n_; ++k) grad_[k] += q(j, k) * alpha_[j];
        }
        active_.resize(n_);
        for (std::size_t i = 0; i < n_; ++i) active_[i] = i;
    }

    void do_shrinking() {
        double m = -std::numeric_limits<double>::infinity();
        double big_m = std::numeric_limits<double>::infinity();
        for (std::size_t k : active_) {
            const double v = -y_[k] * grad_[k];
            if (in_i_up(k)) m = std::max(m, v);
            if (in_i_low(k)) big_m = std::min(big_m, v);
        }
        std::vector<std::size_t> keep;
        keep.reserve(active_.size());
        for (std::size_t k : active_) {
            const bool at_bound = alpha_[k] == 0.0 || alpha_[k] >= cfg_.c;
            const double v = -y_[k] * grad_[k];
            // Bound variables that cannot re-enter the violating pair are parked.
            const bool removable = at_bound && ((!in_i_up(k) || v < big_m) &&
                                                (!in_i_low(k) || v > m));
            if (!removable) keep.push_back(k);
        }
        if (keep.size() >= 2) active_ = std::move(keep);
    }

    const GramMatrix& g_;
    const std::vector<int>& y_;
    const SvmConfig& cfg_;
    std::size_t n_;
    std::vector<double> alpha_;
    std::vector<double> grad_;
    std::vector<std::size_t> active_;
    std::size_t iterations_ = 0;
    bool converged_ = false;
};

} // namespace detail

/// Trains the soft-margin dual by SMO over a precomputed Gram matrix.
/// `features` supplies the rows matching the Gram so support vectors can be
/// retained in the model. An optional trace records the dual objective after
/// every pair update.
inline SvmModel train(const GramMatrix& gram, const std::vector<int>& labels,
                      const SvmConfig& cfg, MatrixView features,
                      std::vector<double>* objective_trace = nullptr) {
    cfg.validate();
    if (labels.size() != gram.n || features.rows != gram.n) {
        throw config_error("train: gram, labels and features sizes disagree");
    }
    bool has_pos = false, has_neg = false;
    for (int y : labels) {
        if (y == +1) has_pos = true;
        else if (y == -1) has_neg = true;
        else throw config_error("train: labels must be -1 or +1");
    }
    if (!has_pos || !has_neg) {
        throw config_error("train: need both classes in the training labels");
    }

    detail::SmoSolver solver(gram, labels, cfg);
    solver.solve(objective_trace);

    SvmModel model;
    model.dim = features.cols;
    model.spec = gram.spec;
    model.bias = solver.bias();
    model.meta.iterations = solver.iterations();
    model.meta.objective = solver.objective();
    model.meta.converged = solver.converged();
    const auto& alpha = solver.alphas();
    for (std::size_t i = 0; i < gram.n; ++i) {
        if (alpha[i] > 0.0) {
            const auto r = features.row(i);
            model.support_vectors.insert(model.support_vectors.end(), r.begin(), r.end());
            model.dual_coefs.push_back(alpha[i] * labels[i]);
            ++model.n_sv;
        }
    }
    return model;
}

/// Scores = cross * dual_coefs + bias, labels = sign with +1 at zero.
/// `cross` is row-major n_rows x n_sv of kernel values K(test_i, sv_j).
inline DecisionValues predict(const SvmModel& model, const std::vector<double>& cross,
                              std::size_t n_rows) {
    if (cross.size() != n_rows * model.n_sv) {
        throw config_error("predict: cross-kernel shape does not match the model");
    }
    DecisionValues dv;
    dv.scores.reserve(n_rows);
    dv.labels.reserve(n_rows);
    for (std::size_t i = 0; i < n_rows; ++i) {
        double s = model.bias;
        for (std::size_t j = 0; j < model.n_sv; ++j) {
            s += cross[i * model.n_sv + j] * model.dual_coefs[j];
        }
        dv.scores.push_back(s);
        dv.labels.push_back(s >= 0.0 ? +1 : -1);
    }
    return dv;
}

/// Convenience: kernel evaluation against the support vectors plus predict.
inline DecisionValues decision_function(const SvmModel& model, MatrixView test,
                                        unsigned n_threads = default_threads()) {
    const auto cross = cross_gram(model.sv_view(), test, model.spec, n_threads);
    return predict(model, cross, test.rows);
}

/// Builds the Gram matrix and trains in one step.
inline SvmModel fit(MatrixView features, const std::vector<int>& labels,
                    const KernelSpec& spec, const SvmConfig& cfg,
                    unsigned n_threads = default_threads()) {
    const GramMatrix g = gram(features, spec, n_threads);
    return train(g, labels, cfg, features);
}

// ---------------------------------------------------------------------------
// Model serialization: versioned plain text, 17 significant digits.
// ---------------------------------------------------------------------------

inline void save_model(const SvmModel& model, std::ostream& out) {
    out << "awfk-svm v1\n";
    if (model.spec.is_awfk()) {
        const auto& p = model.spec.awfk_params();
        out << "kernel awfk s " << format_double(p.s) << " lambda " << format_double(p.lambda)
            << " eta " << format_double(p.eta) << " deform "
            << (p.deformation == Deformation::Arcsinh ? "arcsinh" : "identity") << "\n";
    } else {
        out << "kernel rbf gamma " << format_double(model.spec.rbf_params().gamma) << "\n";
    }
    out << "bias " << format_double(model.bias) << "\n";
    out << "meta iterations " << model.meta.iterations << " objective "
        << format_double(model.meta.objective) << " converged " << (model.meta.converged ? 1 : 0)
        << "\n";
    out << "nsv " << model.n_sv << " dim " << model.dim << "\n";
    for (std::size_t i = 0; i < model.n_sv; ++i) {
        out << format_double(model.dual_coefs[i]);
        for (std::size_t k = 0; k < model.dim; ++k) {
            out << ' ' << format_double(model.support_vectors[i * model.dim + k]);
        }
        out << '\n';
    }
}

inline void save_model(const SvmModel& model, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw data_error("save_model: cannot write " + path);
    save_model(model, out);
}

inline SvmModel load_model(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != "awfk-svm v1") {
        throw data_error("load_model: unrecognized format header");
    }
    SvmModel model;
    if (!std::getline(in, line)) throw data_error("load_model: truncated file");
    {
        std::istringstream ss(line);
        std::string tok, kind;
        ss >> tok >> kind;
        if (tok != "kernel") throw data_error("load_model: expected kernel line");
        if (kind == "awfk") {
            AwfkParams p;
            std::string key, deform_name;
            ss >> key >> p.s >> key >> p.lambda >> key >> p.eta >> key >> deform_name;
            p.deformation = deform_name == "identity" ? Deformation::Identity
                                                      : Deformation::Arcsinh;
            model.spec = KernelSpec{p};
        } else if (kind == "rbf") {
            RbfParams p;
            std::string key;
            ss >> key >> p.gamma;
            model.spec = KernelSpec{p};
        } else {
            throw data_error("load_model: unknown kernel '" + kind + "'");
        }
        model.spec.validate();
    }
    if (!std::getline(in, line)) throw data_error("load_model: truncated file");
    {
        std::istringstream ss(line);
        std::string tok;
        ss >> tok >> model.bias;
        if (tok != "bias") throw data_error("load_model: expected bias line");
    }
    if (!std::getline(in, line)) throw data_error("load_model: truncated file");
    {
        std::istringstream ss(line);
        std::string tok;
        int converged = 0;
        ss >> tok >> tok >> model.meta.iterations >> tok >> model.meta.objective >> tok >>
            converged;
        model.meta.converged = converged != 0;
    }
    if (!std::getline(in, line)) throw data_error("load_model: truncated file");
    {
        std::istringstream ss(line);
        std::string tok;
        ss >> tok >> model.n_sv >> tok >> model.dim;
    }
    model.dual_coefs.reserve(model.n_sv);
    model.support_vectors.reserve(model.n_sv * model.dim);
    for (std::size_t i = 0; i < model.n_sv; ++i) {
        if (!std::getline(in, line)) throw data_error("load_model: truncated support vectors");
        std::istringstream ss(line);
        double coef;
        if (!(ss >> coef)) throw data_error("load_model: bad support vector line");
        model.dual_coefs.push_back(coef);
        for (std::size_t k = 0; k < model.dim; ++k) {
            double v;
            if (!(ss >> v)) throw data_error("load_model: bad support vector line");
            model.support_vectors.push_back(v);
        }
    }
    return model;
}

inline SvmModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw data_error("load_model: cannot open " + path);
    return load_model(in);
}

} // namespace awfk
