#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numeric>
#include <sstream>
#include <vector>

#include "awfk/generators.hpp"
#include "awfk/kernels.hpp"
#include "awfk/rng.hpp"
#include "awfk/solver.hpp"
#include "oracles.hpp"

using namespace awfk;

namespace {

GramMatrix gram_of(const Dataset& ds, const KernelSpec& spec) { return gram(ds.view(), spec); }

// Random small instance for oracle comparisons: points in [-2, 2]^d with
// both classes guaranteed.
Dataset random_instance(Rng& rng, std::size_t n, std::size_t d) {
    Dataset ds;
    ds.tag = Dataset::next_tag();
    ds.n = n;
    ds.dim = d;
    ds.features.resize(n * d);
    for (auto& v : ds.features) v = rng.uniform(-2.0, 2.0);
    ds.labels.resize(n);
    for (std::size_t i = 0; i < n; ++i) ds.labels[i] = i % 2 == 0 ? +1 : -1;
    rng.shuffle(ds.labels);
    return ds;
}

void check_kkt(const GramMatrix& g, const std::vector<int>& y, const SvmModel& model,
               const std::vector<double>& alphas, double c, double tol) {
    // f(x_i) from the full alpha vector.
    for (std::size_t i = 0; i < g.n; ++i) {
        double f = model.bias;
        for (std::size_t j = 0; j < g.n; ++j) f += alphas[j] * y[j] * g(i, j);
        const double margin = y[i] * f;
        if (alphas[i] <= 0.0) {
            CHECK(margin >= 1.0 - tol);
        } else if (alphas[i] >= c) {
            CHECK(margin <= 1.0 + tol);
        } else {
            CHECK_THAT(margin, Catch::Matchers::WithinAbs(1.0, tol));
        }
    }
}

// Recovers the dense alpha vector by matching support vectors back to rows.
std::vector<double> dense_alphas(const Dataset& ds, const SvmModel& model) {
    std::vector<double> alphas(ds.n, 0.0);
    std::vector<bool> used(model.n_sv, false);
    for (std::size_t s = 0; s < model.n_sv; ++s) {
        for (std::size_t i = 0; i < ds.n; ++i) {
            if (alphas[i] != 0.0) continue;
            bool same = true;
            for (std::size_t k = 0; k < ds.dim; ++k) {
                if (ds.features[i * ds.dim + k] != model.support_vectors[s * ds.dim + k]) {
                    same = false;
                    break;
                }
            }
            if (same && !used[s]) {
                alphas[i] = model.dual_coefs[s] * ds.labels[i];
                used[s] = true;
                break;
            }
        }
    }
    return alphas;
}

} // namespace

TEST_CASE("symmetric two-point problem") {
    // x1 = (-1) labeled -1, x2 = (+1) labeled +1 under a kernel acting like
    // an inner product in deformed space: symmetry forces equal alphas and
    // zero bias.
    Dataset ds;
    ds.n = 2;
    ds.dim = 1;
    ds.features = {-1.0, 1.0};
    ds.labels = {-1, +1};
    const KernelSpec spec = KernelSpec::awfk(0.5, 1.0, 0.0);
    const GramMatrix g = gram_of(ds, spec);
    SvmConfig cfg;
    cfg.c = 1e6;
    const SvmModel model = train(g, ds.labels, cfg, ds.view());
    REQUIRE(model.n_sv == 2);
    CHECK_THAT(model.dual_coefs[0] + model.dual_coefs[1],
               Catch::Matchers::WithinAbs(0.0, 1e-8));
    CHECK(std::abs(model.dual_coefs[0]) > 0.0);
    CHECK_THAT(model.bias, Catch::Matchers::WithinAbs(0.0, 1e-6));
}

TEST_CASE("xor-like instance matches the brute-force optimum") {
    Dataset ds;
    ds.n = 4;
    ds.dim = 2;
    ds.features = {0.0, 0.0, 1.0, 1.0, 1.0, 0.0, 0.0, 1.0};
    ds.labels = {+1, +1, -1, -1};
    const KernelSpec spec = KernelSpec::awfk(0.5, 1.0, 0.01);
    const GramMatrix g = gram_of(ds, spec);
    SvmConfig cfg;
    cfg.c = 10.0;
    cfg.kkt_tol = 1e-6;
    const SvmModel model = train(g, ds.labels, cfg, ds.view());
    const double optimum = oracles::qp_optimum_oracle(g.values, ds.labels, cfg.c);
    CHECK_THAT(model.meta.objective, Catch::Matchers::WithinAbs(optimum, 1e-3));
}

TEST_CASE("duplicated point with opposite labels terminates") {
    Dataset ds;
    ds.n = 2;
    ds.dim = 1;
    ds.features = {0.5, 0.5};
    ds.labels = {+1, -1};
    const GramMatrix g = gram_of(ds, KernelSpec::rbf(1.0));
    SvmConfig cfg;
    cfg.c = 1.0;
    const SvmModel model = train(g, ds.labels, cfg, ds.view());
    CHECK(model.meta.converged);
    REQUIRE(model.n_sv == 2);
    for (double coef : model.dual_coefs) CHECK(std::abs(coef) == 1.0);  // pinned at C
}

TEST_CASE("train input validation") {
    Dataset ds = make_random_dense(6, 2, 3);
    const GramMatrix g = gram_of(ds, KernelSpec::rbf(1.0));
    SvmConfig cfg;
    std::vector<int> one_class(6, +1);
    CHECK_THROWS_AS(train(g, one_class, cfg, ds.view()), config_error);
    std::vector<int> short_labels(3, +1);
    CHECK_THROWS_AS(train(g, short_labels, cfg, ds.view()), config_error);
    SvmConfig bad;
    bad.c = -1.0;
    CHECK_THROWS_AS(train(g, ds.labels, bad, ds.view()), config_error);
}

TEST_CASE("max_iter exhaustion reports non-convergence") {
    Dataset ds = make_random_dense(40, 3, 5);
    const GramMatrix g = gram_of(ds, KernelSpec::rbf(1.0));
    SvmConfig cfg;
    cfg.max_iter = 2;
    const SvmModel model = train(g, ds.labels, cfg, ds.view());
    CHECK_FALSE(model.meta.converged);
    CHECK(model.meta.iterations == 2);
}

TEST_CASE("predict") {
    SECTION("hand-built model arithmetic") {
        SvmModel model;
        model.n_sv = 1;
        model.dim = 1;
        model.support_vectors = {0.0};
        model.dual_coefs = {2.0};
        model.bias = -1.0;
        model.spec = KernelSpec::rbf(1.0);
        const DecisionValues dv = predict(model, {0.75}, 1);
        CHECK_THAT(dv.scores[0], Catch::Matchers::WithinAbs(0.5, 1e-15));
        CHECK(dv.labels[0] == +1);
    }
    SECTION("empty test set") {
        SvmModel model;
        model.n_sv = 1;
        model.dim = 1;
        model.support_vectors = {0.0};
        model.dual_coefs = {1.0};
        const DecisionValues dv = predict(model, {}, 0);
        CHECK(dv.scores.empty());
        CHECK(dv.labels.empty());
    }
    SECTION("shape mismatch") {
        SvmModel model;
        model.n_sv = 2;
        CHECK_THROWS_AS(predict(model, {1.0, 2.0, 3.0}, 2), config_error);
    }
    SECTION("tie at zero goes positive") {
        SvmModel model;
        model.n_sv = 1;
        model.dim = 1;
        model.support_vectors = {0.0};
        model.dual_coefs = {1.0};
        model.bias = -1.0;
        const DecisionValues dv = predict(model, {1.0}, 1);
        CHECK(dv.scores[0] == 0.0);
        CHECK(dv.labels[0] == +1);
    }
    SECTION("training margins on a separable problem") {
        const Dataset ds = make_gaussians_with_outliers(20, 2, 8.0, 0, 0.0, 7);
        const KernelSpec spec = KernelSpec::rbf(0.5);
        SvmConfig cfg;
        cfg.c = 100.0;
        const SvmModel model = fit(ds.view(), ds.labels, spec, cfg);
        const DecisionValues dv = decision_function(model, ds.view());
        for (std::size_t i = 0; i < ds.n; ++i) {
            CHECK(ds.labels[i] * dv.scores[i] >= 1.0 - cfg.kkt_tol - 1e-9);
        }
    }
}

TEST_CASE("dual_objective") {
    Dataset ds = make_random_dense(5, 2, 21);
    const GramMatrix g = gram_of(ds, KernelSpec::awfk(0.5, 1.0, 0.0));

    CHECK(dual_objective(g, ds.labels, std::vector<double>(5, 0.0)) == 0.0);

    SECTION("closed form on one point") {
        GramMatrix unit{{1.0}, 1, KernelSpec::rbf(1.0), true};
        const double a = 0.37;
        CHECK_THAT(dual_objective(unit, {+1}, {a}),
                   Catch::Matchers::WithinRel(a - a * a / 2.0, 1e-15));
    }
    SECTION("matches the summation oracle on random feasible alphas") {
        Rng rng(99);
        for (int trial = 0; trial < 20; ++trial) {
            std::vector<double> a(5);
            for (auto& v : a) v = rng.uniform(0.0, 1.0);
            const double got = dual_objective(g, ds.labels, a);
            const double want = oracles::dual_objective_oracle(g.values, ds.labels, a);
            CHECK_THAT(got, Catch::Matchers::WithinRel(want, 1e-12));
        }
    }
}

TEST_CASE("feasibility, kkt and oracle equivalence on random instances") {
    Rng rng(2024);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 3 + rng.below(6);  // up to 8
        const std::size_t d = 1 + rng.below(3);
        Dataset ds = random_instance(rng, n, d);
        bool has_pos = false, has_neg = false;
        for (int y : ds.labels) (y > 0 ? has_pos : has_neg) = true;
        if (!has_pos || !has_neg) continue;
        const double c = rng.uniform(0.5, 20.0);
        const KernelSpec spec = trial % 2 == 0 ? KernelSpec::awfk(0.6, 2.0, 0.05)
                                               : KernelSpec::rbf(0.7);
        const GramMatrix g = gram_of(ds, spec);
        SvmConfig cfg;
        cfg.c = c;
        cfg.kkt_tol = 1e-6;
        const SvmModel model = train(g, ds.labels, cfg, ds.view());
        const auto alphas = dense_alphas(ds, model);

        double balance = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            CHECK(alphas[i] >= 0.0);
            CHECK(alphas[i] <= c + 1e-12);
            balance += alphas[i] * ds.labels[i];
        }
        CHECK(std::abs(balance) <= 1e-8);

        check_kkt(g, ds.labels, model, alphas, c, 1e-4);

        const double optimum = oracles::qp_optimum_oracle(g.values, ds.labels, c);
        CHECK(model.meta.objective >= optimum - 1e-4 * (1.0 + std::abs(optimum)));
        CHECK(model.meta.objective <= optimum + 1e-4 * (1.0 + std::abs(optimum)));
    }
}

TEST_CASE("dual objective is non-decreasing across smo iterations") {
    Dataset ds = make_random_dense(60, 4, 77);
    const GramMatrix g = gram_of(ds, KernelSpec::awfk(0.5, 1.0, 0.01));
    SvmConfig cfg;
    cfg.c = 5.0;
    cfg.shrink = false;  // trace the full-set updates
    std::vector<double> trace;
    const SvmModel model = train(g, ds.labels, cfg, ds.view(), &trace);
    REQUIRE(trace.size() >= 2);
    for (std::size_t i = 1; i < trace.size(); ++i) {
        CHECK(trace[i] >= trace[i - 1] - 1e-10);
    }
    CHECK_THAT(trace.back(), Catch::Matchers::WithinAbs(model.meta.objective, 1e-9));
}

TEST_CASE("permutation invariance of decision values") {
    Rng rng(31337);
    const Dataset ds = make_gaussians_with_outliers(25, 2, 3.0, 3, 12.0, 8);
    const Dataset test = make_random_dense(15, 2, 5);
    const KernelSpec spec = KernelSpec::awfk(0.5, 2.0, 0.05);
    SvmConfig cfg;
    cfg.c = 2.0;
    // The 1e-10 invariance band needs the dual solved essentially to
    // floating-point accuracy; residual kkt violation perturbs scores.
    cfg.kkt_tol = 1e-12;
    const SvmModel base = fit(ds.view(), ds.labels, spec, cfg);
    const DecisionValues base_dv = decision_function(base, test.view());

    std::vector<std::size_t> perm(ds.n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    rng.shuffle(perm);
    Dataset shuffled;
    shuffled.n = ds.n;
    shuffled.dim = ds.dim;
    for (std::size_t i : perm) {
        const auto r = ds.row(i);
        shuffled.features.insert(shuffled.features.end(), r.begin(), r.end());
        shuffled.labels.push_back(ds.labels[i]);
    }
    const SvmModel permuted = fit(shuffled.view(), shuffled.labels, spec, cfg);
    const DecisionValues perm_dv = decision_function(permuted, test.view());
    for (std::size_t i = 0; i < test.n; ++i) {
        CHECK_THAT(perm_dv.scores[i], Catch::Matchers::WithinAbs(base_dv.scores[i], 1e-10));
    }
}

TEST_CASE("label flip negates decision scores") {
    Dataset ds = make_gaussians_with_outliers(20, 2, 3.0, 0, 0.0, 12);
    const Dataset test = make_random_dense(10, 2, 6);
    const KernelSpec spec = KernelSpec::rbf(0.8);
    SvmConfig cfg;
    cfg.c = 3.0;
    cfg.kkt_tol = 1e-7;
    const SvmModel model = fit(ds.view(), ds.labels, spec, cfg);
    Dataset flipped = ds;
    for (int& y : flipped.labels) y = -y;
    const SvmModel neg = fit(flipped.view(), flipped.labels, spec, cfg);
    const DecisionValues a = decision_function(model, test.view());
    const DecisionValues b = decision_function(neg, test.view());
    for (std::size_t i = 0; i < test.n; ++i) {
        CHECK_THAT(b.scores[i], Catch::Matchers::WithinAbs(-a.scores[i], 1e-10));
    }
}

TEST_CASE("model serialization round trip") {
    const Dataset ds = make_gaussians_with_outliers(30, 3, 2.5, 2, 10.0, 19);
    const KernelSpec spec = KernelSpec::awfk(0.37, 1.7, 0.013);
    SvmConfig cfg;
    cfg.c = 4.2;
    const SvmModel model = fit(ds.view(), ds.labels, spec, cfg);

    std::stringstream stream;
    save_model(model, stream);
    const SvmModel loaded = load_model(stream);

    CHECK(loaded.n_sv == model.n_sv);
    CHECK(loaded.dim == model.dim);
    CHECK(loaded.meta.converged == model.meta.converged);

    const Dataset test = make_random_dense(25, 3, 33);
    const DecisionValues a = decision_function(model, test.view());
    const DecisionValues b = decision_function(loaded, test.view());
    for (std::size_t i = 0; i < test.n; ++i) {
        CHECK_THAT(b.scores[i], Catch::Matchers::WithinAbs(a.scores[i],
                                                           1e-15 * (1.0 + std::abs(a.scores[i]))));
    }

    SECTION("bad header is rejected") {
        std::stringstream bad("not-a-model\n");
        CHECK_THROWS_AS(load_model(bad), data_error);
    }
}
