// Command-line entry point wiring kernels, solver, data and eval into
// reproducible experiment recipes. Every command with a --seed flag is
// bit-reproducible: identical flags produce byte-identical outputs.

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "awfk/dataset.hpp"
#include "awfk/eval.hpp"
#include "awfk/generators.hpp"
#include "awfk/kernels.hpp"
#include "awfk/solver.hpp"

#include <CLI11.hpp>
#include <json.hpp>

// httplib leaks platform macros that clash with Eigen, keep it last.
#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>
#include <openssl/evp.h>

namespace {

using json = nlohmann::ordered_json;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitData = 2;
constexpr int kExitNoConverge = 3;

unsigned resolve_threads(unsigned flag_value) {
    if (flag_value > 0) return flag_value;
    if (const char* env = std::getenv("AWFK_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v > 0) return static_cast<unsigned>(v);
    }
    return awfk::default_threads();
}

std::vector<double> parse_double_list(const std::string& csv) {
    std::vector<double> out;
    std::stringstream ss(csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (tok.empty()) continue;
        out.push_back(std::stod(tok));
    }
    if (out.empty()) throw awfk::config_error("empty numeric list: '" + csv + "'");
    return out;
}

std::vector<std::uint64_t> parse_seed_list(const std::string& csv) {
    std::vector<std::uint64_t> out;
    std::stringstream ss(csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (tok.empty()) continue;
        out.push_back(std::stoull(tok));
    }
    if (out.empty()) throw awfk::config_error("empty seed list");
    return out;
}

// ---------------------------------------------------------------------------
// Shared flag groups
// ---------------------------------------------------------------------------

struct DataFlags {
    std::string path;
    std::string format = "csv";  // csv | libsvm
    std::size_t label_column = 0;
    std::string positive_token = "1";
    std::string drop_columns;  // comma separated indices
    std::string generate;      // moons | gaussians | dense
    std::size_t gen_n = 400;
    std::size_t gen_d = 2;
    double gen_noise = 0.25;
    double gen_separation = 4.0;
    std::size_t gen_outliers = 0;
    double gen_outlier_radius = 20.0;
    std::uint64_t gen_seed = 0;

    void add_to(CLI::App* cmd) {
        cmd->add_option("--data", path, "Dataset file path");
        cmd->add_option("--format", format, "Dataset file format: csv or libsvm")
            ->check(CLI::IsMember({"csv", "libsvm"}));
        cmd->add_option("--label-col", label_column, "CSV column index holding the label");
        cmd->add_option("--positive", positive_token, "Label token mapped to +1");
        cmd->add_option("--drop-cols", drop_columns,
                        "Comma-separated CSV column indices to exclude (e.g. record ids)");
        cmd->add_option("--generate", generate, "Synthesize a dataset: moons, gaussians, dense")
            ->check(CLI::IsMember({"moons", "gaussians", "dense"}));
        cmd->add_option("--gen-n", gen_n, "Generated sample count (per class for gaussians)");
        cmd->add_option("--gen-d", gen_d, "Generated feature dimension");
        cmd->add_option("--gen-noise", gen_noise, "Moons noise stddev");
        cmd->add_option("--gen-separation", gen_separation, "Gaussian cluster separation");
        cmd->add_option("--gen-outliers", gen_outliers, "Number of injected outliers");
        cmd->add_option("--gen-outlier-radius", gen_outlier_radius, "Outlier radius");
        cmd->add_option("--gen-seed", gen_seed, "Generator seed");
    }

    awfk::Dataset load() const {
        if (!generate.empty()) {
            if (generate == "moons") return awfk::make_two_moons(gen_n, gen_noise, gen_seed);
            if (generate == "gaussians") {
                return awfk::make_gaussians_with_outliers(gen_n, gen_d, gen_separation,
                                                          gen_outliers, gen_outlier_radius,
                                                          gen_seed);
            }
            return awfk::make_random_dense(gen_n, gen_d, gen_seed);
        }
        if (path.empty()) {
            throw awfk::config_error("either --data or --generate is required");
        }
        if (format == "libsvm") return awfk::load_libsvm(path);
        std::set<std::size_t> drop;
        if (!drop_columns.empty()) {
            std::stringstream ss(drop_columns);
            std::string tok;
            while (std::getline(ss, tok, ',')) drop.insert(std::stoul(tok));
        }
        return awfk::load_csv(path, label_column, positive_token, drop);
    }
};

struct KernelFlags {
    std::string kernel = "awfk";  // awfk | rbf
    double s = 0.5;
    double lambda = 1.0;
    double eta = 0.0;
    std::string gamma = "1.0";  // number or "scale"
    std::string deform = "arcsinh";

    void add_to(CLI::App* cmd) {
        cmd->add_option("--kernel", kernel, "Kernel: awfk or rbf")
            ->check(CLI::IsMember({"awfk", "rbf"}));
        cmd->add_option("--s", s, "AWFK fractional order, in (0,1]");
        cmd->add_option("--lambda", lambda, "AWFK characteristic scale, > 0");
        cmd->add_option("--eta", eta, "AWFK amnesia rate, >= 0");
        cmd->add_option("--gamma", gamma, "RBF gamma, a number or 'scale' for 1/(D*meanvar)");
        cmd->add_option("--deform", deform, "AWFK deformation: arcsinh or identity")
            ->check(CLI::IsMember({"arcsinh", "identity"}));
    }

    // `reference` is the (already standardized) training data the kernel will
    // see; 'scale' resolves gamma against its per-feature variances.
    awfk::KernelSpec resolve(const awfk::Dataset& reference) const {
        if (kernel == "rbf") {
            double g;
            if (gamma == "scale") {
                double mean_var = 0.0;
                for (std::size_t k = 0; k < reference.dim; ++k) {
                    double mean = 0.0;
                    for (std::size_t i = 0; i < reference.n; ++i) {
                        mean += reference.features[i * reference.dim + k];
                    }
                    mean /= static_cast<double>(reference.n);
                    double var = 0.0;
                    for (std::size_t i = 0; i < reference.n; ++i) {
                        const double d = reference.features[i * reference.dim + k] - mean;
                        var += d * d;
                    }
                    mean_var += var / static_cast<double>(reference.n);
                }
                mean_var /= static_cast<double>(reference.dim);
                if (mean_var <= 0.0) mean_var = 1.0;
                g = 1.0 / (static_cast<double>(reference.dim) * mean_var);
            } else {
                g = std::stod(gamma);
            }
            return awfk::KernelSpec::rbf(g);
        }
        return awfk::KernelSpec::awfk(
            s, lambda, eta,
            deform == "identity" ? awfk::Deformation::Identity : awfk::Deformation::Arcsinh);
    }
};

json spec_to_json(const awfk::KernelSpec& spec) {
    json j;
    if (spec.is_awfk()) {
        const auto& p = spec.awfk_params();
        j["kernel"] = "awfk";
        j["s"] = p.s;
        j["lambda"] = p.lambda;
        j["eta"] = p.eta;
        j["deform"] = p.deformation == awfk::Deformation::Identity ? "identity" : "arcsinh";
    } else {
        j["kernel"] = "rbf";
        j["gamma"] = spec.rbf_params().gamma;
    }
    return j;
}

json report_to_json(const awfk::EvalReport& r) {
    json j;
    j["accuracy"] = r.accuracy;
    j["f1_negative"] = r.f1_neg;
    j["f1_positive"] = r.f1_pos;
    j["confusion"] = {{r.confusion[0][0], r.confusion[0][1]},
                      {r.confusion[1][0], r.confusion[1][1]}};
    j["gram_seconds"] = r.gram_seconds;
    j["train_seconds"] = r.train_seconds;
    j["spec"] = spec_to_json(r.spec);
    j["c"] = r.c;
    j["converged"] = r.converged;
    j["n_support_vectors"] = r.n_sv;
    if (r.split) {
        j["split"] = {{"test_fraction", r.split->test_fraction},
                      {"seed", r.split->seed},
                      {"stratified", r.split->stratified}};
    }
    return j;
}

void write_stats_csv(const awfk::Standardization& st, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw awfk::data_error("cannot write " + path);
    out << "feature,mean,stddev\n";
    for (std::size_t k = 0; k < st.mean.size(); ++k) {
        out << k << ',' << awfk::format_double(st.mean[k]) << ','
            << awfk::format_double(st.stddev[k]) << '\n';
    }
}

awfk::Standardization read_stats_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw awfk::data_error("cannot open stats file " + path);
    awfk::Standardization st;
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string idx, mean, sd;
        std::getline(ss, idx, ',');
        std::getline(ss, mean, ',');
        std::getline(ss, sd, ',');
        st.mean.push_back(std::stod(mean));
        st.stddev.push_back(std::stod(sd));
    }
    return st;
}

// ---------------------------------------------------------------------------
// fetch-data: download + sha256 verification against a pinned manifest
// ---------------------------------------------------------------------------

std::string sha256_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw awfk::data_error("cannot open " + path);
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
    char buf[1 << 16];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
    }
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx, digest, &len);
    EVP_MD_CTX_free(ctx);
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xf]);
    }
    return out;
}

struct ManifestEntry {
    std::string name;
    std::string sha256;
    std::string url;
};

std::vector<ManifestEntry> read_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw awfk::data_error("cannot open manifest " + path);
    std::vector<ManifestEntry> entries;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::stringstream ss(line);
        ManifestEntry e;
        if (!(ss >> e.name >> e.sha256 >> e.url)) {
            throw awfk::data_error("malformed manifest line: " + line);
        }
        entries.push_back(e);
    }
    return entries;
}

void download(const std::string& url, const std::string& dest) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw awfk::data_error("bad url " + url);
    const std::string scheme = url.substr(0, scheme_end);
    const auto host_end = url.find('/', scheme_end + 3);
    const std::string host = url.substr(scheme_end + 3, host_end - scheme_end - 3);
    const std::string target = host_end == std::string::npos ? "/" : url.substr(host_end);

    auto fetch = [&](auto& client) {
        client.set_follow_location(true);
        client.set_connection_timeout(30);
        client.set_read_timeout(60);
        auto res = client.Get(target);
        if (!res || res->status != 200) {
            throw awfk::data_error("download failed for " + url +
                                   (res ? " (status " + std::to_string(res->status) + ")"
                                        : " (no response)"));
        }
        std::ofstream out(dest, std::ios::binary);
        out.write(res->body.data(), static_cast<std::streamsize>(res->body.size()));
    };
    if (scheme == "https") {
        httplib::SSLClient client(host);
        client.enable_server_certificate_verification(true);
        fetch(client);
    } else {
        httplib::Client client(host);
        fetch(client);
    }
}

int cmd_fetch_data(const std::string& manifest_path, const std::string& out_dir,
                   const std::vector<std::string>& overrides) {
    std::map<std::string, std::string> url_override;
    for (const auto& o : overrides) {
        const auto eq = o.find('=');
        if (eq == std::string::npos) {
            throw awfk::config_error("--override expects name=url, got " + o);
        }
        url_override[o.substr(0, eq)] = o.substr(eq + 1);
    }
    std::filesystem::create_directories(out_dir);
    for (const auto& e : read_manifest(manifest_path)) {
        const std::string dest = out_dir + "/" + e.name;
        if (std::filesystem::exists(dest) && sha256_file(dest) == e.sha256) {
            std::cout << e.name << ": present, checksum ok\n";
            continue;
        }
        const std::string url = url_override.count(e.name) ? url_override[e.name] : e.url;
        std::cout << e.name << ": downloading from " << url << "\n";
        download(url, dest);
        const std::string got = sha256_file(dest);
        if (got != e.sha256) {
            std::filesystem::remove(dest);
            throw awfk::data_error("checksum mismatch for " + e.name + ": expected " + e.sha256 +
                                   ", got " + got);
        }
        std::cout << e.name << ": checksum ok\n";
    }
    return kExitOk;
}

// ---------------------------------------------------------------------------
// train / predict
// ---------------------------------------------------------------------------

int cmd_train(const DataFlags& data_flags, const KernelFlags& kernel_flags, double c,
              double kkt_tol, std::size_t max_iter, double test_fraction, std::uint64_t seed,
              bool no_stratify, const std::string& model_out, const std::string& report_out,
              unsigned threads) {
    const awfk::Dataset full = data_flags.load();
    awfk::SplitSpec split_spec{test_fraction, seed, !no_stratify};
    auto [train_raw, test_raw] = awfk::split(full, split_spec);
    const awfk::Dataset train_ds = awfk::standardize(train_raw);
    const awfk::Dataset test_ds = awfk::apply_standardization(test_raw, *train_ds.standardization);

    const awfk::KernelSpec spec = kernel_flags.resolve(train_ds);
    awfk::SvmConfig cfg;
    cfg.c = c;
    cfg.kkt_tol = kkt_tol;
    cfg.max_iter = max_iter;

    const awfk::GramMatrix g = awfk::gram(train_ds.view(), spec, threads);
    const awfk::SvmModel model = awfk::train(g, train_ds.labels, cfg, train_ds.view());
    awfk::save_model(model, model_out);
    write_stats_csv(*train_ds.standardization, model_out + ".stats");

    awfk::EvalReport report = awfk::evaluate(train_ds, test_ds, spec, c, threads);
    report.split = split_spec;
    report.converged = model.meta.converged;
    const json j = report_to_json(report);
    if (!report_out.empty()) {
        std::ofstream out(report_out);
        if (!out) throw awfk::data_error("cannot write " + report_out);
        out << j.dump(2) << "\n";
    }
    std::cout << j.dump(2) << "\n";
    return model.meta.converged ? kExitOk : kExitNoConverge;
}

int cmd_predict(const std::string& model_path, const std::string& stats_path,
                const DataFlags& data_flags, const std::string& out_path, unsigned threads) {
    const awfk::SvmModel model = awfk::load_model(model_path);
    awfk::Dataset ds = data_flags.load();
    if (!stats_path.empty()) {
        ds = awfk::apply_standardization(ds, read_stats_csv(stats_path));
    }
    const awfk::DecisionValues dv = awfk::decision_function(model, ds.view(), threads);
    std::ostream* out = &std::cout;
    std::ofstream file;
    if (!out_path.empty()) {
        file.open(out_path);
        if (!file) throw awfk::data_error("cannot write " + out_path);
        out = &file;
    }
    *out << "index,score,label\n";
    for (std::size_t i = 0; i < dv.scores.size(); ++i) {
        *out << i << ',' << awfk::format_double(dv.scores[i]) << ',' << dv.labels[i] << '\n';
    }
    return kExitOk;
}

// ---------------------------------------------------------------------------
// benchmark: AWFK vs RBF across seeds with grid-searched C / gamma
// ---------------------------------------------------------------------------

struct BenchmarkRow {
    std::uint64_t seed;
    std::string kernel;
    double accuracy, f1_neg, f1_pos, chosen_c, chosen_gamma;
};

int cmd_benchmark(const DataFlags& data_flags, double s, double lambda, double eta,
                  const std::string& seeds_csv, double test_fraction,
                  const std::string& c_grid_csv, const std::string& gamma_grid_csv,
                  std::size_t k_folds, const std::string& out_path, unsigned threads) {
    const awfk::Dataset full = data_flags.load();
    const auto seeds = parse_seed_list(seeds_csv);
    const auto c_grid = parse_double_list(c_grid_csv);
    const auto gamma_grid = parse_double_list(gamma_grid_csv);

    std::vector<BenchmarkRow> rows;
    double awfk_acc_sum = 0.0, rbf_acc_sum = 0.0;
    std::size_t awfk_wins = 0;
    for (const std::uint64_t seed : seeds) {
        awfk::SplitSpec split_spec{test_fraction, seed, true};
        auto [train_raw, test_raw] = awfk::split(full, split_spec);
        const awfk::Dataset train_ds = awfk::standardize(train_raw);
        const awfk::Dataset test_ds =
            awfk::apply_standardization(test_raw, *train_ds.standardization);

        // AWFK: kernel hyperparameters fixed by flags, C selected by CV on the
        // train side.
        const awfk::GridResult ag =
            awfk::grid_search(train_ds, awfk::KernelFamily::Awfk,
                              {{"s", {s}}, {"lambda", {lambda}}, {"eta", {eta}}}, c_grid,
                              k_folds, seed, threads);
        const double awfk_c = ag.axes.back().values[ag.best_cell.back()];
        const awfk::EvalReport ar =
            awfk::evaluate(train_ds, test_ds, awfk::KernelSpec::awfk(s, lambda, eta), awfk_c,
                           threads);

        // RBF: both gamma and C searched, as the baseline's settings are free.
        const awfk::GridResult rg = awfk::grid_search(
            train_ds, awfk::KernelFamily::Rbf, {{"gamma", gamma_grid}}, c_grid, k_folds, seed,
            threads);
        const double rbf_gamma = rg.axes[0].values[rg.best_cell[0]];
        const double rbf_c = rg.axes.back().values[rg.best_cell.back()];
        const awfk::EvalReport rr =
            awfk::evaluate(train_ds, test_ds, awfk::KernelSpec::rbf(rbf_gamma), rbf_c, threads);

        rows.push_back({seed, "awfk", ar.accuracy, ar.f1_neg, ar.f1_pos, awfk_c, 0.0});
        rows.push_back({seed, "rbf", rr.accuracy, rr.f1_neg, rr.f1_pos, rbf_c, rbf_gamma});
        awfk_acc_sum += ar.accuracy;
        rbf_acc_sum += rr.accuracy;
        if (ar.accuracy >= rr.accuracy) ++awfk_wins;
    }

    const double n_seeds = static_cast<double>(seeds.size());
    const double awfk_mean = awfk_acc_sum / n_seeds;
    const double rbf_mean = rbf_acc_sum / n_seeds;
    const double reduction = awfk::error_rate_reduction(awfk_mean, rbf_mean);

    std::ostringstream csv;
    csv << "seed,kernel,accuracy,f1_negative,f1_positive,c,gamma\n";
    for (const auto& r : rows) {
        csv << r.seed << ',' << r.kernel << ',' << awfk::format_double(r.accuracy) << ','
            << awfk::format_double(r.f1_neg) << ',' << awfk::format_double(r.f1_pos) << ','
            << awfk::format_double(r.chosen_c) << ',' << awfk::format_double(r.chosen_gamma)
            << '\n';
    }
    csv << "mean,awfk," << awfk::format_double(awfk_mean) << ",,,,\n";
    csv << "mean,rbf," << awfk::format_double(rbf_mean) << ",,,,\n";
    csv << "error_rate_reduction,," << awfk::format_double(reduction) << ",,,,\n";
    if (!out_path.empty()) {
        std::ofstream out(out_path);
        if (!out) throw awfk::data_error("cannot write " + out_path);
        out << csv.str();
    }
    std::cout << csv.str();
    std::cout << "awfk wins on " << awfk_wins << "/" << seeds.size() << " seeds\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------
// gridsearch / heatmap / boundary / bench-time
// ---------------------------------------------------------------------------

int cmd_gridsearch(const DataFlags& data_flags, const std::string& family_name,
                   const std::vector<std::string>& axis_specs, const std::string& c_grid_csv,
                   std::size_t k_folds, std::uint64_t seed, const std::string& out_path,
                   unsigned threads) {
    const awfk::Dataset ds = data_flags.load();
    std::vector<awfk::GridAxis> axes;
    for (const auto& a : axis_specs) {
        const auto eq = a.find('=');
        if (eq == std::string::npos) {
            throw awfk::config_error("--axis expects name=v1,v2,..., got " + a);
        }
        axes.push_back({a.substr(0, eq), parse_double_list(a.substr(eq + 1))});
    }
    const auto family =
        family_name == "rbf" ? awfk::KernelFamily::Rbf : awfk::KernelFamily::Awfk;
    const awfk::GridResult grid = awfk::grid_search(ds, family, axes,
                                                    parse_double_list(c_grid_csv), k_folds,
                                                    seed, threads);
    std::ostringstream csv;
    for (const auto& axis : grid.axes) csv << axis.name << ',';
    csv << "mean_accuracy\n";
    std::vector<std::size_t> cell(grid.axes.size(), 0);
    for (std::size_t flat = 0; flat < grid.scores.size(); ++flat) {
        for (std::size_t a = 0; a < grid.axes.size(); ++a) {
            csv << awfk::format_double(grid.axes[a].values[cell[a]]) << ',';
        }
        csv << awfk::format_double(grid.scores[flat]) << '\n';
        for (std::size_t a = grid.axes.size(); a-- > 0;) {
            if (++cell[a] < grid.axes[a].values.size()) break;
            cell[a] = 0;
        }
    }
    csv << "# best";
    for (std::size_t a = 0; a < grid.axes.size(); ++a) {
        csv << ' ' << grid.axes[a].name << '='
            << awfk::format_double(grid.axes[a].values[grid.best_cell[a]]);
    }
    csv << " mean_accuracy=" << awfk::format_double(grid.best_score) << '\n';
    if (!out_path.empty()) {
        std::ofstream out(out_path);
        if (!out) throw awfk::data_error("cannot write " + out_path);
        out << csv.str();
    }
    std::cout << csv.str();
    return kExitOk;
}

int cmd_heatmap(const DataFlags& data_flags, const std::string& s_grid_csv,
                const std::string& eta_grid_csv, double lambda, double c, std::size_t k_folds,
                std::uint64_t seed, const std::string& out_path, unsigned threads) {
    const awfk::Dataset ds = data_flags.load();
    const awfk::GridResult grid =
        awfk::sensitivity_heatmap(ds, parse_double_list(s_grid_csv),
                                  parse_double_list(eta_grid_csv), lambda, c, k_folds, seed,
                                  threads);
    awfk::write_heatmap_csv(grid, out_path);
    std::cout << "wrote " << out_path << "\n";
    return kExitOk;
}

int cmd_boundary(const DataFlags& data_flags, const KernelFlags& kernel_flags, double c,
                 double x_min, double x_max, double y_min, double y_max, std::size_t resolution,
                 const std::string& out_path, unsigned threads) {
    const awfk::Dataset raw = data_flags.load();
    if (raw.dim != 2) {
        throw awfk::config_error("boundary requires 2-D data, got dim=" +
                                 std::to_string(raw.dim));
    }
    const awfk::Dataset ds = awfk::standardize(raw);
    const awfk::KernelSpec spec = kernel_flags.resolve(ds);
    awfk::SvmConfig cfg;
    cfg.c = c;
    const awfk::SvmModel model = awfk::fit(ds.view(), ds.labels, spec, cfg, threads);
    const awfk::BoundaryGrid grid = awfk::export_boundary(
        model, ds.standardization, {x_min, x_max}, {y_min, y_max}, resolution, threads);
    awfk::write_boundary_csv(grid, out_path);
    std::cout << "wrote " << out_path << "\n";
    return kExitOk;
}

int cmd_bench_time(std::size_t n, std::size_t d, const KernelFlags& kernel_flags,
                   std::uint64_t seed, const std::string& out_path, unsigned threads) {
    // Resolve 'scale' against the data the benchmark will generate.
    const awfk::Dataset probe = awfk::make_random_dense(std::min<std::size_t>(n, 256), d, seed);
    const awfk::KernelSpec spec = kernel_flags.resolve(probe);
    const awfk::TimingReport report = awfk::timing_bench(n, d, spec, seed, 1.0, threads);
    json j;
    j["n"] = n;
    j["d"] = d;
    j["spec"] = spec_to_json(spec);
    j["gram_seconds"] = report.gram_seconds;
    j["train_seconds"] = report.train_seconds;
    if (!out_path.empty()) {
        std::ofstream out(out_path);
        if (!out) throw awfk::data_error("cannot write " + out_path);
        out << j.dump(2) << "\n";
    }
    std::cout << j.dump(2) << "\n";
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Amnesia-weighted heavy-tailed kernel SVM toolkit"};
    app.require_subcommand(1);
    unsigned threads = 0;
    app.add_option("--threads", threads,
                   "Worker threads (default: AWFK_THREADS env or hardware concurrency)");

    // train
    auto* train_cmd = app.add_subcommand("train", "Train a model and report on a held-out split");
    DataFlags train_data;
    KernelFlags train_kernel;
    train_data.add_to(train_cmd);
    train_kernel.add_to(train_cmd);
    double train_c = 1.0, train_kkt_tol = 1e-3, train_frac = 0.3;
    std::size_t train_max_iter = 10'000'000;
    std::uint64_t train_seed = 0;
    bool train_no_stratify = false;
    std::string model_out = "model.txt", report_out;
    train_cmd->add_option("--c", train_c, "Box constraint C");
    train_cmd->add_option("--kkt-tol", train_kkt_tol, "KKT stopping tolerance");
    train_cmd->add_option("--max-iter", train_max_iter, "Pair-update cap");
    train_cmd->add_option("--test-fraction", train_frac, "Held-out fraction");
    train_cmd->add_option("--seed", train_seed, "Split seed");
    train_cmd->add_flag("--no-stratify", train_no_stratify, "Disable stratified splitting");
    train_cmd->add_option("--model-out", model_out, "Model file path");
    train_cmd->add_option("--report-out", report_out, "Report JSON path");

    // predict
    auto* predict_cmd = app.add_subcommand("predict", "Score a dataset with a saved model");
    DataFlags predict_data;
    predict_data.add_to(predict_cmd);
    std::string predict_model, predict_stats, predict_out;
    predict_cmd->add_option("--model", predict_model, "Model file")->required();
    predict_cmd->add_option("--stats", predict_stats,
                            "Standardization stats CSV written next to the model");
    predict_cmd->add_option("--out", predict_out, "Predictions CSV path (default stdout)");

    // benchmark
    auto* bench_cmd = app.add_subcommand("benchmark", "AWFK vs RBF comparison across seeds");
    DataFlags bench_data;
    bench_data.add_to(bench_cmd);
    double bench_s = 0.5, bench_lambda = 3.0, bench_eta = 1e-4, bench_frac = 0.15;
    std::string bench_seeds = "0,1,2,3,4,5,6,7,8,9,10,11,12,13,14,15,16,17,18,19";
    std::string bench_c_grid = "1,10,100", bench_gamma_grid = "0.01,0.03,0.1,0.3", bench_out;
    std::size_t bench_folds = 5;
    bench_cmd->add_option("--s", bench_s, "AWFK fractional order");
    bench_cmd->add_option("--lambda", bench_lambda, "AWFK scale");
    bench_cmd->add_option("--eta", bench_eta, "AWFK amnesia rate");
    bench_cmd->add_option("--seeds", bench_seeds, "Comma-separated split seeds");
    bench_cmd->add_option("--test-fraction", bench_frac, "Held-out fraction per seed");
    bench_cmd->add_option("--c-grid", bench_c_grid, "C candidates for both kernels");
    bench_cmd->add_option("--gamma-grid", bench_gamma_grid, "RBF gamma candidates");
    bench_cmd->add_option("--k-folds", bench_folds, "CV folds for the inner search");
    bench_cmd->add_option("--out", bench_out, "Comparison table CSV path");

    // gridsearch
    auto* grid_cmd = app.add_subcommand("gridsearch", "Exhaustive hyperparameter sweep");
    DataFlags grid_data;
    grid_data.add_to(grid_cmd);
    std::string grid_family = "awfk", grid_c_grid = "1", grid_out;
    std::vector<std::string> grid_axes;
    std::size_t grid_folds = 5;
    std::uint64_t grid_seed = 0;
    grid_cmd->add_option("--family", grid_family, "Kernel family: awfk or rbf")
        ->check(CLI::IsMember({"awfk", "rbf"}));
    grid_cmd->add_option("--axis", grid_axes, "Axis as name=v1,v2,... (repeatable)");
    grid_cmd->add_option("--c-grid", grid_c_grid, "C candidates");
    grid_cmd->add_option("--k-folds", grid_folds, "CV folds");
    grid_cmd->add_option("--seed", grid_seed, "CV fold seed");
    grid_cmd->add_option("--out", grid_out, "Result CSV path");

    // heatmap
    auto* heat_cmd = app.add_subcommand("heatmap", "(s, eta) sensitivity sweep CSV");
    DataFlags heat_data;
    heat_data.add_to(heat_cmd);
    std::string heat_s = "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1.0";
    // log-spaced over [1e-4, 1]
    std::string heat_eta =
        "0.0001,0.000278,0.000774,0.00215,0.00599,0.0167,0.0464,0.129,0.359,1.0";
    std::string heat_out = "heatmap.csv";
    double heat_lambda = 3.0, heat_c = 100.0;
    std::size_t heat_folds = 5;
    std::uint64_t heat_seed = 0;
    heat_cmd->add_option("--s-grid", heat_s, "Fractional-order values");
    heat_cmd->add_option("--eta-grid", heat_eta, "Amnesia-rate values");
    heat_cmd->add_option("--lambda", heat_lambda, "Fixed scale");
    heat_cmd->add_option("--c", heat_c, "Fixed box constraint");
    heat_cmd->add_option("--k-folds", heat_folds, "CV folds");
    heat_cmd->add_option("--seed", heat_seed, "CV fold seed");
    heat_cmd->add_option("--out", heat_out, "Heatmap CSV path");

    // boundary
    auto* bound_cmd = app.add_subcommand("boundary", "Decision-score grid over 2-D data");
    DataFlags bound_data;
    KernelFlags bound_kernel;
    bound_data.add_to(bound_cmd);
    bound_kernel.add_to(bound_cmd);
    double bound_c = 1.0, bx0 = -3.0, bx1 = 3.0, by0 = -3.0, by1 = 3.0;
    std::size_t bound_res = 100;
    std::string bound_out = "boundary.csv";
    bound_cmd->add_option("--c", bound_c, "Box constraint C");
    bound_cmd->add_option("--x-min", bx0, "Grid x minimum");
    bound_cmd->add_option("--x-max", bx1, "Grid x maximum");
    bound_cmd->add_option("--y-min", by0, "Grid y minimum");
    bound_cmd->add_option("--y-max", by1, "Grid y maximum");
    bound_cmd->add_option("--resolution", bound_res, "Nodes per axis");
    bound_cmd->add_option("--out", bound_out, "Boundary CSV path");

    // bench-time
    auto* time_cmd = app.add_subcommand("bench-time", "Gram and training wall-clock benchmark");
    KernelFlags time_kernel;
    time_kernel.add_to(time_cmd);
    std::size_t time_n = 5000, time_d = 20;
    std::uint64_t time_seed = 0;
    std::string time_out;
    time_cmd->add_option("--n", time_n, "Sample count");
    time_cmd->add_option("--d", time_d, "Feature dimension");
    time_cmd->add_option("--seed", time_seed, "Data seed");
    time_cmd->add_option("--out", time_out, "Timing JSON path");

    // fetch-data
    auto* fetch_cmd = app.add_subcommand("fetch-data", "Download datasets and verify checksums");
    std::string fetch_manifest = "datasets.manifest", fetch_dir = "data";
    std::vector<std::string> fetch_overrides;
    fetch_cmd->add_option("--manifest", fetch_manifest, "Manifest file (name sha256 url)");
    fetch_cmd->add_option("--out-dir", fetch_dir, "Destination directory");
    fetch_cmd->add_option("--override", fetch_overrides,
                          "Replace a download URL, as name=url (repeatable)");

    CLI11_PARSE(app, argc, argv);

    try {
        const unsigned n_threads = resolve_threads(threads);
        if (app.got_subcommand(train_cmd)) {
            return cmd_train(train_data, train_kernel, train_c, train_kkt_tol, train_max_iter,
                             train_frac, train_seed, train_no_stratify, model_out, report_out,
                             n_threads);
        }
        if (app.got_subcommand(predict_cmd)) {
            return cmd_predict(predict_model, predict_stats, predict_data, predict_out,
                               n_threads);
        }
        if (app.got_subcommand(bench_cmd)) {
            return cmd_benchmark(bench_data, bench_s, bench_lambda, bench_eta, bench_seeds,
                                 bench_frac, bench_c_grid, bench_gamma_grid, bench_folds,
                                 bench_out, n_threads);
        }
        if (app.got_subcommand(grid_cmd)) {
            return cmd_gridsearch(grid_data, grid_family, grid_axes, grid_c_grid, grid_folds,
                                  grid_seed, grid_out, n_threads);
        }
        if (app.got_subcommand(heat_cmd)) {
            return cmd_heatmap(heat_data, heat_s, heat_eta, heat_lambda, heat_c, heat_folds,
                               heat_seed, heat_out, n_threads);
        }
        if (app.got_subcommand(bound_cmd)) {
            return cmd_boundary(bound_data, bound_kernel, bound_c, bx0, bx1, by0, by1, bound_res,
                                bound_out, n_threads);
        }
        if (app.got_subcommand(time_cmd)) {
            return cmd_bench_time(time_n, time_d, time_kernel, time_seed, time_out, n_threads);
        }
        if (app.got_subcommand(fetch_cmd)) {
            return cmd_fetch_data(fetch_manifest, fetch_dir, fetch_overrides);
        }
    } catch (const awfk::config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const awfk::data_error& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }
    return kExitOk;
}
