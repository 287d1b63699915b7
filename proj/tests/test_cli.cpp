#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

const std::string cli = AWFK_CLI_PATH;

struct RunResult {
    int exit_code;
    std::string output;
};

RunResult run(const std::string& args) {
    const auto out_file = fs::temp_directory_path() / "awfk_cli_out.txt";
    const std::string cmd = cli + " " + args + " > " + out_file.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    std::ifstream in(out_file);
    std::stringstream ss;
    ss << in.rdbuf();
    fs::remove(out_file);
    return {WEXITSTATUS(status), ss.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

TEST_CASE("help exits zero and lists subcommands") {
    const RunResult r = run("--help");
    CHECK(r.exit_code == 0);
    for (const char* sub : {"train", "predict", "benchmark", "gridsearch", "heatmap",
                            "boundary", "bench-time", "fetch-data"}) {
        CHECK_THAT(r.output, Catch::Matchers::ContainsSubstring(sub));
    }
    CHECK(run("train --help").exit_code == 0);
}

TEST_CASE("unknown flags are rejected") {
    const RunResult r = run("train --generate moons --definitely-not-a-flag 1");
    CHECK(r.exit_code != 0);
}

TEST_CASE("invalid fractional order names the constraint") {
    const auto dir = fs::temp_directory_path() / "awfk_cli_bad_s";
    fs::create_directories(dir);
    const RunResult r = run("train --generate moons --gen-n 40 --kernel awfk --s 1.5 "
                            "--model-out " + (dir / "m.txt").string());
    CHECK(r.exit_code == 1);
    CHECK_THAT(r.output, Catch::Matchers::ContainsSubstring("0 < s <= 1"));
    fs::remove_all(dir);
}

TEST_CASE("nonexistent dataset path exits 2") {
    const RunResult r = run("benchmark --data /no/such/file.csv --seeds 0");
    CHECK(r.exit_code == 2);
}

TEST_CASE("train on generated moons writes model and report") {
    const auto dir = fs::temp_directory_path() / "awfk_cli_train";
    fs::create_directories(dir);
    const auto model = (dir / "model.txt").string();
    const auto report = (dir / "report.json").string();
    const RunResult r = run("train --generate moons --gen-n 120 --gen-noise 0.2 --gen-seed 3 "
                            "--kernel awfk --s 0.5 --lambda 1.0 --eta 0.01 --c 5 --seed 1 "
                            "--model-out " + model + " --report-out " + report);
    CHECK(r.exit_code == 0);
    CHECK(fs::exists(model));
    CHECK(fs::exists(model + ".stats"));
    CHECK(fs::exists(report));
    const std::string rep = slurp(report);
    CHECK_THAT(rep, Catch::Matchers::ContainsSubstring("\"accuracy\""));

    SECTION("predict consumes the saved model") {
        const auto pred = (dir / "pred.csv").string();
        const RunResult p = run("predict --model " + model + " --stats " + model + ".stats " +
                                "--generate moons --gen-n 30 --gen-seed 4 --out " + pred);
        CHECK(p.exit_code == 0);
        std::ifstream in(pred);
        std::string line;
        std::getline(in, line);
        CHECK(line == "index,score,label");
    }
    fs::remove_all(dir);
}

TEST_CASE("gamma scale heuristic is echoed") {
    const auto dir = fs::temp_directory_path() / "awfk_cli_scale";
    fs::create_directories(dir);
    const auto report = (dir / "report.json").string();
    const RunResult r = run("train --generate dense --gen-n 80 --gen-d 5 --gen-seed 7 "
                            "--kernel rbf --gamma scale --seed 2 "
                            "--model-out " + (dir / "m.txt").string() +
                            " --report-out " + report);
    CHECK(r.exit_code == 0);
    // The kernel sees standardized training data: unit variance per feature,
    // so gamma = 1/(D * meanvar) = 1/5.
    const std::string rep = slurp(report);
    CHECK_THAT(rep, Catch::Matchers::ContainsSubstring("\"gamma\": 0.2"));
    fs::remove_all(dir);
}

TEST_CASE("heatmap and boundary emit csv of the right shape") {
    const auto dir = fs::temp_directory_path() / "awfk_cli_csv";
    fs::create_directories(dir);

    const auto heat = (dir / "heat.csv").string();
    const RunResult h = run("heatmap --generate gaussians --gen-n 15 --gen-separation 6 "
                            "--gen-seed 1 --s-grid 0.3,0.7 --eta-grid 0.01,0.1 --k-folds 3 "
                            "--seed 0 --out " + heat);
    CHECK(h.exit_code == 0);
    {
        std::ifstream in(heat);
        std::string line;
        int rows = -1;
        while (std::getline(in, line)) rows += !line.empty();
        CHECK(rows == 4);  // 2x2 grid
    }

    const auto bound = (dir / "bound.csv").string();
    const RunResult b = run("boundary --generate moons --gen-n 60 --gen-noise 0.15 --gen-seed 2 "
                            "--kernel awfk --s 0.5 --resolution 100 --out " + bound);
    CHECK(b.exit_code == 0);
    {
        std::ifstream in(bound);
        std::string line;
        int rows = -1;
        while (std::getline(in, line)) rows += !line.empty();
        CHECK(rows == 10000);
    }
    fs::remove_all(dir);
}

TEST_CASE("seeded commands are byte-identical across reruns") {
    const auto dir = fs::temp_directory_path() / "awfk_cli_det";
    fs::create_directories(dir);
    const std::string flags = "benchmark --generate moons --gen-n 80 --gen-noise 0.2 "
                              "--gen-seed 5 --seeds 0,1 --test-fraction 0.25 --c-grid 1,10 "
                              "--gamma-grid 0.5,1 --k-folds 3 --out ";
    const auto a = (dir / "a.csv").string();
    const auto b = (dir / "b.csv").string();
    CHECK(run(flags + a).exit_code == 0);
    CHECK(run(flags + b).exit_code == 0);
    CHECK(slurp(a) == slurp(b));
    CHECK_THAT(slurp(a), Catch::Matchers::ContainsSubstring("error_rate_reduction"));
    fs::remove_all(dir);
}

TEST_CASE("bench-time reports timings") {
    const RunResult r = run("bench-time --n 300 --d 5 --kernel awfk --seed 0");
    CHECK(r.exit_code == 0);
    CHECK_THAT(r.output, Catch::Matchers::ContainsSubstring("gram_seconds"));
    CHECK_THAT(r.output, Catch::Matchers::ContainsSubstring("train_seconds"));
}

TEST_CASE("fetch-data verifies staged files against the manifest") {
    // Offline check: the staged data files must hash to the pinned values,
    // in which case fetch-data succeeds without touching the network.
    const std::string manifest = std::string(AWFK_SOURCE_DIR) + "/datasets.manifest";
    const std::string data_dir = std::string(AWFK_SOURCE_DIR) + "/data";
    if (!fs::exists(data_dir + "/ionosphere.csv")) {
        SKIP("datasets not staged; run fetch-data first");
    }
    const RunResult r = run("fetch-data --manifest " + manifest + " --out-dir " + data_dir);
    CHECK(r.exit_code == 0);
    CHECK_THAT(r.output, Catch::Matchers::ContainsSubstring("checksum ok"));
}

TEST_CASE("fetch-data rejects a corrupt manifest entry") {
    const auto dir = fs::temp_directory_path() / "awfk_cli_fetch";
    fs::create_directories(dir);
    const auto manifest = dir / "bad.manifest";
    {
        std::ofstream out(manifest);
        out << "ionosphere.csv 0000000000000000000000000000000000000000000000000000000000000000 "
               "https://localhost/none\n";
    }
    // Stage a file whose hash cannot match the all-zero digest.
    {
        std::ofstream out(dir / "ionosphere.csv");
        out << "1,2,g\n";
    }
    const RunResult r = run("fetch-data --manifest " + manifest.string() + " --out-dir " +
                            dir.string());
    CHECK(r.exit_code == 2);
    fs::remove_all(dir);
}
