#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "hotrod/artifacts.hpp"
#include "hotrod/config.hpp"
#include "hotrod/csv.hpp"
#include "hotrod/pipeline.hpp"

using namespace hotrod;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(HOTROD_CLI) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

PipelineConfig small_config(const fs::path& data, const fs::path& out) {
    PipelineConfig cfg;
    cfg.data_dir = data;
    cfg.out_dir = out;
    cfg.seed = 7;
    cfg.features.n_days = 2;  // the small fixture has 3 days of each kind
    return cfg;
}

}  // namespace

TEST_CASE("fixture generation is byte-identical for a fixed seed") {
    TempDir a("hotrod_fx_a"), b("hotrod_fx_b");
    make_fixture({7, 3, 6, a.path});
    make_fixture({7, 3, 6, b.path});
    for (const char* name : {"heartrate.csv", "steps.csv", "sleep.csv", "days.csv", "labels.csv",
                             "truth.json"}) {
        CHECK(slurp(a.path / name) == slurp(b.path / name));
    }
    make_fixture({8, 3, 6, b.path});
    CHECK(slurp(a.path / "heartrate.csv") != slurp(b.path / "heartrate.csv"));
}

TEST_CASE("fixture day lengths stay inside the retention band") {
    TempDir dir("hotrod_fx_band");
    make_fixture({11, 2, 8, dir.path});
    CsvTable sleep = read_csv(dir.path / "sleep.csv");
    const int c_pid = sleep.require_column("participant_id");
    const int c_on = sleep.require_column("onset");
    const int c_end = sleep.require_column("end");
    std::map<std::string, std::vector<Timestamp>> onsets;
    for (const auto& row : sleep.rows) {
        const Timestamp on = parse_int(row[static_cast<std::size_t>(c_on)], "onset");
        const Timestamp end = parse_int(row[static_cast<std::size_t>(c_end)], "end");
        if (end - on >= 6 * 3600) onsets[row[static_cast<std::size_t>(c_pid)]].push_back(on);
    }
    for (auto& [pid, v] : onsets) {
        std::sort(v.begin(), v.end());
        for (std::size_t i = 0; i + 1 < v.size(); ++i) {
            const double hours = static_cast<double>(v[i + 1] - v[i]) / 3600.0;
            CHECK(hours >= 20.0);
            CHECK(hours <= 28.0);
        }
    }
}

TEST_CASE("truth.json reference infectivity has spectral radius below 1") {
    TempDir dir("hotrod_fx_truth");
    make_fixture({7, 1, 4, dir.path});
    const auto truth = read_json(dir.path / "truth.json");
    const auto flat = truth.at("hawkes").at("infectivity").get<std::vector<double>>();
    const int u = truth.at("hawkes").at("num_types").get<int>();
    Eigen::MatrixXd a(u, u);
    for (int r = 0; r < u; ++r) {
        for (int c = 0; c < u; ++c) a(r, c) = flat[static_cast<std::size_t>(r * u + c)];
    }
    const auto ev = Eigen::EigenSolver<Eigen::MatrixXd>(a, false).eigenvalues();
    double radius = 0.0;
    for (int i = 0; i < ev.size(); ++i) radius = std::max(radius, std::abs(ev(i)));
    CHECK(radius < 1.0);
}

TEST_CASE("pipeline stages chain, skip when unchanged and force reruns") {
    TempDir data("hotrod_pipe_data"), out("hotrod_pipe_out");
    make_fixture({7, 12, 6, data.path});
    PipelineConfig cfg = small_config(data.path, out.path);

    CHECK(run_pipeline(cfg, false) == 0);
    REQUIRE(fs::exists(out.path / "report.json"));
    const std::string report = slurp(out.path / "report.json");
    const auto mtime = fs::last_write_time(out.path / "models.json");

    // Second run: everything skipped, artifacts untouched.
    CHECK(run_pipeline(cfg, false) == 0);
    CHECK(fs::last_write_time(out.path / "models.json") == mtime);
    CHECK(slurp(out.path / "report.json") == report);

    // force reruns and reproduces the same bytes.
    CHECK(run_pipeline(cfg, true) == 0);
    CHECK(fs::last_write_time(out.path / "models.json") != mtime);
    CHECK(slurp(out.path / "report.json") == report);

    // Group fits accept a participant subset and reject unknown ids.
    CHECK_NOTHROW(run_hawkes(cfg, {"P001", "P002", "P003", "P004"}));
    CHECK_THROWS_WITH_AS(run_hawkes(cfg, {"NOPE"}), doctest::Contains("NOPE"), Error);
}

TEST_CASE("artifacts embed the config hash and evaluate refuses mixed hashes") {
    TempDir data("hotrod_hash_data"), out("hotrod_hash_out");
    make_fixture({7, 12, 6, data.path});
    PipelineConfig cfg = small_config(data.path, out.path);
    CHECK(run_pipeline(cfg, false) == 0);

    CsvTable features = read_csv(out.path / "features.csv");
    REQUIRE(!features.comments.empty());
    CHECK(features.comments[0].find(config_hash(cfg)) != std::string::npos);

    // Tamper with the features hash: evaluate must refuse.
    std::string text = slurp(out.path / "features.csv");
    const auto pos = text.find(config_hash(cfg));
    text.replace(pos, 4, "dead");
    std::ofstream(out.path / "features.csv", std::ios::binary) << text;
    CHECK_THROWS_WITH_AS(run_evaluate(cfg), doctest::Contains("different config"), Error);
}

TEST_CASE("json artifacts have sorted keys and 17-significant-digit floats") {
    nlohmann::json j;
    j["zeta"] = 1.0 / 3.0;
    j["alpha"] = 2;
    const std::string dumped = dump_json(j, 0);
    CHECK(dumped.find("\"alpha\"") < dumped.find("\"zeta\""));
    CHECK(dumped.find("0.33333333333333331") != std::string::npos);
}

TEST_CASE("CLI exit codes: 0 ok, 2 bad input, 3 config error") {
    TempDir data("hotrod_cli_data"), out("hotrod_cli_out");
    make_fixture({7, 3, 6, data.path});

    CHECK(run_cli("fixture --seed 3 --participants 1 --days 2 --out " +
                  (out.path / "fx").string()) == 0);
    // evaluate with missing features/targets names the file and exits 2.
    CHECK(run_cli("evaluate --data-dir " + data.path.string() + " --out-dir " +
                  (out.path / "nowhere").string()) == 2);
    // Unknown config key is a config error.
    std::ofstream(out.path / "bad.json") << "{\"no_such_key\": 1}";
    CHECK(run_cli("run --config " + (out.path / "bad.json").string()) == 3);
    // Unknown flag is a config error too.
    CHECK(run_cli("run --definitely-not-a-flag") == 3);
}

TEST_CASE("CLI simulate writes a deterministic event file") {
    TempDir dir("hotrod_cli_sim");
    make_fixture({7, 1, 4, dir.path});
    const std::string model = (dir.path / "truth.json").string();
    CHECK(run_cli("simulate --model " + model + " --horizon 1440 --seed 5 --out " +
                  (dir.path / "a.json").string()) == 0);
    CHECK(run_cli("simulate --model " + model + " --horizon 1440 --seed 5 --out " +
                  (dir.path / "b.json").string()) == 0);
    CHECK(slurp(dir.path / "a.json") == slurp(dir.path / "b.json"));
    const auto events = read_json(dir.path / "a.json");
    CHECK(events.at("events").size() > 10);
}

TEST_CASE("config round trip preserves every leaf") {
    PipelineConfig cfg;
    cfg.seed = 99;
    cfg.ticc.k = 4;
    cfg.ticc.beta = 25.0;
    cfg.basis.centers = {3.0, 9.0};
    cfg.feature_set = "hotrod";
    TempDir dir("hotrod_cfg");
    write_artifact(dir.path / "cfg.json", dump_json(config_to_json(cfg)));
    const PipelineConfig loaded = load_config(dir.path / "cfg.json");
    CHECK(config_hash(loaded) == config_hash(cfg));
    CHECK(loaded.ticc.k == 4);
    CHECK(loaded.basis.centers == std::vector<double>{3.0, 9.0});
    CHECK(loaded.feature_set == "hotrod");
}

TEST_CASE("HOTROD_WORKERS overrides the worker count") {
    PipelineConfig cfg;
    cfg.workers = 3;
    CHECK(effective_workers(cfg) == 3);
    setenv("HOTROD_WORKERS", "2", 1);
    CHECK(effective_workers(cfg) == 2);
    unsetenv("HOTROD_WORKERS");
}
