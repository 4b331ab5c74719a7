// hotrod: routine-feature discovery from wearable minute data.
//
// The pipeline turns raw heart-rate/step streams into day segments, clusters
// them with a Toeplitz-constrained Gaussian mixture over sliding windows,
// extracts cluster-transition events, fits a self-exciting point process per
// day kind, and evaluates the resulting infectivity features with a random
// forest.

#include <CLI11.hpp>
#include <iostream>

#include "hotrod/artifacts.hpp"
#include "hotrod/config.hpp"
#include "hotrod/csv.hpp"
#include "hotrod/hawkes.hpp"
#include "hotrod/pipeline.hpp"

namespace {

struct CommonOpts {
    std::string config_path;
    std::string data_dir;
    std::string out_dir;
    std::int64_t seed = -1;
    int workers = -1;
    std::string feature_set;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config_path, "JSON config file; flags override its leaves");
    cmd->add_option("--data-dir", opts.data_dir, "directory with the input CSVs");
    cmd->add_option("--out-dir", opts.out_dir, "artifact directory");
    cmd->add_option("--seed", opts.seed, "global seed");
    cmd->add_option("--workers", opts.workers, "worker threads (HOTROD_WORKERS overrides)");
}

hotrod::PipelineConfig resolve(const CommonOpts& opts) {
    hotrod::PipelineConfig cfg;
    if (!opts.config_path.empty()) cfg = hotrod::load_config(opts.config_path);
    if (!opts.data_dir.empty()) cfg.data_dir = opts.data_dir;
    if (!opts.out_dir.empty()) cfg.out_dir = opts.out_dir;
    if (opts.seed >= 0) cfg.seed = static_cast<std::uint64_t>(opts.seed);
    if (opts.workers >= 0) cfg.workers = opts.workers;
    if (!opts.feature_set.empty()) {
        if (opts.feature_set != "summary" && opts.feature_set != "hotrod" &&
            opts.feature_set != "combined") {
            hotrod::fail_config("--feature-set must be summary, hotrod or combined");
        }
        cfg.feature_set = opts.feature_set;
    }
    return cfg;
}

hotrod::HawkesModel model_from_json(const nlohmann::json& j) {
    hotrod::HawkesModel model;
    const auto base = j.at("base_per_minute").get<std::vector<double>>();
    const int u = static_cast<int>(base.size());
    model.base = Eigen::Map<const Eigen::VectorXd>(base.data(), u);
    model.basis.centers = j.at("basis_centers").get<std::vector<double>>();
    model.basis.sigma = j.at("basis_sigma").get<double>();
    const int m = model.basis.count();
    model.coeffs.assign(static_cast<std::size_t>(m), Eigen::MatrixXd::Zero(u, u));
    if (j.contains("coeffs")) {
        const auto flat = j.at("coeffs").get<std::vector<double>>();
        if (static_cast<int>(flat.size()) != m * u * u) {
            hotrod::fail_input("simulate: coeffs must hold M*U*U values");
        }
        for (int b = 0; b < m; ++b) {
            for (int r = 0; r < u; ++r) {
                for (int c = 0; c < u; ++c) {
                    model.coeffs[static_cast<std::size_t>(b)](r, c) =
                        flat[static_cast<std::size_t>((b * u + r) * u + c)];
                }
            }
        }
    } else {
        // An infectivity matrix alone: split it evenly across the bases.
        const auto flat = j.at("infectivity").get<std::vector<double>>();
        if (static_cast<int>(flat.size()) != u * u) {
            hotrod::fail_input("simulate: infectivity must hold U*U values");
        }
        for (int b = 0; b < m; ++b) {
            for (int r = 0; r < u; ++r) {
                for (int c = 0; c < u; ++c) {
                    model.coeffs[static_cast<std::size_t>(b)](r, c) =
                        flat[static_cast<std::size_t>(r * u + c)] / m;
                }
            }
        }
    }
    return model;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"routine features from wearable time series"};
    app.require_subcommand(1);

    CommonOpts opts;
    bool force = false;

    auto* cmd_pre = app.add_subcommand("preprocess", "aggregate, impute, smooth and normalize per day");
    add_common(cmd_pre, opts);
    auto* cmd_cluster = app.add_subcommand("cluster", "fit window clusters and label every minute");
    add_common(cmd_cluster, opts);
    auto* cmd_hawkes = app.add_subcommand("hawkes", "fit transition-event models per day kind");
    add_common(cmd_hawkes, opts);
    std::vector<std::string> hawkes_participants;
    cmd_hawkes->add_option("--participants", hawkes_participants,
                           "restrict the group to these participants (default: all)")
        ->delimiter(',');
    auto* cmd_features = app.add_subcommand("features", "build feature and target tables");
    add_common(cmd_features, opts);
    auto* cmd_eval = app.add_subcommand("evaluate", "cross-validated random-forest report");
    add_common(cmd_eval, opts);
    cmd_eval->add_option("--feature-set", opts.feature_set, "summary | hotrod | combined");
    auto* cmd_run = app.add_subcommand("run", "full pipeline with stage skipping");
    add_common(cmd_run, opts);
    cmd_run->add_option("--feature-set", opts.feature_set, "summary | hotrod | combined");
    cmd_run->add_flag("--force", force, "rerun every stage even when up to date");

    hotrod::FixtureOptions fx;
    std::string fixture_out = "fixture";
    std::int64_t fixture_seed = 7;
    auto* cmd_fixture = app.add_subcommand("fixture", "write a synthetic dataset with truth.json");
    cmd_fixture->add_option("--seed", fixture_seed, "generator seed");
    cmd_fixture->add_option("--out", fixture_out, "output directory");
    cmd_fixture->add_option("--participants", fx.participants, "participant count");
    cmd_fixture->add_option("--days", fx.days, "days per participant");

    std::string sim_model, sim_out = "events.json";
    double sim_horizon = 1440.0;
    std::int64_t sim_seed = 1;
    auto* cmd_sim = app.add_subcommand("simulate", "sample a self-exciting event sequence");
    cmd_sim->add_option("--model", sim_model, "model JSON (base, basis, coeffs or infectivity)")
        ->required();
    cmd_sim->add_option("--horizon", sim_horizon, "minutes to simulate");
    cmd_sim->add_option("--seed", sim_seed, "simulation seed");
    cmd_sim->add_option("--out", sim_out, "output JSON path");

    try {
        app.parse(argc, argv);

        if (cmd_pre->parsed()) {
            hotrod::run_preprocess(resolve(opts));
        } else if (cmd_cluster->parsed()) {
            hotrod::run_cluster(resolve(opts));
        } else if (cmd_hawkes->parsed()) {
            hotrod::run_hawkes(resolve(opts), hawkes_participants);
        } else if (cmd_features->parsed()) {
            hotrod::run_features(resolve(opts));
        } else if (cmd_eval->parsed()) {
            hotrod::run_evaluate(resolve(opts));
        } else if (cmd_run->parsed()) {
            return hotrod::run_pipeline(resolve(opts), force);
        } else if (cmd_fixture->parsed()) {
            fx.seed = static_cast<std::uint64_t>(fixture_seed);
            fx.out_dir = fixture_out;
            hotrod::make_fixture(fx);
        } else if (cmd_sim->parsed()) {
            const auto j = hotrod::read_json(sim_model);
            const auto model = model_from_json(j.contains("hawkes") ? j.at("hawkes") : j);
            const auto seq = hotrod::simulate(model, sim_horizon,
                                              static_cast<std::uint64_t>(sim_seed));
            nlohmann::json out;
            out["version"] = hotrod::version();
            out["horizon"] = seq.horizon;
            out["seed"] = sim_seed;
            out["events"] = nlohmann::json::array();
            for (const auto& e : seq.events) {
                out["events"].push_back({{"t", e.t}, {"type", e.type}});
            }
            hotrod::write_json_artifact(sim_out, out);
        }
        return 0;
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 3;
    } catch (const hotrod::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        switch (e.kind()) {
            case hotrod::ErrorKind::input: return 2;
            case hotrod::ErrorKind::config: return 3;
            default: return 1;
        }
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 1;
    }
}
