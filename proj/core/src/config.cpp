#include "hotrod/config.hpp"

#include <cstdlib>
#include <fstream>
#include <thread>

#include "hotrod/artifacts.hpp"

namespace hotrod {

namespace {

template <typename T>
void read_field(const nlohmann::json& j, const char* key, T& out) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const std::exception& e) {
        fail_config(std::string("config field '") + key + "': " + e.what());
    }
}

}  // namespace

void apply_json(PipelineConfig& cfg, const nlohmann::json& j) {
    if (!j.is_object()) fail_config("config root must be a JSON object");
    for (const auto& [key, _] : j.items()) {
        static const char* known[] = {"data_dir", "out_dir",  "seed",     "workers",
                                      "impute",   "sg",       "ticc",     "hawkes",
                                      "features", "evaluate"};
        bool ok = false;
        for (const char* k : known) ok = ok || key == k;
        if (!ok) fail_config("unknown config key '" + key + "'");
    }
    std::string dir;
    read_field(j, "data_dir", dir);
    if (!dir.empty()) cfg.data_dir = dir;
    dir.clear();
    read_field(j, "out_dir", dir);
    if (!dir.empty()) cfg.out_dir = dir;
    read_field(j, "seed", cfg.seed);
    read_field(j, "workers", cfg.workers);

    if (j.contains("impute")) {
        const auto& s = j.at("impute");
        read_field(s, "max_gap_minutes", cfg.impute.max_gap_minutes);
        read_field(s, "leading_fill_count", cfg.impute.leading_fill_count);
        read_field(s, "max_p", cfg.impute.max_p);
        read_field(s, "max_d", cfg.impute.max_d);
        read_field(s, "max_q", cfg.impute.max_q);
        read_field(s, "sentinel", cfg.impute.sentinel);
        if (cfg.impute.max_gap_minutes < 1) fail_config("impute.max_gap_minutes must be >= 1");
        if (cfg.impute.max_p < 0 || cfg.impute.max_d < 0 || cfg.impute.max_q < 0) {
            fail_config("impute order bounds must be >= 0");
        }
    }
    if (j.contains("sg")) {
        const auto& s = j.at("sg");
        read_field(s, "half_window", cfg.sg.half_window);
        read_field(s, "poly_order", cfg.sg.poly_order);
        if (cfg.sg.poly_order < 0 || 2 * cfg.sg.half_window + 1 <= cfg.sg.poly_order) {
            fail_config("sg: need 2*half_window+1 > poly_order >= 0");
        }
    }
    if (j.contains("ticc")) {
        const auto& s = j.at("ticc");
        read_field(s, "k", cfg.ticc.k);
        read_field(s, "window", cfg.ticc.window);
        read_field(s, "beta", cfg.ticc.beta);
        read_field(s, "lambda", cfg.ticc.lambda);
        read_field(s, "admm_rho", cfg.ticc.admm_rho);
        read_field(s, "admm_max_iter", cfg.ticc.admm_max_iter);
        read_field(s, "admm_tol", cfg.ticc.admm_tol);
        read_field(s, "em_max_iter", cfg.ticc.em_max_iter);
        read_field(s, "min_cluster_size", cfg.ticc.min_cluster_size);
        if (cfg.ticc.k < 1 || cfg.ticc.window < 1) fail_config("ticc: k and window must be >= 1");
        if (cfg.ticc.beta < 0 || cfg.ticc.lambda < 0) fail_config("ticc: beta and lambda must be >= 0");
    }
    if (j.contains("hawkes")) {
        const auto& s = j.at("hawkes");
        read_field(s, "basis_centers", cfg.basis.centers);
        read_field(s, "basis_sigma", cfg.basis.sigma);
        read_field(s, "l1", cfg.hawkes_fit.l1);
        read_field(s, "group", cfg.hawkes_fit.group);
        read_field(s, "max_iter", cfg.hawkes_fit.max_iter);
        read_field(s, "tol", cfg.hawkes_fit.tol);
        read_field(s, "edge_epsilon", cfg.edge_epsilon);
        if (cfg.basis.sigma <= 0) fail_config("hawkes.basis_sigma must be > 0");
        if (cfg.basis.centers.empty()) fail_config("hawkes.basis_centers must be non-empty");
    }
    if (j.contains("features")) {
        const auto& s = j.at("features");
        read_field(s, "n_days", cfg.features.n_days);
        read_field(s, "max_hr", cfg.features.max_hr);
        if (cfg.features.n_days < 1) fail_config("features.n_days must be >= 1");
        if (cfg.features.max_hr <= 0) fail_config("features.max_hr must be > 0");
    }
    if (j.contains("evaluate")) {
        const auto& s = j.at("evaluate");
        read_field(s, "feature_set", cfg.feature_set);
        if (cfg.feature_set != "summary" && cfg.feature_set != "hotrod" &&
            cfg.feature_set != "combined") {
            fail_config("evaluate.feature_set must be summary, hotrod or combined");
        }
    }
}

PipelineConfig load_config(const std::filesystem::path& path) {
    nlohmann::json j;
    {
        std::ifstream in(path);
        if (!in) fail_config("cannot open config " + path.string());
        try {
            in >> j;
        } catch (const std::exception& e) {
            fail_config(path.string() + ": invalid JSON: " + e.what());
        }
    }
    PipelineConfig cfg;
    apply_json(cfg, j);
    return cfg;
}

nlohmann::json config_to_json(const PipelineConfig& cfg) {
    nlohmann::json j;
    j["data_dir"] = cfg.data_dir.string();
    j["out_dir"] = cfg.out_dir.string();
    j["seed"] = cfg.seed;
    j["workers"] = cfg.workers;
    j["impute"] = {{"max_gap_minutes", cfg.impute.max_gap_minutes},
                   {"leading_fill_count", cfg.impute.leading_fill_count},
                   {"max_p", cfg.impute.max_p},
                   {"max_d", cfg.impute.max_d},
                   {"max_q", cfg.impute.max_q},
                   {"sentinel", cfg.impute.sentinel}};
    j["sg"] = {{"half_window", cfg.sg.half_window}, {"poly_order", cfg.sg.poly_order}};
    j["ticc"] = {{"k", cfg.ticc.k},
                 {"window", cfg.ticc.window},
                 {"beta", cfg.ticc.beta},
                 {"lambda", cfg.ticc.lambda},
                 {"admm_rho", cfg.ticc.admm_rho},
                 {"admm_max_iter", cfg.ticc.admm_max_iter},
                 {"admm_tol", cfg.ticc.admm_tol},
                 {"em_max_iter", cfg.ticc.em_max_iter},
                 {"min_cluster_size", cfg.ticc.min_cluster_size}};
    j["hawkes"] = {{"basis_centers", cfg.basis.centers},
                   {"basis_sigma", cfg.basis.sigma},
                   {"l1", cfg.hawkes_fit.l1},
                   {"group", cfg.hawkes_fit.group},
                   {"max_iter", cfg.hawkes_fit.max_iter},
                   {"tol", cfg.hawkes_fit.tol},
                   {"edge_epsilon", cfg.edge_epsilon}};
    j["features"] = {{"n_days", cfg.features.n_days}, {"max_hr", cfg.features.max_hr}};
    j["evaluate"] = {{"feature_set", cfg.feature_set}};
    return j;
}

std::string config_hash(const PipelineConfig& cfg) {
    // The hash covers the knobs that shape the artifacts. Directory layout
    // and worker count do not; neither does the feature-set selection, which
    // only picks columns at evaluation time.
    nlohmann::json j = config_to_json(cfg);
    j.erase("data_dir");
    j.erase("out_dir");
    j.erase("workers");
    j.erase("evaluate");
    return json_hash(j);
}

int effective_workers(const PipelineConfig& cfg) {
    int workers = cfg.workers;
    if (const char* env = std::getenv("HOTROD_WORKERS")) {
        try {
            workers = std::stoi(env);
        } catch (const std::exception&) {
            fail_config("HOTROD_WORKERS must be an integer");
        }
    }
    if (workers <= 0) {
        workers = static_cast<int>(std::thread::hardware_concurrency());
        if (workers <= 0) workers = 1;
        workers = std::min(workers, 8);
    }
    return workers;
}

}  // namespace hotrod
