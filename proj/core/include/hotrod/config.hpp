#pragma once

#include <cstdint>
#include <filesystem>
#include <json.hpp>
#include <string>

#include "hotrod/eval.hpp"
#include "hotrod/features.hpp"
#include "hotrod/hawkes.hpp"
#include "hotrod/preprocess.hpp"
#include "hotrod/ticc.hpp"

namespace hotrod {

struct FeatureParams {
    int n_days = 5;
    double max_hr = 190.0;  // used when no age is available
};

// Everything the pipeline needs, loadable from one JSON file. CLI flags
// override individual leaves after loading.
struct PipelineConfig {
    std::filesystem::path data_dir = ".";
    std::filesystem::path out_dir = "out";
    std::uint64_t seed = 7;
    int workers = 0;  // 0 = hardware default; HOTROD_WORKERS overrides
    ImputeConfig impute;
    SgConfig sg;
    TiccConfig ticc;
    BasisSpec basis{{5.0, 20.0, 60.0}, 10.0};
    HawkesFitConfig hawkes_fit;
    double edge_epsilon = 0.01;
    FeatureParams features;
    std::string feature_set = "combined";  // summary | hotrod | combined
};

PipelineConfig load_config(const std::filesystem::path& path);
void apply_json(PipelineConfig& cfg, const nlohmann::json& j);
nlohmann::json config_to_json(const PipelineConfig& cfg);

// Hash of the canonical config serialization; embedded in every artifact.
std::string config_hash(const PipelineConfig& cfg);

int effective_workers(const PipelineConfig& cfg);

}  // namespace hotrod
