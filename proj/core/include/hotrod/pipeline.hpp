#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "hotrod/config.hpp"

namespace hotrod {

// Index-ordered parallel map with a bounded worker pool. Results must be
// written to pre-sized slots so the outcome is independent of scheduling.
void parallel_for(int n, int workers, const std::function<void(int)>& fn);

// Individual stages. Each reads its inputs from cfg.data_dir / earlier
// artifacts under cfg.out_dir and writes its own artifacts.
void run_preprocess(const PipelineConfig& cfg);
void run_cluster(const PipelineConfig& cfg);
// Group models are fit per day kind over the given participant set (empty =
// everyone with label artifacts).
void run_hawkes(const PipelineConfig& cfg, const std::vector<std::string>& participants = {});
void run_features(const PipelineConfig& cfg);
void run_evaluate(const PipelineConfig& cfg);

// The full flow with content-hash stage skipping (unless force). Returns 0;
// failures are reported by exception carrying stage and cause.
int run_pipeline(const PipelineConfig& cfg, bool force);

struct FixtureOptions {
    std::uint64_t seed = 7;
    int participants = 12;
    int days = 12;  // per participant, half workdays / half off-days
    std::filesystem::path out_dir = "fixture";
};

// Synthetic-dataset generator: the full input CSV suite with known cluster
// regimes plus truth.json (regime parameters, per-day labels, and the
// reference Hawkes model). Byte-identical output for a fixed seed.
void make_fixture(const FixtureOptions& opts);

}  // namespace hotrod
