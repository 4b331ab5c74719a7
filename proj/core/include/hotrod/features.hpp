#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hotrod/hawkes.hpp"
#include "hotrod/timeline.hpp"

namespace hotrod {

struct DailySummary {
    double sleep_duration = 0.0;    // minutes
    double sleep_efficiency = 0.0;  // [0, 100]
    double step_count = 0.0;
    double resting_hr = 0.0;
    std::array<double, 4> zone_minutes{};  // out-of-zone, fat-burn, cardio, peak
};

struct FeatureVector {
    std::string participant_id;
    std::vector<double> values;
    std::vector<std::string> schema;
};

// Minutes spent in each Fitbit heart-rate zone, by the ratio hr / max_hr
// over half-open intervals [0,0.51), [0.51,0.70), [0.70,0.85), [0.85,inf).
// Only observed (mask-true) minutes count; the four zones partition them.
std::array<double, 4> zone_minutes(const DaySegment& day, double max_hr, int hr_channel = 0);

// {mean, std, min, max, median} of every DailySummary scalar over the
// participant's days, in a fixed schema order.
FeatureVector summary_features(const std::vector<DailySummary>& summaries);

struct HotrodFeatureConfig {
    int n_days = 5;
    BasisSpec basis;
    HawkesFitConfig fit;
    std::uint64_t seed = 0;
};

// Routine features: sample n_days of each day kind, fit one Hawkes model per
// kind on the sampled days' transition events, and concatenate the two
// flattened infectivity matrices (workday first, row-major). Returns nullopt
// with the reason filled in when the participant lacks n_days of either kind.
std::optional<FeatureVector> hotrod_features(const std::string& participant_id,
                                             const std::vector<std::vector<int>>& workday_labels,
                                             const std::vector<std::vector<int>>& offday_labels,
                                             const EventTypeMap& type_map, int missing_label,
                                             const HotrodFeatureConfig& cfg, std::string* reason);

struct TargetTable {
    std::vector<std::string> participant_ids;
    std::vector<std::string> target_names;
    // labels[t][i]: 0/1, or -1 when the participant has no usable score.
    std::vector<std::vector<int>> labels;
};

// Median-split binarization of personality and affect scores (1 iff strictly
// above the cohort median), nurse / non-nurse job type, day / night shift.
TargetTable binarize_targets(const std::vector<ParticipantRecord>& records);

}  // namespace hotrod
