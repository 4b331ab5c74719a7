#include "hotrod/features.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>

#include "hotrod/rng.hpp"

namespace hotrod {

namespace {

double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double sample_std(const std::vector<double>& v) {
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

const char* kSummaryFieldNames[] = {"sleep_duration", "sleep_efficiency", "step_count",
                                    "resting_hr",     "zone_out",         "zone_fatburn",
                                    "zone_cardio",    "zone_peak"};

double summary_field(const DailySummary& s, int field) {
    switch (field) {
        case 0: return s.sleep_duration;
        case 1: return s.sleep_efficiency;
        case 2: return s.step_count;
        case 3: return s.resting_hr;
        default: return s.zone_minutes[static_cast<std::size_t>(field - 4)];
    }
}

// One Hawkes fit over the given label-days; the flattened infectivity.
std::vector<double> kind_infectivity(const std::vector<const std::vector<int>*>& label_days,
                                     const EventTypeMap& type_map, int missing_label,
                                     const HotrodFeatureConfig& cfg, std::uint64_t fit_seed) {
    std::vector<EventSequence> sequences;
    sequences.reserve(label_days.size());
    for (const auto* labels : label_days) {
        sequences.push_back(extract_events(*labels, type_map, missing_label));
    }
    HawkesFitConfig fit_cfg = cfg.fit;
    fit_cfg.seed = fit_seed;
    HawkesFit fit = fit_mle(sequences, type_map.num_types(), cfg.basis, fit_cfg);
    const Eigen::MatrixXd a = infectivity(fit.model).a;
    std::vector<double> flat;
    flat.reserve(static_cast<std::size_t>(a.size()));
    for (int r = 0; r < a.rows(); ++r) {
        for (int c = 0; c < a.cols(); ++c) flat.push_back(a(r, c));
    }
    return flat;
}

// Seeded sample of n day indices out of [0, total); operates on the sorted
// index set, so the outcome is independent of input ordering.
std::vector<int> sample_days(int total, int n, Rng& rng) {
    std::vector<int> idx(static_cast<std::size_t>(total));
    std::iota(idx.begin(), idx.end(), 0);
    rng.shuffle(idx);
    idx.resize(static_cast<std::size_t>(n));
    std::sort(idx.begin(), idx.end());
    return idx;
}

}  // namespace

std::array<double, 4> zone_minutes(const DaySegment& day, double max_hr, int hr_channel) {
    if (max_hr <= 0) fail_config("zone_minutes: max_hr must be > 0");
    const UniformSeries& s = day.series;
    if (hr_channel < 0 || hr_channel >= s.num_channels()) {
        fail_input("zone_minutes: bad heart-rate channel");
    }
    std::array<double, 4> zones{0.0, 0.0, 0.0, 0.0};
    for (int i = 0; i < s.minutes(); ++i) {
        if (!s.mask(i, hr_channel)) continue;
        const double r = s.values(i, hr_channel) / max_hr;
        // Half-open zone bounds: [0,0.51), [0.51,0.70), [0.70,0.85), [0.85,inf)
        int zone = 0;
        if (r >= 0.85) {
            zone = 3;
        } else if (r >= 0.70) {
            zone = 2;
        } else if (r >= 0.51) {
            zone = 1;
        }
        zones[static_cast<std::size_t>(zone)] += 1.0;
    }
    return zones;
}

FeatureVector summary_features(const std::vector<DailySummary>& summaries) {
    if (summaries.size() < 2) fail_input("summary_features: need at least 2 days");
    constexpr int kFields = 8;
    FeatureVector out;
    for (int f = 0; f < kFields; ++f) {
        std::vector<double> v;
        v.reserve(summaries.size());
        for (const auto& s : summaries) v.push_back(summary_field(s, f));
        const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
        const std::string base = kSummaryFieldNames[f];
        out.values.push_back(mean);
        out.schema.push_back(base + "_mean");
        out.values.push_back(sample_std(v));
        out.schema.push_back(base + "_std");
        out.values.push_back(*std::min_element(v.begin(), v.end()));
        out.schema.push_back(base + "_min");
        out.values.push_back(*std::max_element(v.begin(), v.end()));
        out.schema.push_back(base + "_max");
        out.values.push_back(median_of(v));
        out.schema.push_back(base + "_median");
    }
    return out;
}

std::optional<FeatureVector> hotrod_features(const std::string& participant_id,
                                             const std::vector<std::vector<int>>& workday_labels,
                                             const std::vector<std::vector<int>>& offday_labels,
                                             const EventTypeMap& type_map, int missing_label,
                                             const HotrodFeatureConfig& cfg, std::string* reason) {
    if (cfg.n_days < 1) fail_config("hotrod_features: n_days must be >= 1");
    if (static_cast<int>(workday_labels.size()) < cfg.n_days ||
        static_cast<int>(offday_labels.size()) < cfg.n_days) {
        if (reason) {
            *reason = "needs " + std::to_string(cfg.n_days) + " days of each kind, has " +
                      std::to_string(workday_labels.size()) + " workdays / " +
                      std::to_string(offday_labels.size()) + " off-days";
        }
        return std::nullopt;
    }

    // Canonical day order first, so the seeded sample does not depend on the
    // caller's ordering.
    std::vector<std::vector<int>> work_sorted = workday_labels;
    std::vector<std::vector<int>> off_sorted = offday_labels;
    std::sort(work_sorted.begin(), work_sorted.end());
    std::sort(off_sorted.begin(), off_sorted.end());

    Rng work_rng(mix_seed(mix_seed(cfg.seed, participant_id), "sample-workdays"));
    Rng off_rng(mix_seed(mix_seed(cfg.seed, participant_id), "sample-offdays"));
    const auto work_idx = sample_days(static_cast<int>(work_sorted.size()), cfg.n_days, work_rng);
    const auto off_idx = sample_days(static_cast<int>(off_sorted.size()), cfg.n_days, off_rng);

    std::vector<const std::vector<int>*> work_days, off_days;
    for (int i : work_idx) work_days.push_back(&work_sorted[static_cast<std::size_t>(i)]);
    for (int i : off_idx) off_days.push_back(&off_sorted[static_cast<std::size_t>(i)]);

    FeatureVector out;
    out.participant_id = participant_id;
    const int u = type_map.num_types();
    const auto work_flat = kind_infectivity(work_days, type_map, missing_label, cfg,
                                            mix_seed(mix_seed(cfg.seed, participant_id), "fit-workday"));
    const auto off_flat = kind_infectivity(off_days, type_map, missing_label, cfg,
                                           mix_seed(mix_seed(cfg.seed, participant_id), "fit-offday"));
    out.values = work_flat;
    out.values.insert(out.values.end(), off_flat.begin(), off_flat.end());
    for (const char* prefix : {"work", "off"}) {
        for (int r = 0; r < u; ++r) {
            for (int c = 0; c < u; ++c) {
                out.schema.push_back(std::string(prefix) + "_a_" + std::to_string(r) + "_" +
                                     std::to_string(c));
            }
        }
    }
    return out;
}

TargetTable binarize_targets(const std::vector<ParticipantRecord>& records) {
    if (records.size() < 2) fail_input("binarize_targets: need at least 2 participants");
    TargetTable table;
    for (const auto& r : records) table.participant_ids.push_back(r.participant_id);

    struct ScoreField {
        const char* name;
        double SurveyScores::* member;
    };
    const ScoreField score_fields[] = {
        {"neu", &SurveyScores::neuroticism},   {"con", &SurveyScores::conscientiousness},
        {"ext", &SurveyScores::extraversion},  {"agr", &SurveyScores::agreeableness},
        {"opn", &SurveyScores::openness},      {"pos_affect", &SurveyScores::pos_affect},
        {"neg_affect", &SurveyScores::neg_affect},
    };

    for (const auto& field : score_fields) {
        std::vector<double> present;
        for (const auto& r : records) {
            const double v = r.scores.*field.member;
            if (std::isfinite(v)) present.push_back(v);
        }
        if (present.size() < 2) fail_input(std::string("binarize_targets: fewer than 2 scores for ") + field.name);
        const double median = median_of(present);
        bool any_high = false, any_low = false;
        std::vector<int> labels;
        for (const auto& r : records) {
            const double v = r.scores.*field.member;
            if (!std::isfinite(v)) {
                labels.push_back(-1);
                continue;
            }
            const int label = v > median ? 1 : 0;  // ties fall to the low class
            labels.push_back(label);
            (label == 1 ? any_high : any_low) = true;
        }
        if (!any_high || !any_low) {
            fail_input(std::string("degenerate target: ") + field.name);
        }
        table.target_names.push_back(field.name);
        table.labels.push_back(std::move(labels));
    }

    auto lower = [](std::string s) {
        for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        return s;
    };
    std::vector<int> job, shift;
    for (const auto& r : records) {
        job.push_back(lower(r.job_type) == "nurse" ? 1 : 0);
        shift.push_back(lower(r.shift) == "day" ? 1 : 0);
    }
    table.target_names.push_back("job_type");
    table.labels.push_back(std::move(job));
    table.target_names.push_back("shift");
    table.labels.push_back(std::move(shift));
    return table;
}

}  // namespace hotrod
