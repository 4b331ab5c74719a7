#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>

#include "hotrod/artifacts.hpp"
#include "hotrod/csv.hpp"
#include "hotrod/pipeline.hpp"
#include "hotrod/rng.hpp"
#include "hotrod/timeline.hpp"

namespace hotrod {

namespace {

// Three activity regimes driving the synthetic minutes: a latent 2-d VAR(1)
// state with regime-specific dynamics, mapped to plausible bpm / step
// values.
struct Regime {
    Eigen::Matrix2d transition;
    Eigen::Matrix2d noise_scale;  // Cholesky-style factor applied to iid normals
    double hr_mean;
    double hr_scale;
    double steps_mean;
    double steps_scale;
};

std::vector<Regime> regimes() {
    std::vector<Regime> r(3);
    r[0].transition << 0.85, 0.0, 0.0, 0.80;   // rest: slow, decoupled
    r[0].noise_scale << 0.5, 0.0, 0.1, 0.4;
    r[0].hr_mean = 58.0;
    r[0].hr_scale = 5.0;
    r[0].steps_mean = 1.0;
    r[0].steps_scale = 1.5;
    r[1].transition << 0.55, 0.30, 0.30, 0.50; // light activity: coupled
    r[1].noise_scale << 1.0, 0.0, 0.7, 0.8;
    r[1].hr_mean = 82.0;
    r[1].hr_scale = 7.0;
    r[1].steps_mean = 35.0;
    r[1].steps_scale = 12.0;
    r[2].transition << 0.30, -0.45, -0.45, 0.25; // exercise: fast, anti-phase
    r[2].noise_scale << 1.4, 0.0, -0.9, 1.1;
    r[2].hr_mean = 112.0;
    r[2].hr_scale = 9.0;
    r[2].steps_mean = 85.0;
    r[2].steps_scale = 18.0;
    return r;
}

nlohmann::json regime_json(const Regime& r) {
    return {{"transition", {r.transition(0, 0), r.transition(0, 1), r.transition(1, 0), r.transition(1, 1)}},
            {"noise_scale", {r.noise_scale(0, 0), r.noise_scale(0, 1), r.noise_scale(1, 0), r.noise_scale(1, 1)}},
            {"hr_mean", r.hr_mean},
            {"hr_scale", r.hr_scale},
            {"steps_mean", r.steps_mean},
            {"steps_scale", r.steps_scale}};
}

// Reference Hawkes model stored in truth.json; used by simulator-driven
// tests. Spectral radius of the infectivity stays well below 1.
nlohmann::json reference_hawkes() {
    return {{"num_types", 2},
            {"base_per_minute", {0.02, 0.01}},
            {"infectivity", {0.3, 0.5, 0.0, 0.2}},
            {"basis_centers", {5.0, 20.0, 60.0}},
            {"basis_sigma", 10.0}};
}

std::string pid_name(int i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "P%03d", i + 1);
    return buf;
}

}  // namespace

void make_fixture(const FixtureOptions& opts) {
    if (opts.participants < 1 || opts.days < 2) fail_config("fixture: need >= 1 participant and >= 2 days");
    std::filesystem::create_directories(opts.out_dir);

    const auto regs = regimes();
    // 2022-03-01 00:00:00 UTC
    constexpr Timestamp kEpochStart = 1646092800;

    std::vector<std::vector<std::string>> hr_rows, step_rows, sleep_rows, day_rows, label_rows;
    nlohmann::json truth_labels = nlohmann::json::object();

    for (int p = 0; p < opts.participants; ++p) {
        const std::string pid = pid_name(p);
        Rng rng(mix_seed(mix_seed(opts.seed, "fixture-participant"), pid));

        // Sleep onsets spaced one circadian cycle apart with jitter; every
        // generated day stays inside the retention band.
        std::vector<Timestamp> onsets;
        Timestamp onset = kEpochStart + 22 * 3600 + static_cast<Timestamp>(rng.below(3600));
        for (int d = 0; d <= opts.days; ++d) {
            onsets.push_back(onset);
            // Spacing of at least a calendar day keeps one onset per UTC
            // date, which days.csv is keyed by; still inside [20, 28] h.
            const double hours = 24.0 + rng.uniform() * 3.5;
            onset += static_cast<Timestamp>(hours * 3600.0);
        }
        for (std::size_t d = 0; d < onsets.size(); ++d) {
            const double sleep_hours = 6.3 + rng.uniform() * 2.2;
            const Timestamp end = onsets[d] + static_cast<Timestamp>(sleep_hours * 3600.0);
            const double efficiency = 80.0 + rng.uniform() * 17.0;
            sleep_rows.push_back({pid, std::to_string(onsets[d]), std::to_string(end),
                                  format_double(efficiency)});
        }
        // One nap for texture; too short to create a boundary.
        {
            const Timestamp nap = onsets[0] + 30 * 3600;
            sleep_rows.push_back({pid, std::to_string(nap), std::to_string(nap + 2 * 3600),
                                  format_double(75.0)});
        }

        nlohmann::json participant_days = nlohmann::json::array();
        Eigen::Vector2d state = Eigen::Vector2d::Zero();
        for (int d = 0; d < opts.days; ++d) {
            const Timestamp begin = onsets[static_cast<std::size_t>(d)];
            const Timestamp end = onsets[static_cast<std::size_t>(d) + 1];
            const int minutes = static_cast<int>((minute_floor(end) - minute_floor(begin)) / 60);
            const std::string kind = d % 2 == 0 ? "workday" : "offday";
            day_rows.push_back({pid, utc_date(begin), kind});

            // Semi-Markov regime labels: rest -> light -> exercise cycles
            // with seeded segment lengths.
            std::vector<int> labels(static_cast<std::size_t>(minutes), 0);
            int regime = 0;
            int pos = 0;
            while (pos < minutes) {
                int seg = 0;
                switch (regime) {
                    case 0: seg = 60 + static_cast<int>(rng.below(90)); break;
                    case 1: seg = 40 + static_cast<int>(rng.below(60)); break;
                    default: seg = 20 + static_cast<int>(rng.below(30)); break;
                }
                for (int i = pos; i < std::min(minutes, pos + seg); ++i) {
                    labels[static_cast<std::size_t>(i)] = regime;
                }
                pos += seg;
                const double roll = rng.uniform();
                if (regime == 0) {
                    regime = roll < 0.75 ? 1 : 2;
                } else if (regime == 1) {
                    regime = roll < 0.55 ? 0 : 2;
                } else {
                    regime = roll < 0.70 ? 1 : 0;
                }
            }

            // Gaps: two imputable ones and one long enough to stay missing.
            std::vector<bool> dropped(static_cast<std::size_t>(minutes), false);
            auto drop_range = [&](int from, int len) {
                for (int i = std::max(0, from); i < std::min(minutes, from + len); ++i) {
                    dropped[static_cast<std::size_t>(i)] = true;
                }
            };
            drop_range(60 + static_cast<int>(rng.below(300)), 4 + static_cast<int>(rng.below(9)));
            drop_range(500 + static_cast<int>(rng.below(300)), 4 + static_cast<int>(rng.below(9)));
            drop_range(900 + static_cast<int>(rng.below(200)), 20 + static_cast<int>(rng.below(16)));

            const Timestamp day_start = minute_floor(begin);
            for (int i = 0; i < minutes; ++i) {
                const Regime& r = regs[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])];
                Eigen::Vector2d noise(rng.normal(), rng.normal());
                state = r.transition * state + r.noise_scale * noise;
                const double hr = r.hr_mean + r.hr_scale * state(0);
                const double steps = std::max(0.0, r.steps_mean + r.steps_scale * state(1));
                if (dropped[static_cast<std::size_t>(i)]) continue;
                const Timestamp minute_ts = day_start + 60LL * i;
                // Two to three PPG reads per minute; steps report once.
                const int reads = 2 + static_cast<int>(rng.below(2));
                for (int s = 0; s < reads; ++s) {
                    const Timestamp ts = minute_ts + static_cast<Timestamp>(rng.below(60));
                    const double v = hr + 0.6 * rng.normal();
                    hr_rows.push_back({pid, std::to_string(ts), format_double(std::round(v * 10.0) / 10.0)});
                }
                step_rows.push_back({pid, std::to_string(minute_ts),
                                     std::to_string(static_cast<long long>(std::llround(steps)))});
            }
            participant_days.push_back(
                {{"index", d}, {"kind", kind}, {"minutes", minutes}, {"labels", labels}});
        }
        truth_labels[pid] = participant_days;

        // Balanced job/shift assignment keeps every binarized target
        // two-class even for tiny cohorts.
        const char* job = p % 2 == 0 ? "nurse" : (p % 4 == 1 ? "technician" : "therapist");
        const char* shift = (p / 2) % 2 == 0 ? "day" : "night";
        const char* genders[] = {"f", "m", "nb"};
        auto score = [&]() { return std::round((1.5 + rng.uniform() * 3.3) * 100.0) / 100.0; };
        label_rows.push_back({pid,
                              job,
                              shift,
                              genders[rng.below(3)],
                              format_double(score()),
                              format_double(score()),
                              format_double(score()),
                              format_double(score()),
                              format_double(score()),
                              format_double(std::round((15.0 + rng.uniform() * 30.0) * 100.0) / 100.0),
                              format_double(std::round((12.0 + rng.uniform() * 24.0) * 100.0) / 100.0)});
    }

    // Raw streams are written time-sorted per participant, as a device
    // export would be.
    auto by_pid_time = [](const std::vector<std::string>& a, const std::vector<std::string>& b) {
        if (a[0] != b[0]) return a[0] < b[0];
        return std::stoll(a[1]) < std::stoll(b[1]);
    };
    std::sort(hr_rows.begin(), hr_rows.end(), by_pid_time);
    std::sort(step_rows.begin(), step_rows.end(), by_pid_time);
    std::sort(sleep_rows.begin(), sleep_rows.end(), by_pid_time);

    write_csv(opts.out_dir / "heartrate.csv", {}, {"participant_id", "timestamp", "bpm"}, hr_rows);
    write_csv(opts.out_dir / "steps.csv", {}, {"participant_id", "timestamp", "steps"}, step_rows);
    write_csv(opts.out_dir / "sleep.csv", {}, {"participant_id", "onset", "end", "efficiency"},
              sleep_rows);
    write_csv(opts.out_dir / "days.csv", {}, {"participant_id", "date", "day_kind"}, day_rows);
    write_csv(opts.out_dir / "labels.csv", {},
              {"participant_id", "job_type", "shift", "gender", "neu", "con", "ext", "agr", "opn",
               "pos_affect", "neg_affect"},
              label_rows);

    nlohmann::json truth;
    truth["version"] = version();
    truth["seed"] = opts.seed;
    truth["participants"] = opts.participants;
    truth["days_per_participant"] = opts.days;
    truth["regimes"] = nlohmann::json::array();
    for (const auto& r : regs) truth["regimes"].push_back(regime_json(r));
    truth["day_labels"] = truth_labels;
    truth["hawkes"] = reference_hawkes();
    write_json_artifact(opts.out_dir / "truth.json", truth);
}

}  // namespace hotrod
