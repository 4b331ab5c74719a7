#include "hotrod/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "hotrod/artifacts.hpp"
#include "hotrod/csv.hpp"
#include "hotrod/eval.hpp"
#include "hotrod/features.hpp"
#include "hotrod/hawkes.hpp"
#include "hotrod/preprocess.hpp"
#include "hotrod/rng.hpp"
#include "hotrod/ticc.hpp"

namespace hotrod {

void parallel_for(int n, int workers, const std::function<void(int)>& fn) {
    if (n <= 0) return;
    workers = std::max(1, std::min(workers, n));
    if (workers == 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&]() {
            while (true) {
                const int i = next.fetch_add(1);
                if (i >= n) break;
                try {
                    fn(i);
                } catch (...) {
                    errors[static_cast<std::size_t>(i)] = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);  // lowest index wins: deterministic
    }
}

namespace {

std::vector<std::string> artifact_comments(const PipelineConfig& cfg) {
    return {" config_hash=" + config_hash(cfg) + " version=" + version()};
}

void write_csv_artifact(const std::filesystem::path& path, const PipelineConfig& cfg,
                        const std::vector<std::string>& header,
                        const std::vector<std::vector<std::string>>& rows) {
    std::string out;
    for (const auto& c : artifact_comments(cfg)) out += "#" + c + "\n";
    for (std::size_t i = 0; i < header.size(); ++i) {
        out += header[i];
        out += i + 1 < header.size() ? ',' : '\n';
    }
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            out += row[i];
            out += i + 1 < row.size() ? ',' : '\n';
        }
    }
    write_artifact(path, out);
}

std::string artifact_hash_of(const CsvTable& table, const std::filesystem::path& path) {
    for (const auto& c : table.comments) {
        const auto pos = c.find("config_hash=");
        if (pos != std::string::npos) {
            std::string h = c.substr(pos + 12);
            const auto space = h.find(' ');
            if (space != std::string::npos) h.resize(space);
            return h;
        }
    }
    fail_input(path.string() + ": artifact is missing its config_hash header");
}

std::string zero_pad(int v, int width) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%0*d", width, v);
    return buf;
}

struct RawData {
    std::vector<std::string> participants;  // sorted
    std::map<std::string, std::vector<SleepRecord>> sleeps;
    std::map<std::string, DayKindMap> kinds;
    std::map<std::string, ChannelStream> hr;
    std::map<std::string, ChannelStream> steps;
};

RawData load_raw(const PipelineConfig& cfg) {
    RawData data;
    const auto dir = cfg.data_dir;

    CsvTable sleep = read_csv(dir / "sleep.csv");
    {
        const int c_pid = sleep.require_column("participant_id");
        const int c_on = sleep.require_column("onset");
        const int c_end = sleep.require_column("end");
        const int c_eff = sleep.require_column("efficiency");
        for (const auto& row : sleep.rows) {
            SleepRecord rec;
            rec.onset = parse_int(row[static_cast<std::size_t>(c_on)], "sleep.csv onset");
            rec.end = parse_int(row[static_cast<std::size_t>(c_end)], "sleep.csv end");
            rec.efficiency = parse_double(row[static_cast<std::size_t>(c_eff)], "sleep.csv efficiency");
            data.sleeps[row[static_cast<std::size_t>(c_pid)]].push_back(rec);
        }
    }

    CsvTable days = read_csv(dir / "days.csv");
    {
        const int c_pid = days.require_column("participant_id");
        const int c_date = days.require_column("date");
        const int c_kind = days.require_column("day_kind");
        for (const auto& row : days.rows) {
            data.kinds[row[static_cast<std::size_t>(c_pid)]][row[static_cast<std::size_t>(c_date)]] =
                day_kind_from_string(row[static_cast<std::size_t>(c_kind)]);
        }
    }

    auto load_stream = [](const std::filesystem::path& path, const std::string& value_col,
                          const std::string& channel,
                          std::map<std::string, ChannelStream>& out) {
        CsvTable t = read_csv(path);
        const int c_pid = t.require_column("participant_id");
        const int c_ts = t.require_column("timestamp");
        const int c_v = t.require_column(value_col);
        for (const auto& row : t.rows) {
            auto& stream = out[row[static_cast<std::size_t>(c_pid)]];
            stream.channel = channel;
            stream.samples.push_back(
                {parse_int(row[static_cast<std::size_t>(c_ts)], path.string()),
                 parse_double(row[static_cast<std::size_t>(c_v)], path.string())});
        }
        for (auto& [pid, stream] : out) {
            std::stable_sort(stream.samples.begin(), stream.samples.end(),
                             [](const RawSample& a, const RawSample& b) { return a.timestamp < b.timestamp; });
        }
    };
    load_stream(dir / "heartrate.csv", "bpm", "hr", data.hr);
    load_stream(dir / "steps.csv", "steps", "steps", data.steps);

    for (const auto& [pid, _] : data.sleeps) data.participants.push_back(pid);
    std::sort(data.participants.begin(), data.participants.end());
    return data;
}

std::vector<ParticipantRecord> load_participants(const PipelineConfig& cfg) {
    CsvTable t = read_csv(cfg.data_dir / "labels.csv");
    const int c_pid = t.require_column("participant_id");
    const int c_job = t.require_column("job_type");
    const int c_shift = t.require_column("shift");
    const int c_gender = t.require_column("gender");
    struct Col {
        const char* name;
        double SurveyScores::* member;
    };
    const Col cols[] = {{"neu", &SurveyScores::neuroticism},
                        {"con", &SurveyScores::conscientiousness},
                        {"ext", &SurveyScores::extraversion},
                        {"agr", &SurveyScores::agreeableness},
                        {"opn", &SurveyScores::openness},
                        {"pos_affect", &SurveyScores::pos_affect},
                        {"neg_affect", &SurveyScores::neg_affect}};
    std::vector<ParticipantRecord> records;
    for (const auto& row : t.rows) {
        ParticipantRecord rec;
        rec.participant_id = row[static_cast<std::size_t>(c_pid)];
        rec.job_type = row[static_cast<std::size_t>(c_job)];
        rec.shift = row[static_cast<std::size_t>(c_shift)];
        rec.gender = row[static_cast<std::size_t>(c_gender)];
        for (const auto& col : cols) {
            const int c = t.require_column(col.name);
            rec.scores.*col.member = parse_double(row[static_cast<std::size_t>(c)], "labels.csv");
        }
        // The five personality factors are averages on a 1..5 scale.
        for (double v : {rec.scores.neuroticism, rec.scores.conscientiousness,
                         rec.scores.extraversion, rec.scores.agreeableness, rec.scores.openness}) {
            if (v < 1.0 || v > 5.0) {
                fail_input("labels.csv: personality score " + std::to_string(v) +
                           " outside [1, 5] for " + rec.participant_id);
            }
        }
        records.push_back(std::move(rec));
    }
    std::sort(records.begin(), records.end(),
              [](const ParticipantRecord& a, const ParticipantRecord& b) {
                  return a.participant_id < b.participant_id;
              });
    return records;
}

struct DayArtifact {
    std::string pid;
    int index = 0;
    DayKind kind = DayKind::workday;
    DaySegment segment;
};

// day_<pid>_<index>.csv, minute-rate normalized series with masks.
void write_day_csv(const PipelineConfig& cfg, const DayArtifact& day) {
    const auto& s = day.segment.series;
    std::vector<std::vector<std::string>> rows;
    rows.reserve(static_cast<std::size_t>(s.minutes()));
    for (int i = 0; i < s.minutes(); ++i) {
        rows.push_back({std::to_string(i), format_double(s.values(i, 0)),
                        format_double(s.values(i, 1)), s.mask(i, 0) ? "1" : "0",
                        s.mask(i, 1) ? "1" : "0"});
    }
    write_csv_artifact(cfg.out_dir / ("day_" + day.pid + "_" + zero_pad(day.index, 3) + ".csv"),
                       cfg, {"minute", "hr", "steps", "hr_mask", "steps_mask"}, rows);
}

std::vector<DayArtifact> read_day_csvs(const PipelineConfig& cfg) {
    std::vector<std::filesystem::path> files;
    if (!std::filesystem::exists(cfg.out_dir)) fail_input("missing output directory " + cfg.out_dir.string());
    for (const auto& entry : std::filesystem::directory_iterator(cfg.out_dir)) {
        const std::string name = entry.path().filename().string();
        if (name.rfind("day_", 0) == 0 && name.size() > 8 && name.ends_with(".csv")) {
            files.push_back(entry.path());
        }
    }
    if (files.empty()) fail_input("no day_*.csv artifacts under " + cfg.out_dir.string() +
                                  " (run preprocess first)");
    std::sort(files.begin(), files.end());

    std::vector<DayArtifact> days;
    for (const auto& path : files) {
        CsvTable t = read_csv(path);
        const int c_hr = t.require_column("hr");
        const int c_st = t.require_column("steps");
        const int c_hm = t.require_column("hr_mask");
        const int c_sm = t.require_column("steps_mask");
        DayArtifact day;
        const std::string stem = path.stem().string();  // day_<pid>_<idx>
        const auto last = stem.rfind('_');
        day.pid = stem.substr(4, last - 4);
        day.index = static_cast<int>(parse_int(stem.substr(last + 1), "day filename"));
        UniformSeries s;
        s.start = 0;
        s.channels = {"hr", "steps"};
        const int n = static_cast<int>(t.rows.size());
        s.values.resize(n, 2);
        s.mask.resize(n, 2);
        for (int i = 0; i < n; ++i) {
            const auto& row = t.rows[static_cast<std::size_t>(i)];
            s.values(i, 0) = parse_double(row[static_cast<std::size_t>(c_hr)], path.string());
            s.values(i, 1) = parse_double(row[static_cast<std::size_t>(c_st)], path.string());
            s.mask(i, 0) = row[static_cast<std::size_t>(c_hm)] == "1";
            s.mask(i, 1) = row[static_cast<std::size_t>(c_sm)] == "1";
        }
        day.segment.series = std::move(s);
        day.segment.participant_id = day.pid;
        days.push_back(std::move(day));
    }
    return days;
}

struct SummaryRow {
    std::string pid;
    int index = 0;
    std::string date;
    DayKind kind = DayKind::workday;
    DailySummary summary;
};

std::vector<SummaryRow> read_summaries(const PipelineConfig& cfg) {
    const auto path = cfg.out_dir / "summaries.csv";
    CsvTable t = read_csv(path);
    std::vector<SummaryRow> rows;
    const int c_pid = t.require_column("participant_id");
    const int c_idx = t.require_column("day_index");
    const int c_date = t.require_column("date");
    const int c_kind = t.require_column("day_kind");
    const int c_sd = t.require_column("sleep_duration");
    const int c_se = t.require_column("sleep_efficiency");
    const int c_sc = t.require_column("step_count");
    const int c_rh = t.require_column("resting_hr");
    const int c_z0 = t.require_column("zone_out");
    const int c_z1 = t.require_column("zone_fatburn");
    const int c_z2 = t.require_column("zone_cardio");
    const int c_z3 = t.require_column("zone_peak");
    for (const auto& row : t.rows) {
        SummaryRow r;
        r.pid = row[static_cast<std::size_t>(c_pid)];
        r.index = static_cast<int>(parse_int(row[static_cast<std::size_t>(c_idx)], "summaries.csv"));
        r.date = row[static_cast<std::size_t>(c_date)];
        r.kind = day_kind_from_string(row[static_cast<std::size_t>(c_kind)]);
        r.summary.sleep_duration = parse_double(row[static_cast<std::size_t>(c_sd)], "summaries.csv");
        r.summary.sleep_efficiency = parse_double(row[static_cast<std::size_t>(c_se)], "summaries.csv");
        r.summary.step_count = parse_double(row[static_cast<std::size_t>(c_sc)], "summaries.csv");
        r.summary.resting_hr = parse_double(row[static_cast<std::size_t>(c_rh)], "summaries.csv");
        r.summary.zone_minutes[0] = parse_double(row[static_cast<std::size_t>(c_z0)], "summaries.csv");
        r.summary.zone_minutes[1] = parse_double(row[static_cast<std::size_t>(c_z1)], "summaries.csv");
        r.summary.zone_minutes[2] = parse_double(row[static_cast<std::size_t>(c_z2)], "summaries.csv");
        r.summary.zone_minutes[3] = parse_double(row[static_cast<std::size_t>(c_z3)], "summaries.csv");
        rows.push_back(std::move(r));
    }
    return rows;
}

std::map<std::string, std::map<int, std::vector<int>>> read_label_csvs(const PipelineConfig& cfg) {
    std::vector<std::filesystem::path> files;
    if (!std::filesystem::exists(cfg.out_dir)) fail_input("missing output directory " + cfg.out_dir.string());
    for (const auto& entry : std::filesystem::directory_iterator(cfg.out_dir)) {
        const std::string name = entry.path().filename().string();
        if (name.rfind("labels_", 0) == 0 && name.ends_with(".csv")) files.push_back(entry.path());
    }
    if (files.empty()) fail_input("no labels_*.csv artifacts under " + cfg.out_dir.string() +
                                  " (run cluster first)");
    std::sort(files.begin(), files.end());
    std::map<std::string, std::map<int, std::vector<int>>> out;
    for (const auto& path : files) {
        CsvTable t = read_csv(path);
        const int c_label = t.require_column("label");
        const std::string stem = path.stem().string();  // labels_<pid>_<idx>
        const auto last = stem.rfind('_');
        const std::string pid = stem.substr(7, last - 7);
        const int idx = static_cast<int>(parse_int(stem.substr(last + 1), "labels filename"));
        std::vector<int> labels;
        labels.reserve(t.rows.size());
        for (const auto& row : t.rows) {
            labels.push_back(static_cast<int>(parse_int(row[static_cast<std::size_t>(c_label)], path.string())));
        }
        out[pid][idx] = std::move(labels);
    }
    return out;
}

double percentile_low(std::vector<double> v, double q) {
    std::sort(v.begin(), v.end());
    const auto idx = static_cast<std::size_t>(std::floor(q * static_cast<double>(v.size() - 1)));
    return v[idx];
}

DailySummary build_summary(const DaySegment& day, const SleepRecord& sleep, double max_hr) {
    DailySummary s;
    s.sleep_duration = static_cast<double>(sleep.end - sleep.onset) / 60.0;
    s.sleep_efficiency = sleep.efficiency;
    const auto& series = day.series;
    const int hr_c = series.channel_index("hr");
    const int st_c = series.channel_index("steps");
    std::vector<double> hr_obs;
    double steps_total = 0.0;
    for (int i = 0; i < series.minutes(); ++i) {
        if (hr_c >= 0 && series.mask(i, hr_c)) hr_obs.push_back(series.values(i, hr_c));
        if (st_c >= 0 && series.mask(i, st_c)) steps_total += std::max(0.0, series.values(i, st_c));
    }
    s.step_count = std::round(steps_total);
    // Resting proxy: low percentile of the day's observed heart rate.
    s.resting_hr = hr_obs.empty() ? 0.0 : percentile_low(hr_obs, 0.05);
    s.zone_minutes = zone_minutes(day, max_hr, hr_c < 0 ? 0 : hr_c);
    return s;
}

}  // namespace

namespace {

// Stale per-day artifacts from an earlier dataset must not leak into the
// next stage.
void remove_matching(const std::filesystem::path& dir, const std::string& prefix) {
    if (!std::filesystem::exists(dir)) return;
    std::vector<std::filesystem::path> victims;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        const std::string name = entry.path().filename().string();
        if (name.rfind(prefix, 0) == 0 && name.ends_with(".csv")) victims.push_back(entry.path());
    }
    for (const auto& p : victims) std::filesystem::remove(p);
}

}  // namespace

void run_preprocess(const PipelineConfig& cfg) {
    const RawData data = load_raw(cfg);
    if (data.participants.empty()) fail_input("sleep.csv has no participants");
    std::filesystem::create_directories(cfg.out_dir);
    remove_matching(cfg.out_dir, "day_");

    std::vector<std::vector<SummaryRow>> summary_slots(data.participants.size());
    parallel_for(static_cast<int>(data.participants.size()), effective_workers(cfg), [&](int pi) {
        const std::string& pid = data.participants[static_cast<std::size_t>(pi)];
        try {
            std::vector<ChannelStream> streams(2);
            streams[0].channel = "hr";
            streams[1].channel = "steps";
            if (auto it = data.hr.find(pid); it != data.hr.end()) streams[0] = it->second;
            if (auto it = data.steps.find(pid); it != data.steps.end()) streams[1] = it->second;
            const auto kinds_it = data.kinds.find(pid);
            if (kinds_it == data.kinds.end()) return;  // no day metadata, nothing retained

            std::map<Timestamp, SleepRecord> by_onset;
            for (const auto& rec : data.sleeps.at(pid)) by_onset[rec.onset] = rec;

            SegmentOptions seg_opts;
            seg_opts.sentinel = cfg.impute.sentinel;
            const auto days = segment_days(pid, streams, data.sleeps.at(pid), kinds_it->second,
                                           seg_opts);
            for (std::size_t d = 0; d < days.size(); ++d) {
                UniformSeries imputed = impute(days[d].series, cfg.impute);
                DaySegment smoothed = days[d];
                smoothed.series = sg_filter(imputed, cfg.sg);

                DaySegment pre_norm = days[d];
                pre_norm.series = imputed;
                SummaryRow row;
                row.pid = pid;
                row.index = static_cast<int>(d);
                row.date = utc_date(days[d].begin);
                row.kind = days[d].kind;
                row.summary = build_summary(pre_norm, by_onset.at(days[d].begin), cfg.features.max_hr);
                summary_slots[static_cast<std::size_t>(pi)].push_back(std::move(row));

                DayArtifact out;
                out.pid = pid;
                out.index = static_cast<int>(d);
                out.kind = days[d].kind;
                out.segment = znormalize(smoothed, cfg.impute.sentinel);
                write_day_csv(cfg, out);
            }
        } catch (const Error& e) {
            throw Error(e.kind(), "participant " + pid + ": " + e.what());
        }
    });

    std::vector<std::vector<std::string>> rows;
    for (const auto& slot : summary_slots) {
        for (const auto& r : slot) {
            rows.push_back({r.pid, std::to_string(r.index), r.date, to_string(r.kind),
                            format_double(r.summary.sleep_duration),
                            format_double(r.summary.sleep_efficiency),
                            format_double(r.summary.step_count),
                            format_double(r.summary.resting_hr),
                            format_double(r.summary.zone_minutes[0]),
                            format_double(r.summary.zone_minutes[1]),
                            format_double(r.summary.zone_minutes[2]),
                            format_double(r.summary.zone_minutes[3])});
        }
    }
    write_csv_artifact(cfg.out_dir / "summaries.csv", cfg,
                       {"participant_id", "day_index", "date", "day_kind", "sleep_duration",
                        "sleep_efficiency", "step_count", "resting_hr", "zone_out", "zone_fatburn",
                        "zone_cardio", "zone_peak"},
                       rows);
}

void run_cluster(const PipelineConfig& cfg) {
    const auto days = read_day_csvs(cfg);
    remove_matching(cfg.out_dir, "labels_");
    std::vector<DaySegment> segments;
    segments.reserve(days.size());
    for (const auto& d : days) segments.push_back(d.segment);

    TiccConfig ticc = cfg.ticc;
    ticc.seed = mix_seed(cfg.seed, "cluster");
    const TiccResult result = ticc_fit(segments, ticc);

    for (std::size_t d = 0; d < days.size(); ++d) {
        std::vector<std::vector<std::string>> rows;
        const auto& labels = result.minute_labels[d];
        rows.reserve(labels.size());
        for (std::size_t i = 0; i < labels.size(); ++i) {
            rows.push_back({std::to_string(i), std::to_string(labels[i])});
        }
        write_csv_artifact(cfg.out_dir / ("labels_" + days[d].pid + "_" +
                                          zero_pad(days[d].index, 3) + ".csv"),
                           cfg, {"minute", "label"}, rows);
    }

    nlohmann::json models;
    models["config_hash"] = config_hash(cfg);
    models["version"] = version();
    models["config"] = {{"k", cfg.ticc.k},
                        {"window", cfg.ticc.window},
                        {"beta", cfg.ticc.beta},
                        {"lambda", cfg.ticc.lambda}};
    models["missing_label"] = result.missing_label;
    models["objective_trace"] = result.objective_trace;
    models["clusters"] = nlohmann::json::array();
    for (const auto& model : result.models) {
        nlohmann::json cluster;
        cluster["mu"] = std::vector<double>(model.mu.data(), model.mu.data() + model.mu.size());
        std::vector<double> theta;
        theta.reserve(static_cast<std::size_t>(model.theta.size()));
        for (int r = 0; r < model.theta.rows(); ++r) {
            for (int c = 0; c < model.theta.cols(); ++c) theta.push_back(model.theta(r, c));
        }
        cluster["theta"] = theta;  // row-major
        models["clusters"].push_back(std::move(cluster));
    }
    write_json_artifact(cfg.out_dir / "models.json", models);
}

namespace {

void fit_group_and_write(const PipelineConfig& cfg, const std::string& group,
                         const std::vector<EventSequence>& sequences, int num_types) {
    HawkesFitConfig fit_cfg = cfg.hawkes_fit;
    fit_cfg.seed = mix_seed(cfg.seed, "hawkes-" + group);
    const HawkesFit fit = fit_mle(sequences, num_types, cfg.basis, fit_cfg);
    const InfectivityMatrix a = infectivity(fit.model);
    const GrangerGraph graph = granger_graph(a, cfg.edge_epsilon);

    nlohmann::json aj;
    aj["config_hash"] = config_hash(cfg);
    aj["version"] = version();
    aj["group"] = group;
    aj["num_types"] = num_types;
    aj["num_sequences"] = sequences.size();
    aj["base"] = std::vector<double>(fit.model.base.data(),
                                     fit.model.base.data() + fit.model.base.size());
    std::vector<double> flat;
    for (int r = 0; r < a.a.rows(); ++r) {
        for (int c = 0; c < a.a.cols(); ++c) flat.push_back(a.a(r, c));
    }
    aj["infectivity"] = flat;  // row-major
    aj["basis"] = {{"centers", cfg.basis.centers}, {"sigma", cfg.basis.sigma}};
    aj["config"] = {{"l1", cfg.hawkes_fit.l1},
                    {"group_penalty", cfg.hawkes_fit.group},
                    {"max_iter", cfg.hawkes_fit.max_iter},
                    {"tol", cfg.hawkes_fit.tol},
                    {"edge_epsilon", cfg.edge_epsilon},
                    {"k", cfg.ticc.k}};
    aj["iterations"] = fit.iterations;
    write_json_artifact(cfg.out_dir / ("infectivity_" + group + ".json"), aj);

    nlohmann::json gj;
    gj["config_hash"] = config_hash(cfg);
    gj["version"] = version();
    gj["group"] = group;
    gj["epsilon"] = cfg.edge_epsilon;
    gj["num_types"] = num_types;
    gj["edges"] = nlohmann::json::array();
    for (const auto& e : graph.edges) {
        gj["edges"].push_back({{"from", e.from}, {"to", e.to}, {"weight", e.weight}});
    }
    write_json_artifact(cfg.out_dir / ("graph_" + group + ".json"), gj);
}

}  // namespace

void run_hawkes(const PipelineConfig& cfg, const std::vector<std::string>& participants) {
    const auto labels = read_label_csvs(cfg);
    const auto summaries = read_summaries(cfg);
    std::map<std::pair<std::string, int>, DayKind> kind_of;
    for (const auto& s : summaries) kind_of[{s.pid, s.index}] = s.kind;

    const std::set<std::string> filter(participants.begin(), participants.end());
    for (const auto& pid : filter) {
        if (!labels.count(pid)) fail_input("no label artifacts for participant " + pid);
    }

    const EventTypeMap type_map(cfg.ticc.k);
    const int missing = cfg.ticc.k;
    std::vector<EventSequence> work, off;
    for (const auto& [pid, per_day] : labels) {
        if (!filter.empty() && !filter.count(pid)) continue;
        for (const auto& [idx, day_labels] : per_day) {
            const auto it = kind_of.find({pid, idx});
            if (it == kind_of.end()) {
                fail_input("summaries.csv has no entry for " + pid + " day " + std::to_string(idx));
            }
            auto seq = extract_events(day_labels, type_map, missing);
            (it->second == DayKind::workday ? work : off).push_back(std::move(seq));
        }
    }
    if (work.empty() || off.empty()) fail_input("need at least one day of each kind");
    fit_group_and_write(cfg, "workday", work, type_map.num_types());
    fit_group_and_write(cfg, "offday", off, type_map.num_types());
}

void run_features(const PipelineConfig& cfg) {
    const auto records_all = load_participants(cfg);
    const auto summaries = read_summaries(cfg);
    const auto labels = read_label_csvs(cfg);

    std::map<std::string, std::vector<SummaryRow>> by_pid;
    for (const auto& s : summaries) by_pid[s.pid].push_back(s);

    const EventTypeMap type_map(cfg.ticc.k);
    HotrodFeatureConfig hcfg;
    hcfg.n_days = cfg.features.n_days;
    hcfg.basis = cfg.basis;
    hcfg.fit = cfg.hawkes_fit;
    hcfg.seed = mix_seed(cfg.seed, "features");

    std::vector<std::string> pids;
    for (const auto& [pid, _] : by_pid) pids.push_back(pid);

    struct Row {
        std::string pid;
        std::vector<double> values;
    };
    std::vector<std::optional<Row>> slots(pids.size());
    std::vector<std::string> exclusion_reasons(pids.size());
    std::vector<std::string> schema;
    std::mutex schema_mutex;

    parallel_for(static_cast<int>(pids.size()), effective_workers(cfg), [&](int pi) {
        const std::string& pid = pids[static_cast<std::size_t>(pi)];
        try {
            const auto& rows = by_pid.at(pid);
            std::vector<DailySummary> daily;
            for (const auto& r : rows) daily.push_back(r.summary);
            if (daily.size() < 2) {
                exclusion_reasons[static_cast<std::size_t>(pi)] = "fewer than 2 retained days";
                return;
            }
            FeatureVector summary_fv = summary_features(daily);

            std::vector<std::vector<int>> work_days, off_days;
            const auto label_it = labels.find(pid);
            if (label_it != labels.end()) {
                for (const auto& r : rows) {
                    const auto day_it = label_it->second.find(r.index);
                    if (day_it == label_it->second.end()) continue;
                    (r.kind == DayKind::workday ? work_days : off_days).push_back(day_it->second);
                }
            }
            std::string reason;
            auto hotrod_fv = hotrod_features(pid, work_days, off_days, type_map, cfg.ticc.k, hcfg,
                                             &reason);
            if (!hotrod_fv) {
                exclusion_reasons[static_cast<std::size_t>(pi)] = reason;
                return;
            }

            Row row;
            row.pid = pid;
            row.values = summary_fv.values;
            row.values.insert(row.values.end(), hotrod_fv->values.begin(), hotrod_fv->values.end());
            {
                std::lock_guard<std::mutex> lock(schema_mutex);
                if (schema.empty()) {
                    schema = summary_fv.schema;
                    schema.insert(schema.end(), hotrod_fv->schema.begin(), hotrod_fv->schema.end());
                }
            }
            slots[static_cast<std::size_t>(pi)] = std::move(row);
        } catch (const Error& e) {
            throw Error(e.kind(), "participant " + pid + ": " + e.what());
        }
    });

    std::vector<std::vector<std::string>> feature_rows, exclusion_rows;
    std::set<std::string> retained;
    for (std::size_t i = 0; i < slots.size(); ++i) {
        if (slots[i]) {
            std::vector<std::string> row{slots[i]->pid};
            for (double v : slots[i]->values) row.push_back(format_double(v));
            feature_rows.push_back(std::move(row));
            retained.insert(slots[i]->pid);
        } else {
            exclusion_rows.push_back({pids[i], exclusion_reasons[i]});
        }
    }
    write_csv_artifact(cfg.out_dir / "exclusions.csv", cfg, {"participant_id", "reason"},
                       exclusion_rows);
    if (feature_rows.empty()) fail_input("no participant qualified for features");

    std::vector<std::string> header{"participant_id"};
    header.insert(header.end(), schema.begin(), schema.end());
    write_csv_artifact(cfg.out_dir / "features.csv", cfg, header, feature_rows);

    // Targets over the retained cohort: medians are cohort medians.
    std::vector<ParticipantRecord> records;
    for (const auto& r : records_all) {
        if (retained.count(r.participant_id)) records.push_back(r);
    }
    if (records.size() < 2) fail_input("fewer than 2 retained participants have labels.csv rows");
    const TargetTable targets = binarize_targets(records);
    std::vector<std::string> theader{"participant_id"};
    theader.insert(theader.end(), targets.target_names.begin(), targets.target_names.end());
    std::vector<std::vector<std::string>> trows;
    for (std::size_t i = 0; i < targets.participant_ids.size(); ++i) {
        std::vector<std::string> row{targets.participant_ids[i]};
        for (std::size_t t = 0; t < targets.target_names.size(); ++t) {
            row.push_back(std::to_string(targets.labels[t][i]));
        }
        trows.push_back(std::move(row));
    }
    write_csv_artifact(cfg.out_dir / "targets.csv", cfg, theader, trows);
}

void run_evaluate(const PipelineConfig& cfg) {
    const auto fpath = cfg.out_dir / "features.csv";
    const auto tpath = cfg.out_dir / "targets.csv";
    CsvTable features = read_csv(fpath);
    CsvTable targets = read_csv(tpath);
    const std::string fh = artifact_hash_of(features, fpath);
    const std::string th = artifact_hash_of(targets, tpath);
    if (fh != th) fail_input("features.csv and targets.csv carry different config hashes");
    if (fh != config_hash(cfg)) {
        fail_input("artifacts were produced with a different config (hash " + fh + ", current " +
                   config_hash(cfg) + ")");
    }

    // Column selection by feature set.
    std::vector<int> cols;
    for (std::size_t c = 1; c < features.header.size(); ++c) {
        const bool is_hotrod = features.header[c].rfind("work_a_", 0) == 0 ||
                               features.header[c].rfind("off_a_", 0) == 0;
        if (cfg.feature_set == "combined" || (cfg.feature_set == "hotrod") == is_hotrod) {
            cols.push_back(static_cast<int>(c));
        }
    }
    if (cols.empty()) fail_input("no feature columns selected");

    std::map<std::string, std::vector<double>> x_by_pid;
    for (const auto& row : features.rows) {
        std::vector<double> v;
        v.reserve(cols.size());
        for (int c : cols) v.push_back(parse_double(row[static_cast<std::size_t>(c)], "features.csv"));
        x_by_pid[row[0]] = std::move(v);
    }

    nlohmann::json report;
    report["config_hash"] = config_hash(cfg);
    report["version"] = version();
    report["feature_set"] = cfg.feature_set;
    report["num_features"] = cols.size();
    report["targets"] = nlohmann::json::object();

    for (std::size_t t = 1; t < targets.header.size(); ++t) {
        std::vector<std::vector<double>> xs;
        std::vector<int> ys;
        for (const auto& row : targets.rows) {
            const auto it = x_by_pid.find(row[0]);
            if (it == x_by_pid.end()) continue;
            const int label = static_cast<int>(parse_int(row[t], "targets.csv"));
            if (label < 0) continue;
            xs.push_back(it->second);
            ys.push_back(label);
        }
        Eigen::MatrixXd x(static_cast<int>(xs.size()), static_cast<int>(cols.size()));
        for (std::size_t i = 0; i < xs.size(); ++i) {
            for (std::size_t c = 0; c < xs[i].size(); ++c) {
                x(static_cast<int>(i), static_cast<int>(c)) = xs[i][c];
            }
        }
        const std::string target = targets.header[t];
        const CvReport cv = cross_validate(x, ys, mix_seed(cfg.seed, "evaluate-" + target),
                                           cfg.feature_set);
        nlohmann::json tj;
        tj["fold_macro_f1"] = cv.fold_f1;
        tj["mean_macro_f1"] = cv.mean_f1;
        tj["best_configs"] = nlohmann::json::array();
        for (const auto& c : cv.best_configs) {
            tj["best_configs"].push_back(
                {{"n_estimators", c.n_estimators},
                 {"criterion", c.criterion == SplitCriterion::gini ? "gini" : "entropy"},
                 {"max_depth", c.max_depth},
                 {"min_samples_split", c.min_samples_split}});
        }
        report["targets"][target] = std::move(tj);
    }
    write_json_artifact(cfg.out_dir / "report.json", report);
}

int run_pipeline(const PipelineConfig& cfg, bool force) {
    struct Stage {
        const char* name;
        std::function<void(const PipelineConfig&)> run;
        std::vector<std::string> outputs;
    };
    const Stage stages[] = {
        {"preprocess", [](const PipelineConfig& c) { run_preprocess(c); }, {"summaries.csv"}},
        {"cluster", [](const PipelineConfig& c) { run_cluster(c); }, {"models.json"}},
        {"hawkes", [](const PipelineConfig& c) { run_hawkes(c); },
         {"infectivity_workday.json", "infectivity_offday.json"}},
        {"features", [](const PipelineConfig& c) { run_features(c); },
         {"features.csv", "targets.csv"}},
        {"evaluate", [](const PipelineConfig& c) { run_evaluate(c); }, {"report.json"}},
    };

    std::filesystem::create_directories(cfg.out_dir);
    const auto state_path = cfg.out_dir / ".hotrod_state.json";
    nlohmann::json state = nlohmann::json::object();
    if (std::filesystem::exists(state_path)) state = read_json(state_path);

    // Chained stage hashes: a change in the config or any input invalidates
    // every downstream stage.
    std::string chain = config_hash(cfg);
    for (const char* input : {"heartrate.csv", "steps.csv", "sleep.csv", "days.csv", "labels.csv"}) {
        const auto path = cfg.data_dir / input;
        chain = fnv1a_hex(chain + (std::filesystem::exists(path) ? file_hash(path) : "absent"));
    }

    for (const auto& stage : stages) {
        chain = fnv1a_hex(chain + stage.name);
        // The feature-set choice is outside the artifact hash but must still
        // invalidate a stale report.
        if (std::string(stage.name) == "evaluate") {
            chain = fnv1a_hex(chain + cfg.feature_set);
        }
        bool outputs_exist = true;
        for (const auto& out : stage.outputs) {
            outputs_exist = outputs_exist && std::filesystem::exists(cfg.out_dir / out);
        }
        const bool done = !force && outputs_exist && state.contains(stage.name) &&
                          state[stage.name] == chain;
        if (done) continue;
        try {
            stage.run(cfg);
        } catch (const Error& e) {
            throw Error(e.kind(), std::string("stage ") + stage.name + ": " + e.what());
        }
        state[stage.name] = chain;
        write_json_artifact(state_path, state);
    }
    return 0;
}

}  // namespace hotrod
