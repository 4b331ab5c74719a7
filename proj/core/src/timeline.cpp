#include "hotrod/timeline.hpp"

#include <algorithm>
#include <cstdio>
#include <ctime>

#include "hotrod/preprocess.hpp"

namespace hotrod {

int UniformSeries::channel_index(const std::string& name) const {
    for (std::size_t i = 0; i < channels.size(); ++i) {
        if (channels[i] == name) return static_cast<int>(i);
    }
    return -1;
}

std::string to_string(DayKind kind) { return kind == DayKind::workday ? "workday" : "offday"; }

DayKind day_kind_from_string(const std::string& s) {
    if (s == "workday") return DayKind::workday;
    if (s == "offday") return DayKind::offday;
    fail_input("unknown day_kind '" + s + "' (expected workday or offday)");
}

std::string utc_date(Timestamp t) {
    std::time_t tt = static_cast<std::time_t>(t);
    std::tm tm{};
    gmtime_r(&tt, &tm);
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", tm.tm_year + 1900, tm.tm_mon + 1,
                  tm.tm_mday);
    return buf;
}

std::vector<DaySegment> segment_days(const std::string& participant_id,
                                     const std::vector<ChannelStream>& streams,
                                     std::vector<SleepRecord> sleeps, const DayKindMap& kinds,
                                     const SegmentOptions& opts) {
    // Naps (below the minimum duration) never create a day boundary.
    std::vector<Timestamp> onsets;
    for (const auto& s : sleeps) {
        if (s.end <= s.onset) fail_input("sleep record with end <= onset");
        if (static_cast<double>(s.end - s.onset) >= opts.min_sleep_hours * 3600.0) {
            onsets.push_back(s.onset);
        }
    }
    std::sort(onsets.begin(), onsets.end());
    onsets.erase(std::unique(onsets.begin(), onsets.end()), onsets.end());

    std::vector<DaySegment> days;
    if (onsets.size() < 2) return days;

    for (std::size_t i = 0; i + 1 < onsets.size(); ++i) {
        const Timestamp begin = onsets[i];
        const Timestamp end = onsets[i + 1];
        const double hours = static_cast<double>(end - begin) / 3600.0;
        if (hours < opts.min_day_hours || hours > opts.max_day_hours) continue;

        auto kind_it = kinds.find(utc_date(begin));
        if (kind_it == kinds.end()) continue;  // day kind is never inferred

        // Carve each channel's samples into [begin, end); an onset exactly on
        // the boundary belongs to the new day.
        std::vector<ChannelStream> window;
        window.reserve(streams.size());
        for (const auto& stream : streams) {
            ChannelStream cut;
            cut.channel = stream.channel;
            auto lo = std::lower_bound(stream.samples.begin(), stream.samples.end(), begin,
                                       [](const RawSample& s, Timestamp t) { return s.timestamp < t; });
            auto hi = std::lower_bound(stream.samples.begin(), stream.samples.end(), end,
                                       [](const RawSample& s, Timestamp t) { return s.timestamp < t; });
            cut.samples.assign(lo, hi);
            window.push_back(std::move(cut));
        }

        const Timestamp start = minute_floor(begin);
        const int minutes = static_cast<int>((minute_floor(end) - start) / 60);
        if (minutes < 1) continue;

        DaySegment day;
        day.series = aggregate_minutely(window, start, minutes, opts.sentinel);
        day.kind = kind_it->second;
        day.participant_id = participant_id;
        day.begin = begin;
        day.end = end;
        days.push_back(std::move(day));
    }
    return days;
}

}  // namespace hotrod
