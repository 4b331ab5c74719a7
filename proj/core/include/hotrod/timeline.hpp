#pragma once

#include <Eigen/Dense>
#include <map>
#include <string>
#include <vector>

#include "hotrod/types.hpp"

namespace hotrod {

// One raw sensor observation. Samples within a stream are time-sorted and
// finite; both are validated at CSV load.
struct RawSample {
    Timestamp timestamp = 0;
    double value = 0.0;
};

// All samples of one channel for one participant.
struct ChannelStream {
    std::string channel;
    std::vector<RawSample> samples;
};

using BoolArray = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

// Minute-rate multivariate series. Row i is the minute starting at
// start + 60*i. mask(i,c) is true for observed or imputed cells; false
// cells always hold the sentinel value.
struct UniformSeries {
    Timestamp start = 0;
    std::vector<std::string> channels;
    Eigen::MatrixXd values;  // T x m
    BoolArray mask;          // T x m

    int minutes() const { return static_cast<int>(values.rows()); }
    int num_channels() const { return static_cast<int>(values.cols()); }
    int channel_index(const std::string& name) const;
};

enum class DayKind { workday, offday };

std::string to_string(DayKind kind);
DayKind day_kind_from_string(const std::string& s);

// One day of data: the interval between consecutive qualifying sleep onsets.
struct DaySegment {
    UniformSeries series;
    DayKind kind = DayKind::workday;
    std::string participant_id;
    Timestamp begin = 0;  // sleep onset
    Timestamp end = 0;    // next sleep onset (exclusive)

    double duration_hours() const { return static_cast<double>(end - begin) / 3600.0; }
};

struct SleepRecord {
    Timestamp onset = 0;
    Timestamp end = 0;
    double efficiency = 0.0;  // percent, [0, 100]
};

struct SurveyScores {
    double neuroticism = 0.0;
    double conscientiousness = 0.0;
    double extraversion = 0.0;
    double agreeableness = 0.0;
    double openness = 0.0;
    double pos_affect = 0.0;
    double neg_affect = 0.0;
};

struct ParticipantRecord {
    std::string participant_id;
    std::string job_type;
    std::string shift;
    std::string gender;
    SurveyScores scores;
};

struct SegmentOptions {
    double min_sleep_hours = 6.0;
    double min_day_hours = 20.0;
    double max_day_hours = 28.0;
    double sentinel = kDefaultSentinel;  // placed in masked-out cells
};

// Day-kind lookup keyed by the UTC date (YYYY-MM-DD) of the segment's onset.
using DayKindMap = std::map<std::string, DayKind>;

std::string utc_date(Timestamp t);

// Cuts the raw streams into day segments bounded by consecutive sleep onsets.
// Sleeps shorter than min_sleep_hours never create a boundary; segments whose
// duration falls outside [min_day_hours, max_day_hours] are dropped, as are
// segments without a day-kind entry. Fewer than two qualifying onsets yields
// an empty result.
std::vector<DaySegment> segment_days(const std::string& participant_id,
                                     const std::vector<ChannelStream>& streams,
                                     std::vector<SleepRecord> sleeps, const DayKindMap& kinds,
                                     const SegmentOptions& opts = {});

}  // namespace hotrod
