#pragma once

#include <vector>

#include "hotrod/timeline.hpp"

namespace hotrod {

struct ImputeConfig {
    int max_gap_minutes = 15;   // longer gaps are sentinel-filled and stay masked out
    int leading_fill_count = 5; // missing cells this early are day-mean filled
    int max_p = 5;
    int max_d = 2;
    int max_q = 5;
    double sentinel = kDefaultSentinel;
};

struct SgConfig {
    int half_window = 2;  // window spans 2*half_window + 1 minutes
    int poly_order = 3;
};

// Buckets raw samples into minutes. Each minute's value is the arithmetic
// mean of the samples in [minute, minute+1); empty minutes are masked
// missing. The bounded overload produces exactly `minutes` rows starting at
// `start` (minute-aligned); the unbounded one spans the samples.
UniformSeries aggregate_minutely(const std::vector<ChannelStream>& streams, Timestamp start,
                                 int minutes, double sentinel = kDefaultSentinel);
UniformSeries aggregate_minutely(const std::vector<ChannelStream>& streams,
                                 double sentinel = kDefaultSentinel);

// Fills missing cells. Leading missing rows take the day-channel mean; gaps
// of at most max_gap_minutes are forecast forward from the observed run
// preceding them with a minimum-AIC ARIMA model; longer gaps get the
// sentinel and remain masked out.
UniformSeries impute(const UniformSeries& series, const ImputeConfig& cfg);

// Least-squares polynomial smoothing over a 2m+1 window. Masked cells are
// excluded from every fit and left untouched; edge windows are truncated and
// refit.
UniformSeries sg_filter(const UniformSeries& series, const SgConfig& cfg);

// Per-channel z-normalization over this day's observed cells (sample std,
// ddof=1). Sentinel cells are excluded from the statistics and reset to the
// sentinel afterwards.
DaySegment znormalize(const DaySegment& day, double sentinel = kDefaultSentinel);

}  // namespace hotrod
