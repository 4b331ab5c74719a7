#include "hotrod/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hotrod/arima.hpp"

namespace hotrod {

namespace {

// Longest observed run to train the gap-filling model on; longer prefixes
// add cost without improving the short forecasts needed here.
constexpr int kMaxForecastPrefix = 240;
constexpr int kMinForecastPrefix = 10;

}  // namespace

UniformSeries aggregate_minutely(const std::vector<ChannelStream>& streams, Timestamp start,
                                 int minutes, double sentinel) {
    if (streams.empty()) fail_input("aggregate_minutely: no channels");
    if (minutes < 1) fail_input("aggregate_minutely: empty window");
    if (start % 60 != 0) fail_input("aggregate_minutely: start not minute-aligned");

    bool any = false;
    for (const auto& s : streams) any = any || !s.samples.empty();
    if (!any) fail_input("no samples");

    const int m = static_cast<int>(streams.size());
    UniformSeries out;
    out.start = start;
    out.values = Eigen::MatrixXd::Constant(minutes, m, sentinel);
    out.mask = BoolArray::Constant(minutes, m, false);
    for (const auto& s : streams) out.channels.push_back(s.channel);

    for (int c = 0; c < m; ++c) {
        const auto& samples = streams[static_cast<std::size_t>(c)].samples;
        Timestamp prev = std::numeric_limits<Timestamp>::min();
        double sum = 0.0;
        int count = 0;
        int cur_row = -1;
        auto flush = [&]() {
            if (cur_row >= 0 && count > 0) {
                out.values(cur_row, c) = sum / count;
                out.mask(cur_row, c) = true;
            }
            sum = 0.0;
            count = 0;
        };
        for (const auto& sample : samples) {
            if (sample.timestamp < prev) fail_input("aggregate_minutely: unsorted samples");
            if (!std::isfinite(sample.value)) fail_input("aggregate_minutely: non-finite value");
            prev = sample.timestamp;
            const Timestamp row64 = (minute_floor(sample.timestamp) - start) / 60;
            if (row64 < 0 || row64 >= minutes) continue;
            const int row = static_cast<int>(row64);
            if (row != cur_row) {
                flush();
                cur_row = row;
            }
            sum += sample.value;
            ++count;
        }
        flush();
    }
    return out;
}

UniformSeries aggregate_minutely(const std::vector<ChannelStream>& streams, double sentinel) {
    Timestamp lo = std::numeric_limits<Timestamp>::max();
    Timestamp hi = std::numeric_limits<Timestamp>::min();
    for (const auto& s : streams) {
        if (s.samples.empty()) continue;
        lo = std::min(lo, s.samples.front().timestamp);
        hi = std::max(hi, s.samples.back().timestamp);
    }
    if (lo > hi) fail_input("no samples");
    const Timestamp start = minute_floor(lo);
    const int minutes = static_cast<int>((minute_floor(hi) - start) / 60) + 1;
    return aggregate_minutely(streams, start, minutes, sentinel);
}

UniformSeries impute(const UniformSeries& series, const ImputeConfig& cfg) {
    if (cfg.max_gap_minutes < 1) fail_config("impute: max_gap_minutes must be >= 1");
    if (cfg.max_p < 0 || cfg.max_d < 0 || cfg.max_q < 0) {
        fail_config("impute: negative ARIMA order bound");
    }
    UniformSeries out = series;
    const int t = out.minutes();
    for (int c = 0; c < out.num_channels(); ++c) {
        double mean = 0.0;
        int observed = 0;
        for (int i = 0; i < t; ++i) {
            if (out.mask(i, c)) {
                mean += out.values(i, c);
                ++observed;
            }
        }
        if (observed == 0) fail_input("channel fully missing: " + out.channels[static_cast<std::size_t>(c)]);
        mean /= observed;

        // Early missing cells have no history to forecast from.
        for (int i = 0; i < std::min(t, cfg.leading_fill_count); ++i) {
            if (!out.mask(i, c)) {
                out.values(i, c) = mean;
                out.mask(i, c) = true;
            }
        }

        int i = 0;
        while (i < t) {
            if (out.mask(i, c)) {
                ++i;
                continue;
            }
            int j = i;
            while (j < t && !out.mask(j, c)) ++j;
            const int gap = j - i;
            if (gap > cfg.max_gap_minutes) {
                for (int r = i; r < j; ++r) out.values(r, c) = cfg.sentinel;
                i = j;
                continue;
            }
            // Observed run immediately before the gap.
            int run_start = i;
            while (run_start > 0 && out.mask(run_start - 1, c)) --run_start;
            run_start = std::max(run_start, i - kMaxForecastPrefix);
            const int run_len = i - run_start;
            if (run_len < kMinForecastPrefix) {
                for (int r = i; r < j; ++r) {
                    out.values(r, c) = mean;
                    out.mask(r, c) = true;
                }
                i = j;
                continue;
            }
            std::vector<double> prefix(static_cast<std::size_t>(run_len));
            for (int r = 0; r < run_len; ++r) {
                prefix[static_cast<std::size_t>(r)] = out.values(run_start + r, c);
            }
            ArimaModel model = fit_arima_auto(prefix, cfg.max_p, cfg.max_d, cfg.max_q);
            std::vector<double> fill = forecast(model, prefix, gap);
            for (int r = 0; r < gap; ++r) {
                double v = fill[static_cast<std::size_t>(r)];
                out.values(i + r, c) = std::isfinite(v) ? v : mean;
                out.mask(i + r, c) = true;
            }
            i = j;
        }
    }
    return out;
}

UniformSeries sg_filter(const UniformSeries& series, const SgConfig& cfg) {
    const int m = cfg.half_window;
    const int z = cfg.poly_order;
    if (m < 0 || z < 0 || 2 * m + 1 <= z) fail_config("sg_filter: need 2m+1 > z >= 0");
    const int t = series.minutes();
    if (t < 2 * m + 1) fail_input("sg_filter: window larger than series");

    UniformSeries out = series;
    for (int c = 0; c < series.num_channels(); ++c) {
        for (int i = 0; i < t; ++i) {
            if (!series.mask(i, c)) continue;
            const int lo = std::max(0, i - m);
            const int hi = std::min(t - 1, i + m);
            int pts = 0;
            double win_sum = 0.0;
            for (int j = lo; j <= hi; ++j) {
                if (series.mask(j, c)) {
                    ++pts;
                    win_sum += series.values(j, c);
                }
            }
            const int deg = std::min(z, pts - 1);
            if (deg == 0) {
                out.values(i, c) = win_sum / pts;
                continue;
            }
            Eigen::MatrixXd a(pts, deg + 1);
            Eigen::VectorXd b(pts);
            int r = 0;
            for (int j = lo; j <= hi; ++j) {
                if (!series.mask(j, c)) continue;
                double x = 1.0;
                for (int k = 0; k <= deg; ++k) {
                    a(r, k) = x;
                    x *= static_cast<double>(j - i);
                }
                b(r) = series.values(j, c);
                ++r;
            }
            Eigen::VectorXd coef = a.colPivHouseholderQr().solve(b);
            out.values(i, c) = coef(0);  // polynomial evaluated at the center
        }
    }
    return out;
}

DaySegment znormalize(const DaySegment& day, double sentinel) {
    DaySegment out = day;
    UniformSeries& s = out.series;
    const int t = s.minutes();
    for (int c = 0; c < s.num_channels(); ++c) {
        double sum = 0.0;
        int n = 0;
        for (int i = 0; i < t; ++i) {
            if (s.mask(i, c)) {
                sum += s.values(i, c);
                ++n;
            }
        }
        if (n < 2) fail_input("znormalize: channel needs >= 2 observed values");
        const double mean = sum / n;
        double ss = 0.0;
        for (int i = 0; i < t; ++i) {
            if (s.mask(i, c)) {
                const double d = s.values(i, c) - mean;
                ss += d * d;
            }
        }
        const double var = ss / (n - 1);
        if (var == 0.0) fail_input("degenerate channel: " + s.channels[static_cast<std::size_t>(c)]);
        const double sd = std::sqrt(var);
        for (int i = 0; i < t; ++i) {
            if (s.mask(i, c)) {
                s.values(i, c) = (s.values(i, c) - mean) / sd;
            } else {
                s.values(i, c) = sentinel;
            }
        }
    }
    return out;
}

}  // namespace hotrod
