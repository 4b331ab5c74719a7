#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "hotrod/preprocess.hpp"
#include "hotrod/timeline.hpp"
#include "support/oracles.hpp"

using namespace hotrod;

namespace {

constexpr Timestamp kHour = 3600;
// 2022-03-01 00:00 UTC
constexpr Timestamp kDay1 = 1646092800;

ChannelStream constant_stream(const std::string& name, Timestamp from, Timestamp to,
                              Timestamp step, double value) {
    ChannelStream s;
    s.channel = name;
    for (Timestamp t = from; t < to; t += step) s.samples.push_back({t, value});
    return s;
}

}  // namespace

TEST_CASE("segment_days keeps the 25h segment between consecutive onsets") {
    const Timestamp onset1 = kDay1 + 22 * kHour;
    const Timestamp onset2 = onset1 + 25 * kHour;
    std::vector<SleepRecord> sleeps = {{onset1, onset1 + 7 * kHour, 90.0},
                                       {onset2, onset2 + 7 * kHour, 88.0}};
    DayKindMap kinds{{utc_date(onset1), DayKind::workday}};
    auto streams = std::vector<ChannelStream>{
        constant_stream("hr", onset1, onset2 + kHour, 60, 70.0),
        constant_stream("steps", onset1, onset2 + kHour, 60, 5.0)};

    const auto days = segment_days("P1", streams, sleeps, kinds);
    REQUIRE(days.size() == 1);
    CHECK(days[0].duration_hours() == doctest::Approx(25.0));
    CHECK(days[0].kind == DayKind::workday);
    CHECK(days[0].series.minutes() == 25 * 60);
}

TEST_CASE("a sleep shorter than six hours never creates a boundary") {
    const Timestamp onset1 = kDay1 + 22 * kHour;
    const Timestamp nap = onset1 + 10 * kHour;
    const Timestamp onset2 = onset1 + 24 * kHour;
    std::vector<SleepRecord> sleeps = {{onset1, onset1 + 8 * kHour, 90.0},
                                       {nap, nap + 5 * kHour, 80.0},
                                       {onset2, onset2 + 8 * kHour, 90.0}};
    DayKindMap kinds{{utc_date(onset1), DayKind::workday}, {utc_date(nap), DayKind::workday}};
    auto streams = std::vector<ChannelStream>{
        constant_stream("hr", onset1, onset2, 60, 70.0)};

    const auto days = segment_days("P1", streams, sleeps, kinds);
    REQUIRE(days.size() == 1);  // nap did not split the day
    CHECK(days[0].begin == onset1);
    CHECK(days[0].end == onset2);
}

TEST_CASE("segments outside the retention band are dropped") {
    const Timestamp onset1 = kDay1 + 22 * kHour;
    const Timestamp onset2 = onset1 + 30 * kHour;  // too long
    const Timestamp onset3 = onset2 + 19 * kHour;  // too short
    std::vector<SleepRecord> sleeps = {{onset1, onset1 + 7 * kHour, 90.0},
                                       {onset2, onset2 + 7 * kHour, 90.0},
                                       {onset3, onset3 + 7 * kHour, 90.0}};
    DayKindMap kinds;
    for (auto t : {onset1, onset2, onset3}) kinds[utc_date(t)] = DayKind::offday;
    auto streams = std::vector<ChannelStream>{
        constant_stream("hr", onset1, onset3, 60, 70.0)};

    CHECK(segment_days("P1", streams, sleeps, kinds).empty());
}

TEST_CASE("fewer than two qualifying onsets yields an empty result, not an error") {
    std::vector<SleepRecord> sleeps = {{kDay1, kDay1 + 7 * kHour, 90.0}};
    auto streams = std::vector<ChannelStream>{constant_stream("hr", kDay1, kDay1 + kHour, 60, 70.0)};
    CHECK(segment_days("P1", streams, sleeps, {}).empty());
}

TEST_CASE("retained segments never overlap and stay within the raw span") {
    const Timestamp base = kDay1 + 21 * kHour;
    std::vector<SleepRecord> sleeps;
    DayKindMap kinds;
    Timestamp onset = base;
    for (int i = 0; i < 5; ++i) {
        sleeps.push_back({onset, onset + 7 * kHour, 85.0});
        kinds[utc_date(onset)] = i % 2 == 0 ? DayKind::workday : DayKind::offday;
        onset += (24 + i) * kHour;  // 24..28h spacing; the 28h one is kept too
    }
    auto streams = std::vector<ChannelStream>{constant_stream("hr", base, onset, 120, 72.0)};

    const auto days = segment_days("P1", streams, sleeps, kinds);
    REQUIRE(!days.empty());
    for (std::size_t i = 0; i + 1 < days.size(); ++i) {
        CHECK(days[i].end <= days[i + 1].begin);
    }
    CHECK(days.front().begin >= base);
    CHECK(days.back().end <= onset);
}

TEST_CASE("segment_days is independent of stream interleaving") {
    const Timestamp onset1 = kDay1 + 22 * kHour;
    const Timestamp onset2 = onset1 + 24 * kHour;
    std::vector<SleepRecord> sleeps = {{onset1, onset1 + 7 * kHour, 90.0},
                                       {onset2, onset2 + 7 * kHour, 90.0}};
    DayKindMap kinds{{utc_date(onset1), DayKind::workday}};
    auto hr = constant_stream("hr", onset1, onset2, 45, 70.0);
    auto st = constant_stream("steps", onset1, onset2, 60, 3.0);

    const auto a = segment_days("P1", {hr, st}, sleeps, kinds);
    const auto b = segment_days("P1", {hr, st}, {sleeps[1], sleeps[0]}, kinds);
    REQUIRE(a.size() == b.size());
    REQUIRE(a.size() == 1);
    CHECK(a[0].series.values == b[0].series.values);
}

TEST_CASE("aggregate_minutely averages within the minute and masks empty minutes") {
    ChannelStream s;
    s.channel = "hr";
    SUBCASE("two samples in one minute") {
        s.samples = {{0, 72.0}, {30, 74.0}};
        const auto series = aggregate_minutely({s});
        CHECK(series.values(0, 0) == doctest::Approx(73.0));
        CHECK(series.mask(0, 0));
    }
    SUBCASE("gap minute masked missing") {
        s.samples = {{0, 70.0}, {120, 71.0}};
        const auto series = aggregate_minutely({s});
        REQUIRE(series.minutes() == 3);
        CHECK(series.mask(0, 0));
        CHECK(!series.mask(1, 0));
        CHECK(series.values(1, 0) == doctest::Approx(kDefaultSentinel));
        CHECK(series.mask(2, 0));
    }
    SUBCASE("three samples average exactly") {
        s.samples = {{0, 70.0}, {20, 72.0}, {40, 74.0}};
        const auto series = aggregate_minutely({s});
        CHECK(series.values(0, 0) == doctest::Approx(72.0));
    }
    SUBCASE("empty input errors") {
        CHECK_THROWS_WITH_AS(aggregate_minutely({s}), doctest::Contains("no samples"), Error);
    }
}

TEST_CASE("day kind comes from metadata; unknown dates are dropped") {
    const Timestamp onset1 = kDay1 + 22 * kHour;
    const Timestamp onset2 = onset1 + 24 * kHour;
    const Timestamp onset3 = onset2 + 24 * kHour;
    std::vector<SleepRecord> sleeps = {{onset1, onset1 + 7 * kHour, 90.0},
                                       {onset2, onset2 + 7 * kHour, 90.0},
                                       {onset3, onset3 + 7 * kHour, 90.0}};
    DayKindMap kinds{{utc_date(onset2), DayKind::offday}};  // only the second day is annotated
    auto streams = std::vector<ChannelStream>{constant_stream("hr", onset1, onset3, 60, 70.0)};

    const auto days = segment_days("P1", streams, sleeps, kinds);
    REQUIRE(days.size() == 1);
    CHECK(days[0].begin == onset2);
    CHECK(days[0].kind == DayKind::offday);
}
