#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "hotrod/features.hpp"
#include "support/oracles.hpp"

using namespace hotrod;

namespace {

DaySegment constant_hr_day(double hr, int minutes) {
    Eigen::MatrixXd values(minutes, 1);
    values.setConstant(hr);
    auto day = oracles::make_day(values);
    day.series.channels = {"hr"};
    return day;
}

std::vector<int> label_day(std::uint64_t seed, int minutes, int clusters) {
    // Piecewise-constant labels with a few transitions per day.
    Rng rng(seed);
    std::vector<int> labels;
    int current = static_cast<int>(rng.below(static_cast<std::uint64_t>(clusters)));
    while (static_cast<int>(labels.size()) < minutes) {
        const int run = 40 + static_cast<int>(rng.below(120));
        for (int i = 0; i < run && static_cast<int>(labels.size()) < minutes; ++i) {
            labels.push_back(current);
        }
        int next = static_cast<int>(rng.below(static_cast<std::uint64_t>(clusters)));
        if (next == current) next = (next + 1) % clusters;
        current = next;
    }
    return labels;
}

ParticipantRecord record(const std::string& pid, const std::string& job, const std::string& shift,
                         double con) {
    ParticipantRecord r;
    r.participant_id = pid;
    r.job_type = job;
    r.shift = shift;
    r.gender = "f";
    // Other scores vary with con so only deliberately-constant columns are
    // degenerate.
    r.scores = {1.0 + 0.5 * con, con, 5.0 - 0.6 * con, 2.0 + 0.3 * con,
                0.9 * con,       20.0 + con, 30.0 - con};
    return r;
}

}  // namespace

TEST_CASE("zone minutes follow the half-open ratio bands") {
    SUBCASE("constant 60% of max is pure fat-burn") {
        const auto z = zone_minutes(constant_hr_day(0.60 * 190.0, 100), 190.0);
        CHECK(z[1] == doctest::Approx(100.0));
        CHECK(z[0] + z[2] + z[3] == doctest::Approx(0.0));
    }
    SUBCASE("constant 40% of max is out-of-zone") {
        const auto z = zone_minutes(constant_hr_day(0.40 * 190.0, 80), 190.0);
        CHECK(z[0] == doctest::Approx(80.0));
    }
    SUBCASE("exactly 85% counts as peak") {
        const auto z = zone_minutes(constant_hr_day(0.85 * 190.0, 10), 190.0);
        CHECK(z[3] == doctest::Approx(10.0));
    }
}

TEST_CASE("the four zones partition the observed minutes") {
    auto values = oracles::ar1_series(500, 0.9, 15.0, 44, 110.0);
    auto day = oracles::make_day(Eigen::Map<Eigen::VectorXd>(values.data(), 500));
    for (int i = 100; i < 130; ++i) day.series.mask(i, 0) = false;
    const auto z = zone_minutes(day, 190.0);
    CHECK(z[0] + z[1] + z[2] + z[3] == doctest::Approx(470.0));
}

TEST_CASE("summary features: functionals over days, fixed 40-entry schema") {
    DailySummary d1{480.0, 90.0, 1000.0, 55.0, {100, 50, 10, 0}};
    DailySummary d2{500.0, 85.0, 3000.0, 60.0, {120, 40, 5, 1}};
    const auto fv = summary_features({d1, d2});
    CHECK(fv.schema.size() == 40);  // 8 summary scalars x 5 functionals
    CHECK(fv.values.size() == 40);

    const auto at = [&](const std::string& name) {
        for (std::size_t i = 0; i < fv.schema.size(); ++i) {
            if (fv.schema[i] == name) return fv.values[i];
        }
        FAIL("missing schema entry ", name);
        return 0.0;
    };
    CHECK(at("step_count_mean") == doctest::Approx(2000.0));
    CHECK(at("step_count_std") == doctest::Approx(std::sqrt(2.0) * 1000.0));
    CHECK(at("step_count_min") == doctest::Approx(1000.0));
    CHECK(at("step_count_max") == doctest::Approx(3000.0));
    CHECK(at("step_count_median") == doctest::Approx(2000.0));
}

TEST_CASE("identical days drive every std to zero") {
    DailySummary d{480.0, 90.0, 1000.0, 55.0, {100, 50, 10, 0}};
    const auto fv = summary_features({d, d, d});
    for (std::size_t i = 0; i < fv.schema.size(); ++i) {
        if (fv.schema[i].ends_with("_std")) CHECK(fv.values[i] == doctest::Approx(0.0));
    }
}

TEST_CASE("summary features require at least two days") {
    CHECK_THROWS_AS(summary_features({DailySummary{}}), Error);
}

TEST_CASE("hotrod features: length, exclusion rule, determinism, order invariance") {
    const EventTypeMap map(3);
    HotrodFeatureConfig cfg;
    cfg.n_days = 5;
    cfg.basis = oracles::reference_model().basis;
    cfg.seed = 9;

    std::vector<std::vector<int>> work, off;
    for (int d = 0; d < 7; ++d) work.push_back(label_day(100 + static_cast<std::uint64_t>(d), 900, 3));
    for (int d = 0; d < 6; ++d) off.push_back(label_day(200 + static_cast<std::uint64_t>(d), 900, 3));

    std::string reason;
    SUBCASE("U=6 gives 72 features") {
        const auto fv = hotrod_features("P1", work, off, map, 3, cfg, &reason);
        REQUIRE(fv.has_value());
        CHECK(fv->values.size() == 72);  // 2 * U^2
        CHECK(fv->schema.size() == 72);
    }
    SUBCASE("too few workdays excludes the participant") {
        std::vector<std::vector<int>> four(work.begin(), work.begin() + 4);
        const auto fv = hotrod_features("P1", four, off, map, 3, cfg, &reason);
        CHECK(!fv.has_value());
        CHECK(reason.find("5") != std::string::npos);
    }
    SUBCASE("fixed seed reproduces the features; day order does not matter") {
        const auto a = hotrod_features("P1", work, off, map, 3, cfg, &reason);
        auto shuffled_work = work;
        std::rotate(shuffled_work.begin(), shuffled_work.begin() + 3, shuffled_work.end());
        const auto b = hotrod_features("P1", shuffled_work, off, map, 3, cfg, &reason);
        REQUIRE(a.has_value());
        REQUIRE(b.has_value());
        CHECK(a->values == b->values);
    }
}

TEST_CASE("binarize_targets: median split, job and shift rules") {
    std::vector<ParticipantRecord> records;
    const double cons[] = {1.0, 2.0, 3.0, 4.0, 5.0};
    for (int i = 0; i < 5; ++i) {
        records.push_back(record("P" + std::to_string(i), i == 0 ? "nurse" : "technician",
                                 i % 2 == 0 ? "day" : "night", cons[i]));
    }
    const auto table = binarize_targets(records);
    const auto target = [&](const std::string& name) {
        for (std::size_t t = 0; t < table.target_names.size(); ++t) {
            if (table.target_names[t] == name) return table.labels[t];
        }
        FAIL("missing target ", name);
        return std::vector<int>{};
    };

    CHECK(target("con") == std::vector<int>{0, 0, 0, 1, 1});  // median 3, strict above
    CHECK(target("job_type") == std::vector<int>{1, 0, 0, 0, 0});
    CHECK(target("shift") == std::vector<int>{1, 0, 1, 0, 1});
}

TEST_CASE("even-count median uses the midpoint") {
    std::vector<ParticipantRecord> records;
    const double scores[] = {2.0, 2.0, 4.0, 4.0};
    for (int i = 0; i < 4; ++i) {
        records.push_back(record("P" + std::to_string(i), "nurse", "day", scores[i]));
    }
    const auto table = binarize_targets(records);
    CHECK(table.labels[1] == std::vector<int>{0, 0, 1, 1});  // con is target index 1
}

TEST_CASE("an all-identical score column is a degenerate target") {
    std::vector<ParticipantRecord> records;
    for (int i = 0; i < 4; ++i) records.push_back(record("P" + std::to_string(i), "nurse", "day", 3.0));
    CHECK_THROWS_WITH_AS(binarize_targets(records), doctest::Contains("degenerate target"), Error);
}
