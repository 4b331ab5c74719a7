#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "hotrod/rng.hpp"
#include "hotrod/ticc.hpp"
#include "support/oracles.hpp"

using namespace hotrod;

namespace {

std::vector<StackedWindow> sample_gaussian_windows(const Eigen::MatrixXd& precision, int n,
                                                   std::uint64_t seed) {
    const Eigen::MatrixXd cov = precision.inverse();
    const Eigen::LLT<Eigen::MatrixXd> llt(cov);
    REQUIRE(llt.info() == Eigen::Success);
    const Eigen::MatrixXd l = llt.matrixL();
    Rng rng(seed);
    std::vector<StackedWindow> windows;
    windows.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        Eigen::VectorXd eps(precision.rows());
        for (int j = 0; j < eps.size(); ++j) eps(j) = rng.normal();
        windows.push_back({l * eps, i});
    }
    return windows;
}

// Symmetric PD block-Toeplitz 4x4 precision (m=2, w=2).
Eigen::MatrixXd toy_precision() {
    Eigen::Matrix2d a0, a1;
    a0 << 2.0, 0.4, 0.4, 1.6;
    a1 << 0.35, 0.15, 0.05, 0.25;
    Eigen::MatrixXd theta(4, 4);
    theta.block<2, 2>(0, 0) = a0;
    theta.block<2, 2>(0, 2) = a1;
    theta.block<2, 2>(2, 0) = a1.transpose();
    theta.block<2, 2>(2, 2) = a0;
    return theta;
}

bool is_block_toeplitz_exact(const Eigen::MatrixXd& theta, int m) {
    const int w = static_cast<int>(theta.rows()) / m;
    for (int o = 0; o < w; ++o) {
        for (int r = 1; r + o < w; ++r) {
            for (int a = 0; a < m; ++a) {
                for (int b = 0; b < m; ++b) {
                    if (theta(r * m + a, (r + o) * m + b) != theta(a, o * m + b)) return false;
                }
            }
        }
    }
    return true;
}

}  // namespace

TEST_CASE("stack_windows counts and exclusion rules") {
    Eigen::MatrixXd values(5, 1);
    values << 1, 2, 3, 4, 5;
    auto day = oracles::make_day(values);

    SUBCASE("full day gives T-w+1 windows") {
        CHECK(stack_windows(day, 2).size() == 4);
    }
    SUBCASE("windows never span masked rows") {
        day.series.mask(2, 0) = false;
        const auto windows = stack_windows(day, 2);
        REQUIRE(windows.size() == 2);
        CHECK(windows[0].origin == 0);
        CHECK(windows[1].origin == 3);
    }
    SUBCASE("w=1 returns the rows themselves") {
        const auto windows = stack_windows(day, 1);
        REQUIRE(windows.size() == 5);
        CHECK(windows[3].x(0) == 4.0);
    }
    SUBCASE("no valid windows errors") {
        day.series.mask.setConstant(false);
        CHECK_THROWS_AS(stack_windows(day, 2), Error);
    }
}

TEST_CASE("gaussian_ll closed forms") {
    SUBCASE("at the mean of a standard bivariate normal") {
        ClusterModel model{Eigen::Matrix2d::Identity(), Eigen::Vector2d::Zero()};
        StackedWindow w{Eigen::Vector2d::Zero(), 0};
        CHECK(gaussian_ll(w, model) == doctest::Approx(-std::log(2.0 * M_PI)).epsilon(1e-12));
    }
    SUBCASE("scalar case theta=2, x-mu=1") {
        ClusterModel model{Eigen::MatrixXd::Constant(1, 1, 2.0), Eigen::VectorXd::Zero(1)};
        StackedWindow w{Eigen::VectorXd::Constant(1, 1.0), 0};
        const double expected = -1.0 + 0.5 * std::log(2.0) - 0.5 * std::log(2.0 * M_PI);
        CHECK(gaussian_ll(w, model) == doctest::Approx(expected).epsilon(1e-12));
    }
    SUBCASE("random 4-dim case matches an independent covariance-side evaluation") {
        const Eigen::MatrixXd theta = toy_precision();
        Rng rng(99);
        Eigen::VectorXd mu(4), x(4);
        for (int i = 0; i < 4; ++i) {
            mu(i) = rng.normal();
            x(i) = rng.normal();
        }
        ClusterModel model{theta, mu};
        // Oracle: density through the covariance matrix.
        const Eigen::MatrixXd cov = theta.inverse();
        const Eigen::LLT<Eigen::MatrixXd> llt(cov);
        const Eigen::VectorXd d = x - mu;
        const Eigen::VectorXd half = llt.matrixL().solve(d);
        double logdet_cov = 0.0;
        for (int i = 0; i < 4; ++i) logdet_cov += 2.0 * std::log(llt.matrixLLT()(i, i));
        const double expected =
            -0.5 * half.squaredNorm() - 0.5 * logdet_cov - 2.0 * std::log(2.0 * M_PI);
        CHECK(gaussian_ll({x, 0}, model) == doctest::Approx(expected).epsilon(1e-9));
    }
    SUBCASE("non-PD theta errors") {
        Eigen::Matrix2d bad;
        bad << 1.0, 2.0, 2.0, 1.0;
        ClusterModel model{bad, Eigen::Vector2d::Zero()};
        CHECK_THROWS_AS(gaussian_ll({Eigen::Vector2d::Zero(), 0}, model), Error);
    }
}

TEST_CASE("assign_dp with beta=0 is the per-row argmax") {
    Rng rng(7);
    Eigen::MatrixXd ll(20, 3);
    for (int i = 0; i < 20; ++i) {
        for (int k = 0; k < 3; ++k) ll(i, k) = rng.normal();
    }
    const auto a = assign_dp(ll, 0.0);
    for (int i = 0; i < 20; ++i) {
        int arg = 0;
        ll.row(i).maxCoeff(&arg);
        CHECK(a.labels[static_cast<std::size_t>(i)] == arg);
    }
}

TEST_CASE("assign_dp objective equals exhaustive enumeration (T=8, K=3)") {
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        Rng rng(seed);
        Eigen::MatrixXd ll(8, 3);
        for (int i = 0; i < 8; ++i) {
            for (int k = 0; k < 3; ++k) ll(i, k) = 3.0 * rng.normal();
        }
        const auto a = assign_dp(ll, 1.0);
        CHECK(a.objective == oracles::brute_force_dp(ll, 1.0));
    }
}

TEST_CASE("huge beta forces the best constant sequence") {
    Rng rng(3);
    Eigen::MatrixXd ll(12, 3);
    for (int i = 0; i < 12; ++i) {
        for (int k = 0; k < 3; ++k) ll(i, k) = rng.normal();
    }
    const auto a = assign_dp(ll, 1e6);
    int best = 0;
    ll.colwise().sum().maxCoeff(&best);
    for (int l : a.labels) CHECK(l == best);
}

TEST_CASE("assign_dp objective never exceeds the pointwise assignment plus beta*T") {
    Rng rng(13);
    Eigen::MatrixXd ll(50, 4);
    for (int i = 0; i < 50; ++i) {
        for (int k = 0; k < 4; ++k) ll(i, k) = rng.normal();
    }
    const double beta = 2.5;
    const auto dp = assign_dp(ll, beta);
    const auto pointwise = assign_dp(ll, 0.0);
    CHECK(dp.objective <= pointwise.objective + beta * 50 + 1e-12);
}

TEST_CASE("toeplitz glasso recovers a known block-Toeplitz precision") {
    const Eigen::MatrixXd truth = toy_precision();
    const auto windows = sample_gaussian_windows(truth, 5000, 21);
    const auto model = fit_toeplitz_glasso(windows, 2, 0.01, 1.0, 1e-6, 2000);
    const double rel = (model.theta - truth).norm() / truth.norm();
    CHECK(rel <= 0.15);
    CHECK(is_block_toeplitz_exact(model.theta, 2));
    CHECK(Eigen::LLT<Eigen::MatrixXd>(model.theta).info() == Eigen::Success);
    CHECK(model.theta.isApprox(model.theta.transpose()));
}

TEST_CASE("a huge l1 weight zeroes every off-diagonal entry") {
    const auto windows = sample_gaussian_windows(toy_precision(), 800, 22);
    const auto model = fit_toeplitz_glasso(windows, 2, 1e3, 1.0, 1e-6, 2000);
    for (int r = 0; r < 4; ++r) {
        for (int c = 0; c < 4; ++c) {
            if (r != c) CHECK(model.theta(r, c) == 0.0);
        }
    }
}

TEST_CASE("glasso output always satisfies the cluster-model invariants") {
    const auto windows = sample_gaussian_windows(toy_precision(), 60, 23);
    const auto model = fit_toeplitz_glasso(windows, 2, 0.11, 1.0, 1e-5, 2000);
    CHECK(is_block_toeplitz_exact(model.theta, 2));
    CHECK(Eigen::LLT<Eigen::MatrixXd>(model.theta).info() == Eigen::Success);
    CHECK(model.mu.size() == 4);
}

namespace {

TiccConfig small_ticc(int k, double beta, std::uint64_t seed = 5) {
    TiccConfig cfg;
    cfg.k = k;
    cfg.window = 5;
    cfg.beta = beta;
    cfg.lambda = 0.11;
    cfg.admm_tol = 1e-5;
    cfg.em_max_iter = 25;
    cfg.min_cluster_size = 5;
    cfg.seed = seed;
    return cfg;
}

int count_switches(const std::vector<std::vector<int>>& days, int missing) {
    int switches = 0;
    for (const auto& labels : days) {
        for (std::size_t i = 0; i + 1 < labels.size(); ++i) {
            if (labels[i] != labels[i + 1] && labels[i] != missing && labels[i + 1] != missing) {
                ++switches;
            }
        }
    }
    return switches;
}

}  // namespace

TEST_CASE("ticc_fit recovers two alternating regimes with >= 0.9 accuracy") {
    const auto data = oracles::two_regime_series(2000, 100, 31);
    const auto day = oracles::make_day(data.values);
    const auto result = ticc_fit({day}, small_ticc(2, 10.0));

    const double acc = oracles::aligned_accuracy(data.labels, result.minute_labels[0], 2,
                                                 result.missing_label);
    CHECK(acc >= 0.9);

    // Objective is non-increasing across EM iterations.
    for (std::size_t i = 0; i + 1 < result.objective_trace.size(); ++i) {
        CHECK(result.objective_trace[i + 1] <= result.objective_trace[i] + 1e-8);
    }
}

TEST_CASE("K=1 gives every non-missing minute the same label") {
    const auto data = oracles::two_regime_series(600, 100, 32);
    auto day = oracles::make_day(data.values);
    day.series.mask(300, 0) = false;  // one hole
    const auto result = ticc_fit({day}, small_ticc(1, 10.0));
    for (int l : result.minute_labels[0]) {
        CHECK((l == 0 || l == result.missing_label));
    }
}

TEST_CASE("label switches are non-increasing in beta") {
    const auto data = oracles::two_regime_series(1500, 75, 33);
    const auto day = oracles::make_day(data.values);
    int prev = std::numeric_limits<int>::max();
    for (double beta : {0.0, 1.0, 10.0, 100.0}) {
        const auto result = ticc_fit({day}, small_ticc(2, beta));
        const int switches = count_switches(result.minute_labels, result.missing_label);
        CHECK(switches <= prev);
        prev = switches;
    }
}

TEST_CASE("minutes inside sentinel runs get the reserved missing label") {
    auto data = oracles::two_regime_series(400, 100, 34);
    auto day = oracles::make_day(data.values);
    for (int i = 150; i < 180; ++i) {
        day.series.mask(i, 0) = false;
        day.series.mask(i, 1) = false;
    }
    const auto result = ticc_fit({day}, small_ticc(2, 10.0));
    const int missing = result.missing_label;
    CHECK(missing == 2);
    for (int i = 150; i < 180; ++i) {
        CHECK(result.minute_labels[0][static_cast<std::size_t>(i)] == missing);
    }
    // The missing label owns no model.
    CHECK(result.models.size() == 2);
}

TEST_CASE("different seeds agree up to a cluster permutation on separated data") {
    const auto data = oracles::two_regime_series(1200, 100, 35);
    const auto day = oracles::make_day(data.values);
    const auto a = ticc_fit({day}, small_ticc(2, 10.0, 5));
    const auto b = ticc_fit({day}, small_ticc(2, 10.0, 99));
    // Compare b's labels against a's as "truth" after the best permutation.
    const double agreement = oracles::aligned_accuracy(a.minute_labels[0], b.minute_labels[0], 2,
                                                       a.missing_label);
    CHECK(agreement >= 0.95);
}
