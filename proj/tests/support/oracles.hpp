// Independent reference implementations used as test oracles. Everything in
// here deliberately avoids the library's own computation paths.
#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "hotrod/hawkes.hpp"
#include "hotrod/rng.hpp"
#include "hotrod/timeline.hpp"

namespace oracles {

// Adaptive Simpson quadrature.
inline double simpson(const std::function<double(double)>& f, double a, double b, double fa,
                      double fm, double fb, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if (depth <= 0 || std::abs(left + right - whole) < 15.0 * tol) {
        return left + right + (left + right - whole) / 15.0;
    }
    return simpson(f, a, m, fa, flm, fm, tol / 2.0, depth - 1) +
           simpson(f, m, b, fm, frm, fb, tol / 2.0, depth - 1);
}

inline double integrate(const std::function<double(double)>& f, double a, double b,
                        double tol = 1e-10, int depth = 40) {
    const double m = 0.5 * (a + b);
    return simpson(f, a, b, f(a), f(m), f(b), tol, depth);
}

// Piecewise integration with splits at the event times, where the intensity
// has kinks.
inline double integrate_piecewise(const std::function<double(double)>& f, double a, double b,
                                  std::vector<double> splits, double tol = 1e-9) {
    splits.push_back(a);
    splits.push_back(b);
    std::sort(splits.begin(), splits.end());
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < splits.size(); ++i) {
        const double lo = std::max(a, splits[i]);
        const double hi = std::min(b, splits[i + 1]);
        if (hi > lo + 1e-12) total += integrate(f, lo, hi, tol / static_cast<double>(splits.size()));
    }
    return total;
}

// Exhaustive minimum of the switching-penalty objective over all K^T label
// sequences, evaluated with the same formula order as the implementation.
inline double brute_force_dp(const Eigen::MatrixXd& ll, double beta) {
    const int t = static_cast<int>(ll.rows());
    const int k = static_cast<int>(ll.cols());
    std::vector<int> labels(static_cast<std::size_t>(t), 0);
    double best = std::numeric_limits<double>::infinity();
    while (true) {
        double obj = 0.0;
        for (int i = 0; i < t; ++i) obj -= ll(i, labels[static_cast<std::size_t>(i)]);
        int switches = 0;
        for (int i = 0; i + 1 < t; ++i) {
            switches += labels[static_cast<std::size_t>(i)] != labels[static_cast<std::size_t>(i) + 1];
        }
        obj += beta * switches;
        best = std::min(best, obj);
        int pos = t - 1;
        while (pos >= 0 && labels[static_cast<std::size_t>(pos)] == k - 1) {
            labels[static_cast<std::size_t>(pos)] = 0;
            --pos;
        }
        if (pos < 0) break;
        ++labels[static_cast<std::size_t>(pos)];
    }
    return best;
}

// Best label-permutation accuracy (truth vs predicted), ignoring positions
// where the prediction carries `ignore`.
inline double aligned_accuracy(const std::vector<int>& truth, const std::vector<int>& pred, int k,
                               int ignore) {
    std::vector<int> perm(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) perm[static_cast<std::size_t>(i)] = i;
    double best = 0.0;
    std::sort(perm.begin(), perm.end());
    do {
        int hits = 0, total = 0;
        for (std::size_t i = 0; i < truth.size(); ++i) {
            if (pred[i] == ignore) continue;
            ++total;
            hits += perm[static_cast<std::size_t>(pred[i])] == truth[i];
        }
        if (total > 0) best = std::max(best, static_cast<double>(hits) / total);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

// Kolmogorov-Smirnov against Exp(1): statistic and asymptotic p-value.
inline double ks_stat_exp1(std::vector<double> x) {
    std::sort(x.begin(), x.end());
    const double n = static_cast<double>(x.size());
    double d = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double cdf = 1.0 - std::exp(-x[i]);
        d = std::max(d, std::abs(cdf - static_cast<double>(i) / n));
        d = std::max(d, std::abs(static_cast<double>(i + 1) / n - cdf));
    }
    return d;
}

inline double ks_pvalue(double d, std::size_t n) {
    const double sn = std::sqrt(static_cast<double>(n));
    const double lambda = (sn + 0.12 + 0.11 / sn) * d;
    double p = 0.0;
    for (int k = 1; k <= 100; ++k) {
        p += 2.0 * (k % 2 == 1 ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lambda * lambda);
    }
    return std::clamp(p, 0.0, 1.0);
}

// AR(1) series with N(0, sigma^2) innovations.
inline std::vector<double> ar1_series(int n, double phi, double sigma, std::uint64_t seed,
                                      double mean = 0.0) {
    hotrod::Rng rng(seed);
    std::vector<double> y(static_cast<std::size_t>(n));
    double x = 0.0;
    for (int i = 0; i < n; ++i) {
        x = phi * x + sigma * rng.normal();
        y[static_cast<std::size_t>(i)] = mean + x;
    }
    return y;
}

// The 2-type reference model used across the point-process tests:
// infectivity [[0.3, 0.5], [0.0, 0.2]], base [0.02, 0.01] per minute,
// spread over the default basis.
inline hotrod::HawkesModel reference_model() {
    hotrod::HawkesModel model;
    model.basis.centers = {5.0, 20.0, 60.0};
    model.basis.sigma = 10.0;
    model.base = Eigen::Vector2d(0.02, 0.01);
    Eigen::Matrix2d a;
    a << 0.3, 0.5, 0.0, 0.2;
    const double weights[3] = {0.5, 0.3, 0.2};
    for (int m = 0; m < 3; ++m) model.coeffs.push_back(a * weights[m]);
    return model;
}

inline hotrod::HawkesModel poisson_model() {
    hotrod::HawkesModel model = reference_model();
    for (auto& c : model.coeffs) c.setZero();
    return model;
}

// A day segment wrapping a fully-observed series; convenience for unit tests.
inline hotrod::DaySegment make_day(const Eigen::MatrixXd& values,
                                   hotrod::DayKind kind = hotrod::DayKind::workday) {
    hotrod::DaySegment day;
    day.participant_id = "T001";
    day.kind = kind;
    day.begin = 0;
    day.end = 60 * values.rows();
    day.series.start = 0;
    for (int c = 0; c < values.cols(); ++c) day.series.channels.push_back("ch" + std::to_string(c));
    day.series.values = values;
    day.series.mask = hotrod::BoolArray::Constant(values.rows(), values.cols(), true);
    return day;
}

// Two-regime VAR(1) generator for the clustering tests; labels alternate in
// fixed-length segments.
struct TwoRegimeData {
    Eigen::MatrixXd values;      // T x 2
    std::vector<int> labels;     // ground truth per minute
};

inline TwoRegimeData two_regime_series(int minutes, int segment, std::uint64_t seed) {
    hotrod::Rng rng(seed);
    Eigen::Matrix2d phi0, phi1, noise0, noise1;
    phi0 << 0.7, 0.2, 0.2, 0.6;       // regime 0: positively coupled, slow
    noise0 << 1.0, 0.0, 0.8, 0.6;
    phi1 << 0.1, -0.6, -0.6, 0.1;     // regime 1: anti-coupled, fast
    noise1 << 1.0, 0.0, -0.8, 0.6;
    TwoRegimeData data;
    data.values.resize(minutes, 2);
    data.labels.resize(static_cast<std::size_t>(minutes));
    Eigen::Vector2d x = Eigen::Vector2d::Zero();
    for (int i = 0; i < minutes; ++i) {
        const int regime = (i / segment) % 2;
        const Eigen::Matrix2d& phi = regime == 0 ? phi0 : phi1;
        const Eigen::Matrix2d& ns = regime == 0 ? noise0 : noise1;
        const Eigen::Vector2d eps(rng.normal(), rng.normal());
        x = phi * x + ns * eps;
        data.values.row(i) = x.transpose();
        data.labels[static_cast<std::size_t>(i)] = regime;
    }
    return data;
}

}  // namespace oracles
