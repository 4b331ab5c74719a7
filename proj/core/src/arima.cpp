#include "hotrod/arima.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

namespace hotrod {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<double> difference(std::vector<double> y, int d) {
    for (int k = 0; k < d; ++k) {
        for (std::size_t i = y.size() - 1; i > 0; --i) y[i] -= y[i - 1];
        y.erase(y.begin());
    }
    return y;
}

// Conditional sum of squares of the ARMA recursion, residuals zeroed before
// index p. The sum skips residuals before sse_from so that models of
// different order can be scored on an identical response set. Returns +inf
// when the recursion leaves the realm of finite math.
double css(const std::vector<double>& w, const double* phi, int p, const double* theta, int q,
           int sse_from, std::vector<double>* resid_out = nullptr) {
    const int n = static_cast<int>(w.size());
    std::vector<double> e(static_cast<std::size_t>(n), 0.0);
    double sse = 0.0;
    for (int t = p; t < n; ++t) {
        double pred = 0.0;
        for (int i = 0; i < p; ++i) pred += phi[i] * w[t - 1 - i];
        for (int j = 0; j < q; ++j) {
            if (t - 1 - j >= 0) pred += theta[j] * e[t - 1 - j];
        }
        e[t] = w[t] - pred;
        if (t >= sse_from) sse += e[t] * e[t];
        if (!std::isfinite(sse)) return kInf;
    }
    if (resid_out) *resid_out = std::move(e);
    return sse;
}

// Least squares via QR; rows of X are regressors for the matching y entry.
Eigen::VectorXd ols(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
    return x.colPivHouseholderQr().solve(y);
}

// Hannan-Rissanen: long-AR residuals stand in for the unobserved shocks.
void hannan_rissanen(const std::vector<double>& w, int p, int q, std::vector<double>& phi,
                     std::vector<double>& theta) {
    const int n = static_cast<int>(w.size());
    phi.assign(static_cast<std::size_t>(p), 0.0);
    theta.assign(static_cast<std::size_t>(q), 0.0);
    if (p + q == 0) return;

    int lar = std::min(n / 3, std::max(8, p + q + 4));
    std::vector<double> eps(static_cast<std::size_t>(n), 0.0);
    if (q > 0 && lar >= 1 && n - lar > lar + 2) {
        Eigen::MatrixXd x(n - lar, lar);
        Eigen::VectorXd y(n - lar);
        for (int t = lar; t < n; ++t) {
            for (int i = 0; i < lar; ++i) x(t - lar, i) = w[t - 1 - i];
            y(t - lar) = w[t];
        }
        Eigen::VectorXd a = ols(x, y);
        for (int t = lar; t < n; ++t) {
            double pred = 0.0;
            for (int i = 0; i < lar; ++i) pred += a(i) * w[t - 1 - i];
            eps[t] = w[t] - pred;
        }
    }

    const int t0 = std::max({p, q, q > 0 ? lar : 0});
    const int rows = n - t0;
    if (rows <= p + q) {
        // Not enough data to regress; fall back to zeros (pure-noise start).
        return;
    }
    Eigen::MatrixXd x(rows, p + q);
    Eigen::VectorXd y(rows);
    for (int t = t0; t < n; ++t) {
        for (int i = 0; i < p; ++i) x(t - t0, i) = w[t - 1 - i];
        for (int j = 0; j < q; ++j) x(t - t0, p + j) = eps[t - 1 - j];
        y(t - t0) = w[t];
    }
    Eigen::VectorXd b = ols(x, y);
    for (int i = 0; i < p; ++i) phi[static_cast<std::size_t>(i)] = b(i);
    for (int j = 0; j < q; ++j) theta[static_cast<std::size_t>(j)] = b(p + j);
}

// Plain Nelder-Mead with a deterministic start simplex and an evaluation
// budget; plenty for the small (p+q <= 10) CSS surfaces seen here.
void nelder_mead(std::vector<double>& x0, const std::function<double(const double*)>& f,
                 int max_evals) {
    const int dim = static_cast<int>(x0.size());
    if (dim == 0 || max_evals <= 0) return;
    int evals = 0;
    auto eval = [&](const std::vector<double>& v) {
        ++evals;
        return f(v.data());
    };

    std::vector<std::vector<double>> simplex(static_cast<std::size_t>(dim) + 1, x0);
    for (int i = 0; i < dim; ++i) {
        simplex[static_cast<std::size_t>(i) + 1][static_cast<std::size_t>(i)] +=
            (x0[static_cast<std::size_t>(i)] != 0.0 ? 0.10 * x0[static_cast<std::size_t>(i)]
                                                    : 0.10);
    }
    std::vector<double> fv(simplex.size());
    for (std::size_t i = 0; i < simplex.size(); ++i) fv[i] = eval(simplex[i]);

    std::vector<std::size_t> order(simplex.size());
    while (evals < max_evals) {
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return fv[a] < fv[b] || (fv[a] == fv[b] && a < b);
        });
        const std::size_t best = order.front(), worst = order.back();
        const std::size_t second_worst = order[order.size() - 2];
        if (std::abs(fv[worst] - fv[best]) <= 1e-12 * (std::abs(fv[best]) + 1e-12)) break;

        std::vector<double> centroid(static_cast<std::size_t>(dim), 0.0);
        for (std::size_t i : order) {
            if (i == worst) continue;
            for (int d = 0; d < dim; ++d)
                centroid[static_cast<std::size_t>(d)] += simplex[i][static_cast<std::size_t>(d)];
        }
        for (double& c : centroid) c /= dim;

        auto blend = [&](double t) {
            std::vector<double> v(static_cast<std::size_t>(dim));
            for (int d = 0; d < dim; ++d) {
                const auto dd = static_cast<std::size_t>(d);
                v[dd] = centroid[dd] + t * (centroid[dd] - simplex[worst][dd]);
            }
            return v;
        };

        auto reflected = blend(1.0);
        double fr = eval(reflected);
        if (fr < fv[best]) {
            auto expanded = blend(2.0);
            double fe = eval(expanded);
            if (fe < fr) {
                simplex[worst] = std::move(expanded);
                fv[worst] = fe;
            } else {
                simplex[worst] = std::move(reflected);
                fv[worst] = fr;
            }
        } else if (fr < fv[second_worst]) {
            simplex[worst] = std::move(reflected);
            fv[worst] = fr;
        } else {
            auto contracted = blend(fr < fv[worst] ? 0.5 : -0.5);
            double fc = eval(contracted);
            if (fc < std::min(fr, fv[worst])) {
                simplex[worst] = std::move(contracted);
                fv[worst] = fc;
            } else {
                for (std::size_t i : order) {
                    if (i == best) continue;
                    for (int d = 0; d < dim; ++d) {
                        const auto dd = static_cast<std::size_t>(d);
                        simplex[i][dd] = 0.5 * (simplex[i][dd] + simplex[best][dd]);
                    }
                    fv[i] = eval(simplex[i]);
                }
            }
        }
    }

    std::size_t best = 0;
    for (std::size_t i = 1; i < simplex.size(); ++i) {
        if (fv[i] < fv[best]) best = i;
    }
    x0 = simplex[best];
}

struct FitScratch {
    std::vector<double> w;
    double mean = 0.0;
    int n_eff = 0;
};

FitScratch prepare(const std::vector<double>& series, const ArimaOrder& order) {
    FitScratch s;
    s.w = difference(series, order.d);
    if (order.d == 0 && !s.w.empty()) {
        s.mean = std::accumulate(s.w.begin(), s.w.end(), 0.0) / static_cast<double>(s.w.size());
        for (double& v : s.w) v -= s.mean;
    }
    s.n_eff = static_cast<int>(s.w.size()) - order.p;
    return s;
}

}  // namespace

namespace {

// condition_levels: number of initial level-space observations excluded from
// the scored residuals. Negative means the model's own minimum (d + p).
ArimaModel fit_arima_impl(const std::vector<double>& series, const ArimaOrder& order,
                          int refine_evals, int condition_levels) {
    if (series.empty()) fail_input("fit_arima: empty series");
    if (order.p < 0 || order.d < 0 || order.q < 0) fail_input("fit_arima: negative order");
    if (condition_levels >= 0 && order.p + order.d > condition_levels) {
        fail_input("fit_arima: order exceeds the conditioning budget");
    }
    FitScratch s = prepare(series, order);
    const int n = static_cast<int>(s.w.size());
    const int sse_from =
        condition_levels < 0 ? order.p : std::max(order.p, condition_levels - order.d);
    const int n_eff = n - sse_from;
    if (n_eff < std::max(4, order.p + order.q + 1)) {
        fail_input("fit_arima: series too short for order (" + std::to_string(order.p) + "," +
                   std::to_string(order.d) + "," + std::to_string(order.q) + ")");
    }

    ArimaModel model;
    model.order = order;
    model.mean = s.mean;
    hannan_rissanen(s.w, order.p, order.q, model.ar, model.ma);

    if (order.p + order.q > 0) {
        std::vector<double> params(model.ar);
        params.insert(params.end(), model.ma.begin(), model.ma.end());
        auto objective = [&](const double* v) {
            return css(s.w, v, order.p, v + order.p, order.q, sse_from);
        };
        nelder_mead(params, objective, refine_evals);
        model.ar.assign(params.begin(), params.begin() + order.p);
        model.ma.assign(params.begin() + order.p, params.end());
    }

    const double sse = css(s.w, model.ar.data(), order.p, model.ma.data(), order.q, sse_from);
    if (!std::isfinite(sse)) fail_numeric("fit_arima: non-finite conditional sum of squares");
    model.sigma2 = std::max(sse / std::max(1, n_eff), 1e-12);
    const double ll = -0.5 * n_eff * (std::log(2.0 * M_PI * model.sigma2) + 1.0);
    const int k = order.p + order.q + (order.d == 0 ? 1 : 0) + 1;
    model.aic = 2.0 * k - 2.0 * ll;
    return model;
}

}  // namespace

ArimaModel fit_arima(const std::vector<double>& series, const ArimaOrder& order,
                     int refine_evals) {
    return fit_arima_impl(series, order, refine_evals, -1);
}

ArimaModel fit_arima_auto(const std::vector<double>& series, int max_p, int max_d, int max_q) {
    if (max_p < 0 || max_d < 0 || max_q < 0) fail_config("fit_arima_auto: negative bounds");
    // AIC values are only comparable when every candidate conditions on the
    // same number of initial observations; the cap keeps at least 8 scored
    // residuals on short series.
    const int n = static_cast<int>(series.size());
    const int condition_levels = std::min(max_p + max_d, std::max(0, n - 8));
    ArimaModel best;
    bool have = false;
    for (int d = 0; d <= max_d; ++d) {
        for (int p = 0; p <= max_p; ++p) {
            for (int q = 0; q <= max_q; ++q) {
                ArimaOrder order{p, d, q};
                ArimaModel m;
                try {
                    // Modest refinement during the search; the winner gets a
                    // thorough pass below.
                    m = fit_arima_impl(series, order, 60, condition_levels);
                } catch (const Error&) {
                    continue;
                }
                if (!have) {
                    best = m;
                    have = true;
                    continue;
                }
                const int sum_new = p + d + q;
                const int sum_old = best.order.p + best.order.d + best.order.q;
                const auto tup_new = std::array<int, 3>{p, d, q};
                const auto tup_old = std::array<int, 3>{best.order.p, best.order.d, best.order.q};
                if (m.aic < best.aic ||
                    (m.aic == best.aic &&
                     (sum_new < sum_old || (sum_new == sum_old && tup_new < tup_old)))) {
                    best = m;
                }
            }
        }
    }
    if (!have) fail_input("fit_arima_auto: no feasible order for series of length " +
                          std::to_string(series.size()));
    return fit_arima(series, best.order, 300);
}

std::vector<double> forecast(const ArimaModel& model, const std::vector<double>& series,
                             int horizon) {
    if (horizon <= 0) return {};
    const int p = model.order.p, d = model.order.d, q = model.order.q;
    std::vector<double> w = difference(series, d);
    if (d == 0) {
        for (double& v : w) v -= model.mean;
    }
    std::vector<double> resid;
    css(w, model.ar.data(), p, model.ma.data(), q, p, &resid);

    std::vector<double> w_ext = w;
    std::vector<double> e_ext = resid;
    std::vector<double> w_pred(static_cast<std::size_t>(horizon));
    const int n = static_cast<int>(w.size());
    for (int h = 0; h < horizon; ++h) {
        double pred = 0.0;
        for (int i = 0; i < p; ++i) {
            const int idx = n + h - 1 - i;
            if (idx >= 0) pred += model.ar[static_cast<std::size_t>(i)] * w_ext[static_cast<std::size_t>(idx)];
        }
        for (int j = 0; j < q; ++j) {
            const int idx = n + h - 1 - j;
            if (idx >= 0 && idx < n) pred += model.ma[static_cast<std::size_t>(j)] * e_ext[static_cast<std::size_t>(idx)];
        }
        w_ext.push_back(pred);
        e_ext.push_back(0.0);
        w_pred[static_cast<std::size_t>(h)] = pred + (d == 0 ? model.mean : 0.0);
    }
    if (d == 0) return w_pred;

    // Undo the differencing: carry the last value of every difference level.
    std::vector<std::vector<double>> levels;
    levels.push_back(series);
    for (int k = 1; k <= d; ++k) levels.push_back(difference(series, k));
    std::vector<double> last(static_cast<std::size_t>(d) + 1);
    for (int k = 0; k <= d; ++k) last[static_cast<std::size_t>(k)] = levels[static_cast<std::size_t>(k)].back();

    std::vector<double> out(static_cast<std::size_t>(horizon));
    for (int h = 0; h < horizon; ++h) {
        last[static_cast<std::size_t>(d)] = w_pred[static_cast<std::size_t>(h)];
        for (int k = d - 1; k >= 0; --k) {
            last[static_cast<std::size_t>(k)] += last[static_cast<std::size_t>(k) + 1];
        }
        out[static_cast<std::size_t>(h)] = last[0];
    }
    return out;
}

}  // namespace hotrod
