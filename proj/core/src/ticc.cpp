#include "hotrod/ticc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "hotrod/rng.hpp"

namespace hotrod {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

// Ties every entry of a symmetric (m*w)x(m*w) matrix to its block-Toeplitz
// group: block offset o in [0, w), position (a, b) within the m x m block,
// with the transposed entries of offset -o in the same group.
class ToeplitzGroups {
public:
    ToeplitzGroups(int m, int w) : m_(m), w_(w) {}

    template <typename Fn>
    void for_each_group(Fn&& fn) const {
        for (int o = 0; o < w_; ++o) {
            for (int a = 0; a < m_; ++a) {
                for (int b = 0; b < m_; ++b) {
                    if (o == 0 && b < a) continue;  // symmetric twin handled with (a, b)
                    fn(o, a, b);
                }
            }
        }
    }

    // Members of group (o, a, b): entries (r*m + a, (r+o)*m + b) for every
    // block row r; symmetry adds their transposes.
    template <typename Fn>
    void for_each_member(int o, int a, int b, Fn&& fn) const {
        for (int r = 0; r + o < w_; ++r) {
            fn(r * m_ + a, (r + o) * m_ + b);
        }
    }

    bool is_diagonal(int o, int a, int b) const { return o == 0 && a == b; }

    int m_, w_;
};

// Exact prox of the tied-and-penalized Frobenius projection: average each
// group, then soft-threshold the off-diagonal groups.
Eigen::MatrixXd toeplitz_prox(const Eigen::MatrixXd& v, int m, int w, double shrink) {
    const int n = m * w;
    Eigen::MatrixXd z = Eigen::MatrixXd::Zero(n, n);
    ToeplitzGroups groups(m, w);
    groups.for_each_group([&](int o, int a, int b) {
        double sum = 0.0;
        int count = 0;
        groups.for_each_member(o, a, b, [&](int r, int c) {
            sum += v(r, c);
            ++count;
            if (r != c) {
                sum += v(c, r);
                ++count;
            }
        });
        double value = sum / count;
        if (!groups.is_diagonal(o, a, b)) {
            value = std::copysign(std::max(std::abs(value) - shrink, 0.0), value);
        }
        groups.for_each_member(o, a, b, [&](int r, int c) {
            z(r, c) = value;
            z(c, r) = value;
        });
    });
    return z;
}

double offdiag_l1(const Eigen::MatrixXd& theta) {
    double s = 0.0;
    for (int r = 0; r < theta.rows(); ++r) {
        for (int c = 0; c < theta.cols(); ++c) {
            if (r != c) s += std::abs(theta(r, c));
        }
    }
    return s;
}

struct CholFactor {
    Eigen::LLT<Eigen::MatrixXd> llt;
    double logdet = 0.0;
};

CholFactor factor(const Eigen::MatrixXd& theta) {
    CholFactor f;
    f.llt.compute(theta);
    if (f.llt.info() != Eigen::Success) {
        fail_numeric("gaussian_ll: precision matrix is not positive definite");
    }
    const auto& l = f.llt.matrixLLT();
    for (int i = 0; i < l.rows(); ++i) f.logdet += 2.0 * std::log(l(i, i));
    return f;
}

double ll_with_factor(const Eigen::VectorXd& x, const Eigen::VectorXd& mu, const CholFactor& f,
                      const Eigen::MatrixXd& theta) {
    const Eigen::VectorXd d = x - mu;
    const double quad = d.dot(theta * d);
    const double dim = static_cast<double>(x.size());
    return -0.5 * quad + 0.5 * f.logdet - 0.5 * dim * kLog2Pi;
}

// Minute labels from window labels: a minute owns the label of the window
// that starts there; minutes without a valid window (sentinel runs and the
// trailing w-1 rows) get the reserved missing label.
std::vector<int> windows_to_minutes(int minutes, int missing_label,
                                    const std::vector<StackedWindow>& windows,
                                    const std::vector<int>& labels) {
    std::vector<int> out(static_cast<std::size_t>(minutes), missing_label);
    for (std::size_t i = 0; i < windows.size(); ++i) {
        out[static_cast<std::size_t>(windows[i].origin)] = labels[i];
    }
    return out;
}

std::vector<StackedWindow> stack_windows_or_empty(const DaySegment& day, int w) {
    const UniformSeries& s = day.series;
    const int t = s.minutes();
    const int m = s.num_channels();
    std::vector<StackedWindow> out;
    if (t < w) return out;
    std::vector<bool> row_ok(static_cast<std::size_t>(t));
    for (int i = 0; i < t; ++i) {
        bool ok = true;
        for (int c = 0; c < m; ++c) ok = ok && s.mask(i, c);
        row_ok[static_cast<std::size_t>(i)] = ok;
    }
    for (int i = 0; i + w <= t; ++i) {
        bool ok = true;
        for (int j = i; j < i + w; ++j) ok = ok && row_ok[static_cast<std::size_t>(j)];
        if (!ok) continue;
        StackedWindow win;
        win.origin = i;
        win.x.resize(m * w);
        for (int j = 0; j < w; ++j) {
            for (int c = 0; c < m; ++c) win.x(j * m + c) = s.values(i + j, c);
        }
        out.push_back(std::move(win));
    }
    return out;
}

}  // namespace

std::vector<StackedWindow> stack_windows(const DaySegment& day, int window) {
    if (window < 1) fail_config("stack_windows: window must be >= 1");
    auto out = stack_windows_or_empty(day, window);
    if (out.empty()) fail_input("stack_windows: no valid windows");
    return out;
}

double gaussian_ll(const StackedWindow& window, const ClusterModel& model) {
    if (window.x.size() != model.mu.size() || model.theta.rows() != model.mu.size()) {
        fail_input("gaussian_ll: dimension mismatch");
    }
    CholFactor f = factor(model.theta);
    return ll_with_factor(window.x, model.mu, f, model.theta);
}

Assignment assign_dp(const Eigen::MatrixXd& ll, double beta) {
    const int t = static_cast<int>(ll.rows());
    const int k = static_cast<int>(ll.cols());
    if (t == 0 || k == 0) fail_input("assign_dp: empty log-likelihood matrix");
    if (!ll.allFinite()) fail_input("assign_dp: non-finite log-likelihood");
    if (beta < 0) fail_config("assign_dp: beta must be >= 0");

    Eigen::MatrixXd cost(t, k);
    Eigen::MatrixXi back(t, k);
    cost.row(0) = -ll.row(0);
    back.row(0).setConstant(-1);
    for (int i = 1; i < t; ++i) {
        for (int c = 0; c < k; ++c) {
            double best = std::numeric_limits<double>::infinity();
            int arg = 0;
            for (int p = 0; p < k; ++p) {
                const double v = cost(i - 1, p) + (p == c ? 0.0 : beta);
                if (v < best) {
                    best = v;
                    arg = p;
                }
            }
            cost(i, c) = best - ll(i, c);
            back(i, c) = arg;
        }
    }

    Assignment out;
    out.labels.resize(static_cast<std::size_t>(t));
    int cur = 0;
    for (int c = 1; c < k; ++c) {
        if (cost(t - 1, c) < cost(t - 1, cur)) cur = c;
    }
    for (int i = t - 1; i >= 0; --i) {
        out.labels[static_cast<std::size_t>(i)] = cur;
        if (i > 0) cur = back(i, cur);
    }

    // Recomputed in label order so the value is bit-identical to a direct
    // evaluation of the objective.
    double obj = 0.0;
    for (int i = 0; i < t; ++i) obj -= ll(i, out.labels[static_cast<std::size_t>(i)]);
    int switches = 0;
    for (int i = 0; i + 1 < t; ++i) {
        switches += out.labels[static_cast<std::size_t>(i)] != out.labels[static_cast<std::size_t>(i) + 1];
    }
    out.objective = obj + beta * switches;
    return out;
}

ClusterModel fit_toeplitz_glasso(std::span<const StackedWindow> windows, int num_channels,
                                 double lambda, double rho, double tol, int max_iter) {
    if (windows.size() < 2) fail_input("fit_toeplitz_glasso: need at least 2 windows");
    if (lambda < 0 || rho <= 0 || tol <= 0) fail_config("fit_toeplitz_glasso: bad parameters");
    const int n = static_cast<int>(windows[0].x.size());
    if (n % num_channels != 0) fail_input("fit_toeplitz_glasso: dimension not divisible by m");
    const int w = n / num_channels;
    const double count = static_cast<double>(windows.size());

    Eigen::VectorXd mu = Eigen::VectorXd::Zero(n);
    for (const auto& win : windows) mu += win.x;
    mu /= count;

    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(n, n);
    for (const auto& win : windows) {
        const Eigen::VectorXd d = win.x - mu;
        s.noalias() += d * d.transpose();
    }
    s /= count;

    Eigen::MatrixXd z = Eigen::MatrixXd::Identity(n, n);
    for (int i = 0; i < n; ++i) z(i, i) = 1.0 / (s(i, i) + lambda + 1e-6);
    Eigen::MatrixXd u = Eigen::MatrixXd::Zero(n, n);
    Eigen::MatrixXd theta(n, n);

    double primal = 0.0, dual = 0.0;
    bool converged = false;
    for (int iter = 0; iter < max_iter; ++iter) {
        // Theta step: eigen-decomposition solve of rho*Theta - Theta^{-1} = R.
        Eigen::MatrixXd r = rho * (z - u) - s;
        r = 0.5 * (r + r.transpose()).eval();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(r);
        if (eig.info() != Eigen::Success) fail_numeric("fit_toeplitz_glasso: eigensolver failed");
        Eigen::VectorXd d = eig.eigenvalues();
        for (int i = 0; i < n; ++i) {
            d(i) = (d(i) + std::sqrt(d(i) * d(i) + 4.0 * rho)) / (2.0 * rho);
        }
        theta = eig.eigenvectors() * d.asDiagonal() * eig.eigenvectors().transpose();

        // Z step: tied-group average plus off-diagonal soft threshold.
        Eigen::MatrixXd z_prev = z;
        z = toeplitz_prox(theta + u, num_channels, w, lambda / rho);
        u += theta - z;

        primal = (theta - z).norm();
        dual = rho * (z - z_prev).norm();
        const double scale = std::max({1.0, theta.norm(), z.norm()});
        if (primal <= tol * scale && dual <= tol * std::max(1.0, rho * u.norm())) {
            converged = true;
            break;
        }
        // Residual balancing keeps the two residuals shrinking together;
        // u is the scaled dual, so it rescales with rho.
        if ((iter + 1) % 10 == 0) {
            if (primal > 10.0 * dual) {
                rho *= 2.0;
                u /= 2.0;
            } else if (dual > 10.0 * primal) {
                rho /= 2.0;
                u *= 2.0;
            }
        }
    }
    if (!converged) {
        fail_numeric("fit_toeplitz_glasso: ADMM did not converge (primal=" +
                     std::to_string(primal) + ", dual=" + std::to_string(dual) + ")");
    }

    // Z carries the exact block-Toeplitz structure; nudge the diagonal until
    // Cholesky succeeds (the shift is shared by every diagonal entry, so the
    // structure survives).
    ClusterModel model{z, mu};
    double bump = 1e-10 * (1.0 + model.theta.diagonal().cwiseAbs().maxCoeff());
    for (int attempt = 0; attempt < 60; ++attempt) {
        Eigen::LLT<Eigen::MatrixXd> llt(model.theta);
        if (llt.info() == Eigen::Success) return model;
        model.theta.diagonal().array() += bump;
        bump *= 2.0;
    }
    fail_numeric("fit_toeplitz_glasso: could not restore positive definiteness");
}

namespace {

// k-means++ seeding followed by Lloyd iterations; used only to initialise
// the EM labels.
std::vector<int> kmeanspp_labels(const std::vector<StackedWindow>& windows, int k, Rng& rng) {
    const int n = static_cast<int>(windows.size());
    std::vector<Eigen::VectorXd> centers;
    centers.reserve(static_cast<std::size_t>(k));
    centers.push_back(windows[static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(n)))].x);
    std::vector<double> d2(static_cast<std::size_t>(n), 0.0);
    while (static_cast<int>(centers.size()) < k) {
        double total = 0.0;
        for (int i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::infinity();
            for (const auto& c : centers) {
                best = std::min(best, (windows[static_cast<std::size_t>(i)].x - c).squaredNorm());
            }
            d2[static_cast<std::size_t>(i)] = best;
            total += best;
        }
        if (total <= 0.0) {
            centers.push_back(windows[static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(n)))].x);
            continue;
        }
        double pick = rng.uniform() * total;
        int chosen = n - 1;
        for (int i = 0; i < n; ++i) {
            pick -= d2[static_cast<std::size_t>(i)];
            if (pick <= 0.0) {
                chosen = i;
                break;
            }
        }
        centers.push_back(windows[static_cast<std::size_t>(chosen)].x);
    }

    std::vector<int> labels(static_cast<std::size_t>(n), 0);
    for (int pass = 0; pass < 25; ++pass) {
        bool changed = false;
        for (int i = 0; i < n; ++i) {
            int best = 0;
            double best_d = std::numeric_limits<double>::infinity();
            for (int c = 0; c < k; ++c) {
                const double d = (windows[static_cast<std::size_t>(i)].x - centers[static_cast<std::size_t>(c)]).squaredNorm();
                if (d < best_d) {
                    best_d = d;
                    best = c;
                }
            }
            if (labels[static_cast<std::size_t>(i)] != best) {
                labels[static_cast<std::size_t>(i)] = best;
                changed = true;
            }
        }
        if (!changed) break;
        for (int c = 0; c < k; ++c) {
            Eigen::VectorXd sum = Eigen::VectorXd::Zero(windows[0].x.size());
            int cnt = 0;
            for (int i = 0; i < n; ++i) {
                if (labels[static_cast<std::size_t>(i)] == c) {
                    sum += windows[static_cast<std::size_t>(i)].x;
                    ++cnt;
                }
            }
            if (cnt > 0) centers[static_cast<std::size_t>(c)] = sum / cnt;
        }
    }
    return labels;
}

}  // namespace

TiccResult ticc_fit(const std::vector<DaySegment>& days, const TiccConfig& cfg) {
    if (cfg.k < 1) fail_config("ticc_fit: k must be >= 1");
    if (cfg.window < 1) fail_config("ticc_fit: window must be >= 1");
    if (cfg.beta < 0 || cfg.lambda < 0) fail_config("ticc_fit: beta and lambda must be >= 0");
    if (days.empty()) fail_input("ticc_fit: no days");
    const int m = days.front().series.num_channels();

    // Per-day windows plus a flat view for global fitting.
    std::vector<std::vector<StackedWindow>> day_windows;
    day_windows.reserve(days.size());
    std::vector<StackedWindow> all;
    for (const auto& day : days) {
        if (day.series.num_channels() != m) fail_input("ticc_fit: channel count differs by day");
        day_windows.push_back(stack_windows_or_empty(day, cfg.window));
        for (const auto& win : day_windows.back()) all.push_back(win);
    }
    const int total = static_cast<int>(all.size());
    const int needed = std::max(2, cfg.min_cluster_size);
    if (total < cfg.k * needed) {
        fail_input("ticc_fit: " + std::to_string(total) + " windows cannot support " +
                   std::to_string(cfg.k) + " clusters of size " + std::to_string(needed));
    }

    Rng rng(mix_seed(cfg.seed, "ticc-init"));
    std::vector<int> labels = kmeanspp_labels(all, cfg.k, rng);

    TiccResult result;
    result.missing_label = cfg.k;
    result.models.assign(static_cast<std::size_t>(cfg.k), ClusterModel{});

    int reseeds = 0;
    std::vector<CholFactor> factors(static_cast<std::size_t>(cfg.k));
    for (int iter = 0; iter < cfg.em_max_iter; ++iter) {
        // M step: per-cluster Toeplitz graphical lasso, reseeding starved
        // clusters from the worst-fit windows.
        for (int c = 0; c < cfg.k; ++c) {
            std::vector<int> members;
            for (int i = 0; i < total; ++i) {
                if (labels[static_cast<std::size_t>(i)] == c) members.push_back(i);
            }
            if (static_cast<int>(members.size()) < needed) {
                if (++reseeds > 3) {
                    fail_numeric("ticc_fit: cluster " + std::to_string(c) +
                                 " starved after 3 reseeds");
                }
                // Worst fit = lowest best log-likelihood under current
                // models; before any model exists, fall back to the windows
                // farthest from the global mean.
                std::vector<std::pair<double, int>> ranked;
                ranked.reserve(static_cast<std::size_t>(total));
                if (iter == 0) {
                    Eigen::VectorXd center = Eigen::VectorXd::Zero(all[0].x.size());
                    for (const auto& win : all) center += win.x;
                    center /= total;
                    for (int i = 0; i < total; ++i) {
                        ranked.emplace_back(-(all[static_cast<std::size_t>(i)].x - center).squaredNorm(), i);
                    }
                } else {
                    for (int i = 0; i < total; ++i) {
                        double best = -std::numeric_limits<double>::infinity();
                        for (int o = 0; o < cfg.k; ++o) {
                            if (o == c || result.models[static_cast<std::size_t>(o)].mu.size() == 0) continue;
                            best = std::max(best, ll_with_factor(all[static_cast<std::size_t>(i)].x,
                                                                 result.models[static_cast<std::size_t>(o)].mu,
                                                                 factors[static_cast<std::size_t>(o)],
                                                                 result.models[static_cast<std::size_t>(o)].theta));
                        }
                        ranked.emplace_back(best, i);
                    }
                }
                std::sort(ranked.begin(), ranked.end());
                members.clear();
                for (int r = 0; r < needed && r < total; ++r) {
                    members.push_back(ranked[static_cast<std::size_t>(r)].second);
                    labels[static_cast<std::size_t>(ranked[static_cast<std::size_t>(r)].second)] = c;
                }
            }
            std::vector<StackedWindow> subset;
            subset.reserve(members.size());
            for (int i : members) subset.push_back(all[static_cast<std::size_t>(i)]);
            result.models[static_cast<std::size_t>(c)] = fit_toeplitz_glasso(
                subset, m, cfg.lambda, cfg.admm_rho, cfg.admm_tol, cfg.admm_max_iter);
            factors[static_cast<std::size_t>(c)] = factor(result.models[static_cast<std::size_t>(c)].theta);
        }

        // E step per day. The per-window cost folds in each cluster's scaled
        // l1 penalty so the alternation minimizes one global objective.
        std::vector<double> penalty(static_cast<std::size_t>(cfg.k));
        for (int c = 0; c < cfg.k; ++c) {
            penalty[static_cast<std::size_t>(c)] =
                0.5 * cfg.lambda * offdiag_l1(result.models[static_cast<std::size_t>(c)].theta);
        }
        std::vector<int> new_labels;
        new_labels.reserve(static_cast<std::size_t>(total));
        result.window_assignments.clear();
        double objective = 0.0;
        for (const auto& windows : day_windows) {
            if (windows.empty()) {
                result.window_assignments.push_back({});
                continue;
            }
            Eigen::MatrixXd ll(static_cast<int>(windows.size()), cfg.k);
            for (std::size_t i = 0; i < windows.size(); ++i) {
                for (int c = 0; c < cfg.k; ++c) {
                    ll(static_cast<int>(i), c) =
                        ll_with_factor(windows[i].x, result.models[static_cast<std::size_t>(c)].mu,
                                       factors[static_cast<std::size_t>(c)],
                                       result.models[static_cast<std::size_t>(c)].theta) -
                        penalty[static_cast<std::size_t>(c)];
                }
            }
            Assignment a = assign_dp(ll, cfg.beta);
            objective += a.objective;
            for (int l : a.labels) new_labels.push_back(l);
            result.window_assignments.push_back(std::move(a));
        }
        result.objective_trace.push_back(objective);

        if (new_labels == labels) break;
        labels = std::move(new_labels);
    }

    for (std::size_t d = 0; d < days.size(); ++d) {
        result.minute_labels.push_back(windows_to_minutes(
            days[d].series.minutes(), result.missing_label, day_windows[d],
            result.window_assignments[d].labels));
    }
    return result;
}

}  // namespace hotrod
