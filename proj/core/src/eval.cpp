#include "hotrod/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "hotrod/rng.hpp"

namespace hotrod {

std::vector<RfConfig> rf_grid() {
    std::vector<RfConfig> grid;
    for (int n : {10, 20, 30}) {
        for (auto crit : {SplitCriterion::gini, SplitCriterion::entropy}) {
            for (int depth : {4, 5, 6}) {
                for (int split : {2, 3, 5}) {
                    grid.push_back({n, crit, depth, split, 0});
                }
            }
        }
    }
    return grid;
}

namespace {

double impurity(int n0, int n1, SplitCriterion crit) {
    const int n = n0 + n1;
    if (n == 0) return 0.0;
    const double p0 = static_cast<double>(n0) / n;
    const double p1 = static_cast<double>(n1) / n;
    if (crit == SplitCriterion::gini) return 1.0 - p0 * p0 - p1 * p1;
    double h = 0.0;
    if (p0 > 0) h -= p0 * std::log2(p0);
    if (p1 > 0) h -= p1 * std::log2(p1);
    return h;
}

struct TreeBuilder {
    const Eigen::MatrixXd& x;
    const std::vector<int>& y;
    const RfConfig& cfg;
    Rng& rng;
    RandomForest::Tree& tree;
    int num_candidates;

    int build(std::vector<int>& rows, int depth) {
        int n1 = 0;
        for (int r : rows) n1 += y[static_cast<std::size_t>(r)];
        const int n0 = static_cast<int>(rows.size()) - n1;
        const int majority = n1 > n0 ? 1 : 0;  // ties fall to class 0

        RandomForest::Node node;
        node.label = majority;
        const bool stop = depth >= cfg.max_depth || static_cast<int>(rows.size()) < cfg.min_samples_split ||
                          n0 == 0 || n1 == 0;
        if (!stop) {
            // sqrt(#features) candidates, drawn without replacement.
            std::vector<int> features(static_cast<std::size_t>(x.cols()));
            std::iota(features.begin(), features.end(), 0);
            for (int i = 0; i < num_candidates; ++i) {
                const auto j = static_cast<std::size_t>(i) +
                               static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(features.size() - static_cast<std::size_t>(i))));
                std::swap(features[static_cast<std::size_t>(i)], features[j]);
            }

            const double parent = impurity(n0, n1, cfg.criterion);
            double best_score = std::numeric_limits<double>::infinity();
            int best_feature = -1;
            double best_threshold = 0.0;
            std::vector<std::pair<double, int>> order;
            for (int ci = 0; ci < num_candidates; ++ci) {
                const int f = features[static_cast<std::size_t>(ci)];
                order.clear();
                for (int r : rows) order.emplace_back(x(r, f), y[static_cast<std::size_t>(r)]);
                std::sort(order.begin(), order.end());
                int left1 = 0;
                for (std::size_t i = 0; i + 1 < order.size(); ++i) {
                    left1 += order[i].second;
                    if (order[i].first == order[i + 1].first) continue;
                    const int left_n = static_cast<int>(i) + 1;
                    const int right_n = static_cast<int>(order.size()) - left_n;
                    const double w_left = static_cast<double>(left_n) / static_cast<double>(order.size());
                    const double score =
                        w_left * impurity(left_n - left1, left1, cfg.criterion) +
                        (1.0 - w_left) * impurity(right_n - (n1 - left1), n1 - left1, cfg.criterion);
                    const double threshold = 0.5 * (order[i].first + order[i + 1].first);
                    if (score < best_score ||
                        (score == best_score &&
                         (f < best_feature || (f == best_feature && threshold < best_threshold)))) {
                        best_score = score;
                        best_feature = f;
                        best_threshold = threshold;
                    }
                }
            }
            if (best_feature >= 0 && best_score < parent - 1e-12) {
                std::vector<int> left_rows, right_rows;
                for (int r : rows) {
                    (x(r, best_feature) <= best_threshold ? left_rows : right_rows).push_back(r);
                }
                if (!left_rows.empty() && !right_rows.empty()) {
                    node.feature = best_feature;
                    node.threshold = best_threshold;
                    const int idx = static_cast<int>(tree.nodes.size());
                    tree.nodes.push_back(node);
                    tree.nodes[static_cast<std::size_t>(idx)].left = build(left_rows, depth + 1);
                    tree.nodes[static_cast<std::size_t>(idx)].right = build(right_rows, depth + 1);
                    return idx;
                }
            }
        }
        const int idx = static_cast<int>(tree.nodes.size());
        tree.nodes.push_back(node);
        return idx;
    }
};

}  // namespace

int RandomForest::predict_row(Eigen::Ref<const Eigen::RowVectorXd> x) const {
    int votes1 = 0;
    for (const auto& tree : trees) {
        int node = 0;
        while (tree.nodes[static_cast<std::size_t>(node)].feature >= 0) {
            const auto& nd = tree.nodes[static_cast<std::size_t>(node)];
            node = x(nd.feature) <= nd.threshold ? nd.left : nd.right;
        }
        votes1 += tree.nodes[static_cast<std::size_t>(node)].label;
    }
    return 2 * votes1 > static_cast<int>(trees.size()) ? 1 : 0;  // ties fall to class 0
}

std::vector<int> RandomForest::predict(const Eigen::MatrixXd& x) const {
    std::vector<int> out(static_cast<std::size_t>(x.rows()));
    for (int i = 0; i < x.rows(); ++i) out[static_cast<std::size_t>(i)] = predict_row(x.row(i));
    return out;
}

RandomForest rf_train(const Eigen::MatrixXd& x, const std::vector<int>& y, const RfConfig& cfg) {
    const int n = static_cast<int>(x.rows());
    if (n < 2 || static_cast<int>(y.size()) != n) fail_input("rf_train: bad training shape");
    if (cfg.n_estimators < 1 || cfg.max_depth < 1 || cfg.min_samples_split < 2) {
        fail_config("rf_train: bad hyperparameters");
    }
    int pos = 0;
    for (int v : y) {
        if (v != 0 && v != 1) fail_input("rf_train: labels must be binary");
        pos += v;
    }
    if (pos == 0 || pos == n) fail_input("rf_train: single-class training labels");

    RandomForest forest;
    forest.trees.resize(static_cast<std::size_t>(cfg.n_estimators));
    const int candidates = std::max(1, static_cast<int>(std::floor(std::sqrt(static_cast<double>(x.cols())))));
    for (int t = 0; t < cfg.n_estimators; ++t) {
        // Per-tree stream: training is reproducible whatever the schedule.
        Rng rng(mix_seed(cfg.seed, static_cast<std::uint64_t>(t) + 0x7f4a7c15));
        std::vector<int> rows(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            rows[static_cast<std::size_t>(i)] = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
        }
        TreeBuilder builder{x, y, cfg, rng, forest.trees[static_cast<std::size_t>(t)], candidates};
        builder.build(rows, 0);
    }
    return forest;
}

double macro_f1(const std::vector<int>& y_true, const std::vector<int>& y_pred) {
    if (y_true.empty() || y_true.size() != y_pred.size()) {
        fail_input("macro_f1: empty or mismatched inputs");
    }
    double sum = 0.0;
    for (int cls : {0, 1}) {
        int tp = 0, fp = 0, fn = 0;
        for (std::size_t i = 0; i < y_true.size(); ++i) {
            const bool t = y_true[i] == cls;
            const bool p = y_pred[i] == cls;
            tp += t && p;
            fp += !t && p;
            fn += t && !p;
        }
        double f1 = 0.0;
        if (2 * tp + fp + fn > 0) f1 = 2.0 * tp / static_cast<double>(2 * tp + fp + fn);
        sum += f1;
    }
    return sum / 2.0;
}

std::vector<std::vector<int>> stratified_folds(const std::vector<int>& y, int k,
                                               std::uint64_t seed) {
    Rng rng(seed);
    std::vector<int> pos, neg;
    for (std::size_t i = 0; i < y.size(); ++i) {
        (y[i] == 1 ? pos : neg).push_back(static_cast<int>(i));
    }
    rng.shuffle(pos);
    rng.shuffle(neg);
    std::vector<std::vector<int>> folds(static_cast<std::size_t>(k));
    int slot = 0;
    for (int i : neg) folds[static_cast<std::size_t>(slot++ % k)].push_back(i);
    for (int i : pos) folds[static_cast<std::size_t>(slot++ % k)].push_back(i);
    for (auto& f : folds) {
        std::sort(f.begin(), f.end());
        int classes[2] = {0, 0};
        for (int i : f) ++classes[y[static_cast<std::size_t>(i)]];
        if (f.empty() || classes[0] == 0 || classes[1] == 0) fail_input("stratification failed");
    }
    return folds;
}

namespace {

Eigen::MatrixXd take_rows(const Eigen::MatrixXd& x, const std::vector<int>& rows) {
    Eigen::MatrixXd out(static_cast<int>(rows.size()), x.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<int>(i)) = x.row(rows[i]);
    return out;
}

std::vector<int> take(const std::vector<int>& y, const std::vector<int>& rows) {
    std::vector<int> out;
    out.reserve(rows.size());
    for (int r : rows) out.push_back(y[static_cast<std::size_t>(r)]);
    return out;
}

}  // namespace

CvReport cross_validate(const Eigen::MatrixXd& x, const std::vector<int>& y, std::uint64_t seed,
                        const std::string& feature_set_tag) {
    const int n = static_cast<int>(x.rows());
    if (n < 10) fail_input("cross_validate: need at least 10 samples");
    if (static_cast<int>(y.size()) != n) fail_input("cross_validate: label length mismatch");

    const auto grid = rf_grid();
    const auto outer = stratified_folds(y, 5, mix_seed(seed, "cv-outer"));

    CvReport report;
    report.feature_set = feature_set_tag;
    for (std::size_t fold = 0; fold < outer.size(); ++fold) {
        std::vector<int> train_rows;
        for (std::size_t f = 0; f < outer.size(); ++f) {
            if (f == fold) continue;
            train_rows.insert(train_rows.end(), outer[f].begin(), outer[f].end());
        }
        std::sort(train_rows.begin(), train_rows.end());
        const Eigen::MatrixXd x_train = take_rows(x, train_rows);
        const std::vector<int> y_train = take(y, train_rows);

        // Inner grid search, stratified 3-fold on the training split.
        const auto inner = stratified_folds(y_train, 3, mix_seed(seed, "cv-inner-" + std::to_string(fold)));
        double best_score = -1.0;
        std::size_t best_cfg = 0;
        for (std::size_t g = 0; g < grid.size(); ++g) {
            double score = 0.0;
            for (std::size_t inf = 0; inf < inner.size(); ++inf) {
                std::vector<int> fit_rows;
                for (std::size_t f = 0; f < inner.size(); ++f) {
                    if (f == inf) continue;
                    fit_rows.insert(fit_rows.end(), inner[f].begin(), inner[f].end());
                }
                std::sort(fit_rows.begin(), fit_rows.end());
                RfConfig cfg = grid[g];
                cfg.seed = mix_seed(seed, "rf-" + std::to_string(fold) + "-" + std::to_string(inf) +
                                              "-" + std::to_string(g));
                RandomForest forest = rf_train(take_rows(x_train, fit_rows), take(y_train, fit_rows), cfg);
                score += macro_f1(take(y_train, inner[inf]),
                                  forest.predict(take_rows(x_train, inner[inf])));
            }
            score /= static_cast<double>(inner.size());
            if (score > best_score) {  // ties keep the earlier grid entry
                best_score = score;
                best_cfg = g;
            }
        }

        RfConfig cfg = grid[best_cfg];
        cfg.seed = mix_seed(seed, "rf-final-" + std::to_string(fold));
        RandomForest forest = rf_train(x_train, y_train, cfg);
        const double f1 = macro_f1(take(y, outer[fold]), forest.predict(take_rows(x, outer[fold])));
        report.fold_f1.push_back(f1);
        report.best_configs.push_back(cfg);
    }
    report.mean_f1 = std::accumulate(report.fold_f1.begin(), report.fold_f1.end(), 0.0) /
                     static_cast<double>(report.fold_f1.size());
    return report;
}

}  // namespace hotrod
