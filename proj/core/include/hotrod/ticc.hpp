#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

#include "hotrod/timeline.hpp"

namespace hotrod {

// w consecutive fully-observed minutes flattened into one vector of length
// m*w (channel-major within each minute: row i contributes entries
// [i*m, (i+1)*m)).
struct StackedWindow {
    Eigen::VectorXd x;
    int origin = 0;  // row index of the first minute
};

// One cluster: block-Toeplitz Gaussian precision and empirical mean over
// stacked windows.
struct ClusterModel {
    Eigen::MatrixXd theta;  // (m*w) x (m*w), symmetric PD, block-Toeplitz
    Eigen::VectorXd mu;
};

struct TiccConfig {
    int k = 3;
    int window = 5;
    double beta = 10.0;    // switching penalty
    double lambda = 0.11;  // off-diagonal l1 weight
    double admm_rho = 1.0;
    int admm_max_iter = 1000;
    double admm_tol = 1e-6;
    int em_max_iter = 30;
    int min_cluster_size = 5;
    std::uint64_t seed = 0;
};

struct Assignment {
    std::vector<int> labels;  // per window, in [0, K)
    double objective = 0.0;
};

// Windows at every origin whose w rows are all fully observed. Throws when
// no valid window exists.
std::vector<StackedWindow> stack_windows(const DaySegment& day, int window);

// Gaussian log-density of a stacked window under a cluster model.
double gaussian_ll(const StackedWindow& window, const ClusterModel& model);

// Minimizes sum_i(-ll[i, k_i]) + beta * #{label switches} over label
// sequences by dynamic programming. Ties break toward the lower cluster
// index. ll is T x K.
Assignment assign_dp(const Eigen::MatrixXd& ll, double beta);

// Block-Toeplitz-constrained graphical lasso via ADMM: minimize
// -logdet(Theta) + tr(S Theta) + lambda * ||Theta||_1,offdiag subject to the
// block-Toeplitz structure (equal-offset m x m blocks tied). Throws with the
// final residuals if ADMM fails to converge.
ClusterModel fit_toeplitz_glasso(std::span<const StackedWindow> windows, int num_channels,
                                 double lambda, double rho, double tol, int max_iter);

struct TiccResult {
    std::vector<ClusterModel> models;           // size K
    std::vector<Assignment> window_assignments; // per day, over that day's windows
    std::vector<std::vector<int>> minute_labels; // per day, length T, values in [0, K]
    int missing_label = 0;                      // always K
    std::vector<double> objective_trace;        // penalized objective after each EM pass
};

// EM alternation between per-cluster Toeplitz graphical lasso fits and
// DP assignment, from a seeded k-means++ start. Minutes not covered by a
// valid window (sentinel runs and the trailing w-1 rows) receive the
// reserved missing label K, which never owns a model.
TiccResult ticc_fit(const std::vector<DaySegment>& days, const TiccConfig& cfg);

}  // namespace hotrod
