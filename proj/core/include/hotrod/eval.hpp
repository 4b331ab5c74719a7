#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "hotrod/types.hpp"

namespace hotrod {

enum class SplitCriterion { gini, entropy };

struct RfConfig {
    int n_estimators = 10;
    SplitCriterion criterion = SplitCriterion::gini;
    int max_depth = 4;
    int min_samples_split = 2;
    std::uint64_t seed = 0;
};

// The full hyperparameter grid searched during cross-validation:
// {10,20,30} x {gini,entropy} x {4,5,6} x {2,3,5}.
std::vector<RfConfig> rf_grid();

class RandomForest {
public:
    int predict_row(Eigen::Ref<const Eigen::RowVectorXd> x) const;
    std::vector<int> predict(const Eigen::MatrixXd& x) const;

    struct Node {
        int feature = -1;  // -1 marks a leaf
        double threshold = 0.0;
        int left = -1;
        int right = -1;
        int label = 0;
    };
    struct Tree {
        std::vector<Node> nodes;
    };
    std::vector<Tree> trees;
};

// Bagged trees with sqrt(#features) candidate features per split and
// per-tree RNG streams derived from (seed, tree index), so training is
// deterministic regardless of scheduling.
RandomForest rf_train(const Eigen::MatrixXd& x, const std::vector<int>& y, const RfConfig& cfg);

// Unweighted mean of per-class F1; a class with zero predicted and zero
// true positives contributes 0.
double macro_f1(const std::vector<int>& y_true, const std::vector<int>& y_pred);

// Seeded stratified folds (per-class shuffle, round-robin deal). Throws
// "stratification failed" when any fold misses a class.
std::vector<std::vector<int>> stratified_folds(const std::vector<int>& y, int k,
                                               std::uint64_t seed);

struct CvReport {
    std::vector<double> fold_f1;
    double mean_f1 = 0.0;
    std::vector<RfConfig> best_configs;  // winner of the inner grid search per fold
    std::string feature_set;
};

// Stratified 5-fold cross-validation; each training fold runs an inner
// stratified 3-fold grid search over rf_grid() and refits the winner.
CvReport cross_validate(const Eigen::MatrixXd& x, const std::vector<int>& y, std::uint64_t seed,
                        const std::string& feature_set_tag = {});

}  // namespace hotrod
