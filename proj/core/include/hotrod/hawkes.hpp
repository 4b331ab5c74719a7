#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "hotrod/types.hpp"

namespace hotrod {

// Bijective mapping between ordered pairs of distinct non-missing clusters
// (from -> to) and event-type ids 0..U-1, U = C*(C-1), enumerated
// lexicographically by (from, to).
class EventTypeMap {
public:
    explicit EventTypeMap(int num_clusters);

    int num_clusters() const { return clusters_; }
    int num_types() const { return clusters_ * (clusters_ - 1); }
    int type_of(int from, int to) const;               // -1 when from == to or out of range
    std::pair<int, int> pair_of(int type) const;

private:
    int clusters_;
};

struct Event {
    double t = 0.0;  // minutes within [0, horizon)
    int type = 0;
};

struct EventSequence {
    double horizon = 0.0;  // minutes
    std::vector<Event> events;  // time-sorted
};

// Gaussian bumps k_m centered at centers[m] with common bandwidth sigma,
// each normalized to unit integral over [0, inf).
struct BasisSpec {
    std::vector<double> centers;  // minutes, strictly increasing, >= 0
    double sigma = 10.0;

    int count() const { return static_cast<int>(centers.size()); }
    double eval(int m, double tau) const;      // k_m(tau), 0 for tau < 0
    double integral(int m, double tau) const;  // \int_0^tau k_m
    // Lags beyond this contribute less than ~1e-49 and are skipped.
    double cutoff() const;
};

struct HawkesModel {
    Eigen::VectorXd base;                 // mu_u >= 0, size U
    std::vector<Eigen::MatrixXd> coeffs;  // per basis m: U x U, (u, u') = a^m_{uu'} >= 0
    BasisSpec basis;

    int num_types() const { return static_cast<int>(base.size()); }
};

struct InfectivityMatrix {
    Eigen::MatrixXd a;  // U x U, A_{uu'} = sum_m a^m_{uu'}
};

struct GrangerGraph {
    int num_types = 0;
    // (source u', target u, weight A_{uu'}); present iff weight > epsilon.
    struct Edge {
        int from = 0;
        int to = 0;
        double weight = 0.0;
    };
    std::vector<Edge> edges;
};

struct HawkesFitConfig {
    double l1 = 0.01;
    double group = 0.05;  // group lasso across bases per (u, u')
    int max_iter = 500;
    double tol = 1e-6;
    std::uint64_t seed = 0;
};

struct HawkesFit {
    HawkesModel model;
    std::vector<double> objective_trace;  // penalized log-likelihood per iteration
    int iterations = 0;
};

// Emits an event at t = i+1 for every consecutive label change with both
// sides non-missing; transitions touching the missing label are dropped.
EventSequence extract_events(std::span<const int> minute_labels, const EventTypeMap& map,
                             int missing_label);

// lambda_u(t) given the history of `seq` strictly before t.
double intensity(const HawkesModel& model, const EventSequence& seq, double t, int type);

// Point-process log-likelihood; the compensator integral is closed-form via
// Gaussian CDFs. Returns -inf when some event has zero intensity.
double loglik(const HawkesModel& model, const EventSequence& seq);

// Penalized MLE by EM (minorize-maximize): every event's mass is split
// between the base rate and each (past event, basis) pair, followed by
// closed-form updates shrunk by the l1 and group penalties. The penalized
// objective is non-decreasing across iterations. num_types fixes U even when
// the training sequences do not exhibit every type.
HawkesFit fit_mle(const std::vector<EventSequence>& sequences, int num_types,
                  const BasisSpec& basis, const HawkesFitConfig& cfg);

InfectivityMatrix infectivity(const HawkesModel& model);

GrangerGraph granger_graph(const InfectivityMatrix& a, double epsilon);

// Exact Ogata-thinning sample, deterministic given the seed. Throws for
// non-stationary models (spectral radius of the infectivity >= 1).
EventSequence simulate(const HawkesModel& model, double horizon, std::uint64_t seed);

// Compensator Lambda_u(t) = \int_0^t lambda_u; used by the time-rescaling
// diagnostics and tests.
double compensator(const HawkesModel& model, const EventSequence& seq, double t, int type);

}  // namespace hotrod
