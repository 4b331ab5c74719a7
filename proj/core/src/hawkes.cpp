#include "hotrod/hawkes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "hotrod/rng.hpp"

namespace hotrod {

namespace {

constexpr double kSqrt2 = 1.4142135623730950488016887242097;
constexpr double kSqrt2Pi = 2.5066282746310005024157652848110;

double normal_cdf(double x) { return 0.5 * std::erfc(-x / kSqrt2); }

void validate_basis(const BasisSpec& basis) {
    if (basis.count() < 1) fail_config("basis: need at least one center");
    if (basis.sigma <= 0) fail_config("basis: sigma must be > 0");
    double prev = -1.0;
    for (double c : basis.centers) {
        if (c < 0 || c <= prev) fail_config("basis: centers must be non-negative and increasing");
        prev = c;
    }
}

void validate_model(const HawkesModel& model) {
    validate_basis(model.basis);
    const int u = model.num_types();
    if (u < 1) fail_input("hawkes model: no event types");
    if (static_cast<int>(model.coeffs.size()) != model.basis.count()) {
        fail_input("hawkes model: coefficient count does not match basis");
    }
    if ((model.base.array() < 0).any()) fail_input("hawkes model: negative base intensity");
    for (const auto& a : model.coeffs) {
        if (a.rows() != u || a.cols() != u) fail_input("hawkes model: coefficient shape");
        if ((a.array() < 0).any()) fail_input("hawkes model: negative coefficient");
    }
}

}  // namespace

EventTypeMap::EventTypeMap(int num_clusters) : clusters_(num_clusters) {
    if (num_clusters < 2) fail_config("EventTypeMap: need at least 2 clusters");
}

int EventTypeMap::type_of(int from, int to) const {
    if (from < 0 || to < 0 || from >= clusters_ || to >= clusters_ || from == to) return -1;
    // Lexicographic over ordered pairs with the diagonal removed.
    return from * (clusters_ - 1) + (to < from ? to : to - 1);
}

std::pair<int, int> EventTypeMap::pair_of(int type) const {
    if (type < 0 || type >= num_types()) fail_input("EventTypeMap: type out of range");
    const int from = type / (clusters_ - 1);
    int to = type % (clusters_ - 1);
    if (to >= from) ++to;
    return {from, to};
}

double BasisSpec::eval(int m, double tau) const {
    if (tau < 0) return 0.0;
    const double c = centers[static_cast<std::size_t>(m)];
    const double zn = (tau - c) / sigma;
    return std::exp(-0.5 * zn * zn) / (sigma * kSqrt2Pi * normal_cdf(c / sigma));
}

double BasisSpec::integral(int m, double tau) const {
    if (tau <= 0) return 0.0;
    const double c = centers[static_cast<std::size_t>(m)];
    return (normal_cdf((tau - c) / sigma) - normal_cdf(-c / sigma)) / normal_cdf(c / sigma);
}

double BasisSpec::cutoff() const {
    return centers.empty() ? 0.0 : centers.back() + 15.0 * sigma;
}

EventSequence extract_events(std::span<const int> minute_labels, const EventTypeMap& map,
                             int missing_label) {
    EventSequence seq;
    seq.horizon = static_cast<double>(minute_labels.size());
    for (std::size_t i = 0; i + 1 < minute_labels.size(); ++i) {
        const int from = minute_labels[i];
        const int to = minute_labels[i + 1];
        if (from == to || from == missing_label || to == missing_label) continue;
        const int type = map.type_of(from, to);
        if (type < 0) fail_input("extract_events: label outside the event-type map");
        seq.events.push_back({static_cast<double>(i + 1), type});
    }
    return seq;
}

double intensity(const HawkesModel& model, const EventSequence& seq, double t, int type) {
    const double cut = model.basis.cutoff();
    double lambda = model.base(type);
    for (auto it = seq.events.rbegin(); it != seq.events.rend(); ++it) {
        if (it->t >= t) continue;
        const double dt = t - it->t;
        if (dt > cut) break;  // events are time-sorted; older ones are farther
        for (int m = 0; m < model.basis.count(); ++m) {
            const double a = model.coeffs[static_cast<std::size_t>(m)](type, it->type);
            if (a > 0) lambda += a * model.basis.eval(m, dt);
        }
    }
    return lambda;
}

double compensator(const HawkesModel& model, const EventSequence& seq, double t, int type) {
    double value = model.base(type) * t;
    for (const auto& ev : seq.events) {
        if (ev.t >= t) break;
        for (int m = 0; m < model.basis.count(); ++m) {
            const double a = model.coeffs[static_cast<std::size_t>(m)](type, ev.type);
            if (a > 0) value += a * model.basis.integral(m, t - ev.t);
        }
    }
    return value;
}

double loglik(const HawkesModel& model, const EventSequence& seq) {
    validate_model(model);
    const int u = model.num_types();
    double ll = 0.0;
    for (std::size_t i = 0; i < seq.events.size(); ++i) {
        EventSequence history{seq.horizon, {seq.events.begin(), seq.events.begin() + static_cast<std::ptrdiff_t>(i)}};
        const double lambda = intensity(model, history, seq.events[i].t, seq.events[i].type);
        if (lambda <= 0) return -std::numeric_limits<double>::infinity();
        ll += std::log(lambda);
    }
    for (int type = 0; type < u; ++type) {
        ll -= compensator(model, seq, seq.horizon, type);
    }
    return ll;
}

namespace {

// Everything about a sequence that the EM iterations reuse: the (event,
// earlier event) pairs within kernel reach with their basis values, and each
// event's basis integrals up to the horizon.
struct PreparedSeq {
    std::vector<int> types;
    double horizon = 0.0;
    std::vector<int> pair_begin;   // per event, index into pair_j / kvals
    std::vector<int> pair_j;
    std::vector<double> kvals;     // pair-major, then basis index
    std::vector<double> integrals; // event-major, then basis index
};

PreparedSeq prepare(const EventSequence& seq, const BasisSpec& basis) {
    PreparedSeq p;
    p.horizon = seq.horizon;
    const int n = static_cast<int>(seq.events.size());
    const int m = basis.count();
    const double cut = basis.cutoff();
    p.types.resize(static_cast<std::size_t>(n));
    p.pair_begin.assign(static_cast<std::size_t>(n) + 1, 0);
    p.integrals.resize(static_cast<std::size_t>(n * m));
    double prev_t = -1.0;
    for (int i = 0; i < n; ++i) {
        const auto& ev = seq.events[static_cast<std::size_t>(i)];
        if (ev.t < prev_t) fail_input("event sequence must be time-sorted");
        if (ev.t < 0 || ev.t >= seq.horizon) fail_input("event time outside [0, horizon)");
        prev_t = ev.t;
        p.types[static_cast<std::size_t>(i)] = ev.type;
        for (int b = 0; b < m; ++b) {
            p.integrals[static_cast<std::size_t>(i * m + b)] = basis.integral(b, seq.horizon - ev.t);
        }
        p.pair_begin[static_cast<std::size_t>(i)] = static_cast<int>(p.pair_j.size());
        for (int j = i - 1; j >= 0; --j) {
            const double dt = ev.t - seq.events[static_cast<std::size_t>(j)].t;
            if (dt > cut) break;
            if (dt <= 0) continue;  // only strictly earlier events excite
            p.pair_j.push_back(j);
            for (int b = 0; b < m; ++b) p.kvals.push_back(basis.eval(b, dt));
        }
    }
    p.pair_begin[static_cast<std::size_t>(n)] = static_cast<int>(p.pair_j.size());
    return p;
}

}  // namespace

HawkesFit fit_mle(const std::vector<EventSequence>& sequences, int num_types,
                  const BasisSpec& basis, const HawkesFitConfig& cfg) {
    validate_basis(basis);
    if (sequences.empty()) fail_input("fit_mle: no sequences");
    if (num_types < 1) fail_input("fit_mle: num_types must be >= 1");
    if (cfg.l1 < 0 || cfg.group < 0) fail_config("fit_mle: penalties must be >= 0");

    std::size_t total_events = 0;
    for (const auto& s : sequences) {
        total_events += s.events.size();
        for (const auto& ev : s.events) {
            if (ev.type < 0 || ev.type >= num_types) fail_input("fit_mle: event type out of range");
        }
    }
    if (total_events < 1) fail_input("fit_mle: no events");
    const int u_count = num_types;
    const int m_count = basis.count();

    std::vector<PreparedSeq> prepared;
    prepared.reserve(sequences.size());
    double total_time = 0.0;
    for (const auto& s : sequences) {
        if (s.horizon <= 0) fail_input("fit_mle: non-positive horizon");
        prepared.push_back(prepare(s, basis));
        total_time += s.horizon;
    }

    // D^m(u') = sum over u'-events of the basis integral to the horizon;
    // fixed across iterations.
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(m_count, u_count);
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(u_count);
    for (const auto& p : prepared) {
        for (std::size_t i = 0; i < p.types.size(); ++i) {
            counts(p.types[i]) += 1.0;
            for (int b = 0; b < m_count; ++b) {
                d(b, p.types[i]) += p.integrals[i * static_cast<std::size_t>(m_count) + static_cast<std::size_t>(b)];
            }
        }
    }

    Rng rng(mix_seed(cfg.seed, "hawkes-mle-init"));
    HawkesModel model;
    model.basis = basis;
    model.base.resize(u_count);
    for (int u = 0; u < u_count; ++u) {
        model.base(u) = (counts(u) + 0.5) / total_time * rng.uniform(0.6, 0.9);
    }
    model.coeffs.assign(static_cast<std::size_t>(m_count), Eigen::MatrixXd::Zero(u_count, u_count));
    for (auto& a : model.coeffs) {
        for (int r = 0; r < u_count; ++r) {
            for (int c = 0; c < u_count; ++c) a(r, c) = rng.uniform(0.02, 0.10) / m_count;
        }
    }

    auto penalized_objective = [&](double loglik_sum) {
        double pen = 0.0;
        for (int r = 0; r < u_count; ++r) {
            for (int c = 0; c < u_count; ++c) {
                double norm2 = 0.0;
                for (int b = 0; b < m_count; ++b) {
                    const double a = model.coeffs[static_cast<std::size_t>(b)](r, c);
                    pen += cfg.l1 * a;
                    norm2 += a * a;
                }
                pen += cfg.group * std::sqrt(norm2);
            }
        }
        return loglik_sum - pen;
    };

    HawkesFit fit;
    double prev_obj = -std::numeric_limits<double>::infinity();
    bool converged = false;

    Eigen::VectorXd s0(u_count);
    std::vector<Eigen::MatrixXd> resp(static_cast<std::size_t>(m_count));

    for (int iter = 0; iter < cfg.max_iter; ++iter) {
        s0.setZero();
        for (auto& r : resp) r = Eigen::MatrixXd::Zero(u_count, u_count);
        double loglik_sum = 0.0;

        for (const auto& p : prepared) {
            const int n = static_cast<int>(p.types.size());
            for (int i = 0; i < n; ++i) {
                const int ui = p.types[static_cast<std::size_t>(i)];
                const int begin = p.pair_begin[static_cast<std::size_t>(i)];
                const int end = p.pair_begin[static_cast<std::size_t>(i) + 1];
                double lambda = model.base(ui);
                for (int q = begin; q < end; ++q) {
                    const int uj = p.types[static_cast<std::size_t>(p.pair_j[static_cast<std::size_t>(q)])];
                    for (int b = 0; b < m_count; ++b) {
                        lambda += model.coeffs[static_cast<std::size_t>(b)](ui, uj) *
                                  p.kvals[static_cast<std::size_t>(q) * static_cast<std::size_t>(m_count) + static_cast<std::size_t>(b)];
                    }
                }
                loglik_sum += std::log(lambda);
                const double inv = 1.0 / lambda;
                s0(ui) += model.base(ui) * inv;
                for (int q = begin; q < end; ++q) {
                    const int uj = p.types[static_cast<std::size_t>(p.pair_j[static_cast<std::size_t>(q)])];
                    for (int b = 0; b < m_count; ++b) {
                        const double contrib = model.coeffs[static_cast<std::size_t>(b)](ui, uj) *
                                               p.kvals[static_cast<std::size_t>(q) * static_cast<std::size_t>(m_count) + static_cast<std::size_t>(b)];
                        resp[static_cast<std::size_t>(b)](ui, uj) += contrib * inv;
                    }
                }
            }
            // Compensator: base over the horizon plus every event's total
            // outgoing excitation mass.
            for (int un = 0; un < u_count; ++un) loglik_sum -= model.base(un) * p.horizon;
            for (int i = 0; i < n; ++i) {
                const int uj = p.types[static_cast<std::size_t>(i)];
                for (int b = 0; b < m_count; ++b) {
                    double colsum = 0.0;
                    for (int un = 0; un < u_count; ++un) colsum += model.coeffs[static_cast<std::size_t>(b)](un, uj);
                    loglik_sum -= colsum * p.integrals[static_cast<std::size_t>(i) * static_cast<std::size_t>(m_count) + static_cast<std::size_t>(b)];
                }
            }
        }

        const double obj = penalized_objective(loglik_sum);
        fit.objective_trace.push_back(obj);
        fit.iterations = iter + 1;
        if (iter > 0 && std::abs(obj - prev_obj) <= cfg.tol * (std::abs(prev_obj) + 1.0)) {
            converged = true;
            break;
        }
        prev_obj = obj;

        // M step: closed forms from the responsibilities.
        for (int un = 0; un < u_count; ++un) model.base(un) = s0(un) / total_time;
        for (int r = 0; r < u_count; ++r) {
            for (int c = 0; c < u_count; ++c) {
                double norm2 = 0.0;
                for (int b = 0; b < m_count; ++b) {
                    const double a = model.coeffs[static_cast<std::size_t>(b)](r, c);
                    norm2 += a * a;
                }
                const double gnorm = std::sqrt(norm2);
                const double g = cfg.group > 0 ? cfg.group / std::max(gnorm, 1e-12) : 0.0;
                for (int b = 0; b < m_count; ++b) {
                    const double rs = resp[static_cast<std::size_t>(b)](r, c);
                    const double dp = d(b, c) + cfg.l1;
                    double a_new = 0.0;
                    if (rs > 0.0) {
                        a_new = g > 0.0
                                    ? (-dp + std::sqrt(dp * dp + 4.0 * g * rs)) / (2.0 * g)
                                    : rs / dp;
                    }
                    model.coeffs[static_cast<std::size_t>(b)](r, c) = a_new;
                }
            }
        }
    }

    if (!converged) {
        std::string tail;
        const std::size_t n = fit.objective_trace.size();
        for (std::size_t i = n > 5 ? n - 5 : 0; i < n; ++i) {
            tail += (tail.empty() ? "" : ", ") + std::to_string(fit.objective_trace[i]);
        }
        fail_numeric("fit_mle: no convergence after " + std::to_string(cfg.max_iter) +
                     " iterations (objective tail: " + tail + ")");
    }
    fit.model = std::move(model);
    return fit;
}

InfectivityMatrix infectivity(const HawkesModel& model) {
    const int u = model.num_types();
    InfectivityMatrix out;
    out.a = Eigen::MatrixXd::Zero(u, u);
    for (const auto& a : model.coeffs) out.a += a;
    return out;
}

GrangerGraph granger_graph(const InfectivityMatrix& a, double epsilon) {
    if (epsilon < 0) fail_config("granger_graph: epsilon must be >= 0");
    GrangerGraph g;
    g.num_types = static_cast<int>(a.a.rows());
    for (int target = 0; target < a.a.rows(); ++target) {
        for (int source = 0; source < a.a.cols(); ++source) {
            if (a.a(target, source) > epsilon) {
                g.edges.push_back({source, target, a.a(target, source)});
            }
        }
    }
    return g;
}

EventSequence simulate(const HawkesModel& model, double horizon, std::uint64_t seed) {
    validate_model(model);
    if (horizon <= 0) fail_input("simulate: horizon must be > 0");

    const Eigen::MatrixXd a = infectivity(model).a;
    if (a.cwiseAbs().sum() > 0) {
        const Eigen::VectorXcd ev = Eigen::EigenSolver<Eigen::MatrixXd>(a, false).eigenvalues();
        double radius = 0.0;
        for (int i = 0; i < ev.size(); ++i) radius = std::max(radius, std::abs(ev(i)));
        if (radius >= 1.0) fail_input("non-stationary model: spectral radius " +
                                      std::to_string(radius));
    }

    const int u_count = model.num_types();
    const int m_count = model.basis.count();
    const double cut = model.basis.cutoff();

    // Peak kernel values and per-basis column sums for the forward bound.
    std::vector<double> peak(static_cast<std::size_t>(m_count));
    for (int b = 0; b < m_count; ++b) {
        peak[static_cast<std::size_t>(b)] = model.basis.eval(b, model.basis.centers[static_cast<std::size_t>(b)]);
    }
    Eigen::MatrixXd colsum(m_count, u_count);
    for (int b = 0; b < m_count; ++b) {
        for (int c = 0; c < u_count; ++c) colsum(b, c) = model.coeffs[static_cast<std::size_t>(b)].col(c).sum();
    }
    const double base_total = model.base.sum();

    Rng rng(mix_seed(seed, "ogata"));
    EventSequence seq;
    seq.horizon = horizon;
    double t = 0.0;
    long proposals = 0;
    while (true) {
        if (++proposals > 20000000L || seq.events.size() > 2000000) {
            fail_numeric("simulate: runaway intensity");
        }
        // Upper bound for all s >= t: each kernel is capped by its future
        // maximum (the peak if still ahead, else the decaying tail value).
        double bound = base_total;
        for (auto it = seq.events.rbegin(); it != seq.events.rend(); ++it) {
            const double dt = t - it->t;
            if (dt > cut) break;
            for (int b = 0; b < m_count; ++b) {
                const double c = model.basis.centers[static_cast<std::size_t>(b)];
                const double kmax = dt < c ? peak[static_cast<std::size_t>(b)] : model.basis.eval(b, dt);
                bound += colsum(b, it->type) * kmax;
            }
        }
        if (bound <= 0) break;

        t += rng.exponential(bound);
        if (t >= horizon) break;

        Eigen::VectorXd lambda = model.base;
        for (auto it = seq.events.rbegin(); it != seq.events.rend(); ++it) {
            const double dt = t - it->t;
            if (dt > cut) break;
            for (int b = 0; b < m_count; ++b) {
                const double kv = model.basis.eval(b, dt);
                if (kv <= 0) continue;
                for (int un = 0; un < u_count; ++un) {
                    lambda(un) += model.coeffs[static_cast<std::size_t>(b)](un, it->type) * kv;
                }
            }
        }
        const double total = lambda.sum();
        if (rng.uniform() * bound > total) continue;  // thinned

        double pick = rng.uniform() * total;
        int type = u_count - 1;
        for (int un = 0; un < u_count; ++un) {
            pick -= lambda(un);
            if (pick <= 0.0) {
                type = un;
                break;
            }
        }
        seq.events.push_back({t, type});
    }
    return seq;
}

}  // namespace hotrod
