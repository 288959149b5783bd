#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <ostream>
#include <vector>

#include "sigverify/errors.hpp"
#include "sigverify/mixture.hpp"
#include "sigverify/random.hpp"

namespace sigverify {

// Annealing schedule and stopping rules for harmony learning. lambda starts
// at lambda_init and decays geometrically to lambda_min; components whose
// weight drops below prune_threshold are discarded after each inner
// convergence. prune_threshold = 0 disables pruning.
struct AnnealConfig {
    int k_init = 32;
    double lambda_init = 1.0;
    double lambda_decay = 0.9;
    double lambda_min = 0.01;
    double prune_threshold = 1e-3;
    int max_outer_iters = 1000;
    int max_inner_iters = 200;
    double tol = 1e-6;
    std::uint64_t seed = 0;
};

inline void validate(const AnnealConfig& cfg) {
    if (cfg.k_init < 1) throw ArgumentError("k_init must be at least 1");
    if (!(cfg.lambda_init > 0.0 && cfg.lambda_init <= 1.0))
        throw ArgumentError("lambda_init must be in (0, 1]");
    if (!(cfg.lambda_min > 0.0 && cfg.lambda_min <= cfg.lambda_init))
        throw ArgumentError("lambda_min must be in (0, lambda_init]");
    if (!(cfg.lambda_decay > 0.0 && cfg.lambda_decay < 1.0))
        throw ArgumentError("lambda_decay must be in (0, 1)");
    if (cfg.prune_threshold < 0.0 || cfg.prune_threshold >= 1.0 / static_cast<double>(cfg.k_init))
        throw ArgumentError("prune_threshold must be in [0, 1/k_init)");
    if (cfg.max_outer_iters < 1 || cfg.max_inner_iters < 1)
        throw ArgumentError("iteration limits must be positive");
    if (cfg.tol < 0.0) throw ArgumentError("tol must be non-negative");
}

// N x k matrix of per-point component responsibilities; each row sums to 1.
using Responsibilities = Eigen::MatrixXd;

struct FitRecord {
    int outer_iter = 0;
    double lambda = 0.0;
    int k = 0;             // surviving components
    double harmony = 0.0;  // objective under the lambda = 1 posterior
    double annealed = 0.0; // tempered objective incl. the entropy term
};

struct FitTrace {
    std::vector<FitRecord> records;
};

inline void write_trace_csv(std::ostream& os, const FitTrace& trace) {
    os << "iteration,lambda,k,L,L_lambda\n";
    char buf[160];
    for (const auto& r : trace.records) {
        std::snprintf(buf, sizeof buf, "%d,%.17g,%d,%.17g,%.17g\n", r.outer_iter, r.lambda, r.k,
                      r.harmony, r.annealed);
        os << buf;
    }
}

// Tempered posterior: row t, column j holds
//   exp((1/lambda)(ln a_j + ln q(u_t|j)) - logsumexp_i(...)),
// computed entirely in the log domain. lambda = 1 is the standard EM
// responsibility; lambda -> 0 approaches hard assignment.
inline Responsibilities posterior(const Eigen::MatrixXd& data, const MixtureModel& model,
                                  double lambda) {
    if (lambda <= 0.0)
        throw ArgumentError("posterior requires lambda > 0");
    if (data.cols() != model.dim())
        throw ArgumentError("data dimension does not match model dimension");
    const PreparedMixture prep(model);
    const auto n = data.rows();
    const auto k = prep.component_count();
    Responsibilities resp(n, k);
    std::vector<double> w;
    for (Eigen::Index t = 0; t < n; ++t) {
        prep.weighted_log_densities(data.row(t).transpose(), w);
        for (auto& v : w) v /= lambda;
        const double lse = log_sum_exp(w);
        for (int j = 0; j < k; ++j) resp(t, j) = std::exp(w[static_cast<std::size_t>(j)] - lse);
    }
    return resp;
}

// Weighted-moment parameter update: new weights are mean responsibilities,
// means are responsibility-weighted data means, covariances are weighted
// outer products about the new means, floored afterwards. A component whose
// responsibility column sums to (numerically) zero keeps its old
// mean/covariance and gets weight 0, leaving it to the pruning step. The
// floor is backstopped at a sliver of the overall data variance so that a
// component collapsing onto coincident points stays factorizable.
inline MixtureModel update_parameters(const Eigen::MatrixXd& data, const Responsibilities& resp,
                                      const MixtureModel& current) {
    const auto n = data.rows();
    const auto dim = data.cols();
    const auto k = static_cast<int>(current.components.size());
    if (n < 1) throw ArgumentError("update needs at least one data point");
    if (resp.rows() != n || resp.cols() != k)
        throw ArgumentError("responsibility shape does not match data/model");
    if (dim != current.dim())
        throw ArgumentError("data dimension does not match model dimension");
    for (Eigen::Index t = 0; t < n; ++t) {
        if (std::abs(resp.row(t).sum() - 1.0) > 1e-9)
            throw ArgumentError("responsibility row " + std::to_string(t) + " does not sum to 1");
    }

    const Eigen::RowVectorXd data_mean = data.colwise().mean();
    const double data_variance =
        (data.rowwise() - data_mean).squaredNorm() / static_cast<double>(n * dim);
    const double floor_backstop = 1e-12 * data_variance;

    MixtureModel next;
    next.components.resize(static_cast<std::size_t>(k));
    for (int j = 0; j < k; ++j) {
        auto& comp = next.components[static_cast<std::size_t>(j)];
        const Eigen::VectorXd r = resp.col(j);
        const double sum_r = r.sum();
        if (!(sum_r > 1e-12)) {
            comp = current.components[static_cast<std::size_t>(j)];
            comp.weight = 0.0;
            continue;
        }
        comp.weight = sum_r / static_cast<double>(n);
        comp.mean = (data.transpose() * r) / sum_r;
        const Eigen::MatrixXd centered = data.rowwise() - comp.mean.transpose();
        Eigen::MatrixXd cov =
            centered.transpose() * (centered.array().colwise() * r.array()).matrix() / sum_r;
        cov = ((cov + cov.transpose()) * 0.5).eval();  // keep exactly symmetric
        apply_covariance_floor(cov, floor_backstop);
        comp.cov = std::move(cov);
    }
    return next;
}

namespace detail {

// Shared accumulation for the harmony objective and its annealed variant.
// For each point: w_j = ln a_j + ln q(u_t|j); the posterior is either the
// lambda = 1 Bayes posterior, the tempered one, or (lambda == 0) the hard
// argmax limit. Returns (sum_t sum_j p_tj w_tj, sum_t entropy_t).
struct HarmonyTerms {
    double weighted = 0.0;
    double entropy = 0.0;
};

inline HarmonyTerms harmony_terms(const Eigen::MatrixXd& data, const PreparedMixture& prep,
                                  double lambda) {
    const auto n = data.rows();
    const auto k = prep.component_count();
    HarmonyTerms acc;
    std::vector<double> w, s;
    for (Eigen::Index t = 0; t < n; ++t) {
        prep.weighted_log_densities(data.row(t).transpose(), w);
        if (lambda == 0.0) {
            int best = 0;
            for (int j = 1; j < k; ++j)
                if (w[static_cast<std::size_t>(j)] > w[static_cast<std::size_t>(best)]) best = j;
            acc.weighted += w[static_cast<std::size_t>(best)];
            continue;  // hard assignment has zero entropy
        }
        s.resize(w.size());
        for (std::size_t j = 0; j < w.size(); ++j) s[j] = w[j] / lambda;
        const double lse = log_sum_exp(s);
        for (int j = 0; j < k; ++j) {
            const double log_p = s[static_cast<std::size_t>(j)] - lse;
            if (log_p == -std::numeric_limits<double>::infinity()) continue;  // 0 ln 0 := 0
            const double p = std::exp(log_p);
            if (p == 0.0) continue;
            acc.weighted += p * w[static_cast<std::size_t>(j)];
            acc.entropy -= p * log_p;
        }
    }
    return acc;
}

}  // namespace detail

// Harmony objective: (1/N) sum_t sum_j p(j|u_t) [ln a_j + ln q(u_t|j)] with
// the standard Bayes posterior.
inline double harmony(const Eigen::MatrixXd& data, const MixtureModel& model) {
    if (data.rows() == 0) throw ArgumentError("harmony needs at least one data point");
    if (data.cols() != model.dim())
        throw ArgumentError("data dimension does not match model dimension");
    const PreparedMixture prep(model);
    return detail::harmony_terms(data, prep, 1.0).weighted / static_cast<double>(data.rows());
}

// Annealed objective: the harmony form evaluated with the tempered posterior
// at this lambda, plus lambda times the posterior entropy.
inline double annealed_objective(const Eigen::MatrixXd& data, const MixtureModel& model,
                                 double lambda) {
    if (lambda < 0.0) throw ArgumentError("annealed objective requires lambda >= 0");
    if (data.rows() == 0) throw ArgumentError("objective needs at least one data point");
    if (data.cols() != model.dim())
        throw ArgumentError("data dimension does not match model dimension");
    const PreparedMixture prep(model);
    const auto terms = detail::harmony_terms(data, prep, lambda);
    const double n = static_cast<double>(data.rows());
    return terms.weighted / n + lambda * terms.entropy / n;
}

// Initialization shared by annealed and plain EM fitting: means are k
// distinct data points from a greedy max-min-distance sweep started at a
// seeded random point, covariances the global data covariance (floored),
// weights uniform.
inline MixtureModel initialize_model(const Eigen::MatrixXd& data, int k, std::uint64_t seed) {
    const auto n = data.rows();
    if (n <= k)
        throw ArgumentError("need more data points than components, got N=" + std::to_string(n) +
                            " for k=" + std::to_string(k));

    Rng rng(seed);
    std::vector<Eigen::Index> chosen;
    chosen.reserve(static_cast<std::size_t>(k));
    chosen.push_back(static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(n))));

    Eigen::VectorXd min_dist2 =
        (data.rowwise() - data.row(chosen[0])).rowwise().squaredNorm();
    std::vector<bool> taken(static_cast<std::size_t>(n), false);
    taken[static_cast<std::size_t>(chosen[0])] = true;
    while (static_cast<int>(chosen.size()) < k) {
        Eigen::Index best = -1;
        double best_d = -1.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (taken[static_cast<std::size_t>(i)]) continue;
            if (min_dist2[i] > best_d) {
                best_d = min_dist2[i];
                best = i;
            }
        }
        taken[static_cast<std::size_t>(best)] = true;
        chosen.push_back(best);
        min_dist2 = min_dist2.cwiseMin(
            (data.rowwise() - data.row(best)).rowwise().squaredNorm());
    }

    const Eigen::RowVectorXd mean = data.colwise().mean();
    const Eigen::MatrixXd centered = data.rowwise() - mean;
    Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(n);
    cov = ((cov + cov.transpose()) * 0.5).eval();
    apply_covariance_floor(cov);

    MixtureModel model;
    model.components.resize(static_cast<std::size_t>(k));
    for (int j = 0; j < k; ++j) {
        auto& comp = model.components[static_cast<std::size_t>(j)];
        comp.weight = 1.0 / static_cast<double>(k);
        comp.mean = data.row(chosen[static_cast<std::size_t>(j)]).transpose();
        comp.cov = cov;
    }
    return model;
}

// Called after every parameter update with the model state, the outer/inner
// iteration indices and the current objective value.
using FitObserver = std::function<void(const MixtureModel&, int outer, int inner, double objective)>;

struct AnnealResult {
    MixtureModel model;
    FitTrace trace;
};

// Annealed harmony learning with automatic model selection. Outer loop walks
// lambda down the geometric schedule; the inner loop alternates the tempered
// posterior with the weighted-moment update until the annealed objective
// stalls. Redundancy is removed at three points, all disabled together when
// prune_threshold is zero:
//   - after every alternation, components below the prune threshold are
//     dropped (a redundant component's weight collapse is transient: left
//     alone it re-grips a handful of stray points and climbs back over the
//     threshold, defeating the selection);
//   - after inner convergence, components whose posterior mass is below d+1
//     points are dropped — that little support cannot determine a full-rank
//     covariance, so such a component only ever encodes stray points;
//   - finally, a component is deleted outright when the model without it
//     (re-settled for a few alternations so the survivors absorb the
//     orphaned mass) scores no worse on the harmony objective than the
//     incumbent, less a small slack. Spatial splits of one cluster across
//     two components pass the weight tests forever but lose this one.
// The surviving component count is the selected model order.
inline AnnealResult anneal_fit(const Eigen::MatrixXd& data, const AnnealConfig& cfg,
                               const FitObserver& observer = {}) {
    validate(cfg);
    if (data.rows() <= cfg.k_init)
        throw ArgumentError("anneal_fit needs N > k_init, got N=" + std::to_string(data.rows()) +
                            ", k_init=" + std::to_string(cfg.k_init));

    // Alternations the reduced model gets before the deletion comparison, and
    // the minimum average log-gain (nats per point) a component must
    // contribute to survive it.
    constexpr int kSettleSteps = 3;
    constexpr double kDeletionSlack = 0.02;

    AnnealResult result;
    result.model = initialize_model(data, cfg.k_init, cfg.seed);

    // Drops components whose weight fell below min_weight and renormalizes.
    // An all-below result is only reachable through the support rule on tiny
    // datasets, where the rule is meaningless, hence the no-op guard.
    const auto prune_below = [&](MixtureModel& model, double min_weight) {
        std::vector<GaussianComponent> kept;
        kept.reserve(model.components.size());
        for (auto& comp : model.components)
            if (comp.weight >= min_weight) kept.push_back(std::move(comp));
        const bool pruned = !kept.empty() && kept.size() < model.components.size();
        if (!kept.empty()) model.components = std::move(kept);
        if (!pruned) return false;
        double total = 0.0;
        for (const auto& comp : model.components) total += comp.weight;
        for (auto& comp : model.components) comp.weight /= total;
        return true;
    };

    const auto without_component = [](const MixtureModel& model, std::size_t drop) {
        MixtureModel out;
        out.components.reserve(model.components.size() - 1);
        double total = 0.0;
        for (std::size_t j = 0; j < model.components.size(); ++j) {
            if (j == drop) continue;
            out.components.push_back(model.components[j]);
            total += model.components[j].weight;
        }
        for (auto& comp : out.components) comp.weight /= total;
        return out;
    };

    const auto settle = [&](MixtureModel model, double lam) {
        for (int step = 0; step < kSettleSteps; ++step) {
            const Responsibilities resp = posterior(data, model, lam);
            model = update_parameters(data, resp, model);
        }
        return model;
    };

    const double support_floor =
        (static_cast<double>(data.cols()) + 1.0) / static_cast<double>(data.rows());

    double lambda = cfg.lambda_init;
    for (int outer = 0; outer < cfg.max_outer_iters; ++outer) {
        double prev = annealed_objective(data, result.model, lambda);
        for (int inner = 0; inner < cfg.max_inner_iters; ++inner) {
            const Responsibilities resp = posterior(data, result.model, lambda);
            result.model = update_parameters(data, resp, result.model);
            const bool dropped =
                cfg.prune_threshold > 0.0 && prune_below(result.model, cfg.prune_threshold);
            const double cur = annealed_objective(data, result.model, lambda);
            if (observer) observer(result.model, outer, inner, cur);
            // A prune changes the model dimension, so the stall test is
            // meaningless on that pair of objective values.
            if (!dropped && std::abs(cur - prev) < cfg.tol) {
                prev = cur;
                break;
            }
            prev = cur;
        }

        if (cfg.prune_threshold > 0.0) {
            if (result.model.components.size() > 1) prune_below(result.model, support_floor);
            while (result.model.components.size() > 1) {
                const double keep = harmony(data, result.model);
                double best_score = -std::numeric_limits<double>::infinity();
                MixtureModel best;
                for (std::size_t j = 0; j < result.model.components.size(); ++j) {
                    try {
                        MixtureModel cand = settle(without_component(result.model, j), lambda);
                        const double score = harmony(data, cand);
                        if (score > best_score) {
                            best_score = score;
                            best = std::move(cand);
                        }
                    } catch (const NumericError&) {
                        // A trial model that cannot be evaluated is simply
                        // not a candidate.
                    }
                }
                if (best.components.empty() || best_score <= keep - kDeletionSlack) break;
                result.model = std::move(best);
            }
        }

        result.trace.records.push_back({outer, lambda, result.model.component_count(),
                                        harmony(data, result.model),
                                        annealed_objective(data, result.model, lambda)});

        if (lambda <= cfg.lambda_min) break;
        lambda = std::max(cfg.lambda_min, cfg.lambda_decay * lambda);
    }
    return result;
}

}  // namespace sigverify
