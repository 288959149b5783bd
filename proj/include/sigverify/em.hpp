#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <vector>

#include "sigverify/byy.hpp"
#include "sigverify/errors.hpp"
#include "sigverify/mixture.hpp"

namespace sigverify {

// Classic fixed-k EM baseline. The E-step below is written as the plain
// responsibility computation (max-shifted, normalized in the linear domain),
// deliberately not routed through the tempered posterior it is cross-checked
// against.
struct EmConfig {
    int k = 16;
    std::uint64_t seed = 0;
    double tol = 1e-6;
    int max_iters = 200;
};

inline void validate(const EmConfig& cfg) {
    if (cfg.k < 1) throw ArgumentError("k must be at least 1");
    if (cfg.max_iters < 1) throw ArgumentError("max_iters must be positive");
    if (cfg.tol < 0.0) throw ArgumentError("tol must be non-negative");
}

// Standard E-step responsibilities a_j q(u_t|j) / sum_i a_i q(u_t|i).
inline Responsibilities em_responsibilities(const Eigen::MatrixXd& data,
                                            const MixtureModel& model) {
    if (data.cols() != model.dim())
        throw ArgumentError("data dimension does not match model dimension");
    const PreparedMixture prep(model);
    const auto n = data.rows();
    const auto k = prep.component_count();
    Responsibilities resp(n, k);
    std::vector<double> w;
    for (Eigen::Index t = 0; t < n; ++t) {
        prep.weighted_log_densities(data.row(t).transpose(), w);
        double m = w[0];
        for (int j = 1; j < k; ++j) m = std::max(m, w[static_cast<std::size_t>(j)]);
        double sum = 0.0;
        for (int j = 0; j < k; ++j) {
            const double e = std::exp(w[static_cast<std::size_t>(j)] - m);
            resp(t, j) = e;
            sum += e;
        }
        resp.row(t) /= sum;
    }
    return resp;
}

struct EmResult {
    MixtureModel model;
    std::vector<double> loglik_trace;  // average log-likelihood after each M-step
};

// EM until the average log-likelihood change drops below tol. Uses the same
// seeded farthest-point initialization as anneal_fit.
inline EmResult em_fit(const Eigen::MatrixXd& data, const EmConfig& cfg,
                       const FitObserver& observer = {}) {
    validate(cfg);
    if (data.rows() <= cfg.k)
        throw ArgumentError("em_fit needs N > k, got N=" + std::to_string(data.rows()) +
                            ", k=" + std::to_string(cfg.k));

    EmResult result;
    result.model = initialize_model(data, cfg.k, cfg.seed);

    auto avg_loglik = [&](const MixtureModel& m) {
        const PreparedMixture prep(m);
        double s = 0.0;
        for (Eigen::Index t = 0; t < data.rows(); ++t)
            s += prep.mixture_log_density(data.row(t).transpose());
        return s / static_cast<double>(data.rows());
    };

    double prev = avg_loglik(result.model);
    for (int iter = 0; iter < cfg.max_iters; ++iter) {
        const Responsibilities resp = em_responsibilities(data, result.model);
        result.model = update_parameters(data, resp, result.model);
        const double cur = avg_loglik(result.model);
        result.loglik_trace.push_back(cur);
        if (observer) observer(result.model, 0, iter, cur);
        if (std::abs(cur - prev) < cfg.tol) break;
        prev = cur;
    }
    return result;
}

}  // namespace sigverify
