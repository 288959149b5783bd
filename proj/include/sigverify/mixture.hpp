#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "sigverify/errors.hpp"
#include "sigverify/features.hpp"

namespace sigverify {

inline constexpr double kLog2Pi = 1.8378770664093454836;

struct GaussianComponent {
    double weight = 1.0;
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;  // full covariance
};

struct MixtureModel {
    std::vector<GaussianComponent> components;

    int dim() const {
        return components.empty() ? 0 : static_cast<int>(components.front().mean.size());
    }
    int component_count() const { return static_cast<int>(components.size()); }
};

// Relative covariance floor: a covariance is eligible for evaluation only if
// its smallest eigenvalue is at least 1e-6 * trace / d.
inline double covariance_floor(const Eigen::MatrixXd& cov) {
    return 1e-6 * cov.trace() / static_cast<double>(cov.rows());
}

// Lifts a collapsing covariance back above the floor by adding the floor
// value to the diagonal. No-op for healthy matrices. The relative floor goes
// to zero together with the trace, so callers that can see a component
// collapse onto coincident points must pass a positive min_floor to keep the
// matrix factorizable.
inline void apply_covariance_floor(Eigen::MatrixXd& cov, double min_floor = 0.0) {
    const double floor = std::max(covariance_floor(cov), min_floor);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < floor)
        cov.diagonal().array() += floor;
}

inline void validate(const MixtureModel& model) {
    if (model.components.empty())
        throw ArgumentError("mixture model has no components");
    const auto dim = model.components.front().mean.size();
    double weight_sum = 0.0;
    for (std::size_t j = 0; j < model.components.size(); ++j) {
        const auto& c = model.components[j];
        const std::string tag = "component " + std::to_string(j);
        if (c.weight < 0.0) throw ArgumentError(tag + ": negative weight");
        weight_sum += c.weight;
        if (c.mean.size() != dim) throw ArgumentError(tag + ": dimension mismatch");
        if (c.cov.rows() != dim || c.cov.cols() != dim)
            throw ArgumentError(tag + ": covariance shape mismatch");
        const double scale = std::max(1.0, c.cov.cwiseAbs().maxCoeff());
        if ((c.cov - c.cov.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale)
            throw ArgumentError(tag + ": covariance not symmetric");
    }
    if (std::abs(weight_sum - 1.0) > 1e-9)
        throw ArgumentError("mixture weights sum to " + std::to_string(weight_sum) + ", expected 1");
}

// log(sum(exp(w))) with the usual max shift; -inf entries drop out.
inline double log_sum_exp(std::span<const double> w) {
    double m = -std::numeric_limits<double>::infinity();
    for (double v : w) m = std::max(m, v);
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (double v : w) s += std::exp(v - m);
    return m + std::log(s);
}

// Gaussian log density via the Cholesky factor of the covariance: no
// explicit inverse, log|cov| from the factor's diagonal.
inline double component_log_density(const Eigen::VectorXd& u, const GaussianComponent& comp,
                                    int component_index = -1) {
    if (u.size() != comp.mean.size())
        throw ArgumentError("point dimension " + std::to_string(u.size()) +
                            " does not match component dimension " + std::to_string(comp.mean.size()));
    Eigen::LLT<Eigen::MatrixXd> llt(comp.cov);
    if (llt.info() != Eigen::Success)
        throw NumericError("covariance factorization failed", component_index);
    const Eigen::MatrixXd& l = llt.matrixLLT();
    double log_det = 0.0;
    for (Eigen::Index i = 0; i < l.rows(); ++i) log_det += std::log(l(i, i));
    log_det *= 2.0;
    const Eigen::VectorXd z = llt.matrixL().solve(u - comp.mean);
    return -0.5 * (static_cast<double>(u.size()) * kLog2Pi + log_det + z.squaredNorm());
}

// Caches per-component Cholesky factors, log determinants and log weights so
// the hot loops (posterior, harmony, scoring) factor each covariance once
// per model rather than once per point.
class PreparedMixture {
public:
    explicit PreparedMixture(const MixtureModel& model) : dim_(model.dim()) {
        if (model.components.empty())
            throw ArgumentError("mixture model has no components");
        double weight_sum = 0.0;
        factors_.reserve(model.components.size());
        for (std::size_t j = 0; j < model.components.size(); ++j) {
            const auto& c = model.components[j];
            if (c.mean.size() != dim_ || c.cov.rows() != dim_ || c.cov.cols() != dim_)
                throw ArgumentError("component " + std::to_string(j) + ": dimension mismatch");
            if (c.weight < 0.0)
                throw ArgumentError("component " + std::to_string(j) + ": negative weight");
            weight_sum += c.weight;
            Factor f;
            f.mean = c.mean;
            f.llt.compute(c.cov);
            if (c.weight > 0.0 && f.llt.info() != Eigen::Success)
                throw NumericError("covariance factorization failed", static_cast<int>(j));
            f.log_det = 0.0;
            if (f.llt.info() == Eigen::Success) {
                const Eigen::MatrixXd& l = f.llt.matrixLLT();
                for (Eigen::Index i = 0; i < dim_; ++i) f.log_det += std::log(l(i, i));
                f.log_det *= 2.0;
            }
            f.log_weight = c.weight > 0.0 ? std::log(c.weight)
                                          : -std::numeric_limits<double>::infinity();
            factors_.push_back(std::move(f));
        }
        if (weight_sum <= 0.0)
            throw ArgumentError("all mixture weights are zero");
    }

    int dim() const { return static_cast<int>(dim_); }
    int component_count() const { return static_cast<int>(factors_.size()); }
    double log_weight(int j) const { return factors_[static_cast<std::size_t>(j)].log_weight; }

    double component_log_density(const Eigen::VectorXd& u, int j) const {
        const auto& f = factors_[static_cast<std::size_t>(j)];
        const Eigen::VectorXd z = f.llt.matrixL().solve(u - f.mean);
        return -0.5 * (static_cast<double>(dim_) * kLog2Pi + f.log_det + z.squaredNorm());
    }

    // ln alpha_j + ln q(u | m_j, cov_j) for every component; -inf where the
    // weight is zero.
    void weighted_log_densities(const Eigen::VectorXd& u, std::vector<double>& out) const {
        out.resize(factors_.size());
        for (std::size_t j = 0; j < factors_.size(); ++j) {
            const auto& f = factors_[j];
            out[j] = f.log_weight == -std::numeric_limits<double>::infinity()
                         ? -std::numeric_limits<double>::infinity()
                         : f.log_weight + component_log_density(u, static_cast<int>(j));
        }
    }

    double mixture_log_density(const Eigen::VectorXd& u) const {
        std::vector<double> w;
        weighted_log_densities(u, w);
        return log_sum_exp(w);
    }

private:
    struct Factor {
        Eigen::VectorXd mean;
        Eigen::LLT<Eigen::MatrixXd> llt;
        double log_det = 0.0;
        double log_weight = 0.0;
    };
    Eigen::Index dim_;
    std::vector<Factor> factors_;
};

// log p(u | model) via stable max-shift summation; zero-weight components
// are skipped.
inline double mixture_log_density(const Eigen::VectorXd& u, const MixtureModel& model) {
    if (u.size() != model.dim())
        throw ArgumentError("point dimension does not match model dimension");
    return PreparedMixture(model).mixture_log_density(u);
}

// Per-frame average log density of a normalized feature sequence.
inline double sequence_avg_log_density(const FeatureSequence& seq, const MixtureModel& model) {
    if (!seq.normalized)
        throw ArgumentError("sequence must be normalized before scoring");
    if (seq.frames.rows() == 0)
        throw ArgumentError("empty feature sequence");
    if (seq.frames.cols() != model.dim())
        throw ArgumentError("frame dimension does not match model dimension");
    const PreparedMixture prep(model);
    double sum = 0.0;
    for (Eigen::Index i = 0; i < seq.frames.rows(); ++i)
        sum += prep.mixture_log_density(seq.frames.row(i).transpose());
    return sum / static_cast<double>(seq.frames.rows());
}

}  // namespace sigverify
