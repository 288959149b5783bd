#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "sigverify/errors.hpp"
#include "sigverify/random.hpp"

namespace sigverify {

struct SyntheticComponent {
    double weight = 1.0;
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
};

// Ground-truth mixture for generated datasets.
struct SyntheticSpec {
    std::vector<SyntheticComponent> components;
    int sample_count = 0;
    std::uint64_t seed = 0;
};

inline void validate(const SyntheticSpec& spec) {
    if (spec.components.empty())
        throw ArgumentError("synthetic spec has no components");
    if (spec.sample_count <= 0)
        throw ArgumentError("synthetic spec sample_count must be positive");
    const auto dim = spec.components.front().mean.size();
    double weight_sum = 0.0;
    for (std::size_t j = 0; j < spec.components.size(); ++j) {
        const auto& c = spec.components[j];
        const std::string tag = "synthetic component " + std::to_string(j);
        if (c.weight <= 0.0) throw ArgumentError(tag + ": weight must be positive");
        weight_sum += c.weight;
        if (c.mean.size() != dim) throw ArgumentError(tag + ": dimension mismatch");
        if (c.cov.rows() != dim || c.cov.cols() != dim)
            throw ArgumentError(tag + ": covariance shape mismatch");
        const double scale = std::max(1.0, c.cov.cwiseAbs().maxCoeff());
        if ((c.cov - c.cov.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale)
            throw ArgumentError(tag + ": covariance not symmetric");
        Eigen::LLT<Eigen::MatrixXd> llt(c.cov);
        if (llt.info() != Eigen::Success)
            throw ArgumentError(tag + ": covariance not positive definite");
    }
    if (std::abs(weight_sum - 1.0) > 1e-9)
        throw ArgumentError("synthetic weights must sum to 1");
}

struct SyntheticSample {
    Eigen::MatrixXd data;     // sample_count x dim
    std::vector<int> labels;  // generating component per row
};

// Draws sample_count points: component j with probability weight_j, then
// mean_j + L_j z with L_j the Cholesky factor and z i.i.d. standard normal.
// Fully deterministic for a fixed seed (see Rng).
inline SyntheticSample generate_mixture_samples(const SyntheticSpec& spec) {
    validate(spec);
    const auto k = spec.components.size();
    const auto dim = spec.components.front().mean.size();

    std::vector<Eigen::MatrixXd> chol(k);
    std::vector<double> cdf(k);
    double acc = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
        chol[j] = Eigen::LLT<Eigen::MatrixXd>(spec.components[j].cov).matrixL();
        acc += spec.components[j].weight;
        cdf[j] = acc;
    }
    cdf.back() = 1.0;  // guard against rounding in the running sum

    SyntheticSample out;
    out.data.resize(spec.sample_count, dim);
    out.labels.resize(static_cast<std::size_t>(spec.sample_count));
    Rng rng(spec.seed);
    Eigen::VectorXd z(dim);
    for (int i = 0; i < spec.sample_count; ++i) {
        const double u = rng.uniform01();
        std::size_t j = 0;
        while (j + 1 < k && u >= cdf[j]) ++j;
        for (Eigen::Index d = 0; d < dim; ++d) z[d] = rng.normal();
        out.data.row(i) = (spec.components[j].mean + chol[j] * z).transpose();
        out.labels[static_cast<std::size_t>(i)] = static_cast<int>(j);
    }
    return out;
}

}  // namespace sigverify
