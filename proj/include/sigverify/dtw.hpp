#pragma once

#include <Eigen/Core>
#include <array>
#include <cmath>
#include <vector>

#include "sigverify/errors.hpp"
#include "sigverify/features.hpp"
#include "sigverify/raw_signature.hpp"

namespace sigverify {

inline constexpr int kGlobalFeatureCount = 16;

// Fixed-order global feature vector of one signature; see global_features()
// for the composition.
using GlobalFeatureVector = std::array<double, kGlobalFeatureCount>;

// Local cost for DTW cells: absolute difference for scalars, Euclidean
// distance for vectors.
struct EuclideanCost {
    double operator()(double a, double b) const { return std::abs(a - b); }
    double operator()(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const {
        if (a.size() != b.size())
            throw ArgumentError("DTW elements have mismatched dimensions");
        return (a - b).norm();
    }
};

// Classic dynamic-programming alignment with step set {(1,0),(0,1),(1,1)};
// returns the unnormalized total path cost.
template <typename Seq, typename Cost = EuclideanCost>
double dtw_distance(const Seq& a, const Seq& b, Cost cost = {}) {
    const auto n = a.size();
    const auto m = b.size();
    if (n == 0 || m == 0)
        throw ArgumentError("DTW requires non-empty sequences");

    std::vector<double> prev(m), cur(m);
    prev[0] = cost(a[0], b[0]);
    for (std::size_t j = 1; j < m; ++j) prev[j] = cost(a[0], b[j]) + prev[j - 1];
    for (std::size_t i = 1; i < n; ++i) {
        cur[0] = cost(a[i], b[0]) + prev[0];
        for (std::size_t j = 1; j < m; ++j) {
            const double best = std::min(prev[j], std::min(prev[j - 1], cur[j - 1]));
            cur[j] = cost(a[i], b[j]) + best;
        }
        std::swap(prev, cur);
    }
    return prev[m - 1];
}

// Global shape/dynamics summary of one signature. Fixed order:
//   0 total duration (ms)          8 mean pressure
//   1 height/width ratio           9 mean azimuth
//   2 std of x                    10 max velocity magnitude
//   3 std of y                    11 pen-up fraction
//   4 std of pressure             12 path length
//   5 std of azimuth              13 pen-up transitions
//   6 mean |vx|                   14 mean theta
//   7 mean |vy|                   15 std of theta
// All standard deviations are population standard deviations. A degenerate
// bounding box uses a 1e-9 floor on the width.
inline GlobalFeatureVector global_features(const RawSignature& raw) {
    const auto n = static_cast<Eigen::Index>(raw.samples.size());
    if (n < 2)
        throw ArgumentError("global features need at least 2 samples");
    const Dynamics dyn = compute_dynamics(raw);

    Eigen::VectorXd x(n), y(n), p(n), az(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& s = raw.samples[static_cast<std::size_t>(i)];
        x[i] = static_cast<double>(s.x);
        y[i] = static_cast<double>(s.y);
        p[i] = s.pressure;
        az[i] = static_cast<double>(s.azimuth);
    }
    auto pop_std = [](const Eigen::VectorXd& v) {
        const Eigen::VectorXd c = v.array() - v.mean();
        return std::sqrt(c.squaredNorm() / static_cast<double>(v.size()));
    };

    double path_length = 0.0;
    for (Eigen::Index i = 1; i < n; ++i)
        path_length += std::hypot(x[i] - x[i - 1], y[i] - y[i - 1]);
    int pen_up_count = 0;
    int transitions = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const bool up = raw.samples[static_cast<std::size_t>(i)].pen_up;
        pen_up_count += up ? 1 : 0;
        if (i > 0 && up != raw.samples[static_cast<std::size_t>(i - 1)].pen_up) ++transitions;
    }

    GlobalFeatureVector f{};
    f[0] = static_cast<double>(raw.samples.back().t - raw.samples.front().t);
    f[1] = (y.maxCoeff() - y.minCoeff()) / std::max(x.maxCoeff() - x.minCoeff(), 1e-9);
    f[2] = pop_std(x);
    f[3] = pop_std(y);
    f[4] = pop_std(p);
    f[5] = pop_std(az);
    f[6] = dyn.vx.cwiseAbs().mean();
    f[7] = dyn.vy.cwiseAbs().mean();
    f[8] = p.mean();
    f[9] = az.mean();
    f[10] = dyn.speed.maxCoeff();
    f[11] = static_cast<double>(pen_up_count) / static_cast<double>(n);
    f[12] = path_length;
    f[13] = static_cast<double>(transitions);
    f[14] = dyn.angle.mean();
    f[15] = pop_std(dyn.angle);
    return f;
}

// Min/max template enrollment: V_s holds the per-feature minima over the
// enrollment set, V_b the maxima, and the acceptance threshold is the DTW
// distance between the two treated as scalar sequences.
struct DtwEnrollment {
    GlobalFeatureVector v_s{};
    GlobalFeatureVector v_b{};
    double threshold = 0.0;
};

inline DtwEnrollment dtw_enroll(const std::vector<RawSignature>& genuine) {
    if (genuine.size() < 2)
        throw ArgumentError("DTW enrollment needs at least 2 signatures");
    DtwEnrollment enr;
    enr.v_s = global_features(genuine.front());
    enr.v_b = enr.v_s;
    for (std::size_t i = 1; i < genuine.size(); ++i) {
        const GlobalFeatureVector f = global_features(genuine[i]);
        for (int d = 0; d < kGlobalFeatureCount; ++d) {
            enr.v_s[static_cast<std::size_t>(d)] =
                std::min(enr.v_s[static_cast<std::size_t>(d)], f[static_cast<std::size_t>(d)]);
            enr.v_b[static_cast<std::size_t>(d)] =
                std::max(enr.v_b[static_cast<std::size_t>(d)], f[static_cast<std::size_t>(d)]);
        }
    }
    enr.threshold = dtw_distance(enr.v_s, enr.v_b);
    return enr;
}

struct DtwDecision {
    bool accept = false;
    double distance = 0.0;
};

// Accepts when the DTW distance between the test signature's features and
// the minimum template V_s is within the enrollment threshold.
inline DtwDecision dtw_verify(const RawSignature& sig, const DtwEnrollment& enr) {
    const GlobalFeatureVector f = global_features(sig);
    const double dist = dtw_distance(f, enr.v_s);
    return {dist <= enr.threshold, dist};
}

}  // namespace sigverify
