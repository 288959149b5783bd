#pragma once

#include <Eigen/Core>
#include <array>
#include <cmath>
#include <ostream>

#include "sigverify/errors.hpp"
#include "sigverify/raw_signature.hpp"

namespace sigverify {

inline constexpr int kFeatureDim = 5;  // columns: x, y, p, v, theta

struct DimStats {
    double mean = 0.0;
    double stddev = 0.0;  // population; 0 marks a constant column
};

// Per-frame feature matrix for one signature.
struct FeatureSequence {
    Eigen::MatrixXd frames;  // N x 5
    bool normalized = false;
    std::array<DimStats, kFeatureDim> per_dim_stats{};  // filled by normalize()
};

// First derivatives of the pen trajectory plus the derived dynamics.
struct Dynamics {
    Eigen::VectorXd vx;     // dx/dt
    Eigen::VectorXd vy;     // dy/dt
    Eigen::VectorXd speed;  // sqrt(vx^2 + vy^2)
    Eigen::VectorXd angle;  // four-quadrant tangent angle, in (-pi, pi]
};

// Velocity and tangent angle from finite differences: central differences on
// interior samples, one-sided at both ends, each divided by the local
// timestamp span. Zero-velocity frames carry the previous angle forward
// (0 for a leading run). Adjacent duplicate timestamps are rejected.
inline Dynamics compute_dynamics(const RawSignature& raw) {
    const auto n = static_cast<Eigen::Index>(raw.samples.size());
    if (n < 2)
        throw ArgumentError("dynamics need at least 2 samples, got " + std::to_string(n));
    for (Eigen::Index i = 1; i < n; ++i) {
        if (raw.samples[static_cast<std::size_t>(i)].t == raw.samples[static_cast<std::size_t>(i - 1)].t)
            throw ArgumentError("zero time step between samples " + std::to_string(i - 1) +
                                " and " + std::to_string(i));
    }

    Dynamics d;
    d.vx.resize(n);
    d.vy.resize(n);
    d.speed.resize(n);
    d.angle.resize(n);

    auto sx = [&](Eigen::Index i) { return static_cast<double>(raw.samples[static_cast<std::size_t>(i)].x); };
    auto sy = [&](Eigen::Index i) { return static_cast<double>(raw.samples[static_cast<std::size_t>(i)].y); };
    auto st = [&](Eigen::Index i) { return static_cast<double>(raw.samples[static_cast<std::size_t>(i)].t); };

    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::Index lo = i == 0 ? 0 : i - 1;
        const Eigen::Index hi = i == n - 1 ? n - 1 : i + 1;
        const double dt = st(hi) - st(lo);
        d.vx[i] = (sx(hi) - sx(lo)) / dt;
        d.vy[i] = (sy(hi) - sy(lo)) / dt;
    }

    double prev_angle = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        d.speed[i] = std::hypot(d.vx[i], d.vy[i]);
        if (d.speed[i] == 0.0) {
            d.angle[i] = prev_angle;
        } else {
            double a = std::atan2(d.vy[i], d.vx[i]);
            if (a <= -3.14159265358979323846) a = 3.14159265358979323846;  // fold -pi onto pi
            d.angle[i] = a;
            prev_angle = a;
        }
    }
    return d;
}

// Assembles the raw (unnormalized) N x 5 matrix in the fixed column order
// x, y, p, v, theta. Every frame is kept, pen-up frames included.
inline FeatureSequence build_feature_sequence(const RawSignature& raw) {
    const Dynamics dyn = compute_dynamics(raw);
    const auto n = static_cast<Eigen::Index>(raw.samples.size());

    FeatureSequence seq;
    seq.frames.resize(n, kFeatureDim);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& s = raw.samples[static_cast<std::size_t>(i)];
        seq.frames(i, 0) = static_cast<double>(s.x);
        seq.frames(i, 1) = static_cast<double>(s.y);
        seq.frames(i, 2) = s.pressure;
        seq.frames(i, 3) = dyn.speed[i];
        seq.frames(i, 4) = dyn.angle[i];
    }
    return seq;
}

// Z-scores each column against its own mean and population standard
// deviation. A two-pass mean removal keeps the residual mean at rounding
// level even for badly offset columns. Columns whose spread is rounding
// noise are treated as constant: mapped to zeros, stddev recorded as 0.
inline FeatureSequence normalize(const FeatureSequence& seq) {
    if (seq.normalized)
        throw ArgumentError("sequence is already normalized");
    const auto n = seq.frames.rows();
    if (n == 0)
        throw ArgumentError("cannot normalize an empty sequence");

    FeatureSequence out;
    out.frames.resize(n, kFeatureDim);
    out.normalized = true;
    for (int d = 0; d < kFeatureDim; ++d) {
        const Eigen::VectorXd col = seq.frames.col(d);
        const double m1 = col.mean();
        Eigen::VectorXd dev = col.array() - m1;
        const double m2 = dev.mean();  // residual of the first pass
        dev.array() -= m2;
        const double var = dev.squaredNorm() / static_cast<double>(n);
        const double sd = std::sqrt(var);
        const double scale = std::max(1.0, col.cwiseAbs().maxCoeff());
        if (sd <= 1e-12 * scale) {
            out.frames.col(d).setZero();
            out.per_dim_stats[static_cast<std::size_t>(d)] = {m1 + m2, 0.0};
        } else {
            out.frames.col(d) = dev / sd;
            out.per_dim_stats[static_cast<std::size_t>(d)] = {m1 + m2, sd};
        }
    }
    return out;
}

// One row per frame, for offline inspection.
inline void write_feature_csv(std::ostream& os, const FeatureSequence& seq) {
    os << "x,y,p,v,theta\n";
    char buf[192];
    for (Eigen::Index i = 0; i < seq.frames.rows(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g\n", seq.frames(i, 0),
                      seq.frames(i, 1), seq.frames(i, 2), seq.frames(i, 3), seq.frames(i, 4));
        os << buf;
    }
}

}  // namespace sigverify
