#pragma once

#include <string>
#include <vector>

#include "sigverify/errors.hpp"

namespace sigverify {

enum class Genuineness { genuine, forgery, unknown };

inline const char* to_string(Genuineness g) {
    switch (g) {
        case Genuineness::genuine: return "genuine";
        case Genuineness::forgery: return "forgery";
        default: return "unknown";
    }
}

// One pen-tablet sample. Positions and angles are in raw tablet units,
// timestamps in milliseconds. pen_up mirrors the tablet button status.
struct RawSample {
    long long x = 0;
    long long y = 0;
    long long t = 0;   // timestamp, ms
    bool pen_up = false;
    int azimuth = 0;
    int altitude = 0;  // parsed and retained, unused downstream
    double pressure = 0.0;
};

// A full signing act: time-ordered samples plus labeling metadata.
struct RawSignature {
    std::vector<RawSample> samples;
    std::string user_id;
    Genuineness genuineness = Genuineness::unknown;
};

// Checks the structural invariants: at least one sample, timestamps
// non-decreasing, pressure non-negative.
inline void validate(const RawSignature& sig) {
    if (sig.samples.empty())
        throw ArgumentError("signature has no samples");
    for (std::size_t i = 0; i < sig.samples.size(); ++i) {
        if (sig.samples[i].pressure < 0.0)
            throw ArgumentError("negative pressure at sample " + std::to_string(i));
        if (i > 0 && sig.samples[i].t < sig.samples[i - 1].t)
            throw ArgumentError("timestamps decrease at sample " + std::to_string(i));
    }
}

}  // namespace sigverify
