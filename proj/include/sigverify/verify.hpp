#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "sigverify/errors.hpp"
#include "sigverify/features.hpp"
#include "sigverify/mixture.hpp"
#include "sigverify/raw_signature.hpp"

namespace sigverify {

// Genuine model, antithetical (forgery) model and the forgery prior for one
// user.
struct UserModelPair {
    std::string user_id;
    MixtureModel theta_c;    // genuine
    MixtureModel theta_bar;  // forgery
    double p_f = 0.5;
};

inline void validate(const UserModelPair& pair) {
    if (!(pair.p_f > 0.0 && pair.p_f < 1.0))
        throw ArgumentError("forgery prior must be in (0, 1)");
    validate(pair.theta_c);
    validate(pair.theta_bar);
    if (pair.theta_c.dim() != pair.theta_bar.dim())
        throw ArgumentError("genuine and forgery models have different dimensions");
}

// How a sequence's per-frame log densities are combined into one likelihood
// term. `mean` keeps the decision threshold meaningful across signature
// lengths; `sum` is the raw product form.
enum class Aggregation { mean, sum };

// Log likelihood-ratio score
//   ln S = G(seq, theta_c) - G(seq, theta_bar) + ln((1 - p_f) / p_f)
// with G the aggregated per-frame log density.
inline double signature_score(const FeatureSequence& seq, const UserModelPair& pair,
                              Aggregation agg = Aggregation::mean) {
    if (!(pair.p_f > 0.0 && pair.p_f < 1.0))
        throw ArgumentError("forgery prior must be in (0, 1)");
    if (seq.frames.cols() != pair.theta_c.dim() || seq.frames.cols() != pair.theta_bar.dim())
        throw ArgumentError("sequence dimension does not match model pair");
    double g_c = sequence_avg_log_density(seq, pair.theta_c);
    double g_bar = sequence_avg_log_density(seq, pair.theta_bar);
    if (agg == Aggregation::sum) {
        g_c *= static_cast<double>(seq.frames.rows());
        g_bar *= static_cast<double>(seq.frames.rows());
    }
    return g_c - g_bar + std::log((1.0 - pair.p_f) / pair.p_f);
}

enum class Decision { accept, reject };

// Threshold rule: accept exactly when log_score >= ln T.
inline Decision decide(double log_score, double threshold) {
    if (!(threshold > 0.0))
        throw ArgumentError("decision threshold must be positive");
    return log_score >= std::log(threshold) ? Decision::accept : Decision::reject;
}

// One scored test signature.
struct TestOutcome {
    std::string user;
    bool accepted = false;
    Genuineness label = Genuineness::unknown;
};

struct UserRates {
    std::string user;
    long long false_accepts = 0;
    long long false_rejects = 0;
    long long total_tests = 0;
    long long genuine_tests = 0;
    long long forgery_tests = 0;
    double far = 0.0;            // 100 * FA / total_tests
    double frr = 0.0;            // 100 * FR / total_tests
    double rate = 0.0;           // 100 - FAR - FRR, by construction
    double far_per_class = 0.0;  // 100 * FA / forgery_tests
    double frr_per_class = 0.0;  // 100 * FR / genuine_tests
};

struct RatesReport {
    std::vector<UserRates> users;
    double avg_far = 0.0;
    double avg_frr = 0.0;
    double avg_rate = 0.0;  // 100 - avg_far - avg_frr
    double avg_far_per_class = 0.0;
    double avg_frr_per_class = 0.0;
    std::vector<std::string> warnings;
};

namespace detail {

// "U2" < "U10": compares digit runs numerically, everything else bytewise.
inline bool natural_less(const std::string& a, const std::string& b) {
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (std::isdigit(static_cast<unsigned char>(a[i])) &&
            std::isdigit(static_cast<unsigned char>(b[j]))) {
            std::size_t ie = i, je = j;
            while (ie < a.size() && std::isdigit(static_cast<unsigned char>(a[ie]))) ++ie;
            while (je < b.size() && std::isdigit(static_cast<unsigned char>(b[je]))) ++je;
            const std::string da = a.substr(i, ie - i), db = b.substr(j, je - j);
            const std::string ta = da.substr(std::min(da.find_first_not_of('0'), da.size() - 1));
            const std::string tb = db.substr(std::min(db.find_first_not_of('0'), db.size() - 1));
            if (ta.size() != tb.size()) return ta.size() < tb.size();
            if (ta != tb) return ta < tb;
            i = ie;
            j = je;
        } else {
            if (a[i] != b[j]) return a[i] < b[j];
            ++i;
            ++j;
        }
    }
    return (a.size() - i) < (b.size() - j);
}

}  // namespace detail

// Confusion accounting over labeled decisions. Per user, false accepts are
// forgeries accepted and false rejects genuines rejected; both rates use the
// user's pooled test count as denominator, with the conventional per-class
// rates emitted as secondary columns. Averages are unweighted means over
// users, and every verification rate is computed as 100 - FAR - FRR so the
// identity holds exactly. Users listed in expected_users but absent from the
// outcomes are excluded with a warning.
inline RatesReport evaluate(const std::vector<TestOutcome>& outcomes,
                            const std::vector<std::string>& expected_users = {}) {
    struct Counts {
        long long fa = 0, fr = 0, total = 0, genuine = 0, forgery = 0;
    };
    std::map<std::string, Counts> by_user;
    for (const auto& o : outcomes) {
        if (o.label == Genuineness::unknown)
            throw ArgumentError("test outcome for user " + o.user + " has no genuine/forgery label");
        auto& c = by_user[o.user];
        ++c.total;
        if (o.label == Genuineness::genuine) {
            ++c.genuine;
            if (!o.accepted) ++c.fr;
        } else {
            ++c.forgery;
            if (o.accepted) ++c.fa;
        }
    }

    RatesReport report;
    for (const auto& u : expected_users) {
        if (by_user.find(u) == by_user.end())
            report.warnings.push_back("user " + u + " has no test signatures, excluded from the report");
    }

    std::vector<std::string> order;
    order.reserve(by_user.size());
    for (const auto& [user, counts] : by_user) order.push_back(user);
    std::sort(order.begin(), order.end(), detail::natural_less);

    for (const auto& user : order) {
        const auto& c = by_user[user];
        UserRates r;
        r.user = user;
        r.false_accepts = c.fa;
        r.false_rejects = c.fr;
        r.total_tests = c.total;
        r.genuine_tests = c.genuine;
        r.forgery_tests = c.forgery;
        r.far = 100.0 * static_cast<double>(c.fa) / static_cast<double>(c.total);
        r.frr = 100.0 * static_cast<double>(c.fr) / static_cast<double>(c.total);
        r.rate = 100.0 - r.far - r.frr;
        r.far_per_class =
            c.forgery > 0 ? 100.0 * static_cast<double>(c.fa) / static_cast<double>(c.forgery) : 0.0;
        r.frr_per_class =
            c.genuine > 0 ? 100.0 * static_cast<double>(c.fr) / static_cast<double>(c.genuine) : 0.0;
        report.users.push_back(std::move(r));
    }

    if (!report.users.empty()) {
        const double n = static_cast<double>(report.users.size());
        for (const auto& r : report.users) {
            report.avg_far += r.far;
            report.avg_frr += r.frr;
            report.avg_far_per_class += r.far_per_class;
            report.avg_frr_per_class += r.frr_per_class;
        }
        report.avg_far /= n;
        report.avg_frr /= n;
        report.avg_far_per_class /= n;
        report.avg_frr_per_class /= n;
        report.avg_rate = 100.0 - report.avg_far - report.avg_frr;
    }
    return report;
}

inline void write_report_csv(std::ostream& os, const RatesReport& report) {
    os << "user,FA,FR,total,FAR,FRR,rate,FAR_per_class,FRR_per_class\n";
    char buf[256];
    for (const auto& r : report.users) {
        std::snprintf(buf, sizeof buf, "%s,%lld,%lld,%lld,%.4f,%.4f,%.4f,%.4f,%.4f\n",
                      r.user.c_str(), r.false_accepts, r.false_rejects, r.total_tests, r.far, r.frr,
                      r.rate, r.far_per_class, r.frr_per_class);
        os << buf;
    }
    long long fa = 0, fr = 0, total = 0;
    for (const auto& r : report.users) {
        fa += r.false_accepts;
        fr += r.false_rejects;
        total += r.total_tests;
    }
    std::snprintf(buf, sizeof buf, "AVERAGE,%lld,%lld,%lld,%.4f,%.4f,%.4f,%.4f,%.4f\n", fa, fr,
                  total, report.avg_far, report.avg_frr, report.avg_rate, report.avg_far_per_class,
                  report.avg_frr_per_class);
    os << buf;
}

inline void write_report_table(std::ostream& os, const RatesReport& report) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%-10s %6s %6s %6s %10s %10s %10s\n", "user", "FA", "FR",
                  "total", "FAR(%)", "FRR(%)", "rate(%)");
    os << buf;
    for (const auto& r : report.users) {
        std::snprintf(buf, sizeof buf, "%-10s %6lld %6lld %6lld %10.4f %10.4f %10.4f\n",
                      r.user.c_str(), r.false_accepts, r.false_rejects, r.total_tests, r.far, r.frr,
                      r.rate);
        os << buf;
    }
    std::snprintf(buf, sizeof buf, "%-10s %6s %6s %6s %10.4f %10.4f %10.4f\n", "AVERAGE", "", "",
                  "", report.avg_far, report.avg_frr, report.avg_rate);
    os << buf;
}

// Per-signature score dump row.
struct ScoreRecord {
    std::string user;
    std::string signature;
    Genuineness label = Genuineness::unknown;
    double score = 0.0;  // ln S for mixture methods, DTW distance for dtw
    bool accepted = false;
};

inline void write_scores_csv(std::ostream& os, const std::vector<ScoreRecord>& records) {
    os << "user,signature,label,score,decision\n";
    char buf[256];
    for (const auto& r : records) {
        std::snprintf(buf, sizeof buf, "%s,%s,%s,%.17g,%s\n", r.user.c_str(), r.signature.c_str(),
                      to_string(r.label), r.score, r.accepted ? "accept" : "reject");
        os << buf;
    }
}

}  // namespace sigverify
