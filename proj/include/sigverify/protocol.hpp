#pragma once

#include <atomic>
#include <exception>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "sigverify/byy.hpp"
#include "sigverify/dataset.hpp"
#include "sigverify/dtw.hpp"
#include "sigverify/em.hpp"
#include "sigverify/errors.hpp"
#include "sigverify/features.hpp"
#include "sigverify/verify.hpp"

namespace sigverify {

enum class Method { byy, em, dtw };

inline const char* to_string(Method m) {
    switch (m) {
        case Method::byy: return "byy";
        case Method::em: return "em";
        case Method::dtw: return "dtw";
    }
    return "?";
}

struct ProtocolConfig {
    Method method = Method::byy;
    AnnealConfig anneal;  // method == byy
    EmConfig em;          // method == em
    int train_genuine = 5;
    int train_forgery = 5;
    int genuine_count = 20;  // signatures 1..genuine_count are genuine
    double threshold = 2.0;  // accept iff ln S >= ln threshold
    double p_f = 0.5;
    Aggregation aggregation = Aggregation::mean;
    bool holdout_only = false;  // score only signatures not used for training
    int jobs = 1;               // 0 selects hardware concurrency
    std::uint64_t seed = 0;     // base seed, offset per user and per model
};

inline void validate(const ProtocolConfig& cfg) {
    if (cfg.train_genuine < 1) throw ArgumentError("train_genuine must be at least 1");
    if (cfg.train_forgery < 0) throw ArgumentError("train_forgery must be >= 0");
    if (cfg.method != Method::dtw && cfg.train_forgery < 1)
        throw ArgumentError("mixture methods need at least one training forgery");
    if (cfg.method == Method::dtw && cfg.train_genuine < 2)
        throw ArgumentError("dtw enrollment needs at least 2 genuine signatures");
    if (cfg.genuine_count < cfg.train_genuine)
        throw ArgumentError("genuine_count must cover the genuine training signatures");
    if (!(cfg.threshold > 0.0)) throw ArgumentError("decision threshold must be positive");
    if (!(cfg.p_f > 0.0 && cfg.p_f < 1.0)) throw ArgumentError("forgery prior must be in (0, 1)");
    if (cfg.jobs < 0) throw ArgumentError("jobs must be >= 0");
    if (cfg.method == Method::byy) validate(cfg.anneal);
    if (cfg.method == Method::em) validate(cfg.em);
}

struct UserResult {
    std::string user_id;
    int user_number = 0;
    UserModelPair pair;        // byy and em
    DtwEnrollment enrollment;  // dtw
    FitTrace genuine_trace;    // byy only
    FitTrace forgery_trace;    // byy only
    std::vector<ScoreRecord> scores;
    std::vector<TestOutcome> outcomes;
    std::vector<std::string> warnings;
};

struct ProtocolResult {
    std::vector<UserResult> users;  // corpus order
    RatesReport report;
    std::vector<std::string> warnings;  // user warnings, merged in corpus order
};

namespace detail {

// Training pool: every normalized frame of the chosen signatures, stacked.
inline Eigen::MatrixXd pool_frames(const std::vector<FeatureSequence>& seqs) {
    Eigen::Index total = 0;
    for (const auto& s : seqs) total += s.frames.rows();
    Eigen::MatrixXd pooled(total, kFeatureDim);
    Eigen::Index row = 0;
    for (const auto& s : seqs) {
        pooled.middleRows(row, s.frames.rows()) = s.frames;
        row += s.frames.rows();
    }
    return pooled;
}

inline UserResult run_user(const UserFiles& user, const ProtocolConfig& cfg) {
    UserResult result;
    result.user_id = user.user_id;
    result.user_number = user.user_number;

    std::vector<RawSignature> raws;
    raws.reserve(user.signatures.size());
    for (const auto& f : user.signatures) raws.push_back(load_signature(f, &result.warnings));

    // Training split: lowest-index genuines and lowest-index forgeries. The
    // corpus scanner already sorted signatures by index.
    std::vector<std::size_t> train_idx;
    int got_genuine = 0, got_forgery = 0;
    for (std::size_t i = 0; i < raws.size(); ++i) {
        if (raws[i].genuineness == Genuineness::genuine && got_genuine < cfg.train_genuine) {
            train_idx.push_back(i);
            ++got_genuine;
        } else if (raws[i].genuineness == Genuineness::forgery && got_forgery < cfg.train_forgery) {
            train_idx.push_back(i);
            ++got_forgery;
        }
    }
    if (got_genuine < cfg.train_genuine)
        throw ArgumentError("user " + user.user_id + " has " + std::to_string(got_genuine) +
                            " genuine signatures, " + std::to_string(cfg.train_genuine) +
                            " required for training");
    const bool need_forgery = cfg.method != Method::dtw;
    if (need_forgery && got_forgery < cfg.train_forgery)
        throw ArgumentError("user " + user.user_id + " has " + std::to_string(got_forgery) +
                            " forgery signatures, " + std::to_string(cfg.train_forgery) +
                            " required for training");
    std::vector<bool> in_train(raws.size(), false);
    for (std::size_t i : train_idx) in_train[i] = true;

    if (cfg.method == Method::dtw) {
        std::vector<RawSignature> enroll;
        for (std::size_t i : train_idx)
            if (raws[i].genuineness == Genuineness::genuine) enroll.push_back(raws[i]);
        result.enrollment = dtw_enroll(enroll);
        for (std::size_t i = 0; i < raws.size(); ++i) {
            if (cfg.holdout_only && in_train[i]) continue;
            const DtwDecision d = dtw_verify(raws[i], result.enrollment);
            result.scores.push_back({user.user_id, user.signatures[i].path, raws[i].genuineness,
                                     d.distance, d.accept});
            result.outcomes.push_back({user.user_id, d.accept, raws[i].genuineness});
        }
        return result;
    }

    std::vector<FeatureSequence> features;
    features.reserve(raws.size());
    for (const auto& raw : raws) features.push_back(normalize(build_feature_sequence(raw)));

    std::vector<FeatureSequence> train_genuine, train_forgery;
    for (std::size_t i : train_idx) {
        if (raws[i].genuineness == Genuineness::genuine)
            train_genuine.push_back(features[i]);
        else
            train_forgery.push_back(features[i]);
    }
    const Eigen::MatrixXd pool_c = pool_frames(train_genuine);
    const Eigen::MatrixXd pool_bar = pool_frames(train_forgery);

    // Seed layout keeps runs reproducible regardless of worker count: each
    // user's two models get fixed, distinct streams.
    const std::uint64_t seed_c = cfg.seed + 2 * static_cast<std::uint64_t>(user.user_number);
    const std::uint64_t seed_bar = seed_c + 1;

    result.pair.user_id = user.user_id;
    result.pair.p_f = cfg.p_f;
    if (cfg.method == Method::byy) {
        AnnealConfig ac = cfg.anneal;
        ac.seed = seed_c;
        AnnealResult fit_c = anneal_fit(pool_c, ac);
        ac.seed = seed_bar;
        AnnealResult fit_bar = anneal_fit(pool_bar, ac);
        result.pair.theta_c = std::move(fit_c.model);
        result.pair.theta_bar = std::move(fit_bar.model);
        result.genuine_trace = std::move(fit_c.trace);
        result.forgery_trace = std::move(fit_bar.trace);
    } else {
        EmConfig ec = cfg.em;
        ec.seed = seed_c;
        result.pair.theta_c = em_fit(pool_c, ec).model;
        ec.seed = seed_bar;
        result.pair.theta_bar = em_fit(pool_bar, ec).model;
    }

    for (std::size_t i = 0; i < raws.size(); ++i) {
        if (cfg.holdout_only && in_train[i]) continue;
        const double s = signature_score(features[i], result.pair, cfg.aggregation);
        const bool accept = decide(s, cfg.threshold) == Decision::accept;
        result.scores.push_back(
            {user.user_id, user.signatures[i].path, raws[i].genuineness, s, accept});
        result.outcomes.push_back({user.user_id, accept, raws[i].genuineness});
    }
    return result;
}

}  // namespace detail

// Runs the train/score protocol over every user in the corpus. Users are
// processed independently (in parallel when jobs != 1) and merged back in
// corpus order, so the result does not depend on scheduling.
inline ProtocolResult run_protocol(const Corpus& corpus, const ProtocolConfig& cfg) {
    validate(cfg);
    if (corpus.users.empty()) throw ArgumentError("corpus has no users");

    const std::size_t n = corpus.users.size();
    std::vector<UserResult> results(n);
    std::vector<std::exception_ptr> failures(n);

    unsigned jobs = cfg.jobs == 0 ? std::thread::hardware_concurrency() : static_cast<unsigned>(cfg.jobs);
    if (jobs == 0) jobs = 1;
    jobs = std::min<unsigned>(jobs, static_cast<unsigned>(n));

    if (jobs <= 1) {
        for (std::size_t i = 0; i < n; ++i) results[i] = detail::run_user(corpus.users[i], cfg);
    } else {
        std::atomic<std::size_t> next{0};
        auto worker = [&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= n) return;
                try {
                    results[i] = detail::run_user(corpus.users[i], cfg);
                } catch (...) {
                    failures[i] = std::current_exception();
                }
            }
        };
        std::vector<std::thread> threads;
        threads.reserve(jobs);
        for (unsigned t = 0; t < jobs; ++t) threads.emplace_back(worker);
        for (auto& t : threads) t.join();
        for (std::size_t i = 0; i < n; ++i)
            if (failures[i]) std::rethrow_exception(failures[i]);
    }

    ProtocolResult out;
    std::vector<TestOutcome> all_outcomes;
    std::vector<std::string> expected;
    for (std::size_t i = 0; i < n; ++i) {
        expected.push_back(results[i].user_id);
        for (const auto& w : results[i].warnings) out.warnings.push_back(w);
        for (const auto& o : results[i].outcomes) all_outcomes.push_back(o);
    }
    out.report = evaluate(all_outcomes, expected);
    for (const auto& w : out.report.warnings) out.warnings.push_back(w);
    out.users = std::move(results);
    return out;
}

}  // namespace sigverify
