// Acceptance gate: one line per criterion, nonzero exit when any fails.
// Each check is self-contained and uses only the public headers plus the
// independent reference implementations in oracle_helpers.hpp.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include "corpus_fixture.hpp"
#include "oracle_helpers.hpp"
#include "sigverify/sigverify.hpp"

using namespace sigverify;

namespace {

int g_failures = 0;

void report(const char* name, bool pass, const std::string& detail) {
    std::printf("[%s] %-28s %s\n", pass ? "PASS" : "FAIL", name, detail.c_str());
    if (!pass) ++g_failures;
}

void report_skip(const char* name, const std::string& detail) {
    std::printf("[SKIP] %-28s %s\n", name, detail.c_str());
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double max_param_delta(const MixtureModel& a, const MixtureModel& b) {
    if (a.components.size() != b.components.size()) return 1e30;
    double worst = 0.0;
    for (std::size_t j = 0; j < a.components.size(); ++j) {
        worst = std::max(worst, std::abs(a.components[j].weight - b.components[j].weight));
        worst = std::max(worst,
                         (a.components[j].mean - b.components[j].mean).cwiseAbs().maxCoeff());
        worst =
            std::max(worst, (a.components[j].cov - b.components[j].cov).cwiseAbs().maxCoeff());
    }
    return worst;
}

// 1. With the temperature fixed at 1 and pruning disabled, the annealed
//    fit must reproduce plain EM iterate for iterate.
void check_em_equivalence() {
    const auto t0 = std::chrono::steady_clock::now();
    const int iters = 12;
    double worst = 0.0;
    for (std::uint64_t seed : {101u, 102u, 103u}) {
        Rng rng(seed);
        const Eigen::MatrixXd data = oracle::random_data(rng, 500, 2, 3.0);

        std::vector<MixtureModel> em_models, anneal_models;
        EmConfig e;
        e.k = 4;
        e.seed = seed;
        e.tol = 0.0;
        e.max_iters = iters;
        em_fit(data, e, [&](const MixtureModel& m, int, int, double) { em_models.push_back(m); });

        AnnealConfig a;
        a.k_init = 4;
        a.lambda_init = 1.0;
        a.lambda_min = 1.0;
        a.prune_threshold = 0.0;
        a.max_outer_iters = 1;
        a.max_inner_iters = iters;
        a.tol = 0.0;
        a.seed = seed;
        anneal_fit(data, a,
                   [&](const MixtureModel& m, int, int, double) { anneal_models.push_back(m); });

        if (em_models.size() != anneal_models.size() ||
            em_models.size() != static_cast<std::size_t>(iters)) {
            report("em-equivalence", false,
                   "iterate counts differ: " + std::to_string(em_models.size()) + " vs " +
                       std::to_string(anneal_models.size()));
            return;
        }
        for (int i = 0; i < iters; ++i)
            worst = std::max(worst, max_param_delta(em_models[static_cast<std::size_t>(i)],
                                                    anneal_models[static_cast<std::size_t>(i)]));
    }
    const double elapsed = seconds_since(t0);
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "3 datasets x %d iterates, max parameter delta %.3g (tol 1e-10), %.2fs", iters,
                  worst, elapsed);
    report("em-equivalence", worst < 1e-10 && elapsed < 5.0, buf);
}

// 2. One posterior/update alternation never decreases the annealed objective.
void check_monotonicity() {
    Rng rng(2024);
    double worst_drop = 0.0;
    int checked = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 20 + static_cast<int>(rng.index(41));
        const int d = 2 + static_cast<int>(rng.index(2));
        const int k = 2 + static_cast<int>(rng.index(3));
        const Eigen::MatrixXd data = oracle::random_data(rng, n, d, 2.5);
        const MixtureModel model = oracle::random_model(rng, k, d, 2.5);
        const double lambda = 0.05 + 0.95 * rng.uniform01();

        const double before = annealed_objective(data, model, lambda);
        const Responsibilities resp = posterior(data, model, lambda);
        const MixtureModel next = update_parameters(data, resp, model);
        const double after = annealed_objective(data, next, lambda);
        worst_drop = std::min(worst_drop, after - before);
        ++checked;
    }
    char buf[160];
    std::snprintf(buf, sizeof buf, "%d random alternations, worst objective change %.3g (floor -1e-8)",
                  checked, worst_drop);
    report("annealing-monotonicity", worst_drop >= -1e-8, buf);
}

// 3. Library objective values agree with direct-formula reference sums.
void check_objective_agreement() {
    Rng rng(77);
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 3 + static_cast<int>(rng.index(8));
        const int k = 1 + static_cast<int>(rng.index(3));
        const Eigen::MatrixXd data = oracle::random_data(rng, n, 2, 2.0);
        const MixtureModel model = oracle::random_model(rng, k, 2, 2.0);
        worst = std::max(
            worst, static_cast<double>(std::abs(harmony(data, model) - oracle::harmony(data, model))));
        for (double lambda : {1.0, 0.6, 0.2, 0.05})
            worst = std::max(worst,
                             static_cast<double>(std::abs(annealed_objective(data, model, lambda) -
                                                          oracle::annealed(data, model, lambda))));
    }
    char buf[160];
    std::snprintf(buf, sizeof buf, "20 fixtures x 4 temperatures, max |difference| %.3g (tol 1e-10)",
                  worst);
    report("objective-reference-match", worst < 1e-10, buf);
}

// 4. Annealing with pruning recovers the generating component count and
//    means of a well-separated mixture from an oversized start.
void check_model_order_recovery() {
    const auto t0 = std::chrono::steady_clock::now();
    SyntheticSpec spec;
    const double means[3][2] = {{0.0, 0.0}, {6.0, 0.0}, {0.0, 6.0}};
    for (const auto& m : means) {
        SyntheticComponent c;
        c.weight = 1.0 / 3.0;
        c.mean = Eigen::Vector2d(m[0], m[1]);
        c.cov = 0.5 * Eigen::Matrix2d::Identity();
        spec.components.push_back(std::move(c));
    }
    spec.sample_count = 1000;

    int recovered = 0;
    double worst_mean_error = 0.0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        spec.seed = seed;
        const SyntheticSample sample = generate_mixture_samples(spec);
        AnnealConfig cfg;
        cfg.k_init = 10;
        cfg.seed = seed;
        const AnnealResult fit = anneal_fit(sample.data, cfg);
        if (fit.model.component_count() != 3) continue;
        ++recovered;
        for (const auto& truth : spec.components) {
            double best = 1e30;
            for (const auto& c : fit.model.components)
                best = std::min(best, (c.mean - truth.mean).norm());
            worst_mean_error = std::max(worst_mean_error, best);
        }
    }
    const double elapsed = seconds_since(t0);
    char buf[200];
    std::snprintf(buf, sizeof buf,
                  "k=3 recovered in %d/10 seeds (need 9), worst mean error %.3g (tol 0.2), %.1fs",
                  recovered, worst_mean_error, elapsed);
    report("model-order-recovery", recovered >= 9 && worst_mean_error < 0.2 && elapsed < 30.0,
           buf);
}

// 5. The dynamic program equals exhaustive path enumeration, bit for bit.
void check_dtw_exactness() {
    Rng rng(555);
    int mismatches = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 1 + rng.index(5);
        const std::size_t m = 1 + rng.index(5);
        std::vector<double> a(n), b(m);
        for (auto& v : a) v = std::floor(rng.uniform01() * 20.0) - 10.0;
        for (auto& v : b) v = std::floor(rng.uniform01() * 20.0) - 10.0;
        if (dtw_distance(a, b) != oracle::brute_dtw(a, b)) ++mismatches;
    }
    char buf[120];
    std::snprintf(buf, sizeof buf, "200 random pairs, %d deviations from brute force", mismatches);
    report("dtw-brute-force-equality", mismatches == 0, buf);
}

// 6. Verification rates follow the pooled-denominator convention and the
//    identity rate = 100 - FAR - FRR holds exactly.
void check_rate_accounting() {
    std::vector<TestOutcome> outcomes;
    for (int i = 0; i < 16; ++i) outcomes.push_back({"U1", true, Genuineness::genuine});
    for (int i = 0; i < 4; ++i) outcomes.push_back({"U1", false, Genuineness::genuine});
    for (int i = 0; i < 16; ++i) outcomes.push_back({"U1", false, Genuineness::forgery});
    for (int i = 0; i < 4; ++i) outcomes.push_back({"U1", true, Genuineness::forgery});
    const RatesReport fixed = evaluate(outcomes);
    const bool fixed_ok = fixed.users.size() == 1 && fixed.users[0].far == 10.0 &&
                          fixed.users[0].frr == 10.0 && fixed.users[0].rate == 80.0;

    Rng rng(4242);
    int identity_violations = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<TestOutcome> random_outcomes;
        const int users = 1 + static_cast<int>(rng.index(4));
        for (int u = 0; u < users; ++u) {
            const int tests = 1 + static_cast<int>(rng.index(60));
            for (int t = 0; t < tests; ++t)
                random_outcomes.push_back(
                    {"U" + std::to_string(u + 1), rng.uniform01() < 0.5,
                     rng.uniform01() < 0.5 ? Genuineness::genuine : Genuineness::forgery});
        }
        const RatesReport r = evaluate(random_outcomes);
        for (const auto& u : r.users)
            if (u.rate != 100.0 - u.far - u.frr) ++identity_violations;
        if (r.avg_rate != 100.0 - r.avg_far - r.avg_frr) ++identity_violations;
    }
    char buf[200];
    std::snprintf(buf, sizeof buf,
                  "4 FA / 4 FR / 40 tests -> FAR %g FRR %g rate %g; %d identity violations in 1000 reports",
                  fixed.users.empty() ? -1.0 : fixed.users[0].far,
                  fixed.users.empty() ? -1.0 : fixed.users[0].frr,
                  fixed.users.empty() ? -1.0 : fixed.users[0].rate, identity_violations);
    report("rate-accounting", fixed_ok && identity_violations == 0, buf);
}

// 7. Full verification protocol on the real corpus, when present.
void check_corpus_protocol() {
    const char* dir = std::getenv("SVC2004_TASK2_DIR");
    if (dir == nullptr || *dir == '\0') {
        report_skip("signature-protocol", "set SVC2004_TASK2_DIR to run against the real corpus");
        return;
    }
    const auto t0 = std::chrono::steady_clock::now();
    const Corpus corpus = scan_corpus(dir, 20);
    ProtocolConfig cfg;
    cfg.jobs = 0;  // all cores; per-user seeding keeps the result identical
    const ProtocolResult result = run_protocol(corpus, cfg);
    const double elapsed = seconds_since(t0);
    const double rate = result.report.avg_rate;
    char buf[200];
    std::snprintf(buf, sizeof buf,
                  "%zu users, average rate %.2f%% (expect 94.5 +- 5), FAR %.2f%% FRR %.2f%%, %.0fs",
                  result.report.users.size(), rate, result.report.avg_far, result.report.avg_frr,
                  elapsed);
    report("signature-protocol",
           std::abs(rate - 94.5) <= 5.0 && elapsed < 600.0 && !result.report.users.empty(), buf);
}

// 8. Per-signature normalization: zero mean, unit population variance,
//    constant columns zeroed, tangent angles inside (-pi, pi].
void check_normalization() {
    int bad = 0;
    for (int i = 0; i < 100; ++i) {
        const int user = 1 + i / 10;
        const int index = 1 + i % 10;
        const RawSignature raw = fixture::make_signature(user, index, i % 2 == 0);
        const FeatureSequence seq = build_feature_sequence(raw);
        const double pi = 3.14159265358979323846;
        for (Eigen::Index t = 0; t < seq.frames.rows(); ++t) {
            const double theta = seq.frames(t, 4);
            if (!(theta > -pi && theta <= pi)) ++bad;
        }
        const FeatureSequence norm = normalize(seq);
        const Eigen::Index n = norm.frames.rows();
        for (int c = 0; c < kFeatureDim; ++c) {
            const auto col = norm.frames.col(c);
            if (norm.per_dim_stats[static_cast<std::size_t>(c)].stddev == 0.0) {
                if (col.cwiseAbs().maxCoeff() != 0.0) ++bad;
                continue;
            }
            if (std::abs(col.mean()) > 1e-9) ++bad;
            const double var = col.squaredNorm() / static_cast<double>(n);
            if (std::abs(std::sqrt(var) - 1.0) > 1e-9) ++bad;
        }
    }
    char buf[120];
    std::snprintf(buf, sizeof buf, "100 signatures, %d property violations", bad);
    report("feature-normalization", bad == 0, buf);
}

}  // namespace

int main() {
    check_em_equivalence();
    check_monotonicity();
    check_objective_agreement();
    check_model_order_recovery();
    check_dtw_exactness();
    check_rate_accounting();
    check_corpus_protocol();
    check_normalization();
    if (g_failures > 0) {
        std::printf("%d criteria failed\n", g_failures);
        return 1;
    }
    std::printf("all criteria satisfied\n");
    return 0;
}
