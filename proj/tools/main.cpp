// Command-line surface: train, verify, evaluate, synth, features.
// Exit codes: 0 success, 1 user error, 2 numeric failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sigverify/sigverify.hpp"

namespace fs = std::filesystem;
using namespace sigverify;

namespace {

struct ProtocolCli {
    std::string data;
    std::string method = "byy";
    int train_genuine = 5;
    int train_forgery = 5;
    int genuine_count = 20;
    double threshold = 2.0;
    double p_f = 0.5;
    std::string aggregation = "mean";
    bool holdout_only = false;
    int jobs = 1;
    std::uint64_t seed = 0;
    AnnealConfig anneal;
    std::vector<int> em_k = {16};
    double em_tol = 1e-6;
    int em_max_iters = 200;
};

void add_anneal_options(CLI::App* cmd, AnnealConfig& a) {
    cmd->add_option("--k-init", a.k_init, "Initial mixture size for annealed fits");
    cmd->add_option("--lambda-init", a.lambda_init, "Starting temperature");
    cmd->add_option("--lambda-decay", a.lambda_decay, "Geometric temperature decay per outer step");
    cmd->add_option("--lambda-min", a.lambda_min, "Final temperature");
    cmd->add_option("--prune-threshold", a.prune_threshold,
                    "Weight below which a component is dropped (0 disables pruning)");
    cmd->add_option("--max-outer", a.max_outer_iters, "Outer (temperature) iteration cap");
    cmd->add_option("--max-inner", a.max_inner_iters, "Inner iteration cap per temperature");
    cmd->add_option("--tol", a.tol, "Inner convergence tolerance on the objective");
}

void add_protocol_options(CLI::App* cmd, ProtocolCli& o) {
    cmd->add_option("--data", o.data, "Corpus directory of UxxSyy.TXT files")->required();
    cmd->add_option("--method", o.method, "Training method")
        ->check(CLI::IsMember({"byy", "em", "dtw"}));
    cmd->add_option("--train-genuine", o.train_genuine, "Genuine signatures used for training");
    cmd->add_option("--train-forgery", o.train_forgery, "Forgeries used for training");
    cmd->add_option("--genuine-count", o.genuine_count,
                    "Signatures 1..N of each user are genuine");
    cmd->add_option("--threshold", o.threshold, "Accept when the likelihood ratio is >= this");
    cmd->add_option("--p-f", o.p_f, "Prior probability of forgery");
    cmd->add_option("--aggregation", o.aggregation, "Per-frame log-density aggregation")
        ->check(CLI::IsMember({"mean", "sum"}));
    cmd->add_option("--jobs", o.jobs, "Concurrent user jobs (0 = hardware threads)");
    cmd->add_option("--seed", o.seed, "Base seed; each user model derives a fixed stream");
    add_anneal_options(cmd, o.anneal);
    cmd->add_option("--em-k", o.em_k, "EM component count; a list sweeps several")
        ->delimiter(',');
    cmd->add_option("--em-tol", o.em_tol, "EM convergence tolerance");
    cmd->add_option("--em-max-iters", o.em_max_iters, "EM iteration cap");
}

Method method_from_string(const std::string& s) {
    if (s == "byy") return Method::byy;
    if (s == "em") return Method::em;
    if (s == "dtw") return Method::dtw;
    throw ArgumentError("unknown method: " + s);
}

ProtocolConfig to_config(const ProtocolCli& o, int em_k) {
    ProtocolConfig cfg;
    cfg.method = method_from_string(o.method);
    cfg.anneal = o.anneal;
    cfg.em.k = em_k;
    cfg.em.tol = o.em_tol;
    cfg.em.max_iters = o.em_max_iters;
    cfg.train_genuine = o.train_genuine;
    cfg.train_forgery = o.train_forgery;
    cfg.genuine_count = o.genuine_count;
    cfg.threshold = o.threshold;
    cfg.p_f = o.p_f;
    cfg.aggregation = o.aggregation == "sum" ? Aggregation::sum : Aggregation::mean;
    cfg.holdout_only = o.holdout_only;
    cfg.jobs = o.jobs;
    cfg.seed = o.seed;
    return cfg;
}

void print_defaults() {
    const ProtocolCli o;
    char buf[128];
    auto row = [&](const char* key, const std::string& value) {
        std::snprintf(buf, sizeof buf, "  %-18s %s\n", key, value.c_str());
        std::cout << buf;
    };
    auto num = [](double v) {
        char b[64];
        std::snprintf(b, sizeof b, "%g", v);
        return std::string(b);
    };
    std::cout << "defaults (config file keys match the long option names):\n";
    row("method", o.method);
    row("threshold", num(o.threshold));
    row("p-f", num(o.p_f));
    row("aggregation", o.aggregation);
    row("train-genuine", std::to_string(o.train_genuine));
    row("train-forgery", std::to_string(o.train_forgery));
    row("genuine-count", std::to_string(o.genuine_count));
    row("jobs", std::to_string(o.jobs));
    row("seed", std::to_string(o.seed));
    row("k-init", std::to_string(o.anneal.k_init));
    row("lambda-init", num(o.anneal.lambda_init));
    row("lambda-decay", num(o.anneal.lambda_decay));
    row("lambda-min", num(o.anneal.lambda_min));
    row("prune-threshold", num(o.anneal.prune_threshold));
    row("max-outer", std::to_string(o.anneal.max_outer_iters));
    row("max-inner", std::to_string(o.anneal.max_inner_iters));
    row("tol", num(o.anneal.tol));
    row("em-k", std::to_string(o.em_k.front()));
    row("em-tol", num(o.em_tol));
    row("em-max-iters", std::to_string(o.em_max_iters));
}

void print_warnings(const std::vector<std::string>& warnings) {
    for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
}

void write_traces(const std::string& dir, const ProtocolResult& result) {
    fs::create_directories(dir);
    for (const auto& u : result.users) {
        std::ofstream g(fs::path(dir) / (u.user_id + "_genuine_trace.csv"));
        write_trace_csv(g, u.genuine_trace);
        std::ofstream f(fs::path(dir) / (u.user_id + "_forgery_trace.csv"));
        write_trace_csv(f, u.forgery_trace);
    }
}

void save_models(const std::string& dir, const ProtocolResult& result, Method method) {
    fs::create_directories(dir);
    for (const auto& u : result.users) {
        const std::string path = (fs::path(dir) / (u.user_id + ".json")).string();
        if (method == Method::dtw)
            save_dtw_enrollment(path, u.user_id, u.enrollment);
        else
            save_user_models(path, u.pair, to_string(method));
    }
}

// "report.csv" with k=8 -> "report_k8.csv".
std::string with_k_suffix(const std::string& path, int k) {
    const fs::path p(path);
    fs::path out = p.parent_path() / (p.stem().string() + "_k" + std::to_string(k));
    out += p.extension();
    return out.string();
}

int run_train(const ProtocolCli& o, const std::string& out_dir, const std::string& trace_dir) {
    if (o.method == "em" && o.em_k.size() != 1)
        throw ArgumentError("train uses a single EM component count");
    const Corpus corpus = scan_corpus(o.data, o.genuine_count);
    const ProtocolConfig cfg = to_config(o, o.em_k.front());
    const ProtocolResult result = run_protocol(corpus, cfg);
    print_warnings(result.warnings);
    save_models(out_dir, result, cfg.method);
    if (!trace_dir.empty() && cfg.method == Method::byy) write_traces(trace_dir, result);
    std::cout << "trained " << result.users.size() << " users -> " << out_dir << "\n";
    return 0;
}

int run_evaluate(const ProtocolCli& o, const std::string& report_path,
                 const std::string& scores_path, const std::string& trace_dir,
                 const std::string& models_dir) {
    const Corpus corpus = scan_corpus(o.data, o.genuine_count);
    const bool sweep = o.method == "em" && o.em_k.size() > 1;
    struct SweepRow {
        int k;
        double far, frr, rate;
    };
    std::vector<SweepRow> sweep_rows;

    const std::vector<int> ks = o.method == "em" ? o.em_k : std::vector<int>{0};
    for (const int k : ks) {
        const ProtocolConfig cfg = to_config(o, k == 0 ? 16 : k);
        const ProtocolResult result = run_protocol(corpus, cfg);
        print_warnings(result.warnings);
        if (sweep) std::cout << "== em k=" << k << " ==\n";
        write_report_table(std::cout, result.report);

        if (!report_path.empty()) {
            std::ofstream out(sweep ? with_k_suffix(report_path, k) : report_path);
            if (!out) throw ParseError(report_path + ": cannot open for writing");
            write_report_csv(out, result.report);
        }
        if (!scores_path.empty()) {
            std::vector<ScoreRecord> all;
            for (const auto& u : result.users)
                all.insert(all.end(), u.scores.begin(), u.scores.end());
            std::ofstream out(sweep ? with_k_suffix(scores_path, k) : scores_path);
            if (!out) throw ParseError(scores_path + ": cannot open for writing");
            write_scores_csv(out, all);
        }
        if (!trace_dir.empty() && cfg.method == Method::byy) write_traces(trace_dir, result);
        if (!models_dir.empty())
            save_models(sweep ? with_k_suffix(models_dir, k) : models_dir, result, cfg.method);
        if (sweep)
            sweep_rows.push_back({k, result.report.avg_far, result.report.avg_frr,
                                  result.report.avg_rate});
    }

    if (sweep) {
        char buf[128];
        std::cout << "== em sweep ==\n";
        std::snprintf(buf, sizeof buf, "%6s %10s %10s %10s\n", "k", "FAR(%)", "FRR(%)", "rate(%)");
        std::cout << buf;
        for (const auto& r : sweep_rows) {
            std::snprintf(buf, sizeof buf, "%6d %10.4f %10.4f %10.4f\n", r.k, r.far, r.frr, r.rate);
            std::cout << buf;
        }
    }
    return 0;
}

int run_verify(const std::string& models_path, const std::vector<std::string>& sig_paths,
               double threshold, const std::string& aggregation) {
    const nlohmann::json peek = sigverify::detail::read_json_file(models_path);
    const std::string method = peek.value("method", "");
    char buf[512];
    if (method == "dtw") {
        const LoadedDtwEnrollment loaded = load_dtw_enrollment(models_path);
        for (const auto& path : sig_paths) {
            std::ifstream in(path, std::ios::binary);
            if (!in) throw ParseError(path + ": cannot open for reading");
            std::vector<std::string> warnings;
            const RawSignature sig = parse_svc2004(in, path, &warnings);
            print_warnings(warnings);
            const DtwDecision d = dtw_verify(sig, loaded.enrollment);
            std::snprintf(buf, sizeof buf, "%s distance=%.6f threshold=%.6f decision=%s\n",
                          path.c_str(), d.distance, loaded.enrollment.threshold,
                          d.accept ? "accept" : "reject");
            std::cout << buf;
        }
        return 0;
    }
    const LoadedUserModels loaded = load_user_models(models_path);
    const Aggregation agg = aggregation == "sum" ? Aggregation::sum : Aggregation::mean;
    for (const auto& path : sig_paths) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw ParseError(path + ": cannot open for reading");
        std::vector<std::string> warnings;
        const RawSignature sig = parse_svc2004(in, path, &warnings);
        print_warnings(warnings);
        const FeatureSequence seq = normalize(build_feature_sequence(sig));
        const double score = signature_score(seq, loaded.pair, agg);
        const bool accept = decide(score, threshold) == Decision::accept;
        std::snprintf(buf, sizeof buf, "%s ln_score=%.6f decision=%s\n", path.c_str(), score,
                      accept ? "accept" : "reject");
        std::cout << buf;
    }
    return 0;
}

int run_synth(const std::string& spec_path, int seeds, const AnnealConfig& anneal,
              const std::string& dump_prefix) {
    if (seeds < 1) throw ArgumentError("--seeds must be at least 1");
    const SyntheticSpec base = load_synthetic_spec(spec_path);
    const int true_k = static_cast<int>(base.components.size());
    int recovered = 0;
    for (int i = 0; i < seeds; ++i) {
        SyntheticSpec spec = base;
        spec.seed = base.seed + static_cast<std::uint64_t>(i);
        const SyntheticSample sample = generate_mixture_samples(spec);
        if (!dump_prefix.empty()) {
            std::ofstream out(dump_prefix + "_seed" + std::to_string(spec.seed) + ".csv");
            for (Eigen::Index r = 0; r < sample.data.rows(); ++r) {
                for (Eigen::Index c = 0; c < sample.data.cols(); ++c)
                    out << (c ? "," : "") << sample.data(r, c);
                out << "," << sample.labels[static_cast<std::size_t>(r)] << "\n";
            }
        }
        AnnealConfig cfg = anneal;
        cfg.seed = spec.seed;
        const AnnealResult fit = anneal_fit(sample.data, cfg);
        const int k = static_cast<int>(fit.model.component_count());
        std::cout << "seed " << spec.seed << ": k=" << k << "\n";
        if (k == true_k) ++recovered;
    }
    std::cout << "recovered k=" << true_k << " in " << recovered << "/" << seeds << " runs\n";
    return 0;
}

int run_features(const std::string& input, const std::string& out_path, bool raw) {
    std::ifstream in(input, std::ios::binary);
    if (!in) throw ParseError(input + ": cannot open for reading");
    std::vector<std::string> warnings;
    const RawSignature sig = parse_svc2004(in, input, &warnings);
    print_warnings(warnings);
    FeatureSequence seq = build_feature_sequence(sig);
    if (!raw) seq = normalize(seq);
    if (out_path.empty()) {
        write_feature_csv(std::cout, seq);
    } else {
        std::ofstream out(out_path);
        if (!out) throw ParseError(out_path + ": cannot open for writing");
        write_feature_csv(out, seq);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"On-line signature verification: annealed harmony mixture learning with EM and DTW baselines"};
    app.set_config("--config", "", "Read options from a key=value config file");
    bool show_defaults = false;
    app.add_flag("--show-defaults", show_defaults, "Print the defaults table and exit");
    app.require_subcommand(0, 1);

    ProtocolCli train_opts;
    std::string train_out, train_trace_dir;
    CLI::App* train = app.add_subcommand("train", "Fit per-user models and save them");
    add_protocol_options(train, train_opts);
    train->add_option("--out", train_out, "Directory for per-user model files")->required();
    train->add_option("--trace-dir", train_trace_dir, "Write per-user fit traces (byy only)");

    ProtocolCli eval_opts;
    std::string eval_report, eval_scores, eval_trace_dir, eval_models_dir;
    CLI::App* evaluate = app.add_subcommand("evaluate", "Run the train/score protocol and report rates");
    add_protocol_options(evaluate, eval_opts);
    evaluate->add_flag("--holdout-only", eval_opts.holdout_only,
                       "Score only signatures not used for training");
    evaluate->add_option("--report", eval_report, "Write the rates report CSV here");
    evaluate->add_option("--scores-csv", eval_scores, "Write per-signature scores CSV here");
    evaluate->add_option("--trace-dir", eval_trace_dir, "Write per-user fit traces (byy only)");
    evaluate->add_option("--save-models", eval_models_dir, "Also save per-user model files here");

    std::string verify_models, verify_agg = "mean";
    std::vector<std::string> verify_sigs;
    double verify_threshold = 2.0;
    CLI::App* verify = app.add_subcommand("verify", "Score signature files against a stored user");
    verify->add_option("--models", verify_models, "Per-user model file from train")->required();
    verify->add_option("signatures", verify_sigs, "Signature files to score")->required();
    verify->add_option("--threshold", verify_threshold, "Accept when the likelihood ratio is >= this");
    verify->add_option("--aggregation", verify_agg, "Per-frame log-density aggregation")
        ->check(CLI::IsMember({"mean", "sum"}));

    std::string synth_spec, synth_dump;
    int synth_seeds = 10;
    AnnealConfig synth_anneal;
    CLI::App* synth = app.add_subcommand("synth", "Model-order recovery experiment on generated data");
    synth->add_option("--spec", synth_spec, "Ground-truth mixture JSON")->required();
    synth->add_option("--seeds", synth_seeds, "Number of generation/fit runs");
    synth->add_option("--dump-csv", synth_dump, "Write generated samples to <prefix>_seed<N>.csv");
    add_anneal_options(synth, synth_anneal);

    std::string feat_input, feat_out;
    bool feat_raw = false;
    CLI::App* features = app.add_subcommand("features", "Dump the feature matrix of a signature file");
    features->add_option("input", feat_input, "Signature file")->required();
    features->add_option("--out", feat_out, "Output CSV (stdout when omitted)");
    features->add_flag("--raw", feat_raw, "Skip per-signature normalization");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (show_defaults) {
            print_defaults();
            return 0;
        }
        if (app.got_subcommand(train)) return run_train(train_opts, train_out, train_trace_dir);
        if (app.got_subcommand(evaluate))
            return run_evaluate(eval_opts, eval_report, eval_scores, eval_trace_dir,
                                eval_models_dir);
        if (app.got_subcommand(verify))
            return run_verify(verify_models, verify_sigs, verify_threshold, verify_agg);
        if (app.got_subcommand(synth))
            return run_synth(synth_spec, synth_seeds, synth_anneal, synth_dump);
        if (app.got_subcommand(features)) return run_features(feat_input, feat_out, feat_raw);
        std::cerr << app.help();
        return 1;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 2;
    } catch (const ArgumentError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
