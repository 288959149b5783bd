// End-to-end checks of the command line tool; each case shells out to the
// built binary (path injected by the build as SIGVERIFY_CLI_PATH).
#include <algorithm>
#include <catch2/catch_amalgamated.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "corpus_fixture.hpp"

namespace fs = std::filesystem;

namespace {

struct CliResult {
    int code = -1;
    std::string output;  // stdout and stderr combined
};

CliResult run_cli(const std::string& args) {
    static int counter = 0;
    const fs::path log =
        fs::temp_directory_path() / ("sigverify_cli_log_" + std::to_string(counter++) + ".txt");
    const std::string cmd =
        std::string(SIGVERIFY_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    CliResult r;
    if (status != -1 && WIFEXITED(status)) r.code = WEXITSTATUS(status);
    std::ifstream in(log);
    std::ostringstream os;
    os << in.rdbuf();
    r.output = os.str();
    return r;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.is_open());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

// Two-user corpus plus the protocol flags that match its layout.
const fs::path& corpus_dir() {
    static const fs::path dir = [] {
        const fs::path d = fixture::fresh_temp_dir("cli_corpus");
        fixture::write_corpus(d, {1, 2}, 8, 16);
        return d;
    }();
    return dir;
}

std::string corpus_flags() {
    return "--data " + corpus_dir().string() +
           " --genuine-count 8 --train-genuine 4 --train-forgery 4 --k-init 6 --seed 7";
}

}  // namespace

TEST_CASE("cli prints its defaults") {
    const CliResult r = run_cli("--show-defaults");
    CHECK(r.code == 0);
    CHECK(r.output.find("method") != std::string::npos);
    CHECK(r.output.find("threshold") != std::string::npos);
    CHECK(r.output.find("2") != std::string::npos);
    CHECK(r.output.find("k-init") != std::string::npos);
    CHECK(r.output.find("32") != std::string::npos);
    CHECK(r.output.find("lambda-decay") != std::string::npos);
    CHECK(r.output.find("0.9") != std::string::npos);
    CHECK(r.output.find("prune-threshold") != std::string::npos);
    CHECK(r.output.find("train-genuine") != std::string::npos);
}

TEST_CASE("cli without a subcommand explains itself and fails") {
    const CliResult r = run_cli("");
    CHECK(r.code == 1);
    CHECK(r.output.find("train") != std::string::npos);
    CHECK(r.output.find("evaluate") != std::string::npos);
}

TEST_CASE("train then verify round trip") {
    const fs::path models = fixture::fresh_temp_dir("cli_models");
    const CliResult train =
        run_cli("train " + corpus_flags() + " --out " + models.string());
    INFO(train.output);
    REQUIRE(train.code == 0);
    CHECK(train.output.find("trained 2 users -> " + models.string()) != std::string::npos);
    REQUIRE(fs::exists(models / "U1.json"));
    REQUIRE(fs::exists(models / "U2.json"));

    SECTION("a training genuine signature is accepted") {
        const CliResult v = run_cli("verify --models " + (models / "U1.json").string() + " " +
                                    (corpus_dir() / "U1S1.TXT").string());
        INFO(v.output);
        CHECK(v.code == 0);
        CHECK(v.output.find("ln_score=") != std::string::npos);
        CHECK(v.output.find("decision=accept") != std::string::npos);
    }
    SECTION("a forgery is rejected") {
        const CliResult v = run_cli("verify --models " + (models / "U1.json").string() + " " +
                                    (corpus_dir() / "U1S16.TXT").string());
        INFO(v.output);
        CHECK(v.code == 0);
        CHECK(v.output.find("decision=reject") != std::string::npos);
    }
    SECTION("model files are deterministic") {
        const fs::path again = fixture::fresh_temp_dir("cli_models_again");
        const CliResult rerun =
            run_cli("train " + corpus_flags() + " --out " + again.string());
        REQUIRE(rerun.code == 0);
        CHECK(slurp(again / "U1.json") == slurp(models / "U1.json"));
        CHECK(slurp(again / "U2.json") == slurp(models / "U2.json"));
    }
}

TEST_CASE("evaluate writes the rates report") {
    const fs::path dir = fixture::fresh_temp_dir("cli_eval");
    const fs::path report = dir / "report.csv";
    const fs::path scores = dir / "scores.csv";
    const CliResult r = run_cli("evaluate " + corpus_flags() + " --report " + report.string() +
                                " --scores-csv " + scores.string());
    INFO(r.output);
    REQUIRE(r.code == 0);

    const std::string csv = slurp(report);
    CHECK(csv.rfind("user,FA,FR,total,FAR,FRR,rate,FAR_per_class,FRR_per_class\n", 0) == 0);
    CHECK(csv.find("\nU1,") != std::string::npos);
    CHECK(csv.find("\nU2,") != std::string::npos);
    CHECK(csv.find("\nAVERAGE,") != std::string::npos);

    const std::string sc = slurp(scores);
    CHECK(sc.rfind("user,signature,label,score,decision\n", 0) == 0);
    // 2 users x 16 signatures + header
    CHECK(std::count(sc.begin(), sc.end(), '\n') == 33);

    SECTION("identical runs produce identical bytes") {
        const fs::path report2 = dir / "report2.csv";
        const CliResult r2 = run_cli("evaluate " + corpus_flags() + " --jobs 2 --report " +
                                     report2.string());
        REQUIRE(r2.code == 0);
        CHECK(slurp(report2) == csv);
    }
}

TEST_CASE("evaluate sweeps over em model orders") {
    const fs::path dir = fixture::fresh_temp_dir("cli_sweep");
    const fs::path report = dir / "report.csv";
    const CliResult r = run_cli("evaluate " + corpus_flags() + " --method em --em-k 2,3 " +
                                "--report " + report.string());
    INFO(r.output);
    REQUIRE(r.code == 0);
    CHECK(r.output.find("== em sweep ==") != std::string::npos);
    CHECK(fs::exists(dir / "report_k2.csv"));
    CHECK(fs::exists(dir / "report_k3.csv"));
}

TEST_CASE("dtw method end to end") {
    const fs::path models = fixture::fresh_temp_dir("cli_dtw");
    const CliResult train = run_cli("train " + corpus_flags() + " --method dtw --out " +
                                    models.string());
    INFO(train.output);
    REQUIRE(train.code == 0);
    const CliResult v = run_cli("verify --models " + (models / "U1.json").string() + " " +
                                (corpus_dir() / "U1S2.TXT").string());
    INFO(v.output);
    CHECK(v.code == 0);
    CHECK(v.output.find("distance=") != std::string::npos);
    CHECK(v.output.find("threshold=") != std::string::npos);
}

TEST_CASE("synth reports recovered model orders") {
    const fs::path dir = fixture::fresh_temp_dir("cli_synth");
    const fs::path spec = dir / "spec.json";
    std::ofstream(spec) << R"({
        "components": [
            {"weight": 0.5, "mean": [0, 0], "cov": [[0.5, 0], [0, 0.5]]},
            {"weight": 0.5, "mean": [6, 6], "cov": [[0.5, 0], [0, 0.5]]}
        ],
        "sample_count": 400,
        "seed": 3
    })";
    const CliResult r = run_cli("synth --spec " + spec.string() + " --seeds 2 --k-init 6");
    INFO(r.output);
    REQUIRE(r.code == 0);
    CHECK(r.output.find("seed 3: k=") != std::string::npos);
    CHECK(r.output.find("seed 4: k=") != std::string::npos);
    CHECK(r.output.find("recovered k=2 in 2/2 runs") != std::string::npos);
}

TEST_CASE("features dumps the normalized matrix") {
    const CliResult r = run_cli("features " + (corpus_dir() / "U1S1.TXT").string());
    REQUIRE(r.code == 0);
    CHECK(r.output.rfind("x,y,p,v,theta\n", 0) == 0);
    // header + one row per sample
    CHECK(std::count(r.output.begin(), r.output.end(), '\n') == 81);

    const fs::path out = fixture::fresh_temp_dir("cli_feat") / "feat.csv";
    const CliResult w = run_cli("features " + (corpus_dir() / "U1S1.TXT").string() + " --raw" +
                                " --out " + out.string());
    REQUIRE(w.code == 0);
    CHECK(slurp(out).rfind("x,y,p,v,theta\n", 0) == 0);
}

TEST_CASE("cli exit codes distinguish usage and data problems") {
    SECTION("unknown flag") {
        CHECK(run_cli("evaluate --no-such-flag").code == 1);
    }
    SECTION("missing data directory") {
        const CliResult r = run_cli("evaluate --data /nonexistent/corpus");
        CHECK(r.code == 1);
        CHECK(r.output.find("error:") != std::string::npos);
    }
    SECTION("malformed signature file") {
        const fs::path dir = fixture::fresh_temp_dir("cli_bad");
        std::ofstream(dir / "U1S1.TXT") << "not a count\n";
        const CliResult r = run_cli("features " + (dir / "U1S1.TXT").string());
        CHECK(r.code == 1);
        CHECK(r.output.find("error:") != std::string::npos);
    }
    SECTION("config file supplies options") {
        const fs::path dir = fixture::fresh_temp_dir("cli_cfg");
        const fs::path cfg = dir / "run.cfg";
        std::ofstream(cfg) << "[evaluate]\n"
                           << "data=" << corpus_dir().string() << "\n"
                           << "genuine-count=8\ntrain-genuine=4\ntrain-forgery=4\n"
                           << "k-init=6\nseed=7\n";
        const fs::path report = dir / "report.csv";
        const CliResult r = run_cli("--config " + cfg.string() + " evaluate --report " +
                                    report.string());
        INFO(r.output);
        CHECK(r.code == 0);
        CHECK(fs::exists(report));
    }
}
