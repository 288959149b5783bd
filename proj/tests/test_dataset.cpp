#include <catch2/catch_amalgamated.hpp>
#include <filesystem>
#include <fstream>

#include "corpus_fixture.hpp"
#include "sigverify/dataset.hpp"

using namespace sigverify;
namespace fs = std::filesystem;

TEST_CASE("signature index determines the label") {
    CHECK(label_for_index(1, 20) == Genuineness::genuine);
    CHECK(label_for_index(20, 20) == Genuineness::genuine);
    CHECK(label_for_index(21, 20) == Genuineness::forgery);
    CHECK(label_for_index(40, 20) == Genuineness::forgery);
    CHECK(label_for_index(3, 5) == Genuineness::genuine);
    CHECK(label_for_index(6, 5) == Genuineness::forgery);
    CHECK_THROWS_AS(label_for_index(0, 20), ArgumentError);
}

TEST_CASE("corpus scan finds, labels, and orders signature files") {
    const fs::path dir = fixture::fresh_temp_dir("scan");
    fixture::write_corpus(dir, {2, 10}, 4, 8);
    // decoys that must be ignored
    std::ofstream(dir / "README.txt") << "not a signature\n";
    std::ofstream(dir / "U2S1.dat") << "wrong extension\n";
    fs::create_directories(dir / "nested");
    std::ofstream(dir / "nested" / "U5S1.TXT") << "1\n0 0 0 1 0 0 1\n";

    const Corpus corpus = scan_corpus(dir.string(), 4);
    REQUIRE(corpus.users.size() == 2);
    CHECK(corpus.users[0].user_id == "U2");
    CHECK(corpus.users[0].user_number == 2);
    CHECK(corpus.users[1].user_id == "U10");
    CHECK(corpus.users[1].user_number == 10);

    for (const auto& user : corpus.users) {
        REQUIRE(user.signatures.size() == 8);
        for (std::size_t i = 0; i < 8; ++i) {
            const SignatureFile& f = user.signatures[i];
            CHECK(f.sig_index == static_cast<int>(i) + 1);
            CHECK(f.user_id == user.user_id);
            CHECK(f.label == (f.sig_index <= 4 ? Genuineness::genuine : Genuineness::forgery));
        }
    }

    SECTION("signatures load with the scanned identity attached") {
        const RawSignature raw = load_signature(corpus.users[0].signatures[0]);
        CHECK(raw.user_id == "U2");
        CHECK(raw.genuineness == Genuineness::genuine);
        CHECK(raw.samples.size() == 80);
    }
}

TEST_CASE("corpus scan accepts lowercase file names") {
    const fs::path dir = fixture::fresh_temp_dir("case");
    fixture::write_corpus(dir, {1}, 2, 3);
    fs::rename(dir / "U1S1.TXT", dir / "u1s1.txt");
    const Corpus corpus = scan_corpus(dir.string(), 2);
    REQUIRE(corpus.users.size() == 1);
    CHECK(corpus.users[0].signatures.size() == 3);
}

TEST_CASE("duplicate user and index pairs are an error") {
    const fs::path dir = fixture::fresh_temp_dir("dup");
    fixture::write_corpus(dir, {1}, 2, 3);
    fs::copy_file(dir / "U1S2.TXT", dir / "u1s2.TXT");
    CHECK_THROWS_AS(scan_corpus(dir.string(), 2), ParseError);
}

TEST_CASE("scanning a missing directory fails cleanly") {
    CHECK_THROWS_AS(scan_corpus("/nonexistent/sigverify", 20), ArgumentError);
}

TEST_CASE("an empty directory yields an empty corpus") {
    const fs::path dir = fixture::fresh_temp_dir("empty");
    const Corpus corpus = scan_corpus(dir.string(), 20);
    CHECK(corpus.users.empty());
}
