#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <regex>
#include <string>
#include <vector>

#include "sigverify/errors.hpp"
#include "sigverify/raw_signature.hpp"
#include "sigverify/svc2004.hpp"

namespace sigverify {

// One file in a corpus laid out as UxxSyy.TXT (case-insensitive), where xx is
// the user number and yy the 1-based signature index within that user.
struct SignatureFile {
    std::string path;
    std::string user_id;  // canonical "U<xx>"
    int user_number = 0;
    int sig_index = 0;
    Genuineness label = Genuineness::unknown;
};

struct UserFiles {
    std::string user_id;
    int user_number = 0;
    std::vector<SignatureFile> signatures;  // ascending sig_index
};

struct Corpus {
    std::vector<UserFiles> users;  // ascending user_number
};

// Signatures 1..genuine_count of each user are genuine, the rest forgeries.
inline Genuineness label_for_index(int sig_index, int genuine_count) {
    if (sig_index < 1) throw ArgumentError("signature index must be >= 1");
    if (genuine_count < 0) throw ArgumentError("genuine count must be >= 0");
    return sig_index <= genuine_count ? Genuineness::genuine : Genuineness::forgery;
}

// Scans a directory (non-recursive) for UxxSyy.TXT files and groups them per
// user. Files that do not match the pattern are ignored.
inline Corpus scan_corpus(const std::string& directory, int genuine_count = 20) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(directory))
        throw ArgumentError(directory + ": not a directory");
    if (genuine_count < 0) throw ArgumentError("genuine count must be >= 0");

    static const std::regex name_re(R"(^U(\d+)S(\d+)\.TXT$)", std::regex::icase);

    std::vector<SignatureFile> files;
    for (const auto& entry : fs::directory_iterator(directory)) {
        if (!entry.is_regular_file()) continue;
        const std::string name = entry.path().filename().string();
        std::smatch m;
        if (!std::regex_match(name, m, name_re)) continue;
        SignatureFile f;
        f.path = entry.path().string();
        f.user_number = std::stoi(m[1].str());
        f.sig_index = std::stoi(m[2].str());
        f.user_id = "U" + std::to_string(f.user_number);
        f.label = label_for_index(f.sig_index, genuine_count);
        files.push_back(std::move(f));
    }

    std::sort(files.begin(), files.end(), [](const SignatureFile& a, const SignatureFile& b) {
        if (a.user_number != b.user_number) return a.user_number < b.user_number;
        return a.sig_index < b.sig_index;
    });
    for (std::size_t i = 1; i < files.size(); ++i) {
        if (files[i].user_number == files[i - 1].user_number &&
            files[i].sig_index == files[i - 1].sig_index)
            throw ParseError(files[i].path + ": duplicate signature index for user " +
                             files[i].user_id);
    }

    Corpus corpus;
    for (auto& f : files) {
        if (corpus.users.empty() || corpus.users.back().user_number != f.user_number) {
            UserFiles u;
            u.user_id = f.user_id;
            u.user_number = f.user_number;
            corpus.users.push_back(std::move(u));
        }
        corpus.users.back().signatures.push_back(std::move(f));
    }
    return corpus;
}

inline RawSignature load_signature(const SignatureFile& file,
                                   std::vector<std::string>* warnings = nullptr) {
    std::ifstream in(file.path, std::ios::binary);
    if (!in) throw ParseError(file.path + ": cannot open for reading");
    RawSignature sig = parse_svc2004(in, file.path, warnings);
    sig.user_id = file.user_id;
    sig.genuineness = file.label;
    return sig;
}

}  // namespace sigverify
