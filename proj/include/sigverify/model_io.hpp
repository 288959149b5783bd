#pragma once

#include <algorithm>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "sigverify/dtw.hpp"
#include "sigverify/errors.hpp"
#include "sigverify/mixture.hpp"
#include "sigverify/synthetic.hpp"
#include "sigverify/verify.hpp"

namespace sigverify {

// Models are stored as JSON with sorted keys and shortest round-trip number
// formatting, so save -> load -> save reproduces the file byte for byte.

inline nlohmann::json model_to_json(const MixtureModel& model) {
    nlohmann::json j;
    j["dim"] = model.dim();
    nlohmann::json comps = nlohmann::json::array();
    for (const auto& c : model.components) {
        nlohmann::json jc;
        jc["weight"] = c.weight;
        jc["mean"] = std::vector<double>(c.mean.data(), c.mean.data() + c.mean.size());
        nlohmann::json rows = nlohmann::json::array();
        for (Eigen::Index r = 0; r < c.cov.rows(); ++r) {
            std::vector<double> row(c.cov.cols());
            for (Eigen::Index cc = 0; cc < c.cov.cols(); ++cc) row[cc] = c.cov(r, cc);
            rows.push_back(row);
        }
        jc["cov"] = rows;
        comps.push_back(jc);
    }
    j["components"] = comps;
    return j;
}

inline MixtureModel model_from_json(const nlohmann::json& j) {
    MixtureModel model;
    const auto dim = j.at("dim").get<Eigen::Index>();
    if (dim <= 0) throw ParseError("model dimension must be positive");
    for (const auto& jc : j.at("components")) {
        GaussianComponent c;
        c.weight = jc.at("weight").get<double>();
        const auto mean = jc.at("mean").get<std::vector<double>>();
        if (static_cast<Eigen::Index>(mean.size()) != dim)
            throw ParseError("component mean length disagrees with model dimension");
        c.mean = Eigen::Map<const Eigen::VectorXd>(mean.data(), dim);
        c.cov.resize(dim, dim);
        const auto& rows = jc.at("cov");
        if (static_cast<Eigen::Index>(rows.size()) != dim)
            throw ParseError("component covariance row count disagrees with model dimension");
        for (Eigen::Index r = 0; r < dim; ++r) {
            const auto row = rows.at(r).get<std::vector<double>>();
            if (static_cast<Eigen::Index>(row.size()) != dim)
                throw ParseError("component covariance is not square");
            for (Eigen::Index cc = 0; cc < dim; ++cc) c.cov(r, cc) = row[cc];
        }
        model.components.push_back(std::move(c));
    }
    if (model.components.empty()) throw ParseError("model has no components");
    return model;
}

namespace detail {

inline nlohmann::json read_json_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError(path + ": cannot open for reading");
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
}

inline void write_json_file(const std::string& path, const nlohmann::json& j) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError(path + ": cannot open for writing");
    out << j.dump(2) << '\n';
    if (!out) throw ParseError(path + ": write failed");
}

}  // namespace detail

// Mixture-based user file: both models plus the forgery prior.
inline void save_user_models(const std::string& path, const UserModelPair& pair,
                             const std::string& method) {
    nlohmann::json j;
    j["user"] = pair.user_id;
    j["method"] = method;
    j["p_f"] = pair.p_f;
    j["genuine"] = model_to_json(pair.theta_c);
    j["forgery"] = model_to_json(pair.theta_bar);
    detail::write_json_file(path, j);
}

struct LoadedUserModels {
    UserModelPair pair;
    std::string method;
};

inline LoadedUserModels load_user_models(const std::string& path) {
    const nlohmann::json j = detail::read_json_file(path);
    LoadedUserModels loaded;
    try {
        loaded.pair.user_id = j.at("user").get<std::string>();
        loaded.method = j.at("method").get<std::string>();
        loaded.pair.p_f = j.at("p_f").get<double>();
        loaded.pair.theta_c = model_from_json(j.at("genuine"));
        loaded.pair.theta_bar = model_from_json(j.at("forgery"));
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
    try {
        validate(loaded.pair);
    } catch (const ArgumentError& e) {
        throw ParseError(path + ": " + e.what());
    }
    return loaded;
}

// Ground-truth mixture description for generated datasets:
// {"components": [{"weight", "mean", "cov"}], "sample_count", "seed"}.
inline SyntheticSpec load_synthetic_spec(const std::string& path) {
    const nlohmann::json j = detail::read_json_file(path);
    SyntheticSpec spec;
    try {
        spec.sample_count = j.at("sample_count").get<int>();
        spec.seed = j.value("seed", std::uint64_t{0});
        for (const auto& jc : j.at("components")) {
            SyntheticComponent c;
            c.weight = jc.at("weight").get<double>();
            const auto mean = jc.at("mean").get<std::vector<double>>();
            c.mean = Eigen::Map<const Eigen::VectorXd>(mean.data(),
                                                       static_cast<Eigen::Index>(mean.size()));
            const auto& rows = jc.at("cov");
            const auto dim = static_cast<Eigen::Index>(mean.size());
            c.cov.resize(dim, dim);
            if (static_cast<Eigen::Index>(rows.size()) != dim)
                throw ParseError("covariance row count disagrees with mean length");
            for (Eigen::Index r = 0; r < dim; ++r) {
                const auto row = rows.at(r).get<std::vector<double>>();
                if (static_cast<Eigen::Index>(row.size()) != dim)
                    throw ParseError("covariance is not square");
                for (Eigen::Index cc = 0; cc < dim; ++cc) c.cov(r, cc) = row[cc];
            }
            spec.components.push_back(std::move(c));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
    try {
        validate(spec);
    } catch (const ArgumentError& e) {
        throw ParseError(path + ": " + e.what());
    }
    return spec;
}

// Distance-baseline user file: the two envelope vectors and the acceptance
// threshold.
inline void save_dtw_enrollment(const std::string& path, const std::string& user,
                                const DtwEnrollment& enr) {
    nlohmann::json j;
    j["user"] = user;
    j["method"] = "dtw";
    nlohmann::json je;
    je["v_s"] = std::vector<double>(enr.v_s.begin(), enr.v_s.end());
    je["v_b"] = std::vector<double>(enr.v_b.begin(), enr.v_b.end());
    je["threshold"] = enr.threshold;
    j["enrollment"] = je;
    detail::write_json_file(path, j);
}

struct LoadedDtwEnrollment {
    std::string user;
    DtwEnrollment enrollment;
};

inline LoadedDtwEnrollment load_dtw_enrollment(const std::string& path) {
    const nlohmann::json j = detail::read_json_file(path);
    LoadedDtwEnrollment loaded;
    try {
        loaded.user = j.at("user").get<std::string>();
        if (j.at("method").get<std::string>() != "dtw")
            throw ParseError(path + ": file does not hold a dtw enrollment");
        const auto& je = j.at("enrollment");
        const auto vs = je.at("v_s").get<std::vector<double>>();
        const auto vb = je.at("v_b").get<std::vector<double>>();
        if (vs.size() != kGlobalFeatureCount || vb.size() != kGlobalFeatureCount)
            throw ParseError(path + ": enrollment vectors must have " +
                             std::to_string(kGlobalFeatureCount) + " entries");
        std::copy(vs.begin(), vs.end(), loaded.enrollment.v_s.begin());
        std::copy(vb.begin(), vb.end(), loaded.enrollment.v_b.begin());
        loaded.enrollment.threshold = je.at("threshold").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
    return loaded;
}

}  // namespace sigverify
