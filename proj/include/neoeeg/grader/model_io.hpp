#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "neoeeg/grader/cascade.hpp"
#include "neoeeg/util.hpp"

namespace neoeeg::grader {

inline constexpr int kModelSchemaVersion = 1;

inline nlohmann::json to_json(const GraderCascade& m) {
    nlohmann::json stages = nlohmann::json::array();
    for (const auto& s : m.stages)
        stages.push_back({{"grade", s.grade},
                          {"weights", s.svm.weights},
                          {"bias", s.svm.bias},
                          {"C", s.svm.C},
                          {"iterations", s.svm.iterations},
                          {"platt", {{"a", s.platt.a}, {"b", s.platt.b}}}});
    return {{"schema_version", kModelSchemaVersion},
            {"feature_names", m.feature_names},
            {"normalization", {{"median", m.normalization.median}, {"iqr", m.normalization.iqr}, {"log_scale", m.normalization.log_scale}}},
            {"stages", stages}};
}

inline GraderCascade cascade_from_json(const nlohmann::json& j) {
    try {
        if (j.at("schema_version").get<int>() != kModelSchemaVersion)
            throw PredictError("unsupported model schema version");
        GraderCascade m;
        m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
        m.normalization.median = j.at("normalization").at("median").get<std::vector<double>>();
        m.normalization.iqr = j.at("normalization").at("iqr").get<std::vector<double>>();
        m.normalization.log_scale =
            j.at("normalization").value("log_scale", std::vector<bool>(m.feature_names.size(), false));
        for (const auto& s : j.at("stages")) {
            Stage st;
            st.grade = s.at("grade").get<int>();
            st.svm.weights = s.at("weights").get<std::vector<double>>();
            st.svm.bias = s.at("bias").get<double>();
            st.svm.C = s.at("C").get<double>();
            st.svm.iterations = s.value("iterations", std::size_t{0});
            st.platt.a = s.at("platt").at("a").get<double>();
            st.platt.b = s.at("platt").at("b").get<double>();
            if (st.svm.weights.size() != m.feature_names.size()) throw PredictError("stage weight count mismatch");
            m.stages.push_back(std::move(st));
        }
        if (m.normalization.median.size() != m.feature_names.size() || m.normalization.iqr.size() != m.feature_names.size() ||
            m.normalization.log_scale.size() != m.feature_names.size())
            throw PredictError("normalization size mismatch");
        if (m.stages.size() != 3) throw PredictError("model must have exactly three stages");
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw PredictError(std::string("malformed model file: ") + e.what());
    }
}

inline void save_model(const GraderCascade& m, const std::filesystem::path& path) {
    atomic_write(path, to_json(m).dump(2) + "\n");
}

inline GraderCascade load_model(const std::filesystem::path& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_text_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw PredictError(std::string("model file is not valid JSON: ") + e.what());
    }
    return cascade_from_json(j);
}

}  // namespace neoeeg::grader
