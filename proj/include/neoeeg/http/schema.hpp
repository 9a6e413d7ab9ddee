#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace neoeeg::http {

/// Checks `value` against a JSON Schema subset: type (string or list), required, properties,
/// additionalProperties (boolean), items, enum, minimum, maximum. Returns the violations found.
inline void schema_check(const nlohmann::json& schema, const nlohmann::json& value, const std::string& path,
                         std::vector<std::string>& out) {
    auto type_ok = [&](const std::string& t) {
        if (t == "object") return value.is_object();
        if (t == "array") return value.is_array();
        if (t == "string") return value.is_string();
        if (t == "integer") return value.is_number_integer();
        if (t == "number") return value.is_number();
        if (t == "boolean") return value.is_boolean();
        if (t == "null") return value.is_null();
        return false;
    };
    if (schema.contains("type")) {
        bool ok = false;
        if (schema["type"].is_array()) {
            for (const auto& t : schema["type"]) ok = ok || type_ok(t.get<std::string>());
        } else {
            ok = type_ok(schema["type"].get<std::string>());
        }
        if (!ok) {
            out.push_back(path + ": expected " + schema["type"].dump() + ", got " + value.type_name());
            return;
        }
    }
    if (schema.contains("enum")) {
        bool found = false;
        for (const auto& e : schema["enum"]) found = found || e == value;
        if (!found) out.push_back(path + ": value " + value.dump() + " not in enum");
    }
    if (value.is_number()) {
        if (schema.contains("minimum") && value.get<double>() < schema["minimum"].get<double>())
            out.push_back(path + ": below minimum");
        if (schema.contains("maximum") && value.get<double>() > schema["maximum"].get<double>())
            out.push_back(path + ": above maximum");
    }
    if (value.is_object()) {
        if (schema.contains("required"))
            for (const auto& r : schema["required"])
                if (!value.contains(r.get<std::string>())) out.push_back(path + ": missing '" + r.get<std::string>() + "'");
        const auto props = schema.value("properties", nlohmann::json::object());
        const bool closed = schema.contains("additionalProperties") && schema["additionalProperties"] == false;
        for (const auto& [k, v] : value.items()) {
            if (props.contains(k)) schema_check(props[k], v, path + "." + k, out);
            else if (closed) out.push_back(path + ": unexpected property '" + k + "'");
            else if (schema.contains("additionalProperties") && schema["additionalProperties"].is_object())
                schema_check(schema["additionalProperties"], v, path + "." + k, out);
        }
    }
    if (value.is_array() && schema.contains("items")) {
        for (std::size_t i = 0; i < value.size(); ++i)
            schema_check(schema["items"], value[i], path + "[" + std::to_string(i) + "]", out);
    }
}

inline std::vector<std::string> schema_violations(const nlohmann::json& schema, const nlohmann::json& value) {
    std::vector<std::string> out;
    schema_check(schema, value, "$", out);
    return out;
}

/// Response schemas of the API, keyed by name. Served at GET /schema.
inline const nlohmann::json& api_schemas() {
    static const nlohmann::json schemas = [] {
        using nlohmann::json;
        const json metric = {{"type", "number"}};
        const json metrics = {{"type", "object"},
                              {"required", {"wmcc", "accuracy", "f1", "precision", "recall"}},
                              {"properties",
                               {{"wmcc", metric},
                                {"mcc", metric},
                                {"accuracy", metric},
                                {"f1", metric},
                                {"precision", metric},
                                {"recall", metric},
                                {"kappa", metric}}},
                              {"additionalProperties", false}};
        const json submission = {{"type", "object"},
                                 {"required", {"submission_id", "participant_id", "received_at", "metrics"}},
                                 {"properties",
                                  {{"submission_id", {{"type", "string"}}},
                                   {"participant_id", {{"type", "string"}}},
                                   {"received_at", {{"type", "string"}}},
                                   {"metrics", metrics},
                                   {"best", {{"type", "boolean"}}},
                                   {"ranking_score", metric},
                                   {"remaining_today", {{"type", "integer"}, {"minimum", 0}}}}},
                                 {"additionalProperties", false}};
        const json participant = {{"type", "object"},
                                  {"required", {"participant_id", "display_name", "team", "registered_at"}},
                                  {"properties",
                                   {{"participant_id", {{"type", "string"}}},
                                    {"display_name", {{"type", "string"}}},
                                    {"team", {{"type", "boolean"}}},
                                    {"registered_at", {{"type", "string"}}}}},
                                  {"additionalProperties", false}};
        json registration = participant;
        registration["properties"]["token"] = {{"type", "string"}};
        registration["required"].push_back("token");
        const json competition = {
            {"type", "object"},
            {"required", {"competition_id", "title", "description", "opens_at", "closes_at", "daily_limit",
                          "train_epochs", "test_epochs", "test_epoch_ids", "participants", "submissions",
                          "ranking_hidden"}},
            {"properties",
             {{"competition_id", {{"type", "string"}}},
              {"title", {{"type", "string"}}},
              {"description", {{"type", "string"}}},
              {"opens_at", {{"type", {"string", "null"}}}},
              {"closes_at", {{"type", {"string", "null"}}}},
              {"daily_limit", {{"type", "integer"}, {"minimum", 1}}},
              {"train_epochs", {{"type", "integer"}}},
              {"test_epochs", {{"type", "integer"}}},
              {"test_epoch_ids", {{"type", "array"}, {"items", {{"type", "string"}}}}},
              {"participants", {{"type", "integer"}}},
              {"submissions", {{"type", "integer"}}},
              {"ranking_hidden", {{"type", "boolean"}}},
              {"ranking_weights", {{"type", "object"}, {"additionalProperties", {{"type", "number"}}}}}}},
            {"additionalProperties", false}};
        const json entry = {{"type", "object"},
                            {"required", {"rank", "participant_id", "display_name", "team", "submissions", "best", "last"}},
                            {"properties",
                             {{"rank", {{"type", "integer"}, {"minimum", 1}}},
                              {"participant_id", {{"type", "string"}}},
                              {"display_name", {{"type", "string"}}},
                              {"team", {{"type", "boolean"}}},
                              {"submissions", {{"type", "integer"}, {"minimum", 1}}},
                              {"best", submission},
                              {"last", submission}}},
                            {"additionalProperties", false}};
        const json train_epoch = {{"type", "object"},
                                  {"required", {"epoch_id", "subject_id", "grade"}},
                                  {"properties",
                                   {{"epoch_id", {{"type", "string"}}},
                                    {"subject_id", {{"type", "string"}}},
                                    {"grade", {{"type", "integer"}, {"minimum", 1}, {"maximum", 4}}},
                                    {"file", {{"type", "string"}}}}},
                                  {"additionalProperties", false}};
        const json test_epoch = {{"type", "object"},
                                 {"required", {"epoch_id"}},
                                 {"properties", {{"epoch_id", {{"type", "string"}}}, {"file", {{"type", "string"}}}}},
                                 {"additionalProperties", false}};
        auto manifest = [](const json& epoch, const char* split) {
            return json{{"type", "object"},
                        {"required", {"competition_id", "split", "epochs"}},
                        {"properties",
                         {{"competition_id", {{"type", "string"}}},
                          {"split", {{"enum", {split}}}},
                          {"epochs", {{"type", "array"}, {"items", epoch}}}}},
                        {"additionalProperties", false}};
        };
        const json error = {{"type", "object"},
                            {"required", {"code", "message"}},
                            {"properties",
                             {{"code", {{"type", "string"}}},
                              {"message", {{"type", "string"}}},
                              {"next_allowed", {{"type", "string"}}},
                              {"details",
                               {{"type", "array"},
                                {"items",
                                 {{"type", "object"},
                                  {"required", {"message"}},
                                  {"properties", {{"line", {{"type", "integer"}}}, {"message", {{"type", "string"}}}}},
                                  {"additionalProperties", false}}}}}}},
                            {"additionalProperties", false}};
        return json{{"competition", competition},
                    {"competition_list", {{"type", "array"}, {"items", competition}}},
                    {"registration", registration},
                    {"participant", participant},
                    {"participant_list", {{"type", "array"}, {"items", participant}}},
                    {"submission", submission},
                    {"history", {{"type", "array"}, {"items", submission}}},
                    {"leaderboard", {{"type", "array"}, {"items", entry}}},
                    {"train_manifest", manifest(train_epoch, "train")},
                    {"test_manifest", manifest(test_epoch, "test")},
                    {"error", error}};
    }();
    return schemas;
}

}  // namespace neoeeg::http
