#pragma once

#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>

#ifndef CPPHTTPLIB_LISTEN_BACKLOG
#define CPPHTTPLIB_LISTEN_BACKLOG 512
#endif
#include <httplib.h>
#include <json.hpp>
#include <zlib.h>

#include "neoeeg/competition/engine.hpp"
#include "neoeeg/competition/views.hpp"
#include "neoeeg/errors.hpp"
#include "neoeeg/http/schema.hpp"

namespace neoeeg::http {

namespace comp = neoeeg::competition;

/// The closed set of machine-readable error codes.
inline const std::set<std::string>& error_codes() {
    static const std::set<std::string> codes{
        "auth.missing",         "auth.invalid",          "auth.forbidden",           "not_found",
        "request.invalid",      "request.too_large",     "config.invalid",           "config.overlap",
        "participant.duplicate", "submission.invalid",   "submission.rate_limited",  "window.closed",
        "method.not_allowed",   "internal"};
    return codes;
}

inline nlohmann::json error_body(const std::string& code, const std::string& message,
                                 const std::vector<LineIssue>& details = {}) {
    nlohmann::json j{{"code", code}, {"message", message}};
    if (!details.empty()) {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& d : details) {
            nlohmann::json e{{"message", d.message}};
            if (d.line > 0) e["line"] = d.line;
            arr.push_back(std::move(e));
        }
        j["details"] = std::move(arr);
    }
    return j;
}

struct ServerConfig {
    std::string host = "127.0.0.1";
    int port = 8080;
    std::string host_token;
    std::string cors_origin = "*";
    std::size_t max_upload_bytes = 5u << 20;
    bool log_requests = false;
};

/// Reads a platform config: listen address, data directory, CORS origin, host token and
/// an optional list of competition configs to create on first start.
struct PlatformConfig {
    ServerConfig server;
    std::filesystem::path data_dir;
    std::vector<std::filesystem::path> competitions;
};

inline PlatformConfig load_platform_config(const std::filesystem::path& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_text_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("cannot parse " + path.string() + ": " + e.what());
    }
    PlatformConfig p;
    const auto base = path.parent_path();
    try {
        p.server.host = j.value("host", p.server.host);
        p.server.port = j.value("port", p.server.port);
        p.server.cors_origin = j.value("cors_origin", p.server.cors_origin);
        p.server.host_token = j.value("host_token", std::string{});
        p.server.log_requests = j.value("log_requests", false);
        p.server.max_upload_bytes = j.value("max_upload_bytes", p.server.max_upload_bytes);
        std::filesystem::path dir = j.value("data_dir", std::string("data"));
        p.data_dir = dir.is_relative() ? base / dir : dir;
        for (const auto& c : j.value("competitions", nlohmann::json::array())) {
            std::filesystem::path cp = c.get<std::string>();
            p.competitions.push_back(cp.is_relative() ? base / cp : cp);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("malformed platform config: " + std::string(e.what()));
    }
    if (p.server.port < 0 || p.server.port > 65535) throw ConfigError("port out of range");
    return p;
}

/// REST facade over a competition engine. All mutations go through the engine's single writer;
/// reads work on engine snapshots.
class ApiServer {
public:
    using Clock = std::function<comp::Timestamp()>;

    ApiServer(comp::Engine& engine, ServerConfig cfg, Clock clock = comp::now_ms)
        : engine_(engine), cfg_(std::move(cfg)), clock_(std::move(clock)) {
        if (cfg_.host_token.empty()) cfg_.host_token = comp::generate_token();
        routes();
    }

    const std::string& host_token() const { return cfg_.host_token; }
    httplib::Server& raw() { return svr_; }

    bool listen() { return svr_.listen(cfg_.host, cfg_.port); }

    /// Binds an ephemeral port on the configured host and returns it.
    int bind_any() { return svr_.bind_to_any_port(cfg_.host); }
    bool listen_after_bind() { return svr_.listen_after_bind(); }
    void stop() { svr_.stop(); }
    void wait_until_ready() { svr_.wait_until_ready(); }

private:
    enum class Caller { Anonymous, Host, Participant, Unknown };

    struct AuthFailure {
        int status;
        std::string code;
        std::string message;
        AuthFailure(int s, std::string c, std::string m) : status(s), code(std::move(c)), message(std::move(m)) {}
    };

    struct Auth {
        Caller who = Caller::Anonymous;
        std::optional<comp::Participant> participant;
    };

    static std::string bearer(const httplib::Request& req) {
        const auto h = req.get_header_value("Authorization");
        const std::string prefix = "Bearer ";
        if (h.size() <= prefix.size() || h.compare(0, prefix.size(), prefix) != 0) return {};
        return io::trim(std::string_view(h).substr(prefix.size()));
    }

    Auth authenticate(const httplib::Request& req, const std::string& cid) const {
        Auth a;
        const auto token = bearer(req);
        if (token.empty()) return a;
        if (comp::constant_time_equal(token, cfg_.host_token)) {
            a.who = Caller::Host;
            return a;
        }
        if (!cid.empty()) {
            if (auto p = engine_.authenticate(cid, token)) {
                a.who = Caller::Participant;
                a.participant = std::move(p);
                return a;
            }
        }
        a.who = Caller::Unknown;
        return a;
    }

    bool is_any_participant(const std::string& token) const {
        const auto snap = engine_.snapshot();
        bool found = false;
        for (const auto& [cid, c] : snap->competitions)
            for (const auto& p : c->participants) found = comp::constant_time_equal(p.token, token) || found;
        return found;
    }

    static void send_json(httplib::Response& res, int status, const nlohmann::json& body) {
        res.status = status;
        res.set_content(body.dump(), "application/json");
    }

    static void send_error(httplib::Response& res, int status, const std::string& code, const std::string& message,
                           const std::vector<LineIssue>& details = {}) {
        send_json(res, status, error_body(code, message, details));
    }

    static void require_participant(const Auth& a) {
        if (a.who == Caller::Anonymous) throw AuthFailure(401, "auth.missing", "bearer token required");
        if (a.who == Caller::Unknown) throw AuthFailure(401, "auth.invalid", "token not recognised");
    }

    std::shared_ptr<const comp::State> competition_or_throw(const std::string& cid, const comp::Competition*& out) const {
        auto snap = engine_.snapshot();
        out = snap->find(cid);
        if (!out) throw NotFound("no competition '" + cid + "'");
        return snap;
    }

    /// Runs a handler body and maps library errors onto ErrorBody responses.
    void guarded(httplib::Response& res, const std::function<void()>& body) const {
        try {
            body();
        } catch (const AuthFailure& e) {
            send_error(res, e.status, e.code, e.message);
        } catch (const ValidationError& e) {
            send_error(res, 422, "submission.invalid", e.what(), e.issues());
        } catch (const RateLimited& e) {
            const auto now = clock_();
            const auto wait_ms = std::max<comp::Timestamp>(0, e.next_allowed() * 1000 - now);
            res.set_header("Retry-After", std::to_string((wait_ms + 999) / 1000));
            auto body = error_body("submission.rate_limited", e.what());
            body["next_allowed"] = comp::format_utc(e.next_allowed() * 1000);
            send_json(res, 429, body);
        } catch (const WindowClosed& e) {
            send_error(res, 409, "window.closed", e.what());
        } catch (const EpochOverlapError& e) {
            send_error(res, 400, "config.overlap", e.what());
        } catch (const ConfigError& e) {
            send_error(res, 400, "config.invalid", e.what());
        } catch (const NotFound& e) {
            send_error(res, 404, "not_found", e.what());
        } catch (const Conflict& e) {
            send_error(res, 409, "participant.duplicate", e.what());
        } catch (const nlohmann::json::exception& e) {
            send_error(res, 400, "request.invalid", "malformed JSON body");
        } catch (const std::exception& e) {
            send_error(res, 500, "internal", "internal error");
        }
    }

    void with_etag(const httplib::Request& req, httplib::Response& res, const nlohmann::json& body) const {
        const auto text = body.dump();
        char tag[32];
        std::snprintf(tag, sizeof tag, "\"%08lx-%zx\"",
                      crc32(0L, reinterpret_cast<const Bytef*>(text.data()), static_cast<uInt>(text.size())),
                      text.size());
        res.set_header("ETag", tag);
        res.set_header("Cache-Control", "no-cache");
        if (req.get_header_value("If-None-Match") == tag) {
            res.status = 304;
            return;
        }
        res.status = 200;
        res.set_content(text, "application/json");
    }

    void routes() {
        svr_.set_payload_max_length(cfg_.max_upload_bytes);

        svr_.set_pre_routing_handler([this](const httplib::Request&, httplib::Response& res) {
            res.set_header("Access-Control-Allow-Origin", cfg_.cors_origin);
            res.set_header("Vary", "Origin");
            return httplib::Server::HandlerResponse::Unhandled;
        });
        svr_.Options(R"(.*)", [this](const httplib::Request&, httplib::Response& res) {
            res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
            res.set_header("Access-Control-Allow-Headers", "Authorization, Content-Type, If-None-Match");
            res.set_header("Access-Control-Expose-Headers", "ETag, Location, Retry-After");
            res.set_header("Access-Control-Max-Age", "600");
            res.status = 204;
        });

        svr_.set_error_handler([](const httplib::Request&, httplib::Response& res) {
            if (!res.body.empty()) return;
            switch (res.status) {
                case 404: send_error(res, 404, "not_found", "no such endpoint"); break;
                case 405: send_error(res, 405, "method.not_allowed", "method not allowed"); break;
                case 413: send_error(res, 413, "request.too_large", "request body too large"); break;
                default:
                    if (res.status >= 500) send_error(res, res.status, "internal", "internal error");
                    else if (res.status >= 400) send_error(res, res.status, "request.invalid", "bad request");
            }
        });
        svr_.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr) {
            send_error(res, 500, "internal", "internal error");
        });
        if (cfg_.log_requests) {
            // Method, path and status only: headers and bodies may carry tokens.
            svr_.set_logger([](const httplib::Request& req, const httplib::Response& res) {
                std::clog << req.method << " " << req.path << " " << res.status << "\n";
            });
        }

        svr_.Get("/health", [](const httplib::Request&, httplib::Response& res) {
            send_json(res, 200, {{"status", "ok"}});
        });
        svr_.Get("/schema", [](const httplib::Request&, httplib::Response& res) { send_json(res, 200, api_schemas()); });

        svr_.Get("/competitions", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                const auto a = authenticate(req, {});
                const auto role = a.who == Caller::Host ? comp::Role::Host : comp::Role::Public;
                nlohmann::json arr = nlohmann::json::array();
                const auto snap = engine_.snapshot();
                for (const auto& [cid, c] : snap->competitions) arr.push_back(comp::competition_json(*c, role));
                send_json(res, 200, arr);
            });
        });

        svr_.Post("/competitions", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                const auto token = bearer(req);
                if (token.empty()) throw AuthFailure(401, "auth.missing", "host token required");
                if (!comp::constant_time_equal(token, cfg_.host_token)) {
                    if (is_any_participant(token))
                        throw AuthFailure(403, "auth.forbidden", "participants cannot create competitions");
                    throw AuthFailure(401, "auth.invalid", "token not recognised");
                }
                const auto body = nlohmann::json::parse(req.body);
                const auto cfg = comp::config_from_json(body);
                const auto id = engine_.create_competition(cfg, clock_());
                const auto snap = engine_.snapshot();
                res.set_header("Location", "/competitions/" + id);
                send_json(res, 201, comp::competition_json(*snap->find(id), comp::Role::Host));
            });
        });

        svr_.Get(R"(/competitions/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                const std::string cid = req.matches[1];
                const comp::Competition* c = nullptr;
                const auto snap = competition_or_throw(cid, c);
                const auto a = authenticate(req, cid);
                send_json(res, 200, comp::competition_json(*c, a.who == Caller::Host ? comp::Role::Host : comp::Role::Public));
            });
        });

        svr_.Post(R"(/competitions/([^/]+)/participants)", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                const std::string cid = req.matches[1];
                const auto body = nlohmann::json::parse(req.body);
                if (!body.is_object() || !body.contains("display_name") || !body["display_name"].is_string())
                    throw ConfigError("body needs a display_name string");
                const auto p = engine_.register_participant(cid, body["display_name"].get<std::string>(),
                                                            body.value("team", false), clock_());
                res.set_header("Location", "/competitions/" + cid + "/participants/" + p.id);
                res.set_header("Cache-Control", "no-store");
                send_json(res, 201, comp::registration_json(p));
            });
        });

        svr_.Get(R"(/competitions/([^/]+)/participants)", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                const std::string cid = req.matches[1];
                const comp::Competition* c = nullptr;
                const auto snap = competition_or_throw(cid, c);
                nlohmann::json arr = nlohmann::json::array();
                for (const auto& p : c->participants) arr.push_back(comp::participant_json(p));
                send_json(res, 200, arr);
            });
        });

        svr_.Get(R"(/competitions/([^/]+)/participants/([^/]+))",
                 [this](const httplib::Request& req, httplib::Response& res) {
                     guarded(res, [&] {
                         const std::string cid = req.matches[1];
                         const comp::Competition* c = nullptr;
                         const auto snap = competition_or_throw(cid, c);
                         const auto* p = c->participant(req.matches[2]);
                         if (!p) throw NotFound("no such participant");
                         send_json(res, 200, comp::participant_json(*p));
                     });
                 });

        svr_.Get(R"(/competitions/([^/]+)/data/(train|test))", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                const std::string cid = req.matches[1];
                const comp::Competition* c = nullptr;
                const auto snap = competition_or_throw(cid, c);
                const auto a = authenticate(req, cid);
                if (a.who != Caller::Host) require_participant(a);
                send_json(res, 200, req.matches[2] == "train" ? comp::train_manifest_json(*c) : comp::test_manifest_json(*c));
            });
        });

        svr_.Get(R"(/competitions/([^/]+)/data/(train|test)/([^/]+))",
                 [this](const httplib::Request& req, httplib::Response& res) {
                     guarded(res, [&] {
                         const std::string cid = req.matches[1];
                         const comp::Competition* c = nullptr;
                         const auto snap = competition_or_throw(cid, c);
                         const auto a = authenticate(req, cid);
                         if (a.who != Caller::Host) require_participant(a);
                         const auto manifest =
                             req.matches[2] == "train" ? comp::train_manifest_json(*c) : comp::test_manifest_json(*c);
                         const std::string epoch = req.matches[3];
                         for (const auto& e : manifest["epochs"]) {
                             if (e["epoch_id"] != epoch || !e.contains("file")) continue;
                             const auto path = std::filesystem::path(c->config.data_dir) / e["file"].get<std::string>();
                             res.status = 200;
                             res.set_content(read_text_file(path), "application/octet-stream");
                             res.set_header("Content-Disposition", "attachment; filename=\"" + e["file"].get<std::string>() + "\"");
                             return;
                         }
                         throw NotFound("no file for epoch '" + epoch + "' in this split");
                     });
                 });

        svr_.Post(R"(/competitions/([^/]+)/submissions)", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                const std::string cid = req.matches[1];
                const comp::Competition* c = nullptr;
                competition_or_throw(cid, c);
                const auto a = authenticate(req, cid);
                if (a.who == Caller::Host) throw AuthFailure(403, "auth.forbidden", "the host cannot submit");
                require_participant(a);
                std::string csv;
                if (req.is_multipart_form_data()) {
                    if (req.has_file("file")) csv = req.get_file_value("file").content;
                    else if (!req.files.empty()) csv = req.files.begin()->second.content;
                    else throw ValidationError({{0, "multipart body has no file part"}});
                } else {
                    csv = req.body;
                }
                const auto sub = engine_.submit_csv(cid, a.participant->id, csv, clock_());
                const auto snap = engine_.snapshot();
                res.set_header("Location", "/competitions/" + cid + "/submissions/" + sub->id);
                send_json(res, 201, comp::submission_receipt_json(*snap->find(cid), *sub));
            });
        });

        svr_.Get(R"(/competitions/([^/]+)/submissions/mine)", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                const std::string cid = req.matches[1];
                const comp::Competition* c = nullptr;
                const auto snap = competition_or_throw(cid, c);
                const auto a = authenticate(req, cid);
                require_participant(a);
                if (a.who != Caller::Participant) throw AuthFailure(403, "auth.forbidden", "participant token required");
                send_json(res, 200, comp::history_json(*c, a.participant->id));
            });
        });

        svr_.Get(R"(/competitions/([^/]+)/leaderboard)", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                const std::string cid = req.matches[1];
                const comp::Competition* c = nullptr;
                const auto snap = competition_or_throw(cid, c);
                const auto a = authenticate(req, cid);
                with_etag(req, res, comp::leaderboard_json(*c, a.who == Caller::Host ? comp::Role::Host : comp::Role::Public));
            });
        });
    }

    comp::Engine& engine_;
    ServerConfig cfg_;
    Clock clock_;
    httplib::Server svr_;
};

}  // namespace neoeeg::http
