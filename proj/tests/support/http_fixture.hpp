#pragma once

#include <atomic>
#include <memory>
#include <string>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "neoeeg/competition/engine.hpp"
#include "neoeeg/http/api.hpp"

namespace testsupport {

/// An API server on an ephemeral loopback port with a controllable clock.
class LiveServer {
public:
    explicit LiveServer(neoeeg::competition::EngineOptions opt = {}, std::size_t max_upload = 5u << 20)
        : engine_(std::move(opt)) {
        neoeeg::http::ServerConfig cfg;
        cfg.host = "127.0.0.1";
        cfg.host_token = "host-secret-token-for-tests-0123456789";
        cfg.cors_origin = "http://localhost:4200";
        cfg.max_upload_bytes = max_upload;
        api_ = std::make_unique<neoeeg::http::ApiServer>(engine_, cfg, [this] { return now.load(); });
        port_ = api_->bind_any();
        thread_ = std::thread([this] { api_->listen_after_bind(); });
        api_->wait_until_ready();
    }

    ~LiveServer() {
        api_->stop();
        if (thread_.joinable()) thread_.join();
    }

    httplib::Client client(const std::string& token = {}) const {
        httplib::Client c("127.0.0.1", port_);
        c.set_connection_timeout(10);
        c.set_read_timeout(30);
        if (!token.empty()) c.set_bearer_token_auth(token);
        return c;
    }

    const std::string& host_token() const { return api_->host_token(); }
    neoeeg::competition::Engine& engine() { return engine_; }
    int port() const { return port_; }

    std::atomic<neoeeg::competition::Timestamp> now{0};

private:
    neoeeg::competition::Engine engine_;
    std::unique_ptr<neoeeg::http::ApiServer> api_;
    int port_ = 0;
    std::thread thread_;
};

inline nlohmann::json config_body(const neoeeg::competition::CompetitionConfig& c) {
    nlohmann::json train = nlohmann::json::array();
    for (const auto& r : c.train) train.push_back({{"epoch_id", r.epoch_id}, {"subject_id", r.subject_id}, {"grade", r.grade}});
    nlohmann::json test = nlohmann::json::array();
    for (const auto& [id, g] : c.hidden.grades) test.push_back({{"epoch_id", id}, {"grade", g}});
    return {{"title", c.title},
            {"description", c.description},
            {"train_labels", train},
            {"test_labels", test},
            {"ranking", {{"weights", c.ranking.weights}, {"hidden", c.ranking.hidden}}},
            {"window", {{"opens_at", c.opens_at}, {"closes_at", c.closes_at}}},
            {"daily_limit", c.daily_limit}};
}

inline httplib::Result upload(httplib::Client& cli, const std::string& cid, const std::string& csv) {
    httplib::MultipartFormDataItems items{{"file", csv, "predictions.csv", "text/csv"}};
    return cli.Post("/competitions/" + cid + "/submissions", items);
}

inline httplib::Result upload(httplib::Client&& cli, const std::string& cid, const std::string& csv) {
    return upload(cli, cid, csv);
}

}  // namespace testsupport
