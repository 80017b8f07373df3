#include "labelforge/prompt/transport.hpp"

#include <cmath>
#include <fstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "labelforge/core/error.hpp"

namespace labelforge::prompt {

namespace {

struct SplitUrl {
    std::string origin;  // scheme://host[:port]
    std::string path;
};

SplitUrl split_url(const std::string& url) {
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw ValidationError("endpoint '" + url + "' has no scheme");
    auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

bool retryable(const HttpResponse& r) { return r.status == 0 || r.status == 429 || r.status >= 500; }

}  // namespace

HttpResponse HttpTransport::post(const HttpRequest& request) {
    HttpResponse out;
    SplitUrl u;
    try {
        u = split_url(request.url);
    } catch (const Error& e) {
        out.error = e.what();
        return out;
    }
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
    if (u.origin.rfind("https://", 0) == 0) {
        out.error = "https endpoints need a build with TLS support";
        return out;
    }
#endif
    httplib::Client client(u.origin);
    client.set_connection_timeout(std::chrono::duration_cast<std::chrono::seconds>(timeout_).count(), 0);
    client.set_read_timeout(timeout_.count(), 0);
    client.set_write_timeout(timeout_.count(), 0);
    httplib::Headers headers;
    for (const auto& [k, v] : request.headers) headers.emplace(k, v);
    auto res = client.Post(u.path, headers, request.body, "application/json");
    if (!res) {
        out.error = "transport error: " + httplib::to_string(res.error());
        return out;
    }
    out.status = res->status;
    out.body = res->body;
    return out;
}

std::string chat_completion_body(const std::string& content) {
    nlohmann::ordered_json j;
    j["object"] = "chat.completion";
    j["choices"] = nlohmann::ordered_json::array();
    nlohmann::ordered_json choice;
    choice["index"] = 0;
    choice["message"] = {{"role", "assistant"}, {"content", content}};
    choice["finish_reason"] = "stop";
    j["choices"].push_back(choice);
    return j.dump();
}

MockTransport::MockTransport(std::vector<HttpResponse> responses, bool repeat_last)
    : responses_(std::move(responses)), repeat_last_(repeat_last) {
    if (responses_.empty()) throw ValidationError("mock transport needs at least one response");
}

MockTransport::MockTransport(MockTransport&& other) noexcept
    : responses_(std::move(other.responses_)), repeat_last_(other.repeat_last_), next_(other.next_),
      seen_(std::move(other.seen_)) {}

MockTransport MockTransport::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open mock fixture " + path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw DataError(path.string() + ": " + e.what());
    }
    if (j.is_object() && j.contains("choices")) return MockTransport({HttpResponse{200, j.dump(), {}}}, true);
    if (!j.is_object() || !j.contains("responses") || !j["responses"].is_array())
        throw DataError(path.string() + ": expected {\"responses\": [...]} or a chat completion object");
    std::vector<HttpResponse> rs;
    for (const auto& r : j["responses"]) {
        HttpResponse h;
        h.status = r.value("status", 200);
        if (r.contains("content")) {
            h.body = chat_completion_body(r["content"].get<std::string>());
        } else if (r.contains("body")) {
            h.body = r["body"].is_string() ? r["body"].get<std::string>() : r["body"].dump();
        }
        if (r.contains("error")) {
            h.status = 0;
            h.error = r["error"].get<std::string>();
        }
        rs.push_back(std::move(h));
    }
    return MockTransport(std::move(rs), j.value("repeat_last", true));
}

HttpResponse MockTransport::post(const HttpRequest& request) {
    std::lock_guard lock(mutex_);
    seen_.push_back(request);
    std::size_t i = next_++;
    if (i >= responses_.size()) {
        if (!repeat_last_) return HttpResponse{0, {}, "mock fixture exhausted"};
        i = responses_.size() - 1;
    }
    return responses_[i];
}

std::size_t MockTransport::calls() const {
    std::lock_guard lock(mutex_);
    return next_;
}

std::vector<HttpRequest> MockTransport::requests() const {
    std::lock_guard lock(mutex_);
    return seen_;
}

std::string chat_request_body(const ChatSettings& settings, const std::string& prompt) {
    nlohmann::ordered_json j;
    j["model"] = settings.model;
    j["temperature"] = settings.temperature;
    j["messages"] = nlohmann::ordered_json::array({{{"role", "user"}, {"content", prompt}}});
    return j.dump();
}

ChatResult chat_complete(Transport& transport, const ChatSettings& settings, const std::string& prompt) {
    if (settings.retry.max_attempts < 1) throw ValidationError("retry policy needs at least one attempt");
    HttpRequest req;
    req.url = settings.endpoint;
    req.body = chat_request_body(settings, prompt);
    req.headers.emplace_back("Content-Type", "application/json");
    if (!settings.api_key.empty()) req.headers.emplace_back("Authorization", "Bearer " + settings.api_key);

    ChatResult result;
    auto backoff = settings.retry.initial_backoff;
    HttpResponse res;
    for (int attempt = 1; attempt <= settings.retry.max_attempts; ++attempt) {
        res = transport.post(req);
        result.attempts.push_back(Attempt{res.status, res.body, res.error});
        if (!retryable(res)) break;
        if (attempt == settings.retry.max_attempts) break;
        spdlog::warn("request attempt {} failed ({}); retrying in {} ms", attempt,
                     res.status ? "HTTP " + std::to_string(res.status) : res.error, backoff.count());
        std::this_thread::sleep_for(backoff);
        backoff = std::chrono::milliseconds(
            static_cast<long long>(std::llround(static_cast<double>(backoff.count()) * settings.retry.multiplier)));
    }

    if (res.status == 0) {
        result.error = res.error.empty() ? "transport error" : res.error;
        return result;
    }
    if (res.status < 200 || res.status >= 300) {
        result.error = "HTTP " + std::to_string(res.status);
        return result;
    }
    nlohmann::json body = nlohmann::json::parse(res.body, nullptr, false);
    if (body.is_discarded()) {
        result.error = "response is not JSON";
        return result;
    }
    try {
        const auto& msg = body.at("choices").at(0).at("message").at("content");
        if (!msg.is_string()) throw std::runtime_error("content is not a string");
        result.content = msg.get<std::string>();
        result.ok = true;
    } catch (const std::exception&) {
        result.error = "response has no choices[0].message.content";
    }
    return result;
}

}  // namespace labelforge::prompt
