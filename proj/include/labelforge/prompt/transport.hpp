#pragma once

#include <chrono>
#include <filesystem>
#include <memory>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

namespace labelforge::prompt {

struct HttpRequest {
    std::string url;
    std::vector<std::pair<std::string, std::string>> headers;
    std::string body;
};

struct HttpResponse {
    int status = 0;      // 0: no response (transport failure)
    std::string body;
    std::string error;   // transport failure description
};

class Transport {
public:
    virtual ~Transport() = default;
    virtual HttpResponse post(const HttpRequest& request) = 0;
};

/// Plain HTTP(S) POST.
class HttpTransport final : public Transport {
public:
    explicit HttpTransport(std::chrono::seconds timeout = std::chrono::seconds(120)) : timeout_(timeout) {}
    HttpResponse post(const HttpRequest& request) override;

private:
    std::chrono::seconds timeout_;
};

/// Offline transport replaying a fixture file:
///   {"responses": [{"status": 200, "body": <json or string>} | {"content": "..."}],
///    "repeat_last": true}
/// or a single chat-completions object, returned for every request.
class MockTransport final : public Transport {
public:
    explicit MockTransport(std::vector<HttpResponse> responses, bool repeat_last = true);
    MockTransport(MockTransport&& other) noexcept;
    static MockTransport from_file(const std::filesystem::path& path);

    HttpResponse post(const HttpRequest& request) override;
    [[nodiscard]] std::size_t calls() const;
    [[nodiscard]] std::vector<HttpRequest> requests() const;

private:
    std::vector<HttpResponse> responses_;
    bool repeat_last_;
    mutable std::mutex mutex_;
    std::size_t next_ = 0;
    std::vector<HttpRequest> seen_;
};

/// Wraps text as an OpenAI-compatible chat-completions response body.
std::string chat_completion_body(const std::string& content);

struct RetryPolicy {
    int max_attempts = 3;
    std::chrono::milliseconds initial_backoff{500};
    double multiplier = 2.0;
};

struct ChatSettings {
    std::string endpoint = "https://api.openai.com/v1/chat/completions";
    std::string model = "gpt-3.5-turbo";
    double temperature = 0.5;
    std::string api_key;
    RetryPolicy retry;
};

struct Attempt {
    int status = 0;
    std::string body;
    std::string error;
};

struct ChatResult {
    bool ok = false;
    std::vector<Attempt> attempts;
    std::string content;  // assistant message text when ok
    std::string error;    // why the slot failed
    [[nodiscard]] const Attempt& last() const { return attempts.back(); }
};

/// One user message, retried on transport errors, 429 and 5xx with
/// exponential backoff.
ChatResult chat_complete(Transport& transport, const ChatSettings& settings, const std::string& prompt);

/// Request body for one prompt.
std::string chat_request_body(const ChatSettings& settings, const std::string& prompt);

}  // namespace labelforge::prompt
