#pragma once

// OpenAI-style chat-completion client. Requires cpp-httplib on the include
// path; define CPPHTTPLIB_OPENSSL_SUPPORT (and link OpenSSL) for https.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "sdpost/backends.hpp"

namespace sdpost {

struct HttpReply {
    int status = 0;
    std::string body;
};

enum class TransportFailure { Connection, Timeout };

class TransportError : public Error {
public:
    TransportError(TransportFailure kind, const std::string& what) : Error(what), kind_(kind) {}
    TransportFailure kind() const { return kind_; }

private:
    TransportFailure kind_;
};

using HeaderList = std::vector<std::pair<std::string, std::string>>;

// Moves one POST over the wire. Throws TransportError when no HTTP response
// was obtained.
class HttpTransport {
public:
    virtual ~HttpTransport() = default;
    virtual HttpReply post(const std::string& url, const std::string& body,
                           const HeaderList& headers, double timeout) = 0;
};

// "http://host:port/path" -> {"http://host:port", "/path"}.
inline std::pair<std::string, std::string> split_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    const std::size_t host_begin = scheme_end == std::string::npos ? 0 : scheme_end + 3;
    const auto slash = url.find('/', host_begin);
    if (slash == std::string::npos) return {url, "/"};
    return {url.substr(0, slash), url.substr(slash)};
}

class HttplibTransport : public HttpTransport {
public:
    HttpReply post(const std::string& url, const std::string& body, const HeaderList& headers,
                   double timeout) override {
        const auto [base, path] = split_url(url);
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
        if (base.rfind("https://", 0) == 0) {
            throw TransportError(TransportFailure::Connection,
                                 "https endpoint but the build has no TLS support: " + url);
        }
#endif
        httplib::Client client(base);
        if (!client.is_valid()) throw TransportError(TransportFailure::Connection, "invalid endpoint " + url);
        const auto secs = static_cast<time_t>(timeout);
        const auto usecs = static_cast<time_t>((timeout - static_cast<double>(secs)) * 1e6);
        client.set_connection_timeout(secs, usecs);
        client.set_read_timeout(secs, usecs);
        client.set_write_timeout(secs, usecs);

        httplib::Headers hs;
        for (const auto& [k, v] : headers) hs.emplace(k, v);
        auto res = client.Post(path, hs, body, "application/json");
        if (!res) {
            const auto err = res.error();
            const bool timed_out = err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read;
            throw TransportError(timed_out ? TransportFailure::Timeout : TransportFailure::Connection,
                                 "POST " + url + " failed: " + httplib::to_string(err));
        }
        return {res->status, res->body};
    }
};

struct RetryPolicy {
    double initial_backoff = 0.5;  // seconds before the first retry
    double multiplier = 2.0;
    double max_backoff = 8.0;
    std::function<void(double)> sleep = [](double s) {
        std::this_thread::sleep_for(std::chrono::duration<double>(s));
    };

    double delay(int retry_index) const {
        return std::min(max_backoff, initial_backoff * std::pow(multiplier, retry_index));
    }
};

class HttpChatClient : public LanguageModel {
public:
    explicit HttpChatClient(BackendConfig config,
                            std::shared_ptr<HttpTransport> transport = std::make_shared<HttplibTransport>(),
                            RetryPolicy retry = {})
        : config_(std::move(config)), transport_(std::move(transport)), retry_(std::move(retry)) {
        config_.validate();
        if (config_.endpoint.empty()) throw InvalidArgument("LLM endpoint is empty");
    }

    static nlohmann::json build_request(const std::string& model, const std::string& prompt) {
        return {{"model", model},
                {"messages", nlohmann::json::array({{{"role", "user"}, {"content", prompt}}})}};
    }

    // First choice's message content. Anything else is a server fault.
    static std::string parse_content(const std::string& body) {
        const auto doc = nlohmann::json::parse(body, nullptr, false);
        if (doc.is_discarded()) throw BackendUnavailable("LLM server returned malformed JSON");
        const auto* choices = doc.is_object() && doc.contains("choices") ? &doc["choices"] : nullptr;
        if (!choices || !choices->is_array() || choices->empty()) {
            throw BackendUnavailable("LLM response has no choices");
        }
        const auto& first = (*choices)[0];
        if (!first.is_object() || !first.contains("message") || !first["message"].is_object() ||
            !first["message"].contains("content") || !first["message"]["content"].is_string()) {
            throw BackendUnavailable("LLM response choice has no message content");
        }
        auto text = first["message"]["content"].get<std::string>();
        if (text.empty()) throw BackendUnavailable("LLM returned empty content");
        return text;
    }

    LlmResponse complete(const std::string& prompt) override {
        if (prompt.empty()) throw InvalidArgument("empty prompt");
        const std::string body = build_request(config_.model_name, prompt).dump();
        HeaderList headers{{"Accept", "application/json"}};
        if (config_.auth_token && !config_.auth_token->empty()) {
            headers.emplace_back("Authorization", "Bearer " + *config_.auth_token);
        }

        bool last_timed_out = false;
        std::string last_error;
        for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
            if (attempt > 0) retry_.sleep(retry_.delay(attempt - 1));
            HttpReply reply;
            try {
                reply = transport_->post(config_.endpoint, body, headers, config_.timeout);
            } catch (const TransportError& e) {
                last_timed_out = e.kind() == TransportFailure::Timeout;
                last_error = e.what();
                continue;
            }
            if (reply.status >= 200 && reply.status < 300) {
                LlmResponse out;
                out.text = parse_content(reply.body);
                return out;
            }
            last_timed_out = reply.status == 408 || reply.status == 504;
            last_error = "HTTP " + std::to_string(reply.status);
            if (!transient(reply.status)) {
                throw BackendUnavailable("LLM request rejected: " + last_error);
            }
        }
        const std::string msg = "LLM unavailable after " + std::to_string(config_.max_retries + 1) +
                                " attempt(s): " + last_error;
        if (last_timed_out) throw BackendTimeout(msg);
        throw BackendUnavailable(msg);
    }

    const BackendConfig& config() const { return config_; }

private:
    static bool transient(int status) { return status == 408 || status == 429 || status >= 500; }

    BackendConfig config_;
    std::shared_ptr<HttpTransport> transport_;
    RetryPolicy retry_;
};

}  // namespace sdpost
