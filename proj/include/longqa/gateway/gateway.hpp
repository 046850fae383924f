#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <random>
#include <string>
#include <string_view>

#include <json.hpp>

#include "longqa/gateway/backend.hpp"
#include "longqa/gateway/chat.hpp"
#include "longqa/gateway/token_account.hpp"
#include "longqa/textproc/token_scheme.hpp"

namespace longqa::gateway {

struct RetryPolicy {
    int max_attempts = 5;
    std::chrono::milliseconds base_delay{500};
    double factor = 2.0;

    // Upper bound of the full-jitter window before retry number `retry` (1-based).
    std::chrono::milliseconds ceiling(int retry) const;
};

// Token bucket shared by all in-flight calls. A rate of 0 disables limiting.
class RateLimiter {
public:
    using Clock = std::chrono::steady_clock;
    using Sleeper = std::function<void(std::chrono::milliseconds)>;

    explicit RateLimiter(double requests_per_minute, Sleeper sleep = {});
    void acquire();

private:
    double rate_per_ms_;
    double capacity_;
    double tokens_;
    Clock::time_point last_;
    Sleeper sleep_;
    std::mutex mutex_;
};

struct GatewayOptions {
    std::string model = "gpt-4o-mini";
    RetryPolicy retry;
    double requests_per_minute = 0;
    // Used to charge input tokens for failed attempts.
    TokenScheme scheme = TokenScheme::heuristic();
    // Injected for tests; defaults to std::this_thread::sleep_for.
    std::function<void(std::chrono::milliseconds)> sleep;
    std::uint64_t jitter_seed = 0x5eed;
};

// The single pathway to a model: retries transient failures, rate limits,
// and records every call into the caller's TokenAccount under a stage label.
class Gateway {
public:
    Gateway(std::shared_ptr<Backend> backend, GatewayOptions options);

    const std::string& model() const noexcept { return options_.model; }

    // A request with default sampling settings and this gateway's model.
    ChatRequest make_request(std::string system, std::string user) const;

    ChatResponse send_chat(const ChatRequest& request, std::string_view stage, TokenAccount& account) const;

    // Sends a request carrying exactly one function schema (forced through
    // tool_choice) and returns the validated arguments of the first call.
    nlohmann::json call_function(const ChatRequest& request, std::string_view stage, TokenAccount& account) const;

private:
    std::chrono::milliseconds jitter(int retry) const;

    std::shared_ptr<Backend> backend_;
    GatewayOptions options_;
    mutable std::unique_ptr<RateLimiter> limiter_;
    mutable std::mutex rng_mutex_;
    mutable std::mt19937_64 rng_;
};

}  // namespace longqa::gateway
