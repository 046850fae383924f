#include "longqa/gateway/gateway.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include <spdlog/spdlog.h>

namespace longqa::gateway {

std::chrono::milliseconds RetryPolicy::ceiling(int retry) const {
    const double ms = static_cast<double>(base_delay.count()) * std::pow(factor, retry - 1);
    return std::chrono::milliseconds(static_cast<long long>(ms));
}

RateLimiter::RateLimiter(double requests_per_minute, Sleeper sleep)
    : rate_per_ms_(requests_per_minute / 60'000.0),
      capacity_(std::max(1.0, requests_per_minute / 60.0)),
      tokens_(capacity_),
      last_(Clock::now()),
      sleep_(sleep ? std::move(sleep) : Sleeper([](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); })) {}

void RateLimiter::acquire() {
    if (rate_per_ms_ <= 0) return;
    std::unique_lock lock(mutex_);
    for (;;) {
        const auto now = Clock::now();
        const double elapsed = std::chrono::duration<double, std::milli>(now - last_).count();
        tokens_ = std::min(capacity_, tokens_ + elapsed * rate_per_ms_);
        last_ = now;
        if (tokens_ >= 1.0) {
            tokens_ -= 1.0;
            return;
        }
        const auto wait = std::chrono::milliseconds(static_cast<long long>(std::ceil((1.0 - tokens_) / rate_per_ms_)));
        sleep_(wait);
    }
}

Gateway::Gateway(std::shared_ptr<Backend> backend, GatewayOptions options)
    : backend_(std::move(backend)), options_(std::move(options)), rng_(options_.jitter_seed) {
    if (!backend_) throw ConfigError("gateway needs a backend");
    if (options_.retry.max_attempts < 1) throw ConfigError("retry.max_attempts must be at least 1");
    if (!options_.sleep) options_.sleep = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
    limiter_ = std::make_unique<RateLimiter>(options_.requests_per_minute, options_.sleep);
}

ChatRequest Gateway::make_request(std::string system, std::string user) const {
    ChatRequest request;
    request.model = options_.model;
    if (!system.empty()) request.messages.push_back({Role::system, std::move(system)});
    request.messages.push_back({Role::user, std::move(user)});
    return request;
}

std::chrono::milliseconds Gateway::jitter(int retry) const {
    const auto ceiling = options_.retry.ceiling(retry).count();
    std::lock_guard lock(rng_mutex_);
    return std::chrono::milliseconds(ceiling <= 0 ? 0 : static_cast<long long>(rng_() % (ceiling + 1)));
}

ChatResponse Gateway::send_chat(const ChatRequest& request, std::string_view stage, TokenAccount& account) const {
    request.validate();
    for (int attempt = 1;; ++attempt) {
        limiter_->acquire();
        try {
            ChatResponse response = backend_->complete(request);
            account.record(stage, response.usage);
            return response;
        } catch (const TransportError& e) {
            if (e.transmitted) {
                account.record_failed_attempt(stage, estimate_input_tokens(request, options_.scheme));
            }
            if (!e.retryable || attempt >= options_.retry.max_attempts) throw;
            const auto delay = jitter(attempt);
            spdlog::warn("{} call failed (attempt {}/{}): {}; retrying in {} ms", stage, attempt,
                         options_.retry.max_attempts, e.what(), delay.count());
            options_.sleep(delay);
        }
    }
}

nlohmann::json Gateway::call_function(const ChatRequest& request, std::string_view stage, TokenAccount& account) const {
    if (request.tools.size() != 1) throw PipelineError("call_function needs exactly one function schema");
    const FunctionSchema& schema = request.tools.front();
    if (request.tool_choice != schema.name) throw PipelineError("call_function must force its function via tool_choice");

    const ChatResponse response = send_chat(request, stage, account);
    if (response.tool_calls.empty()) {
        throw ExtractionError("model answered without calling " + schema.name);
    }
    const ToolCall& call = response.tool_calls.front();
    if (call.name != schema.name) {
        throw ExtractionError("model called " + call.name + " instead of " + schema.name);
    }
    validate_arguments(call.arguments, schema.parameters);
    return call.arguments;
}

}  // namespace longqa::gateway
