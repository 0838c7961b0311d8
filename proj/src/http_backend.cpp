#include <httplib.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <json.hpp>
#include <thread>

#include "weave/backend.hpp"
#include "weave/errors.hpp"

namespace weave {

using json = nlohmann::json;

namespace {

// Marks failures worth another attempt (timeouts, resets, 5xx, 429).
class RetryableFailure : public TransportError {
  using TransportError::TransportError;
};

}  // namespace

struct HttpBackend::Endpoint {
  std::string base;  // scheme://host[:port]
  std::string path;
};

HttpBackend::HttpBackend(BackendConfig config, std::uint64_t jitter_seed)
    : config_(std::move(config)), endpoint_(std::make_unique<Endpoint>()), rng_(jitter_seed) {
  if (config_.max_inflight < 1) throw PrecondError("max_inflight must be >= 1");
  if (config_.timeout_ms <= 0) throw PrecondError("timeout_ms must be positive");
  if (config_.max_retries < 0) throw PrecondError("max_retries must be >= 0");
  const auto& url = config_.endpoint_url;
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw PrecondError("endpoint_url needs a scheme: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  endpoint_->base = url.substr(0, path_start);
  endpoint_->path = path_start == std::string::npos ? "/" : url.substr(path_start);
}

HttpBackend::~HttpBackend() = default;

void HttpBackend::acquire() {
  std::unique_lock lock(slot_mu_);
  slot_cv_.wait(lock, [&] { return inflight_ < config_.max_inflight; });
  ++inflight_;
}

void HttpBackend::release() {
  {
    std::lock_guard lock(slot_mu_);
    --inflight_;
  }
  slot_cv_.notify_one();
}

int HttpBackend::backoff_ms(int retry) {
  const double window = config_.backoff_base_ms * std::pow(2.0, retry);
  std::lock_guard lock(rng_mu_);
  std::uniform_real_distribution<double> jitter(0.0, window);
  return static_cast<int>(jitter(rng_));
}

ChatResponse HttpBackend::attempt(const ChatRequest& request) {
  json body;
  body["model"] = request.model_id.empty() ? config_.model_id : request.model_id;
  body["temperature"] = request.temperature;
  body["max_tokens"] = request.max_tokens;
  body["messages"] = json::array();
  for (const auto& m : request.messages)
    body["messages"].push_back({{"role", to_string(m.role)}, {"content", m.content}});

  httplib::Headers headers;
  if (!config_.auth_env_var.empty()) {
    if (const char* token = std::getenv(config_.auth_env_var.c_str()); token && *token)
      headers.emplace("Authorization", std::string("Bearer ") + token);
  }

  httplib::Client client(endpoint_->base);
  const auto timeout = std::chrono::milliseconds(config_.timeout_ms);
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);

  const auto start = std::chrono::steady_clock::now();
  auto res = client.Post(endpoint_->path, headers, body.dump(), "application/json");
  const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
      std::chrono::steady_clock::now() - start);

  if (!res) throw RetryableFailure("transport: " + httplib::to_string(res.error()));
  if (res->status == 401 || res->status == 403)
    throw AuthError("endpoint rejected credentials (HTTP " + std::to_string(res->status) + ")");
  if (res->status == 429 || res->status >= 500)
    throw RetryableFailure("HTTP " + std::to_string(res->status));
  if (res->status < 200 || res->status >= 300)
    throw TransportError("HTTP " + std::to_string(res->status) + ": " + res->body);

  ChatResponse out;
  try {
    const auto reply = json::parse(res->body);
    out.content = reply.at("choices").at(0).at("message").at("content").get<std::string>();
    if (auto u = reply.find("usage"); u != reply.end() && u->is_object()) {
      out.prompt_tokens = u->value("prompt_tokens", 0);
      out.completion_tokens = u->value("completion_tokens", 0);
    }
  } catch (const json::exception& e) {
    throw MalformedResponse(std::string("unparseable chat reply: ") + e.what());
  }
  if (out.content.empty()) throw MalformedResponse("chat reply has empty content");
  out.latency_ms = elapsed.count();
  return out;
}

ChatResponse HttpBackend::complete(const ChatRequest& request) {
  validate(request);
  for (int retry = 0;; ++retry) {
    acquire();
    try {
      auto resp = attempt(request);
      release();
      resp.retries = retry;
      return resp;
    } catch (const RetryableFailure& e) {
      release();
      if (retry >= config_.max_retries)
        throw TransportError(std::string(e.what()) + " (gave up after " +
                             std::to_string(retry) + " retries)");
    } catch (...) {
      release();
      throw;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(backoff_ms(retry)));
  }
}

}  // namespace weave
