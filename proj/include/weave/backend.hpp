#pragma once

#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace weave {

enum class Role { System, User, Assistant };

std::string_view to_string(Role r);

struct Message {
  Role role = Role::User;
  std::string content;
};

/// Ordered (name, value) pairs that filled a prompt template.
using SlotList = std::vector<std::pair<std::string, std::string>>;

struct ChatRequest {
  std::string model_id;
  std::vector<Message> messages;
  double temperature = 0.0;
  int max_tokens = 2048;
  std::string template_id;
  SlotList slots;
  std::string slot_digest;
};

struct ChatResponse {
  std::string content;
  std::int64_t prompt_tokens = 0;
  std::int64_t completion_tokens = 0;
  std::int64_t latency_ms = 0;
  /// Failed attempts that preceded this response.
  int retries = 0;
};

struct BackendConfig {
  std::string endpoint_url;
  std::string auth_env_var;
  std::string model_id;
  int timeout_ms = 60000;
  int max_retries = 3;
  int max_inflight = 4;
  /// First backoff window; doubles on every retry, full jitter.
  int backoff_base_ms = 500;
};

/// Throws PrecondError when the request violates its invariants.
void validate(const ChatRequest& request);

/// Completion interface shared by the live client and the scripted double.
/// Implementations are safe to call from several threads at once.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual ChatResponse complete(const ChatRequest& request) = 0;
};

/// Deterministic backend keyed by (template_id, slot_digest).
///
/// Lookup order: an exact script for the key, then a handler registered for
/// the template, then a default reply for the template. Anything else raises
/// UnscriptedRequest. Registration is not synchronized with complete(); finish
/// registering before sharing the backend across threads.
class ScriptedBackend : public Backend {
 public:
  using Handler = std::function<std::string(const ChatRequest&)>;

  void register_script(const std::string& template_id, const std::string& slot_digest,
                       std::string reply);
  void register_handler(const std::string& template_id, Handler handler);
  void register_default(const std::string& template_id, std::string reply);

  ChatResponse complete(const ChatRequest& request) override;

  std::size_t calls(const std::string& template_id) const;
  std::size_t total_calls() const;

 private:
  std::map<std::pair<std::string, std::string>, std::string> scripts_;
  std::map<std::string, Handler> handlers_;
  std::map<std::string, std::string> defaults_;
  mutable std::mutex count_mu_;
  std::map<std::string, std::size_t> counts_;
};

/// OpenAI-compatible chat client over HTTP(S).
class HttpBackend : public Backend {
 public:
  explicit HttpBackend(BackendConfig config, std::uint64_t jitter_seed = std::random_device{}());
  ~HttpBackend() override;

  ChatResponse complete(const ChatRequest& request) override;

  const BackendConfig& config() const noexcept { return config_; }

 private:
  struct Endpoint;

  ChatResponse attempt(const ChatRequest& request);
  void acquire();
  void release();
  int backoff_ms(int retry);

  BackendConfig config_;
  std::unique_ptr<Endpoint> endpoint_;
  std::mutex slot_mu_;
  std::condition_variable slot_cv_;
  int inflight_ = 0;
  std::mutex rng_mu_;
  std::mt19937_64 rng_;
};

}  // namespace weave
