#pragma once

#include "ifc/prompts.hpp"

#include <atomic>
#include <condition_variable>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace ifc {

struct SamplingParams
{
  double temperature = 1.0;
  double top_p = 0.9;
  int max_output_length = 4096;

  bool operator==(const SamplingParams&) const = default;
};

// Greedy decoding with the provider's output budget.
inline SamplingParams greedy(const SamplingParams& base)
{
  return {0.0, 1.0, base.max_output_length};
}

enum class ProviderKind
{
  Http,
  Mock,
};

struct ProviderConfig
{
  std::string name;
  ProviderKind kind = ProviderKind::Mock;
  std::string endpoint;      // chat-completions URL (http)
  std::string model_name;
  std::string auth_env;      // environment variable holding the API key (http)
  SamplingParams sampling;
  double timeout_seconds = 120.0;
  int max_retries = 3;
  int backoff_ms = 500;      // first retry delay, doubled per attempt
  int parallelism_bound = 8;
  std::filesystem::path fixture_dir; // mock

  // Throws std::invalid_argument on temperature < 0, parallelism_bound < 1, ...
  void validate() const;
};

struct ChatRequest
{
  std::string model_name;
  std::string prompt;
  SamplingParams sampling;
  int sample_index = 0;
};

struct ChatResponse
{
  std::string text;
  std::string finish_reason;
  double latency_ms = 0.0;
};

struct ChatExchange
{
  TemplateId template_id = TemplateId::CritiqueGen;
  ChatRequest request;
  ChatResponse response;
  std::string cache_key;
  bool from_cache = false;
};

// Hex SHA-256 over (model_name, prompt, sampling, sample_index).
std::string cache_key(const ChatRequest& request);

enum class GatewayErrorKind
{
  Transient,           // retryable; surfaced as ProviderUnavailable once retries run out
  ProviderUnavailable,
  TemplateError,
  AuthError,
  MissingFixture,
  UnknownProvider,
};

std::string_view to_string(GatewayErrorKind kind);

class GatewayError : public std::runtime_error
{
public:
  GatewayError(GatewayErrorKind kind, const std::string& message)
    : std::runtime_error(message), kind_(kind)
  {
  }
  GatewayErrorKind kind() const { return kind_; }

private:
  GatewayErrorKind kind_;
};

class Provider
{
public:
  virtual ~Provider() = default;

  // Throws GatewayError. Transient errors are retried by the gateway.
  virtual ChatResponse send(const ChatRequest& request) = 0;
};

// OpenAI-style chat-completions client.
class HttpProvider : public Provider
{
public:
  explicit HttpProvider(ProviderConfig config);
  ChatResponse send(const ChatRequest& request) override;

private:
  ProviderConfig config_;
  std::string scheme_host_port_;
  std::string path_;
};

// Replays fixtures: `<fixture_dir>/<cache_key>.txt` holds the verbatim
// response text. Never touches the network.
class MockProvider : public Provider
{
public:
  explicit MockProvider(std::filesystem::path fixture_dir);

  ChatResponse send(const ChatRequest& request) override;

  // Instrumentation.
  size_t lookups() const { return lookups_.load(); }
  size_t peak_in_flight() const { return peak_in_flight_.load(); }
  void set_delay_ms(int ms) { delay_ms_ = ms; }
  // The next `count` sends throw a transient error.
  void fail_next(int count) { fail_remaining_ = count; }
  // Sends whose prompt contains `needle` always fail with ProviderUnavailable.
  void fail_when_prompt_contains(std::string needle);

private:
  std::filesystem::path fixture_dir_;
  std::atomic<size_t> lookups_{0};
  std::atomic<size_t> in_flight_{0};
  std::atomic<size_t> peak_in_flight_{0};
  std::atomic<int> delay_ms_{0};
  std::atomic<int> fail_remaining_{0};
  std::mutex mutex_;
  std::vector<std::string> poison_;
};

// Content-addressed response cache, optionally persisted as one JSON file
// per key under `dir`. Writes are serialized.
class ResponseCache
{
public:
  explicit ResponseCache(std::optional<std::filesystem::path> dir = std::nullopt);

  std::optional<ChatResponse> get(const std::string& key);
  void put(const std::string& key, const ChatRequest& request, const ChatResponse& response);

  size_t hits() const { return hits_.load(); }
  size_t misses() const { return misses_.load(); }

private:
  std::optional<std::filesystem::path> dir_;
  std::mutex mutex_;
  std::map<std::string, ChatResponse> memory_;
  std::atomic<size_t> hits_{0};
  std::atomic<size_t> misses_{0};
};

struct CompletionRequest
{
  std::string provider;
  TemplateId template_id = TemplateId::CritiqueGen;
  Bindings bindings;
  std::optional<SamplingParams> sampling; // provider default when absent
  int sample_index = 0;
};

struct BatchSlot
{
  std::optional<ChatExchange> exchange;
  std::optional<GatewayError> error;

  bool ok() const { return exchange.has_value(); }
};

class Gateway
{
public:
  Gateway(TemplateSet templates, std::shared_ptr<ResponseCache> cache);
  ~Gateway();

  Gateway(const Gateway&) = delete;
  Gateway& operator=(const Gateway&) = delete;

  // Builds an HttpProvider or MockProvider from the config.
  void add_provider(const ProviderConfig& config);
  void add_provider(const ProviderConfig& config, std::shared_ptr<Provider> provider);

  bool has_provider(const std::string& name) const;
  const ProviderConfig& provider_config(const std::string& name) const;
  std::shared_ptr<Provider> provider(const std::string& name) const;

  const TemplateSet& templates() const { return templates_; }
  ResponseCache& cache() { return *cache_; }

  ChatExchange complete(const CompletionRequest& request);

  // Results in request order; at most `parallelism_bound` requests in flight.
  // Failures land in their slot without aborting the batch.
  std::vector<BatchSlot> complete_batch(const std::vector<CompletionRequest>& requests,
                                        size_t parallelism_bound);

  size_t provider_calls() const { return provider_calls_.load(); }

private:
  struct Slot;
  Slot& slot(const std::string& name) const;

  TemplateSet templates_;
  std::shared_ptr<ResponseCache> cache_;
  std::map<std::string, std::unique_ptr<Slot>> providers_;
  std::atomic<size_t> provider_calls_{0};
};

} // namespace ifc
