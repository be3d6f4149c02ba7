#include "ifc/gateway.hpp"

#include "ifc/digest.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

namespace ifc {

namespace {

std::string format_real(double value)
{
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", value);
  return buf;
}

std::optional<std::string> read_file(const std::filesystem::path& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    return std::nullopt;
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view data)
{
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out)
      throw std::runtime_error("cannot write " + tmp.string());
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
  }
  std::filesystem::rename(tmp, path);
}

} // namespace

void ProviderConfig::validate() const
{
  if (name.empty())
    throw std::invalid_argument("provider needs a name");
  if (!(sampling.temperature >= 0.0))
    throw std::invalid_argument("provider " + name + ": temperature must be >= 0");
  if (!(sampling.top_p > 0.0 && sampling.top_p <= 1.0))
    throw std::invalid_argument("provider " + name + ": top_p must lie in (0, 1]");
  if (sampling.max_output_length < 1)
    throw std::invalid_argument("provider " + name + ": max_output_length must be >= 1");
  if (parallelism_bound < 1)
    throw std::invalid_argument("provider " + name + ": parallelism_bound must be >= 1");
  if (max_retries < 0 || backoff_ms < 0)
    throw std::invalid_argument("provider " + name + ": retry settings must be non-negative");
  if (kind == ProviderKind::Http && endpoint.empty())
    throw std::invalid_argument("provider " + name + ": http provider needs an endpoint");
}

std::string cache_key(const ChatRequest& request)
{
  std::string material;
  material.reserve(request.prompt.size() + 128);
  const char sep = '\x1f';
  material += "ifc-cache-v1";
  material += sep;
  material += request.model_name;
  material += sep;
  material += request.prompt;
  material += sep;
  material += format_real(request.sampling.temperature);
  material += sep;
  material += format_real(request.sampling.top_p);
  material += sep;
  material += std::to_string(request.sampling.max_output_length);
  material += sep;
  material += std::to_string(request.sample_index);
  return sha256_hex(material);
}

std::string_view to_string(GatewayErrorKind kind)
{
  switch (kind)
  {
  case GatewayErrorKind::Transient: return "Transient";
  case GatewayErrorKind::ProviderUnavailable: return "ProviderUnavailable";
  case GatewayErrorKind::TemplateError: return "TemplateError";
  case GatewayErrorKind::AuthError: return "AuthError";
  case GatewayErrorKind::MissingFixture: return "MissingFixture";
  case GatewayErrorKind::UnknownProvider: return "UnknownProvider";
  }
  return "Unknown";
}

// ---- MockProvider ----

MockProvider::MockProvider(std::filesystem::path fixture_dir) : fixture_dir_(std::move(fixture_dir)) {}

void MockProvider::fail_when_prompt_contains(std::string needle)
{
  std::lock_guard lock(mutex_);
  poison_.push_back(std::move(needle));
}

ChatResponse MockProvider::send(const ChatRequest& request)
{
  size_t now = ++in_flight_;
  size_t peak = peak_in_flight_.load();
  while (now > peak && !peak_in_flight_.compare_exchange_weak(peak, now))
    ;
  struct Leave
  {
    std::atomic<size_t>& counter;
    ~Leave() { --counter; }
  } leave{in_flight_};

  ++lookups_;
  if (int ms = delay_ms_.load(); ms > 0)
    std::this_thread::sleep_for(std::chrono::milliseconds(ms));

  {
    std::lock_guard lock(mutex_);
    for (const auto& needle : poison_)
      if (request.prompt.find(needle) != std::string::npos)
        throw GatewayError(GatewayErrorKind::ProviderUnavailable, "mock: injected failure");
  }
  int remaining = fail_remaining_.load();
  while (remaining > 0 && !fail_remaining_.compare_exchange_weak(remaining, remaining - 1))
    ;
  if (remaining > 0)
    throw GatewayError(GatewayErrorKind::Transient, "mock: injected transient failure");

  std::string key = cache_key(request);
  auto text = read_file(fixture_dir_ / (key + ".txt"));
  if (!text)
    throw GatewayError(GatewayErrorKind::MissingFixture,
                       "mock: no fixture " + key + ".txt in " + fixture_dir_.string());
  return {std::move(*text), "stop", 0.0};
}

// ---- ResponseCache ----

ResponseCache::ResponseCache(std::optional<std::filesystem::path> dir) : dir_(std::move(dir))
{
  if (dir_)
    std::filesystem::create_directories(*dir_);
}

std::optional<ChatResponse> ResponseCache::get(const std::string& key)
{
  std::lock_guard lock(mutex_);
  if (auto it = memory_.find(key); it != memory_.end())
  {
    ++hits_;
    return it->second;
  }
  if (dir_)
  {
    if (auto raw = read_file(*dir_ / (key + ".json")))
    {
      try
      {
        auto doc = nlohmann::json::parse(*raw);
        ChatResponse response{doc.at("text").get<std::string>(), doc.value("finish_reason", ""), 0.0};
        memory_.emplace(key, response);
        ++hits_;
        return response;
      }
      catch (const nlohmann::json::exception&)
      {
        // corrupt entry: treat as a miss and overwrite on put
      }
    }
  }
  ++misses_;
  return std::nullopt;
}

void ResponseCache::put(const std::string& key, const ChatRequest& request, const ChatResponse& response)
{
  std::lock_guard lock(mutex_);
  memory_.insert_or_assign(key, response);
  if (!dir_)
    return;
  nlohmann::ordered_json doc;
  doc["key"] = key;
  doc["model"] = request.model_name;
  doc["sample_index"] = request.sample_index;
  doc["text"] = response.text;
  doc["finish_reason"] = response.finish_reason;
  write_file_atomic(*dir_ / (key + ".json"), doc.dump());
}

// ---- Gateway ----

struct Gateway::Slot
{
  ProviderConfig config;
  std::shared_ptr<Provider> provider;
  std::mutex mutex;
  std::condition_variable cv;
  int in_flight = 0;

  void acquire()
  {
    std::unique_lock lock(mutex);
    cv.wait(lock, [&] { return in_flight < config.parallelism_bound; });
    ++in_flight;
  }
  void release()
  {
    {
      std::lock_guard lock(mutex);
      --in_flight;
    }
    cv.notify_one();
  }
};

Gateway::Gateway(TemplateSet templates, std::shared_ptr<ResponseCache> cache)
  : templates_(std::move(templates)), cache_(cache ? std::move(cache) : std::make_shared<ResponseCache>())
{
}

Gateway::~Gateway() = default;

void Gateway::add_provider(const ProviderConfig& config)
{
  config.validate();
  std::shared_ptr<Provider> provider;
  if (config.kind == ProviderKind::Http)
    provider = std::make_shared<HttpProvider>(config);
  else
    provider = std::make_shared<MockProvider>(config.fixture_dir);
  add_provider(config, std::move(provider));
}

void Gateway::add_provider(const ProviderConfig& config, std::shared_ptr<Provider> provider)
{
  config.validate();
  auto slot = std::make_unique<Slot>();
  slot->config = config;
  slot->provider = std::move(provider);
  providers_.insert_or_assign(config.name, std::move(slot));
}

bool Gateway::has_provider(const std::string& name) const { return providers_.count(name) > 0; }

Gateway::Slot& Gateway::slot(const std::string& name) const
{
  auto it = providers_.find(name);
  if (it == providers_.end())
    throw GatewayError(GatewayErrorKind::UnknownProvider, "no provider named \"" + name + "\"");
  return *it->second;
}

const ProviderConfig& Gateway::provider_config(const std::string& name) const { return slot(name).config; }

std::shared_ptr<Provider> Gateway::provider(const std::string& name) const { return slot(name).provider; }

ChatExchange Gateway::complete(const CompletionRequest& request)
{
  Slot& target = slot(request.provider);

  ChatExchange exchange;
  exchange.template_id = request.template_id;
  try
  {
    exchange.request.prompt = templates_.get(request.template_id).render(request.bindings);
  }
  catch (const TemplateError& e)
  {
    throw GatewayError(GatewayErrorKind::TemplateError, e.what());
  }
  exchange.request.model_name = target.config.model_name;
  exchange.request.sampling = request.sampling.value_or(target.config.sampling);
  exchange.request.sample_index = request.sample_index;
  exchange.cache_key = cache_key(exchange.request);

  if (auto cached = cache_->get(exchange.cache_key))
  {
    exchange.response = std::move(*cached);
    exchange.from_cache = true;
    return exchange;
  }

  std::string last_error;
  for (int attempt = 0; attempt <= target.config.max_retries; ++attempt)
  {
    if (attempt > 0 && target.config.backoff_ms > 0)
      std::this_thread::sleep_for(std::chrono::milliseconds(
          static_cast<int64_t>(target.config.backoff_ms) << std::min(attempt - 1, 16)));
    target.acquire();
    try
    {
      ++provider_calls_;
      auto start = std::chrono::steady_clock::now();
      ChatResponse response = target.provider->send(exchange.request);
      target.release();
      response.latency_ms =
          std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
      cache_->put(exchange.cache_key, exchange.request, response);
      exchange.response = std::move(response);
      return exchange;
    }
    catch (const GatewayError& e)
    {
      target.release();
      if (e.kind() != GatewayErrorKind::Transient)
        throw;
      last_error = e.what();
    }
    catch (...)
    {
      target.release();
      throw;
    }
  }
  throw GatewayError(GatewayErrorKind::ProviderUnavailable,
                     "provider " + request.provider + " unavailable after " +
                         std::to_string(target.config.max_retries + 1) + " attempts: " + last_error);
}

std::vector<BatchSlot> Gateway::complete_batch(const std::vector<CompletionRequest>& requests,
                                               size_t parallelism_bound)
{
  std::vector<BatchSlot> results(requests.size());
  if (requests.empty())
    return results;

  std::atomic<size_t> next{0};
  auto worker = [&] {
    for (size_t i = next++; i < requests.size(); i = next++)
    {
      try
      {
        results[i].exchange = complete(requests[i]);
      }
      catch (const GatewayError& e)
      {
        results[i].error = e;
      }
      catch (const std::exception& e)
      {
        results[i].error = GatewayError(GatewayErrorKind::ProviderUnavailable, e.what());
      }
    }
  };

  size_t workers = std::min(std::max<size_t>(parallelism_bound, 1), requests.size());
  if (workers == 1)
  {
    worker();
    return results;
  }
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (size_t w = 0; w < workers; ++w)
    pool.emplace_back(worker);
  pool.clear(); // joins
  return results;
}

} // namespace ifc
