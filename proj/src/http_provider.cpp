#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "ifc/gateway.hpp"

#include <nlohmann/json.hpp>

#include <cstdlib>

namespace ifc {

HttpProvider::HttpProvider(ProviderConfig config) : config_(std::move(config))
{
  const std::string& url = config_.endpoint;
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos)
    throw std::invalid_argument("provider " + config_.name + ": endpoint must be an absolute URL");
  auto path_start = url.find('/', scheme_end + 3);
  scheme_host_port_ = url.substr(0, path_start);
  path_ = path_start == std::string::npos ? "/" : url.substr(path_start);
}

ChatResponse HttpProvider::send(const ChatRequest& request)
{
  std::string api_key;
  if (!config_.auth_env.empty())
  {
    const char* value = std::getenv(config_.auth_env.c_str());
    if (value == nullptr || *value == '\0')
      throw GatewayError(GatewayErrorKind::AuthError,
                         "provider " + config_.name + ": environment variable " + config_.auth_env + " is not set");
    api_key = value;
  }

  nlohmann::ordered_json body;
  body["model"] = request.model_name;
  body["messages"] = nlohmann::ordered_json::array({{{"role", "user"}, {"content", request.prompt}}});
  body["temperature"] = request.sampling.temperature;
  body["top_p"] = request.sampling.top_p;
  body["max_tokens"] = request.sampling.max_output_length;
  body["stream"] = false;

  httplib::Client client(scheme_host_port_);
  auto timeout = std::chrono::duration<double>(config_.timeout_seconds);
  client.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
  client.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
  client.set_write_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));

  httplib::Headers headers;
  if (!api_key.empty())
    headers.emplace("Authorization", "Bearer " + api_key);

  auto result = client.Post(path_, headers, body.dump(), "application/json");
  if (!result)
    throw GatewayError(GatewayErrorKind::Transient,
                       "provider " + config_.name + ": " + httplib::to_string(result.error()));

  const int status = result->status;
  if (status == 401 || status == 403)
    throw GatewayError(GatewayErrorKind::AuthError,
                       "provider " + config_.name + ": HTTP " + std::to_string(status));
  if (status == 408 || status == 429 || status >= 500)
    throw GatewayError(GatewayErrorKind::Transient,
                       "provider " + config_.name + ": HTTP " + std::to_string(status));
  if (status != 200)
    throw GatewayError(GatewayErrorKind::ProviderUnavailable,
                       "provider " + config_.name + ": HTTP " + std::to_string(status) + ": " + result->body);

  try
  {
    auto doc = nlohmann::json::parse(result->body);
    const auto& choice = doc.at("choices").at(0);
    ChatResponse response;
    response.text = choice.at("message").at("content").get<std::string>();
    if (choice.contains("finish_reason") && choice["finish_reason"].is_string())
      response.finish_reason = choice["finish_reason"].get<std::string>();
    return response;
  }
  catch (const nlohmann::json::exception& e)
  {
    throw GatewayError(GatewayErrorKind::ProviderUnavailable,
                       "provider " + config_.name + ": malformed completion body: " + e.what());
  }
}

} // namespace ifc
