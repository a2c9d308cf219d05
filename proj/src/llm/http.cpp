#include <cstdlib>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "failslow/llm.hpp"

namespace failslow::llm {

HttpTransport::HttpTransport(std::string endpoint, std::string api_key, std::string model)
    : api_key_(std::move(api_key)), model_(std::move(model)) {
  const auto scheme = endpoint.find("://");
  if (scheme == std::string::npos) throw Error(ErrorKind::Config, "LLM endpoint must be an http(s) URL: " + endpoint);
  const auto slash = endpoint.find('/', scheme + 3);
  base_ = endpoint.substr(0, slash);
  path_ = slash == std::string::npos ? "/" : endpoint.substr(slash);
}

std::unique_ptr<HttpTransport> HttpTransport::from_env() {
  const char* endpoint = std::getenv("FAILSLOW_LLM_ENDPOINT");
  if (!endpoint || !*endpoint) throw Error(ErrorKind::Config, "FAILSLOW_LLM_ENDPOINT is not set");
  const char* key = std::getenv("FAILSLOW_LLM_API_KEY");
  const char* model = std::getenv("FAILSLOW_LLM_MODEL");
  return std::make_unique<HttpTransport>(endpoint, key ? key : "", model && *model ? model : "gpt-4o-mini");
}

std::string HttpTransport::complete(const std::string& prompt) {
  httplib::Client client(base_);
  client.set_read_timeout(120, 0);
  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
  const nlohmann::json body = {{"model", model_},
                               {"temperature", 0},
                               {"messages", {{{"role", "user"}, {"content", prompt}}}}};
  const std::string payload = body.dump();

  std::string last_error;
  for (int attempt = 0; attempt < 2; ++attempt) {
    auto res = client.Post(path_, headers, payload, "application/json");
    if (!res) {
      last_error = "request failed: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status == 429 || res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200) throw Error(ErrorKind::Protocol, "LLM endpoint answered HTTP " + std::to_string(res->status));
    try {
      const auto j = nlohmann::json::parse(res->body);
      return j.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::Protocol, std::string("malformed chat-completion response: ") + e.what());
    }
  }
  throw Error(ErrorKind::Protocol, "LLM endpoint unavailable after retry: " + last_error);
}

}  // namespace failslow::llm
