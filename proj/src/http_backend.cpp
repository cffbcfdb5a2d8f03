#include <httplib.h>

#include <cstdlib>

#include "govdec/error.hpp"
#include "govdec/llm.hpp"

namespace govdec {

HttpBackendConfig HttpBackendConfig::from_environment() {
  HttpBackendConfig c;
  if (const char* v = std::getenv("LLM_PROVIDER"); v && *v) c.provider = v;
  if (const char* v = std::getenv("LLM_ENDPOINT"); v && *v) c.endpoint = v;
  if (const char* v = std::getenv("LLM_API_KEY"); v && *v) c.api_key = v;
  if (c.endpoint.empty()) throw ConfigError("LLM_ENDPOINT", "not set");
  return c;
}

HttpBackend::HttpBackend(HttpBackendConfig config) : config_(std::move(config)) {
  const std::string& url = config_.endpoint;
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("LLM_ENDPOINT", "expected scheme://host[:port]/path");
  const auto path_start = url.find('/', scheme_end + 3);
  scheme_host_port_ = url.substr(0, path_start);
  path_prefix_ = path_start == std::string::npos ? std::string() : url.substr(path_start);
  while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
}

Completion HttpBackend::complete(const CompletionRequest& request) {
  httplib::Client cli(scheme_host_port_);
  cli.set_connection_timeout(config_.timeout_seconds, 0);
  cli.set_read_timeout(config_.timeout_seconds, 0);
  httplib::Headers headers;
  if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);

  const json body = {{"model", request.model.model_id},
                     {"messages",
                      json::array({{{"role", "system"},
                                    {"content", "Reply with a single JSON object that matches the requested schema."}},
                                   {{"role", "user"}, {"content", request.prompt}}})},
                     {"temperature", request.model.temperature},
                     {"max_tokens", request.model.token_budget}};
  auto res = cli.Post(path_prefix_ + "/chat/completions", headers, body.dump(), "application/json");
  if (!res) throw Error("backend transport error: " + httplib::to_string(res.error()));
  if (res->status != 200) throw Error("backend returned HTTP " + std::to_string(res->status) + ": " + res->body);

  json reply;
  try {
    reply = json::parse(res->body);
  } catch (const json::exception& e) {
    throw Error(std::string("backend reply is not JSON: ") + e.what());
  }
  Completion c;
  try {
    c.text = reply.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception&) {
    throw Error("backend reply lacks choices[0].message.content");
  }
  c.usage = reply.value("usage", json::object());
  return c;
}

}  // namespace govdec
