#include "vulnbench/gateway.hpp"

#include <chrono>
#include <cstdlib>
#include <thread>

#include <httplib.h>

namespace vulnbench {

std::string category_name(ModelCategory c) {
  switch (c) {
    case ModelCategory::General: return "general";
    case ModelCategory::CodeSpecific: return "code_specific";
    case ModelCategory::Reasoning: return "reasoning";
  }
  return "general";
}

ModelCategory parse_category(const std::string& name) {
  std::string n = to_lower(name);
  if (n == "general") return ModelCategory::General;
  if (n == "code_specific" || n == "code-specific" || n == "code") return ModelCategory::CodeSpecific;
  if (n == "reasoning") return ModelCategory::Reasoning;
  throw Error("unknown model category: " + name);
}

std::size_t estimate_tokens(const std::string& text) { return (text.size() + 2) / 3; }

bool fits_context(const ModelProfile& profile, const std::string& prompt) {
  return estimate_tokens(prompt) + profile.max_output_tokens <= profile.context_tokens;
}

namespace {

struct Endpoint {
  std::string base;  // scheme://host[:port]
  std::string path;
};

Endpoint parse_endpoint(const std::string& url) {
  std::size_t scheme = url.find("://");
  if (scheme == std::string::npos) throw Error("endpoint url lacks a scheme: " + url);
  std::size_t slash = url.find('/', scheme + 3);
  if (slash == std::string::npos) return {url, "/v1/chat/completions"};
  return {url.substr(0, slash), url.substr(slash)};
}

// Pulls the assistant text out of the common chat-completion reply shapes.
std::string completion_text(const nlohmann::json& body) {
  if (body.contains("choices") && body["choices"].is_array() && !body["choices"].empty()) {
    const auto& choice = body["choices"][0];
    if (choice.contains("message") && choice["message"].contains("content") &&
        choice["message"]["content"].is_string())
      return choice["message"]["content"].get<std::string>();
    if (choice.contains("text") && choice["text"].is_string())
      return choice["text"].get<std::string>();
  }
  if (body.contains("message") && body["message"].contains("content") &&
      body["message"]["content"].is_string())
    return body["message"]["content"].get<std::string>();
  if (body.contains("content") && body["content"].is_string())
    return body["content"].get<std::string>();
  return "";
}

bool transient_status(int status) { return status == 429 || (status >= 500 && status < 600); }

bool timeout_error(httplib::Error e) {
  return e == httplib::Error::ConnectionTimeout || e == httplib::Error::Read ||
         e == httplib::Error::Write;
}

}  // namespace

Completion Gateway::complete(const ModelProfile& profile, const std::string& prompt,
                             const CompletionParams& params) const {
  const Endpoint endpoint = parse_endpoint(profile.endpoint_url);

  nlohmann::json body{{"model", profile.model_id},
                      {"messages", nlohmann::json::array({{{"role", "user"}, {"content", prompt}}})},
                      {"temperature", params.temperature},
                      {"max_tokens", params.max_tokens.value_or(profile.max_output_tokens)}};
  if (params.seed) body["seed"] = *params.seed;
  const std::string payload = body.dump();

  httplib::Headers headers;
  if (!profile.api_key_env.empty()) {
    if (const char* key = std::getenv(profile.api_key_env.c_str()); key && *key)
      headers.emplace("Authorization", std::string("Bearer ") + key);
  }

  int delay_ms = retry_.base_delay_ms;
  int last_status = 0;
  bool last_timeout = false;
  std::string last_detail;

  for (int attempt = 0; attempt <= retry_.max_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(std::chrono::milliseconds(delay_ms));
      delay_ms = std::min(delay_ms * 2, retry_.max_delay_ms);
    }

    httplib::Client client(endpoint.base);
    client.set_connection_timeout(std::chrono::duration<double>(profile.request_timeout_s));
    client.set_read_timeout(std::chrono::duration<double>(profile.request_timeout_s));
    client.set_write_timeout(std::chrono::duration<double>(profile.request_timeout_s));

    auto begin = std::chrono::steady_clock::now();
    httplib::Result res = client.Post(endpoint.path, headers, payload, "application/json");
    auto end = std::chrono::steady_clock::now();

    if (!res) {
      last_timeout = timeout_error(res.error());
      last_status = 0;
      last_detail = httplib::to_string(res.error());
      continue;  // transport fault: retry
    }
    last_timeout = false;
    last_status = res->status;
    if (transient_status(res->status)) {
      last_detail = res->body.substr(0, 200);
      continue;
    }
    if (res->status != 200) throw HttpError(res->status, res->body.substr(0, 200));

    nlohmann::json reply;
    try {
      reply = nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::exception& e) {
      throw HttpError(res->status, std::string("unparseable body: ") + e.what());
    }
    std::string text = completion_text(reply);
    if (text.empty()) throw EmptyCompletion();

    Completion out;
    out.text = std::move(text);
    out.latency_ms = std::chrono::duration_cast<std::chrono::milliseconds>(end - begin).count();
    return out;
  }

  if (last_status == 429) throw RateLimited();
  if (last_timeout) throw Timeout();
  throw HttpError(last_status, last_detail);
}

nlohmann::json profile_to_json(const ModelProfile& p) {
  nlohmann::json j{{"model_id", p.model_id},
                   {"endpoint_url", p.endpoint_url},
                   {"context_tokens", p.context_tokens},
                   {"max_output_tokens", p.max_output_tokens},
                   {"request_timeout_s", p.request_timeout_s},
                   {"category", category_name(p.category)}};
  if (p.cutoff_date) j["cutoff_date"] = p.cutoff_date->to_string();
  if (!p.api_key_env.empty()) j["api_key_env"] = p.api_key_env;
  return j;
}

ModelProfile profile_from_json(const nlohmann::json& j) {
  ModelProfile p;
  p.model_id = j.at("model_id").get<std::string>();
  p.endpoint_url = j.at("endpoint_url").get<std::string>();
  p.context_tokens = j.at("context_tokens").get<std::size_t>();
  p.max_output_tokens = j.value("max_output_tokens", std::size_t{4096});
  p.request_timeout_s = j.value("request_timeout_s", 120.0);
  p.category = parse_category(j.value("category", "general"));
  if (j.contains("cutoff_date") && !j["cutoff_date"].is_null())
    p.cutoff_date = parse_date(j["cutoff_date"].get<std::string>());
  p.api_key_env = j.value("api_key_env", "");
  if (p.context_tokens == 0) throw Error("model " + p.model_id + ": context_tokens must be positive");
  return p;
}

std::vector<ModelProfile> profiles_from_json(const nlohmann::json& j) {
  const nlohmann::json& arr = j.is_array() ? j : j.at("models");
  std::vector<ModelProfile> out;
  for (const auto& item : arr) out.push_back(profile_from_json(item));
  return out;
}

}  // namespace vulnbench
