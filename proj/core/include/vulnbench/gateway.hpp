#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vulnbench/types.hpp"
#include "vulnbench/util.hpp"

namespace vulnbench {

enum class ModelCategory { General, CodeSpecific, Reasoning };

std::string category_name(ModelCategory c);
ModelCategory parse_category(const std::string& name);

struct ModelProfile {
  std::string model_id;
  std::string endpoint_url;  // full URL; path defaults to /v1/chat/completions
  std::size_t context_tokens = 0;
  std::size_t max_output_tokens = 4096;
  double request_timeout_s = 120.0;
  ModelCategory category = ModelCategory::General;
  std::optional<Date> cutoff_date;   // training-data cutoff, for leakage splits
  std::string api_key_env;           // env var holding a bearer token, if any
};

struct CompletionParams {
  double temperature = 0.7;
  std::optional<std::size_t> max_tokens;  // unset: use the profile's limit
  std::optional<std::uint64_t> seed;
};

struct Completion {
  std::string text;
  std::int64_t latency_ms = 0;
};

struct GatewayError : Error {
  using Error::Error;
};
struct Timeout : GatewayError {
  Timeout() : GatewayError("request timed out") {}
};
struct RateLimited : GatewayError {
  RateLimited() : GatewayError("rate limited after retries") {}
};
struct HttpError : GatewayError {
  explicit HttpError(int status, const std::string& detail = "")
      : GatewayError("http error " + std::to_string(status) + (detail.empty() ? "" : ": " + detail)),
        status(status) {}
  int status;
};
struct EmptyCompletion : GatewayError {
  EmptyCompletion() : GatewayError("endpoint returned an empty completion") {}
};

// Conservative upper bound, ceil(bytes/3); monotone in length.
std::size_t estimate_tokens(const std::string& text);

// True iff the prompt plus the profile's output budget fits the context
// window. Oversize prompts are skipped by callers, never truncated.
bool fits_context(const ModelProfile& profile, const std::string& prompt);

struct RetryPolicy {
  int max_retries = 3;          // attempts = max_retries + 1
  int base_delay_ms = 500;      // doubled per retry
  int max_delay_ms = 8000;
};

// Chat-completion client: one user message carrying the whole prompt (the
// templates embed their own persona), de-facto chat JSON body, bearer auth
// from the environment, exponential backoff on 429/5xx and transport faults.
class Gateway {
 public:
  explicit Gateway(RetryPolicy retry = {}) : retry_(retry) {}

  Completion complete(const ModelProfile& profile, const std::string& prompt,
                      const CompletionParams& params = {}) const;

 private:
  RetryPolicy retry_;
};

nlohmann::json profile_to_json(const ModelProfile& p);
ModelProfile profile_from_json(const nlohmann::json& j);
std::vector<ModelProfile> profiles_from_json(const nlohmann::json& j);  // array or {"models": [...]}

}  // namespace vulnbench
