// Zero-shot risk classification with a chat-completion model: prompt
// rendering, repeated sampling with replacement and majority voting.
#pragma once

#include <chrono>
#include <memory>

#include "localhealth/common.hpp"

namespace localhealth::zeroshot {

inline constexpr std::size_t kTweetsPerPrompt = 100;
inline constexpr std::size_t kSamplesPerBg = 40;
inline constexpr std::size_t kVotesForHighRisk = 21;  // strictly more than half of 40
inline constexpr const char* kApiKeyEnv = "LOCALHEALTH_API_KEY";

/// The bundled prompt template; "{tweets}" and "{adi}" are substituted.
std::string_view bundled_template();
std::string template_sha256();

/// Renders the template with the tweets as a JSON-quoted array ("a", "b", ...).
/// Requires exactly 100 tweets.
std::string build_prompt(std::span<const std::string> tweets, int adi,
                         std::string_view prompt_template = bundled_template());

enum class Answer { A, B, Unparseable };

std::string_view to_string(Answer a);

/// The first standalone token equal to A or B (case-insensitive, ignoring
/// surrounding punctuation) decides; otherwise Unparseable.
Answer parse_response(std::string_view raw);

/// `draws` lists of `size` indices into [0, n), drawn with replacement.
std::vector<std::vector<std::size_t>> sample_with_replacement(std::size_t n, std::uint64_t seed,
                                                              std::size_t draws = kSamplesPerBg,
                                                              std::size_t size = kTweetsPerPrompt);

/// Seed of the sampling stream for one block group and year.
std::uint64_t sampling_seed(std::uint64_t seed, std::string_view bg_id, int year);

/// Unparseable answers count as B.
int verdict(std::span<const Answer> responses);

/// Raised by clients when a request could not be completed.
class TransportError : public Error {
 public:
  using Error::Error;
};

/// Synchronous request/response boundary. Implementations must be safe to
/// call from several threads when used with max_in_flight > 1.
class ChatClient {
 public:
  virtual ~ChatClient() = default;
  virtual std::string complete(const std::string& prompt) = 0;
};

struct RetryPolicy {
  int retries = 3;  // attempts after the first
  std::chrono::milliseconds initial_backoff{500};
  double multiplier = 2.0;
};

/// Runs fn, retrying TransportError with exponential backoff.
std::string with_retries(const std::function<std::string()>& fn, const RetryPolicy& policy);

struct VotePacket {
  std::string bg_id;
  int year = 0;
  std::vector<Answer> responses;  // sample order; partial if a request failed
  std::vector<std::string> raw;
  int verdict = 0;
  std::size_t count_a = 0;
  std::size_t count_unparseable = 0;
};

struct ClassifyOptions {
  std::size_t samples = kSamplesPerBg;
  std::size_t tweets_per_prompt = kTweetsPerPrompt;
  unsigned max_in_flight = 1;
  RetryPolicy retry;
};

class ClassifyError : public Error {
 public:
  ClassifyError(const std::string& what, VotePacket partial) : Error(what), partial_(std::move(partial)) {}
  const VotePacket& partial() const { return partial_; }

 private:
  VotePacket partial_;
};

VotePacket classify_bg(std::span<const std::string> tweets, int adi, std::string_view bg_id, int year,
                       ChatClient& client, std::uint64_t seed, const ClassifyOptions& options = {});

/// Request body {"model": ..., "messages": [{"role": "user", "content": prompt}]}.
std::string request_body(std::string_view model, std::string_view prompt);
/// Text of choices[0].message.content.
std::string response_text(std::string_view body);

struct HttpClientConfig {
  std::string endpoint;  // e.g. https://host/v1/chat/completions
  std::string model;
  std::string api_key;   // read from LOCALHEALTH_API_KEY when empty
  std::chrono::seconds timeout{120};
};

/// HTTP(S) chat-completion client.
std::unique_ptr<ChatClient> make_http_client(HttpClientConfig config);

}  // namespace localhealth::zeroshot
