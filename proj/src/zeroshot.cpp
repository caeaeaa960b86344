#include "localhealth/zeroshot.hpp"

#include <algorithm>
#include <cctype>
#include <optional>
#include <thread>

#include <nlohmann/json.hpp>

#include "localhealth/resources.hpp"
#include "localhealth/sha256.hpp"

namespace localhealth::zeroshot {

std::string_view bundled_template() { return resources::zeroshot_prompt_template; }

std::string template_sha256() { return to_hex(sha256(bundled_template())); }

namespace {

void replace_once(std::string& text, std::string_view placeholder, std::string_view value) {
  const auto pos = text.find(placeholder);
  if (pos == std::string::npos) throw ValidationError("prompt template lacks placeholder " + std::string(placeholder));
  text.replace(pos, placeholder.size(), value);
}

}  // namespace

std::string build_prompt(std::span<const std::string> tweets, int adi, std::string_view prompt_template) {
  if (tweets.size() != kTweetsPerPrompt) {
    throw ValidationError("build_prompt: expected " + std::to_string(kTweetsPerPrompt) + " tweets, got " +
                          std::to_string(tweets.size()));
  }
  std::string list = "[";
  for (std::size_t i = 0; i < tweets.size(); ++i) {
    if (i) list += ", ";
    list += nlohmann::json(tweets[i]).dump();
  }
  list += "]";
  std::string out(prompt_template);
  // ADI first: the tweet list may itself contain "{adi}".
  replace_once(out, "{adi}", std::to_string(adi));
  replace_once(out, "{tweets}", list);
  return out;
}

std::string_view to_string(Answer a) {
  switch (a) {
    case Answer::A: return "A";
    case Answer::B: return "B";
    case Answer::Unparseable: return "Unparseable";
  }
  return "?";
}

Answer parse_response(std::string_view raw) {
  std::size_t i = 0;
  while (i < raw.size()) {
    while (i < raw.size() && std::isspace(static_cast<unsigned char>(raw[i]))) ++i;
    const std::size_t start = i;
    while (i < raw.size() && !std::isspace(static_cast<unsigned char>(raw[i]))) ++i;
    std::string_view tok = raw.substr(start, i - start);
    while (!tok.empty() && !std::isalnum(static_cast<unsigned char>(tok.front()))) tok.remove_prefix(1);
    while (!tok.empty() && !std::isalnum(static_cast<unsigned char>(tok.back()))) tok.remove_suffix(1);
    if (tok.size() == 1) {
      const char c = static_cast<char>(std::toupper(static_cast<unsigned char>(tok[0])));
      if (c == 'A') return Answer::A;
      if (c == 'B') return Answer::B;
    }
  }
  return Answer::Unparseable;
}

std::uint64_t sampling_seed(std::uint64_t seed, std::string_view bg_id, int year) {
  return mix_seed(seed, {fnv1a64(bg_id), static_cast<std::uint64_t>(year), 0x2E50});
}

std::vector<std::vector<std::size_t>> sample_with_replacement(std::size_t n, std::uint64_t seed, std::size_t draws,
                                                              std::size_t size) {
  if (n == 0) throw ValidationError("zero-shot sampling: empty cell");
  Engine rng(seed);
  std::vector<std::vector<std::size_t>> out(draws);
  for (auto& d : out) {
    d.reserve(size);
    for (std::size_t k = 0; k < size; ++k) {
      d.push_back(static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(n) - 1)));
    }
  }
  return out;
}

int verdict(std::span<const Answer> responses) {
  const auto a = std::count(responses.begin(), responses.end(), Answer::A);
  return static_cast<std::size_t>(a) >= kVotesForHighRisk ? 1 : 0;
}

std::string with_retries(const std::function<std::string()>& fn, const RetryPolicy& policy) {
  auto delay = policy.initial_backoff;
  for (int attempt = 0;; ++attempt) {
    try {
      return fn();
    } catch (const TransportError&) {
      if (attempt >= policy.retries) throw;
    }
    if (delay.count() > 0) std::this_thread::sleep_for(delay);
    delay = std::chrono::milliseconds(static_cast<std::int64_t>(static_cast<double>(delay.count()) * policy.multiplier));
  }
}

VotePacket classify_bg(std::span<const std::string> tweets, int adi, std::string_view bg_id, int year,
                       ChatClient& client, std::uint64_t seed, const ClassifyOptions& options) {
  if (tweets.empty()) throw ValidationError("classify_bg: no tweets for " + std::string(bg_id));
  const auto draws =
      sample_with_replacement(tweets.size(), sampling_seed(seed, bg_id, year), options.samples, options.tweets_per_prompt);

  std::vector<std::string> prompts;
  prompts.reserve(draws.size());
  for (const auto& d : draws) {
    std::vector<std::string> chosen;
    chosen.reserve(d.size());
    for (auto i : d) chosen.push_back(tweets[i]);
    prompts.push_back(build_prompt(chosen, adi));
  }

  std::vector<std::optional<std::string>> raw(prompts.size());
  std::string failure;
  try {
    parallel_for(prompts.size(), std::max(1u, options.max_in_flight), [&](std::size_t i) {
      raw[i] = with_retries([&] { return client.complete(prompts[i]); }, options.retry);
    });
  } catch (const TransportError& e) {
    failure = e.what();
  }

  VotePacket packet;
  packet.bg_id = bg_id;
  packet.year = year;
  for (const auto& r : raw) {
    if (!r) {
      if (failure.empty()) continue;
      break;  // keep the answered prefix only
    }
    packet.raw.push_back(*r);
    packet.responses.push_back(parse_response(*r));
  }
  packet.count_a = static_cast<std::size_t>(std::count(packet.responses.begin(), packet.responses.end(), Answer::A));
  packet.count_unparseable =
      static_cast<std::size_t>(std::count(packet.responses.begin(), packet.responses.end(), Answer::Unparseable));
  if (!failure.empty()) {
    throw ClassifyError("classify_bg: " + std::string(bg_id) + ": request failed after retries: " + failure, packet);
  }
  packet.verdict = verdict(packet.responses);
  return packet;
}

std::string request_body(std::string_view model, std::string_view prompt) {
  nlohmann::ordered_json j;
  j["model"] = std::string(model);
  j["messages"] = nlohmann::ordered_json::array({{{"role", "user"}, {"content", std::string(prompt)}}});
  return j.dump();
}

std::string response_text(std::string_view body) {
  try {
    const auto j = nlohmann::json::parse(body);
    return j.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw TransportError(std::string("malformed chat-completion response: ") + e.what());
  }
}

}  // namespace localhealth::zeroshot
