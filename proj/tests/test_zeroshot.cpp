#include <doctest.h>

#include <atomic>
#include <mutex>

#include <nlohmann/json.hpp>

#include "localhealth/zeroshot.hpp"

using namespace localhealth;
using namespace localhealth::zeroshot;

namespace {

std::vector<std::string> tweets(std::size_t n, const std::string& prefix = "tweet ") {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(prefix + std::to_string(i));
  return out;
}

// Answers A for the first `a` calls, B afterwards.
class ScriptedClient : public ChatClient {
 public:
  explicit ScriptedClient(int a) : a_(a) {}
  std::string complete(const std::string& prompt) override {
    std::lock_guard lock(mu_);
    prompts.push_back(prompt);
    return calls_++ < a_ ? "A" : "B. Low-risk";
  }
  std::vector<std::string> prompts;

 private:
  std::mutex mu_;
  int a_;
  int calls_ = 0;
};

// Fails every request from number `fail_at` on.
class FailingClient : public ChatClient {
 public:
  explicit FailingClient(int fail_at) : fail_at_(fail_at) {}
  std::string complete(const std::string&) override {
    if (calls++ >= fail_at_) throw TransportError("connection reset");
    return "A";
  }
  int calls = 0;

 private:
  int fail_at_;
};

RetryPolicy no_wait(int retries) {
  RetryPolicy p;
  p.retries = retries;
  p.initial_backoff = std::chrono::milliseconds{0};
  return p;
}

}  // namespace

TEST_CASE("bundled template") {
  CHECK(template_sha256() == "ceba7d73232feb6a4b539569464ce10f23fa8856c4c55fc274d8b1ebb4ec7dfd");
  const auto t = bundled_template();
  CHECK(t.find("A. High-risk") != std::string_view::npos);
  CHECK(t.find("B. Low-risk") != std::string_view::npos);
  CHECK(t.find("{tweets}") != std::string_view::npos);
  CHECK(t.find("{adi}") != std::string_view::npos);
}

TEST_CASE("build_prompt") {
  auto tw = tweets(100);
  tw[0] = "she said \"hi\" {adi}";
  const auto p = build_prompt(tw, 73);
  CHECK(p == build_prompt(tw, 73));
  CHECK(p.find("ADI index for this block group is 73") != std::string::npos);
  CHECK(p.find("[\"she said \\\"hi\\\" {adi}\", \"tweet 1\", ") != std::string::npos);
  CHECK(p.find("{tweets}") == std::string::npos);
  CHECK(p != build_prompt(tw, 74));
  CHECK_THROWS_AS(build_prompt(tweets(99), 5), ValidationError);
  CHECK_THROWS_AS(build_prompt(tweets(101), 5), ValidationError);
  CHECK_THROWS_AS(build_prompt(tweets(100), 5, "no placeholders"), ValidationError);
  CHECK(build_prompt(tweets(100), 5, "{adi}|{tweets}").rfind("5|[\"tweet 0\"", 0) == 0);
}

TEST_CASE("parse_response") {
  CHECK(parse_response("A") == Answer::A);
  CHECK(parse_response("b") == Answer::B);
  CHECK(parse_response("A. High-risk") == Answer::A);
  CHECK(parse_response("Answer: (B)") == Answer::B);
  CHECK(parse_response("  \n**A**") == Answer::A);
  CHECK(parse_response("") == Answer::Unparseable);
  CHECK(parse_response("High-risk") == Answer::Unparseable);
  CHECK(parse_response("AB") == Answer::Unparseable);
  CHECK(parse_response("I'd say B, not A") == Answer::B);
  CHECK(parse_response("A1") == Answer::Unparseable);
}

TEST_CASE("parse_response agrees with the reference grammar on fuzz strings") {
  struct Case {
    const char* text;
    Answer expected;
  };
  static const Case cases[] = {
#include "parse_fuzz.inc"
  };
  int n = 0;
  for (const auto& c : cases) {
    CAPTURE(c.text);
    CHECK(parse_response(c.text) == c.expected);
    ++n;
  }
  CHECK(n == 50);
}

TEST_CASE("verdict") {
  std::vector<Answer> v(40, Answer::B);
  std::fill(v.begin(), v.begin() + 21, Answer::A);
  CHECK(verdict(v) == 1);
  v[20] = Answer::B;
  CHECK(verdict(v) == 0);  // 20 / 20
  v[20] = Answer::Unparseable;
  CHECK(verdict(v) == 0);
}

TEST_CASE("sampling with replacement matches the reference stream") {
  // tests/oracles/zeroshot_sampler.py
  const auto a = sample_with_replacement(37, sampling_seed(7, "BG000123", 2019));
  REQUIRE(a.size() == 40);
  const std::vector<std::size_t> ea{4, 31, 36, 10, 15, 7, 33, 5, 8, 19, 1, 19};
  CHECK(std::vector<std::size_t>(a[0].begin(), a[0].begin() + 12) == ea);
  const auto b = sample_with_replacement(1000, sampling_seed(0, "BG9", 2015));
  const std::vector<std::size_t> eb{176, 684, 772, 450, 536, 868, 211, 202, 205, 414, 781, 349};
  CHECK(std::vector<std::size_t>(b[0].begin(), b[0].begin() + 12) == eb);
  for (const auto& d : b) {
    CHECK(d.size() == 100);
    for (auto i : d) CHECK(i < 1000);
  }
  CHECK(sampling_seed(0, "BG9", 2015) != sampling_seed(0, "BG9", 2016));

  const auto one = sample_with_replacement(1, 3);
  for (const auto& d : one) CHECK(d == std::vector<std::size_t>(100, 0));
  CHECK_THROWS_AS(sample_with_replacement(0, 3), ValidationError);
}

TEST_CASE("classify_bg with a scripted client") {
  const auto tw = tweets(150);
  SUBCASE("21 A of 40 is high risk") {
    ScriptedClient c(21);
    const auto p = classify_bg(tw, 40, "BG1", 2019, c, 0);
    CHECK(p.responses.size() == 40);
    CHECK(p.count_a == 21);
    CHECK(p.verdict == 1);
    CHECK(c.prompts.size() == 40);
  }
  SUBCASE("20 A of 40 is low risk") {
    ScriptedClient c(20);
    const auto p = classify_bg(tw, 40, "BG1", 2019, c, 0);
    CHECK(p.count_a == 20);
    CHECK(p.verdict == 0);
  }
  SUBCASE("prompts depend only on the seed") {
    ScriptedClient c1(0), c2(0), c3(0);
    classify_bg(tw, 40, "BG1", 2019, c1, 5);
    classify_bg(tw, 40, "BG1", 2019, c2, 5);
    classify_bg(tw, 40, "BG1", 2019, c3, 6);
    CHECK(c1.prompts == c2.prompts);
    CHECK(c1.prompts != c3.prompts);
  }
  SUBCASE("a one-tweet cell repeats the tweet") {
    ScriptedClient c(0);
    ClassifyOptions opt;
    opt.samples = 2;
    classify_bg(tweets(1, "only "), 10, "BG2", 2019, c, 0, opt);
    std::vector<std::string> same(100, "only 0");
    CHECK(c.prompts[0] == build_prompt(same, 10));
  }
  SUBCASE("parallel requests give the same packet") {
    ScriptedClient serial(40), parallel(40);
    ClassifyOptions opt;
    opt.max_in_flight = 4;
    const auto a = classify_bg(tw, 40, "BG1", 2019, serial, 1);
    const auto b = classify_bg(tw, 40, "BG1", 2019, parallel, 1, opt);
    CHECK(a.responses == b.responses);
    CHECK(a.verdict == b.verdict);
  }
}

TEST_CASE("retries and transport failures") {
  int calls = 0;
  const auto ok = with_retries(
      [&] {
        if (++calls < 3) throw TransportError("flaky");
        return std::string("A");
      },
      no_wait(3));
  CHECK(ok == "A");
  CHECK(calls == 3);

  calls = 0;
  CHECK_THROWS_AS(with_retries(
                      [&]() -> std::string {
                        ++calls;
                        throw TransportError("down");
                      },
                      no_wait(2)),
                  TransportError);
  CHECK(calls == 3);

  FailingClient f(5);
  ClassifyOptions opt;
  opt.retry = no_wait(1);
  try {
    classify_bg(tweets(120), 40, "BG3", 2019, f, 0, opt);
    FAIL("expected ClassifyError");
  } catch (const ClassifyError& e) {
    CHECK(e.partial().responses.size() == 5);
    CHECK(e.partial().count_a == 5);
    CHECK(e.partial().bg_id == "BG3");
  }
}

TEST_CASE("chat-completion wire format") {
  const auto body = nlohmann::json::parse(request_body("gpt-4", "hello \"there\""));
  CHECK(body["model"] == "gpt-4");
  CHECK(body["messages"][0]["role"] == "user");
  CHECK(body["messages"][0]["content"] == "hello \"there\"");
  CHECK(response_text(R"({"choices":[{"message":{"role":"assistant","content":"B"}}]})") == "B");
  CHECK_THROWS_AS(response_text(R"({"choices":[]})"), TransportError);
  CHECK_THROWS_AS(response_text("<html>"), TransportError);
}
