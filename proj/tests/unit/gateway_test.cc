#include <atomic>
#include <cmath>
#include <filesystem>
#include <thread>

#include "doctest.h"
#include "httplib.h"
#include "kgtraces/gateway.h"
#include "kgtraces/text.h"

using namespace kgtraces;
using nlohmann::json;

namespace {

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("kgtraces-gw-" + std::to_string(reinterpret_cast<std::uintptr_t>(this)) + "-" +
            std::to_string(std::chrono::steady_clock::now().time_since_epoch().count()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
};

// Local completion server. Replies are built by `handler`.
struct FakeServer {
  httplib::Server server;
  std::thread thread;
  int port = 0;
  std::atomic<int> calls{0};
  std::string last_body;
  std::string last_auth;
  std::mutex mu;

  template <typename F>
  explicit FakeServer(F handler) {
    server.Post("/v1/completions", [this, handler](const httplib::Request& req, httplib::Response& res) {
      int n = ++calls;
      {
        std::lock_guard lock(mu);
        last_body = req.body;
        last_auth = req.get_header_value("Authorization");
      }
      handler(n, json::parse(req.body), res);
    });
    port = server.bind_to_any_port("127.0.0.1");
    thread = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
  }
  ~FakeServer() {
    server.stop();
    thread.join();
  }
  GatewayConfig config() const {
    GatewayConfig c;
    c.backend = "http";
    c.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/v1/completions";
    c.model = "test-model";
    c.backoff = std::chrono::milliseconds(1);
    c.timeout_s = 5;
    return c;
  }
};

json completion(const std::vector<std::pair<std::string, double>>& toks) {
  json t = json::array(), v = json::array();
  std::string text;
  for (const auto& [tok, lp] : toks) {
    t.push_back(tok);
    v.push_back(lp);
    text += tok;
  }
  return {{"choices", json::array({{{"text", text}, {"logprobs", {{"tokens", t}, {"token_logprobs", v}}}}})}};
}

}  // namespace

TEST_CASE("whitespace tokenizer reconstructs text") {
  for (std::string s : {"", "a", " a b  c\n", "Step 1: x\nFinal Answer: y", "   "}) {
    CHECK(join(whitespace_tokenize(s), "") == s);
  }
  CHECK(whitespace_tokenize("a b").size() == 2);
}

TEST_CASE("mock is deterministic and self-consistent") {
  MockGateway g;
  GenParams p;
  p.seed = 11;
  auto a = g.generate("Question? Answer briefly.", p);
  auto b = g.generate("Question? Answer briefly.", p);
  CHECK(a.text == b.text);
  CHECK(a.tokens == b.tokens);
  std::string joined;
  for (const auto& t : a.tokens) {
    CHECK(t.logprob <= 0.0);
    joined += t.token;
  }
  CHECK(joined == a.text);
  auto s = g.score_sequence("Question? Answer briefly.", a.text);
  CHECK(s.tokens == a.tokens);
  CHECK(s.total == doctest::Approx(a.total_logprob()).epsilon(1e-12));
}

TEST_CASE("mock uniform vocabulary scores") {
  MockOptions o;
  o.uniform_vocab = 4;
  MockGateway g(o);
  auto s = g.score_sequence("p", "x y");
  REQUIRE(s.tokens.size() == 2);
  CHECK(s.total == doctest::Approx(-2 * std::log(4.0)));
}

TEST_CASE("mock fixtures, stop sequences and token cap") {
  MockOptions o;
  o.add_fixture("hello", "one two three STOP four");
  MockGateway g(o);
  GenParams p;
  CHECK(g.generate("hello", p).text == "one two three STOP four");
  p.stop = {" STOP"};
  CHECK(g.generate("hello", p).text == "one two three");
  p.stop.clear();
  p.max_tokens = 2;
  CHECK(g.generate("hello", p).text == "one two");
}

TEST_CASE("mock top-k is ranked and distinct") {
  MockOptions o;
  o.choices = {{"alpha", 1.0}, {"beta", 1.0}, {"gamma", 1.0}};
  MockGateway g(o);
  auto out = g.generate_topk("q", 3, {});
  REQUIRE(!out.empty());
  CHECK(out.size() <= 3);
  for (std::size_t i = 1; i < out.size(); ++i) {
    CHECK(out[i - 1].total_logprob() >= out[i].total_logprob());
    CHECK(out[i - 1].text != out[i].text);
  }
}

TEST_CASE("rank_candidates keeps best duplicate") {
  GenerationTrace a{"x", {{"x", -1.0}}, {}, {}};
  GenerationTrace b{"y", {{"y", -0.5}}, {}, {}};
  GenerationTrace c{"x", {{"x", -0.1}}, {}, {}};
  auto r = rank_candidates({a, b, c}, 5);
  REQUIRE(r.size() == 2);
  CHECK(r[0].text == "x");
  CHECK(r[0].total_logprob() == -0.1);
  CHECK(rank_candidates({a, b, c}, 1).size() == 1);
}

TEST_CASE("trace json round trip") {
  GenerationTrace t{"a b", {{"a", -0.5}, {" b", -0.25}}, std::nullopt, {}};
  t.params.seed = 3;
  t.params.stop = {"\n"};
  auto back = trace_from_json(to_json(t));
  CHECK(back.text == t.text);
  CHECK(back.tokens == t.tokens);
  CHECK(back.params.seed == 3);
  CHECK(back.params.stop == t.params.stop);
}

TEST_CASE("config parsing") {
  auto c = gateway_config_from_json(json::parse(
      R"({"backend":"http","endpoint":"http://h/x","max_retries":5,"backoff_ms":10,"mock":{"seed":4,"uniform_vocab":8}})"));
  CHECK(c.backend == "http");
  CHECK(c.max_retries == 5);
  CHECK(c.backoff.count() == 10);
  CHECK(c.mock.seed == 4);
  CHECK(c.mock.uniform_vocab == std::optional<std::size_t>(8));
  CHECK_THROWS_AS(gateway_config_from_json(json::parse(R"({"backend":"smoke"})")), ArgumentError);
}

TEST_CASE("http wire format and bearer token") {
  FakeServer srv([](int, const json&, httplib::Response& res) {
    res.set_content(completion({{"Final", -0.1}, {" Answer:", -0.2}, {" x", -0.3}}).dump(), "application/json");
  });
  setenv("KGTRACES_TEST_KEY", "sekret", 1);
  auto cfg = srv.config();
  cfg.api_key_env = "KGTRACES_TEST_KEY";
  HttpGateway g(cfg);
  GenParams p;
  p.seed = 9;
  p.stop = {"\n\n"};
  auto t = g.generate("prompt text", p);
  CHECK(t.text == "Final Answer: x");
  CHECK(t.tokens.size() == 3);
  CHECK(t.total_logprob() == doctest::Approx(-0.6));
  json body = json::parse(srv.last_body);
  CHECK(body["prompt"] == "prompt text");
  CHECK(body["model"] == "test-model");
  CHECK(body["seed"] == 9);
  CHECK(body["logprobs"] == true);
  CHECK(body["stop"] == json::array({"\n\n"}));
  CHECK(srv.last_auth == "Bearer sekret");
  unsetenv("KGTRACES_TEST_KEY");
}

TEST_CASE("http retries transient failures then succeeds") {
  FakeServer srv([](int n, const json&, httplib::Response& res) {
    if (n == 1) {
      res.status = 503;
    } else if (n == 2) {
      res.status = 429;
    } else {
      res.set_content(completion({{"ok", -0.5}}).dump(), "application/json");
    }
  });
  HttpGateway g(srv.config());
  CHECK(g.generate("p", {}).text == "ok");
  CHECK(srv.calls == 3);
}

TEST_CASE("http error mapping") {
  FakeServer srv([](int, const json& body, httplib::Response& res) {
    std::string p = body["prompt"];
    if (p == "bad-request") {
      res.status = 400;
    } else if (p == "no-logprobs") {
      res.set_content(R"({"choices":[{"text":"x"}]})", "application/json");
    } else if (p == "positive") {
      res.set_content(completion({{"x", 0.5}}).dump(), "application/json");
    } else {
      res.status = 500;
    }
  });
  auto cfg = srv.config();
  cfg.max_retries = 1;
  HttpGateway g(cfg);
  auto kind_of = [&](const std::string& prompt) {
    try {
      g.generate(prompt, {});
    } catch (const GatewayError& e) {
      return e.kind();
    }
    FAIL("no error");
    return GatewayErrorKind::kUnsupported;
  };
  CHECK(kind_of("bad-request") == GatewayErrorKind::kMalformedReply);
  CHECK(kind_of("no-logprobs") == GatewayErrorKind::kMalformedReply);
  CHECK(kind_of("positive") == GatewayErrorKind::kMalformedReply);
  int before = srv.calls;
  CHECK(kind_of("server-down") == GatewayErrorKind::kTransport);
  CHECK(srv.calls - before == 2);
  CHECK_THROWS_AS(g.score_sequence("a", "b"), GatewayError);
}

TEST_CASE("unreachable endpoint is a transport error") {
  GatewayConfig c;
  c.backend = "http";
  c.endpoint = "http://127.0.0.1:9/v1/completions";
  c.max_retries = 0;
  c.timeout_s = 1;
  HttpGateway g(c);
  try {
    g.generate("p", {});
    FAIL("expected failure");
  } catch (const GatewayError& e) {
    CHECK(e.kind() == GatewayErrorKind::kTransport);
  }
}

TEST_CASE("http sequence scoring via echo offsets") {
  FakeServer srv([](int, const json& body, httplib::Response& res) {
    CHECK(body["echo"] == true);
    json lp = {{"tokens", {"Q:", " hi", " A", " B"}},
               {"token_logprobs", {nullptr, -1.0, -0.5, -0.25}},
               {"text_offset", {0, 2, 5, 7}}};
    res.set_content(json({{"choices", {{{"text", "Q: hi A B"}, {"logprobs", lp}}}}}).dump(), "application/json");
  });
  auto cfg = srv.config();
  cfg.supports_scoring = true;
  HttpGateway g(cfg);
  auto s = g.score_sequence("Q: hi", " A B");
  REQUIRE(s.tokens.size() == 2);
  CHECK(s.total == doctest::Approx(-0.75));
}

TEST_CASE("replay gateway records then serves offline") {
  TempDir dir;
  auto inner = std::make_shared<MockGateway>();
  ReplayGateway rec(dir.path, inner);
  GenParams p;
  p.seed = 2;
  auto a = rec.generate("question", p);
  auto sa = rec.score_sequence("question", "answer");
  auto ka = rec.generate_topk("question", 2, p);

  ReplayGateway offline(dir.path, nullptr);
  auto b = offline.generate("question", p);
  CHECK(b.text == a.text);
  CHECK(b.tokens == a.tokens);
  CHECK(offline.score_sequence("question", "answer").tokens == sa.tokens);
  CHECK(offline.generate_topk("question", 2, p).size() == ka.size());
  try {
    offline.generate("never seen", p);
    FAIL("expected miss");
  } catch (const GatewayError& e) {
    CHECK(e.kind() == GatewayErrorKind::kUnavailable);
    CHECK_FALSE(e.retryable());
  }
}
