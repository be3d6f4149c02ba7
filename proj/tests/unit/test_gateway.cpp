// Same httplib configuration as the library, so both halves agree on its
// inline definitions.
#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "fixture.hpp"

#include "ifc/digest.hpp"
#include "ifc/gateway.hpp"

#include <doctest.h>
#include <nlohmann/json.hpp>

#include <fstream>
#include <set>
#include <thread>

using namespace ifc;

namespace {

ProviderConfig mock_config(const std::filesystem::path& dir, const std::string& name = "m")
{
  ProviderConfig c;
  c.name = name;
  c.kind = ProviderKind::Mock;
  c.model_name = name + "-model";
  c.fixture_dir = dir;
  c.max_retries = 2;
  c.backoff_ms = 0;
  return c;
}

CompletionRequest checklist_request(const std::string& instruction, int sample_index = 0,
                                    const std::string& provider = "m")
{
  CompletionRequest r;
  r.provider = provider;
  r.template_id = TemplateId::ChecklistGen;
  r.bindings = {{"instruction", instruction}};
  r.sample_index = sample_index;
  return r;
}

// Writes the fixture the mock will look up for `request`.
std::string write_fixture(const Gateway& gw, const CompletionRequest& request, const std::string& text)
{
  const auto& cfg = gw.provider_config(request.provider);
  ChatRequest chat{cfg.model_name, gw.templates().get(request.template_id).render(request.bindings),
                   request.sampling.value_or(cfg.sampling), request.sample_index};
  std::string key = cache_key(chat);
  std::ofstream(cfg.fixture_dir / (key + ".txt"), std::ios::binary) << text;
  return key;
}

struct MockRig
{
  TempDir dir;
  std::shared_ptr<MockProvider> mock;
  std::unique_ptr<Gateway> gw;

  explicit MockRig(std::optional<std::filesystem::path> cache_dir = std::nullopt, int bound = 8)
  {
    mock = std::make_shared<MockProvider>(dir.path());
    gw = std::make_unique<Gateway>(TemplateSet::builtin(), std::make_shared<ResponseCache>(cache_dir));
    auto cfg = mock_config(dir.path());
    cfg.parallelism_bound = bound;
    gw->add_provider(cfg, mock);
  }
};

} // namespace

TEST_CASE("sha256")
{
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("cache keys cover every request field")
{
  ChatRequest base{"model", "prompt", SamplingParams{}, 0};
  std::set<std::string> keys{cache_key(base)};
  for (int i = 1; i < 5; ++i)
  {
    ChatRequest r = base;
    r.sample_index = i;
    keys.insert(cache_key(r));
  }
  CHECK(keys.size() == 5);

  ChatRequest m = base;
  m.model_name = "other";
  ChatRequest p = base;
  p.prompt = "prompt ";
  ChatRequest t = base;
  t.sampling.temperature = 0.5;
  ChatRequest tp = base;
  tp.sampling.top_p = 1.0;
  for (const auto& r : {m, p, t, tp})
    CHECK(cache_key(r) != cache_key(base));
  CHECK(cache_key(base) == cache_key(ChatRequest{"model", "prompt", SamplingParams{}, 0}));
}

TEST_CASE("templates")
{
  auto set = TemplateSet::builtin();
  const auto& t = set.get(TemplateId::ChecklistGen);
  CHECK_THROWS_AS(t.render({}), TemplateError);
  std::string out = t.render({{"instruction", "Write {a} haiku"}});
  CHECK(out.find("Write {a} haiku") != std::string::npos);
  CHECK(out.find("{instruction}") == std::string::npos);

  // a prompt directory overrides single templates
  TempDir dir;
  std::ofstream(dir / std::string(template_file(TemplateId::ChecklistGen))) << "Decompose: {instruction}";
  auto custom = TemplateSet::from_directory(dir.path());
  CHECK(custom.get(TemplateId::ChecklistGen).render({{"instruction", "x"}}) == "Decompose: x");
  CHECK(custom.get(TemplateId::CritiqueGen).body() == set.get(TemplateId::CritiqueGen).body());
}

TEST_CASE("provider config validation")
{
  ProviderConfig c = mock_config("/tmp");
  CHECK_NOTHROW(c.validate());
  c.sampling.temperature = -0.1;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = mock_config("/tmp");
  c.parallelism_bound = 0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}

TEST_CASE("mock replay, cache hits and missing fixtures")
{
  MockRig rig;
  auto req = checklist_request("Write a poem.");
  write_fixture(*rig.gw, req, "fixture text");

  auto first = rig.gw->complete(req);
  CHECK(first.response.text == "fixture text");
  CHECK_FALSE(first.from_cache);
  CHECK(rig.mock->lookups() == 1);

  auto second = rig.gw->complete(req);
  CHECK(second.from_cache);
  CHECK(second.response.text == first.response.text);
  CHECK(rig.mock->lookups() == 1);
  CHECK(rig.gw->cache().hits() == 1);

  try
  {
    rig.gw->complete(checklist_request("Unrecorded instruction."));
    FAIL("expected MissingFixture");
  }
  catch (const GatewayError& e)
  {
    CHECK(e.kind() == GatewayErrorKind::MissingFixture);
  }

  try
  {
    rig.gw->complete(checklist_request("x", 0, "nobody"));
    FAIL("expected UnknownProvider");
  }
  catch (const GatewayError& e)
  {
    CHECK(e.kind() == GatewayErrorKind::UnknownProvider);
  }

  CompletionRequest unbound = req;
  unbound.bindings.clear();
  try
  {
    rig.gw->complete(unbound);
    FAIL("expected TemplateError");
  }
  catch (const GatewayError& e)
  {
    CHECK(e.kind() == GatewayErrorKind::TemplateError);
  }
}

TEST_CASE("persistent cache serves a fresh gateway byte-identically")
{
  TempDir cache;
  std::string text = "line one\nline two ✓\n";
  {
    MockRig rig(cache.path());
    auto req = checklist_request("Persist me.");
    write_fixture(*rig.gw, req, text);
    CHECK(rig.gw->complete(req).response.text == text);
  }
  MockRig cold(cache.path()); // empty fixture dir
  auto hit = cold.gw->complete(checklist_request("Persist me."));
  CHECK(hit.from_cache);
  CHECK(hit.response.text == text);
  CHECK(cold.mock->lookups() == 0);
}

TEST_CASE("transient failures are retried, then surfaced")
{
  MockRig rig;
  auto req = checklist_request("Retry me.");
  write_fixture(*rig.gw, req, "ok");

  rig.mock->fail_next(2); // max_retries = 2 -> third attempt succeeds
  CHECK(rig.gw->complete(req).response.text == "ok");
  CHECK(rig.mock->lookups() == 3);

  auto req2 = checklist_request("Retry me again.");
  write_fixture(*rig.gw, req2, "ok");
  rig.mock->fail_next(3);
  try
  {
    rig.gw->complete(req2);
    FAIL("expected ProviderUnavailable");
  }
  catch (const GatewayError& e)
  {
    CHECK(e.kind() == GatewayErrorKind::ProviderUnavailable);
  }
}

TEST_CASE("batches: order, bound, per-slot errors")
{
  MockRig rig(std::nullopt, 64);
  rig.mock->set_delay_ms(2);
  std::vector<CompletionRequest> reqs;
  for (int i = 0; i < 100; ++i)
  {
    reqs.push_back(checklist_request("Instruction " + std::to_string(i)));
    if (i != 37)
      write_fixture(*rig.gw, reqs.back(), "answer " + std::to_string(i));
  }
  auto slots = rig.gw->complete_batch(reqs, 8);
  REQUIRE(slots.size() == 100);
  size_t ok = 0;
  for (int i = 0; i < 100; ++i)
  {
    if (i == 37)
    {
      CHECK_FALSE(slots[37].ok());
      REQUIRE(slots[37].error.has_value());
      CHECK(slots[37].error->kind() == GatewayErrorKind::MissingFixture);
      continue;
    }
    REQUIRE(slots[static_cast<size_t>(i)].ok());
    CHECK(slots[static_cast<size_t>(i)].exchange->response.text == "answer " + std::to_string(i));
    ++ok;
  }
  CHECK(ok == 99);
  CHECK(rig.mock->peak_in_flight() <= 8);
  CHECK(rig.mock->peak_in_flight() >= 2);

  CHECK(rig.gw->complete_batch({}, 8).empty());
}

TEST_CASE("provider parallelism bound caps in-flight calls across batches")
{
  MockRig rig(std::nullopt, 3);
  rig.mock->set_delay_ms(2);
  std::vector<CompletionRequest> reqs;
  for (int i = 0; i < 40; ++i)
  {
    reqs.push_back(checklist_request("Bounded " + std::to_string(i)));
    write_fixture(*rig.gw, reqs.back(), "x");
  }
  rig.gw->complete_batch(reqs, 16);
  CHECK(rig.mock->peak_in_flight() <= 3);
}

TEST_CASE("http provider speaks the chat-completions shape")
{
  httplib::Server server;
  std::atomic<int> calls{0};
  std::atomic<int> fail_first{1};
  nlohmann::json seen;
  std::string auth;
  std::mutex m;
  server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    ++calls;
    if (fail_first-- > 0)
    {
      res.status = 503;
      return;
    }
    {
      std::lock_guard lock(m);
      seen = nlohmann::json::parse(req.body);
      auth = req.get_header_value("Authorization");
    }
    nlohmann::json body = {{"choices", {{{"message", {{"role", "assistant"}, {"content", "pong"}}},
                                         {"finish_reason", "stop"}}}}};
    res.set_content(body.dump(), "application/json");
  });
  server.Post("/denied", [](const httplib::Request&, httplib::Response& res) { res.status = 401; });
  int port = server.bind_to_any_port("127.0.0.1");
  std::thread runner([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  ::setenv("IFC_TEST_KEY", "sekret", 1);
  ProviderConfig cfg;
  cfg.name = "remote";
  cfg.kind = ProviderKind::Http;
  cfg.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions";
  cfg.model_name = "judge-1";
  cfg.auth_env = "IFC_TEST_KEY";
  cfg.max_retries = 2;
  cfg.backoff_ms = 1;
  cfg.timeout_seconds = 5;

  Gateway gw(TemplateSet::builtin(), std::make_shared<ResponseCache>());
  gw.add_provider(cfg);
  auto req = checklist_request("Ping.", 0, "remote");
  req.sampling = SamplingParams{0.0, 1.0, 256};
  auto ex = gw.complete(req);
  CHECK(ex.response.text == "pong");
  CHECK(ex.response.finish_reason == "stop");
  CHECK(calls == 2);
  {
    std::lock_guard lock(m);
    CHECK(seen["model"] == "judge-1");
    CHECK(seen["temperature"] == 0.0);
    CHECK(seen["max_tokens"] == 256);
    CHECK(seen["messages"][0]["role"] == "user");
    CHECK(seen["messages"][0]["content"].get<std::string>().find("Ping.") != std::string::npos);
    CHECK(auth == "Bearer sekret");
  }

  ProviderConfig denied = cfg;
  denied.name = "denied";
  denied.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/denied";
  gw.add_provider(denied);
  try
  {
    gw.complete(checklist_request("Ping.", 0, "denied"));
    FAIL("expected AuthError");
  }
  catch (const GatewayError& e)
  {
    CHECK(e.kind() == GatewayErrorKind::AuthError);
  }

  ProviderConfig nokey = cfg;
  nokey.name = "nokey";
  nokey.auth_env = "IFC_TEST_KEY_UNSET";
  ::unsetenv("IFC_TEST_KEY_UNSET");
  gw.add_provider(nokey);
  try
  {
    gw.complete(checklist_request("Other.", 0, "nokey"));
    FAIL("expected AuthError");
  }
  catch (const GatewayError& e)
  {
    CHECK(e.kind() == GatewayErrorKind::AuthError);
  }

  server.stop();
  runner.join();
}
