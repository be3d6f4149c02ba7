#include "fixture.hpp"

#include "ifc/config.hpp"
#include "ifc/records.hpp"

#include <doctest.h>

#include <fstream>
#include <sstream>

using namespace ifc;
using records::json;

namespace {

std::string slurp(const std::filesystem::path& p)
{
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

} // namespace

TEST_CASE("headers and versions")
{
  json h = records::header(records::kind::Reward);
  CHECK(h["kind"] == "reward");
  CHECK(h["v"] == 1);
  CHECK_NOTHROW(records::check_header(h, records::kind::Reward));
  CHECK_THROWS_AS(records::check_header(h, records::kind::Verdict), records::SchemaError);

  h["v"] = 2;
  CHECK_THROWS_AS(records::check_header(h, records::kind::Reward), records::SchemaError);
  h["v"] = "1.3";
  CHECK_NOTHROW(records::check_header(h, records::kind::Reward));
  h["v"] = "2.0";
  CHECK_THROWS_AS(records::check_header(h, records::kind::Reward), records::SchemaError);
  h.erase("v");
  CHECK_THROWS_AS(records::check_header(h, records::kind::Reward), records::SchemaError);
}

TEST_CASE("jsonl io")
{
  TempDir dir;
  auto path = dir / "x.jsonl";
  std::vector<json> lines = {json{{"a", 1}, {"text", "长城 ✓"}}, json{{"b", "two"}}};
  records::write_jsonl(path, lines);
  CHECK(slurp(path) == "{\"a\":1,\"text\":\"长城 ✓\"}\n{\"b\":\"two\"}\n");
  CHECK(records::read_jsonl(path) == lines);
  // no temporary left behind
  size_t files = 0;
  for ([[maybe_unused]] const auto& e : std::filesystem::directory_iterator(dir.path()))
    ++files;
  CHECK(files == 1);

  std::ofstream(dir / "bad.jsonl") << "{\"ok\":1}\n\n{broken\n";
  try
  {
    records::read_jsonl(dir / "bad.jsonl");
    FAIL("expected SchemaError");
  }
  catch (const records::SchemaError& e)
  {
    CHECK(std::string(e.what()).find(":3") != std::string::npos);
  }
  CHECK_THROWS_AS(records::read_jsonl(dir / "missing.jsonl"), records::IoError);
}

TEST_CASE("record round trips")
{
  records::Instruction in{"i1", "g1", "bench", "Do X", "Done X", {{"source", "test"}}};
  auto in2 = records::instruction_from(records::to_record(in));
  CHECK(in2.input_id == "i1");
  CHECK(in2.group_id == "g1");
  CHECK(in2.metadata == in.metadata);

  json bare = records::header(records::kind::Instruction);
  bare["input_id"] = "solo";
  bare["instruction"] = "Do";
  bare["response"] = "Did";
  auto solo = records::instruction_from(bare);
  CHECK(solo.group_id == "solo");
  CHECK(solo.benchmark == "default");

  records::CritiqueSampleRecord cs;
  cs.input_id = "i1";
  cs.sample_index = 3;
  cs.provenance = Provenance::SelfSample;
  cs.provider = "critic";
  cs.critique.input_id = "i1";
  cs.critique.provenance = Provenance::SelfSample;
  cs.critique.segments = {{1, "c1", "e1", Judgment::Followed}, {2, "c2", "e2", Judgment::NotFollowed}};
  auto cs2 = records::critique_sample_from(records::to_record(cs));
  CHECK(cs2.sample_index == 3);
  CHECK(cs2.critique == cs.critique);
  CHECK(records::to_record(cs2) == records::to_record(cs));

  records::CritiqueSampleRecord err;
  err.input_id = "i2";
  err.ok = false;
  err.error = "MissingJudgment: block 2";
  err.raw = "garbage";
  auto err2 = records::critique_sample_from(records::to_record(err));
  CHECK_FALSE(err2.ok);
  CHECK(err2.raw == "garbage");

  FinalCritique fc;
  fc.input_id = "i1";
  FinalConstraint kept;
  kept.constraint_index = 1;
  kept.judgment = Judgment::Followed;
  kept.confidence = 0.8;
  kept.explanation = "why";
  kept.explanation_sample_index = 2;
  kept.votes = {4, 1};
  FinalConstraint dropped;
  dropped.constraint_index = 2;
  dropped.confidence = 0.5;
  dropped.votes = {1, 1};
  dropped.reason = DiscardReason::Tie;
  fc.constraints = {kept, dropped};
  auto j = records::to_record(fc);
  CHECK(j["constraints"][1]["judgment"].is_null());
  CHECK(j["constraints"][1]["discard_reason"] == "tie");
  CHECK(records::to_record(records::final_critique_from(j)) == j);

  RewardRecord rr;
  rr.group_id = "g";
  rr.input_id = rr.response_id = "r";
  rr.judgments = {1, 0, 0};
  rr.reward = Rational(1, 3);
  auto rj = records::to_record(rr);
  CHECK(rj["reward"]["numerator"] == 1);
  CHECK(rj["reward"]["denominator"] == 3);
  CHECK(records::reward_from(rj).reward == Rational(1, 3));

  records::GoldLabelRecord g{"i1", 2, Judgment::NotFollowed, GoldSource::VerificationCode};
  auto g2 = records::gold_label_from(records::to_record(g));
  CHECK(g2.constraint_index == 2);
  CHECK(g2.source == GoldSource::VerificationCode);

  BenchmarkMetrics m{"alpha", {8, 2, 2, 8}, f1_report({8, 2, 2, 8}), AgreementReport{8.0 / 9, 8, 1, 1, 10}};
  auto m2 = records::metrics_from(records::to_record(m));
  CHECK(m2.confusion == m.confusion);
  CHECK(m2.f1.positive_f1 == 0.8);
  REQUIRE(m2.pairwise);
  CHECK(m2.pairwise->ties_removed == 1);
}

TEST_CASE("type errors name the field")
{
  json j = records::header(records::kind::GoldLabel);
  j["input_id"] = 5;
  try
  {
    records::gold_label_from(j);
    FAIL("expected SchemaError");
  }
  catch (const records::SchemaError& e)
  {
    CHECK(std::string(e.what()).find("input_id") != std::string::npos);
  }
}

TEST_CASE("config defaults")
{
  auto c = parse_config("{}", ".");
  CHECK(c.n_expert_samples == 5);
  CHECK(c.m_self_samples == 10);
  CHECK(c.confidence_threshold == 0.75);
  CHECK(c.split.sft_fraction == 0.6);
  CHECK(c.split.ref_fraction == 0.4);
  CHECK(c.max_pairs_per_input == 1);
  CHECK(c.dpo_group_size == 10);
  CHECK(c.grpo_rollouts == 32);
  ProviderConfig p;
  CHECK(p.sampling.temperature == 1.0);
  CHECK(p.sampling.top_p == 0.9);
}

TEST_CASE("config parsing")
{
  auto c = parse_config(R"({
    "n_expert_samples": 3, "seed": 9, "cache_dir": "cache", "sft_ref_split": [0.5, 0.5],
    "skip_stages": ["revision"],
    "providers": {"p": {"kind": "mock", "fixture_dir": "fx", "temperature": 0.7}},
    "roles": {"checklist": "p", "expert": "p", "critic": "p", "verifiers": ["p"], "extractor": "p", "reviser": "p"}
  })",
                        "/base");
  CHECK(c.n_expert_samples == 3);
  CHECK(c.seed == 9);
  CHECK(c.split.seed == 9);
  CHECK(c.split.sft_fraction == 0.5);
  CHECK(*c.cache_dir == std::filesystem::path("/base/cache"));
  CHECK(c.skip_stages.count("revision") == 1);
  REQUIRE(c.providers.size() == 1);
  CHECK(c.providers[0].model_name == "p");
  CHECK(c.providers[0].fixture_dir == std::filesystem::path("/base/fx"));
  CHECK(c.providers[0].sampling.temperature == 0.7);

  CHECK_THROWS_AS(parse_config(R"({"n_expert_sample": 3})", "."), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"confidence_threshold": 0.5})", "."), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"sft_ref_split": [0.6, 0.5]})", "."), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"skip_stages": ["voting"]})", "."), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"roles": {"critic": "ghost"}})", "."), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"providers": {"p": {"kind": "grpc"}}})", "."), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"providers": {"p": {"kind": "mock", "temprature": 1}}})", "."), ConfigError);
  CHECK_THROWS_AS(parse_config("not json", "."), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ConfigError);

  c.force_provider("p");
  CHECK(c.roles.verifiers == std::vector<std::string>{"p"});
  CHECK_THROWS(c.force_provider("ghost"));
}

TEST_CASE("the fixture corpus config carries the default pipeline settings")
{
  auto c = load_config(fixture_dir() / "corpus" / "config.json");
  CHECK(c.n_expert_samples == 5);
  CHECK(c.m_self_samples == 10);
  CHECK(c.confidence_threshold == 0.75);
  CHECK(c.split.sft_fraction == 0.6);
  CHECK(c.dpo_group_size == 10);
  CHECK(c.roles.verifiers.size() == 2);
}
