#include "oracles.hpp"

#include "ifc/length_rules.hpp"

#include <doctest.h>

#include <sstream>

using namespace ifc;

TEST_CASE("measure by unit")
{
  CHECK(measure("hello world", LengthUnit::Words) == 2);
  CHECK(measure("", LengthUnit::Characters) == 0);
  CHECK(measure("One. Two! Three?", LengthUnit::Sentences) == 3);

  CHECK(measure("  ab c  ", LengthUnit::Characters) == 4);
  CHECK(measure("  ab c  ", LengthUnit::CharactersNoWhitespace) == 3);
  CHECK(measure("长城很长", LengthUnit::Characters) == 4);

  // each ideograph is a word, Latin words split on whitespace
  CHECK(measure("我爱 AI models", LengthUnit::Words) == 4);
  CHECK(measure("长城文化", LengthUnit::Words) == 4);
  CHECK(measure("well - done", LengthUnit::Words) == 2);

  CHECK(measure("长城很长。它很古老！", LengthUnit::Sentences) == 2);
  CHECK(measure("Version 3.5 is out. Done", LengthUnit::Sentences) == 2);
  CHECK(measure("Wait... what?", LengthUnit::Sentences) == 2);
  CHECK(measure("", LengthUnit::Sentences) == 0);

  CHECK(measure("a\n\nb\n  \nc", LengthUnit::Lines) == 3);
  CHECK(measure("a\nb\n\n\nc\n", LengthUnit::Paragraphs) == 2);
  CHECK(measure("- one\n* two\n• three\n1. four\n2) five\n① six\n3、seven\nplain", LengthUnit::ListItems) == 7);
}

TEST_CASE("words match a whitespace-split oracle on Latin text")
{
  oracle::Rng rng(3);
  for (int i = 0; i < 200; ++i)
  {
    std::string s;
    const int n = static_cast<int>(rng() % 20);
    for (int w = 0; w < n; ++w)
    {
      s += std::string(1 + rng() % 3, ' ');
      s += std::string(1 + rng() % 6, static_cast<char>('a' + rng() % 26));
    }
    std::istringstream in(s);
    size_t expected = 0;
    for (std::string w; in >> w;)
      ++expected;
    CHECK(measure(s, LengthUnit::Words) == expected);
  }
}

TEST_CASE("measure is monotone under concatenation")
{
  oracle::Rng rng(11);
  for (int i = 0; i < 200; ++i)
  {
    std::string a = oracle::random_text(rng, 20), b = oracle::random_text(rng, 20);
    for (auto unit : {LengthUnit::Characters, LengthUnit::Words, LengthUnit::Lines})
    {
      CHECK(measure(a + " " + b, unit) >= measure(a, unit));
      CHECK(measure(a + "\n" + b, unit) >= measure(a, unit));
    }
  }
}

TEST_CASE("check comparators")
{
  LengthRequirement at_most{LengthUnit::Words, Comparator::AtMost, 800, std::nullopt, ""};
  CHECK(check(at_most, 799));
  CHECK(check(at_most, 800));
  CHECK_FALSE(check(at_most, 801));

  LengthRequirement exactly{LengthUnit::Characters, Comparator::Exactly, 8, std::nullopt, ""};
  CHECK_FALSE(check(exactly, 9));
  CHECK(check(exactly, 8));

  LengthRequirement between{LengthUnit::ListItems, Comparator::Between, 3, 5, ""};
  CHECK(check(between, 4));
  CHECK(check(between, 3));
  CHECK(check(between, 5));
  CHECK_FALSE(check(between, 6));
  CHECK_FALSE(check(between, 2));

  for (uint64_t t = 0; t < 10; ++t)
    for (uint64_t m = 0; m < 12; ++m)
    {
      LengthRequirement e{LengthUnit::Words, Comparator::Exactly, t, std::nullopt, ""};
      LengthRequirement lo{LengthUnit::Words, Comparator::AtMost, t, std::nullopt, ""};
      LengthRequirement hi{LengthUnit::Words, Comparator::AtLeast, t, std::nullopt, ""};
      CHECK(check(e, m) == (check(lo, m) && check(hi, m)));
    }
}

TEST_CASE("requirement quotes")
{
  struct Case
  {
    const char* quote;
    LengthUnit unit;
    Comparator cmp;
    uint64_t target;
    std::optional<uint64_t> high;
  };
  const Case cases[] = {
      {"no less than 800 words", LengthUnit::Words, Comparator::AtLeast, 800, std::nullopt},
      {"at most 50 words", LengthUnit::Words, Comparator::AtMost, 50, std::nullopt},
      {"less than 100 words", LengthUnit::Words, Comparator::AtMost, 99, std::nullopt},
      {"more than 3 paragraphs", LengthUnit::Paragraphs, Comparator::AtLeast, 4, std::nullopt},
      {"exactly three bullet points", LengthUnit::ListItems, Comparator::Exactly, 3, std::nullopt},
      {"between 3 and 5 bullet points", LengthUnit::ListItems, Comparator::Between, 3, 5},
      {"exactly 4 lines", LengthUnit::Lines, Comparator::Exactly, 4, std::nullopt},
      {"at least 3 sentences", LengthUnit::Sentences, Comparator::AtLeast, 3, std::nullopt},
      {"不超过200字", LengthUnit::Words, Comparator::AtMost, 200, std::nullopt},
      {"不少于三段", LengthUnit::Paragraphs, Comparator::AtLeast, 3, std::nullopt},
      {"1,000 characters or fewer", LengthUnit::Characters, Comparator::AtMost, 1000, std::nullopt},
  };
  for (const auto& c : cases)
  {
    INFO(c.quote);
    auto r = parse_requirement(c.quote);
    CHECK(r.unit == c.unit);
    CHECK(r.comparator == c.cmp);
    CHECK(r.target == c.target);
    CHECK(r.target_high == c.high);
    CHECK(r.source_text == c.quote);
  }
  CHECK_THROWS_AS(parse_requirement("be concise"), RequirementParseError);
  CHECK_THROWS_AS(parse_requirement("use 3"), RequirementParseError);
}

TEST_CASE("extraction parsing")
{
  auto e = parse_extraction("Here:\n```json\n{\"Length Constraint\": True, \"Extracted Segments\": ["
                            "{\"Length Requirement within the Constraint\": \"at most 5 words\", "
                            "\"Corresponding Segment in Response\": \"one two three\"}]}\n```");
  CHECK(e.is_length_constraint);
  REQUIRE(e.segments.size() == 1);
  CHECK(e.segments[0].requirement_text == "at most 5 words");

  auto no = parse_extraction("{\"Length Constraint\": false}");
  CHECK_FALSE(no.is_length_constraint);
  CHECK(build_evidence(no).evidence.empty());

  CHECK_THROWS_AS(parse_extraction("no json"), ExtractionSchemaError);
  CHECK_THROWS_AS(parse_extraction("{\"Extracted Segments\": []}"), ExtractionSchemaError);
  CHECK_THROWS_AS(parse_extraction("{\"Length Constraint\": true}"), ExtractionSchemaError);
  CHECK_THROWS_AS(parse_extraction("{\"Length Constraint\": true, \"Extracted Segments\": [{\"x\": 1}]}"),
                  ExtractionSchemaError);
}

TEST_CASE("evidence")
{
  std::string long_text;
  for (int i = 0; i < 900; ++i)
    long_text += "word ";

  LengthExtraction x;
  x.is_length_constraint = true;
  x.segments = {{"no less than 800 words", long_text},
                {"at most 10 words", std::string(kNoSegment)},
                {"be brief", "whatever"}};
  auto built = build_evidence(x);
  REQUIRE(built.evidence.size() == 2);
  CHECK(built.evidence[0].measured == 900u);
  CHECK(built.evidence[0].satisfied == Satisfied::Yes);
  CHECK_FALSE(built.evidence[1].segment.has_value());
  CHECK_FALSE(built.evidence[1].measured.has_value());
  CHECK(built.evidence[1].satisfied == Satisfied::Unknown);
  REQUIRE(built.skipped.size() == 1);
  CHECK(built.skipped[0] == "be brief");

  auto json = nlohmann::json::parse(render_evidence(built.evidence));
  REQUIRE(json.size() == 2);
  CHECK(json[1][std::string(kKeySegment)] == std::string(kNoSegment));
  CHECK(json[0][std::string(kKeyActualLength)] == "900 words");
}
