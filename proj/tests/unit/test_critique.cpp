#include "fixture.hpp"

#include "ifc/critique.hpp"
#include "ifc/records.hpp"

#include <doctest.h>

#include <algorithm>
#include <random>

using namespace ifc;

namespace {

const std::string kFollow(kFollowedSentinel);
const std::string kNot(kNotFollowedSentinel);

std::string block(int k, const std::string& constraint, const std::string& explanation, const std::string& judgment)
{
  std::string n = std::to_string(k);
  return "[The Start of Constraint " + n + "]\nConstraint: " + constraint + "\nExplanation: " + explanation +
         "\nJudgment: " + judgment + "\n[The End of Constraint " + n + "]\n";
}

ParseErrorKind parse_error_kind(const std::string& text, const Checklist& checklist)
{
  try
  {
    parse_critique(text, checklist);
  }
  catch (const ParseError& e)
  {
    return e.kind();
  }
  FAIL("expected a ParseError");
  return ParseErrorKind::MalformedBlock;
}

Checklist three() { return Checklist::from_texts({"Use three bullets", "Stay under 50 words", "Be polite"}); }

Critique sample_critique()
{
  Critique c;
  c.input_id = "x";
  c.segments = {{1, "Use three bullets", "There are three bullets.", Judgment::Followed},
                {2, "Stay under 50 words", "It has 62 words,\nwhich is too many.", Judgment::NotFollowed},
                {3, "Be polite", "Tone is courteous.", Judgment::Followed}};
  return c;
}

} // namespace

TEST_CASE("checklist grammar")
{
  SUBCASE("single block")
  {
    auto c = parse_checklist("[The Start of Constraint 1]\nConstraint: Use exactly three bullet points\n"
                             "[The End of Constraint 1]");
    REQUIRE(c.size() == 1);
    CHECK(c.at(1).text == "Use exactly three bullet points");
    CHECK(c.at(1).index == 1);
  }
  SUBCASE("order preserved")
  {
    auto c = parse_checklist(render_checklist(Checklist::from_texts({"first", "second"})));
    REQUIRE(c.size() == 2);
    CHECK(c.at(1).text == "first");
    CHECK(c.at(2).text == "second");
  }
  SUBCASE("unbalanced markers")
  {
    std::string t = "[The Start of Constraint 1]\nConstraint: a\n[The End of Constraint 1]\n"
                    "[The Start of Constraint 2]\nConstraint: b\n";
    try
    {
      parse_checklist(t);
      FAIL("no error");
    }
    catch (const ParseError& e)
    {
      CHECK(e.kind() == ParseErrorKind::MalformedBlock);
    }
  }
  SUBCASE("zero blocks")
  {
    try
    {
      parse_checklist("nothing to see");
      FAIL("no error");
    }
    catch (const ParseError& e)
    {
      CHECK(e.kind() == ParseErrorKind::EmptyChecklist);
    }
  }
  SUBCASE("blank constraint text")
  {
    CHECK_THROWS_AS(Checklist::from_texts({"ok", "  "}), ParseError);
  }
}

TEST_CASE("judgment sentinels")
{
  CHECK(parse_judgment("Judgment: " + kFollow) == Judgment::Followed);
  CHECK(parse_judgment("Judgment: " + kNot) == Judgment::NotFollowed);
  CHECK(parse_judgment("[[The AI assistant's response follows this constraint]]") == Judgment::Followed);
  CHECK(parse_judgment("[[The AI assistant's response does not follow this constraint]]") ==
        Judgment::NotFollowed);

  auto kind_of = [](const std::string& t) {
    try
    {
      parse_judgment(t);
    }
    catch (const ParseError& e)
    {
      return e.kind();
    }
    return ParseErrorKind::EmptyChecklist;
  };
  CHECK(kind_of("no sentinel") == ParseErrorKind::MissingJudgment);
  CHECK(kind_of(kFollow + " " + kNot) == ParseErrorKind::AmbiguousJudgment);
}

TEST_CASE("critique parsing errors")
{
  const Checklist cl = three();
  const std::string b1 = block(1, "Use three bullets", "fine", kFollow);
  const std::string b2 = block(2, "Stay under 50 words", "fine", kFollow);
  const std::string b3 = block(3, "Be polite", "fine", kFollow);

  CHECK_NOTHROW(parse_critique(b1 + b2 + b3, cl));
  CHECK(parse_error_kind(b1 + b2, cl) == ParseErrorKind::SegmentCountMismatch);
  CHECK(parse_error_kind(b1 + b2 + b3 + block(4, "Extra", "e", kFollow), cl) ==
        ParseErrorKind::SegmentCountMismatch);
  CHECK(parse_error_kind(b1 + b2 + block(3, "Be polite", "x", "unclear"), cl) == ParseErrorKind::MissingJudgment);
  CHECK(parse_error_kind(b1 + b2 + block(3, "Be polite", "x", kFollow + kNot), cl) ==
        ParseErrorKind::AmbiguousJudgment);
  CHECK(parse_error_kind(b1 + b2 + block(3, "Be rude", "x", kFollow), cl) == ParseErrorKind::ConstraintEchoMismatch);
  CHECK(parse_error_kind(b1 + b3 + b2, cl) == ParseErrorKind::MalformedBlock);
  CHECK_THROWS_AS(parse_critique(b1, Checklist{}), std::invalid_argument);

  // 3 blocks against 4 constraints
  auto four = Checklist::from_texts({"Use three bullets", "Stay under 50 words", "Be polite", "Sign off"});
  CHECK(parse_error_kind(b1 + b2 + b3, four) == ParseErrorKind::SegmentCountMismatch);
}

TEST_CASE("echo comparison ignores whitespace only")
{
  const Checklist cl = Checklist::from_texts({"Use   three\nbullets"});
  auto c = parse_critique(block(1, "Use three bullets", "ok", kFollow), cl);
  CHECK(c.segments[0].constraint_echo == "Use three bullets");
  CHECK(echo_matches("  a  b ", "a b"));
  CHECK_FALSE(echo_matches("a b", "ab"));
}

TEST_CASE("render structure and round trip")
{
  Critique one;
  one.segments = {{1, "Be polite", "ok", Judgment::Followed}};
  std::string text = render_critique(one);
  auto count = [&](const std::string& needle) {
    size_t n = 0;
    for (size_t p = text.find(needle); p != std::string::npos; p = text.find(needle, p + 1))
      ++n;
    return n;
  };
  CHECK(count("[The Start of Constraint 1]") == 1);
  CHECK(count("[The End of Constraint 1]") == 1);

  Critique c = sample_critique();
  Critique back = parse_critique(render_critique(c), three());
  back.input_id = c.input_id;
  CHECK(back == c);
  CHECK(render_critique(c) == render_critique(c));

  // distinct explanations render differently
  Critique d = c;
  d.segments[2].explanation = "Tone is rude.";
  CHECK(render_critique(d) != render_critique(c));
}

TEST_CASE("shuffled blocks are rejected, in-order blocks parse in checklist order")
{
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial)
  {
    const int n = 2 + static_cast<int>(rng() % 5);
    std::vector<std::string> texts;
    for (int k = 1; k <= n; ++k)
      texts.push_back("constraint " + std::to_string(k));
    Checklist cl = Checklist::from_texts(texts);
    std::vector<int> order(static_cast<size_t>(n));
    for (int k = 0; k < n; ++k)
      order[static_cast<size_t>(k)] = k + 1;
    std::shuffle(order.begin(), order.end(), rng);
    std::string text;
    for (int k : order)
      text += block(k, texts[static_cast<size_t>(k - 1)], "e" + std::to_string(k), kFollow) + "\n";
    if (std::is_sorted(order.begin(), order.end()))
    {
      auto c = parse_critique(text, cl);
      for (int k = 1; k <= n; ++k)
        CHECK(c.segments[static_cast<size_t>(k - 1)].constraint_index == k);
    }
    else
      CHECK(parse_error_kind(text, cl) == ParseErrorKind::MalformedBlock);
  }
}

TEST_CASE("tolerated formatting")
{
  const Checklist cl = Checklist::from_texts({"Be polite"});
  std::string bold = "[The Start of Constraint 1]\n**Constraint**: Be polite\n**Explanation**: fine\n"
                     "**Judgment**: [[The AI assistant's response follows this constraint]]\n"
                     "[The End of Constraint 1]";
  auto c = parse_critique(bold, cl);
  CHECK(c.segments[0].explanation == "fine");
  CHECK(c.segments[0].judgment == Judgment::Followed);
  // rendering normalizes to the typographic apostrophe
  CHECK(render_critique(c).find("assistant’s") != std::string::npos);

  std::vector<Finding> warnings;
  parse_critique("Here is my critique.\n" + block(1, "Be polite", "fine", kFollow), cl, &warnings);
  REQUIRE(warnings.size() == 1);
  CHECK(warnings[0].kind == FindingKind::ExtraProse);
}

TEST_CASE("revised segment")
{
  Constraint k{2, "Stay under 50 words"};
  std::string text = "[The Start of Constraint]\nConstraint: Stay under 50 words\nExplanation: 62 words.\n"
                     "Judgment: " + kNot + "\n[The End of Constraint]";
  auto seg = parse_revised_segment(text, k);
  CHECK(seg.constraint_index == 2);
  CHECK(seg.judgment == Judgment::NotFollowed);
  CHECK_THROWS_AS(parse_revised_segment("no block", k), ParseError);
}

TEST_CASE("validate_alignment")
{
  const Checklist cl = three();
  Critique c = sample_critique();
  CHECK(validate_alignment(c, cl).empty());

  Critique swapped = c;
  std::swap(swapped.segments[0], swapped.segments[1]);
  auto f = validate_alignment(swapped, cl);
  REQUIRE(f.size() == 1);
  CHECK(f[0].kind == FindingKind::OrderViolation);

  Critique echo = c;
  echo.segments[1].constraint_echo = "Stay under 60 words";
  f = validate_alignment(echo, cl);
  REQUIRE(f.size() == 1);
  CHECK(f[0].kind == FindingKind::EchoMismatch);
  CHECK(f[0].constraint_index == 2);

  Critique ws = c;
  ws.segments[1].constraint_echo = "  Stay under\n50   words ";
  CHECK(validate_alignment(ws, cl).empty());

  Critique shorter = c;
  shorter.segments.pop_back();
  f = validate_alignment(shorter, cl);
  REQUIRE_FALSE(f.empty());
  CHECK(f[0].kind == FindingKind::CountMismatch);
}

TEST_CASE("canonical whitespace")
{
  CHECK(canonicalize_whitespace("\n\n a  \n\n\n\nb\t\n\n") == " a\n\nb\n");
  CHECK(canonicalize_whitespace("") == "");
}

TEST_CASE("fixture corpus round trip")
{
  auto lines = records::read_jsonl(fixture_dir() / "critique_corpus.jsonl");
  REQUIRE(lines.size() >= 50);
  for (const auto& line : lines)
  {
    std::vector<std::string> texts = line.at("checklist").get<std::vector<std::string>>();
    Checklist cl = Checklist::from_texts(texts);
    const std::string text = line.at("text").get<std::string>();
    const std::string canonical = line.at("canonical").get<std::string>();
    INFO(line.at("input_id").get<std::string>());

    Critique parsed = parse_critique(text, cl);
    CHECK(render_critique(parsed) == canonical);
    // parse . render is the identity on parsed critiques
    CHECK(parse_critique(render_critique(parsed), cl) == parsed);
    if (text.find("**") == std::string::npos && text.find("assistant's") == std::string::npos)
      CHECK(render_critique(parsed) == canonicalize_whitespace(text));
  }
}
