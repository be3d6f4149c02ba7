#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ifc {

enum class Judgment
{
  NotFollowed = 0,
  Followed = 1,
};

inline Judgment flip(Judgment j)
{
  return j == Judgment::Followed ? Judgment::NotFollowed : Judgment::Followed;
}

struct Constraint
{
  int index = 0; // 1-based
  std::string text;

  bool operator==(const Constraint&) const = default;
};

class Checklist
{
public:
  Checklist() = default;

  // Builds a checklist numbered 1..n. Throws ParseError(InvalidConstraint) on
  // blank constraint text.
  static Checklist from_texts(const std::vector<std::string>& texts);

  const std::vector<Constraint>& constraints() const { return constraints_; }
  size_t size() const { return constraints_.size(); }
  bool empty() const { return constraints_.empty(); }
  const Constraint& at(int index) const { return constraints_.at(static_cast<size_t>(index - 1)); }

  bool operator==(const Checklist&) const = default;

private:
  std::vector<Constraint> constraints_;
};

struct EvaluationInput
{
  std::string id;
  std::string instruction;
  std::string response;
  Checklist checklist;
  std::map<std::string, std::string> metadata;
};

struct CritiqueSegment
{
  int constraint_index = 0;
  std::string constraint_echo;
  std::string explanation;
  Judgment judgment = Judgment::NotFollowed;

  bool operator==(const CritiqueSegment&) const = default;
};

enum class Provenance
{
  Expert,
  SelfSample,
  FinalAssembled,
  Predicted,
};

std::string_view to_string(Provenance p);
Provenance provenance_from_string(std::string_view s);

struct Critique
{
  std::string input_id;
  std::vector<CritiqueSegment> segments;
  Provenance provenance = Provenance::Expert;

  bool operator==(const Critique&) const = default;
};

enum class ParseErrorKind
{
  MalformedBlock,
  EmptyChecklist,
  InvalidConstraint,
  SegmentCountMismatch,
  MissingJudgment,
  AmbiguousJudgment,
  ConstraintEchoMismatch,
};

std::string_view to_string(ParseErrorKind kind);

class ParseError : public std::runtime_error
{
public:
  ParseError(ParseErrorKind kind, const std::string& message)
    : std::runtime_error(message), kind_(kind)
  {
  }

  ParseErrorKind kind() const { return kind_; }

private:
  ParseErrorKind kind_;
};

enum class FindingKind
{
  CountMismatch,
  OrderViolation,
  EchoMismatch,
  ExtraProse,
  DuplicateConstraint,
};

std::string_view to_string(FindingKind kind);

struct Finding
{
  FindingKind kind;
  int constraint_index = 0; // 0 when not tied to a constraint
  std::string message;
};

// Exact judgment sentinels, typographic apostrophe.
inline constexpr std::string_view kFollowedSentinel =
    "[[The AI assistant’s response follows this constraint]]";
inline constexpr std::string_view kNotFollowedSentinel =
    "[[The AI assistant’s response does not follow this constraint]]";

std::string_view judgment_sentinel(Judgment j);

// Scans text for judgment sentinels, accepting U+0027 or U+2019 as the
// apostrophe. Throws MissingJudgment / AmbiguousJudgment.
Judgment parse_judgment(std::string_view text);

Checklist parse_checklist(std::string_view text, std::vector<Finding>* warnings = nullptr);

std::string render_checklist(const Checklist& checklist);

Critique parse_critique(std::string_view text, const Checklist& checklist,
                        std::vector<Finding>* warnings = nullptr);

// Single unnumbered block as emitted by the length revision prompt:
// "[The Start of Constraint]" ... "[The End of Constraint]".
CritiqueSegment parse_revised_segment(std::string_view text, const Constraint& expected);

std::string render_segment(const CritiqueSegment& segment);

// Explanation + judgment lines, used as the {critique} binding of the
// verification prompts.
std::string render_segment_critique(const CritiqueSegment& segment);

std::string render_critique(const Critique& critique);

std::vector<Finding> validate_alignment(const Critique& critique, const Checklist& checklist);

// Trailing whitespace trimmed per line, blank-line runs collapsed to one,
// leading/trailing blank lines dropped, single final newline.
std::string canonicalize_whitespace(std::string_view text);

// Whitespace-insensitive equality: runs of whitespace compare equal to a
// single space and surrounding whitespace is ignored.
bool echo_matches(std::string_view a, std::string_view b);

} // namespace ifc
