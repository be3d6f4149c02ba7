#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace ifc {

enum class LengthUnit
{
  Characters,
  CharactersNoWhitespace,
  Words,
  Sentences,
  Lines,
  Paragraphs,
  ListItems,
};

std::string_view to_string(LengthUnit unit);
LengthUnit length_unit_from_string(std::string_view s);

enum class Comparator
{
  AtMost,
  AtLeast,
  Exactly,
  Between,
};

std::string_view to_string(Comparator c);
Comparator comparator_from_string(std::string_view s);

struct LengthRequirement
{
  LengthUnit unit = LengthUnit::Words;
  Comparator comparator = Comparator::Exactly;
  uint64_t target = 0;
  std::optional<uint64_t> target_high; // Between only
  std::string source_text;

  bool operator==(const LengthRequirement&) const = default;
};

enum class Satisfied
{
  Yes,
  No,
  Unknown,
};

std::string_view to_string(Satisfied s);

struct LengthEvidence
{
  LengthRequirement requirement;
  std::optional<std::string> segment;  // nullopt = Missing
  std::optional<uint64_t> measured;    // nullopt = Absent
  Satisfied satisfied = Satisfied::Unknown;
};

inline constexpr std::string_view kNoSegment = "No corresponding segment exists.";

// Wire keys of the length identification output.
inline constexpr std::string_view kKeyLengthConstraint = "Length Constraint";
inline constexpr std::string_view kKeyExtractedSegments = "Extracted Segments";
inline constexpr std::string_view kKeyRequirement = "Length Requirement within the Constraint";
inline constexpr std::string_view kKeySegment = "Corresponding Segment in Response";
inline constexpr std::string_view kKeyActualLength = "Actual Length";

uint64_t measure(std::string_view segment, LengthUnit unit);

bool check(const LengthRequirement& requirement, uint64_t measured);

class RequirementParseError : public std::runtime_error
{
  using std::runtime_error::runtime_error;
};

// Maps an extracted requirement quote ("no less than 800 words",
// "不超过200字", "between 3 and 5 bullet points") onto a LengthRequirement.
LengthRequirement parse_requirement(std::string_view quote);

class ExtractionSchemaError : public std::runtime_error
{
  using std::runtime_error::runtime_error;
};

struct ExtractedSegment
{
  std::string requirement_text;
  std::string segment; // may equal kNoSegment
};

struct LengthExtraction
{
  bool is_length_constraint = false;
  std::vector<ExtractedSegment> segments;
};

// Locates the JSON object in raw model output (fenced or bare, Python-style
// True/False accepted) and validates the key schema.
LengthExtraction parse_extraction(std::string_view model_output);

struct EvidenceBuild
{
  std::vector<LengthEvidence> evidence;
  std::vector<std::string> skipped; // requirement quotes that could not be interpreted
};

EvidenceBuild build_evidence(const LengthExtraction& extraction);

// JSON payload for the revision prompt.
std::string render_evidence(const std::vector<LengthEvidence>& evidence);

} // namespace ifc
