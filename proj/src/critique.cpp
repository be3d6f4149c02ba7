#include "ifc/critique.hpp"

#include "ifc/unicode.hpp"

#include <algorithm>
#include <charconv>
#include <set>

namespace ifc {

namespace {

constexpr std::string_view kStartPrefix = "[The Start of Constraint";
constexpr std::string_view kEndPrefix = "[The End of Constraint";

std::vector<std::string_view> split_lines(std::string_view text)
{
  std::vector<std::string_view> lines;
  size_t pos = 0;
  while (pos <= text.size())
  {
    size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos)
      nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    if (!line.empty() && line.back() == '\r')
      line.remove_suffix(1);
    lines.push_back(line);
    pos = nl + 1;
  }
  return lines;
}

bool is_blank(std::string_view line) { return unicode::trim(line).empty(); }

std::string_view strip_emphasis(std::string_view s)
{
  s = unicode::trim(s);
  while (!s.empty() && s.front() == '*')
    s.remove_prefix(1);
  while (!s.empty() && s.back() == '*')
    s.remove_suffix(1);
  return unicode::trim(s);
}

enum class MarkerType
{
  None,
  Start,
  End,
};

struct Marker
{
  MarkerType type = MarkerType::None;
  std::optional<int> number; // absent for unnumbered blocks
};

Marker classify_marker(std::string_view line)
{
  std::string_view s = strip_emphasis(line);
  MarkerType type = MarkerType::None;
  if (s.starts_with(kStartPrefix))
  {
    type = MarkerType::Start;
    s.remove_prefix(kStartPrefix.size());
  }
  else if (s.starts_with(kEndPrefix))
  {
    type = MarkerType::End;
    s.remove_prefix(kEndPrefix.size());
  }
  else
    return {};

  if (s == "]")
    return {type, std::nullopt};
  if (s.size() < 3 || s.front() != ' ' || s.back() != ']')
    return {};
  s = s.substr(1, s.size() - 2);
  int value = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size())
    return {};
  return {type, value};
}

// "Constraint: text" / "**Constraint:** text" -> "text"
std::optional<std::string_view> match_label(std::string_view line, std::string_view label)
{
  std::string_view s = unicode::trim(line);
  while (!s.empty() && s.front() == '*')
    s.remove_prefix(1);
  if (!s.starts_with(label))
    return std::nullopt;
  s.remove_prefix(label.size());
  if (s.starts_with("**:"))
    s.remove_prefix(3);
  else if (s.starts_with(":**"))
    s.remove_prefix(3);
  else if (s.starts_with(":"))
    s.remove_prefix(1);
  else
    return std::nullopt;
  return unicode::trim(s);
}

struct RawBlock
{
  std::optional<int> number;
  std::vector<std::string_view> lines;
};

struct BlockScan
{
  std::vector<RawBlock> blocks;
  std::vector<Finding> warnings;
};

BlockScan scan_blocks(std::string_view text)
{
  BlockScan scan;
  std::optional<RawBlock> open;
  bool prose_pending = false;
  for (std::string_view line : split_lines(text))
  {
    Marker m = classify_marker(line);
    if (!open)
    {
      if (m.type == MarkerType::Start)
      {
        if (prose_pending)
        {
          scan.warnings.push_back({FindingKind::ExtraProse, 0,
                                   scan.blocks.empty() ? "prose before first block ignored"
                                                       : "prose between blocks ignored"});
          prose_pending = false;
        }
        open = RawBlock{m.number, {}};
      }
      else if (m.type == MarkerType::End)
        throw ParseError(ParseErrorKind::MalformedBlock, "end marker without matching start");
      else if (!is_blank(line))
        prose_pending = true;
      continue;
    }

    if (m.type == MarkerType::Start)
      throw ParseError(ParseErrorKind::MalformedBlock,
                       "start marker inside an open block (missing end marker)");
    if (m.type == MarkerType::End)
    {
      if (m.number != open->number)
        throw ParseError(ParseErrorKind::MalformedBlock, "end marker does not match start marker");
      scan.blocks.push_back(std::move(*open));
      open.reset();
      continue;
    }
    open->lines.push_back(line);
  }
  if (open)
    throw ParseError(ParseErrorKind::MalformedBlock, "unterminated block (missing end marker)");
  if (prose_pending)
    scan.warnings.push_back({FindingKind::ExtraProse, 0,
                             scan.blocks.empty() ? "prose without any block ignored"
                                                 : "prose after last block ignored"});
  return scan;
}

std::string join_field(const std::vector<std::string_view>& parts)
{
  std::string joined;
  for (size_t i = 0; i < parts.size(); ++i)
  {
    if (i)
      joined += '\n';
    joined += parts[i];
  }
  std::string canonical = canonicalize_whitespace(joined);
  if (!canonical.empty() && canonical.back() == '\n')
    canonical.pop_back();
  return canonical;
}

struct BlockFields
{
  std::vector<std::string_view> constraint;
  std::vector<std::string_view> explanation;
  std::vector<std::string_view> judgment;
  bool has_explanation = false;
  bool has_judgment = false;
};

BlockFields split_fields(const RawBlock& block, bool critique_labels)
{
  BlockFields fields;
  enum class Field { None, Constraint, Explanation, Judgment } current = Field::None;
  for (std::string_view line : block.lines)
  {
    if (current == Field::None)
    {
      if (is_blank(line))
        continue;
      auto rest = match_label(line, "Constraint");
      if (!rest)
        throw ParseError(ParseErrorKind::MalformedBlock, "block is missing the \"Constraint:\" label");
      fields.constraint.push_back(*rest);
      current = Field::Constraint;
      continue;
    }
    if (critique_labels)
    {
      if (auto rest = match_label(line, "Explanation"); rest && !fields.has_explanation && !fields.has_judgment)
      {
        fields.has_explanation = true;
        fields.explanation.push_back(*rest);
        current = Field::Explanation;
        continue;
      }
      if (auto rest = match_label(line, "Judgment"); rest && !fields.has_judgment)
      {
        fields.has_judgment = true;
        fields.judgment.push_back(*rest);
        current = Field::Judgment;
        continue;
      }
    }
    switch (current)
    {
    case Field::Constraint: fields.constraint.push_back(line); break;
    case Field::Explanation: fields.explanation.push_back(line); break;
    case Field::Judgment: fields.judgment.push_back(line); break;
    case Field::None: break;
    }
  }
  if (current == Field::None)
    throw ParseError(ParseErrorKind::MalformedBlock, "block is missing the \"Constraint:\" label");
  return fields;
}

CritiqueSegment segment_from_block(const RawBlock& block, int index)
{
  BlockFields fields = split_fields(block, true);
  CritiqueSegment seg;
  seg.constraint_index = index;
  seg.constraint_echo = join_field(fields.constraint);
  if (!fields.has_explanation)
    throw ParseError(ParseErrorKind::MalformedBlock,
                     "constraint " + std::to_string(index) + ": missing \"Explanation:\" label");
  seg.explanation = join_field(fields.explanation);
  if (seg.explanation.empty())
    throw ParseError(ParseErrorKind::MalformedBlock,
                     "constraint " + std::to_string(index) + ": empty explanation");
  if (!fields.has_judgment)
    throw ParseError(ParseErrorKind::MissingJudgment,
                     "constraint " + std::to_string(index) + ": missing \"Judgment:\" label");
  try
  {
    seg.judgment = parse_judgment(join_field(fields.judgment));
  }
  catch (const ParseError& e)
  {
    throw ParseError(e.kind(), "constraint " + std::to_string(index) + ": " + e.what());
  }
  return seg;
}

std::string collapse_whitespace(std::string_view text)
{
  std::u32string decoded = unicode::decode(text);
  std::u32string out;
  bool in_space = false;
  for (char32_t c : unicode::trim(std::u32string_view(decoded)))
  {
    if (unicode::is_whitespace(c))
    {
      in_space = true;
      continue;
    }
    if (in_space)
      out.push_back(U' ');
    in_space = false;
    out.push_back(c);
  }
  return unicode::encode(out);
}

std::string replace_all(std::string s, std::string_view from, std::string_view to)
{
  size_t pos = 0;
  while ((pos = s.find(from, pos)) != std::string::npos)
  {
    s.replace(pos, from.size(), to);
    pos += to.size();
  }
  return s;
}

} // namespace

std::string_view to_string(Provenance p)
{
  switch (p)
  {
  case Provenance::Expert: return "expert";
  case Provenance::SelfSample: return "self";
  case Provenance::FinalAssembled: return "final";
  case Provenance::Predicted: return "predicted";
  }
  return "unknown";
}

Provenance provenance_from_string(std::string_view s)
{
  if (s == "expert")
    return Provenance::Expert;
  if (s == "self")
    return Provenance::SelfSample;
  if (s == "final")
    return Provenance::FinalAssembled;
  if (s == "predicted")
    return Provenance::Predicted;
  throw std::invalid_argument("unknown provenance: " + std::string(s));
}

std::string_view to_string(ParseErrorKind kind)
{
  switch (kind)
  {
  case ParseErrorKind::MalformedBlock: return "MalformedBlock";
  case ParseErrorKind::EmptyChecklist: return "EmptyChecklist";
  case ParseErrorKind::InvalidConstraint: return "InvalidConstraint";
  case ParseErrorKind::SegmentCountMismatch: return "SegmentCountMismatch";
  case ParseErrorKind::MissingJudgment: return "MissingJudgment";
  case ParseErrorKind::AmbiguousJudgment: return "AmbiguousJudgment";
  case ParseErrorKind::ConstraintEchoMismatch: return "ConstraintEchoMismatch";
  }
  return "Unknown";
}

std::string_view to_string(FindingKind kind)
{
  switch (kind)
  {
  case FindingKind::CountMismatch: return "CountMismatch";
  case FindingKind::OrderViolation: return "OrderViolation";
  case FindingKind::EchoMismatch: return "EchoMismatch";
  case FindingKind::ExtraProse: return "ExtraProse";
  case FindingKind::DuplicateConstraint: return "DuplicateConstraint";
  }
  return "Unknown";
}

Checklist Checklist::from_texts(const std::vector<std::string>& texts)
{
  Checklist checklist;
  int index = 1;
  for (const auto& text : texts)
  {
    if (unicode::trim(text).empty())
      throw ParseError(ParseErrorKind::InvalidConstraint,
                       "constraint " + std::to_string(index) + " is blank");
    checklist.constraints_.push_back({index++, text});
  }
  return checklist;
}

std::string_view judgment_sentinel(Judgment j)
{
  return j == Judgment::Followed ? kFollowedSentinel : kNotFollowedSentinel;
}

Judgment parse_judgment(std::string_view text)
{
  std::string normalized = replace_all(std::string(text), "'", "’");
  bool followed = normalized.find(kFollowedSentinel) != std::string::npos;
  bool not_followed = normalized.find(kNotFollowedSentinel) != std::string::npos;
  if (followed && not_followed)
    throw ParseError(ParseErrorKind::AmbiguousJudgment, "both judgment sentinels present");
  if (!followed && !not_followed)
    throw ParseError(ParseErrorKind::MissingJudgment, "no judgment sentinel found");
  return followed ? Judgment::Followed : Judgment::NotFollowed;
}

Checklist parse_checklist(std::string_view text, std::vector<Finding>* warnings)
{
  BlockScan scan = scan_blocks(text);
  if (scan.blocks.empty())
    throw ParseError(ParseErrorKind::EmptyChecklist, "no constraint blocks found");

  std::vector<std::string> texts;
  std::set<std::string> seen;
  for (size_t i = 0; i < scan.blocks.size(); ++i)
  {
    const RawBlock& block = scan.blocks[i];
    int position = static_cast<int>(i) + 1;
    if (block.number != position)
      throw ParseError(ParseErrorKind::MalformedBlock,
                       "block at position " + std::to_string(position) + " is not numbered " +
                           std::to_string(position));
    BlockFields fields = split_fields(block, false);
    std::string constraint = join_field(fields.constraint);
    if (constraint.empty())
      throw ParseError(ParseErrorKind::MalformedBlock,
                       "constraint " + std::to_string(position) + " is empty");
    if (!seen.insert(collapse_whitespace(constraint)).second)
      scan.warnings.push_back({FindingKind::DuplicateConstraint, position,
                               "duplicate constraint text"});
    texts.push_back(std::move(constraint));
  }
  if (warnings)
    warnings->insert(warnings->end(), scan.warnings.begin(), scan.warnings.end());
  return Checklist::from_texts(texts);
}

std::string render_checklist(const Checklist& checklist)
{
  std::string out;
  for (const auto& c : checklist.constraints())
  {
    if (!out.empty())
      out += '\n';
    std::string k = std::to_string(c.index);
    out += "[The Start of Constraint " + k + "]\n";
    out += "Constraint: " + c.text + "\n";
    out += "[The End of Constraint " + k + "]\n";
  }
  return out;
}

Critique parse_critique(std::string_view text, const Checklist& checklist, std::vector<Finding>* warnings)
{
  if (checklist.empty())
    throw std::invalid_argument("parse_critique requires a non-empty checklist");

  BlockScan scan = scan_blocks(text);
  if (scan.blocks.size() != checklist.size())
    throw ParseError(ParseErrorKind::SegmentCountMismatch,
                     "found " + std::to_string(scan.blocks.size()) + " blocks, checklist has " +
                         std::to_string(checklist.size()) + " constraints");

  Critique critique;
  for (size_t i = 0; i < scan.blocks.size(); ++i)
  {
    int position = static_cast<int>(i) + 1;
    if (scan.blocks[i].number != position)
      throw ParseError(ParseErrorKind::MalformedBlock,
                       "block at position " + std::to_string(position) + " is not numbered " +
                           std::to_string(position));
    CritiqueSegment seg = segment_from_block(scan.blocks[i], position);
    if (!echo_matches(seg.constraint_echo, checklist.at(position).text))
      throw ParseError(ParseErrorKind::ConstraintEchoMismatch,
                       "constraint " + std::to_string(position) + " echo differs from checklist");
    critique.segments.push_back(std::move(seg));
  }
  if (warnings)
    warnings->insert(warnings->end(), scan.warnings.begin(), scan.warnings.end());
  return critique;
}

CritiqueSegment parse_revised_segment(std::string_view text, const Constraint& expected)
{
  BlockScan scan = scan_blocks(text);
  if (scan.blocks.size() != 1)
    throw ParseError(ParseErrorKind::SegmentCountMismatch,
                     "expected one revised block, found " + std::to_string(scan.blocks.size()));
  const RawBlock& block = scan.blocks.front();
  if (block.number && *block.number != expected.index)
    throw ParseError(ParseErrorKind::MalformedBlock, "revised block carries the wrong constraint number");
  CritiqueSegment seg = segment_from_block(block, expected.index);
  if (!echo_matches(seg.constraint_echo, expected.text))
    throw ParseError(ParseErrorKind::ConstraintEchoMismatch, "revised block echoes a different constraint");
  return seg;
}

std::string render_segment_critique(const CritiqueSegment& segment)
{
  return "Explanation: " + segment.explanation + "\nJudgment: " +
         std::string(judgment_sentinel(segment.judgment));
}

std::string render_segment(const CritiqueSegment& segment)
{
  std::string k = std::to_string(segment.constraint_index);
  std::string out;
  out += "[The Start of Constraint " + k + "]\n";
  out += "Constraint: " + segment.constraint_echo + "\n";
  out += render_segment_critique(segment) + "\n";
  out += "[The End of Constraint " + k + "]\n";
  return out;
}

std::string render_critique(const Critique& critique)
{
  std::string out;
  for (const auto& seg : critique.segments)
  {
    if (!out.empty())
      out += '\n';
    out += render_segment(seg);
  }
  return out;
}

std::vector<Finding> validate_alignment(const Critique& critique, const Checklist& checklist)
{
  std::vector<Finding> findings;
  const size_t n = checklist.size();
  if (critique.segments.size() != n)
    findings.push_back({FindingKind::CountMismatch, 0,
                        std::to_string(critique.segments.size()) + " segments for " + std::to_string(n) +
                            " constraints"});

  std::set<int> seen;
  bool coverage_ok = true;
  for (const auto& seg : critique.segments)
  {
    if (seg.constraint_index < 1 || static_cast<size_t>(seg.constraint_index) > n ||
        !seen.insert(seg.constraint_index).second)
      coverage_ok = false;
  }
  if (!coverage_ok && critique.segments.size() == n)
    findings.push_back({FindingKind::CountMismatch, 0, "segments do not cover each constraint exactly once"});

  for (size_t i = 0; i < critique.segments.size(); ++i)
  {
    if (critique.segments[i].constraint_index != static_cast<int>(i) + 1)
    {
      findings.push_back({FindingKind::OrderViolation, critique.segments[i].constraint_index,
                          "segment at position " + std::to_string(i + 1) + " refers to constraint " +
                              std::to_string(critique.segments[i].constraint_index)});
      break;
    }
  }

  for (const auto& seg : critique.segments)
  {
    if (seg.constraint_index < 1 || static_cast<size_t>(seg.constraint_index) > n)
      continue;
    if (!echo_matches(seg.constraint_echo, checklist.at(seg.constraint_index).text))
      findings.push_back({FindingKind::EchoMismatch, seg.constraint_index, "constraint echo differs"});
  }
  return findings;
}

std::string canonicalize_whitespace(std::string_view text)
{
  std::vector<std::string> lines;
  for (std::string_view line : split_lines(text))
  {
    std::string_view trimmed = unicode::trim(line);
    // keep leading indentation, drop trailing whitespace
    size_t lead = trimmed.empty() ? 0 : static_cast<size_t>(trimmed.data() - line.data());
    lines.emplace_back(trimmed.empty() ? std::string_view{} : line.substr(0, lead + trimmed.size()));
  }

  std::string out;
  bool pending_blank = false;
  for (const auto& line : lines)
  {
    if (line.empty())
    {
      pending_blank = !out.empty();
      continue;
    }
    if (pending_blank)
      out += '\n';
    pending_blank = false;
    out += line;
    out += '\n';
  }
  return out;
}

bool echo_matches(std::string_view a, std::string_view b)
{
  return collapse_whitespace(a) == collapse_whitespace(b);
}

} // namespace ifc
