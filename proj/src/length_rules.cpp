#include "ifc/length_rules.hpp"

#include "ifc/unicode.hpp"

#include <algorithm>
#include <array>
#include <cctype>

namespace ifc {

namespace {

bool is_ascii_terminator(char32_t c) { return c == U'.' || c == U'!' || c == U'?' || c == U'…'; }
bool is_fullwidth_terminator(char32_t c) { return c == U'。' || c == U'！' || c == U'？'; }
bool is_terminator(char32_t c) { return is_ascii_terminator(c) || is_fullwidth_terminator(c); }

bool is_closing_mark(char32_t c)
{
  switch (c)
  {
  case U'"': case U'\'': case U'”': case U'’': case U')': case U'）': case U'」': case U'』': case U']':
    return true;
  default:
    return false;
  }
}

std::vector<std::u32string_view> split_lines(std::u32string_view text)
{
  std::vector<std::u32string_view> lines;
  size_t pos = 0;
  while (pos <= text.size())
  {
    size_t nl = text.find(U'\n', pos);
    if (nl == std::u32string_view::npos)
      nl = text.size();
    lines.push_back(text.substr(pos, nl - pos));
    pos = nl + 1;
  }
  return lines;
}

uint64_t count_words(std::u32string_view text)
{
  uint64_t words = 0;
  bool in_run = false; // inside a non-CJK, non-space run
  bool run_counts = false;
  auto close_run = [&] {
    if (in_run && run_counts)
      ++words;
    in_run = false;
    run_counts = false;
  };
  for (char32_t c : text)
  {
    if (unicode::is_whitespace(c))
      close_run();
    else if (unicode::is_ideograph(c))
    {
      close_run();
      ++words;
    }
    else
    {
      in_run = true;
      run_counts = run_counts || unicode::is_alnum(c);
    }
  }
  close_run();
  return words;
}

uint64_t count_sentences(std::u32string_view text)
{
  uint64_t sentences = 0;
  bool content = false;
  size_t i = 0;
  while (i < text.size())
  {
    char32_t c = text[i];
    if (!is_terminator(c))
    {
      content = content || !unicode::is_whitespace(c);
      ++i;
      continue;
    }
    bool fullwidth = false;
    while (i < text.size() && is_terminator(text[i]))
    {
      fullwidth = fullwidth || is_fullwidth_terminator(text[i]);
      ++i;
    }
    while (i < text.size() && is_closing_mark(text[i]))
      ++i;
    bool boundary = fullwidth || i == text.size() || unicode::is_whitespace(text[i]);
    if (boundary && content)
    {
      ++sentences;
      content = false;
    }
    else if (!boundary)
      content = true;
  }
  if (content)
    ++sentences;
  return sentences;
}

bool is_list_item(std::u32string_view line)
{
  line = unicode::trim(line);
  if (line.empty())
    return false;
  char32_t first = line.front();
  if (first == U'-' || first == U'*' || first == U'•')
    return line.size() > 1 && unicode::is_whitespace(line[1]);
  if (first >= U'①' && first <= U'⑳')
    return true;
  size_t digits = 0;
  while (digits < line.size() && line[digits] >= U'0' && line[digits] <= U'9')
    ++digits;
  if (digits == 0 || digits == line.size())
    return false;
  char32_t delim = line[digits];
  if (delim != U'.' && delim != U')' && delim != U'、' && delim != U']')
    return false;
  // "1.5 kg" is a number, not an enumerator
  return digits + 1 == line.size() || !(line[digits + 1] >= U'0' && line[digits + 1] <= U'9');
}

// ---- requirement quotes ----

struct NumberToken
{
  uint64_t value;
  size_t begin;
  size_t end;
  bool digits;
};

std::string ascii_lower(std::string_view s)
{
  std::string out(s);
  for (char& c : out)
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::optional<uint64_t> chinese_digit(char32_t c)
{
  static constexpr std::u32string_view kDigits = U"零一二三四五六七八九";
  if (c == U'两')
    return 2;
  size_t pos = kDigits.find(c);
  if (pos == std::u32string_view::npos)
    return std::nullopt;
  return pos;
}

bool is_chinese_numeral(char32_t c)
{
  return chinese_digit(c).has_value() || c == U'十' || c == U'百' || c == U'千' || c == U'万';
}

uint64_t parse_chinese_number(std::u32string_view s)
{
  uint64_t total = 0, section = 0, digit = 0;
  for (char32_t c : s)
  {
    if (auto d = chinese_digit(c))
    {
      digit = *d;
      continue;
    }
    uint64_t scale = c == U'十' ? 10 : c == U'百' ? 100 : c == U'千' ? 1000 : 10000;
    if (scale == 10000)
    {
      total += (section + digit) * scale;
      section = 0;
    }
    else
      section += (digit == 0 && scale == 10 ? 1 : digit) * scale;
    digit = 0;
  }
  return total + section + digit;
}

std::vector<NumberToken> find_numbers(std::u32string_view text)
{
  static const std::array<std::pair<std::u32string_view, uint64_t>, 28> kWords{{
      {U"zero", 0},      {U"one", 1},       {U"two", 2},        {U"three", 3},     {U"four", 4},
      {U"five", 5},      {U"six", 6},       {U"seven", 7},      {U"eight", 8},     {U"nine", 9},
      {U"ten", 10},      {U"eleven", 11},   {U"twelve", 12},    {U"thirteen", 13}, {U"fourteen", 14},
      {U"fifteen", 15},  {U"sixteen", 16},  {U"seventeen", 17}, {U"eighteen", 18}, {U"nineteen", 19},
      {U"twenty", 20},   {U"thirty", 30},   {U"forty", 40},     {U"fifty", 50},    {U"sixty", 60},
      {U"seventy", 70},  {U"eighty", 80},   {U"ninety", 90},
  }};

  std::vector<NumberToken> out;
  size_t i = 0;
  while (i < text.size())
  {
    char32_t c = text[i];
    if ((c >= U'0' && c <= U'9') || (c >= U'０' && c <= U'９'))
    {
      size_t begin = i;
      uint64_t value = 0;
      while (i < text.size())
      {
        char32_t d = text[i];
        if (d >= U'0' && d <= U'9')
          value = value * 10 + (d - U'0');
        else if (d >= U'０' && d <= U'９')
          value = value * 10 + (d - U'０');
        else if (d == U',' && i + 1 < text.size() && text[i + 1] >= U'0' && text[i + 1] <= U'9')
          ;
        else
          break;
        ++i;
      }
      out.push_back({value, begin, i, true});
      continue;
    }
    if (is_chinese_numeral(c))
    {
      size_t begin = i;
      while (i < text.size() && is_chinese_numeral(text[i]))
        ++i;
      out.push_back({parse_chinese_number(text.substr(begin, i - begin)), begin, i, false});
      continue;
    }
    if (c < 128 && std::isalpha(static_cast<int>(c)))
    {
      size_t begin = i;
      std::u32string word;
      while (i < text.size() && text[i] < 128 && std::isalpha(static_cast<int>(text[i])))
        word.push_back(static_cast<char32_t>(std::tolower(static_cast<int>(text[i++]))));
      for (const auto& [name, value] : kWords)
        if (word == name)
          out.push_back({value, begin, i, false});
      continue;
    }
    ++i;
  }
  // Prefer digit numbers; numeral words like "每一段" are usually not targets.
  if (std::any_of(out.begin(), out.end(), [](const NumberToken& t) { return t.digits; }))
    std::erase_if(out, [](const NumberToken& t) { return !t.digits; });
  return out;
}

struct UnitKeyword
{
  std::u32string_view text;
  LengthUnit unit;
  bool latin; // needs a word boundary on the left
};

// Longer / more specific keywords first.
constexpr std::array<UnitKeyword, 22> kUnitKeywords{{
    {U"characters excluding spaces", LengthUnit::CharactersNoWhitespace, true},
    {U"characters without spaces", LengthUnit::CharactersNoWhitespace, true},
    {U"non-whitespace characters", LengthUnit::CharactersNoWhitespace, true},
    {U"不含空格", LengthUnit::CharactersNoWhitespace, false},
    {U"bullet", LengthUnit::ListItems, true},
    {U"list item", LengthUnit::ListItems, true},
    {U"item", LengthUnit::ListItems, true},
    {U"point", LengthUnit::ListItems, true},
    {U"paragraph", LengthUnit::Paragraphs, true},
    {U"sentence", LengthUnit::Sentences, true},
    {U"line", LengthUnit::Lines, true},
    {U"character", LengthUnit::Characters, true},
    {U"letter", LengthUnit::Characters, true},
    {U"char", LengthUnit::Characters, true},
    {U"word", LengthUnit::Words, true},
    {U"字符", LengthUnit::Characters, false},
    {U"条", LengthUnit::ListItems, false},
    {U"项", LengthUnit::ListItems, false},
    {U"段", LengthUnit::Paragraphs, false},
    {U"句", LengthUnit::Sentences, false},
    {U"行", LengthUnit::Lines, false},
    {U"字", LengthUnit::Words, false},
}};

struct UnitHit
{
  LengthUnit unit;
  size_t pos;
};

std::vector<UnitHit> find_units(std::u32string_view lower)
{
  std::vector<UnitHit> hits;
  std::vector<bool> covered(lower.size(), false);
  for (const auto& kw : kUnitKeywords)
  {
    size_t pos = 0;
    while ((pos = lower.find(kw.text, pos)) != std::u32string_view::npos)
    {
      bool boundary = !kw.latin || pos == 0 || !(lower[pos - 1] < 128 && std::isalpha(static_cast<int>(lower[pos - 1])));
      if (boundary && !covered[pos])
      {
        hits.push_back({kw.unit, pos});
        std::fill(covered.begin() + static_cast<long>(pos),
                  covered.begin() + static_cast<long>(pos + kw.text.size()), true);
      }
      pos += kw.text.size();
    }
  }
  return hits;
}

struct ComparatorKeyword
{
  std::u32string_view text;
  Comparator comparator;
  int adjust; // strict bounds on integers
};

constexpr std::array<ComparatorKeyword, 37> kComparatorKeywords{{
    {U"no less than", Comparator::AtLeast, 0},
    {U"not less than", Comparator::AtLeast, 0},
    {U"no fewer than", Comparator::AtLeast, 0},
    {U"not fewer than", Comparator::AtLeast, 0},
    {U"no more than", Comparator::AtMost, 0},
    {U"not more than", Comparator::AtMost, 0},
    {U"not exceed", Comparator::AtMost, 0},
    {U"no longer than", Comparator::AtMost, 0},
    {U"at least", Comparator::AtLeast, 0},
    {U"at most", Comparator::AtMost, 0},
    {U"or more", Comparator::AtLeast, 0},
    {U"minimum", Comparator::AtLeast, 0},
    {U"or less", Comparator::AtMost, 0},
    {U"or fewer", Comparator::AtMost, 0},
    {U"maximum", Comparator::AtMost, 0},
    {U"up to", Comparator::AtMost, 0},
    {U"within", Comparator::AtMost, 0},
    {U"more than", Comparator::AtLeast, 1},
    {U"over", Comparator::AtLeast, 1},
    {U"exceed", Comparator::AtLeast, 1},
    {U"less than", Comparator::AtMost, -1},
    {U"fewer than", Comparator::AtMost, -1},
    {U"under", Comparator::AtMost, -1},
    {U"exactly", Comparator::Exactly, 0},
    {U"不少于", Comparator::AtLeast, 0},
    {U"不低于", Comparator::AtLeast, 0},
    {U"不超过", Comparator::AtMost, 0},
    {U"不多于", Comparator::AtMost, 0},
    {U"不高于", Comparator::AtMost, 0},
    {U"至少", Comparator::AtLeast, 0},
    {U"以上", Comparator::AtLeast, 0},
    {U"至多", Comparator::AtMost, 0},
    {U"最多", Comparator::AtMost, 0},
    {U"以内", Comparator::AtMost, 0},
    {U"以下", Comparator::AtMost, 0},
    {U"超过", Comparator::AtLeast, 1},
    {U"少于", Comparator::AtMost, -1},
}};

bool is_range_gap(std::u32string_view gap)
{
  gap = unicode::trim(gap);
  static constexpr std::array<std::u32string_view, 8> kGaps{U"and", U"to", U"-", U"\u2013", U"\u2014", U"~", U"到", U"至"};
  return std::find(kGaps.begin(), kGaps.end(), gap) != kGaps.end() || gap == U"～";
}

bool is_latin_letter(char32_t c) { return c < 128 && std::isalpha(static_cast<int>(c)); }

// Latin keywords match whole words ("over" must not hit "overall"); the
// "exceed" family may carry a suffix ("exceeding").
bool contains_keyword(std::u32string_view text, std::u32string_view keyword)
{
  const bool latin = is_latin_letter(keyword.front());
  const bool allow_suffix = keyword.ends_with(U"exceed");
  size_t pos = 0;
  while ((pos = text.find(keyword, pos)) != std::u32string_view::npos)
  {
    size_t end = pos + keyword.size();
    bool left_ok = !latin || pos == 0 || !is_latin_letter(text[pos - 1]);
    bool right_ok = !latin || allow_suffix || end == text.size() || !is_latin_letter(text[end]);
    if (left_ok && right_ok)
      return true;
    ++pos;
  }
  return false;
}

std::string_view display_unit(LengthUnit unit)
{
  switch (unit)
  {
  case LengthUnit::Characters: return "characters";
  case LengthUnit::CharactersNoWhitespace: return "characters (excluding whitespace)";
  case LengthUnit::Words: return "words";
  case LengthUnit::Sentences: return "sentences";
  case LengthUnit::Lines: return "lines";
  case LengthUnit::Paragraphs: return "paragraphs";
  case LengthUnit::ListItems: return "list items";
  }
  return "units";
}

// Copies model output, turning Python-style True/False/None outside string
// literals into JSON literals.
std::string jsonify_literals(std::string_view text)
{
  std::string out;
  out.reserve(text.size());
  bool in_string = false;
  for (size_t i = 0; i < text.size(); ++i)
  {
    char c = text[i];
    if (in_string)
    {
      out += c;
      if (c == '\\' && i + 1 < text.size())
        out += text[++i];
      else if (c == '"')
        in_string = false;
      continue;
    }
    if (c == '"')
    {
      in_string = true;
      out += c;
      continue;
    }
    auto word_at = [&](std::string_view w) {
      return text.substr(i, w.size()) == w &&
             (i + w.size() == text.size() || !std::isalnum(static_cast<unsigned char>(text[i + w.size()])));
    };
    if (word_at("True"))
    {
      out += "true";
      i += 3;
    }
    else if (word_at("False"))
    {
      out += "false";
      i += 4;
    }
    else if (word_at("None"))
    {
      out += "null";
      i += 3;
    }
    else
      out += c;
  }
  return out;
}

std::optional<std::string_view> locate_object(std::string_view text)
{
  size_t begin = text.find('{');
  if (begin == std::string_view::npos)
    return std::nullopt;
  int depth = 0;
  bool in_string = false;
  for (size_t i = begin; i < text.size(); ++i)
  {
    char c = text[i];
    if (in_string)
    {
      if (c == '\\')
        ++i;
      else if (c == '"')
        in_string = false;
      continue;
    }
    if (c == '"')
      in_string = true;
    else if (c == '{')
      ++depth;
    else if (c == '}' && --depth == 0)
      return text.substr(begin, i - begin + 1);
  }
  return std::nullopt;
}

} // namespace

std::string_view to_string(LengthUnit unit)
{
  switch (unit)
  {
  case LengthUnit::Characters: return "characters";
  case LengthUnit::CharactersNoWhitespace: return "characters_no_whitespace";
  case LengthUnit::Words: return "words";
  case LengthUnit::Sentences: return "sentences";
  case LengthUnit::Lines: return "lines";
  case LengthUnit::Paragraphs: return "paragraphs";
  case LengthUnit::ListItems: return "list_items";
  }
  return "unknown";
}

LengthUnit length_unit_from_string(std::string_view s)
{
  for (auto u : {LengthUnit::Characters, LengthUnit::CharactersNoWhitespace, LengthUnit::Words,
                 LengthUnit::Sentences, LengthUnit::Lines, LengthUnit::Paragraphs, LengthUnit::ListItems})
    if (to_string(u) == s)
      return u;
  throw std::invalid_argument("unknown length unit: " + std::string(s));
}

std::string_view to_string(Comparator c)
{
  switch (c)
  {
  case Comparator::AtMost: return "at_most";
  case Comparator::AtLeast: return "at_least";
  case Comparator::Exactly: return "exactly";
  case Comparator::Between: return "between";
  }
  return "unknown";
}

Comparator comparator_from_string(std::string_view s)
{
  for (auto c : {Comparator::AtMost, Comparator::AtLeast, Comparator::Exactly, Comparator::Between})
    if (to_string(c) == s)
      return c;
  throw std::invalid_argument("unknown comparator: " + std::string(s));
}

std::string_view to_string(Satisfied s)
{
  switch (s)
  {
  case Satisfied::Yes: return "yes";
  case Satisfied::No: return "no";
  case Satisfied::Unknown: return "unknown";
  }
  return "unknown";
}

uint64_t measure(std::string_view segment, LengthUnit unit)
{
  std::u32string text = unicode::decode(segment);
  std::u32string_view view(text);
  switch (unit)
  {
  case LengthUnit::Characters:
    return unicode::trim(view).size();
  case LengthUnit::CharactersNoWhitespace:
    return static_cast<uint64_t>(std::count_if(view.begin(), view.end(),
                                               [](char32_t c) { return !unicode::is_whitespace(c); }));
  case LengthUnit::Words:
    return count_words(view);
  case LengthUnit::Sentences:
    return count_sentences(view);
  case LengthUnit::Lines:
  {
    uint64_t lines = 0;
    for (auto line : split_lines(view))
      if (!unicode::trim(line).empty())
        ++lines;
    return lines;
  }
  case LengthUnit::Paragraphs:
  {
    uint64_t paragraphs = 0;
    bool in_paragraph = false;
    for (auto line : split_lines(view))
    {
      bool blank = unicode::trim(line).empty();
      if (!blank && !in_paragraph)
        ++paragraphs;
      in_paragraph = !blank;
    }
    return paragraphs;
  }
  case LengthUnit::ListItems:
  {
    uint64_t items = 0;
    for (auto line : split_lines(view))
      if (is_list_item(line))
        ++items;
    return items;
  }
  }
  return 0;
}

bool check(const LengthRequirement& requirement, uint64_t measured)
{
  switch (requirement.comparator)
  {
  case Comparator::AtMost: return measured <= requirement.target;
  case Comparator::AtLeast: return measured >= requirement.target;
  case Comparator::Exactly: return measured == requirement.target;
  case Comparator::Between:
    return measured >= requirement.target && measured <= requirement.target_high.value_or(requirement.target);
  }
  return false;
}

LengthRequirement parse_requirement(std::string_view quote)
{
  std::u32string lower = unicode::decode(ascii_lower(quote));
  std::u32string_view text(lower);

  std::vector<NumberToken> numbers = find_numbers(text);
  if (numbers.empty())
    throw RequirementParseError("no number in length requirement: " + std::string(quote));
  std::vector<UnitHit> units = find_units(text);
  if (units.empty())
    throw RequirementParseError("no recognizable unit in length requirement: " + std::string(quote));

  LengthRequirement req;
  req.source_text = std::string(quote);

  // Range: two adjacent numbers joined by "and", "to", "-", "到", ...
  std::optional<size_t> anchor;
  for (size_t i = 0; i + 1 < numbers.size(); ++i)
  {
    if (is_range_gap(text.substr(numbers[i].end, numbers[i + 1].begin - numbers[i].end)))
    {
      req.comparator = Comparator::Between;
      req.target = std::min(numbers[i].value, numbers[i + 1].value);
      req.target_high = std::max(numbers[i].value, numbers[i + 1].value);
      anchor = i + 1;
      break;
    }
  }

  if (!anchor)
  {
    // The target is the number a unit follows most closely.
    size_t best = numbers.size() - 1;
    size_t best_gap = std::u32string_view::npos;
    for (size_t i = 0; i < numbers.size(); ++i)
      for (const auto& hit : units)
        if (hit.pos >= numbers[i].end && hit.pos - numbers[i].end < best_gap)
        {
          best_gap = hit.pos - numbers[i].end;
          best = i;
        }
    anchor = best;
  }
  const NumberToken& number = numbers[*anchor];

  // Unit: first keyword after the anchor number, else the closest before it.
  std::optional<UnitHit> unit;
  for (const auto& hit : units)
    if (hit.pos >= number.end && (!unit || hit.pos < unit->pos))
      unit = hit;
  if (!unit)
    for (const auto& hit : units)
      if (hit.pos < number.begin && (!unit || hit.pos > unit->pos))
        unit = hit;
  req.unit = unit->unit;

  if (req.comparator == Comparator::Between)
    return req;

  req.target = number.value;
  req.comparator = Comparator::Exactly;
  for (const auto& kw : kComparatorKeywords)
  {
    if (!contains_keyword(text, kw.text))
      continue;
    req.comparator = kw.comparator;
    if (kw.adjust > 0)
      req.target += 1;
    else if (kw.adjust < 0)
    {
      if (req.target == 0)
        throw RequirementParseError("unsatisfiable requirement: " + std::string(quote));
      req.target -= 1;
    }
    break;
  }
  return req;
}

LengthExtraction parse_extraction(std::string_view model_output)
{
  auto object = locate_object(model_output);
  if (!object)
    throw ExtractionSchemaError("no JSON object in identification output");

  nlohmann::json doc;
  try
  {
    doc = nlohmann::json::parse(jsonify_literals(*object));
  }
  catch (const nlohmann::json::parse_error& e)
  {
    throw ExtractionSchemaError(std::string("identification output is not valid JSON: ") + e.what());
  }

  const std::string flag_key(kKeyLengthConstraint);
  if (!doc.contains(flag_key) || !doc[flag_key].is_boolean())
    throw ExtractionSchemaError("missing boolean \"Length Constraint\"");

  LengthExtraction extraction;
  extraction.is_length_constraint = doc[flag_key].get<bool>();
  if (!extraction.is_length_constraint)
    return extraction;

  const std::string segments_key(kKeyExtractedSegments);
  if (!doc.contains(segments_key) || !doc[segments_key].is_array())
    throw ExtractionSchemaError("missing array \"Extracted Segments\"");
  for (const auto& item : doc[segments_key])
  {
    const std::string req_key(kKeyRequirement), seg_key(kKeySegment);
    if (!item.is_object() || !item.contains(req_key) || !item.contains(seg_key) ||
        !item[req_key].is_string() || !item[seg_key].is_string())
      throw ExtractionSchemaError("extracted segment lacks requirement or segment text");
    extraction.segments.push_back({item[req_key].get<std::string>(), item[seg_key].get<std::string>()});
  }
  return extraction;
}

EvidenceBuild build_evidence(const LengthExtraction& extraction)
{
  EvidenceBuild out;
  if (!extraction.is_length_constraint)
    return out;
  for (const auto& extracted : extraction.segments)
  {
    LengthEvidence ev;
    try
    {
      ev.requirement = parse_requirement(extracted.requirement_text);
    }
    catch (const RequirementParseError&)
    {
      out.skipped.push_back(extracted.requirement_text);
      continue;
    }
    if (unicode::trim(extracted.segment) == kNoSegment)
    {
      ev.satisfied = Satisfied::Unknown;
    }
    else
    {
      ev.segment = extracted.segment;
      ev.measured = measure(extracted.segment, ev.requirement.unit);
      ev.satisfied = check(ev.requirement, *ev.measured) ? Satisfied::Yes : Satisfied::No;
    }
    out.evidence.push_back(std::move(ev));
  }
  return out;
}

std::string render_evidence(const std::vector<LengthEvidence>& evidence)
{
  nlohmann::ordered_json items = nlohmann::ordered_json::array();
  for (const auto& ev : evidence)
  {
    nlohmann::ordered_json item;
    item[std::string(kKeyRequirement)] = ev.requirement.source_text;
    item[std::string(kKeySegment)] = ev.segment ? *ev.segment : std::string(kNoSegment);
    item[std::string(kKeyActualLength)] =
        ev.measured ? std::to_string(*ev.measured) + " " + std::string(display_unit(ev.requirement.unit))
                    : std::string("N/A");
    items.push_back(std::move(item));
  }
  return items.dump(2);
}

} // namespace ifc
