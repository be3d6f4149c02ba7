#include "ifc/records.hpp"

#include <fstream>
#include <sstream>

namespace ifc::records {

namespace {

const json& field(const json& record, std::string_view name)
{
  auto it = record.find(std::string(name));
  if (it == record.end())
    throw SchemaError("missing field \"" + std::string(name) + "\"");
  return *it;
}

Judgment judgment_from(const json& value, std::string_view name)
{
  if (!value.is_number_integer() || (value.get<int>() != 0 && value.get<int>() != 1))
    throw SchemaError("field \"" + std::string(name) + "\" must be 0 or 1");
  return value.get<int>() == 1 ? Judgment::Followed : Judgment::NotFollowed;
}

json optional_string(const std::optional<std::string>& s)
{
  return s ? json(*s) : json(nullptr);
}

} // namespace

json header(std::string_view k)
{
  json j;
  j["kind"] = k;
  j["v"] = kSchemaMajor;
  return j;
}

void check_header(const json& record, std::string_view k)
{
  if (!record.is_object())
    throw SchemaError("record is not an object");
  const json& kind_field = field(record, "kind");
  if (!kind_field.is_string() || kind_field.get<std::string>() != k)
    throw SchemaError("expected kind \"" + std::string(k) + "\", found " + kind_field.dump());
  const json& v = field(record, "v");
  int64_t major = -1;
  if (v.is_number_integer())
    major = v.get<int64_t>();
  else if (v.is_string())
  {
    const std::string s = v.get<std::string>();
    try
    {
      size_t used = 0;
      major = std::stoll(s, &used);
      if (used != s.size() && s[used] != '.')
        major = -1;
    }
    catch (const std::exception&)
    {
      major = -1;
    }
  }
  if (major != kSchemaMajor)
    throw SchemaError("unsupported schema version " + v.dump() + " for kind \"" + std::string(k) + "\"");
}

std::vector<json> read_jsonl(const std::filesystem::path& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw IoError("cannot open " + path.string());
  std::vector<json> out;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line))
  {
    ++line_no;
    if (!line.empty() && line.back() == '\r')
      line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos)
      continue;
    try
    {
      out.push_back(json::parse(line));
    }
    catch (const json::parse_error& e)
    {
      throw SchemaError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text)
{
  if (path.has_parent_path())
    std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out)
      throw IoError("cannot write " + tmp.string());
    out << text;
    if (!out)
      throw IoError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

void write_jsonl(const std::filesystem::path& path, const std::vector<json>& records)
{
  std::string text;
  for (const auto& r : records)
  {
    text += r.dump(-1, ' ', false, json::error_handler_t::replace);
    text += '\n';
  }
  write_text(path, text);
}

std::string get_string(const json& record, std::string_view name)
{
  const json& v = field(record, name);
  if (!v.is_string())
    throw SchemaError("field \"" + std::string(name) + "\" must be a string");
  return v.get<std::string>();
}

int64_t get_int(const json& record, std::string_view name)
{
  const json& v = field(record, name);
  if (!v.is_number_integer())
    throw SchemaError("field \"" + std::string(name) + "\" must be an integer");
  return v.get<int64_t>();
}

// --- instruction -----------------------------------------------------------

json to_record(const Instruction& r)
{
  json j = header(kind::Instruction);
  j["input_id"] = r.input_id;
  j["group_id"] = r.group_id;
  j["benchmark"] = r.benchmark;
  j["instruction"] = r.instruction;
  j["response"] = r.response;
  if (!r.metadata.empty())
    j["metadata"] = r.metadata;
  return j;
}

Instruction instruction_from(const json& record)
{
  check_header(record, kind::Instruction);
  Instruction r;
  r.input_id = get_string(record, "input_id");
  r.group_id = record.contains("group_id") ? get_string(record, "group_id") : r.input_id;
  r.benchmark = record.contains("benchmark") ? get_string(record, "benchmark") : "default";
  r.instruction = get_string(record, "instruction");
  r.response = get_string(record, "response");
  if (record.contains("metadata"))
  {
    const json& m = record["metadata"];
    if (!m.is_object())
      throw SchemaError("field \"metadata\" must be an object");
    for (auto it = m.begin(); it != m.end(); ++it)
      r.metadata[it.key()] = it->is_string() ? it->get<std::string>() : it->dump();
  }
  return r;
}

// --- checklist -------------------------------------------------------------

json to_record(const ChecklistRecord& r)
{
  json j = header(kind::Checklist);
  j["group_id"] = r.group_id;
  j["status"] = r.ok ? "ok" : "failed";
  json constraints = json::array();
  for (const auto& c : r.checklist.constraints())
    constraints.push_back(c.text);
  j["constraints"] = constraints;
  if (!r.ok)
  {
    j["error"] = r.error;
    j["raw"] = r.raw;
  }
  return j;
}

ChecklistRecord checklist_from(const json& record)
{
  check_header(record, kind::Checklist);
  ChecklistRecord r;
  r.group_id = get_string(record, "group_id");
  r.ok = get_string(record, "status") == "ok";
  if (r.ok)
  {
    const json& c = field(record, "constraints");
    if (!c.is_array())
      throw SchemaError("field \"constraints\" must be an array");
    std::vector<std::string> texts;
    for (const auto& t : c)
    {
      if (!t.is_string())
        throw SchemaError("constraints must be strings");
      texts.push_back(t.get<std::string>());
    }
    try
    {
      r.checklist = ifc::Checklist::from_texts(texts);
    }
    catch (const ParseError& e)
    {
      throw SchemaError(std::string("invalid checklist: ") + e.what());
    }
  }
  else
  {
    r.error = record.value("error", "");
    r.raw = record.value("raw", "");
  }
  return r;
}

// --- critique_sample -------------------------------------------------------

json segments_json(const std::vector<CritiqueSegment>& segments)
{
  json arr = json::array();
  for (const auto& s : segments)
  {
    json j;
    j["constraint_index"] = s.constraint_index;
    j["constraint"] = s.constraint_echo;
    j["explanation"] = s.explanation;
    j["judgment"] = static_cast<int>(s.judgment);
    arr.push_back(j);
  }
  return arr;
}

std::vector<CritiqueSegment> segments_from(const json& array)
{
  if (!array.is_array())
    throw SchemaError("segments must be an array");
  std::vector<CritiqueSegment> out;
  for (const auto& j : array)
  {
    CritiqueSegment s;
    s.constraint_index = static_cast<int>(get_int(j, "constraint_index"));
    s.constraint_echo = get_string(j, "constraint");
    s.explanation = get_string(j, "explanation");
    s.judgment = judgment_from(field(j, "judgment"), "judgment");
    out.push_back(std::move(s));
  }
  return out;
}

json to_record(const CritiqueSampleRecord& r)
{
  json j = header(kind::CritiqueSample);
  j["input_id"] = r.input_id;
  j["sample_index"] = r.sample_index;
  j["provenance"] = to_string(r.provenance);
  j["provider"] = r.provider;
  j["status"] = r.ok ? "ok" : "error";
  if (r.ok)
    j["segments"] = segments_json(r.critique.segments);
  else
  {
    j["error"] = r.error;
    j["raw"] = r.raw;
  }
  return j;
}

CritiqueSampleRecord critique_sample_from(const json& record)
{
  check_header(record, kind::CritiqueSample);
  CritiqueSampleRecord r;
  r.input_id = get_string(record, "input_id");
  r.sample_index = static_cast<int>(get_int(record, "sample_index"));
  try
  {
    r.provenance = provenance_from_string(get_string(record, "provenance"));
  }
  catch (const std::invalid_argument& e)
  {
    throw SchemaError(e.what());
  }
  r.provider = record.value("provider", "");
  r.ok = get_string(record, "status") == "ok";
  r.critique.input_id = r.input_id;
  r.critique.provenance = r.provenance;
  if (r.ok)
    r.critique.segments = segments_from(field(record, "segments"));
  else
  {
    r.error = record.value("error", "");
    r.raw = record.value("raw", "");
  }
  return r;
}

// --- filter ---------------------------------------------------------------

json to_record(const VerificationVerdict& v)
{
  json j = header(kind::Verdict);
  j["input_id"] = v.input_id;
  j["constraint_index"] = v.constraint_index;
  j["sample_index"] = v.sample_index;
  j["verifier"] = v.verifier_id;
  j["aspect"] = to_string(v.aspect);
  j["passed"] = v.passed;
  j["raw"] = v.raw_verdict_text;
  return j;
}

VerificationVerdict verdict_from(const json& record)
{
  check_header(record, kind::Verdict);
  VerificationVerdict v;
  v.input_id = get_string(record, "input_id");
  v.constraint_index = static_cast<int>(get_int(record, "constraint_index"));
  v.sample_index = static_cast<int>(get_int(record, "sample_index"));
  v.verifier_id = get_string(record, "verifier");
  try
  {
    v.aspect = verify_aspect_from_string(get_string(record, "aspect"));
  }
  catch (const std::invalid_argument& e)
  {
    throw SchemaError(e.what());
  }
  const json& passed = field(record, "passed");
  if (!passed.is_boolean())
    throw SchemaError("field \"passed\" must be a boolean");
  v.passed = passed.get<bool>();
  v.raw_verdict_text = record.value("raw", "");
  return v;
}

json pool_segment_record(const std::string& input_id, int constraint_index, const PoolEntry& entry)
{
  json j = header(kind::PoolSegment);
  j["input_id"] = input_id;
  j["constraint_index"] = constraint_index;
  j["sample_index"] = entry.sample_index;
  j["explanation"] = entry.explanation;
  j["judgment"] = static_cast<int>(entry.judgment);
  j["revised"] = entry.revised;
  return j;
}

json to_record(const FinalCritique& c)
{
  json j = header(kind::FinalCritique);
  j["input_id"] = c.input_id;
  json constraints = json::array();
  for (const auto& fc : c.constraints)
  {
    json e;
    e["constraint_index"] = fc.constraint_index;
    e["judgment"] = fc.judgment ? json(static_cast<int>(*fc.judgment)) : json(nullptr);
    e["confidence"] = fc.confidence;
    e["explanation"] = optional_string(fc.explanation);
    e["explanation_sample_index"] =
        fc.explanation_sample_index ? json(*fc.explanation_sample_index) : json(nullptr);
    e["votes"] = {{"followed", fc.votes.followed}, {"not_followed", fc.votes.not_followed}};
    e["discard_reason"] = to_string(fc.reason);
    constraints.push_back(e);
  }
  j["constraints"] = constraints;
  return j;
}

FinalCritique final_critique_from(const json& record)
{
  check_header(record, kind::FinalCritique);
  FinalCritique c;
  c.input_id = get_string(record, "input_id");
  const json& arr = field(record, "constraints");
  if (!arr.is_array())
    throw SchemaError("field \"constraints\" must be an array");
  for (const auto& e : arr)
  {
    FinalConstraint fc;
    fc.constraint_index = static_cast<int>(get_int(e, "constraint_index"));
    const json& jv = field(e, "judgment");
    if (!jv.is_null())
      fc.judgment = judgment_from(jv, "judgment");
    fc.confidence = e.value("confidence", 0.0);
    if (e.contains("explanation") && e["explanation"].is_string())
      fc.explanation = e["explanation"].get<std::string>();
    if (e.contains("explanation_sample_index") && e["explanation_sample_index"].is_number_integer())
      fc.explanation_sample_index = e["explanation_sample_index"].get<int>();
    if (e.contains("votes"))
    {
      fc.votes.followed = e["votes"].value("followed", 0);
      fc.votes.not_followed = e["votes"].value("not_followed", 0);
    }
    const std::string reason = e.value("discard_reason", "none");
    fc.reason = reason == "empty_pool"       ? DiscardReason::EmptyPool
                : reason == "tie"            ? DiscardReason::Tie
                : reason == "low_confidence" ? DiscardReason::LowConfidence
                                             : DiscardReason::None;
    if (fc.judgment && !fc.explanation)
      throw SchemaError("retained constraint " + std::to_string(fc.constraint_index) + " has no explanation");
    c.constraints.push_back(std::move(fc));
  }
  return c;
}

json stage_report_record(const std::string& input_id, const StageReport& report)
{
  json j = header(kind::StageReport);
  j["input_id"] = input_id;
  json stages = json::array();
  for (const auto& s : report.stages)
  {
    json e;
    e["stage"] = s.stage;
    e["segments_in"] = s.segments_in;
    e["segments_out"] = s.segments_out;
    e["discarded_by_tie"] = s.discarded_by_tie;
    e["discarded_by_confidence"] = s.discarded_by_confidence;
    e["discarded_by_empty_pool"] = s.discarded_by_empty_pool;
    stages.push_back(e);
  }
  j["stages"] = stages;
  return j;
}

// --- preference ------------------------------------------------------------

json to_record(const PreferencePair& p)
{
  json j = header(kind::PreferencePair);
  j["input_id"] = p.input_id;
  j["prompt_fingerprint"] = p.prompt_fingerprint;
  j["rejected_sample_index"] = p.rejected_sample_index;
  j["diff_indices"] = p.diff_indices;
  j["chosen"] = {{"provenance", to_string(p.chosen.provenance)}, {"segments", segments_json(p.chosen.segments)}};
  j["rejected"] = {{"provenance", to_string(p.rejected.provenance)},
                   {"segments", segments_json(p.rejected.segments)}};
  return j;
}

PreferencePair preference_pair_from(const json& record)
{
  check_header(record, kind::PreferencePair);
  PreferencePair p;
  p.input_id = get_string(record, "input_id");
  p.prompt_fingerprint = get_string(record, "prompt_fingerprint");
  p.rejected_sample_index = static_cast<int>(get_int(record, "rejected_sample_index"));
  for (const auto& k : field(record, "diff_indices"))
    p.diff_indices.insert(k.get<int>());
  p.chosen.input_id = p.rejected.input_id = p.input_id;
  p.chosen.provenance = Provenance::FinalAssembled;
  p.rejected.provenance = Provenance::SelfSample;
  p.chosen.segments = segments_from(field(field(record, "chosen"), "segments"));
  p.rejected.segments = segments_from(field(field(record, "rejected"), "segments"));
  return p;
}

json rational_json(const Rational& r)
{
  return {{"numerator", r.numerator()}, {"denominator", r.denominator()}};
}

Rational rational_from(const json& value)
{
  try
  {
    return Rational(get_int(value, "numerator"), get_int(value, "denominator"));
  }
  catch (const std::invalid_argument& e)
  {
    throw SchemaError(e.what());
  }
}

json to_record(const RewardRecord& r)
{
  json j = header(kind::Reward);
  j["group_id"] = r.group_id;
  j["input_id"] = r.input_id;
  j["response_id"] = r.response_id;
  j["judgments"] = r.judgments;
  j["reward"] = rational_json(r.reward);
  return j;
}

RewardRecord reward_from(const json& record)
{
  check_header(record, kind::Reward);
  RewardRecord r;
  r.group_id = get_string(record, "group_id");
  r.input_id = get_string(record, "input_id");
  r.response_id = get_string(record, "response_id");
  for (const auto& j : field(record, "judgments"))
    r.judgments.push_back(j.get<int>());
  r.reward = rational_from(field(record, "reward"));
  return r;
}

// --- metaeval --------------------------------------------------------------

json to_record(const GoldLabelRecord& r)
{
  json j = header(kind::GoldLabel);
  j["input_id"] = r.input_id;
  j["constraint_index"] = r.constraint_index;
  j["label"] = static_cast<int>(r.label);
  j["source"] = to_string(r.source);
  return j;
}

GoldLabelRecord gold_label_from(const json& record)
{
  check_header(record, kind::GoldLabel);
  GoldLabelRecord r;
  r.input_id = get_string(record, "input_id");
  r.constraint_index = static_cast<int>(get_int(record, "constraint_index"));
  r.label = judgment_from(field(record, "label"), "label");
  try
  {
    r.source = gold_source_from_string(record.value("source", "human"));
  }
  catch (const std::invalid_argument& e)
  {
    throw SchemaError(e.what());
  }
  return r;
}

json to_record(const BenchmarkMetrics& m)
{
  json j = header(kind::Metrics);
  j["benchmark"] = m.benchmark;
  j["confusion"] = {{"tp", m.confusion.tp}, {"fp", m.confusion.fp}, {"fn", m.confusion.fn}, {"tn", m.confusion.tn}};
  j["positive_f1"] = m.f1.positive_f1;
  j["negative_f1"] = m.f1.negative_f1;
  j["average_f1"] = m.f1.average_f1;
  j["positive_undefined"] = m.f1.positive_undefined;
  j["negative_undefined"] = m.f1.negative_undefined;
  if (m.pairwise)
  {
    const auto& p = *m.pairwise;
    j["pairwise"] = {{"agreement_rate", p.agreement_rate ? json(*p.agreement_rate) : json(nullptr)},
                     {"agree", p.agree},
                     {"disagree", p.disagree},
                     {"ties_removed", p.ties_removed},
                     {"total", p.total}};
  }
  else
    j["pairwise"] = nullptr;
  return j;
}

BenchmarkMetrics metrics_from(const json& record)
{
  check_header(record, kind::Metrics);
  BenchmarkMetrics m;
  m.benchmark = get_string(record, "benchmark");
  const json& cm = field(record, "confusion");
  m.confusion.tp = static_cast<uint64_t>(get_int(cm, "tp"));
  m.confusion.fp = static_cast<uint64_t>(get_int(cm, "fp"));
  m.confusion.fn = static_cast<uint64_t>(get_int(cm, "fn"));
  m.confusion.tn = static_cast<uint64_t>(get_int(cm, "tn"));
  // Recomputed rather than trusted, so a report always matches its counts.
  m.f1 = f1_report(m.confusion);
  if (record.contains("pairwise") && record["pairwise"].is_object())
  {
    const json& p = record["pairwise"];
    AgreementReport a;
    a.agree = static_cast<size_t>(get_int(p, "agree"));
    a.disagree = static_cast<size_t>(get_int(p, "disagree"));
    a.ties_removed = static_cast<size_t>(get_int(p, "ties_removed"));
    a.total = static_cast<size_t>(get_int(p, "total"));
    if (a.agree + a.disagree > 0)
      a.agreement_rate = static_cast<double>(a.agree) / static_cast<double>(a.agree + a.disagree);
    m.pairwise = a;
  }
  return m;
}

} // namespace ifc::records
