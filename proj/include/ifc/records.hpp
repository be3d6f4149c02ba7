#pragma once

#include "ifc/critique.hpp"
#include "ifc/filter.hpp"
#include "ifc/metaeval.hpp"
#include "ifc/preference.hpp"

#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

// Line-delimited record files. Every line is one JSON object carrying "kind"
// and "v" (schema major version).
namespace ifc::records {

using json = nlohmann::ordered_json;

inline constexpr int kSchemaMajor = 1;

namespace kind {
inline constexpr std::string_view Instruction = "instruction";
inline constexpr std::string_view Checklist = "checklist";
inline constexpr std::string_view CritiqueSample = "critique_sample";
inline constexpr std::string_view Verdict = "verdict";
inline constexpr std::string_view PoolSegment = "pool_segment";
inline constexpr std::string_view FinalCritique = "final_critique";
inline constexpr std::string_view StageReport = "stage_report";
inline constexpr std::string_view PreferencePair = "preference_pair";
inline constexpr std::string_view Split = "split";
inline constexpr std::string_view Reward = "reward";
inline constexpr std::string_view DpoPair = "dpo_pair";
inline constexpr std::string_view GoldLabel = "gold_label";
inline constexpr std::string_view Metrics = "metrics";
} // namespace kind

class SchemaError : public std::runtime_error
{
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error
{
  using std::runtime_error::runtime_error;
};

json header(std::string_view kind);

// Throws SchemaError when the kind differs or the major version is unknown.
// "v" may be an integer major or a "major.minor" string.
void check_header(const json& record, std::string_view kind);

std::vector<json> read_jsonl(const std::filesystem::path& path);

// Writes through a temporary file and renames, so readers never see a
// partially written file.
void write_jsonl(const std::filesystem::path& path, const std::vector<json>& records);

void write_text(const std::filesystem::path& path, const std::string& text);

// Typed accessors raising SchemaError with the field name.
std::string get_string(const json& record, std::string_view field);
int64_t get_int(const json& record, std::string_view field);

// --- instruction -----------------------------------------------------------

struct Instruction
{
  std::string input_id;
  std::string group_id; // responses sharing an instruction share a group
  std::string benchmark;
  std::string instruction;
  std::string response;
  std::map<std::string, std::string> metadata;
};

json to_record(const Instruction& r);
Instruction instruction_from(const json& record);

// --- checklist -------------------------------------------------------------

struct ChecklistRecord
{
  std::string group_id;
  bool ok = true;
  ifc::Checklist checklist;
  std::string error;
  std::string raw;
};

json to_record(const ChecklistRecord& r);
ChecklistRecord checklist_from(const json& record);

// --- critique_sample -------------------------------------------------------

struct CritiqueSampleRecord
{
  std::string input_id;
  int sample_index = 0;
  Provenance provenance = Provenance::Expert;
  std::string provider;
  bool ok = true;
  Critique critique;
  std::string error;
  std::string raw;
};

json segments_json(const std::vector<CritiqueSegment>& segments);
std::vector<CritiqueSegment> segments_from(const json& array);

json to_record(const CritiqueSampleRecord& r);
CritiqueSampleRecord critique_sample_from(const json& record);

// --- filter intermediates and outputs --------------------------------------

json to_record(const VerificationVerdict& v);
VerificationVerdict verdict_from(const json& record);

json pool_segment_record(const std::string& input_id, int constraint_index, const PoolEntry& entry);

json to_record(const FinalCritique& c);
FinalCritique final_critique_from(const json& record);

json stage_report_record(const std::string& input_id, const StageReport& report);

// --- preference pairs, rewards --------------------------------------------

json to_record(const PreferencePair& p);
PreferencePair preference_pair_from(const json& record);

json rational_json(const Rational& r);
Rational rational_from(const json& value);

json to_record(const RewardRecord& r);
RewardRecord reward_from(const json& record);

// --- metaeval --------------------------------------------------------------

struct GoldLabelRecord
{
  std::string input_id;
  int constraint_index = 0;
  Judgment label = Judgment::NotFollowed;
  GoldSource source = GoldSource::Human;
};

json to_record(const GoldLabelRecord& r);
GoldLabelRecord gold_label_from(const json& record);

json to_record(const BenchmarkMetrics& m);
BenchmarkMetrics metrics_from(const json& record);

} // namespace ifc::records
