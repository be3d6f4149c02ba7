#pragma once

#include "ifc/critique.hpp"
#include "ifc/gateway.hpp"
#include "ifc/length_rules.hpp"

#include <optional>
#include <string>
#include <vector>

namespace ifc {

inline constexpr int kDefaultExpertSamples = 5;
inline constexpr double kDefaultConfidenceThreshold = 0.75;

struct CritiqueSampleSet
{
  std::string input_id;
  Checklist checklist;
  std::vector<Critique> samples; // indexed by sample_index

  // Every sample must align with the checklist; throws std::invalid_argument.
  void validate() const;
};

enum class VerifyAspect
{
  ExplanationCorrectness,
  ExplanationJudgmentConsistency,
};

std::string_view to_string(VerifyAspect aspect);
VerifyAspect verify_aspect_from_string(std::string_view s);

struct VerificationVerdict
{
  std::string input_id;
  int constraint_index = 0;
  int sample_index = 0;
  std::string verifier_id;
  VerifyAspect aspect = VerifyAspect::ExplanationCorrectness;
  bool passed = false;
  std::string raw_verdict_text;
};

// Positive sentinel present and negative sentinel absent. `parsed` is false
// when neither sentinel appears (counted as a failure).
struct VerdictParse
{
  bool passed = false;
  bool parsed = false;
};
VerdictParse parse_verdict(VerifyAspect aspect, std::string_view text);

struct PoolEntry
{
  std::string explanation;
  Judgment judgment = Judgment::NotFollowed;
  int sample_index = 0;
  bool revised = false;

  bool operator==(const PoolEntry&) const = default;
};

// Surviving segments per constraint; entries[k-1] belongs to constraint k.
struct SegmentPool
{
  std::vector<std::vector<PoolEntry>> entries;

  size_t total() const;
};

// Every segment of every sample, unfiltered.
SegmentPool full_pool(const CritiqueSampleSet& samples);

struct StageFinding
{
  std::string stage;
  int constraint_index = 0;
  int sample_index = -1;
  std::string message;
};

struct VerificationResult
{
  std::vector<VerificationVerdict> verdicts;
  std::vector<StageFinding> findings;
};

class PipelineError : public std::runtime_error
{
  using std::runtime_error::runtime_error;
};

// Both aspect prompts per (sample, segment, verifier), greedy decoding.
// Provider failures that survive the gateway's retries raise PipelineError.
VerificationResult cross_model_verify(const EvaluationInput& input, const CritiqueSampleSet& samples,
                                      const std::vector<std::string>& verifiers, Gateway& gateway,
                                      size_t parallelism_bound);

class IncompleteVerdictCoverage : public std::invalid_argument
{
  using std::invalid_argument::invalid_argument;
};

// A segment survives iff every verdict for it passed. Requires a verdict for
// every (sample, constraint, verifier, aspect).
SegmentPool apply_verification_filter(const CritiqueSampleSet& samples,
                                      const std::vector<VerificationVerdict>& verdicts,
                                      const std::vector<std::string>& verifiers);

// nullopt for constraints that are not length-related.
using LengthEvidenceTable = std::vector<std::optional<std::vector<LengthEvidence>>>;

struct LengthIdentification
{
  LengthEvidenceTable evidence;
  std::vector<StageFinding> findings;
};

// Length identification + extraction per constraint (LLM), then counting.
LengthIdentification identify_length_constraints(const EvaluationInput& input, const Checklist& checklist,
                                                 const std::string& extractor, Gateway& gateway,
                                                 size_t parallelism_bound);

struct RevisionResult
{
  SegmentPool pool;
  std::vector<StageFinding> findings;
  size_t revised = 0;
};

// Regenerates every pooled segment of a length constraint through the
// revision prompt with its evidence attached. Other constraints pass through.
// Unparseable revisions keep the original segment and add a finding.
RevisionResult rule_augmented_revise(const EvaluationInput& input, const Checklist& checklist,
                                     const SegmentPool& pool, const LengthEvidenceTable& evidence,
                                     const std::string& reviser, Gateway& gateway, size_t parallelism_bound);

struct VoteCounts
{
  int followed = 0;
  int not_followed = 0;

  int total() const { return followed + not_followed; }
  bool operator==(const VoteCounts&) const = default;
};

enum class DiscardReason
{
  None,
  EmptyPool,
  Tie,
  LowConfidence,
};

std::string_view to_string(DiscardReason reason);

struct JudgmentSelection
{
  std::optional<Judgment> judgment; // nullopt = Discarded
  double confidence = 0.0;
  VoteCounts votes;
  DiscardReason reason = DiscardReason::None;
};

// Majority vote; confidence = majority / pool size. Threshold must lie in
// (0.5, 1].
JudgmentSelection select_final_judgment(const std::vector<PoolEntry>& entries, double threshold);

struct ExplanationSelection
{
  std::string explanation;
  int sample_index = 0;
  double mean_similarity = 0.0;
};

// MBR over the explanations whose judgment equals `final_judgment`.
ExplanationSelection select_final_explanation(const std::vector<PoolEntry>& entries, Judgment final_judgment);

struct FinalConstraint
{
  int constraint_index = 0;
  std::optional<Judgment> judgment; // nullopt = Discarded
  double confidence = 0.0;
  std::optional<std::string> explanation;
  std::optional<int> explanation_sample_index;
  VoteCounts votes;
  DiscardReason reason = DiscardReason::None;
};

struct FinalCritique
{
  std::string input_id;
  std::vector<FinalConstraint> constraints;

  size_t retained() const;
};

struct StageCounts
{
  std::string stage;
  size_t segments_in = 0;
  size_t segments_out = 0;
  size_t discarded_by_tie = 0;
  size_t discarded_by_confidence = 0;
  size_t discarded_by_empty_pool = 0;
};

struct StageReport
{
  std::vector<StageCounts> stages;
};

struct FilterConfig
{
  double threshold = kDefaultConfidenceThreshold;
  std::vector<std::string> verifiers;
  std::string extractor;
  std::string reviser;
  bool skip_verification = false;
  bool skip_revision = false;
  size_t parallelism_bound = 8;
};

struct FilterOutcome
{
  FinalCritique final_critique;
  StageReport report;
  std::vector<VerificationVerdict> verdicts;
  SegmentPool verified_pool;
  SegmentPool revised_pool;
  std::vector<StageFinding> findings;
};

// Optional persisted stage outputs to resume from.
struct FilterResume
{
  std::optional<std::vector<VerificationVerdict>> verdicts;
  std::optional<SegmentPool> revised_pool;
};

// verification -> rule-augmented revision -> judgment voting -> MBR.
FilterOutcome run_filtering_pipeline(const EvaluationInput& input, const CritiqueSampleSet& samples,
                                     const FilterConfig& config, Gateway& gateway,
                                     const FilterResume& resume = {});

// Aggregation stages only (voting + MBR) over an already filtered pool.
FinalCritique select_final_critique(const std::string& input_id, const SegmentPool& pool, double threshold,
                                    StageCounts* judgment_stage = nullptr,
                                    StageCounts* explanation_stage = nullptr);

} // namespace ifc
