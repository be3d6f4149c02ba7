#include "ifc/filter.hpp"

#include "ifc/textsim.hpp"

#include <algorithm>
#include <map>
#include <tuple>

namespace ifc {

namespace {

constexpr std::string_view kCorrectPositive = "[[The given critique is correct]]";
constexpr std::string_view kCorrectNegative = "[[The given critique is not correct]]";
constexpr std::string_view kConsistentPositive = "[[Explanation and Judgment are consistent]]";
constexpr std::string_view kConsistentNegative = "[[Explanation and Judgment are not consistent]]";

constexpr VerifyAspect kAspects[] = {VerifyAspect::ExplanationCorrectness,
                                     VerifyAspect::ExplanationJudgmentConsistency};

std::string slot_error(const BatchSlot& slot)
{
  return slot.error ? std::string(to_string(slot.error->kind())) + ": " + slot.error->what() : "unknown error";
}

} // namespace

void CritiqueSampleSet::validate() const
{
  if (samples.empty())
    throw std::invalid_argument("input " + input_id + ": no critique samples");
  for (size_t i = 0; i < samples.size(); ++i)
  {
    auto findings = validate_alignment(samples[i], checklist);
    if (!findings.empty())
      throw std::invalid_argument("input " + input_id + ": sample " + std::to_string(i) +
                                  " does not align with the checklist: " + findings.front().message);
  }
}

std::string_view to_string(VerifyAspect aspect)
{
  return aspect == VerifyAspect::ExplanationCorrectness ? "correctness" : "consistency";
}

VerifyAspect verify_aspect_from_string(std::string_view s)
{
  if (s == "correctness")
    return VerifyAspect::ExplanationCorrectness;
  if (s == "consistency")
    return VerifyAspect::ExplanationJudgmentConsistency;
  throw std::invalid_argument("unknown verification aspect: " + std::string(s));
}

VerdictParse parse_verdict(VerifyAspect aspect, std::string_view text)
{
  auto [positive, negative] = aspect == VerifyAspect::ExplanationCorrectness
                                  ? std::pair{kCorrectPositive, kCorrectNegative}
                                  : std::pair{kConsistentPositive, kConsistentNegative};
  bool has_positive = text.find(positive) != std::string_view::npos;
  bool has_negative = text.find(negative) != std::string_view::npos;
  return {has_positive && !has_negative, has_positive || has_negative};
}

size_t SegmentPool::total() const
{
  size_t n = 0;
  for (const auto& e : entries)
    n += e.size();
  return n;
}

SegmentPool full_pool(const CritiqueSampleSet& samples)
{
  SegmentPool pool;
  pool.entries.resize(samples.checklist.size());
  for (size_t s = 0; s < samples.samples.size(); ++s)
    for (const auto& seg : samples.samples[s].segments)
      pool.entries[static_cast<size_t>(seg.constraint_index - 1)].push_back(
          {seg.explanation, seg.judgment, static_cast<int>(s), false});
  return pool;
}

VerificationResult cross_model_verify(const EvaluationInput& input, const CritiqueSampleSet& samples,
                                      const std::vector<std::string>& verifiers, Gateway& gateway,
                                      size_t parallelism_bound)
{
  if (verifiers.empty())
    throw std::invalid_argument("cross-model verification needs at least one verifier");

  std::vector<CompletionRequest> requests;
  std::vector<VerificationVerdict> verdicts;
  for (size_t s = 0; s < samples.samples.size(); ++s)
  {
    for (const auto& seg : samples.samples[s].segments)
    {
      const Constraint& constraint = samples.checklist.at(seg.constraint_index);
      std::string critique = render_segment_critique(seg);
      for (const auto& verifier : verifiers)
      {
        SamplingParams sampling = greedy(gateway.provider_config(verifier).sampling);
        for (VerifyAspect aspect : kAspects)
        {
          CompletionRequest req;
          req.provider = verifier;
          req.sampling = sampling;
          req.bindings = {{"constraint", constraint.text}, {"critique", critique}};
          if (aspect == VerifyAspect::ExplanationCorrectness)
          {
            req.template_id = TemplateId::VerifyCorrectness;
            req.bindings["instruction"] = input.instruction;
            req.bindings["response"] = input.response;
          }
          else
            req.template_id = TemplateId::VerifyConsistency;
          requests.push_back(std::move(req));

          VerificationVerdict v;
          v.input_id = samples.input_id;
          v.constraint_index = seg.constraint_index;
          v.sample_index = static_cast<int>(s);
          v.verifier_id = verifier;
          v.aspect = aspect;
          verdicts.push_back(std::move(v));
        }
      }
    }
  }

  auto slots = gateway.complete_batch(requests, parallelism_bound);
  VerificationResult result;
  for (size_t i = 0; i < slots.size(); ++i)
  {
    if (!slots[i].ok())
      throw PipelineError("input " + samples.input_id + ": verification call failed: " + slot_error(slots[i]));
    VerificationVerdict& v = verdicts[i];
    v.raw_verdict_text = slots[i].exchange->response.text;
    VerdictParse parsed = parse_verdict(v.aspect, v.raw_verdict_text);
    v.passed = parsed.passed;
    if (!parsed.parsed)
      result.findings.push_back({"verification", v.constraint_index, v.sample_index,
                                 "UnparseableVerdict from " + v.verifier_id + " (" +
                                     std::string(to_string(v.aspect)) + "), counted as failed"});
  }
  result.verdicts = std::move(verdicts);
  return result;
}

SegmentPool apply_verification_filter(const CritiqueSampleSet& samples,
                                      const std::vector<VerificationVerdict>& verdicts,
                                      const std::vector<std::string>& verifiers)
{
  using Key = std::tuple<int, int, std::string, VerifyAspect>; // sample, constraint, verifier, aspect
  std::map<Key, bool> passed;
  for (const auto& v : verdicts)
  {
    Key key{v.sample_index, v.constraint_index, v.verifier_id, v.aspect};
    auto [it, inserted] = passed.emplace(key, v.passed);
    if (!inserted)
      it->second = it->second && v.passed;
  }

  SegmentPool pool;
  pool.entries.resize(samples.checklist.size());
  for (size_t s = 0; s < samples.samples.size(); ++s)
  {
    for (const auto& seg : samples.samples[s].segments)
    {
      bool survives = true;
      for (const auto& verifier : verifiers)
        for (VerifyAspect aspect : kAspects)
        {
          auto it = passed.find({static_cast<int>(s), seg.constraint_index, verifier, aspect});
          if (it == passed.end())
            throw IncompleteVerdictCoverage("input " + samples.input_id + ": no " +
                                            std::string(to_string(aspect)) + " verdict from " + verifier +
                                            " for sample " + std::to_string(s) + ", constraint " +
                                            std::to_string(seg.constraint_index));
          survives = survives && it->second;
        }
      if (survives)
        pool.entries[static_cast<size_t>(seg.constraint_index - 1)].push_back(
            {seg.explanation, seg.judgment, static_cast<int>(s), false});
    }
  }
  return pool;
}

LengthIdentification identify_length_constraints(const EvaluationInput& input, const Checklist& checklist,
                                                 const std::string& extractor, Gateway& gateway,
                                                 size_t parallelism_bound)
{
  std::vector<CompletionRequest> requests;
  SamplingParams sampling = greedy(gateway.provider_config(extractor).sampling);
  for (const auto& c : checklist.constraints())
  {
    CompletionRequest req;
    req.provider = extractor;
    req.template_id = TemplateId::LengthIdentify;
    req.sampling = sampling;
    req.bindings = {{"in_context_examples", gateway.templates().length_examples()},
                    {"instruction", input.instruction},
                    {"constraint", c.text},
                    {"response", input.response}};
    requests.push_back(std::move(req));
  }

  auto slots = gateway.complete_batch(requests, parallelism_bound);
  LengthIdentification out;
  out.evidence.resize(checklist.size());
  for (size_t i = 0; i < slots.size(); ++i)
  {
    const int k = static_cast<int>(i) + 1;
    if (!slots[i].ok())
      throw PipelineError("input " + input.id + ": length identification failed: " + slot_error(slots[i]));
    LengthExtraction extraction;
    try
    {
      extraction = parse_extraction(slots[i].exchange->response.text);
    }
    catch (const ExtractionSchemaError& e)
    {
      out.findings.push_back({"revision", k, -1, std::string("ExtractionSchemaError: ") + e.what()});
      continue;
    }
    EvidenceBuild built = build_evidence(extraction);
    for (const auto& quote : built.skipped)
      out.findings.push_back({"revision", k, -1, "uninterpretable length requirement: " + quote});
    if (extraction.is_length_constraint && !built.evidence.empty())
      out.evidence[i] = std::move(built.evidence);
  }
  return out;
}

RevisionResult rule_augmented_revise(const EvaluationInput& input, const Checklist& checklist,
                                     const SegmentPool& pool, const LengthEvidenceTable& evidence,
                                     const std::string& reviser, Gateway& gateway, size_t parallelism_bound)
{
  RevisionResult result;
  result.pool = pool;

  std::vector<CompletionRequest> requests;
  std::vector<std::pair<size_t, size_t>> targets; // (constraint slot, entry)
  for (size_t k = 0; k < pool.entries.size(); ++k)
  {
    if (k >= evidence.size() || !evidence[k])
      continue;
    std::string json_data = render_evidence(*evidence[k]);
    const Constraint& constraint = checklist.at(static_cast<int>(k) + 1);
    for (size_t e = 0; e < pool.entries[k].size(); ++e)
    {
      CompletionRequest req;
      req.provider = reviser;
      req.template_id = TemplateId::LengthRevise;
      req.sample_index = pool.entries[k][e].sample_index;
      req.bindings = {{"instruction", input.instruction},
                      {"constraint", constraint.text},
                      {"response", input.response},
                      {"json_data", json_data}};
      requests.push_back(std::move(req));
      targets.emplace_back(k, e);
    }
  }

  auto slots = gateway.complete_batch(requests, parallelism_bound);
  for (size_t i = 0; i < slots.size(); ++i)
  {
    auto [k, e] = targets[i];
    PoolEntry& entry = result.pool.entries[k][e];
    const Constraint& constraint = checklist.at(static_cast<int>(k) + 1);
    if (!slots[i].ok())
      throw PipelineError("input " + input.id + ": revision call failed: " + slot_error(slots[i]));
    try
    {
      CritiqueSegment revised = parse_revised_segment(slots[i].exchange->response.text, constraint);
      entry.explanation = revised.explanation;
      entry.judgment = revised.judgment;
      entry.revised = true;
      ++result.revised;
    }
    catch (const ParseError& err)
    {
      result.findings.push_back({"revision", constraint.index, entry.sample_index,
                                 std::string("RevisionParseError (kept original): ") + err.what()});
    }
  }
  return result;
}

std::string_view to_string(DiscardReason reason)
{
  switch (reason)
  {
  case DiscardReason::None: return "none";
  case DiscardReason::EmptyPool: return "empty_pool";
  case DiscardReason::Tie: return "tie";
  case DiscardReason::LowConfidence: return "low_confidence";
  }
  return "unknown";
}

JudgmentSelection select_final_judgment(const std::vector<PoolEntry>& entries, double threshold)
{
  if (!(threshold > 0.5 && threshold <= 1.0))
    throw std::invalid_argument("confidence threshold must lie in (0.5, 1]");

  JudgmentSelection sel;
  for (const auto& e : entries)
    (e.judgment == Judgment::Followed ? sel.votes.followed : sel.votes.not_followed)++;

  const int total = sel.votes.total();
  if (total == 0)
  {
    sel.reason = DiscardReason::EmptyPool;
    return sel;
  }
  const int majority = std::max(sel.votes.followed, sel.votes.not_followed);
  sel.confidence = static_cast<double>(majority) / static_cast<double>(total);
  if (sel.votes.followed == sel.votes.not_followed)
  {
    sel.reason = DiscardReason::Tie;
    return sel;
  }
  if (sel.confidence < threshold)
  {
    sel.reason = DiscardReason::LowConfidence;
    return sel;
  }
  sel.judgment = sel.votes.followed > sel.votes.not_followed ? Judgment::Followed : Judgment::NotFollowed;
  return sel;
}

ExplanationSelection select_final_explanation(const std::vector<PoolEntry>& entries, Judgment final_judgment)
{
  std::vector<std::string> hypotheses;
  std::vector<int> sources;
  for (const auto& e : entries)
    if (e.judgment == final_judgment)
    {
      hypotheses.push_back(e.explanation);
      sources.push_back(e.sample_index);
    }
  MbrChoice choice = mbr_select(hypotheses); // throws EmptyHypothesisSet
  return {hypotheses[choice.index], sources[choice.index], choice.mean_similarity};
}

size_t FinalCritique::retained() const
{
  return static_cast<size_t>(std::count_if(constraints.begin(), constraints.end(),
                                           [](const FinalConstraint& c) { return c.judgment.has_value(); }));
}

FinalCritique select_final_critique(const std::string& input_id, const SegmentPool& pool, double threshold,
                                    StageCounts* judgment_stage, StageCounts* explanation_stage)
{
  FinalCritique fc;
  fc.input_id = input_id;
  StageCounts judge{"judgment"};
  StageCounts explain{"explanation"};
  judge.segments_in = pool.total();
  for (size_t k = 0; k < pool.entries.size(); ++k)
  {
    const auto& entries = pool.entries[k];
    FinalConstraint c;
    c.constraint_index = static_cast<int>(k) + 1;
    JudgmentSelection sel = select_final_judgment(entries, threshold);
    c.confidence = sel.confidence;
    c.votes = sel.votes;
    c.reason = sel.reason;
    switch (sel.reason)
    {
    case DiscardReason::Tie: ++judge.discarded_by_tie; break;
    case DiscardReason::LowConfidence: ++judge.discarded_by_confidence; break;
    case DiscardReason::EmptyPool: ++judge.discarded_by_empty_pool; break;
    case DiscardReason::None: break;
    }
    if (sel.judgment)
    {
      c.judgment = sel.judgment;
      judge.segments_out += entries.size();
      explain.segments_in += entries.size();
      ExplanationSelection ex = select_final_explanation(entries, *sel.judgment);
      c.explanation = std::move(ex.explanation);
      c.explanation_sample_index = ex.sample_index;
      ++explain.segments_out;
    }
    fc.constraints.push_back(std::move(c));
  }
  if (judgment_stage)
    *judgment_stage = judge;
  if (explanation_stage)
    *explanation_stage = explain;
  return fc;
}

FilterOutcome run_filtering_pipeline(const EvaluationInput& input, const CritiqueSampleSet& samples,
                                     const FilterConfig& config, Gateway& gateway, const FilterResume& resume)
{
  samples.validate();
  FilterOutcome out;
  size_t all_segments = samples.samples.size() * samples.checklist.size();

  // Stage 1: cross-model verification.
  StageCounts verify{"verification", all_segments, all_segments};
  if (config.skip_verification)
    out.verified_pool = full_pool(samples);
  else
  {
    if (resume.verdicts)
      out.verdicts = *resume.verdicts;
    else
    {
      VerificationResult vr =
          cross_model_verify(input, samples, config.verifiers, gateway, config.parallelism_bound);
      out.verdicts = std::move(vr.verdicts);
      out.findings.insert(out.findings.end(), vr.findings.begin(), vr.findings.end());
    }
    out.verified_pool = apply_verification_filter(samples, out.verdicts, config.verifiers);
    verify.segments_out = out.verified_pool.total();
  }
  out.report.stages.push_back(verify);

  // Stage 2: rule-augmented revision of length constraints.
  StageCounts revise{"revision", out.verified_pool.total(), out.verified_pool.total()};
  if (resume.revised_pool)
    out.revised_pool = *resume.revised_pool;
  else if (config.skip_revision || config.extractor.empty() || config.reviser.empty())
    out.revised_pool = out.verified_pool;
  else
  {
    LengthIdentification ident =
        identify_length_constraints(input, samples.checklist, config.extractor, gateway, config.parallelism_bound);
    out.findings.insert(out.findings.end(), ident.findings.begin(), ident.findings.end());
    RevisionResult rr = rule_augmented_revise(input, samples.checklist, out.verified_pool, ident.evidence,
                                              config.reviser, gateway, config.parallelism_bound);
    out.findings.insert(out.findings.end(), rr.findings.begin(), rr.findings.end());
    out.revised_pool = std::move(rr.pool);
  }
  revise.segments_out = out.revised_pool.total();
  out.report.stages.push_back(revise);

  // Stages 3 and 4: judgment voting, explanation MBR.
  StageCounts judge, explain;
  out.final_critique = select_final_critique(samples.input_id, out.revised_pool, config.threshold, &judge, &explain);
  out.report.stages.push_back(judge);
  out.report.stages.push_back(explain);
  return out;
}

} // namespace ifc
