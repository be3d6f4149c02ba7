#include "ifc/commands.hpp"

#include "ifc/digest.hpp"

#include <algorithm>
#include <iostream>
#include <map>
#include <set>

namespace ifc {

using records::json;

CommandContext::CommandContext(PipelineConfig config, std::unique_ptr<Gateway> gateway, std::ostream& log)
  : config_(std::move(config)), gateway_(std::move(gateway)), log_(log)
{
}

namespace {

// Inputs keyed (and therefore ordered) by input id.
std::map<std::string, records::Instruction> load_inputs(const Path& path)
{
  std::map<std::string, records::Instruction> out;
  for (const auto& r : records::read_jsonl(path))
  {
    auto in = records::instruction_from(r);
    if (!out.emplace(in.input_id, in).second)
      throw records::SchemaError("duplicate input_id " + in.input_id);
  }
  return out;
}

std::map<std::string, records::ChecklistRecord> load_checklists(const Path& path)
{
  std::map<std::string, records::ChecklistRecord> out;
  for (const auto& r : records::read_jsonl(path))
  {
    auto c = records::checklist_from(r);
    out[c.group_id] = c;
  }
  return out;
}

// Ok samples per input in sample order, plus their original sample indices.
struct UsableSamples
{
  std::vector<Critique> critiques;
  std::vector<int> original_index;
  size_t failed = 0;
};

std::map<std::string, UsableSamples> load_samples(const Path& path, std::optional<Provenance> expected)
{
  std::map<std::string, std::vector<records::CritiqueSampleRecord>> by_input;
  for (const auto& r : records::read_jsonl(path))
  {
    auto s = records::critique_sample_from(r);
    if (expected && s.provenance != *expected)
      throw records::SchemaError("input " + s.input_id + ": expected " + std::string(to_string(*expected)) +
                                 " critiques, found " + std::string(to_string(s.provenance)));
    by_input[s.input_id].push_back(std::move(s));
  }
  std::map<std::string, UsableSamples> out;
  for (auto& [id, list] : by_input)
  {
    std::stable_sort(list.begin(), list.end(),
                     [](const auto& a, const auto& b) { return a.sample_index < b.sample_index; });
    UsableSamples& u = out[id];
    for (auto& s : list)
    {
      if (!s.ok)
      {
        ++u.failed;
        continue;
      }
      u.critiques.push_back(std::move(s.critique));
      u.original_index.push_back(s.sample_index);
    }
  }
  return out;
}

const Checklist* usable_checklist(const std::map<std::string, records::ChecklistRecord>& checklists,
                                  const std::string& group_id)
{
  auto it = checklists.find(group_id);
  if (it == checklists.end() || !it->second.ok)
    return nullptr;
  return &it->second.checklist;
}

void require_role(const std::string& provider, const char* role)
{
  if (provider.empty())
    throw ConfigError(std::string("no provider configured for role ") + role);
}

CommandStatus status_for(size_t failed)
{
  return failed == 0 ? CommandStatus::Ok : CommandStatus::Partial;
}

void log_gateway(CommandContext& ctx, json& summary)
{
  summary["provider_calls"] = ctx.gateway().provider_calls();
  summary["cache_hits"] = ctx.gateway().cache().hits();
}

EvaluationInput evaluation_input(const records::Instruction& in, const Checklist& checklist)
{
  EvaluationInput e;
  e.id = in.input_id;
  e.instruction = in.instruction;
  e.response = in.response;
  e.checklist = checklist;
  e.metadata = in.metadata;
  return e;
}

} // namespace

Bindings critique_bindings(const records::Instruction& input, const Checklist& checklist)
{
  return {{"instruction", input.instruction}, {"checklist", render_checklist(checklist)}, {"response", input.response}};
}

// --- checklist --------------------------------------------------------------

CommandResult cmd_checklist(CommandContext& ctx, const Path& inputs_path, const Path& out)
{
  const auto& cfg = ctx.config();
  require_role(cfg.roles.checklist, "checklist");
  auto inputs = load_inputs(inputs_path);

  // One checklist per instruction group; the first input of a group supplies
  // the instruction text.
  std::map<std::string, std::string> groups;
  for (const auto& [id, in] : inputs)
  {
    auto [it, inserted] = groups.emplace(in.group_id, in.instruction);
    if (!inserted && it->second != in.instruction)
      throw records::SchemaError("group " + in.group_id + " mixes different instructions");
  }

  std::vector<CompletionRequest> requests;
  SamplingParams sampling = greedy(ctx.gateway().provider_config(cfg.roles.checklist).sampling);
  for (const auto& [group, instruction] : groups)
    requests.push_back({cfg.roles.checklist, TemplateId::ChecklistGen, {{"instruction", instruction}}, sampling, 0});
  auto slots = ctx.gateway().complete_batch(requests, cfg.concurrency);

  std::vector<json> lines;
  size_t failed = 0;
  size_t i = 0;
  for (const auto& [group, instruction] : groups)
  {
    const BatchSlot& slot = slots[i++];
    records::ChecklistRecord rec;
    rec.group_id = group;
    if (!slot.ok())
    {
      rec.ok = false;
      rec.error = std::string(to_string(slot.error->kind())) + ": " + slot.error->what();
    }
    else
    {
      try
      {
        rec.checklist = parse_checklist(slot.exchange->response.text);
      }
      catch (const ParseError& e)
      {
        rec.ok = false;
        rec.error = std::string(to_string(e.kind())) + ": " + e.what();
        rec.raw = slot.exchange->response.text;
      }
    }
    if (!rec.ok)
    {
      ++failed;
      ctx.log() << "checklist: group " << group << " failed: " << rec.error << '\n';
    }
    lines.push_back(records::to_record(rec));
  }
  records::write_jsonl(out, lines);

  CommandResult result;
  result.status = status_for(failed);
  result.summary = {{"command", "checklist"}, {"groups", groups.size()}, {"failed", failed}};
  log_gateway(ctx, result.summary);
  return result;
}

// --- critique ---------------------------------------------------------------

CommandResult cmd_critique(CommandContext& ctx, const Path& inputs_path, const Path& checklists_path,
                           Provenance provenance, int samples, const Path& out)
{
  const auto& cfg = ctx.config();
  if (provenance == Provenance::FinalAssembled)
    throw std::invalid_argument("final critiques come from the filter command");
  const std::string provider = provenance == Provenance::Expert ? cfg.roles.expert : cfg.roles.critic;
  require_role(provider, provenance == Provenance::Expert ? "expert" : "critic");
  if (samples <= 0)
    samples = provenance == Provenance::Expert     ? cfg.n_expert_samples
              : provenance == Provenance::SelfSample ? cfg.m_self_samples
                                                     : 1;

  auto inputs = load_inputs(inputs_path);
  auto checklists = load_checklists(checklists_path);
  const SamplingParams base = ctx.gateway().provider_config(provider).sampling;
  const SamplingParams sampling = provenance == Provenance::Predicted ? greedy(base) : base;

  struct Job
  {
    const records::Instruction* input;
    const Checklist* checklist;
    int sample_index;
    size_t slot;
  };
  std::vector<Job> jobs;
  std::vector<CompletionRequest> requests;
  for (const auto& [id, in] : inputs)
  {
    const Checklist* cl = usable_checklist(checklists, in.group_id);
    for (int s = 0; s < samples; ++s)
    {
      jobs.push_back({&in, cl, s, requests.size()});
      if (cl)
        requests.push_back({provider, TemplateId::CritiqueGen, critique_bindings(in, *cl), sampling, s});
    }
  }
  auto slots = ctx.gateway().complete_batch(requests, cfg.concurrency);

  std::vector<json> lines;
  size_t failed = 0;
  for (const auto& job : jobs)
  {
    records::CritiqueSampleRecord rec;
    rec.input_id = job.input->input_id;
    rec.sample_index = job.sample_index;
    rec.provenance = provenance;
    rec.provider = provider;
    if (!job.checklist)
    {
      rec.ok = false;
      rec.error = "no usable checklist for group " + job.input->group_id;
    }
    else
    {
      const BatchSlot& slot = slots[job.slot];
      if (!slot.ok())
      {
        rec.ok = false;
        rec.error = std::string(to_string(slot.error->kind())) + ": " + slot.error->what();
      }
      else
      {
        rec.raw = slot.exchange->response.text;
        try
        {
          rec.critique = parse_critique(rec.raw, *job.checklist);
          rec.critique.input_id = rec.input_id;
          rec.critique.provenance = provenance;
        }
        catch (const ParseError& e)
        {
          rec.ok = false;
          rec.error = std::string(to_string(e.kind())) + ": " + e.what();
        }
      }
    }
    if (!rec.ok)
    {
      ++failed;
      ctx.log() << "critique: input " << rec.input_id << " sample " << rec.sample_index << ": " << rec.error << '\n';
    }
    lines.push_back(records::to_record(rec));
  }
  records::write_jsonl(out, lines);

  CommandResult result;
  result.status = status_for(failed);
  result.summary = {{"command", "critique"},
                    {"provenance", to_string(provenance)},
                    {"records", lines.size()},
                    {"failed", failed}};
  log_gateway(ctx, result.summary);
  return result;
}

// --- filter -----------------------------------------------------------------

CommandResult cmd_filter(CommandContext& ctx, const FilterPaths& paths)
{
  const auto& cfg = ctx.config();
  FilterConfig fc;
  fc.threshold = cfg.confidence_threshold;
  fc.verifiers = cfg.roles.verifiers;
  fc.extractor = cfg.roles.extractor;
  fc.reviser = cfg.roles.reviser;
  fc.skip_verification = cfg.skip_stages.count("verification") > 0;
  fc.skip_revision = cfg.skip_stages.count("revision") > 0;
  fc.parallelism_bound = cfg.concurrency;
  if (!fc.skip_verification && fc.verifiers.empty())
    throw ConfigError("no verifiers configured (use --skip-stage verification to run without)");

  auto inputs = load_inputs(paths.inputs);
  auto checklists = load_checklists(paths.checklists);
  auto samples = load_samples(paths.samples, Provenance::Expert);

  const Path verdicts_path = paths.work_dir / "verdicts.jsonl";
  const Path pool_path = paths.work_dir / "revised_pool.jsonl";

  // Resume state, keyed by input, with sample indices as stored (original).
  std::map<std::string, std::vector<VerificationVerdict>> saved_verdicts;
  std::map<std::string, std::vector<json>> saved_pool;
  if (paths.resume)
  {
    if (std::filesystem::exists(verdicts_path))
      for (const auto& r : records::read_jsonl(verdicts_path))
      {
        auto v = records::verdict_from(r);
        saved_verdicts[v.input_id].push_back(std::move(v));
      }
    if (std::filesystem::exists(pool_path))
      for (const auto& r : records::read_jsonl(pool_path))
      {
        records::check_header(r, records::kind::PoolSegment);
        saved_pool[records::get_string(r, "input_id")].push_back(r);
      }
  }

  std::vector<json> finals, reports, verdict_lines, pool_lines;
  std::vector<StageCounts> totals;
  size_t failed = 0;
  size_t resumed = 0;
  for (const auto& [id, in] : inputs)
  {
    auto sit = samples.find(id);
    const Checklist* cl = usable_checklist(checklists, in.group_id);
    if (sit == samples.end() || sit->second.critiques.empty() || !cl)
    {
      ++failed;
      ctx.log() << "filter: input " << id << " skipped: " << (cl ? "no usable expert samples" : "no usable checklist")
                << '\n';
      continue;
    }
    const UsableSamples& usable = sit->second;
    std::map<int, int> to_position;
    for (size_t p = 0; p < usable.original_index.size(); ++p)
      to_position[usable.original_index[p]] = static_cast<int>(p);

    CritiqueSampleSet set{id, *cl, usable.critiques};
    FilterResume resume;
    if (auto v = saved_verdicts.find(id); v != saved_verdicts.end() && !fc.skip_verification)
    {
      std::vector<VerificationVerdict> verdicts;
      for (auto verdict : v->second)
        if (auto pos = to_position.find(verdict.sample_index); pos != to_position.end())
        {
          verdict.sample_index = pos->second;
          verdicts.push_back(std::move(verdict));
        }
      resume.verdicts = std::move(verdicts);
    }
    if (auto pool = saved_pool.find(id); pool != saved_pool.end())
    {
      SegmentPool sp;
      sp.entries.resize(cl->size());
      for (const auto& r : pool->second)
      {
        auto k = records::get_int(r, "constraint_index");
        auto pos = to_position.find(static_cast<int>(records::get_int(r, "sample_index")));
        if (k < 1 || static_cast<size_t>(k) > cl->size() || pos == to_position.end())
          throw records::SchemaError("input " + id + ": stale revised pool entry");
        PoolEntry e;
        e.explanation = records::get_string(r, "explanation");
        e.judgment = records::get_int(r, "judgment") == 1 ? Judgment::Followed : Judgment::NotFollowed;
        e.sample_index = pos->second;
        e.revised = r.value("revised", false);
        sp.entries[static_cast<size_t>(k - 1)].push_back(std::move(e));
      }
      resume.revised_pool = std::move(sp);
    }
    if (resume.verdicts || resume.revised_pool)
      ++resumed;

    FilterOutcome outcome;
    try
    {
      outcome = run_filtering_pipeline(evaluation_input(in, *cl), set, fc, ctx.gateway(), resume);
    }
    catch (const std::exception& e)
    {
      ++failed;
      ctx.log() << "filter: input " << id << " failed: " << e.what() << '\n';
      continue;
    }
    for (const auto& f : outcome.findings)
      ctx.log() << "filter: input " << id << " [" << f.stage << "] constraint " << f.constraint_index << ": "
                << f.message << '\n';

    auto original = [&usable](int position) { return usable.original_index.at(static_cast<size_t>(position)); };
    for (auto& c : outcome.final_critique.constraints)
      if (c.explanation_sample_index)
        c.explanation_sample_index = original(*c.explanation_sample_index);
    finals.push_back(records::to_record(outcome.final_critique));
    reports.push_back(records::stage_report_record(id, outcome.report));
    for (auto v : outcome.verdicts)
    {
      v.sample_index = original(v.sample_index);
      verdict_lines.push_back(records::to_record(v));
    }
    for (size_t k = 0; k < outcome.revised_pool.entries.size(); ++k)
      for (auto e : outcome.revised_pool.entries[k])
      {
        e.sample_index = original(e.sample_index);
        pool_lines.push_back(records::pool_segment_record(id, static_cast<int>(k) + 1, e));
      }

    if (totals.empty())
      totals = outcome.report.stages;
    else
      for (size_t s = 0; s < totals.size() && s < outcome.report.stages.size(); ++s)
      {
        const auto& x = outcome.report.stages[s];
        totals[s].segments_in += x.segments_in;
        totals[s].segments_out += x.segments_out;
        totals[s].discarded_by_tie += x.discarded_by_tie;
        totals[s].discarded_by_confidence += x.discarded_by_confidence;
        totals[s].discarded_by_empty_pool += x.discarded_by_empty_pool;
      }
  }

  records::write_jsonl(paths.out, finals);
  records::write_jsonl(paths.report, reports);
  records::write_jsonl(verdicts_path, verdict_lines);
  records::write_jsonl(pool_path, pool_lines);

  CommandResult result;
  result.status = status_for(failed);
  json stages = json::array();
  for (const auto& s : totals)
  {
    stages.push_back({{"stage", s.stage}, {"in", s.segments_in}, {"out", s.segments_out}});
    ctx.log() << "filter: " << s.stage << " " << s.segments_in << " -> " << s.segments_out << '\n';
  }
  result.summary = {{"command", "filter"},
                    {"inputs", inputs.size()},
                    {"failed", failed},
                    {"resumed", resumed},
                    {"stages", stages}};
  log_gateway(ctx, result.summary);
  return result;
}

// --- prefpairs --------------------------------------------------------------

CommandResult cmd_prefpairs(CommandContext& ctx, const Path& inputs_path, const Path& checklists_path,
                            const Path& self_samples_path, const Path& finals_path, const Path& out,
                            const Path& split_out)
{
  const auto& cfg = ctx.config();
  auto inputs = load_inputs(inputs_path);
  auto checklists = load_checklists(checklists_path);
  auto samples = load_samples(self_samples_path, Provenance::SelfSample);
  std::map<std::string, FinalCritique> finals;
  for (const auto& r : records::read_jsonl(finals_path))
  {
    auto f = records::final_critique_from(r);
    finals[f.input_id] = std::move(f);
  }

  std::vector<std::string> ids;
  for (const auto& [id, f] : finals)
    if (inputs.count(id))
      ids.push_back(id);
  SplitResult split = split_dataset(ids, cfg.split);

  if (!split_out.empty())
  {
    std::map<std::string, std::string> membership;
    for (const auto& id : split.sft)
      membership[id] = "sft";
    for (const auto& id : split.ref)
      membership[id] = "ref";
    std::vector<json> lines;
    for (const auto& [id, set] : membership)
    {
      json j = records::header(records::kind::Split);
      j["input_id"] = id;
      j["set"] = set;
      lines.push_back(j);
    }
    records::write_jsonl(split_out, lines);
  }

  std::vector<std::string> ref = split.ref;
  std::sort(ref.begin(), ref.end());
  std::vector<json> lines;
  size_t failed = 0, without_pair = 0;
  for (const auto& id : ref)
  {
    const auto& in = inputs.at(id);
    const Checklist* cl = usable_checklist(checklists, in.group_id);
    auto sit = samples.find(id);
    if (!cl || sit == samples.end() || sit->second.critiques.empty())
    {
      ++failed;
      ctx.log() << "prefpairs: input " << id << " has no usable self samples or checklist\n";
      continue;
    }
    SelfSampleSet set{id, *cl, sit->second.critiques, finals.at(id)};
    const std::string prompt =
        ctx.gateway().templates().get(TemplateId::CritiqueGen).render(critique_bindings(in, *cl));
    std::vector<PreferencePair> pairs;
    try
    {
      pairs = construct_pairs(set, prompt, static_cast<size_t>(cfg.max_pairs_per_input));
    }
    catch (const std::invalid_argument& e)
    {
      ++failed;
      ctx.log() << "prefpairs: " << e.what() << '\n';
      continue;
    }
    if (pairs.empty())
      ++without_pair;
    for (auto& p : pairs)
    {
      p.rejected_sample_index = sit->second.original_index.at(static_cast<size_t>(p.rejected_sample_index));
      lines.push_back(records::to_record(p));
    }
  }
  records::write_jsonl(out, lines);

  CommandResult result;
  result.status = status_for(failed);
  result.summary = {{"command", "prefpairs"},
                    {"sft", split.sft.size()},
                    {"ref", split.ref.size()},
                    {"pairs", lines.size()},
                    {"without_pair", without_pair},
                    {"failed", failed}};
  return result;
}

// --- reward / dpo-select ----------------------------------------------------

CommandResult cmd_reward(CommandContext& ctx, const Path& inputs_path, const Path& critiques_path, const Path& out)
{
  auto inputs = load_inputs(inputs_path);
  auto samples = load_samples(critiques_path, std::nullopt);

  // group -> rewards in input id order
  std::map<std::string, std::vector<RewardRecord>> groups;
  size_t failed = 0;
  for (const auto& [id, in] : inputs)
  {
    auto sit = samples.find(id);
    if (sit == samples.end() || sit->second.critiques.empty())
    {
      ++failed;
      ctx.log() << "reward: input " << id << " has no usable critique\n";
      continue;
    }
    if (sit->second.critiques.size() > 1)
      ctx.log() << "reward: input " << id << " has several critiques; using sample "
                << sit->second.original_index.front() << '\n';
    RewardGroup g{in.group_id, {sit->second.critiques.front()}};
    for (auto& r : grpo_reward_batch({g}))
      groups[in.group_id].push_back(std::move(r));
  }
  for (const auto& [id, s] : samples)
    if (!inputs.count(id))
      throw records::SchemaError("critique for unknown input " + id);

  std::vector<json> lines;
  for (const auto& [group, rewards] : groups)
  {
    if (static_cast<int>(rewards.size()) > ctx.config().grpo_rollouts)
      ctx.log() << "reward: group " << group << " has more responses than grpo_rollouts\n";
    for (const auto& r : rewards)
      lines.push_back(records::to_record(r));
  }
  records::write_jsonl(out, lines);

  CommandResult result;
  result.status = status_for(failed);
  result.summary = {{"command", "reward"}, {"groups", groups.size()}, {"rewards", lines.size()}, {"failed", failed}};
  return result;
}

CommandResult cmd_dpo_select(CommandContext& ctx, const Path& rewards_path, const Path& out)
{
  std::map<std::string, std::vector<RewardRecord>> groups;
  for (const auto& r : records::read_jsonl(rewards_path))
  {
    auto rec = records::reward_from(r);
    groups[rec.group_id].push_back(std::move(rec));
  }

  const auto k = static_cast<size_t>(ctx.config().dpo_group_size);
  std::vector<json> lines;
  size_t skipped = 0;
  for (auto& [group, members] : groups)
  {
    // The first K responses of a group are the candidates.
    if (members.size() > k)
    {
      ctx.log() << "dpo-select: group " << group << " truncated to " << k << " responses\n";
      members.resize(k);
    }
    auto pick = select_dpo_pair(members);
    if (!pick)
    {
      ++skipped;
      continue;
    }
    const auto& chosen = members[pick->first];
    const auto& rejected = members[pick->second];
    json j = records::header(records::kind::DpoPair);
    j["group_id"] = group;
    j["chosen_response_id"] = chosen.response_id;
    j["rejected_response_id"] = rejected.response_id;
    j["chosen_reward"] = records::rational_json(chosen.reward);
    j["rejected_reward"] = records::rational_json(rejected.reward);
    lines.push_back(j);
  }
  records::write_jsonl(out, lines);
  ctx.log() << "dpo-select: " << lines.size() << " pairs, " << skipped << " groups skipped (equal rewards)\n";

  CommandResult result;
  result.summary = {{"command", "dpo-select"}, {"pairs", lines.size()}, {"skipped_equal_reward", skipped}};
  return result;
}

// --- metaeval / report ------------------------------------------------------

CommandResult cmd_metaeval(CommandContext& ctx, const Path& inputs_path, const Path& predictions_path,
                           const Path& gold_path, const Path& out)
{
  auto inputs = load_inputs(inputs_path);
  auto predictions = load_samples(predictions_path, Provenance::Predicted);
  GoldLabelSet gold;
  for (const auto& r : records::read_jsonl(gold_path))
  {
    auto g = records::gold_label_from(r);
    gold.add(g.input_id, g.constraint_index, g.label, g.source);
  }

  struct Bench
  {
    std::vector<Critique> critiques;
    std::map<std::string, std::vector<std::string>> groups; // group -> scored input ids
  };
  std::map<std::string, Bench> benches;
  std::map<std::string, Rational> rewards;
  size_t failed = 0;
  for (const auto& [id, in] : inputs)
  {
    auto pit = predictions.find(id);
    if (pit == predictions.end() || pit->second.critiques.empty())
    {
      ++failed;
      ctx.log() << "metaeval: input " << id << " has no usable prediction\n";
      continue;
    }
    const Critique& c = pit->second.critiques.front();
    Bench& b = benches[in.benchmark];
    b.critiques.push_back(c);
    b.groups[in.group_id].push_back(id);
    rewards.emplace(id, compute_reward(c).reward);
  }

  std::vector<json> lines;
  for (auto& [name, b] : benches)
  {
    BenchmarkMetrics m;
    m.benchmark = name;
    m.confusion = score_constraints(b.critiques, gold);
    m.f1 = f1_report(m.confusion);
    std::vector<ResponsePair> pairs;
    for (const auto& [group, ids] : b.groups)
      for (size_t i = 0; i < ids.size(); ++i)
        for (size_t j = i + 1; j < ids.size(); ++j)
          pairs.push_back({group, ids[i], ids[j]});
    if (!pairs.empty())
    {
      auto samples = build_pairwise(pairs, gold);
      m.pairwise = pairwise_agreement(samples, rewards);
    }
    lines.push_back(records::to_record(m));
  }
  records::write_jsonl(out, lines);

  CommandResult result;
  result.status = status_for(failed);
  result.summary = {{"command", "metaeval"}, {"benchmarks", lines.size()}, {"failed", failed}};
  return result;
}

CommandResult cmd_report(CommandContext&, const Path& metrics_path, const Path& out)
{
  std::vector<BenchmarkMetrics> metrics;
  for (const auto& r : records::read_jsonl(metrics_path))
    metrics.push_back(records::metrics_from(r));
  const std::string text = render_report(metrics);
  if (out.empty() || out == "-")
    std::cout << text << std::flush;
  else
    records::write_text(out, text);

  CommandResult result;
  result.summary = {{"command", "report"}, {"benchmarks", metrics.size()}};
  return result;
}

} // namespace ifc
