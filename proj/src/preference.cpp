#include "ifc/preference.hpp"

#include "ifc/digest.hpp"
#include "ifc/textsim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace ifc {

Rational::Rational(int64_t numerator, int64_t denominator) : num_(numerator), den_(denominator)
{
  if (denominator <= 0 || numerator < 0)
    throw std::invalid_argument("rational needs a non-negative numerator and positive denominator");
}

std::vector<std::optional<BestExplanation>> best_self_explanations(const SelfSampleSet& samples)
{
  const size_t n = samples.checklist.size();
  std::vector<std::optional<BestExplanation>> best(n);
  for (size_t k = 0; k < n; ++k)
  {
    if (k >= samples.expert.constraints.size() || !samples.expert.constraints[k].judgment)
      continue;
    const Judgment target = *samples.expert.constraints[k].judgment;
    std::vector<std::string> hypotheses;
    std::vector<int> sources;
    for (size_t s = 0; s < samples.samples.size(); ++s)
    {
      const CritiqueSegment& seg = samples.samples[s].segments.at(k);
      if (seg.judgment == target)
      {
        hypotheses.push_back(seg.explanation);
        sources.push_back(static_cast<int>(s));
      }
    }
    if (hypotheses.empty())
      continue;
    MbrChoice choice = mbr_select(hypotheses);
    best[k] = BestExplanation{hypotheses[choice.index], sources[choice.index]};
  }
  return best;
}

std::vector<PreferencePair> construct_pairs(const SelfSampleSet& samples, const std::string& prompt,
                                            size_t max_pairs)
{
  const size_t n = samples.checklist.size();
  if (samples.expert.constraints.size() != n)
    throw std::invalid_argument("input " + samples.input_id + ": expert critique does not match checklist");

  auto best = best_self_explanations(samples);

  struct Candidate
  {
    size_t sample;
    std::set<int> misaligned;
  };
  std::vector<Candidate> candidates;
  for (size_t s = 0; s < samples.samples.size(); ++s)
  {
    const Critique& critique = samples.samples[s];
    if (!validate_alignment(critique, samples.checklist).empty())
      throw std::invalid_argument("input " + samples.input_id + ": self sample " + std::to_string(s) +
                                  " does not align with the checklist");
    Candidate cand{s, {}};
    bool substitutable = true;
    for (size_t k = 0; k < n; ++k)
    {
      const auto& expert = samples.expert.constraints[k];
      if (!expert.judgment || critique.segments[k].judgment == *expert.judgment)
        continue;
      cand.misaligned.insert(static_cast<int>(k) + 1);
      substitutable = substitutable && best[k].has_value();
    }
    if (!cand.misaligned.empty() && substitutable)
      candidates.push_back(std::move(cand));
  }

  std::stable_sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    return a.misaligned.size() < b.misaligned.size();
  });
  if (candidates.size() > max_pairs)
    candidates.resize(max_pairs);

  const std::string fingerprint = sha256_hex(prompt);
  std::vector<PreferencePair> pairs;
  for (const auto& cand : candidates)
  {
    PreferencePair pair;
    pair.input_id = samples.input_id;
    pair.prompt_fingerprint = fingerprint;
    pair.rejected = samples.samples[cand.sample];
    pair.rejected.input_id = samples.input_id;
    pair.rejected.provenance = Provenance::SelfSample;
    pair.rejected_sample_index = static_cast<int>(cand.sample);
    pair.diff_indices = cand.misaligned;
    pair.chosen = pair.rejected;
    pair.chosen.provenance = Provenance::FinalAssembled;
    for (int k : cand.misaligned)
    {
      CritiqueSegment& seg = pair.chosen.segments[static_cast<size_t>(k - 1)];
      seg.explanation = best[static_cast<size_t>(k - 1)]->explanation;
      seg.judgment = *samples.expert.constraints[static_cast<size_t>(k - 1)].judgment;
    }
    pairs.push_back(std::move(pair));
  }
  return pairs;
}

std::optional<PreferencePair> construct_pair(const SelfSampleSet& samples, const std::string& prompt)
{
  auto pairs = construct_pairs(samples, prompt, 1);
  if (pairs.empty())
    return std::nullopt;
  return std::move(pairs.front());
}

RewardRecord compute_reward(const Critique& critique)
{
  if (critique.segments.empty())
    throw std::invalid_argument("reward needs at least one judged constraint");
  RewardRecord record;
  record.input_id = critique.input_id;
  record.response_id = critique.input_id;
  int followed = 0;
  for (const auto& seg : critique.segments)
  {
    int j = seg.judgment == Judgment::Followed ? 1 : 0;
    record.judgments.push_back(j);
    followed += j;
  }
  record.reward = Rational(followed, static_cast<int64_t>(critique.segments.size()));
  return record;
}

std::optional<std::pair<size_t, size_t>> select_dpo_pair(const std::vector<RewardRecord>& group)
{
  if (group.size() < 2)
    return std::nullopt;
  size_t best = 0, worst = 0;
  for (size_t i = 1; i < group.size(); ++i)
  {
    if (group[i].reward > group[best].reward)
      best = i;
    if (group[i].reward < group[worst].reward)
      worst = i;
  }
  if (group[best].reward == group[worst].reward)
    return std::nullopt;
  return std::pair{best, worst};
}

std::vector<RewardRecord> grpo_reward_batch(const std::vector<RewardGroup>& groups)
{
  std::vector<RewardRecord> table;
  for (const auto& group : groups)
    for (const auto& critique : group.critiques)
    {
      RewardRecord record = compute_reward(critique);
      record.group_id = group.group_id;
      table.push_back(std::move(record));
    }
  return table;
}

void DatasetSplit::validate() const
{
  if (sft_fraction < 0.0 || ref_fraction < 0.0 || std::abs(sft_fraction + ref_fraction - 1.0) > 1e-9)
    throw std::invalid_argument("split fractions must be non-negative and sum to 1");
}

SplitResult split_dataset(const std::vector<std::string>& ids, const DatasetSplit& split)
{
  split.validate();
  std::vector<std::string> order = ids;
  std::mt19937_64 rng(split.seed);
  // Bounded draws by rejection keep the sequence identical across standard
  // libraries (std::uniform_int_distribution is implementation-defined).
  auto draw = [&rng](uint64_t bound) {
    const uint64_t limit = std::numeric_limits<uint64_t>::max() - std::numeric_limits<uint64_t>::max() % bound;
    uint64_t x;
    do
      x = rng();
    while (x >= limit);
    return x % bound;
  };
  for (size_t i = order.size(); i > 1; --i)
    std::swap(order[i - 1], order[draw(i)]);

  const auto n_sft = static_cast<size_t>(std::llround(static_cast<double>(order.size()) * split.sft_fraction));
  SplitResult result;
  result.sft.assign(order.begin(), order.begin() + static_cast<long>(n_sft));
  result.ref.assign(order.begin() + static_cast<long>(n_sft), order.end());
  return result;
}

} // namespace ifc
