#pragma once

#include "ifc/critique.hpp"
#include "ifc/filter.hpp"

#include <compare>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace ifc {

inline constexpr int kDefaultSelfSamples = 10;

// Non-negative fraction kept as (numerator, denominator) exactly as built;
// comparisons cross-multiply.
class Rational
{
public:
  Rational(int64_t numerator, int64_t denominator);

  int64_t numerator() const { return num_; }
  int64_t denominator() const { return den_; }
  double to_double() const { return static_cast<double>(num_) / static_cast<double>(den_); }

  bool operator==(const Rational& other) const { return num_ * other.den_ == other.num_ * den_; }
  std::strong_ordering operator<=>(const Rational& other) const
  {
    return num_ * other.den_ <=> other.num_ * den_;
  }

private:
  int64_t num_;
  int64_t den_;
};

struct SelfSampleSet
{
  std::string input_id;
  Checklist checklist;
  std::vector<Critique> samples; // indexed by sample_index
  FinalCritique expert;
};

struct BestExplanation
{
  std::string explanation;
  int sample_index = 0;
};

// Per constraint: MBR winner among self-sample explanations agreeing with the
// expert's final judgment; nullopt when the constraint was discarded or no
// sample agrees.
std::vector<std::optional<BestExplanation>> best_self_explanations(const SelfSampleSet& samples);

struct PreferencePair
{
  std::string input_id;
  std::string prompt_fingerprint;
  Critique chosen;
  Critique rejected;
  int rejected_sample_index = 0;
  std::set<int> diff_indices;
};

// Up to `max_pairs` pairs, fewest misaligned retained constraints first, ties
// by sample index. A candidate whose misaligned constraints lack a substitute
// explanation is dropped.
std::vector<PreferencePair> construct_pairs(const SelfSampleSet& samples, const std::string& prompt,
                                            size_t max_pairs = 1);

std::optional<PreferencePair> construct_pair(const SelfSampleSet& samples, const std::string& prompt);

struct RewardRecord
{
  std::string group_id;
  std::string input_id;
  std::string response_id;
  std::vector<int> judgments;
  Rational reward{0, 1};
};

// Followed count over checklist length, exactly.
RewardRecord compute_reward(const Critique& critique);

// (chosen, rejected) positions within the group: max and min reward, first
// holder wins ties. nullopt when all rewards are equal or the group has fewer
// than two members.
std::optional<std::pair<size_t, size_t>> select_dpo_pair(const std::vector<RewardRecord>& group);

struct RewardGroup
{
  std::string group_id;
  std::vector<Critique> critiques; // one per response, response_id = input_id
};

// Rewards in group order, tagged with the group id.
std::vector<RewardRecord> grpo_reward_batch(const std::vector<RewardGroup>& groups);

struct DatasetSplit
{
  double sft_fraction = 0.6;
  double ref_fraction = 0.4;
  uint64_t seed = 0;

  void validate() const;
};

struct SplitResult
{
  std::vector<std::string> sft;
  std::vector<std::string> ref;
};

// Seeded Fisher-Yates shuffle (mt19937_64, portable bounded draws), then a
// prefix of round(n * sft_fraction) goes to the SFT set.
SplitResult split_dataset(const std::vector<std::string>& ids, const DatasetSplit& split);

} // namespace ifc
