#pragma once

#include "ifc/critique.hpp"
#include "ifc/preference.hpp"

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace ifc {

enum class GoldSource
{
  Human,
  VerificationCode,
};

std::string_view to_string(GoldSource s);
GoldSource gold_source_from_string(std::string_view s);

class GoldLabelSet
{
public:
  void add(const std::string& input_id, int constraint_index, Judgment label,
           GoldSource source = GoldSource::Human);

  std::optional<Judgment> find(const std::string& input_id, int constraint_index) const;

  // Labels of one input in constraint order; empty when unknown.
  std::vector<Judgment> labels_for(const std::string& input_id) const;

  size_t size() const { return labels_.size(); }

private:
  std::map<std::pair<std::string, int>, std::pair<Judgment, GoldSource>> labels_;
};

class MissingGoldLabel : public std::invalid_argument
{
  using std::invalid_argument::invalid_argument;
};

struct ConfusionMatrix
{
  uint64_t tp = 0;
  uint64_t fp = 0;
  uint64_t fn = 0;
  uint64_t tn = 0;

  uint64_t total() const { return tp + fp + fn + tn; }
  ConfusionMatrix& operator+=(const ConfusionMatrix& o);
  bool operator==(const ConfusionMatrix&) const = default;
};

// Positive class = Followed. Only Predicted-provenance critiques are scored.
ConfusionMatrix score_constraints(const std::vector<Critique>& predictions, const GoldLabelSet& gold);

struct F1Report
{
  double positive_f1 = 0.0;
  double negative_f1 = 0.0;
  double average_f1 = 0.0;
  bool positive_undefined = false; // zero denominator, reported as 0
  bool negative_undefined = false;
};

F1Report f1_report(const ConfusionMatrix& cm);

enum class Side
{
  A,
  B,
  Tie,
};

struct ResponsePair
{
  std::string group_id;
  std::string response_a;
  std::string response_b;
};

struct PairwiseSample
{
  std::string group_id;
  std::string response_a;
  std::string response_b;
  Side gold_winner = Side::A;
  Side predicted = Side::Tie;
};

// Keeps pairs where exactly one response follows every gold-labeled
// constraint; that response is the gold winner.
std::vector<PairwiseSample> build_pairwise(const std::vector<ResponsePair>& pairs, const GoldLabelSet& gold);

struct AgreementReport
{
  std::optional<double> agreement_rate; // undefined when every sample ties
  size_t agree = 0;
  size_t disagree = 0;
  size_t ties_removed = 0;
  size_t total = 0;
};

AgreementReport pairwise_agreement(std::vector<PairwiseSample>& samples,
                                   const std::map<std::string, Rational>& critic_rewards);

struct BenchmarkMetrics
{
  std::string benchmark;
  ConfusionMatrix confusion;
  F1Report f1;
  std::optional<AgreementReport> pairwise;
};

// Mean of per-benchmark average F1 (and of defined agreement rates).
struct MetricsSummary
{
  double average_f1 = 0.0;
  std::optional<double> agreement_rate;
};

MetricsSummary summarize(const std::vector<BenchmarkMetrics>& benchmarks);

// Aligned text tables: per-benchmark Positive/Negative/Average F1 followed by
// the mean row; then pairwise agreement with ties removed.
std::string render_report(const std::vector<BenchmarkMetrics>& benchmarks);

} // namespace ifc
