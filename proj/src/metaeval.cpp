#include "ifc/metaeval.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

namespace ifc {

std::string_view to_string(GoldSource s)
{
  return s == GoldSource::Human ? "human" : "verification_code";
}

GoldSource gold_source_from_string(std::string_view s)
{
  if (s == "human")
    return GoldSource::Human;
  if (s == "verification_code")
    return GoldSource::VerificationCode;
  throw std::invalid_argument("unknown gold label source: " + std::string(s));
}

void GoldLabelSet::add(const std::string& input_id, int constraint_index, Judgment label, GoldSource source)
{
  if (constraint_index < 1)
    throw std::invalid_argument("constraint index must be >= 1");
  labels_[{input_id, constraint_index}] = {label, source};
}

std::optional<Judgment> GoldLabelSet::find(const std::string& input_id, int constraint_index) const
{
  auto it = labels_.find({input_id, constraint_index});
  if (it == labels_.end())
    return std::nullopt;
  return it->second.first;
}

std::vector<Judgment> GoldLabelSet::labels_for(const std::string& input_id) const
{
  std::vector<Judgment> out;
  for (auto it = labels_.lower_bound({input_id, 0}); it != labels_.end() && it->first.first == input_id; ++it)
    out.push_back(it->second.first);
  return out;
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& o)
{
  tp += o.tp;
  fp += o.fp;
  fn += o.fn;
  tn += o.tn;
  return *this;
}

ConfusionMatrix score_constraints(const std::vector<Critique>& predictions, const GoldLabelSet& gold)
{
  ConfusionMatrix cm;
  for (const auto& critique : predictions)
  {
    if (critique.provenance != Provenance::Predicted)
      throw std::invalid_argument("input " + critique.input_id + ": only predicted critiques can be scored");
    for (size_t i = 0; i < critique.segments.size(); ++i)
    {
      const int k = static_cast<int>(i) + 1;
      auto label = gold.find(critique.input_id, k);
      if (!label)
        throw MissingGoldLabel("no gold label for input " + critique.input_id + " constraint " + std::to_string(k));
      const bool predicted = critique.segments[i].judgment == Judgment::Followed;
      const bool actual = *label == Judgment::Followed;
      if (predicted && actual)
        ++cm.tp;
      else if (predicted)
        ++cm.fp;
      else if (actual)
        ++cm.fn;
      else
        ++cm.tn;
    }
  }
  return cm;
}

F1Report f1_report(const ConfusionMatrix& cm)
{
  F1Report r;
  const uint64_t pos_den = 2 * cm.tp + cm.fp + cm.fn;
  const uint64_t neg_den = 2 * cm.tn + cm.fn + cm.fp;
  r.positive_undefined = pos_den == 0;
  r.negative_undefined = neg_den == 0;
  r.positive_f1 = pos_den == 0 ? 0.0 : static_cast<double>(2 * cm.tp) / static_cast<double>(pos_den);
  r.negative_f1 = neg_den == 0 ? 0.0 : static_cast<double>(2 * cm.tn) / static_cast<double>(neg_den);
  r.average_f1 = (r.positive_f1 + r.negative_f1) / 2.0;
  return r;
}

namespace {

bool follows_all(const GoldLabelSet& gold, const std::string& input_id, bool& known)
{
  auto labels = gold.labels_for(input_id);
  known = !labels.empty();
  return std::all_of(labels.begin(), labels.end(), [](Judgment j) { return j == Judgment::Followed; });
}

} // namespace

std::vector<PairwiseSample> build_pairwise(const std::vector<ResponsePair>& pairs, const GoldLabelSet& gold)
{
  std::vector<PairwiseSample> out;
  for (const auto& p : pairs)
  {
    bool known_a = false, known_b = false;
    const bool a = follows_all(gold, p.response_a, known_a);
    const bool b = follows_all(gold, p.response_b, known_b);
    if (!known_a || !known_b || a == b)
      continue;
    out.push_back({p.group_id, p.response_a, p.response_b, a ? Side::A : Side::B, Side::Tie});
  }
  return out;
}

AgreementReport pairwise_agreement(std::vector<PairwiseSample>& samples,
                                   const std::map<std::string, Rational>& critic_rewards)
{
  AgreementReport r;
  r.total = samples.size();
  for (auto& s : samples)
  {
    auto ra = critic_rewards.find(s.response_a);
    auto rb = critic_rewards.find(s.response_b);
    if (ra == critic_rewards.end() || rb == critic_rewards.end())
      throw std::invalid_argument("group " + s.group_id + ": missing critic reward");
    if (ra->second == rb->second)
    {
      s.predicted = Side::Tie;
      ++r.ties_removed;
      continue;
    }
    s.predicted = ra->second > rb->second ? Side::A : Side::B;
    if (s.predicted == s.gold_winner)
      ++r.agree;
    else
      ++r.disagree;
  }
  if (r.agree + r.disagree > 0)
    r.agreement_rate = static_cast<double>(r.agree) / static_cast<double>(r.agree + r.disagree);
  return r;
}

MetricsSummary summarize(const std::vector<BenchmarkMetrics>& benchmarks)
{
  MetricsSummary s;
  if (benchmarks.empty())
    return s;
  double f1_sum = 0.0;
  double rate_sum = 0.0;
  size_t rates = 0;
  for (const auto& b : benchmarks)
  {
    f1_sum += b.f1.average_f1;
    if (b.pairwise && b.pairwise->agreement_rate)
    {
      rate_sum += *b.pairwise->agreement_rate;
      ++rates;
    }
  }
  s.average_f1 = f1_sum / static_cast<double>(benchmarks.size());
  if (rates > 0)
    s.agreement_rate = rate_sum / static_cast<double>(rates);
  return s;
}

namespace {

std::string fixed3(double v)
{
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

std::string table(const std::vector<std::vector<std::string>>& rows)
{
  std::vector<size_t> widths;
  for (const auto& row : rows)
    for (size_t c = 0; c < row.size(); ++c)
    {
      if (widths.size() <= c)
        widths.push_back(0);
      widths[c] = std::max(widths[c], row[c].size());
    }
  std::ostringstream out;
  for (size_t r = 0; r < rows.size(); ++r)
  {
    std::string line;
    for (size_t c = 0; c < rows[r].size(); ++c)
    {
      if (c > 0)
        line += "  ";
      // first column left-aligned, numbers right-aligned
      const std::string pad(widths[c] - rows[r][c].size(), ' ');
      line += c == 0 ? rows[r][c] + pad : pad + rows[r][c];
    }
    while (!line.empty() && line.back() == ' ')
      line.pop_back();
    out << line << '\n';
    if (r == 0)
    {
      size_t width = 0;
      for (size_t w : widths)
        width += w;
      out << std::string(width + 2 * (widths.size() - 1), '-') << '\n';
    }
  }
  return out.str();
}

} // namespace

std::string render_report(const std::vector<BenchmarkMetrics>& benchmarks)
{
  const MetricsSummary summary = summarize(benchmarks);

  std::vector<std::vector<std::string>> f1_rows{{"Benchmark", "Positive F1", "Negative F1", "Average F1", "Constraints"}};
  for (const auto& b : benchmarks)
  {
    std::string pos = fixed3(b.f1.positive_f1) + (b.f1.positive_undefined ? "*" : "");
    std::string neg = fixed3(b.f1.negative_f1) + (b.f1.negative_undefined ? "*" : "");
    f1_rows.push_back({b.benchmark, pos, neg, fixed3(b.f1.average_f1), std::to_string(b.confusion.total())});
  }
  f1_rows.push_back({"Avg.", "", "", fixed3(summary.average_f1), ""});

  std::string out = "Constraint-level verification\n" + table(f1_rows);
  bool flagged = std::any_of(benchmarks.begin(), benchmarks.end(), [](const BenchmarkMetrics& b) {
    return b.f1.positive_undefined || b.f1.negative_undefined;
  });
  if (flagged)
    out += "* zero denominator, reported as 0\n";

  std::vector<std::vector<std::string>> pw_rows{{"Benchmark", "Agreement", "Agree", "Disagree", "Ties removed", "Pairs"}};
  bool any_pairwise = false;
  for (const auto& b : benchmarks)
  {
    if (!b.pairwise)
      continue;
    any_pairwise = true;
    const auto& p = *b.pairwise;
    pw_rows.push_back({b.benchmark, p.agreement_rate ? fixed3(*p.agreement_rate) : "n/a", std::to_string(p.agree),
                       std::to_string(p.disagree), std::to_string(p.ties_removed), std::to_string(p.total)});
  }
  if (any_pairwise)
  {
    pw_rows.push_back({"Avg.", summary.agreement_rate ? fixed3(*summary.agreement_rate) : "n/a", "", "", "", ""});
    out += "\nPairwise agreement\n" + table(pw_rows);
  }
  return out;
}

} // namespace ifc
