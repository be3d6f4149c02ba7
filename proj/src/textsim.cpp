#include "ifc/textsim.hpp"

#include "ifc/unicode.hpp"

#include <vector>

namespace ifc {

namespace {

struct Block
{
  size_t a_start = 0;
  size_t b_start = 0;
  size_t length = 0;
};

Block longest_common_block(std::u32string_view a, std::u32string_view b)
{
  Block best;
  std::vector<size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (size_t i = 1; i <= a.size(); ++i)
  {
    for (size_t j = 1; j <= b.size(); ++j)
    {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : 0;
      // Scanning end positions in ascending order means the first block of a
      // given length also has the earliest start in a, then in b.
      if (cur[j] > best.length)
        best = {i - cur[j], j - cur[j], cur[j]};
    }
    std::swap(prev, cur);
  }
  return best;
}

double ratio_of(std::u32string_view a, std::u32string_view b)
{
  if (a.empty() && b.empty())
    return 1.0;
  if (b < a)
    std::swap(a, b);
  return 2.0 * static_cast<double>(gestalt_matches(a, b)) / static_cast<double>(a.size() + b.size());
}

} // namespace

SimilarityScore::SimilarityScore(double value) : value_(value)
{
  if (!(value >= 0.0 && value <= 1.0))
    throw std::out_of_range("similarity must lie in [0, 1]");
}

size_t gestalt_matches(std::u32string_view a, std::u32string_view b)
{
  size_t matched = 0;
  std::vector<std::pair<std::u32string_view, std::u32string_view>> pending{{a, b}};
  while (!pending.empty())
  {
    auto [x, y] = pending.back();
    pending.pop_back();
    if (x.empty() || y.empty())
      continue;
    Block block = longest_common_block(x, y);
    if (block.length == 0)
      continue;
    matched += block.length;
    pending.emplace_back(x.substr(0, block.a_start), y.substr(0, block.b_start));
    pending.emplace_back(x.substr(block.a_start + block.length), y.substr(block.b_start + block.length));
  }
  return matched;
}

SimilarityScore gestalt_ratio(std::string_view a, std::string_view b)
{
  std::u32string ua = unicode::decode(unicode::nfc(a));
  std::u32string ub = unicode::decode(unicode::nfc(b));
  return SimilarityScore(ratio_of(ua, ub));
}

MbrChoice mbr_select(std::span<const std::string> hypotheses)
{
  if (hypotheses.empty())
    throw EmptyHypothesisSet();

  std::vector<std::u32string> decoded;
  decoded.reserve(hypotheses.size());
  for (const auto& h : hypotheses)
    decoded.push_back(unicode::decode(unicode::nfc(h)));

  const size_t n = decoded.size();
  MbrChoice best;
  bool have_best = false;
  for (size_t i = 0; i < n; ++i)
  {
    double sum = 0.0;
    for (size_t j = 0; j < n; ++j)
      sum += i == j ? 1.0 : ratio_of(decoded[j], decoded[i]);
    double mean = sum / static_cast<double>(n);
    if (!have_best || mean > best.mean_similarity)
    {
      best = {i, mean};
      have_best = true;
    }
  }
  return best;
}

} // namespace ifc
