#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

namespace ifc {

// Lexical similarity in [0, 1].
class SimilarityScore
{
public:
  explicit SimilarityScore(double value);
  double value() const { return value_; }
  auto operator<=>(const SimilarityScore&) const = default;

private:
  double value_;
};

// Ratcliff-Obershelp matched-character count between two code point
// sequences: take the longest common contiguous block (earliest start in `a`,
// then earliest start in `b`), then recurse on both remainders.
size_t gestalt_matches(std::u32string_view a, std::u32string_view b);

// 2*M / (|a| + |b|) over NFC-normalized code points; 1 when both are empty.
// The operands are ordered by code point before matching so the measure is
// symmetric.
SimilarityScore gestalt_ratio(std::string_view a, std::string_view b);

class EmptyHypothesisSet : public std::invalid_argument
{
public:
  EmptyHypothesisSet() : std::invalid_argument("hypothesis set is empty") {}
};

struct MbrChoice
{
  size_t index = 0;
  double mean_similarity = 0.0;
};

// Index maximizing the mean similarity to every hypothesis (self-term
// included); lowest index wins ties.
MbrChoice mbr_select(std::span<const std::string> hypotheses);

} // namespace ifc
