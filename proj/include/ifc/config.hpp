#pragma once

#include "ifc/gateway.hpp"
#include "ifc/preference.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace ifc {

inline constexpr int kDefaultMaxPairsPerInput = 1;
inline constexpr int kDefaultDpoGroupSize = 10;
inline constexpr int kDefaultGrpoRollouts = 32;

class ConfigError : public std::runtime_error
{
  using std::runtime_error::runtime_error;
};

struct Roles
{
  std::string checklist;
  std::string expert;
  std::string critic;
  std::vector<std::string> verifiers;
  std::string extractor;
  std::string reviser;
};

struct PipelineConfig
{
  int n_expert_samples = kDefaultExpertSamples;
  int m_self_samples = kDefaultSelfSamples;
  double confidence_threshold = kDefaultConfidenceThreshold;
  DatasetSplit split;
  int max_pairs_per_input = kDefaultMaxPairsPerInput;
  int dpo_group_size = kDefaultDpoGroupSize;
  int grpo_rollouts = kDefaultGrpoRollouts;
  uint64_t seed = 0;
  std::optional<std::filesystem::path> cache_dir;
  size_t concurrency = 8;
  std::vector<ProviderConfig> providers;
  Roles roles;
  std::optional<std::filesystem::path> prompt_dir;
  std::set<std::string> skip_stages; // "verification", "revision"

  // Range checks and role/provider cross references. Throws ConfigError.
  void validate() const;

  // Points every role at `provider` (which must exist).
  void force_provider(const std::string& provider);
};

// Reads a JSON config. Relative paths inside it (cache_dir, prompt_dir,
// fixture_dir) resolve against the file's directory. Unknown keys are
// rejected so typos surface early.
PipelineConfig load_config(const std::filesystem::path& path);

PipelineConfig parse_config(const std::string& text, const std::filesystem::path& base_dir);

// Gateway wired with the config's templates, cache and providers.
std::unique_ptr<Gateway> make_gateway(const PipelineConfig& config);

} // namespace ifc
