#pragma once

#include "ifc/config.hpp"
#include "ifc/records.hpp"

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>

namespace ifc {

enum class CommandStatus
{
  Ok = 0,
  Fatal = 1,
  Partial = 2, // some records failed; the rest were written
};

struct CommandResult
{
  CommandStatus status = CommandStatus::Ok;
  records::json summary = records::json::object();
};

// Shared state of one CLI invocation: the resolved config and the gateway
// built from it. Diagnostics go to `log`.
class CommandContext
{
public:
  CommandContext(PipelineConfig config, std::unique_ptr<Gateway> gateway, std::ostream& log);

  const PipelineConfig& config() const { return config_; }
  Gateway& gateway() { return *gateway_; }
  std::ostream& log() { return log_; }

private:
  PipelineConfig config_;
  std::unique_ptr<Gateway> gateway_;
  std::ostream& log_;
};

using Path = std::filesystem::path;

CommandResult cmd_checklist(CommandContext& ctx, const Path& inputs, const Path& out);

// samples <= 0 picks the config default for the provenance (N expert, M self,
// 1 predicted). Predicted critiques use greedy decoding.
CommandResult cmd_critique(CommandContext& ctx, const Path& inputs, const Path& checklists, Provenance provenance,
                           int samples, const Path& out);

struct FilterPaths
{
  Path inputs;
  Path checklists;
  Path samples;
  Path out;
  Path report;
  Path work_dir; // verdicts.jsonl and revised_pool.jsonl
  bool resume = false;
};

CommandResult cmd_filter(CommandContext& ctx, const FilterPaths& paths);

// Pairs are built for the reference share of the seeded split only.
CommandResult cmd_prefpairs(CommandContext& ctx, const Path& inputs, const Path& checklists, const Path& self_samples,
                            const Path& final_critiques, const Path& out, const Path& split_out = {});

// One reward per input from its first usable critique, grouped by instruction.
CommandResult cmd_reward(CommandContext& ctx, const Path& inputs, const Path& critiques, const Path& out);

CommandResult cmd_dpo_select(CommandContext& ctx, const Path& rewards, const Path& out);

CommandResult cmd_metaeval(CommandContext& ctx, const Path& inputs, const Path& predictions, const Path& gold,
                           const Path& out);

// `out` of "-" writes to stdout.
CommandResult cmd_report(CommandContext& ctx, const Path& metrics, const Path& out);

// Bindings of the critique generation prompt for one input; shared by the
// critique command and the pair fingerprint.
Bindings critique_bindings(const records::Instruction& input, const Checklist& checklist);

} // namespace ifc
