// Command-line front end. Talks to the library only through ifcritic.h.
#include "ifcritic.h"

#include <CLI11.hpp>

#include <cstdio>
#include <optional>
#include <string>
#include <vector>

namespace {

struct Globals
{
  std::string config;
  std::string cache_dir;
  std::string provider;
  std::optional<size_t> concurrency;
  std::optional<uint64_t> seed;
  std::vector<std::string> skip_stages;
  bool quiet = false;
};

int exit_code(ifc_status status)
{
  if (status == IFC_OK)
    return 0;
  if (status == IFC_PARTIAL)
    return 2;
  return 1;
}

int report_failure(const char* what, ifc_status status)
{
  std::fprintf(stderr, "ifcritic: %s: %s\n", what, ifc_last_error());
  return exit_code(status);
}

// Builds the context and applies command-line overrides on top of the
// config file.
ifc_context* open_context(const Globals& g, int& code)
{
  ifc_context* ctx = nullptr;
  ifc_status st = ifc_context_new(g.config.empty() ? nullptr : g.config.c_str(), &ctx);
  if (st != IFC_OK)
  {
    code = report_failure("config", st);
    return nullptr;
  }
  auto apply = [&](ifc_status s, const char* what) {
    if (s != IFC_OK && code == 0)
      code = report_failure(what, s);
  };
  code = 0;
  if (!g.cache_dir.empty())
    apply(ifc_context_set_cache_dir(ctx, g.cache_dir.c_str()), "--cache-dir");
  if (!g.provider.empty())
    apply(ifc_context_set_provider(ctx, g.provider.c_str()), "--provider");
  if (g.concurrency)
    apply(ifc_context_set_concurrency(ctx, *g.concurrency), "--concurrency");
  if (g.seed)
    apply(ifc_context_set_seed(ctx, *g.seed), "--seed");
  for (const auto& s : g.skip_stages)
    apply(ifc_context_skip_stage(ctx, s.c_str()), "--skip-stage");
  apply(ifc_context_set_quiet(ctx, g.quiet ? 1 : 0), "--quiet");
  if (code != 0)
  {
    ifc_context_free(ctx);
    return nullptr;
  }
  return ctx;
}

int finish(ifc_context* ctx, const char* command, ifc_status st, bool quiet)
{
  int code = exit_code(st);
  if (st != IFC_OK && st != IFC_PARTIAL)
    report_failure(command, st);
  else if (!quiet)
  {
    char* summary = nullptr;
    if (ifc_context_last_summary(ctx, &summary) == IFC_OK)
    {
      std::fprintf(stderr, "%s\n", summary);
      ifc_string_free(summary);
    }
  }
  ifc_context_free(ctx);
  return code;
}

} // namespace

int main(int argc, char** argv)
{
  CLI::App app{"Checklist-guided critique pipeline"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config, "Pipeline config (JSON)");
  app.add_option("--cache-dir", g.cache_dir, "Response cache directory");
  app.add_option("--provider", g.provider, "Run every role on this provider");
  app.add_option("--concurrency", g.concurrency, "Requests in flight")->check(CLI::PositiveNumber);
  app.add_option("--seed", g.seed, "Seed for the dataset split");
  app.add_option("--skip-stage", g.skip_stages, "Skip a filter stage (verification, revision)")
      ->check(CLI::IsMember({"verification", "revision"}));
  app.add_flag("-q,--quiet", g.quiet, "Only report fatal errors");

  std::string inputs, checklists, samples, out, report, work_dir, self_samples, finals, split_out, critiques,
      rewards, predictions, gold, metrics;
  std::string provenance = "expert";
  int n_samples = 0;
  bool resume = false;

  auto* checklist = app.add_subcommand("checklist", "Generate constraint checklists");
  checklist->add_option("--inputs", inputs)->required();
  checklist->add_option("--out", out)->required();

  auto* critique = app.add_subcommand("critique", "Sample critiques per input");
  critique->add_option("--inputs", inputs)->required();
  critique->add_option("--checklists", checklists)->required();
  critique->add_option("--provenance", provenance)->check(CLI::IsMember({"expert", "self", "predicted"}));
  critique->add_option("--samples", n_samples, "Samples per input (default from config)");
  critique->add_option("--out", out)->required();

  auto* filter = app.add_subcommand("filter", "Filter expert critiques into final critiques");
  filter->add_option("--inputs", inputs)->required();
  filter->add_option("--checklists", checklists)->required();
  filter->add_option("--samples", samples)->required();
  filter->add_option("--out", out)->required();
  filter->add_option("--report", report)->required();
  filter->add_option("--work-dir", work_dir)->required();
  filter->add_flag("--resume", resume, "Reuse verdicts and revised segments from the work dir");

  auto* prefpairs = app.add_subcommand("prefpairs", "Build constraint-level preference pairs");
  prefpairs->add_option("--inputs", inputs)->required();
  prefpairs->add_option("--checklists", checklists)->required();
  prefpairs->add_option("--self-samples", self_samples)->required();
  prefpairs->add_option("--final-critiques", finals)->required();
  prefpairs->add_option("--out", out)->required();
  prefpairs->add_option("--split-out", split_out);

  auto* reward = app.add_subcommand("reward", "Checklist rewards per response");
  reward->add_option("--inputs", inputs)->required();
  reward->add_option("--critiques", critiques)->required();
  reward->add_option("--out", out)->required();

  auto* dpo = app.add_subcommand("dpo-select", "Pick chosen/rejected responses per group");
  dpo->add_option("--rewards", rewards)->required();
  dpo->add_option("--out", out)->required();

  auto* metaeval = app.add_subcommand("metaeval", "Score predicted critiques against gold labels");
  metaeval->add_option("--inputs", inputs)->required();
  metaeval->add_option("--predictions", predictions)->required();
  metaeval->add_option("--gold", gold)->required();
  metaeval->add_option("--out", out)->required();

  auto* report_cmd = app.add_subcommand("report", "Render metrics tables");
  report_cmd->add_option("--metrics", metrics)->required();
  report_cmd->add_option("--out", out, "Output file (default stdout)");

  CLI11_PARSE(app, argc, argv);

  int code = 0;
  ifc_context* ctx = open_context(g, code);
  if (!ctx)
    return code;

  auto c = [](const std::string& s) { return s.c_str(); };
  if (*checklist)
    return finish(ctx, "checklist", ifc_cmd_checklist(ctx, c(inputs), c(out)), g.quiet);
  if (*critique)
    return finish(ctx, "critique",
                  ifc_cmd_critique(ctx, c(inputs), c(checklists), c(provenance), n_samples, c(out)), g.quiet);
  if (*filter)
    return finish(ctx, "filter",
                  ifc_cmd_filter(ctx, c(inputs), c(checklists), c(samples), c(out), c(report), c(work_dir),
                                 resume ? 1 : 0),
                  g.quiet);
  if (*prefpairs)
    return finish(ctx, "prefpairs",
                  ifc_cmd_prefpairs(ctx, c(inputs), c(checklists), c(self_samples), c(finals), c(out),
                                    split_out.empty() ? nullptr : c(split_out)),
                  g.quiet);
  if (*reward)
    return finish(ctx, "reward", ifc_cmd_reward(ctx, c(inputs), c(critiques), c(out)), g.quiet);
  if (*dpo)
    return finish(ctx, "dpo-select", ifc_cmd_dpo_select(ctx, c(rewards), c(out)), g.quiet);
  if (*metaeval)
    return finish(ctx, "metaeval", ifc_cmd_metaeval(ctx, c(inputs), c(predictions), c(gold), c(out)), g.quiet);
  if (*report_cmd)
    return finish(ctx, "report", ifc_cmd_report(ctx, c(metrics), out.empty() ? nullptr : c(out)), true);
  ifc_context_free(ctx);
  return 1;
}
