#include "ifcritic.h"

#include "ifc/commands.hpp"
#include "ifc/textsim.hpp"

#include <cstring>
#include <fstream>
#include <iostream>
#include <optional>

using ifc::records::json;

struct ifc_context
{
  ifc::PipelineConfig config;
  std::unique_ptr<ifc::CommandContext> command;
  std::ofstream null_sink; // unopened stream, swallows writes
  bool quiet = false;
  json last_summary = json::object();
};

namespace {

thread_local std::string last_error;

ifc_status fail(ifc_status status, const std::string& message)
{
  last_error = message;
  return status;
}

// Maps exceptions from the C++ core onto status codes.
template <typename F>
ifc_status guarded(F&& f)
{
  try
  {
    last_error.clear();
    return f();
  }
  catch (const ifc::ConfigError& e)
  {
    return fail(IFC_ERR_CONFIG, e.what());
  }
  catch (const ifc::records::IoError& e)
  {
    return fail(IFC_ERR_IO, e.what());
  }
  catch (const std::filesystem::filesystem_error& e)
  {
    return fail(IFC_ERR_IO, e.what());
  }
  catch (const ifc::records::SchemaError& e)
  {
    return fail(IFC_ERR_SCHEMA, e.what());
  }
  catch (const ifc::MissingGoldLabel& e)
  {
    return fail(IFC_ERR_SCHEMA, e.what());
  }
  catch (const ifc::ParseError& e)
  {
    return fail(IFC_ERR_PARSE, std::string(ifc::to_string(e.kind())) + ": " + e.what());
  }
  catch (const ifc::GatewayError& e)
  {
    return fail(IFC_ERR_PROVIDER, std::string(ifc::to_string(e.kind())) + ": " + e.what());
  }
  catch (const ifc::TemplateError& e)
  {
    return fail(IFC_ERR_CONFIG, e.what());
  }
  catch (const std::invalid_argument& e)
  {
    return fail(IFC_ERR_INVALID_ARG, e.what());
  }
  catch (const std::exception& e)
  {
    return fail(IFC_ERR_INTERNAL, e.what());
  }
  catch (...)
  {
    return fail(IFC_ERR_INTERNAL, "unknown error");
  }
}

bool missing(const char* s)
{
  return s == nullptr || *s == '\0';
}

char* dup_string(const std::string& s)
{
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out)
    std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

ifc::CommandContext& command_context(ifc_context* ctx)
{
  if (!ctx->command)
  {
    ctx->config.validate();
    std::ostream& log = ctx->quiet ? static_cast<std::ostream&>(ctx->null_sink) : std::cerr;
    ctx->command = std::make_unique<ifc::CommandContext>(ctx->config, ifc::make_gateway(ctx->config), log);
  }
  return *ctx->command;
}

template <typename F>
ifc_status run_command(ifc_context* ctx, F&& f)
{
  if (!ctx)
    return fail(IFC_ERR_INVALID_ARG, "null context");
  return guarded([&] {
    ifc::CommandResult r = f(command_context(ctx));
    ctx->last_summary = r.summary;
    switch (r.status)
    {
    case ifc::CommandStatus::Ok: return IFC_OK;
    case ifc::CommandStatus::Partial: return fail(IFC_PARTIAL, "some records failed");
    case ifc::CommandStatus::Fatal: break;
    }
    return fail(IFC_ERR_INTERNAL, "command failed");
  });
}

// Config overrides drop the built gateway so the next command sees them.
template <typename F>
ifc_status override(ifc_context* ctx, F&& f)
{
  if (!ctx)
    return fail(IFC_ERR_INVALID_ARG, "null context");
  return guarded([&] {
    // a rejected override must leave the context untouched
    ifc::PipelineConfig next = ctx->config;
    f(next);
    next.validate();
    ctx->config = std::move(next);
    ctx->command.reset();
    return IFC_OK;
  });
}

} // namespace

extern "C" {

const char* ifc_last_error(void)
{
  return last_error.c_str();
}

const char* ifc_version(void)
{
  return "1.0.0";
}

void ifc_string_free(char* s)
{
  std::free(s);
}

ifc_status ifc_context_new(const char* config_path, ifc_context** out)
{
  if (!out)
    return fail(IFC_ERR_INVALID_ARG, "null output pointer");
  *out = nullptr;
  return guarded([&] {
    auto ctx = std::make_unique<ifc_context>();
    if (!missing(config_path))
      ctx->config = ifc::load_config(config_path);
    *out = ctx.release();
    return IFC_OK;
  });
}

void ifc_context_free(ifc_context* ctx)
{
  delete ctx;
}

ifc_status ifc_context_set_cache_dir(ifc_context* ctx, const char* dir)
{
  if (missing(dir))
    return fail(IFC_ERR_INVALID_ARG, "empty cache directory");
  return override(ctx, [&](ifc::PipelineConfig& c) { c.cache_dir = std::filesystem::path(dir); });
}

ifc_status ifc_context_set_provider(ifc_context* ctx, const char* provider)
{
  if (missing(provider))
    return fail(IFC_ERR_INVALID_ARG, "empty provider name");
  return override(ctx, [&](ifc::PipelineConfig& c) { c.force_provider(provider); });
}

ifc_status ifc_context_set_concurrency(ifc_context* ctx, size_t concurrency)
{
  return override(ctx, [&](ifc::PipelineConfig& c) { c.concurrency = concurrency; });
}

ifc_status ifc_context_set_seed(ifc_context* ctx, uint64_t seed)
{
  return override(ctx, [&](ifc::PipelineConfig& c) { c.seed = c.split.seed = seed; });
}

ifc_status ifc_context_skip_stage(ifc_context* ctx, const char* stage)
{
  if (missing(stage))
    return fail(IFC_ERR_INVALID_ARG, "empty stage name");
  return override(ctx, [&](ifc::PipelineConfig& c) { c.skip_stages.insert(stage); });
}

ifc_status ifc_context_set_quiet(ifc_context* ctx, int quiet)
{
  return override(ctx, [&](ifc::PipelineConfig&) { ctx->quiet = quiet != 0; });
}

ifc_status ifc_context_stats(ifc_context* ctx, ifc_stats* out)
{
  if (!ctx || !out)
    return fail(IFC_ERR_INVALID_ARG, "null argument");
  *out = {};
  if (ctx->command)
  {
    auto& gw = ctx->command->gateway();
    out->provider_calls = gw.provider_calls();
    out->cache_hits = gw.cache().hits();
    out->cache_misses = gw.cache().misses();
  }
  return IFC_OK;
}

ifc_status ifc_context_last_summary(ifc_context* ctx, char** out_json)
{
  if (!ctx || !out_json)
    return fail(IFC_ERR_INVALID_ARG, "null argument");
  *out_json = dup_string(ctx->last_summary.dump());
  return *out_json ? IFC_OK : fail(IFC_ERR_INTERNAL, "out of memory");
}

ifc_status ifc_cmd_checklist(ifc_context* ctx, const char* inputs, const char* out)
{
  if (missing(inputs) || missing(out))
    return fail(IFC_ERR_INVALID_ARG, "checklist needs inputs and out paths");
  return run_command(ctx, [&](ifc::CommandContext& c) { return ifc::cmd_checklist(c, inputs, out); });
}

ifc_status ifc_cmd_critique(ifc_context* ctx, const char* inputs, const char* checklists, const char* provenance,
                            int samples, const char* out)
{
  if (missing(inputs) || missing(checklists) || missing(out) || missing(provenance))
    return fail(IFC_ERR_INVALID_ARG, "critique needs inputs, checklists, provenance and out");
  return run_command(ctx, [&](ifc::CommandContext& c) {
    ifc::Provenance p = ifc::provenance_from_string(provenance);
    return ifc::cmd_critique(c, inputs, checklists, p, samples, out);
  });
}

ifc_status ifc_cmd_filter(ifc_context* ctx, const char* inputs, const char* checklists, const char* samples,
                          const char* out, const char* report, const char* work_dir, int resume)
{
  if (missing(inputs) || missing(checklists) || missing(samples) || missing(out) || missing(report) ||
      missing(work_dir))
    return fail(IFC_ERR_INVALID_ARG, "filter needs inputs, checklists, samples, out, report and work dir");
  return run_command(ctx, [&](ifc::CommandContext& c) {
    return ifc::cmd_filter(c, {inputs, checklists, samples, out, report, work_dir, resume != 0});
  });
}

ifc_status ifc_cmd_prefpairs(ifc_context* ctx, const char* inputs, const char* checklists, const char* self_samples,
                             const char* final_critiques, const char* out, const char* split_out)
{
  if (missing(inputs) || missing(checklists) || missing(self_samples) || missing(final_critiques) || missing(out))
    return fail(IFC_ERR_INVALID_ARG, "prefpairs needs inputs, checklists, self samples, final critiques and out");
  return run_command(ctx, [&](ifc::CommandContext& c) {
    return ifc::cmd_prefpairs(c, inputs, checklists, self_samples, final_critiques, out,
                              missing(split_out) ? ifc::Path{} : ifc::Path{split_out});
  });
}

ifc_status ifc_cmd_reward(ifc_context* ctx, const char* inputs, const char* critiques, const char* out)
{
  if (missing(inputs) || missing(critiques) || missing(out))
    return fail(IFC_ERR_INVALID_ARG, "reward needs inputs, critiques and out");
  return run_command(ctx, [&](ifc::CommandContext& c) { return ifc::cmd_reward(c, inputs, critiques, out); });
}

ifc_status ifc_cmd_dpo_select(ifc_context* ctx, const char* rewards, const char* out)
{
  if (missing(rewards) || missing(out))
    return fail(IFC_ERR_INVALID_ARG, "dpo-select needs rewards and out");
  return run_command(ctx, [&](ifc::CommandContext& c) { return ifc::cmd_dpo_select(c, rewards, out); });
}

ifc_status ifc_cmd_metaeval(ifc_context* ctx, const char* inputs, const char* predictions, const char* gold,
                            const char* out)
{
  if (missing(inputs) || missing(predictions) || missing(gold) || missing(out))
    return fail(IFC_ERR_INVALID_ARG, "metaeval needs inputs, predictions, gold and out");
  return run_command(ctx,
                     [&](ifc::CommandContext& c) { return ifc::cmd_metaeval(c, inputs, predictions, gold, out); });
}

ifc_status ifc_cmd_report(ifc_context* ctx, const char* metrics, const char* out)
{
  if (missing(metrics))
    return fail(IFC_ERR_INVALID_ARG, "report needs a metrics file");
  return run_command(ctx, [&](ifc::CommandContext& c) {
    return ifc::cmd_report(c, metrics, missing(out) ? ifc::Path{"-"} : ifc::Path{out});
  });
}

ifc_status ifc_gestalt_ratio(const char* a, const char* b, double* out)
{
  if (!a || !b || !out)
    return fail(IFC_ERR_INVALID_ARG, "null argument");
  return guarded([&] {
    *out = ifc::gestalt_ratio(a, b).value();
    return IFC_OK;
  });
}

ifc_status ifc_parse_critique(const char* text, const char* checklist_json, char** out_json)
{
  if (!text || !checklist_json || !out_json)
    return fail(IFC_ERR_INVALID_ARG, "null argument");
  *out_json = nullptr;
  return guarded([&] {
    json arr = json::parse(checklist_json, nullptr, false);
    if (!arr.is_array())
      return fail(IFC_ERR_INVALID_ARG, "checklist must be a JSON array of strings");
    std::vector<std::string> texts;
    for (const auto& t : arr)
    {
      if (!t.is_string())
        return fail(IFC_ERR_INVALID_ARG, "checklist must be a JSON array of strings");
      texts.push_back(t.get<std::string>());
    }
    ifc::Critique c = ifc::parse_critique(text, ifc::Checklist::from_texts(texts));
    *out_json = dup_string(ifc::records::segments_json(c.segments).dump());
    return IFC_OK;
  });
}

ifc_status ifc_render_critique(const char* segments_json, char** out_text)
{
  if (!segments_json || !out_text)
    return fail(IFC_ERR_INVALID_ARG, "null argument");
  *out_text = nullptr;
  return guarded([&] {
    json arr = json::parse(segments_json, nullptr, false);
    if (arr.is_discarded())
      return fail(IFC_ERR_INVALID_ARG, "segments are not valid JSON");
    ifc::Critique c;
    c.segments = ifc::records::segments_from(arr);
    *out_text = dup_string(ifc::render_critique(c));
    return IFC_OK;
  });
}

ifc_status ifc_checklist_reward(const int* judgments, size_t n, int64_t* numerator, int64_t* denominator)
{
  if ((!judgments && n > 0) || !numerator || !denominator)
    return fail(IFC_ERR_INVALID_ARG, "null argument");
  ifc::Critique critique;
  for (size_t i = 0; i < n; ++i)
  {
    if (judgments[i] != 0 && judgments[i] != 1)
      return fail(IFC_ERR_INVALID_ARG, "judgments must be 0 or 1");
    critique.segments.push_back({static_cast<int>(i) + 1, "", "", static_cast<ifc::Judgment>(judgments[i])});
  }
  return guarded([&] {
    ifc::Rational r = ifc::compute_reward(critique).reward;
    *numerator = r.numerator();
    *denominator = r.denominator();
    return IFC_OK;
  });
}

} // extern "C"
