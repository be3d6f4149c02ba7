#pragma once

// A scripted stand-in for the LLMs of the pipeline. It recognizes which
// prompt template produced a request, recovers the bound values, and answers
// from a small hand-labeled corpus with deterministic, hash-driven noise.
// Used to record the mock fixtures of the golden corpus.

#include "ifc/gateway.hpp"
#include "ifc/records.hpp"

#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace synthetic {

struct LengthSpec
{
  std::string requirement;           // quote from the constraint
  std::vector<std::string> segments; // response parts it governs
};

struct ConstraintSpec
{
  std::string text;
  std::optional<LengthSpec> length;
};

struct Response
{
  std::string input_id;
  std::string text;
  std::vector<ifc::Judgment> gold; // one per constraint
};

struct Instruction
{
  std::string group_id;
  std::string benchmark;
  std::string text;
  std::vector<ConstraintSpec> constraints;
  std::vector<Response> responses;
};

// Five instructions with two responses each; in every group one response
// follows all constraints and the other does not.
const std::vector<Instruction>& corpus();

std::vector<ifc::records::Instruction> input_records();
std::vector<ifc::records::GoldLabelRecord> gold_records();

// Recovers placeholder values by matching the template's literal text.
std::optional<ifc::Bindings> unrender(const ifc::PromptTemplate& tmpl, const std::string& prompt);

struct Decoded
{
  ifc::TemplateId id;
  ifc::Bindings bindings;
};

std::optional<Decoded> decode_prompt(const ifc::TemplateSet& templates, const std::string& prompt);

// Deterministic value in [0, 1) from a key.
double unit_hash(const std::string& key);

class SyntheticProvider : public ifc::Provider
{
public:
  SyntheticProvider(ifc::TemplateSet templates, std::string role);

  ifc::ChatResponse send(const ifc::ChatRequest& request) override;

  std::string respond(const ifc::ChatRequest& request) const;

private:
  ifc::TemplateSet templates_;
  std::string role_;
};

// Wraps a provider and writes every response as `<fixture_dir>/<key>.txt`.
class RecordingProvider : public ifc::Provider
{
public:
  RecordingProvider(std::shared_ptr<ifc::Provider> inner, std::filesystem::path fixture_dir);

  ifc::ChatResponse send(const ifc::ChatRequest& request) override;

private:
  std::shared_ptr<ifc::Provider> inner_;
  std::filesystem::path fixture_dir_;
  std::mutex mutex_;
};

// Default pipeline config over mock providers reading `mock/`.
std::string corpus_config_json();

// Writes inputs.jsonl, gold.jsonl, config.json and records mock fixtures by
// running the full pipeline against the synthetic providers.
void write_corpus(const std::filesystem::path& dir);

// Runs every pipeline command via the C++ command layer against `config`
// writing outputs into `out_dir`. Returns false on any non-ok status.
bool run_pipeline(const std::filesystem::path& corpus_dir, const std::filesystem::path& config,
                  const std::filesystem::path& out_dir, std::string* error = nullptr);

// Output files of a pipeline run, relative to its output directory.
const std::vector<std::string>& pipeline_outputs();

} // namespace synthetic
