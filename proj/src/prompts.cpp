#include "ifc/prompts.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <sstream>

namespace ifc {

// Generated from prompts/*.txt at build time.
std::optional<std::string_view> embedded_prompt(std::string_view file_name);

namespace {

constexpr std::array<std::string_view, 7> kPlaceholders{
    "instruction", "checklist", "response", "constraint", "critique", "json_data", "in_context_examples",
};

constexpr std::array<TemplateId, 6> kAllTemplates{
    TemplateId::ChecklistGen,      TemplateId::CritiqueGen,    TemplateId::VerifyCorrectness,
    TemplateId::VerifyConsistency, TemplateId::LengthIdentify, TemplateId::LengthRevise,
};

constexpr std::string_view kExamplesFile = "length_identify_examples.txt";

std::string read_file(const std::filesystem::path& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw TemplateError("cannot read template file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string embedded_or_throw(std::string_view file)
{
  auto body = embedded_prompt(file);
  if (!body)
    throw TemplateError("no built-in template " + std::string(file));
  return std::string(*body);
}

} // namespace

std::string_view to_string(TemplateId id)
{
  switch (id)
  {
  case TemplateId::ChecklistGen: return "checklist_gen";
  case TemplateId::CritiqueGen: return "critique_gen";
  case TemplateId::VerifyCorrectness: return "verify_correctness";
  case TemplateId::VerifyConsistency: return "verify_consistency";
  case TemplateId::LengthIdentify: return "length_identify";
  case TemplateId::LengthRevise: return "length_revise";
  }
  return "unknown";
}

std::string_view template_file(TemplateId id)
{
  switch (id)
  {
  case TemplateId::ChecklistGen: return "checklist_generation.txt";
  case TemplateId::CritiqueGen: return "critique_generation.txt";
  case TemplateId::VerifyCorrectness: return "verify_correctness.txt";
  case TemplateId::VerifyConsistency: return "verify_consistency.txt";
  case TemplateId::LengthIdentify: return "length_identify.txt";
  case TemplateId::LengthRevise: return "length_revise.txt";
  }
  return "";
}

std::string PromptTemplate::render(const Bindings& bindings) const
{
  std::string out;
  out.reserve(body_.size() * 2);
  size_t pos = 0;
  while (pos < body_.size())
  {
    size_t open = body_.find('{', pos);
    if (open == std::string::npos)
    {
      out.append(body_, pos);
      break;
    }
    out.append(body_, pos, open - pos);
    size_t close = body_.find('}', open);
    std::string_view name = close == std::string::npos
                                ? std::string_view{}
                                : std::string_view(body_).substr(open + 1, close - open - 1);
    bool known = std::find(kPlaceholders.begin(), kPlaceholders.end(), name) != kPlaceholders.end();
    if (!known)
    {
      out += '{';
      pos = open + 1;
      continue;
    }
    auto it = bindings.find(std::string(name));
    if (it == bindings.end())
      throw TemplateError("template " + std::string(to_string(id_)) + ": unresolved placeholder {" +
                          std::string(name) + "}");
    out += it->second;
    pos = close + 1;
  }
  return out;
}

TemplateSet TemplateSet::builtin()
{
  TemplateSet set;
  for (TemplateId id : kAllTemplates)
    set.templates_.emplace(id, PromptTemplate(id, embedded_or_throw(template_file(id))));
  set.length_examples_ = embedded_or_throw(kExamplesFile);
  return set;
}

TemplateSet TemplateSet::from_directory(const std::filesystem::path& dir)
{
  TemplateSet set = builtin();
  for (TemplateId id : kAllTemplates)
  {
    auto path = dir / template_file(id);
    if (std::filesystem::exists(path))
      set.templates_.insert_or_assign(id, PromptTemplate(id, read_file(path)));
  }
  if (auto path = dir / kExamplesFile; std::filesystem::exists(path))
    set.length_examples_ = read_file(path);
  return set;
}

const PromptTemplate& TemplateSet::get(TemplateId id) const { return templates_.at(id); }

} // namespace ifc
