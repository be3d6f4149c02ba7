#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace ifc {

enum class TemplateId
{
  ChecklistGen,
  CritiqueGen,
  VerifyCorrectness,
  VerifyConsistency,
  LengthIdentify,
  LengthRevise,
};

std::string_view to_string(TemplateId id);

// File name of the shipped template under prompts/.
std::string_view template_file(TemplateId id);

class TemplateError : public std::runtime_error
{
  using std::runtime_error::runtime_error;
};

using Bindings = std::map<std::string, std::string>;

class PromptTemplate
{
public:
  PromptTemplate(TemplateId id, std::string body) : id_(id), body_(std::move(body)) {}

  TemplateId id() const { return id_; }
  const std::string& body() const { return body_; }

  // Single-pass substitution of the known placeholders ({instruction},
  // {checklist}, ...). Other braces are left alone so literal JSON in a
  // template survives. Throws TemplateError if a placeholder present in the
  // body has no binding.
  std::string render(const Bindings& bindings) const;

private:
  TemplateId id_;
  std::string body_;
};

class TemplateSet
{
public:
  // Templates compiled into the library from prompts/.
  static TemplateSet builtin();

  // Built-in templates, overridden by any same-named file in `dir`.
  static TemplateSet from_directory(const std::filesystem::path& dir);

  const PromptTemplate& get(TemplateId id) const;

  // Default in-context examples for the length identification prompt.
  const std::string& length_examples() const { return length_examples_; }

private:
  std::map<TemplateId, PromptTemplate> templates_;
  std::string length_examples_;
};

} // namespace ifc
