// Regenerates the committed test fixtures:
//   <dir>/corpus/             inputs, gold labels, config, mock responses
//   <dir>/corpus/golden/      expected pipeline outputs
//   <dir>/critique_corpus.jsonl
// Usage: ifc_make_fixtures <tests/fixtures>
#include "synthetic.hpp"

#include "ifc/records.hpp"

#include <iostream>

namespace {

using ifc::records::json;

std::string bold_labels(std::string text)
{
  for (const std::string label : {"Constraint:", "Explanation:", "Judgment:"})
  {
    size_t pos = 0;
    while ((pos = text.find("\n" + label, pos)) != std::string::npos)
    {
      text.replace(pos + 1, label.size(), "**" + label.substr(0, label.size() - 1) + "**:");
      pos += label.size() + 4;
    }
  }
  return text;
}

std::string straight_apostrophe(std::string text)
{
  const std::string curly = "’";
  size_t pos = 0;
  while ((pos = text.find(curly, pos)) != std::string::npos)
    text.replace(pos, curly.size(), "'");
  return text;
}

std::string loose_whitespace(const std::string& text)
{
  std::string out;
  for (char c : text)
  {
    if (c == '\n')
      out += "  \n";
    else
      out += c;
  }
  return "\n\n" + out + "\n\n";
}

void write_critique_corpus(const std::filesystem::path& corpus_dir, const std::filesystem::path& out)
{
  std::map<std::string, std::vector<std::string>> checklists;
  std::map<std::string, std::string> group_of;
  for (const auto& r : ifc::records::read_jsonl(corpus_dir / "inputs.jsonl"))
  {
    auto in = ifc::records::instruction_from(r);
    group_of[in.input_id] = in.group_id;
  }
  for (const auto& r : ifc::records::read_jsonl(corpus_dir / "golden" / "checklists.jsonl"))
  {
    auto c = ifc::records::checklist_from(r);
    for (const auto& k : c.checklist.constraints())
      checklists[c.group_id].push_back(k.text);
  }

  std::vector<json> lines;
  size_t n = 0;
  for (const char* file : {"expert_samples.jsonl", "self_samples.jsonl", "predictions.jsonl"})
    for (const auto& r : ifc::records::read_jsonl(corpus_dir / "golden" / file))
    {
      auto s = ifc::records::critique_sample_from(r);
      if (!s.ok)
        continue;
      const std::string canonical = ifc::render_critique(s.critique);
      // Every fourth sample also appears in a decorated form.
      std::vector<std::string> texts{canonical};
      if (n % 4 == 1)
        texts.push_back(bold_labels(canonical));
      if (n % 4 == 2)
        texts.push_back(straight_apostrophe(canonical));
      if (n % 4 == 3)
        texts.push_back(loose_whitespace(canonical));
      ++n;
      for (const auto& t : texts)
      {
        json j;
        j["input_id"] = s.input_id;
        j["checklist"] = checklists.at(group_of.at(s.input_id));
        j["text"] = t;
        j["canonical"] = canonical;
        lines.push_back(j);
      }
    }
  ifc::records::write_jsonl(out, lines);
}

} // namespace

int main(int argc, char** argv)
{
  if (argc != 2)
  {
    std::cerr << "usage: ifc_make_fixtures <fixtures-dir>\n";
    return 1;
  }
  const std::filesystem::path root = argv[1];
  const auto corpus = root / "corpus";
  try
  {
    synthetic::write_corpus(corpus);
    std::filesystem::remove_all(corpus / "golden");
    std::string error;
    if (!synthetic::run_pipeline(corpus, corpus / "config.json", corpus / "golden", &error))
    {
      std::cerr << "golden run failed: " << error << '\n';
      return 1;
    }
    write_critique_corpus(corpus, root / "critique_corpus.jsonl");
  }
  catch (const std::exception& e)
  {
    std::cerr << "ifc_make_fixtures: " << e.what() << '\n';
    return 1;
  }
  std::cout << "fixtures written under " << root << '\n';
  return 0;
}
