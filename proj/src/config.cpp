#include "ifc/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace ifc {

namespace {

using json = nlohmann::json;

void reject_unknown(const json& obj, std::initializer_list<std::string_view> known, const std::string& where)
{
  for (auto it = obj.begin(); it != obj.end(); ++it)
  {
    bool ok = false;
    for (auto k : known)
      ok = ok || it.key() == k;
    if (!ok)
      throw ConfigError(where + ": unknown key \"" + it.key() + "\"");
  }
}

template <typename T>
T get(const json& obj, const char* key, T fallback, const std::string& where)
{
  auto it = obj.find(key);
  if (it == obj.end())
    return fallback;
  try
  {
    return it->get<T>();
  }
  catch (const json::exception&)
  {
    throw ConfigError(where + ": key \"" + key + "\" has the wrong type");
  }
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p)
{
  std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

ProviderConfig parse_provider(const std::string& name, const json& j, const std::filesystem::path& base)
{
  const std::string where = "provider " + name;
  if (!j.is_object())
    throw ConfigError(where + ": must be an object");
  reject_unknown(j,
                 {"kind", "endpoint", "model", "auth_env", "temperature", "top_p", "max_output_length",
                  "timeout_seconds", "max_retries", "backoff_ms", "parallelism_bound", "fixture_dir"},
                 where);
  ProviderConfig p;
  p.name = name;
  const std::string kind = get<std::string>(j, "kind", "mock", where);
  if (kind == "mock")
    p.kind = ProviderKind::Mock;
  else if (kind == "http")
    p.kind = ProviderKind::Http;
  else
    throw ConfigError(where + ": kind must be \"mock\" or \"http\"");
  p.endpoint = get<std::string>(j, "endpoint", "", where);
  p.model_name = get<std::string>(j, "model", name, where);
  p.auth_env = get<std::string>(j, "auth_env", "", where);
  p.sampling.temperature = get<double>(j, "temperature", p.sampling.temperature, where);
  p.sampling.top_p = get<double>(j, "top_p", p.sampling.top_p, where);
  p.sampling.max_output_length = get<int>(j, "max_output_length", p.sampling.max_output_length, where);
  p.timeout_seconds = get<double>(j, "timeout_seconds", p.timeout_seconds, where);
  p.max_retries = get<int>(j, "max_retries", p.max_retries, where);
  p.backoff_ms = get<int>(j, "backoff_ms", p.backoff_ms, where);
  p.parallelism_bound = get<int>(j, "parallelism_bound", p.parallelism_bound, where);
  if (j.contains("fixture_dir"))
    p.fixture_dir = resolve(base, get<std::string>(j, "fixture_dir", "", where));
  try
  {
    p.validate();
  }
  catch (const std::invalid_argument& e)
  {
    throw ConfigError(where + ": " + e.what());
  }
  return p;
}

} // namespace

void PipelineConfig::validate() const
{
  if (n_expert_samples < 1)
    throw ConfigError("n_expert_samples must be >= 1");
  if (m_self_samples < 1)
    throw ConfigError("m_self_samples must be >= 1");
  if (!(confidence_threshold > 0.5 && confidence_threshold <= 1.0))
    throw ConfigError("confidence_threshold must lie in (0.5, 1]");
  try
  {
    split.validate();
  }
  catch (const std::invalid_argument& e)
  {
    throw ConfigError(e.what());
  }
  if (max_pairs_per_input < 1)
    throw ConfigError("max_pairs_per_input must be >= 1");
  if (dpo_group_size < 2)
    throw ConfigError("dpo_group_size must be >= 2");
  if (grpo_rollouts < 1)
    throw ConfigError("grpo_rollouts must be >= 1");
  if (concurrency < 1)
    throw ConfigError("concurrency must be >= 1");
  for (const auto& s : skip_stages)
    if (s != "verification" && s != "revision")
      throw ConfigError("unknown stage \"" + s + "\" (expected verification or revision)");

  auto known = [this](const std::string& name) {
    for (const auto& p : providers)
      if (p.name == name)
        return true;
    return false;
  };
  auto check_role = [&](const std::string& role, const std::string& name) {
    if (!name.empty() && !known(name))
      throw ConfigError("role " + role + " names unknown provider \"" + name + "\"");
  };
  check_role("checklist", roles.checklist);
  check_role("expert", roles.expert);
  check_role("critic", roles.critic);
  check_role("extractor", roles.extractor);
  check_role("reviser", roles.reviser);
  for (const auto& v : roles.verifiers)
    check_role("verifier", v);
}

void PipelineConfig::force_provider(const std::string& provider)
{
  auto known = std::find_if(providers.begin(), providers.end(),
                            [&](const ProviderConfig& p) { return p.name == provider; });
  if (known == providers.end())
    throw ConfigError("unknown provider '" + provider + "'");
  roles.checklist = roles.expert = roles.critic = roles.extractor = roles.reviser = provider;
  roles.verifiers = {provider};
}

PipelineConfig parse_config(const std::string& text, const std::filesystem::path& base_dir)
{
  json j;
  try
  {
    j = json::parse(text);
  }
  catch (const json::parse_error& e)
  {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object())
    throw ConfigError("config must be a JSON object");
  const std::string where = "config";
  reject_unknown(j,
                 {"n_expert_samples", "m_self_samples", "confidence_threshold", "sft_ref_split",
                  "max_pairs_per_input", "dpo_group_size", "grpo_rollouts", "seed", "cache_dir", "concurrency",
                  "providers", "roles", "prompt_dir", "skip_stages"},
                 where);

  PipelineConfig c;
  c.n_expert_samples = get<int>(j, "n_expert_samples", c.n_expert_samples, where);
  c.m_self_samples = get<int>(j, "m_self_samples", c.m_self_samples, where);
  c.confidence_threshold = get<double>(j, "confidence_threshold", c.confidence_threshold, where);
  if (j.contains("sft_ref_split"))
  {
    auto split = get<std::vector<double>>(j, "sft_ref_split", {}, where);
    if (split.size() != 2)
      throw ConfigError("sft_ref_split must hold two fractions");
    c.split.sft_fraction = split[0];
    c.split.ref_fraction = split[1];
  }
  c.max_pairs_per_input = get<int>(j, "max_pairs_per_input", c.max_pairs_per_input, where);
  c.dpo_group_size = get<int>(j, "dpo_group_size", c.dpo_group_size, where);
  c.grpo_rollouts = get<int>(j, "grpo_rollouts", c.grpo_rollouts, where);
  c.seed = get<uint64_t>(j, "seed", c.seed, where);
  c.split.seed = c.seed;
  if (j.contains("cache_dir"))
    c.cache_dir = resolve(base_dir, get<std::string>(j, "cache_dir", "", where));
  c.concurrency = get<size_t>(j, "concurrency", c.concurrency, where);
  if (j.contains("prompt_dir"))
    c.prompt_dir = resolve(base_dir, get<std::string>(j, "prompt_dir", "", where));
  for (const auto& s : get<std::vector<std::string>>(j, "skip_stages", {}, where))
    c.skip_stages.insert(s);

  if (j.contains("providers"))
  {
    const json& providers = j["providers"];
    if (!providers.is_object())
      throw ConfigError("providers must be an object keyed by provider name");
    // nlohmann::json keeps object keys sorted, so provider order is stable.
    for (auto it = providers.begin(); it != providers.end(); ++it)
      c.providers.push_back(parse_provider(it.key(), it.value(), base_dir));
  }
  if (j.contains("roles"))
  {
    const json& r = j["roles"];
    if (!r.is_object())
      throw ConfigError("roles must be an object");
    reject_unknown(r, {"checklist", "expert", "critic", "verifiers", "extractor", "reviser"}, "roles");
    c.roles.checklist = get<std::string>(r, "checklist", "", "roles");
    c.roles.expert = get<std::string>(r, "expert", "", "roles");
    c.roles.critic = get<std::string>(r, "critic", "", "roles");
    c.roles.verifiers = get<std::vector<std::string>>(r, "verifiers", {}, "roles");
    c.roles.extractor = get<std::string>(r, "extractor", "", "roles");
    c.roles.reviser = get<std::string>(r, "reviser", "", "roles");
  }
  c.validate();
  return c;
}

PipelineConfig load_config(const std::filesystem::path& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw ConfigError("cannot open config " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), path.parent_path());
}

std::unique_ptr<Gateway> make_gateway(const PipelineConfig& config)
{
  TemplateSet templates = config.prompt_dir ? TemplateSet::from_directory(*config.prompt_dir) : TemplateSet::builtin();
  auto cache = std::make_shared<ResponseCache>(config.cache_dir);
  auto gateway = std::make_unique<Gateway>(std::move(templates), std::move(cache));
  for (const auto& p : config.providers)
    gateway->add_provider(p);
  return gateway;
}

} // namespace ifc
