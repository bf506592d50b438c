#include "dagkit/provider.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <mutex>
#include <regex>

namespace dagkit {

MockProvider::MockProvider(std::vector<ProviderRule> rules)
    : rules_(std::move(rules)) {
  std::stable_sort(rules_.begin(), rules_.end(),
                   [](const ProviderRule& a, const ProviderRule& b) {
                     return a.priority < b.priority;
                   });
}

std::string MockProvider::complete(const std::string& prompt,
                                   const Json& params) {
  (void)params;
  for (const auto& rule : rules_) {
    if (!rule.pattern.empty() && rule.pattern.front() == '^') {
      if (std::regex_search(prompt, std::regex(rule.pattern))) {
        return rule.response;
      }
    } else if (prompt.find(rule.pattern) != std::string::npos) {
      return rule.response;
    }
  }
  throw Error(errc::no_rule_matched,
              "no mock rule matches the prompt (first 80 chars): " +
                  prompt.substr(0, 80));
}

std::vector<ProviderRule> MockProvider::parse_rules(const Json& doc) {
  if (!doc.is_array()) {
    throw Error(errc::provider_unavailable,
                "rule table must be a JSON array of {pattern, response, "
                "priority}");
  }
  std::vector<ProviderRule> rules;
  rules.reserve(doc.size());
  for (const auto& item : doc) {
    ProviderRule rule;
    rule.pattern = item.at("pattern").get<std::string>();
    rule.response = item.at("response").get<std::string>();
    rule.priority = item.value("priority", 0);
    rules.push_back(std::move(rule));
  }
  return rules;
}

std::vector<ProviderRule> MockProvider::load_rules(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(errc::provider_unavailable,
                "cannot read rule table: " + path.string());
  }
  Json doc = Json::parse(in, nullptr, true, true);
  return parse_rules(doc);
}

std::vector<ProviderRule> MockProvider::builtin_rules() {
  // Sized to the builtin module library; every pipeline this artifact
  // ships runs offline against this table.
  return {
      {"task: extract_seeds",
       R"(["sparse attention for lattice solvers","retrieval-augmented ablation planning","spectral pruning of proof search","cross-run replication memory"])",
       10},
      {"task: generate_ideas",
       R"([{"title":"Adaptive sparse attention for lattice QCD pipelines","seed":"sparse attention for lattice solvers"},{"title":"Ablation planners conditioned on retrieved failures","seed":"retrieval-augmented ablation planning"},{"title":"Prune theorem-prover branches by spectral score","seed":"spectral pruning of proof search"}])",
       10},
      {"task: score_quality",
       R"({"score":0.83,"route":"stop","verdict":"accept"})", 10},
      {"task: evaluate_ideas",
       R"([{"idea":"Adaptive sparse attention for lattice QCD pipelines","novelty":0.7,"feasibility":0.8}])",
       10},
      {"role: reader",
       R"({"idea":"Summarize evidence tables before ideation","angle":"similar"})",
       10},
      {"role: analyst",
       R"({"idea":"Decompose solver cost into mechanism-level terms","angle":"mechanism"})",
       10},
      {"role: connector",
       R"({"idea":"Port variance-reduction tricks across domains","angle":"cross-domain"})",
       10},
      {"role: contrarian",
       R"({"idea":"Test the opposite: dense attention may win at small scale","angle":"opposite"})",
       10},
      {"role: synthesizer",
       R"({"idea":"Fuse outlier observations into one protocol change","angle":"counter-intuitive"})",
       10},
      {"role: critic",
       R"({"idea":"Reject seeds without a measurable baseline","angle":"filter"})",
       10},
      {"task: extract_insights",
       R"(["co-visit statistics expose long-range structure","dedup keys must normalize case and whitespace","verifier outputs deserve first-class storage"])",
       10},
      {"task: discover_relations",
       R"([{"src":0,"dst":1,"label":"supports"}])", 10},
      {"task: bucket_relation", "related", 10},
      {"task: summarize_run",
       R"({"summary":"run completed; seeds persisted and indexed"})", 10},
      // Generic fallbacks for ad-hoc prompts in fixtures; narrower rules
      // above win through their priority.
      {"score this idea", R"({"score":0.83})", 50},
      {"^ping$", "pong", 50},
  };
}

namespace {

std::map<std::string, ProviderFactory>& factory_table() {
  static std::map<std::string, ProviderFactory> table = {
      {"mock", [](const Json& config) -> ProviderHandle {
         std::vector<ProviderRule> rules;
         if (config.contains("rules_file")) {
           rules = MockProvider::load_rules(
               config.at("rules_file").get<std::string>());
         } else {
           rules = MockProvider::builtin_rules();
         }
         return std::make_shared<MockProvider>(std::move(rules));
       }}};
  return table;
}

std::mutex factory_mutex;

}  // namespace

std::vector<std::string> provider_names() {
  std::lock_guard<std::mutex> lock(factory_mutex);
  std::vector<std::string> names;
  for (const auto& [name, factory] : factory_table()) names.push_back(name);
  return names;
}

void register_provider(const std::string& name, ProviderFactory factory) {
  std::lock_guard<std::mutex> lock(factory_mutex);
  factory_table()[name] = std::move(factory);
}

ProviderHandle make_provider(const std::string& name, const Json& config) {
  ProviderFactory factory;
  {
    std::lock_guard<std::mutex> lock(factory_mutex);
    auto it = factory_table().find(name);
    if (it == factory_table().end()) {
      throw Error(errc::unknown_provider,
                  "no provider named '" + name + "' is registered");
    }
    factory = it->second;
  }
  return factory(config);
}

}  // namespace dagkit
