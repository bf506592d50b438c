#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dagkit/error.hpp"

namespace dagkit {

using Json = nlohmann::json;

/// One canned response. A pattern starting with '^' is matched as an
/// anchored regex, anything else as a plain substring.
struct ProviderRule {
  std::string pattern;
  std::string response;
  int priority = 0;
};

/// Completion-provider port. Real vendor clients live behind the same
/// surface; this artifact ships the mock.
class Provider {
public:
  virtual ~Provider() = default;
  virtual std::string complete(const std::string& prompt,
                               const Json& params = Json::object()) = 0;
  virtual std::string name() const = 0;
};

using ProviderHandle = std::shared_ptr<Provider>;

// Rule-based mock: deterministic for a fixed rule table, immutable after
// construction. No silent default: an unmatched prompt is an error.
class MockProvider : public Provider {
public:
  explicit MockProvider(std::vector<ProviderRule> rules);

  std::string complete(const std::string& prompt,
                       const Json& params = Json::object()) override;
  std::string name() const override { return "mock"; }

  std::size_t rule_count() const { return rules_.size(); }

  /// Parses a `[{pattern, response, priority}]` JSON document.
  static std::vector<ProviderRule> parse_rules(const Json& doc);
  static std::vector<ProviderRule> load_rules(
      const std::filesystem::path& path);
  /// The table the builtin module library runs against.
  static std::vector<ProviderRule> builtin_rules();

private:
  std::vector<ProviderRule> rules_;  // ordered by (priority, insertion)
};

using ProviderFactory = std::function<ProviderHandle(const Json& config)>;

/// Names the factory can construct ("mock" ships registered).
std::vector<std::string> provider_names();
void register_provider(const std::string& name, ProviderFactory factory);

// config for "mock": optional "rules_file" pointing at a rule-table JSON.
ProviderHandle make_provider(const std::string& name,
                             const Json& config = Json::object());

}  // namespace dagkit
