#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "dagkit/registry.hpp"

#include "test_support.hpp"

using namespace dagkit;

namespace {

ModuleDescriptor scorer_descriptor() {
  return {"mock_scorer", ModuleKind::prompt,
          {{"seed", "seed"}},
          {{"verdict", "verdict"}},
          "scores a seed"};
}

}  // namespace

TEST_CASE("registration round-trip") {
  ModuleRegistry registry;
  registry.register_module(
      {"idea_generator", ModuleKind::prompt, {{"seeds", "seed-list"}},
       {{"ideas", "idea-list"}}, "generator"},
      [](const Json&) { return ModuleResult{}; });
  const ModuleDescriptor& d = registry.lookup("idea_generator");
  CHECK(d.name == "idea_generator");
  CHECK(d.kind == ModuleKind::prompt);
  CHECK(d.input_spec.at("seeds") == "seed-list");
}

TEST_CASE("second registration of a name always errors") {
  ModuleRegistry registry;
  auto noop = [](const Json&) { return ModuleResult{}; };
  registry.register_module({"x", ModuleKind::functional, {}, {}, ""}, noop);
  try {
    registry.register_module({"x", ModuleKind::functional, {}, {}, ""}, noop);
    FAIL("expected duplicate-name");
  } catch (const Error& e) {
    CHECK(e.code() == errc::duplicate_name);
  }
  CHECK(registry.names().size() == 1);
}

TEST_CASE("reserved field names are rejected in either spec") {
  for (const char* reserved : reserved_fields) {
    ModuleRegistry registry;
    ModuleDescriptor bad_out{"m", ModuleKind::functional, {}, {}, ""};
    bad_out.output_spec[reserved] = "tag";
    CHECK_THROWS_WITH_AS(
        registry.register_module(bad_out, [](const Json&) {
          return ModuleResult{};
        }),
        doctest::Contains(reserved), Error);

    ModuleDescriptor bad_in{"m", ModuleKind::functional, {}, {}, ""};
    bad_in.input_spec[reserved] = "tag";
    try {
      registry.register_module(bad_in,
                               [](const Json&) { return ModuleResult{}; });
      FAIL("expected invalid-descriptor");
    } catch (const Error& e) {
      CHECK(e.code() == errc::invalid_descriptor);
    }
  }
}

TEST_CASE("empty name is an invalid descriptor") {
  ModuleRegistry registry;
  try {
    registry.register_module({"", ModuleKind::functional, {}, {}, ""},
                             [](const Json&) { return ModuleResult{}; });
    FAIL("expected invalid-descriptor");
  } catch (const Error& e) {
    CHECK(e.code() == errc::invalid_descriptor);
  }
}

TEST_CASE("lookup is case-sensitive exact match") {
  ModuleRegistry registry;
  registry.register_module({"idea_generator", ModuleKind::prompt, {}, {}, ""},
                           [](const Json&) { return ModuleResult{}; });
  CHECK_NOTHROW(registry.lookup("idea_generator"));
  try {
    registry.lookup("Idea_Generator");
    FAIL("expected unknown-module");
  } catch (const Error& e) {
    CHECK(e.code() == errc::unknown_module);
  }
  try {
    registry.lookup("nonexistent");
    FAIL("expected unknown-module");
  } catch (const Error& e) {
    CHECK(e.code() == errc::unknown_module);
  }
}

TEST_CASE("invoke dispatches and returns the result unchanged") {
  ModuleRegistry registry;
  registry.register_module(scorer_descriptor(), [](const Json& inputs) {
    ModuleResult result;
    result.outputs["verdict"] = "fine";
    result.outputs["echo"] = inputs.at("seed");
    result.score = 0.83;
    result.metadata = Json{{"source", "mock"}};
    return result;
  });

  ModuleResult result =
      registry.invoke("mock_scorer", Json{{"seed", "holography"}});
  CHECK(result.score.has_value());
  CHECK(*result.score == doctest::Approx(0.83));
  CHECK(result.outputs.at("verdict") == "fine");
  CHECK(result.outputs.at("echo") == "holography");
  CHECK(result.metadata.at("source") == "mock");
  CHECK_FALSE(result.route.has_value());
}

TEST_CASE("invoke rejects missing required inputs") {
  ModuleRegistry registry;
  registry.register_module(
      {"needs_seeds", ModuleKind::prompt, {{"seeds", "seed-list"}}, {}, ""},
      [](const Json&) { return ModuleResult{}; });
  try {
    registry.invoke("needs_seeds", Json::object());
    FAIL("expected missing-input");
  } catch (const Error& e) {
    CHECK(e.code() == errc::missing_input);
    CHECK(std::string(e.what()).find("seeds") != std::string::npos);
  }
}

TEST_CASE("invoke wraps behavior exceptions") {
  ModuleRegistry registry;
  registry.register_module(
      {"explodes", ModuleKind::functional, {}, {}, ""},
      [](const Json&) -> ModuleResult { throw std::runtime_error("boom"); });
  try {
    registry.invoke("explodes", Json::object());
    FAIL("expected behavior-failure");
  } catch (const Error& e) {
    CHECK(e.code() == errc::behavior_failure);
    CHECK(std::string(e.what()).find("boom") != std::string::npos);
  }
}

TEST_CASE("invoke of unknown module errors") {
  ModuleRegistry registry;
  try {
    registry.invoke("ghost", Json::object());
    FAIL("expected unknown-module");
  } catch (const Error& e) {
    CHECK(e.code() == errc::unknown_module);
  }
}

TEST_CASE("invoke is a pure dispatch for deterministic behaviors") {
  ModuleRegistry registry;
  registry.register_module(scorer_descriptor(), [](const Json& inputs) {
    ModuleResult result;
    result.outputs["verdict"] = inputs.at("seed").get<std::string>() + "!";
    return result;
  });
  Json inputs{{"seed", "lattice"}};
  ModuleResult a = registry.invoke("mock_scorer", inputs);
  ModuleResult b = registry.invoke("mock_scorer", inputs);
  CHECK(a.to_wire() == b.to_wire());
}

TEST_CASE("registration freezes after the first invoke") {
  ModuleRegistry registry;
  registry.register_module({"a", ModuleKind::functional, {}, {}, ""},
                           [](const Json&) { return ModuleResult{}; });
  registry.invoke("a", Json::object());
  try {
    registry.register_module({"b", ModuleKind::functional, {}, {}, ""},
                             [](const Json&) { return ModuleResult{}; });
    FAIL("expected registry-frozen");
  } catch (const Error& e) {
    CHECK(e.code() == errc::registry_frozen);
  }
}

TEST_CASE("emit_schemas lists every descriptor sorted by name") {
  ModuleRegistry registry;
  CHECK(registry.emit_schemas() == Json{{"modules", Json::array()}});

  auto noop = [](const Json&) { return ModuleResult{}; };
  registry.register_module({"zeta", ModuleKind::functional, {}, {}, "z"},
                           noop);
  registry.register_module(
      {"alpha", ModuleKind::prompt, {{"in", "raw"}}, {{"out", "raw"}}, "a"},
      noop);

  Json doc = registry.emit_schemas();
  REQUIRE(doc.at("modules").size() == 2);
  CHECK(doc["modules"][0]["name"] == "alpha");
  CHECK(doc["modules"][1]["name"] == "zeta");
  CHECK(doc["modules"][0]["kind"] == "prompt");
  CHECK(doc["modules"][0]["input_spec"]["in"] == "raw");
}

TEST_CASE("emit_schemas is byte-identical across calls") {
  ModuleRegistry registry = dagkit::test::make_idea_registry();
  CHECK(registry.emit_schemas().dump(2) == registry.emit_schemas().dump(2));
}

TEST_CASE("ModuleResult wire round-trip strips reserved keys into fields") {
  Json wire{{"ideas", Json::array({"a", "b"})},
            {"_route", "continue"},
            {"_score", 0.5},
            {"_metadata", Json{{"k", 1}}}};
  ModuleResult result = ModuleResult::from_wire(wire);
  CHECK(result.route == "continue");
  CHECK(result.score == 0.5);
  CHECK(result.outputs.size() == 1);
  CHECK_FALSE(result.outputs.contains("_route"));
  CHECK(result.to_wire() == wire);

  Json fan{{"_routes", Json::array({"w1", "w2", "w3"})}};
  ModuleResult fanned = ModuleResult::from_wire(fan);
  REQUIRE(fanned.routes.has_value());
  CHECK(fanned.routes->size() == 3);
  CHECK(fanned.outputs.empty());
}
