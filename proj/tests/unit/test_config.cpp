#include <doctest.h>

#include "govdec/error.hpp"
#include "support.hpp"

using namespace govdec;

namespace {

std::string appeal_yaml() { return support::read_file(support::domain_path("appeal")); }
std::string workflow_yaml() { return support::read_file(support::workflow_path("appeal")); }

std::string replace(std::string s, const std::string& from, const std::string& to) {
  const auto at = s.find(from);
  REQUIRE(at != std::string::npos);
  return s.replace(at, from.size(), to);
}

std::string config_error_path(const std::function<void()>& f) {
  try {
    f();
  } catch (const ConfigError& e) {
    return e.path();
  }
  return "<none>";
}

}  // namespace

TEST_SUITE("config") {

TEST_CASE("appeal domain loads") {
  const auto d = load_domain(support::domain_path("appeal"));
  CHECK(d.domain_id == "appeal");
  CHECK(d.deliberate_vocabulary == std::vector<std::string>{"OVERTURN", "UPHOLD", "PARTIAL", "REMAND"});
  CHECK(d.knowledge_sources.size() == 4);
  CHECK(d.governance.confidence_floors.at(Primitive::Deliberate) == doctest::Approx(0.7));
  CHECK(d.governance.high_stakes_dispositions == std::set<std::string>{"REMAND", "PARTIAL"});
  CHECK(d.guardrails.size() == 3);
  CHECK(d.pii.fields.at("patient.name") == "NAME");
  CHECK(d.compatibility.at("procedural_defect") == std::set<std::string>{"REMAND"});
}

TEST_CASE("every shipped domain and workflow loads") {
  for (const auto& entry : std::filesystem::directory_iterator(support::kRoot / "configs" / "domains")) {
    CAPTURE(entry.path().string());
    const auto d = load_domain(entry.path());
    CHECK_FALSE(d.deliberate_vocabulary.empty());
  }
  int agentic = 0;
  for (const auto& entry : std::filesystem::directory_iterator(support::kRoot / "configs" / "workflows")) {
    CAPTURE(entry.path().string());
    const auto w = load_workflow(entry.path());
    CHECK(w.constraints.must_end_with == Primitive::Govern);
    agentic += w.mode == ExecutionMode::Agentic;
  }
  CHECK(agentic >= 9);
}

TEST_CASE("workflow mode declares its steps") {
  const auto w = load_workflow(support::workflow_path("appeal_workflow"));
  CHECK(w.mode == ExecutionMode::Workflow);
  REQUIRE(w.declared_steps.size() == 5);
  CHECK(w.declared_steps[2].transition_condition == "confidence >= 0.5");
  CHECK(w.declared_steps.back().primitive == Primitive::Govern);
}

TEST_CASE("domain errors name the offending key") {
  CHECK(config_error_path([] {
          parse_domain(replace(appeal_yaml(), "[OVERTURN, UPHOLD, PARTIAL, REMAND]", "[OVERTURN, GATE]"));
        }) == ".deliberate_vocabulary[1]");
  CHECK(config_error_path([] {
          parse_domain(replace(appeal_yaml(), "[OVERTURN, UPHOLD, PARTIAL, REMAND]", "[]"));
        }) == ".deliberate_vocabulary");
  CHECK(config_error_path([] { parse_domain(replace(appeal_yaml(), "schema_version: 1", "schema_version: 9")); }) ==
        ".schema_version");
  CHECK(config_error_path([] { parse_domain(appeal_yaml() + "\nsurprise: 1\n"); }) == ".surprise");
  CHECK(config_error_path([] { parse_domain("a: [unclosed"); }) == ".");
  CHECK_THROWS_AS(load_domain(support::domain_path("nope")), ConfigError);
}

TEST_CASE("workflow errors") {
  CHECK(config_error_path([] { parse_workflow(replace(workflow_yaml(), "mode: agentic", "mode: freeform")); }) ==
        ".mode");
  CHECK(config_error_path([] { parse_workflow(replace(workflow_yaml(), "max_steps: 24", "max_steps: 3")); }) ==
        ".constraints.max_steps");
  CHECK(config_error_path([] {
          parse_workflow(replace(workflow_yaml(), "challenge, generate, govern]", "challenge, generate]"));
        }) == ".available_primitives");
}

TEST_CASE("case inputs") {
  const auto d = load_domain(support::domain_path("appeal"));
  const auto c = load_case(support::case_path("A001"), &d);
  CHECK(c.case_id == "A001");
  CHECK(c.ground_truth);
  CHECK_FALSE(c.prompt_view.contains(std::string(kGroundTruthKey)));
  CHECK(c.documents.count("clinical_record") == 1);

  json body = c.fields;
  body["patient"].erase("name");
  CHECK_THROWS_AS(parse_case(body, &d), CaseSchemaError);
  CHECK_NOTHROW(parse_case(body));
  CHECK_THROWS_AS(parse_case(json{{"case_id", ""}}), CaseSchemaError);
  CHECK_THROWS_AS(parse_case(json{{"case_id", "x"}, {"documents", {{"a", 1}}}}), CaseSchemaError);
  CHECK_THROWS_AS(load_case(support::case_path("missing"), &d), CaseSchemaError);
}

TEST_CASE("dotted lookups") {
  const json j = {{"a", {{"b", {{"c", 3}}}}}};
  REQUIRE(find_path(j, "a.b.c"));
  CHECK(*find_path(j, "a.b.c") == 3);
  CHECK(find_path(j, "a.x") == nullptr);
}

}
